"""Randomized-benchmarking simulation.

Single-qubit Cliffords are compiled as ``Z(phi1) X(x) Z(phi3)`` with the Z
rotations implemented as drive-frame updates, so only the X rotation costs
time.  The two-qubit protocol applies a conditional gate ``m`` times followed
by ``m`` applications of its inverse and records survival of the initial
state on each control subspace.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, asdict
from functools import lru_cache

import numpy as np
from scipy.optimize import curve_fit

from .gates import (
    build_conditional,
    conditional_spec,
    rect_gate,
    seven_pulse,
    u5a_pi,
)
from .noise import sample_noise, substream, t1_survival_factor
from .sequence import PulseSequence, propagate, propagate_sampled
from .unitary import I2, RotationSpec, chain, dagger, pauli_components, rotation_unitary

HALF_PI = np.pi / 2
_RZ_STEPS = (0.0, HALF_PI, np.pi, 3 * HALF_PI)
_X_STEPS = (0.0, HALF_PI, np.pi, 3 * HALF_PI)


def _rz(a):
    return rotation_unitary(RotationSpec(a, 0.0, np.pi / 2))


def _rx(a):
    return rotation_unitary(RotationSpec(a, 0.0, 0.0))


def _same_up_to_phase(u, v, tol=1e-9) -> bool:
    return abs(abs(np.trace(dagger(u) @ v)) - 2) < tol


@dataclass(frozen=True)
class CliffordElement:
    index: int
    unitary: np.ndarray = field(repr=False)
    phi1: float
    x_angle: float
    phi3: float

    def recompose(self) -> np.ndarray:
        return _rz(self.phi1) @ _rx(self.x_angle) @ _rz(self.phi3)


@lru_cache(maxsize=1)
def clifford_group() -> tuple[CliffordElement, ...]:
    """The 24 single-qubit Cliffords, by closure over X/2, Y/2 and Z/2."""
    gens = [_rx(HALF_PI), rotation_unitary(RotationSpec(HALF_PI, HALF_PI, 0.0)), _rz(HALF_PI)]
    found = [I2.copy()]
    frontier = [I2.copy()]
    while frontier:
        nxt = []
        for u in frontier:
            for g in gens:
                v = g @ u
                if not any(_same_up_to_phase(v, w) for w in found):
                    found.append(v)
                    nxt.append(v)
        frontier = nxt
    if len(found) != 24:
        raise RuntimeError(f"Clifford closure produced {len(found)} elements, expected 24")
    elems = []
    for k, u in enumerate(found):
        for x in _X_STEPS:
            hit = next(((a, c) for a, c in itertools.product(_RZ_STEPS, _RZ_STEPS)
                        if _same_up_to_phase(_rz(a) @ _rx(x) @ _rz(c), u)), None)
            if hit is not None:
                elems.append(CliffordElement(k, u, hit[0], x, hit[1]))
                break
        else:
            raise RuntimeError(f"no ZXZ decomposition for Clifford {k}")
    return tuple(elems)


@lru_cache(maxsize=1)
def multiplication_table() -> np.ndarray:
    """``table[a, b]`` is the index of ``C_a @ C_b``."""
    group = clifford_group()
    n = len(group)
    table = np.zeros((n, n), dtype=int)
    for a, b in itertools.product(range(n), range(n)):
        prod = group[a].unitary @ group[b].unitary
        table[a, b] = next(k for k, c in enumerate(group) if _same_up_to_phase(prod, c.unitary))
    return table


def inverse_index(indices) -> int:
    """Index of ``(C_{i_m} ... C_{i_1})^-1`` for a sequence applied in order."""
    table = multiplication_table()
    total = 0  # identity is element 0
    for i in indices:
        total = table[i, total]
    return int(np.nonzero(table[:, total] == 0)[0][0])


# -- gate sets -----------------------------------------------------------------

def _effective_phase(seq: PulseSequence) -> float:
    c = pauli_components(propagate(seq))
    k = int(np.argmax(np.abs(c)))
    c = c * np.exp(-1j * np.angle(c[k]))
    return float(np.arctan2(c[2].real, c[1].real))


@dataclass(frozen=True)
class GateSet:
    """Physical X rotations by pi/2 and pi, each about the +x axis of the
    current frame; ``offsets`` re-align composites whose net axis is not x."""

    name: str
    half: PulseSequence
    full: PulseSequence
    half_offset: float = 0.0
    full_offset: float = 0.0

    def x_rotation(self, angle: float, phase: float) -> PulseSequence:
        a = float(np.mod(angle, 2 * np.pi))
        if np.isclose(a, 0.0):
            return PulseSequence((), "idle")
        if np.isclose(a, np.pi):
            return self.full.shifted(phase - self.full_offset)
        if np.isclose(a, HALF_PI):
            return self.half.shifted(phase - self.half_offset)
        if np.isclose(a, 3 * HALF_PI):
            return self.half.shifted(phase + np.pi - self.half_offset)
        raise ValueError(f"gate set has no X rotation by {angle}")


def make_gateset(name: str, pi_time: float = 13e-6) -> GateSet:
    rabi = np.pi / pi_time
    if name == "unprotected":
        return GateSet(name, rect_gate(HALF_PI, 0.0, rabi), rect_gate(np.pi, 0.0, rabi))
    if name == "pudding":
        half = seven_pulse(HALF_PI, rabi)
        full = u5a_pi(rabi)
        return GateSet(name, half, full, _effective_phase(half), _effective_phase(full))
    raise ValueError(f"unknown gate set {name!r} (expected unprotected or pudding)")


def compile_clifford(elem: CliffordElement, gateset: GateSet, frame: float = 0.0):
    """Pulse sequence for ``elem`` given the incoming frame phase.

    Returns ``(sequence, new_frame)``; the ideal propagator of the sequence
    satisfies ``Rz(new_frame) U_seq = C Rz(frame)`` up to global phase.
    """
    pulse = gateset.x_rotation(elem.x_angle, -(elem.phi3 + frame))
    return pulse, float(np.mod(elem.phi1 + elem.phi3 + frame, 2 * np.pi))


def compile_sequence(indices, gateset: GateSet):
    """Concatenate compiled Cliffords; returns ``(per_gate_sequences, final_frame)``."""
    group = clifford_group()
    frame = 0.0
    out = []
    for i in indices:
        seq, frame = compile_clifford(group[i], gateset, frame)
        out.append(seq)
    return out, frame


def mean_gate_time(gateset: GateSet) -> float:
    return float(np.mean([compile_clifford(c, gateset)[0].duration for c in clifford_group()]))


# -- configuration and curves -----------------------------------------------

def log_lengths(max_length: int, count: int) -> list[int]:
    vals = np.unique(np.round(np.geomspace(1, max_length, count)).astype(int))
    return [int(v) for v in vals]


@dataclass(frozen=True)
class RBConfig:
    lengths: tuple
    trials: int = 200
    gateset: str = "unprotected"
    noise: object = None
    seed: int = 0
    spam_a: float = 1.0
    spam_b: float = 0.0
    t1: float | None = None
    pi_time: float = 13e-6
    depolarizing_p: float | None = None
    inverse: str = "single"
    step_budget: float = 0.01
    d: int = 2

    def __post_init__(self):
        lengths = tuple(int(m) for m in self.lengths)
        if not lengths or any(b <= a for a, b in zip(lengths, lengths[1:])) or lengths[0] < 0:
            raise ValueError("lengths must be non-negative and strictly increasing")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.inverse not in ("single", "mirror"):
            raise ValueError("inverse must be 'single' or 'mirror'")
        object.__setattr__(self, "lengths", lengths)


@dataclass(frozen=True)
class DecayCurve:
    m: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_trials: np.ndarray

    def to_csv(self) -> str:
        lines = ["m,mean_survival,stderr,n_trials"]
        for m, s, e, n in zip(self.m, self.mean, self.stderr, self.n_trials):
            lines.append(f"{int(m)},{s:.17e},{e:.17e},{int(n)}")
        return "\n".join(lines) + "\n"


def _curve(lengths, survivals) -> DecayCurve:
    s = [np.asarray(v, float) for v in survivals]
    n = np.array([len(v) for v in s])
    mean = np.array([v.mean() for v in s])
    se = np.array([v.std(ddof=1) / np.sqrt(len(v)) if len(v) > 1 else 0.0 for v in s])
    return DecayCurve(np.asarray(lengths), np.clip(mean, 0.0, 1.0), se, n)


def _noisy_product(seqs, noise, seed, counter, step_budget, offset=0.0):
    """Propagator of the concatenated ``seqs`` under one noise realization."""
    full = PulseSequence(tuple(s for q in seqs for s in q.segments))
    if noise is None:
        return propagate(full, offset)
    traj = sample_noise(noise, seed, [counter], duration=full.duration)
    if traj.is_static:
        return propagate(full, offset + traj.static[0], traj.eps[0])
    return propagate_sampled(full, traj, traj.eps, step_budget=step_budget,
                             detuning_offset=offset, detuning_bound=traj.bound())[0]


def rb_run(config: RBConfig) -> DecayCurve:
    """Single-qubit RB: ``m`` random Cliffords plus the inverse, survival of |0>.

    Each sequence sees one fresh noise realization.  With
    ``depolarizing_p`` set, the compiled ideal gates are combined with an
    exact depolarizing channel after every Clifford instead of sampled noise.
    ``inverse="mirror"`` appends the inverses of the ``m`` gates in reverse
    order instead of a single recovery Clifford.
    """
    gs = make_gateset(config.gateset, config.pi_time)
    n_group = 24
    ideal = {}
    survivals = []
    for li, m in enumerate(config.lengths):
        vals = np.empty(config.trials)
        for trial in range(config.trials):
            rng = substream(config.seed, 100 + li, trial)
            idx = [int(i) for i in rng.integers(0, n_group, size=m)]
            if config.inverse == "single":
                idx = idx + [inverse_index(idx)]
            else:
                table = multiplication_table()
                inv = [int(np.nonzero(table[:, i] == 0)[0][0]) for i in reversed(idx)]
                idx = idx + inv
            seqs, _ = compile_sequence(idx, gs)
            duration = sum(s.duration for s in seqs)
            counter = li * config.trials + trial
            if config.depolarizing_p is not None:
                rho = np.array([[1, 0], [0, 0]], complex)
                p = config.depolarizing_p
                for s in seqs:
                    key = tuple((round(g.phase, 9), round(g.duration, 15)) for g in s)
                    u = ideal.get(key)
                    if u is None:
                        u = ideal[key] = propagate(s) if len(s) else I2
                    rho = u @ rho @ dagger(u)
                    rho = p * rho + (1 - p) * I2 / 2
                surv = float(np.real(rho[0, 0]))
            else:
                u = _noisy_product(seqs, config.noise, config.seed, counter, config.step_budget)
                surv = float(abs(u[0, 0]) ** 2)
            if config.t1 is not None and np.isfinite(config.t1):
                surv *= t1_survival_factor(duration, config.t1)
            vals[trial] = config.spam_b + config.spam_a * surv
        survivals.append(vals)
    return _curve(config.lengths, survivals)


def reference_idle_run(config: RBConfig) -> DecayCurve:
    """Idle for the compiled duration of each random sequence; only the T1
    factor (and SPAM) acts."""
    if config.t1 is None:
        raise ValueError("reference_idle_run needs t1")
    gs = make_gateset(config.gateset, config.pi_time)
    survivals = []
    for li, m in enumerate(config.lengths):
        vals = np.empty(config.trials)
        for trial in range(config.trials):
            rng = substream(config.seed, 100 + li, trial)
            idx = [int(i) for i in rng.integers(0, 24, size=m)]
            if config.inverse == "single":
                idx = idx + [inverse_index(idx)]
            else:
                table = multiplication_table()
                idx = idx + [int(np.nonzero(table[:, i] == 0)[0][0]) for i in reversed(idx)]
            seqs, _ = compile_sequence(idx, gs)
            duration = sum(s.duration for s in seqs)
            f = t1_survival_factor(duration, config.t1) if np.isfinite(config.t1) else 1.0
            vals[trial] = config.spam_b + config.spam_a * f
        survivals.append(vals)
    return _curve(config.lengths, survivals)


# -- two-qubit repeated-gate protocol -----------------------------------------

@dataclass(frozen=True)
class RepeatConfig:
    lengths: tuple
    gate: str = "walsh1"
    delta: float = 2 * np.pi * 3e6
    trials: int = 50
    noise: object = None
    seed: int = 0
    step_budget: float = 0.01
    spam_a: float = 1.0
    spam_b: float = 0.0

    def __post_init__(self):
        lengths = tuple(int(m) for m in self.lengths)
        if not lengths or any(b <= a for a, b in zip(lengths, lengths[1:])) or lengths[0] < 0:
            raise ValueError("lengths must be non-negative and strictly increasing")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        object.__setattr__(self, "lengths", lengths)


@dataclass(frozen=True)
class RepeatResult:
    curve: DecayCurve
    resonant: DecayCurve
    detuned: DecayCurve


def _gate_unitaries(seq: PulseSequence, noise, seed: int, counters: np.ndarray, offset: float, step_budget: float):
    """One propagator per counter (each an independent noise draw)."""
    if noise is None:
        u = propagate(seq, offset)
        return np.broadcast_to(u, (len(counters), 2, 2))
    traj = sample_noise(noise, seed, counters, duration=seq.duration)
    if traj.is_static:
        return propagate(seq, offset + traj.static, traj.eps)
    return propagate_sampled(seq, traj, traj.eps, step_budget=step_budget,
                             detuning_offset=offset, detuning_bound=traj.bound())


def two_qubit_repeat_run(config: RepeatConfig) -> RepeatResult:
    """``m`` gates then ``m`` inverses, survival of |0> on both subspaces.

    Every gate application draws its own noise realization.  The ZAP-family
    gates are self-inverse (pi rotation / identity), so the inverse is the
    same pulse sequence.  The combined curve averages the two subspaces.
    """
    seq = build_conditional(config.gate, config.delta)
    spec = conditional_spec(config.gate, config.delta, seq)
    n_max = 2 * max(config.lengths)
    per_sub = []
    for si, offset in enumerate((0.0, config.delta)):
        survivals = []
        for trial in range(config.trials):
            base = ((si * config.trials) + trial) * n_max
            us = _gate_unitaries(seq, config.noise, config.seed, base + np.arange(n_max), offset, config.step_budget)
            vals = []
            for m in config.lengths:
                u = chain(np.asarray(us[: 2 * m])) if m > 0 else I2
                vals.append(config.spam_b + config.spam_a * float(abs(u[0, 0]) ** 2))
            survivals.append(vals)
        arr = np.array(survivals)
        per_sub.append(_curve(config.lengths, arr.T))
    mean = (per_sub[0].mean + per_sub[1].mean) / 2
    se = np.sqrt(per_sub[0].stderr ** 2 + per_sub[1].stderr ** 2) / 2
    combined = DecayCurve(per_sub[0].m, mean, se, per_sub[0].n_trials + per_sub[1].n_trials)
    return RepeatResult(combined, per_sub[0], per_sub[1])


# -- fitting -------------------------------------------------------------------

@dataclass(frozen=True)
class DecayFit:
    form: str
    A: float
    B: float
    C: float
    p: float
    covariance: np.ndarray
    residual_norm: float
    epg: float | None
    epg_err: float | None
    repg: float | None
    epg_upper: float | None
    flags: tuple

    def to_dict(self) -> dict:
        return {
            "form": self.form,
            "A": self.A, "B": self.B, "C": self.C, "p": self.p,
            "epg": self.epg, "epg_err": self.epg_err, "repg": self.repg,
            "repg_d4": None if self.repg is None else 0.75 * (1 - self.p),
            "epg_upper": self.epg_upper,
            "covariance": np.asarray(self.covariance).tolist(),
            "flags": list(self.flags),
        }


def epg_from_b(b: float) -> float:
    """``(1 - exp(-B)) / 2``."""
    return float(-np.expm1(-b) / 2)


def repg(p: float, d: int = 2) -> float:
    return (d - 1) / d * (1 - p)


def _initial_guess(m, y):
    order = np.argsort(m)
    m, y = m[order], y[order]
    n_tail = max(1, int(np.ceil(0.1 * len(m))))
    c0 = float(np.mean(y[-n_tail:]))
    a0 = float(y[0] - c0)
    resid = y - c0
    mask = resid * np.sign(a0 if a0 != 0 else 1.0) > 0
    if a0 != 0 and np.count_nonzero(mask) >= 2:
        slope = np.polyfit(m[mask], np.log(np.abs(resid[mask])), 1)[0]
        b0 = max(-slope, 1e-12)
    else:
        b0 = 1.0 / max(np.ptp(m), 1.0)
    if not np.isfinite(b0):
        b0 = 1.0 / max(np.ptp(m), 1.0)
    return a0, b0, c0


def fit_decay(curve: DecayCurve, form: str = "exp") -> DecayFit:
    """Least-squares fit of ``A exp(-B m) + C`` (``form="exp"``) or
    ``A p**m + B`` (``form="survival-p"``).

    Both forms are fitted through the same exponential model and reported
    with ``p = exp(-B)``; the covariance is that of (A, B, C) for ``exp`` and
    of (A, p, B) for ``survival-p``.  When the curve is flat the decay is
    unresolved: ``epg`` is ``None`` and ``epg_upper`` bounds it from the
    spread of the data.
    """
    if form not in ("exp", "survival-p"):
        raise ValueError(f"unknown fit form {form!r}")
    m = np.asarray(curve.m, float)
    y = np.asarray(curve.mean, float)
    if len(np.unique(m)) < 3:
        raise ValueError("need at least 3 distinct lengths")
    se = np.asarray(curve.stderr, float)
    sigma = se if np.all(se > 0) else None
    flags = []
    span = np.ptp(y)
    noise_floor = float(np.max(se)) if se.size else 0.0
    if span <= max(2 * noise_floor, 1e-12):
        flags.append("fit-degenerate")
        # survival never fell by more than the spread: bound B from the drop
        drop = max(span, 2 * noise_floor, 1e-15)
        b_upper = drop / max(m.max() - m.min(), 1.0)
        return DecayFit(form, float(y[0] - y[-1]), 0.0, float(y[-1]), 1.0, np.full((3, 3), np.nan), 0.0,
                        None, None, None, epg_from_b(b_upper), tuple(flags))

    a0, b0, c0 = _initial_guess(m, y)
    model = lambda x, a, b, c: a * np.exp(-b * x) + c
    try:
        popt, pcov = curve_fit(model, m, y, p0=(a0, b0, c0), sigma=sigma, absolute_sigma=sigma is not None,
                               maxfev=20000)
    except RuntimeError:
        flags.append("fit-failed")
        return DecayFit(form, a0, b0, c0, float(np.exp(-b0)), np.full((3, 3), np.nan), float("nan"),
                        None, None, None, None, tuple(flags))
    a, b, c = (float(v) for v in popt)
    resid = float(np.linalg.norm(model(m, *popt) - y))
    p = float(np.exp(-b))
    b_err = float(np.sqrt(pcov[1, 1])) if np.isfinite(pcov[1, 1]) else float("inf")
    if form == "survival-p":
        jac = np.diag([1.0, -p, 1.0])
        cov = jac @ pcov @ jac.T
    else:
        cov = pcov
    resolved = b > 0 and b_err <= abs(b)
    if not resolved:
        flags.append("decay-unresolved")
        return DecayFit(form, a, b, c, p, cov, resid, None, None, None,
                        epg_from_b(max(b, 0.0) + b_err), tuple(flags))
    epg = epg_from_b(b)
    epg_err = float(np.exp(-b) / 2 * b_err)
    return DecayFit(form, a, b, c, p, cov, resid, epg, epg_err, repg(p), None, tuple(flags))


@dataclass(frozen=True)
class NetEPG:
    value: float
    uncertainty: float
    upper_bound: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def net_epg(gates, reference) -> NetEPG:
    """Difference of two EPGs with uncertainties added in quadrature.

    Arguments are :class:`DecayFit` objects or ``(value, uncertainty)``
    pairs.  A negative difference is reported as the upper bound
    ``value + uncertainty``.
    """
    def pair(x):
        if isinstance(x, DecayFit):
            if x.epg is None:
                raise ValueError("fit has no resolved EPG")
            return x.epg, x.epg_err
        return float(x[0]), float(x[1])

    g, ug = pair(gates)
    r, ur = pair(reference)
    value = g - r
    unc = float(np.hypot(ug, ur))
    upper = value + unc if value < 0 else None
    return NetEPG(value, unc, upper)
