"""Noise models, seeded sampling, 1/f calibration and Monte-Carlo EPG.

Detunings are angular frequencies (rad/s), times are seconds, amplitude
errors are relative.  Every random draw is addressed by
``(seed, stream, index)`` so realizations are reproducible and independent of
evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import j0

from .sequence import PulseSequence, propagate, propagate_sampled

ONE_OVER_E = float(np.exp(-1.0))

# stream tags keep the draws of different noise components independent
_STREAM_DETUNING = 1
_STREAM_AMPLITUDE = 2
_STREAM_PHASES = 3


def substream(seed: int, stream: int, index) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(stream), int(index)])


# -- models ----------------------------------------------------------------

@dataclass(frozen=True)
class QuasiStaticDetuning:
    """Static detuning per realization, Gaussian with std ``1/t2star`` rad/s."""

    t2star: float

    def __post_init__(self):
        if not self.t2star > 0:
            raise ValueError("t2star must be positive")


@dataclass(frozen=True)
class QuasiStaticAmplitude:
    """Static relative amplitude error per realization, Gaussian with std ``sigma``."""

    sigma: float

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")


@dataclass(frozen=True)
class Dynamical1f:
    """Truncated 1/f detuning ``(A/T2*) sum_n cos(2 pi f_n t + phi_n) / n``.

    ``convention="printed"`` puts the harmonics at ``f_n = n f_c / N`` (so
    ``f_c`` is the top frequency); ``"fundamental"`` uses ``f_n = n f_c``.
    ``amplitude`` and ``cutoff`` are filled in by :func:`calibrate`.
    """

    t2star: float
    t2: float
    n_harmonics: int = 100
    amplitude: float | None = None
    cutoff: float | None = None
    convention: str = "printed"

    def __post_init__(self):
        if not self.t2star > 0:
            raise ValueError("t2star must be positive")
        if not self.t2 >= self.t2star:
            raise ValueError(f"t2 ({self.t2}) must be >= t2star ({self.t2star})")
        if self.n_harmonics < 1:
            raise ValueError("n_harmonics must be >= 1")
        if self.convention not in ("printed", "fundamental"):
            raise ValueError(f"unknown convention {self.convention!r}")

    @property
    def calibrated(self) -> bool:
        return self.amplitude is not None and self.cutoff is not None

    def frequencies(self) -> np.ndarray:
        """Angular frequencies of the harmonics (rad/s)."""
        n = np.arange(1, self.n_harmonics + 1)
        base = self.cutoff / self.n_harmonics if self.convention == "printed" else self.cutoff
        return 2 * np.pi * base * n

    def weights(self) -> np.ndarray:
        """Harmonic amplitudes (rad/s)."""
        n = np.arange(1, self.n_harmonics + 1)
        return self.amplitude / self.t2star / n


@dataclass(frozen=True)
class Systematic:
    """Fixed relative amplitude error ``eps`` and fixed detuning (rad/s)."""

    eps: float = 0.0
    detuning: float = 0.0


@dataclass(frozen=True)
class Composite:
    parts: tuple

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple(self.parts))


NoiseModel = QuasiStaticDetuning | QuasiStaticAmplitude | Dynamical1f | Systematic | Composite


def _flatten(model) -> list:
    if isinstance(model, Composite):
        out = []
        for p in model.parts:
            out.extend(_flatten(p))
        return out
    return [model]


def noiseless() -> Composite:
    return Composite(())


# -- trajectories ------------------------------------------------------------

@dataclass(frozen=True)
class NoiseTrajectory:
    """A batch of detuning trajectories and amplitude offsets.

    ``static`` and ``eps`` have shape ``(B,)``; the dynamical part is
    ``sum_n weights[n] * cos(omegas[n] t + phases[b, n])``.  ``t_end`` is the
    duration the trajectory was requested for.
    """

    t_end: float
    static: np.ndarray
    eps: np.ndarray
    weights: np.ndarray = field(default_factory=lambda: np.zeros(0))
    omegas: np.ndarray = field(default_factory=lambda: np.zeros(0))
    phases: np.ndarray | None = None
    seed: int = 0
    indices: tuple = ()

    @property
    def batch(self) -> int:
        return len(self.static)

    @property
    def is_static(self) -> bool:
        return self.phases is None or len(self.weights) == 0

    def __call__(self, t) -> np.ndarray:
        """Detuning at times ``t`` (shape ``(T,)``) for every member: ``(B, T)``."""
        t = np.atleast_1d(np.asarray(t, float))
        if t.size and (t.min() < 0 or t.max() > self.t_end * (1 + 1e-12) + 1e-300):
            raise ValueError(f"trajectory covers [0, {self.t_end}] s, requested up to {t.max()} s")
        out = np.broadcast_to(self.static[:, None], (self.batch, t.size)).copy()
        if not self.is_static:
            # sum over harmonics in chunks to bound memory
            for lo in range(0, t.size, 4096):
                tt = t[lo:lo + 4096]
                arg = self.omegas[None, :, None] * tt[None, None, :] + self.phases[:, :, None]
                out[:, lo:lo + 4096] += np.einsum("n,bnt->bt", self.weights, np.cos(arg))
        return out

    def bound(self) -> float:
        """Upper bound on ``|delta(t)|`` over the batch."""
        return float(np.max(np.abs(self.static), initial=0.0) + np.sum(np.abs(self.weights)))

    def phase(self, t) -> np.ndarray:
        """Exact accumulated phase ``int_0^t delta`` for every member, ``(B, T)``."""
        t = np.atleast_1d(np.asarray(t, float))
        out = self.static[:, None] * t[None, :]
        if not self.is_static:
            w = self.weights[None, :, None]
            om = self.omegas[None, :, None]
            ph = self.phases[:, :, None]
            x = om * t[None, None, :]
            # (sin(x + ph) - sin(ph)) / om, written to stay finite as om -> 0
            term = w * t[None, None, :] * (np.cos(ph + x / 2) * np.sinc(x / (2 * np.pi)))
            out = out + np.sum(term, axis=1)
        return out

    def sample(self, times) -> tuple[np.ndarray, np.ndarray]:
        """(times, detunings) on an explicit grid."""
        times = np.asarray(times, float)
        return times, self(times)


def sample_noise(model, seed: int, indices, duration: float = 0.0) -> NoiseTrajectory:
    """Draw realizations ``indices`` of ``model``."""
    indices = np.atleast_1d(np.asarray(indices, dtype=np.int64))
    b = len(indices)
    static = np.zeros(b)
    eps = np.zeros(b)
    weights = np.zeros(0)
    omegas = np.zeros(0)
    phases = None
    for part in _flatten(model):
        if isinstance(part, QuasiStaticDetuning):
            static += np.array([substream(seed, _STREAM_DETUNING, i).normal(0.0, 1.0 / part.t2star) for i in indices])
        elif isinstance(part, QuasiStaticAmplitude):
            eps += np.array([substream(seed, _STREAM_AMPLITUDE, i).normal(0.0, part.sigma) for i in indices])
        elif isinstance(part, Systematic):
            static += part.detuning
            eps += part.eps
        elif isinstance(part, Dynamical1f):
            if not part.calibrated:
                raise ValueError("dynamical 1/f model is not calibrated; run calibrate(t2star, t2) first")
            if len(weights):
                raise ValueError("at most one dynamical component per composite model")
            weights = part.weights()
            omegas = part.frequencies()
            phases = np.array([
                substream(seed, _STREAM_PHASES, i).uniform(0.0, 2 * np.pi, part.n_harmonics) for i in indices
            ])
        else:
            raise TypeError(f"unsupported noise component {part!r}")
    return NoiseTrajectory(float(duration), static, eps, weights, omegas, phases, int(seed), tuple(int(i) for i in indices))


def sample_quasistatic(model, seed: int, index: int) -> NoiseTrajectory:
    if any(isinstance(p, Dynamical1f) for p in _flatten(model)):
        raise ValueError("sample_quasistatic needs a quasi-static model")
    return sample_noise(model, seed, [index])


def one_over_f_trajectory(model: Dynamical1f, duration: float, seed: int, index: int) -> NoiseTrajectory:
    if not isinstance(model, Dynamical1f):
        raise TypeError("one_over_f_trajectory needs a Dynamical1f model")
    return sample_noise(model, seed, [index], duration)


# -- Ramsey / echo -----------------------------------------------------------

def _phases_for(kind, traj: NoiseTrajectory, t):
    t = np.atleast_1d(np.asarray(t, float))
    if kind == "ramsey":
        return traj.phase(t)
    if kind == "echo":
        return 2 * traj.phase(t / 2) - traj.phase(t)
    raise ValueError(kind)


def _envelope_mc(kind, traj):
    return lambda t: np.mean(np.cos(_phases_for(kind, traj, t)), axis=0)


def exact_envelope(kind: str, model: Dynamical1f, t) -> np.ndarray:
    """Ensemble-average Ramsey/echo signal of a 1/f model (product of Bessel J0)."""
    t = np.atleast_1d(np.asarray(t, float))
    w = model.weights()[:, None]
    x = model.frequencies()[:, None] * t[None, :]
    if kind == "ramsey":
        r = w * t[None, :] * np.abs(np.sinc(x / (2 * np.pi)))
    elif kind == "echo":
        r = w * t[None, :] * (x / 4) * np.sinc(x / (4 * np.pi)) ** 2
    else:
        raise ValueError(kind)
    return np.prod(j0(r), axis=0)


def decay_time(envelope, t_guess: float, t_max: float | None = None, points_per_decade: int = 24) -> float:
    """First time the envelope drops to 1/e.

    The envelope is scanned on a geometric grid one decade at a time starting
    two decades below ``t_guess`` and the first crossing is refined with
    Brent's method.  Returns ``inf`` if there is none before ``t_max``.
    """
    t_max = t_max if t_max is not None else 1e4 * t_guess
    f = lambda t: float(np.atleast_1d(envelope(t))[0]) - ONE_OVER_E
    lo = 1e-2 * t_guess
    prev_t = None
    while lo < t_max:
        grid = lo * np.logspace(0, 1, points_per_decade + 1)[:-1]
        vals = np.atleast_1d(envelope(grid)) - ONE_OVER_E
        below = np.nonzero(vals < 0)[0]
        if len(below):
            k = below[0]
            a = grid[k - 1] if k > 0 else prev_t
            if a is None:
                return float(grid[0])
            fa, fb = f(a), f(grid[k])
            if fa * fb >= 0:
                # the crossing sits on a grid point to rounding precision
                return float(a if abs(fa) <= abs(fb) else grid[k])
            return float(brentq(f, a, grid[k], xtol=1e-13 * grid[k], rtol=1e-12))
        prev_t = grid[-1]
        lo *= 10
    return float("inf")


def ramsey_time(model, n_realizations: int = 1000, seed: int = 0, method: str = "monte-carlo") -> float:
    return _coherence_time("ramsey", model, n_realizations, seed, method)


def echo_time(model, n_realizations: int = 1000, seed: int = 0, method: str = "monte-carlo") -> float:
    return _coherence_time("echo", model, n_realizations, seed, method)


def _coherence_time(kind, model, n, seed, method):
    t2s = model.t2star
    if method == "exact":
        if not isinstance(model, Dynamical1f):
            raise ValueError("exact envelopes are available for the 1/f model only")
        env = lambda t: exact_envelope(kind, model, t)
    elif method == "monte-carlo":
        traj = sample_noise(model, seed, np.arange(n), duration=np.inf)
        env = _envelope_mc(kind, traj)
    else:
        raise ValueError(f"unknown method {method!r}")
    guess = t2s if kind == "ramsey" else model.t2 if np.isfinite(getattr(model, "t2", np.inf)) else t2s
    return decay_time(env, guess)


# -- calibration -------------------------------------------------------------

@dataclass(frozen=True)
class Calibration:
    amplitude: float
    cutoff: float
    ramsey_time: float
    echo_time: float


def _bracket_root(fn, grid, what):
    """Brent refinement of the first sign change of ``fn`` along ``grid``.

    ``+inf`` (a signal that never decays) is capped so it still counts as a
    positive residual.
    """
    raw = fn
    fn = lambda x: min(raw(x), 1e3)
    prev_x, prev_v = None, None
    diag = []
    for x in grid:
        v = fn(x)
        diag.append(f"{x:.3g}:{v:.3g}")
        if np.isfinite(v) and prev_v is not None and np.isfinite(prev_v) and np.sign(v) != np.sign(prev_v):
            return brentq(fn, prev_x, x, xtol=1e-10, rtol=1e-8)
        prev_x, prev_v = x, v
    raise RuntimeError(f"calibration of {what} did not bracket a root; scan {', '.join(diag)}")


@lru_cache(maxsize=64)
def _calibrate_unit(ratio: float, n_harmonics: int, convention: str, n_realizations: int, seed: int,
                    method: str) -> Calibration:
    """Calibrate with T2* = 1; the result depends only on T2/T2*.

    For every trial cutoff the amplitude is re-solved so that the Ramsey time
    is exactly 1, which leaves a one-dimensional root in ``log f_c`` for the
    echo time.  The echo time falls monotonically from ``inf`` (static noise)
    towards the Ramsey time (motional narrowing) as ``f_c`` grows.
    """
    def model(a, fc):
        return Dynamical1f(1.0, max(ratio, 1.0), n_harmonics, a, fc, convention)

    def times(kind, a, fc):
        return _coherence_time(kind, model(a, fc), n_realizations, seed, method)

    @lru_cache(maxsize=None)
    def amplitude(fc):
        return _bracket_root(lambda x: np.log(times("ramsey", np.exp(x), fc)),
                             np.linspace(np.log(0.05), np.log(1e4), 41), "A")

    if not np.isfinite(ratio):
        a = float(np.exp(amplitude(0.0)))
        return Calibration(a, 0.0, times("ramsey", a, 0.0), float("inf"))
    lo = np.log(min(1e-4, 1e-2 / ratio**2))  # echo time ~ (f_c T2*)**-1/2 at small f_c
    log_fc = _bracket_root(
        lambda lf: np.log(times("echo", np.exp(amplitude(np.exp(lf))), np.exp(lf)) / ratio),
        np.linspace(lo, np.log(1e4), 25), "f_c")
    fc = float(np.exp(log_fc))
    a = float(np.exp(amplitude(fc)))
    return Calibration(a, fc, times("ramsey", a, fc), times("echo", a, fc))


def calibrate(t2star: float, t2: float, n_harmonics: int = 100, convention: str = "printed",
              n_realizations: int = 1000, seed: int = 0, method: str = "exact") -> Dynamical1f:
    """Fix ``A`` (Ramsey 1/e time = T2*) and ``f_c`` (echo 1/e time = T2).

    ``method="exact"`` uses the ensemble-averaged signals (the limit of
    infinitely many realizations); ``method="monte-carlo"`` simulates
    ``n_realizations`` trajectories with common random phases so every solve
    is deterministic.  ``t2 = inf`` returns the static limit ``f_c = 0``.
    """
    if not t2star > 0:
        raise ValueError("t2star must be positive")
    if not t2 >= t2star:
        raise ValueError(f"t2 ({t2}) must be >= t2star ({t2star})")
    cal = _calibrate_unit(float(t2 / t2star), n_harmonics, convention, n_realizations, seed, method)
    fc = cal.cutoff / t2star
    t2_model = t2 if np.isfinite(t2) else float("inf")
    return Dynamical1f(t2star, t2_model, n_harmonics, cal.amplitude, fc, convention)


# -- Monte-Carlo EPG --------------------------------------------------------

@dataclass(frozen=True)
class MonteCarloResult:
    mean_epg: float
    stderr: float
    n_realizations: int
    seed: int
    per_realization: np.ndarray = field(repr=False, compare=False, default=None)


@dataclass(frozen=True)
class Case:
    """A sequence, the detuning offsets of the subspaces it acts on, and the
    target on each subspace."""

    seq: PulseSequence
    offsets: tuple
    targets: tuple


def single_qubit_case(seq: PulseSequence, target) -> Case:
    return Case(seq, (0.0,), (np.asarray(target, complex),))


def conditional_case(seq: PulseSequence, spec) -> Case:
    return Case(seq, (0.0, spec.delta), (spec.resonant_target, spec.detuned_target))


def _case_sq_errors(case: Case, traj: NoiseTrajectory, step_budget: float, eps_scale: np.ndarray | None = None):
    """Mean squared entry error per realization (averaged over subspaces)."""
    acc = np.zeros(traj.batch)
    for off, target in zip(case.offsets, case.targets):
        if traj.is_static:
            u = propagate(case.seq, off + traj.static, traj.eps)
        else:
            u = propagate_sampled(case.seq, traj, traj.eps, step_budget=step_budget,
                                  detuning_offset=off, detuning_bound=traj.bound())
        acc += np.mean(np.abs(u - target) ** 2, axis=(-2, -1))
    return acc / len(case.offsets)


def _bootstrap_se(values: np.ndarray, seed: int, n_boot: int = 400) -> float:
    rng = np.random.default_rng([int(seed), 0xB007])
    idx = rng.integers(0, len(values), size=(n_boot, len(values)))
    boots = np.sqrt(np.mean(values[idx], axis=1))
    return float(np.std(boots, ddof=1))


def monte_carlo_epg(cases, model, n_realizations: int = 50, seed: int = 0,
                    step_budget: float = 0.01, batch: int = 64) -> MonteCarloResult:
    """Root of the mean squared entry error over realizations, cases and entries.

    ``cases`` is a :class:`Case` or a list of them (e.g. a compiled gate set);
    every case of realization ``i`` sees its own draw ``(seed, i * n_cases + k)``.
    """
    if n_realizations < 2:
        raise ValueError("n_realizations must be >= 2")
    if isinstance(cases, Case):
        cases = [cases]
    cases = list(cases)
    k = len(cases)
    sq = np.zeros(n_realizations)
    for j, case in enumerate(cases):
        for lo in range(0, n_realizations, batch):
            idx = np.arange(lo, min(lo + batch, n_realizations))
            traj = sample_noise(model, seed, idx * k + j, duration=case.seq.duration)
            sq[idx] += _case_sq_errors(case, traj, step_budget)
    sq /= k
    mean = float(np.sqrt(np.mean(sq)))
    return MonteCarloResult(mean, _bootstrap_se(sq, seed), n_realizations, int(seed), sq)


def t1_survival_factor(duration: float, t1: float) -> float:
    """``exp(-duration / T1)``."""
    if not t1 > 0:
        raise ValueError("T1 must be positive")
    if duration < 0:
        raise ValueError("duration must be non-negative")
    return float(np.exp(-duration / t1))
