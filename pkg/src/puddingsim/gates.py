"""Constructors for every gate family and evaluation of conditional gates.

A conditional gate drives one target transition while the control qubit
shifts that transition by ``delta``.  Both control states see the same drive,
so the gate is simulated as two independent two-level problems:

* the *resonant* subspace, at detuning ``0`` from the reference transition;
* the *detuned* subspace, at detuning ``delta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sequence import PulseSegment, PulseSequence, _rz, propagate
from .solver import seven_pulse_params, solve_augmenting, walsh3_params
from .unitary import (
    I2,
    RotationSpec,
    ErrorPair,
    frobenius_epg,
    pauli_components,
    phase_aligned_epg,
    propagate_constant,
    rotation_unitary,
)

U5A_PHASES = (0.0, 5 * np.pi / 6, np.pi / 3, 5 * np.pi / 6, 0.0)


def rect_gate(angle: float, phase: float, rabi: float) -> PulseSequence:
    """Single square pulse of rotation ``angle`` about the equatorial axis ``phase``."""
    if rabi <= 0:
        raise ValueError(f"rabi must be positive, got {rabi}")
    if angle < 0:
        angle, phase = -angle, phase + np.pi
    return PulseSequence((PulseSegment(rabi, phase, angle / rabi),), label="rect")


def composite_pi(phases, rabi: float, label: str = "composite") -> PulseSequence:
    if rabi <= 0:
        raise ValueError(f"rabi must be positive, got {rabi}")
    return PulseSequence(tuple(PulseSegment(rabi, p, np.pi / rabi) for p in phases), label=label)


def u5a_pi(rabi: float, phase: float = 0.0) -> PulseSequence:
    """Five pi pulses with phases {0, 5pi/6, pi/3, 5pi/6, 0} (plus ``phase``)."""
    return composite_pi([p + phase for p in U5A_PHASES], rabi, label="u5a")


def seven_pulse(alpha: float, rabi: float, phase: float = 0.0, form: str = "corrected") -> PulseSequence:
    """Arbitrary-angle composite ``beta pi pi pi pi pi beta`` rotating by ``alpha``.

    At ``alpha = pi`` the end pulses vanish and only the five pi pulses are
    emitted.
    """
    if rabi <= 0:
        raise ValueError(f"rabi must be positive, got {rabi}")
    p = seven_pulse_params(alpha, form=form)
    segs = [PulseSegment(rabi, ph + phase, ang / rabi) for ph, ang in zip(p.phases, p.angles) if ang > 0]
    return PulseSequence(tuple(segs), label=f"seven-pulse({alpha:.6g})")


def walsh1_zap(delta: float) -> PulseSequence:
    """``+-`` zero-area pulse: identity on resonance, pi rotation at ``delta``."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    t = np.pi / (np.sqrt(2) * delta)
    return PulseSequence((PulseSegment(delta, 0.0, t), PulseSegment(delta, np.pi, t)), label="walsh1")


def _walsh3_segments(delta: float, theta: float):
    w = walsh3_params(theta)
    rabi = w.omega_over_delta * delta
    t = w.alpha_tilde / (delta * np.hypot(1.0, w.omega_over_delta))
    return PulseSegment(rabi, 0.0, t), PulseSegment(rabi, np.pi, t)


def walsh3_zap(delta: float, theta: float = np.pi) -> PulseSequence:
    """Time-symmetric ``ABBA`` zero-area pulse rotating the detuned transition by ``theta``."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    a, b = _walsh3_segments(delta, theta)
    return PulseSequence((a, b, b, a), label="walsh3")


def pzap(delta: float, branch: str = "condition-1", sign: int = 1) -> PulseSequence:
    """Protected zero-area pulse ``ACBDDBCA``.

    ``A``/``B`` form a Walsh-3 pi pulse; ``C`` and ``D = -C`` are 2pi pulses
    on the detuned transition.  ``sign`` is the sign of Omega_C relative to
    Omega_A (fixed by ``p`` on the condition-2 branches).
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    sol = solve_augmenting(branch, sign=sign)
    a, b = _walsh3_segments(delta, np.pi)
    rabi_c = sol.omega_ratio * delta
    t_c = sol.duration_c / delta
    c = PulseSegment(sol.sign * rabi_c, 0.0, t_c)
    d = PulseSegment(-sol.sign * rabi_c, 0.0, t_c)
    return PulseSequence((a, c, b, d, d, b, c, a), label=f"pzap[{branch}]")


def pudding(delta: float, backbone=U5A_PHASES, branch: str = "condition-1", sign: int = 1) -> PulseSequence:
    """P-ZAPs embedded in a composite-pi phase backbone (default U5a)."""
    unit = pzap(delta, branch, sign)
    segs = []
    for phi in backbone:
        segs.extend(unit.shifted(phi).segments)
    return PulseSequence(tuple(segs), label="pudding")


def pi_2pi_gate(delta: float) -> PulseSequence:
    """Square pulse that is pi on resonance and 2pi on the detuned transition."""
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    rabi = delta / np.sqrt(3)
    return PulseSequence((PulseSegment(rabi, 0.0, np.sqrt(3) * np.pi / delta),), label="pi-2pi")


def escong_weak(delta: float, rabi: float) -> PulseSequence:
    """Weak-drive selective pi pulse (``rabi << delta``)."""
    seq = rect_gate(np.pi, 0.0, rabi)
    return PulseSequence(seq.segments, label="escong-weak")


def escong_strong(delta: float, rabi: float) -> PulseSequence:
    """Two pi/2 pulses at carrier ``delta/2``, phases 0 and pi/2, centres ``pi/delta`` apart."""
    if delta <= 0 or rabi <= 0:
        raise ValueError("delta and rabi must be positive")
    tau = np.pi / (2 * rabi)
    gap = np.pi / delta - tau
    if gap < 0:
        raise ValueError(f"pulses overlap: pi/delta={np.pi / delta:.3g} s < pulse length {tau:.3g} s")
    off = delta / 2
    return PulseSequence(
        (
            PulseSegment(rabi, 0.0, tau, off),
            PulseSegment(0.0, 0.0, gap, off),
            PulseSegment(rabi, np.pi / 2, tau, off),
        ),
        label="escong-strong",
    )


# -- conditional-gate specifications ---------------------------------------

@dataclass(frozen=True)
class ConditionalGateSpec:
    delta: float
    resonant_target: np.ndarray
    detuned_target: np.ndarray

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        for name in ("resonant_target", "detuned_target"):
            u = np.asarray(getattr(self, name), complex)
            if u.shape != (2, 2) or not np.allclose(u.conj().T @ u, I2, atol=1e-9):
                raise ValueError(f"{name} is not a 2x2 unitary")
            object.__setattr__(self, name, u)


def _snap_pi(u: np.ndarray) -> np.ndarray:
    """The equatorial pi rotation closest to ``u``, with the SU(2) sign of ``u``."""
    c = pauli_components(u)
    k = int(np.argmax(np.abs(c)))
    c = c * np.exp(-1j * np.angle(c[k]))
    target = rotation_unitary(RotationSpec(np.pi, float(np.arctan2(c[2].real, c[1].real)), 0.0))
    if np.real(np.trace(target.conj().T @ u)) < 0:
        target = -target
    return target


def _hard_pulse_limit(seq: PulseSequence, detuning: float) -> np.ndarray:
    """Propagator with every driven segment collapsed to an instantaneous
    rotation at its centre; free evolution fills the rest of the timeline."""
    u = I2.copy()
    t = 0.0

    def free(u, t, dt, off):
        if dt <= 0:
            return u
        f = propagate_constant(0.0, 0.0, dt, detuning - off)
        return _rz(off * (t + dt)) @ f @ _rz(-off * t) @ u

    for s in seq:
        if s.amplitude == 0:
            u = free(u, t, s.duration, s.carrier_offset)
        else:
            half = s.duration / 2
            u = free(u, t, half, s.carrier_offset)
            tc = t + half
            kick = propagate_constant(1.0, s.phase, s.area, 0.0)
            u = _rz(s.carrier_offset * tc) @ kick @ _rz(-s.carrier_offset * tc) @ u
            u = free(u, tc, half, s.carrier_offset)
        t += s.duration
    return u


def conditional_spec(family: str, delta: float, seq: PulseSequence | None = None) -> ConditionalGateSpec:
    """Ideal targets of a named conditional-gate family.

    ZAP families (``walsh1``, ``walsh3``, ``pzap``, ``pudding``) target the
    identity on resonance and an equatorial pi rotation on the detuned
    transition; ``pi-2pi`` targets a pi rotation and ``-I``; the weak gate
    targets a pi rotation and free precession; the strong gate targets its
    hard-pulse limit.
    """
    if family in ("walsh1", "walsh3", "pzap", "pudding"):
        if seq is None:
            seq = build_conditional(family, delta)
        return ConditionalGateSpec(delta, I2, _snap_pi(propagate(seq, delta)))
    if family == "pi-2pi":
        return ConditionalGateSpec(delta, rotation_unitary(RotationSpec(np.pi, 0.0, 0.0)), -I2)
    if family == "escong-weak":
        if seq is None:
            raise ValueError("escong-weak needs the sequence (its duration sets the free precession)")
        return ConditionalGateSpec(
            delta, rotation_unitary(RotationSpec(np.pi, 0.0, 0.0)), propagate_constant(0.0, 0.0, seq.duration, delta)
        )
    if family == "escong-strong":
        if seq is None:
            raise ValueError("escong-strong needs the sequence")
        return ConditionalGateSpec(delta, _hard_pulse_limit(seq, 0.0), _hard_pulse_limit(seq, delta))
    raise ValueError(f"unknown conditional gate family {family!r}")


CONDITIONAL_FAMILIES = ("walsh1", "walsh3", "pzap", "pudding", "pi-2pi")


def build_conditional(family: str, delta: float, **kw) -> PulseSequence:
    if family == "walsh1":
        return walsh1_zap(delta)
    if family == "walsh3":
        return walsh3_zap(delta, kw.get("theta", np.pi))
    if family == "pzap":
        return pzap(delta, kw.get("branch", "condition-1"), kw.get("sign", 1))
    if family == "pudding":
        return pudding(delta, kw.get("backbone", U5A_PHASES), kw.get("branch", "condition-1"), kw.get("sign", 1))
    if family == "pi-2pi":
        return pi_2pi_gate(delta)
    raise ValueError(f"unknown conditional gate family {family!r}")


def epg_metric(name: str):
    if name == "raw":
        return frobenius_epg
    if name == "aligned":
        return phase_aligned_epg
    raise ValueError(f"unknown metric {name!r} (expected raw or aligned)")


def evaluate_conditional(seq: PulseSequence, spec: ConditionalGateSpec, err: ErrorPair | None = None,
                         metric: str = "raw"):
    """EPG on the resonant and detuned subspaces.

    ``err.eta`` is a detuning error in units of ``spec.delta``: the resonant
    subspace is propagated at ``eta * delta`` and the detuned one at
    ``delta * (1 + eta)``; both see amplitude scale ``1 + eps``.  ``eps`` and
    ``eta`` may be arrays (broadcast together).
    """
    fn = epg_metric(metric)
    eps, eta = (0.0, 0.0) if err is None else (err.eps, err.eta)
    eps = np.asarray(eps, float)
    eta = np.asarray(eta, float)
    u_res = propagate(seq, eta * spec.delta, eps)
    u_det = propagate(seq, spec.delta * (1 + eta), eps)
    return fn(u_res, spec.resonant_target), fn(u_det, spec.detuned_target)


def landscape(seq: PulseSequence, spec: ConditionalGateSpec, eps_values, eta_values, metric: str = "raw"):
    """EPG grids over ``eps_values`` x ``eta_values`` (row-major in eps)."""
    e, n = np.meshgrid(np.asarray(eps_values, float), np.asarray(eta_values, float), indexing="ij")
    res, det = evaluate_conditional(seq, spec, _GridErr(e, n), metric)
    return e, n, np.asarray(res), np.asarray(det)


@dataclass(frozen=True)
class _GridErr:
    eps: np.ndarray
    eta: np.ndarray


def write_landscape_csv(path_or_buf, e, n, res, det) -> None:
    lines = ["eps,eta,epg_resonant,epg_detuned"]
    for row in zip(e.ravel(), n.ravel(), res.ravel(), det.ravel()):
        lines.append(",".join(f"{v:.17e}" for v in row))
    text = "\n".join(lines) + "\n"
    if hasattr(path_or_buf, "write"):
        path_or_buf.write(text)
    else:
        with open(path_or_buf, "w", newline="") as fh:
            fh.write(text)
