"""Piecewise-constant pulse sequences and their propagation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .unitary import I2, SX, SY, SZ, PAULIS, chain, dagger, from_axis_angle, propagate_constant

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class PulseSegment:
    """One constant-drive interval.

    ``carrier_offset`` is the carrier frequency minus the reference transition
    frequency (rad/s).  ``phase`` is the drive phase in the carrier's own frame.
    """

    amplitude: float
    phase: float
    duration: float
    carrier_offset: float = 0.0

    def __post_init__(self):
        amp, ph = float(self.amplitude), float(self.phase)
        if amp < 0:
            amp, ph = -amp, ph + np.pi
        if self.duration < 0:
            raise ValueError(f"negative segment duration {self.duration}")
        object.__setattr__(self, "amplitude", amp)
        ph %= TWO_PI
        object.__setattr__(self, "phase", 0.0 if ph >= TWO_PI else ph)  # -tiny % 2pi rounds to 2pi
        object.__setattr__(self, "duration", float(self.duration))
        object.__setattr__(self, "carrier_offset", float(self.carrier_offset))

    @property
    def area(self) -> float:
        return self.amplitude * self.duration

    def shifted(self, dphi: float) -> "PulseSegment":
        return PulseSegment(self.amplitude, self.phase + dphi, self.duration, self.carrier_offset)


@dataclass(frozen=True)
class PulseSequence:
    segments: tuple[PulseSegment, ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    def __len__(self):
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    def __add__(self, other: "PulseSequence") -> "PulseSequence":
        return PulseSequence(self.segments + other.segments, f"{self.label}+{other.label}")

    @property
    def duration(self) -> float:
        return float(sum(s.duration for s in self.segments))

    @property
    def total_area(self) -> float:
        """Unsigned pulse area, sum of Omega_k T_k."""
        return float(sum(s.area for s in self.segments))

    def vector_area(self) -> complex:
        """Phase-resolved area, sum of Omega_k T_k exp(i phi_k)."""
        return complex(sum(s.area * np.exp(1j * s.phase) for s in self.segments))

    def signed_area(self) -> float:
        """Sum of +-Omega_k T_k with the sign taken from cos(phi_k).

        Only meaningful for sequences whose phases are 0 or pi; use
        :meth:`vector_area` otherwise.
        """
        return float(sum(s.area * np.sign(np.cos(s.phase)) for s in self.segments))

    def is_zero_area(self, rtol: float = 1e-9) -> bool:
        return abs(self.vector_area()) <= rtol * max(self.total_area, 1e-300)

    def time_symmetric(self, tol: float = 1e-12) -> bool:
        segs = self.segments
        for a, b in zip(segs, reversed(segs)):
            if abs(a.amplitude - b.amplitude) > tol * max(a.amplitude, 1.0):
                return False
            if abs(a.duration - b.duration) > tol * max(a.duration, 1e-300):
                return False
            if abs(np.angle(np.exp(1j * (a.phase - b.phase)))) > 1e-9:
                return False
            if a.carrier_offset != b.carrier_offset:
                return False
        return True

    def shifted(self, dphi: float, label: str | None = None) -> "PulseSequence":
        return PulseSequence(tuple(s.shifted(dphi) for s in self.segments), label or self.label)

    def arrays(self):
        amp = np.array([s.amplitude for s in self.segments], float)
        ph = np.array([s.phase for s in self.segments], float)
        dur = np.array([s.duration for s in self.segments], float)
        off = np.array([s.carrier_offset for s in self.segments], float)
        return amp, ph, dur, off

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "segments": [
                {"amplitude": s.amplitude, "phase": s.phase, "duration": s.duration,
                 "carrier_offset": s.carrier_offset}
                for s in self.segments
            ],
        }


def _rz(theta) -> np.ndarray:
    theta = np.asarray(theta, float)
    return from_axis_angle(theta, 0.0, 0.0, 1.0)


def segment_unitaries(seq: PulseSequence, detuning=0.0, eps=0.0) -> np.ndarray:
    """Per-segment propagators in the reference frame.

    ``detuning`` and ``eps`` may be arrays with a common batch shape; the
    result has shape ``batch + (n_segments, 2, 2)``.
    """
    amp, ph, dur, off = seq.arrays()
    detuning = np.asarray(detuning, float)[..., None]
    eps = np.asarray(eps, float)[..., None]
    mats = propagate_constant(amp * (1 + eps), ph, dur, detuning - off)
    if np.any(off != 0):
        t_end = np.cumsum(dur)
        t_start = t_end - dur
        mats = _rz(off * t_end) @ mats @ _rz(-off * t_start)
    return mats


def propagate(seq: PulseSequence, detuning=0.0, eps=0.0) -> np.ndarray:
    """Exact propagator of ``seq`` for a static detuning and amplitude error."""
    mats = segment_unitaries(seq, detuning, eps)
    return chain(mats)


def propagate_sampled(
    seq: PulseSequence,
    detuning_fn: Callable[[np.ndarray], np.ndarray],
    eps=0.0,
    step_budget: float = 0.01,
    detuning_offset: float = 0.0,
    detuning_bound: float | None = None,
) -> np.ndarray:
    """Propagate under a time-dependent detuning.

    ``detuning_fn(t)`` maps an array of times of shape ``(n_steps,)`` to
    detunings of shape ``batch + (n_steps,)``.  Steps are short enough that
    the accumulated angle ``sqrt((Omega (1 + eps))**2 + delta**2) * h`` stays
    within ``step_budget``; each step uses the fourth-order Magnus
    integrator with two Gauss-Legendre nodes, so the global error falls as
    ``step_budget**4``.  ``detuning_bound`` is an a-priori bound on
    ``|delta(t)|``; if omitted it is estimated from a coarse grid.
    """
    if step_budget <= 0:
        raise ValueError("step_budget must be positive")
    eps = np.asarray(eps, float)
    amp, ph, dur, off = seq.arrays()
    total = None
    t0 = 0.0
    if detuning_bound is None:
        probe = np.linspace(0.0, max(seq.duration, 1e-300), 257)
        detuning_bound = float(np.max(np.abs(np.asarray(detuning_fn(probe)))))
    eps_max = float(np.max(np.abs(1 + eps))) if eps.size else 1.0
    node = 0.5 / np.sqrt(3)
    for k in range(len(seq)):
        T = dur[k]
        if T == 0:
            continue
        rate = np.hypot(amp[k] * eps_max, abs(detuning_offset - off[k]) + detuning_bound)
        n = max(1, int(np.ceil(rate * T / step_budget)))
        h = T / n
        mids = t0 + (np.arange(n) + 0.5) * h
        both = np.asarray(detuning_fn(np.concatenate([mids - node * h, mids + node * h])), float)
        d1 = both[..., :n] + detuning_offset - off[k]
        d2 = both[..., n:] + detuning_offset - off[k]
        a = amp[k] * (1 + eps[..., None])
        ax, ay = a * np.cos(ph[k]), a * np.sin(ph[k])
        # U = exp(-i w.sigma) with w = h/4 (v1 + v2) + sqrt(3) h^2/24 (v2 x v1),
        # v = (ax, ay, delta) evaluated at the two nodes
        c = np.sqrt(3) * h * h / 24
        wx = h / 2 * ax + c * (d1 - d2) * ay
        wy = h / 2 * ay + c * (d2 - d1) * ax
        wx, wy, wz = np.broadcast_arrays(wx, wy, h / 4 * (d1 + d2))
        norm = np.sqrt(wx**2 + wy**2 + wz**2)
        safe = np.where(norm > 0, norm, 1.0)
        mats = from_axis_angle(2 * norm, wx / safe, wy / safe, np.where(norm > 0, wz / safe, 1.0))
        u = chain(mats)
        if off[k] != 0:
            u = _rz(off[k] * (t0 + T)) @ u @ _rz(-off[k] * t0)
        total = u if total is None else u @ total
        t0 += T
    if total is None:
        shape = np.broadcast_shapes(eps.shape, np.shape(detuning_fn(np.zeros(1)))[:-1])
        return np.broadcast_to(I2, shape + (2, 2)).copy()
    return total


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(48)


def first_order_generators(seq: PulseSequence, detuning: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Toggling-frame first-order error generators.

    Returns real 3-vectors ``g_amp`` and ``g_det`` such that, to first order,
    ``U(eps, d) = U0 (I - i (eps g_amp + d g_det) . sigma)`` where ``eps`` is a
    relative amplitude error and ``d`` an additional static detuning in rad/s.
    ``g_det`` therefore has units of seconds.
    """
    amp, ph, dur, off = seq.arrays()
    g_amp = np.zeros(3)
    g_det = np.zeros(3)
    prev = I2.copy()
    t0 = 0.0
    for k in range(len(seq)):
        T = dur[k]
        if T == 0:
            continue
        delta = detuning - off[k]
        angle = np.hypot(amp[k], delta) * T
        pieces = max(1, int(np.ceil(angle / np.pi)))
        edges = np.linspace(0.0, T, pieces + 1)
        x = (edges[:-1, None] + edges[1:, None]) / 2 + (edges[1:, None] - edges[:-1, None]) / 2 * _GL_NODES
        w = ((edges[1:] - edges[:-1]) / 2)[:, None] * _GL_WEIGHTS
        x, w = x.ravel(), w.ravel()
        local = propagate_constant(amp[k], ph[k], x, delta)
        if off[k] != 0:
            local = _rz(off[k] * (t0 + x)) @ local @ _rz(-off[k] * t0)
        p = local @ prev
        pd = dagger(p)
        drive = (amp[k] / 2) * (np.cos(ph[k]) * SX + np.sin(ph[k]) * SY)
        if off[k] != 0:
            # drive operator seen in the reference frame
            rz = _rz(off[k] * (t0 + x))
            drive = rz @ drive @ dagger(rz)
        ha = pd @ drive @ p
        hd = pd @ (SZ / 2) @ p
        for j, s in enumerate(PAULIS):
            g_amp[j] += np.sum(w * np.real(np.trace(s @ ha, axis1=-2, axis2=-1))) / 2
            g_det[j] += np.sum(w * np.real(np.trace(s @ hd, axis1=-2, axis2=-1))) / 2
        seg = propagate_constant(amp[k], ph[k], T, delta)
        if off[k] != 0:
            seg = _rz(off[k] * (t0 + T)) @ seg @ _rz(-off[k] * t0)
        prev = seg @ prev
        t0 += T
    return g_amp, g_det
