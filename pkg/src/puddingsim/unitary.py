"""Exact SU(2) algebra for piecewise-constant two-level drives.

Frame convention (used everywhere in the package)::

    H = (Omega / 2) * (cos(phi) * sx + sin(phi) * sy) + (delta / 2) * sz

with ``delta`` the transition frequency minus the drive carrier frequency, in
rad/s.  Unitaries are plain ``complex128`` arrays of shape ``(..., 2, 2)``;
every function broadcasts over leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SX, SY, SZ)


@dataclass(frozen=True)
class RotationSpec:
    """Rotation by ``angle`` about the axis
    ``(cos(tilt) cos(phase), cos(tilt) sin(phase), sin(tilt))``."""

    angle: float
    phase: float = 0.0
    tilt: float = 0.0

    def normalized(self) -> "RotationSpec":
        # negative angles fold into the opposite equatorial direction
        if self.angle < 0:
            return RotationSpec(-self.angle, (self.phase + np.pi) % (2 * np.pi), -self.tilt)
        return self

    def axis(self) -> np.ndarray:
        c = np.cos(self.tilt)
        return np.array([c * np.cos(self.phase), c * np.sin(self.phase), np.sin(self.tilt)])


@dataclass(frozen=True)
class ErrorPair:
    """Relative amplitude error ``eps`` and relative detuning error ``eta``."""

    eps: float = 0.0
    eta: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.eps) and np.isfinite(self.eta)):
            raise ValueError("error pair must be finite")

    @property
    def magnitude(self) -> float:
        return float(np.hypot(self.eps, self.eta))


def from_axis_angle(angle, nx, ny, nz) -> np.ndarray:
    """``cos(a/2) I - i sin(a/2) n.sigma`` for (broadcast) unit vectors ``n``."""
    angle, nx, ny, nz = np.broadcast_arrays(
        np.asarray(angle, float), np.asarray(nx, float), np.asarray(ny, float), np.asarray(nz, float)
    )
    c = np.cos(angle / 2)
    s = np.sin(angle / 2)
    out = np.empty(angle.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c - 1j * s * nz
    out[..., 1, 1] = c + 1j * s * nz
    out[..., 0, 1] = -1j * s * (nx - 1j * ny)
    out[..., 1, 0] = -1j * s * (nx + 1j * ny)
    return out


def rotation_unitary(spec: RotationSpec) -> np.ndarray:
    """Return ``exp(-i angle n.sigma / 2)`` for the rotation ``spec``."""
    nx, ny, nz = spec.axis()
    return from_axis_angle(spec.angle, nx, ny, nz)


def propagate_constant(rabi, phase, duration, detuning=0.0) -> np.ndarray:
    """Closed-form propagator of a constant drive (broadcasts over arrays).

    A negative ``rabi`` is equivalent to a positive one with ``phase + pi``.
    """
    rabi, phase, duration, detuning = np.broadcast_arrays(
        np.asarray(rabi, float), np.asarray(phase, float),
        np.asarray(duration, float), np.asarray(detuning, float),
    )
    if np.any(duration < 0):
        raise ValueError("duration must be non-negative")
    omega = np.hypot(rabi, detuning)
    safe = np.where(omega > 0, omega, 1.0)
    nx = np.where(omega > 0, rabi * np.cos(phase) / safe, 0.0)
    ny = np.where(omega > 0, rabi * np.sin(phase) / safe, 0.0)
    nz = np.where(omega > 0, detuning / safe, 1.0)
    return from_axis_angle(omega * duration, nx, ny, nz)


def chain(mats: np.ndarray) -> np.ndarray:
    """Time-ordered product ``U[n-1] @ ... @ U[1] @ U[0]`` along axis ``-3``.

    Uses pairwise reduction so the number of numpy calls is logarithmic in the
    chain length.
    """
    mats = np.asarray(mats, dtype=complex)
    if mats.shape[-3] == 0:
        return np.broadcast_to(I2, mats.shape[:-3] + (2, 2)).copy()
    while mats.shape[-3] > 1:
        n = mats.shape[-3]
        if n % 2:
            last = mats[..., -1:, :, :]
            body = mats[..., :-1, :, :]
        else:
            last = None
            body = mats
        paired = body[..., 1::2, :, :] @ body[..., 0::2, :, :]
        mats = paired if last is None else np.concatenate([paired, last], axis=-3)
    return mats[..., 0, :, :]


def dagger(u: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(u, -1, -2))


def frobenius_epg(actual, target) -> np.ndarray:
    """Root-mean-square of the entrywise difference (no phase alignment)."""
    diff = np.asarray(actual) - np.asarray(target)
    return np.sqrt(np.mean(np.abs(diff) ** 2, axis=(-2, -1)))


def phase_aligned_epg(actual, target) -> np.ndarray:
    """Frobenius EPG minimised over a global phase of ``actual``.

    The optimum phase is ``-arg tr(target^dagger actual)``, giving
    ``sqrt((|A|^2 + |B|^2 - 2 |tr(B^dagger A)|) / 4)`` for 2x2 matrices.
    """
    a = np.asarray(actual)
    b = np.asarray(target)
    overlap = np.abs(np.trace(dagger(b) @ a, axis1=-2, axis2=-1))
    na = np.sum(np.abs(a) ** 2, axis=(-2, -1))
    nb = np.sum(np.abs(b) ** 2, axis=(-2, -1))
    d = a.shape[-1] * a.shape[-2]
    return np.sqrt(np.clip(na + nb - 2 * overlap, 0.0, None) / d)


def small_error_epg(alpha: float, err: ErrorPair) -> float:
    """Lowest-order quasi-static EPG, ``|sin(alpha/2)| * |err| / sqrt(2)``."""
    return float(abs(np.sin(alpha / 2) * err.magnitude) / np.sqrt(2))


def rotation_angle(u: np.ndarray) -> np.ndarray:
    """Rotation angle in [0, 2pi] of an SU(2)-like matrix, read from the trace.

    The determinant phase is removed first so U(2) inputs are accepted; the
    result is then only defined up to ``angle -> 2pi - angle``.
    """
    u = np.asarray(u)
    det = np.linalg.det(u)
    su = u / np.sqrt(det)[..., None, None]
    half_tr = np.real(np.trace(su, axis1=-2, axis2=-1)) / 2
    return 2 * np.arccos(np.clip(half_tr, -1.0, 1.0))


def pauli_components(u: np.ndarray) -> np.ndarray:
    """Coefficients ``(c0, cx, cy, cz)`` with ``u = c0 I - i (cx sx + cy sy + cz sz)``."""
    u = np.asarray(u)
    c0 = np.trace(u, axis1=-2, axis2=-1) / 2
    comps = [1j * np.trace(p @ u, axis1=-2, axis2=-1) / 2 for p in PAULIS]
    return np.stack([c0, *comps], axis=-1)


def equal_up_to_phase(u, v, tol: float = 1e-10) -> bool:
    return bool(np.all(np.abs(np.abs(np.trace(dagger(np.asarray(u)) @ np.asarray(v), axis1=-2, axis2=-1)) - 2) < tol))
