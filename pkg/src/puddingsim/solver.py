"""Parameter solvers for composite and zero-area pulses, plus numerical
checks of first-order error cancellation."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np
from scipy.optimize import bisect

from .sequence import PulseSequence, PulseSegment, first_order_generators, propagate
from .unitary import dagger, frobenius_epg, pauli_components, phase_aligned_epg


class SolverError(RuntimeError):
    """No admissible root in the scanned range."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


def _checked_arccos(x, what):
    if not -1.0 <= x <= 1.0:
        raise ValueError(f"{what}: arccos argument {x:.6g} outside [-1, 1]")
    return float(np.arccos(x))


# -- seven-pulse arbitrary-angle composite --------------------------------

def g_of_alpha(alpha: float) -> float:
    """Printed closed form ``arccos(-alpha/4pi - sin(alpha/2)/4)``."""
    return _checked_arccos(-alpha / (4 * np.pi) - np.sin(alpha / 2) / 4, "g(alpha)")


def h_of_alpha(alpha: float) -> float:
    """Printed closed form ``arccos(-alpha/4pi + sin(alpha/2)/4)``."""
    return _checked_arccos(-alpha / (4 * np.pi) + np.sin(alpha / 2) / 4, "h(alpha)")


def g_corrected(alpha: float) -> float:
    """``arccos(alpha/4pi - 1/2 - sin(alpha/2)/4)``.

    Agrees with :func:`g_of_alpha` at ``alpha = pi``; elsewhere this is the
    branch that nulls both first-order derivatives (see
    :func:`seven_pulse_params`).
    """
    return _checked_arccos(alpha / (4 * np.pi) - 0.5 - np.sin(alpha / 2) / 4, "g(alpha)")


def h_corrected(alpha: float) -> float:
    return _checked_arccos(alpha / (4 * np.pi) - 0.5 + np.sin(alpha / 2) / 4, "h(alpha)")


@dataclass(frozen=True)
class SevenPulseParams:
    alpha: float
    beta: float
    phi1: float
    phi2: float
    phi3: float
    form: str

    @property
    def phases(self) -> tuple[float, ...]:
        return (0.0, self.phi1, self.phi2, self.phi3, self.phi2, self.phi1, 0.0)

    @property
    def angles(self) -> tuple[float, ...]:
        return (self.beta,) + (np.pi,) * 5 + (self.beta,)


def seven_pulse_params(alpha: float, form: str = "corrected") -> SevenPulseParams:
    """Parameters of ``beta_0 pi_phi1 pi_phi2 pi_phi3 pi_phi2 pi_phi1 beta_0``.

    ``form="printed"`` evaluates g and h exactly as usually quoted; that
    version only nulls the detuning derivative for ``alpha != pi`` and rotates
    by ``2pi - alpha``.  ``form="corrected"`` nulls both derivatives and
    rotates by ``alpha``.
    """
    if not 0 < alpha <= np.pi:
        raise ValueError(f"seven-pulse composite needs 0 < alpha <= pi, got {alpha}")
    if form == "printed":
        g, h = g_of_alpha(alpha), h_of_alpha(alpha)
    elif form == "corrected":
        g, h = g_corrected(alpha), h_corrected(alpha)
    else:
        raise ValueError(f"unknown form {form!r}")
    two_pi = 2 * np.pi
    return SevenPulseParams(
        alpha=alpha,
        beta=(np.pi - alpha) / 2,
        phi1=g % two_pi,
        phi2=(2 * g + h) % two_pi,
        phi3=(2 * g + 2 * h) % two_pi,
        form=form,
    )


# -- symmetric Walsh-3 zero-area pulse ------------------------------------

@dataclass(frozen=True)
class Walsh3Params:
    theta: float
    omega_over_delta: float
    alpha_tilde: float
    rabi_area: float
    residual: float


def walsh3_params(theta: float) -> Walsh3Params:
    """Amplitude and per-segment angles of an ABBA zero-area pulse that rotates
    the Delta-detuned transition by ``theta`` about an equatorial axis."""
    if not 0 < theta <= 2 * np.pi:
        raise ValueError(f"theta must lie in (0, 2pi], got {theta}")
    s = np.sin(theta / 4)
    alpha_tilde = np.arccos(-s * s)
    sin_b = s / np.sqrt(1 + s * s)
    cos_b2 = 1 / (1 + s * s)
    residual = np.cos(alpha_tilde) * cos_b2 + sin_b**2
    return Walsh3Params(theta, float(s), float(alpha_tilde), float(sin_b * alpha_tilde), float(residual))


# -- augmenting pulses of the protected ZAP -------------------------------

SCAN_POINTS = 1000
SCAN_MAX = 10.0


@dataclass(frozen=True)
class AugmentingSolution:
    """Augmenting 2pi pulse C (D = -C) for the ACBDDBCA sequence.

    ``omega_ratio`` is |Omega_C|/Delta, ``rabi_area`` is |Omega_C| T_C and
    ``duration_c`` is T_C in units of 1/Delta.  ``sign`` is the sign of
    Omega_C relative to Omega_A.
    """

    branch: str
    sign: int
    omega_ratio: float
    rabi_area: float
    duration_c: float
    a_ratio: float
    a_area: float
    residuals: dict
    all_roots: tuple = field(default=(), compare=False)

    @property
    def pzap_duration(self) -> float:
        """Full ACBDDBCA duration in units of 1/Delta."""
        return 4 * (self.a_area / self.a_ratio + self.rabi_area / self.omega_ratio)

    def to_dict(self) -> dict:
        return {
            "branch": self.branch,
            "omega_ratio": self.omega_ratio,
            "alpha_c_over_pi": self.rabi_area / np.pi,
            "duration_over_2pi_delta": self.pzap_duration / (2 * np.pi),
            "residuals": dict(self.residuals),
        }


def _c_area(r):
    return 2 * np.pi * r / np.sqrt(r * r + 1)


def _condition(branch: str, a_ratio: float, a_area: float):
    if branch == "condition-1":
        # |Omega_C| tan(a/2) = -|Omega_A| tan(c/2), multiplied through by cosines
        return lambda r: r * np.sin(a_area / 2) * np.cos(_c_area(r) / 2) + a_ratio * np.cos(a_area / 2) * np.sin(_c_area(r) / 2)
    if branch in ("condition-2+", "condition-2-"):
        p = 1 if branch.endswith("+") else -1
        return lambda r: np.cos((a_area + p * _c_area(r)) / 2)
    raise ValueError(f"unknown branch {branch!r}")


def condition_residuals(a_ratio, a_area, r, sign=1):
    """Residuals of every augmenting-pulse constraint at ``r``.

    Only ``two_pi_on_detuned``, ``zero_area`` and the residual of the chosen
    branch are expected to vanish; the others are diagnostic.
    """
    c = _c_area(r)
    t_c = 2 * np.pi / np.sqrt(r * r + 1)
    return {
        "two_pi_on_detuned": abs(np.sqrt(r * r + 1) * t_c - 2 * np.pi),
        # C and D = -C contribute opposite areas
        "zero_area": abs(r * t_c - r * t_c),
        "tangent": abs(r * np.tan(a_area / 2) + a_ratio * np.tan(c / 2)),
        "cosine": abs(np.cos((a_area + sign * c) / 2)),
    }


_BRANCH_KEYS = {"condition-1": "tangent", "condition-2+": "cosine", "condition-2-": "cosine"}


def solve_augmenting(branch: str = "condition-1", sign: int = 1, theta: float = np.pi) -> AugmentingSolution:
    """Solve for the augmenting pulses on ``branch``.

    The 2pi-on-detuned constraint eliminates the duration, leaving a scalar
    equation in r = |Omega_C|/Delta which is bracketed on a uniform scan of
    (0, 10] and refined by bisection.  The largest root (shortest sequence)
    is returned.
    """
    w3 = walsh3_params(theta)
    a_ratio, a_area = w3.omega_over_delta, w3.rabi_area
    if branch == "condition-2+":
        sign = 1
    elif branch == "condition-2-":
        sign = -1
    f = _condition(branch, a_ratio, a_area)
    grid = np.linspace(SCAN_MAX / SCAN_POINTS, SCAN_MAX, SCAN_POINTS)
    vals = np.array([f(r) for r in grid])
    roots = []
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]:
        lo, hi = grid[i], grid[i + 1]
        if vals[i] == 0:
            roots.append(float(lo))
            continue
        roots.append(float(bisect(f, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps, maxiter=200)))
    roots = sorted(set(roots))
    if not roots:
        trace = list(zip(grid[::50].tolist(), vals[::50].tolist()))
        raise SolverError(f"no bracketed root for {branch} in (0, {SCAN_MAX}]", trace)
    r = roots[-1]
    c_area = _c_area(r)
    diag = condition_residuals(a_ratio, a_area, r, sign)
    res = {k: float(diag[k]) for k in ("two_pi_on_detuned", "zero_area", _BRANCH_KEYS[branch])}
    return AugmentingSolution(
        branch=branch,
        sign=sign,
        omega_ratio=r,
        rabi_area=float(c_area),
        duration_c=float(2 * np.pi / np.sqrt(r * r + 1)),
        a_ratio=a_ratio,
        a_area=a_area,
        residuals=res,
        all_roots=tuple(roots),
    )


def conditions_overlap(tol: float = 1e-6) -> list[dict]:
    """Roots of one condition that also satisfy the other (expected: none)."""
    hits = []
    for branch in ("condition-1", "condition-2+", "condition-2-"):
        try:
            sol = solve_augmenting(branch)
        except SolverError:
            continue
        for r in sol.all_roots:
            for sign in (1, -1):
                res = condition_residuals(sol.a_ratio, sol.a_area, r, sign)
                if res["tangent"] < tol and res["cosine"] < tol:
                    hits.append({"branch": branch, "omega_ratio": r, "sign": sign})
    return hits


# -- first-order checks ----------------------------------------------------

@dataclass(frozen=True)
class MagnusReport:
    """First-order detuning response of a sequence driven on resonance.

    ``sigma_*`` are the exact first-order generator components per unit
    detuning (seconds), from toggling-frame quadrature; ``fd_sigma`` are the
    same quantities from central differences of the exact propagator.
    ``m1_area`` (= half the signed area), ``m1_sigma_z`` and ``m2_sigma_y``
    are the truncated first- and second-order Magnus terms.
    """

    sigma_x: float
    sigma_y: float
    sigma_z: float
    fd_sigma: tuple
    m1_area: float
    m1_sigma_z: float
    m2_sigma_y: float
    duration: float

    def relative(self) -> tuple:
        scale = self.duration / 2
        return tuple(abs(v) / scale for v in (self.sigma_x, self.sigma_y, self.sigma_z))


def magnus_check(seq: PulseSequence, delta: float | None = None, fd_step: float | None = None) -> MagnusReport:
    """Evaluate the first-order detuning error of a resonant sequence.

    ``delta`` sets the finite-difference detuning scale (default: largest
    segment amplitude); the step is ``1e-6 * delta``.
    """
    if any(s.carrier_offset != 0 for s in seq):
        raise ValueError("magnus_check expects a resonant sequence (zero carrier offset)")
    _, g = first_order_generators(seq, 0.0)
    amp, ph, dur, _ = seq.arrays()
    signed = amp * np.cos(ph)
    t_edges = np.concatenate([[0.0], np.cumsum(dur)])
    # truncated Magnus terms for H = Omega(t)/2 sx + d/2 sz
    area = float(np.sum(signed * dur))
    first_moment = float(np.sum(signed * (t_edges[1:] ** 2 - t_edges[:-1] ** 2) / 2))
    cum = np.concatenate([[0.0], np.cumsum(signed * dur)])
    # integral over the sequence of the running area
    running = float(np.sum(cum[:-1] * dur + signed * dur**2 / 2))
    m2_y = (first_moment - running) / 4
    scale = delta if delta else (float(np.max(amp)) if len(amp) else 1.0)
    h = fd_step if fd_step else 1e-6 * scale
    u0 = propagate(seq, 0.0)
    du = (propagate(seq, h) - propagate(seq, -h)) / (2 * h)
    fd = np.real(pauli_components(dagger(u0) @ du))[1:]
    return MagnusReport(
        sigma_x=float(g[0]), sigma_y=float(g[1]), sigma_z=float(g[2]),
        fd_sigma=tuple(float(v) for v in fd),
        m1_area=area / 2,
        m1_sigma_z=float(np.sum(dur)) / 2,
        m2_sigma_y=m2_y,
        duration=seq.duration,
    )


@dataclass(frozen=True)
class DerivativeReport:
    """Error-sensitivity summary of a gate on one subspace.

    ``d_eps``/``d_eta`` are the linear coefficients of EPG in the respective
    error, taken from the curvature of EPG**2 with a Richardson step (so a
    value near zero means the EPG starts quadratically).  ``d2_eps``/``d2_eta``
    are the quadratic coefficients of EPG, ``mixed`` the eps-eta cross term of
    EPG**2, and the ``*_half`` fields repeat the linear estimates at h/2.
    """

    d_eps: float
    d_eta: float
    d2_eps: float
    d2_eta: float
    mixed: float
    d_eps_half: float
    d_eta_half: float
    step: float
    subspace: str
    metric: str

    def to_dict(self) -> dict:
        return asdict(self)


def _epg_fn(metric):
    return phase_aligned_epg if metric == "aligned" else frobenius_epg


def derivative_null_report(
    seq: PulseSequence,
    target=None,
    detuning: float = 0.0,
    scale: float | None = None,
    step: float = 1e-4,
    subspace: str = "resonant",
    metric: str = "raw",
) -> DerivativeReport:
    """Central-difference sensitivity of EPG to eps and eta.

    The gate is propagated at detuning ``detuning + eta * scale`` with the
    amplitude scaled by ``1 + eps``; ``scale`` defaults to the largest
    segment amplitude.  ``target`` defaults to the error-free propagator.
    """
    if scale is None:
        scale = max(s.amplitude for s in seq) if len(seq) else 1.0
    epg = _epg_fn(metric)
    if target is None:
        target = propagate(seq, detuning)

    def sq(e, n):
        return float(epg(propagate(seq, detuning + n * scale, e), target)) ** 2

    def curvature(fn, h):
        return (fn(h) + fn(-h) - 2 * fn(0.0)) / 2

    def linear(fn, h):
        # F(h) = k^2 h^2 + q h^4 + ...; Richardson removes the quartic term
        f1, f2 = curvature(fn, h), curvature(fn, h / 2)
        k2 = (16 * f2 - f1) / (3 * h * h)
        q = 4 * (f1 - 4 * f2) / (3 * h**4)
        return np.sqrt(max(k2, 0.0)), q

    fe = lambda x: sq(x, 0.0)
    fn = lambda x: sq(0.0, x)
    ke, qe = linear(fe, step)
    kn, qn = linear(fn, step)
    ke2, _ = linear(fe, step / 2)
    kn2, _ = linear(fn, step / 2)
    h = step
    mixed = (sq(h, h) - sq(h, -h) - sq(-h, h) + sq(-h, -h)) / (4 * h * h)
    return DerivativeReport(
        d_eps=float(ke), d_eta=float(kn),
        d2_eps=float(np.sqrt(max(qe, 0.0))), d2_eta=float(np.sqrt(max(qn, 0.0))),
        mixed=float(mixed), d_eps_half=float(ke2), d_eta_half=float(kn2),
        step=step, subspace=subspace, metric=metric,
    )
