import numpy as np
import pytest

from puddingsim.gates import composite_pi, pzap, rect_gate, seven_pulse, u5a_pi, walsh1_zap, walsh3_zap
from puddingsim.sequence import PulseSegment, PulseSequence, propagate
from puddingsim.solver import (
    SolverError,
    condition_residuals,
    conditions_overlap,
    derivative_null_report,
    g_corrected,
    g_of_alpha,
    h_corrected,
    h_of_alpha,
    magnus_check,
    seven_pulse_params,
    solve_augmenting,
    walsh3_params,
)
from puddingsim.unitary import rotation_angle


def angle_mod_sign(u):
    # rotation angle of U up to the global sign (angle and 2pi - angle coincide)
    a = rotation_angle(u)
    return min(a, 2 * np.pi - a)


# -- augmenting pulses ----------------------------------------------------------

def test_condition1_constants():
    sol = solve_augmenting("condition-1")
    assert sol.omega_ratio == pytest.approx(1.0969, abs=1e-3)
    assert sol.rabi_area / np.pi == pytest.approx(1.478, abs=1e-3)
    assert sol.pzap_duration / (2 * np.pi) == pytest.approx(3.784, abs=2e-3)


@pytest.mark.parametrize("branch", ["condition-1", "condition-2+", "condition-2-"])
def test_branch_residuals_vanish(branch):
    sol = solve_augmenting(branch)
    assert all(v < 1e-10 for v in sol.residuals.values()), sol.residuals


def test_augmenting_pulse_is_2pi_on_detuned_transition():
    sol = solve_augmenting()
    rabi, t = sol.omega_ratio, sol.duration_c
    u = propagate(rect_gate(rabi * t, 0.0, rabi), 1.0)
    np.testing.assert_allclose(u, -np.eye(2), atol=1e-12)


def test_conditions_are_mutually_exclusive():
    assert conditions_overlap() == []
    c1 = solve_augmenting("condition-1")
    res = condition_residuals(c1.a_ratio, c1.a_area, c1.omega_ratio)
    assert res["cosine"] > 1e-3


def test_solver_error_carries_trace(monkeypatch):
    import puddingsim.solver as solver

    monkeypatch.setattr(solver, "_condition", lambda branch, a, b: (lambda r: 1.0 + r))
    with pytest.raises(SolverError) as info:
        solver.solve_augmenting("condition-1")
    assert info.value.trace


def test_to_dict_fields():
    d = solve_augmenting().to_dict()
    assert set(d) == {"branch", "omega_ratio", "alpha_c_over_pi", "duration_over_2pi_delta", "residuals"}


# -- Walsh-3 ----------------------------------------------------------------------

def test_walsh3_closed_form_at_pi():
    w = walsh3_params(np.pi)
    assert abs(w.omega_over_delta - 1 / np.sqrt(2)) < 1e-12
    assert abs(w.rabi_area - 2 * np.pi / (3 * np.sqrt(3))) < 1e-12


@pytest.mark.parametrize("theta", [np.pi / 2, np.pi, 3 * np.pi / 2])
def test_walsh3_residual_and_rotation(theta):
    w = walsh3_params(theta)
    assert abs(w.residual) < 1e-12
    seq = walsh3_zap(1.0, theta)
    np.testing.assert_allclose(propagate(seq, 0.0), np.eye(2), atol=1e-12)
    assert angle_mod_sign(propagate(seq, 1.0)) == pytest.approx(min(theta, 2 * np.pi - theta), abs=1e-9)


def test_walsh3_rejects_bad_theta():
    with pytest.raises(ValueError):
        walsh3_params(0.0)


# -- seven-pulse composite -----------------------------------------------------------

def test_corrected_and_printed_agree_at_pi():
    assert g_corrected(np.pi) == pytest.approx(g_of_alpha(np.pi), abs=1e-12)
    assert h_corrected(np.pi) == pytest.approx(h_of_alpha(np.pi), abs=1e-12)


@pytest.mark.parametrize("alpha", [np.pi / 4, np.pi / 2])
def test_printed_form_leaves_amplitude_derivative(alpha):
    r = derivative_null_report(seven_pulse(alpha, 1.0, form="printed"), scale=1.0)
    assert r.d_eta < 1e-6
    assert r.d_eps > 0.5


@pytest.mark.parametrize("alpha", [np.pi / 4, np.pi / 2, 2 * np.pi / 3, np.pi])
def test_seven_pulse_nulls_both_derivatives(alpha):
    seq = seven_pulse(alpha, 1.0)
    assert angle_mod_sign(propagate(seq)) == pytest.approx(alpha, abs=1e-9)
    r = derivative_null_report(seq, scale=1.0)
    assert r.d_eps < 1e-6 and r.d_eta < 1e-6
    assert r.d_eps_half < 1e-6 and r.d_eta_half < 1e-6


def test_seven_pulse_at_pi_is_mirrored_u5a():
    p = seven_pulse_params(np.pi)
    assert p.beta == 0
    mirrored = [(-q + 2 * np.pi / 3) % (2 * np.pi) for q in (0, 5 * np.pi / 6, np.pi / 3, 5 * np.pi / 6, 0)]
    np.testing.assert_allclose(p.phases[1:6], mirrored, atol=1e-12)


def test_seven_pulse_rejects_out_of_range():
    with pytest.raises(ValueError):
        seven_pulse_params(1.5 * np.pi)


def test_u5a_is_pi_rotation_with_null_derivatives():
    seq = u5a_pi(1.0)
    assert rotation_angle(propagate(seq)) == pytest.approx(np.pi, abs=1e-9)
    r = derivative_null_report(seq, scale=1.0)
    assert r.d_eps < 1e-6 and r.d_eta < 1e-6


def test_simple_pi_pulse_detuning_derivative():
    r = derivative_null_report(rect_gate(np.pi, 0.0, 1.0), scale=1.0)
    assert r.d_eta == pytest.approx(1 / np.sqrt(2), rel=1e-3)


def test_simple_pi_pulse_amplitude_derivative_is_alpha_over_two_root_two():
    r = derivative_null_report(rect_gate(np.pi, 0.0, 1.0), scale=1.0)
    assert r.d_eps == pytest.approx(np.pi / (2 * np.sqrt(2)), rel=1e-3)


def test_three_pulse_amplitude_null_phase():
    seq = composite_pi([0.0, 2 * np.pi / 3, 0.0], 1.0)
    assert derivative_null_report(seq, scale=1.0).d_eps < 1e-6


@pytest.mark.xfail(strict=True, reason="the {0, pi/2, 0} triple does not null the amplitude derivative")
def test_three_pulse_quarter_phase_nulls_amplitude():
    seq = composite_pi([0.0, np.pi / 2, 0.0], 1.0)
    assert derivative_null_report(seq, scale=1.0).d_eps < 1e-6


# -- Magnus ----------------------------------------------------------------------------

@pytest.mark.parametrize("seq", [walsh1_zap(1.0), walsh3_zap(1.0), pzap(1.0)], ids=["walsh1", "walsh3", "pzap"])
def test_magnus_agrees_with_finite_differences(seq):
    m = magnus_check(seq)
    exact = np.array([m.sigma_x, m.sigma_y, m.sigma_z])
    scale = max(np.max(np.abs(exact)), 1e-9)
    np.testing.assert_allclose(m.fd_sigma, exact, atol=0.01 * scale)


def test_magnus_components_per_family():
    rel = lambda seq: magnus_check(seq).relative()
    w1, w3, pz = rel(walsh1_zap(1.0)), rel(walsh3_zap(1.0)), rel(pzap(1.0))
    assert w1[0] < 1e-9 and w1[1] > 0.1  # walsh1 is not time-symmetric
    assert w3[0] < 1e-9 and w3[1] < 1e-9 and w3[2] > 0.1
    assert max(pz) < 1e-9


def test_magnus_truncated_terms():
    m = magnus_check(walsh1_zap(1.0))
    assert m.m1_area == pytest.approx(0.0, abs=1e-12)
    assert m.m1_sigma_z == pytest.approx(m.duration / 2)


def test_second_order_magnus_matches_weak_drive():
    # the truncated term is exact to leading order in the drive amplitude;
    # it is the exponent coefficient, i.e. minus the generator component
    weak = PulseSequence((PulseSegment(0.01, 0.0, 1.0), PulseSegment(0.01, np.pi, 1.0)))
    m = magnus_check(weak)
    assert -m.m2_sigma_y == pytest.approx(m.sigma_y, rel=0.01)


def test_magnus_rejects_carrier_offsets():
    from puddingsim.gates import escong_strong

    with pytest.raises(ValueError):
        magnus_check(escong_strong(1.0, 8.0))
