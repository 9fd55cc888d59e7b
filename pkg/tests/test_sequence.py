import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from puddingsim.gates import escong_strong, walsh1_zap
from puddingsim.sequence import (
    PulseSegment,
    PulseSequence,
    first_order_generators,
    propagate,
    propagate_sampled,
)
from puddingsim.unitary import I2, SX, SY, SZ, chain, dagger, pauli_components, propagate_constant


def random_sequence(rng, n):
    return PulseSequence(tuple(
        PulseSegment(rng.uniform(0.2, 2.0), rng.uniform(0, 2 * np.pi), rng.uniform(0.1, 1.5)) for _ in range(n)))


def lab_propagator(seq, detuning, eps=0.0):
    """Direct ODE integration of the Schrodinger equation (oracle)."""
    u = I2.copy()
    t = 0.0
    for s in seq:
        def rhs(tt, y, s=s):
            # a carrier at offset f advances the drive phase as f t in the reference frame,
            # which makes it resonant with the subspace at detuning f
            phi = s.phase + s.carrier_offset * tt
            h = 0.5 * s.amplitude * (1 + eps) * (np.cos(phi) * SX + np.sin(phi) * SY) + 0.5 * detuning * SZ
            return (-1j * h @ y.reshape(2, 2)).ravel()
        if s.duration > 0:
            sol = solve_ivp(rhs, (t, t + s.duration), u.ravel(), rtol=1e-11, atol=1e-12, method="DOP853")
            u = sol.y[:, -1].reshape(2, 2)
        t += s.duration
    return u


def test_segment_canonicalises_negative_amplitude():
    s = PulseSegment(-2.0, 0.25, 1.0)
    assert s.amplitude == 2.0
    assert s.phase == pytest.approx(0.25 + np.pi)


def test_segment_rejects_negative_duration():
    with pytest.raises(ValueError):
        PulseSegment(1.0, 0.0, -0.1)


@given(st.floats(-10, 10), st.floats(-20, 20), st.floats(0, 5))
def test_segment_invariants(amp, phase, dur):
    s = PulseSegment(amp, phase, dur)
    assert s.amplitude >= 0 and s.duration >= 0
    assert 0 <= s.phase < 2 * np.pi


def test_sequence_areas_and_symmetry():
    seq = PulseSequence((PulseSegment(1.0, 0.0, 1.0), PulseSegment(1.0, np.pi, 1.0)))
    assert seq.total_area == 2.0
    assert seq.signed_area() == pytest.approx(0.0, abs=1e-15)
    assert seq.is_zero_area()
    assert not seq.time_symmetric()
    assert (seq + seq).duration == 4.0


def test_propagate_matches_product_of_constant_pulses():
    rng = np.random.default_rng(1)
    seq = random_sequence(rng, 6)
    ref = I2.copy()
    for s in seq:
        ref = propagate_constant(s.amplitude, s.phase, s.duration, 0.3) @ ref
    np.testing.assert_allclose(propagate(seq, 0.3), ref, atol=1e-13)


def test_propagate_matches_ode_with_errors():
    rng = np.random.default_rng(2)
    seq = random_sequence(rng, 4)
    np.testing.assert_allclose(propagate(seq, 0.2, 0.05), lab_propagator(seq, 0.2, 0.05), atol=1e-8)


def test_carrier_offset_matches_ode():
    seq = escong_strong(1.0, 8.0)
    for det in (0.0, 1.0):
        np.testing.assert_allclose(propagate(seq, det), lab_propagator(seq, det), atol=1e-8)


def test_propagate_batches():
    seq = walsh1_zap(1.0)
    det = np.array([0.0, 0.5, 1.0])
    u = propagate(seq, det, np.array([0.1, 0.0, -0.1]))
    assert u.shape == (3, 2, 2)
    np.testing.assert_allclose(u[2], propagate(seq, 1.0, -0.1), atol=1e-15)


def test_sampled_constant_trajectory_equals_closed_form():
    rng = np.random.default_rng(3)
    seq = random_sequence(rng, 5)
    const = lambda t: np.full((1, len(t)), 0.37)
    np.testing.assert_allclose(propagate_sampled(seq, const, 0.02)[0], propagate(seq, 0.37, 0.02), atol=1e-10)


def test_sampled_zero_trajectory_walsh1_is_identity():
    zero = lambda t: np.zeros((1, len(t)))
    np.testing.assert_allclose(propagate_sampled(walsh1_zap(2.0), zero)[0], I2, atol=1e-12)


def test_sampled_step_halving_converges():
    seq = walsh1_zap(1.0)
    traj = lambda t: 0.05 * np.cos(0.7 * t + 0.3)[None, :]
    a = propagate_sampled(seq, traj, step_budget=0.01)
    b = propagate_sampled(seq, traj, step_budget=0.005)
    assert np.max(np.abs(a - b)) < 1e-8


def test_sampled_matches_ode_for_time_dependent_detuning():
    seq = walsh1_zap(1.0)
    f = lambda t: 0.3 * np.sin(1.3 * t)
    ref = I2.copy()
    t0 = 0.0
    for s in seq:
        def rhs(tt, y, s=s):
            h = 0.5 * s.amplitude * (np.cos(s.phase) * SX + np.sin(s.phase) * SY) + 0.5 * f(tt) * SZ
            return (-1j * h @ y.reshape(2, 2)).ravel()
        sol = solve_ivp(rhs, (t0, t0 + s.duration), ref.ravel(), rtol=1e-11, atol=1e-12, method="DOP853")
        ref = sol.y[:, -1].reshape(2, 2)
        t0 += s.duration
    got = propagate_sampled(seq, lambda t: f(t)[None, :], step_budget=1e-3)[0]
    np.testing.assert_allclose(got, ref, atol=1e-6)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_first_order_generators_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    seq = random_sequence(rng, 3)
    g_amp, g_det = first_order_generators(seq, 0.0)
    u0 = propagate(seq)
    h = 1e-6
    du_eps = (propagate(seq, 0.0, h) - propagate(seq, 0.0, -h)) / (2 * h)
    du_det = (propagate(seq, h) - propagate(seq, -h)) / (2 * h)
    np.testing.assert_allclose(np.real(pauli_components(dagger(u0) @ du_eps))[1:], g_amp, atol=1e-7)
    np.testing.assert_allclose(np.real(pauli_components(dagger(u0) @ du_det))[1:], g_det, atol=1e-7)


def test_to_dict_round_trip():
    seq = escong_strong(1.0, 8.0)
    d = seq.to_dict()
    rebuilt = PulseSequence(tuple(PulseSegment(**s) for s in d["segments"]), d["label"])
    assert rebuilt == seq


def test_empty_sequence_is_identity():
    np.testing.assert_array_equal(propagate(PulseSequence(())), I2)
    assert chain(np.zeros((0, 2, 2))).shape == (2, 2)
