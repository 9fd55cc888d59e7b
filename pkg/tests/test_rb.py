import numpy as np
import pytest

from puddingsim.noise import QuasiStaticDetuning
from puddingsim.rb import (
    DecayCurve,
    RBConfig,
    RepeatConfig,
    _rz,
    clifford_group,
    compile_clifford,
    compile_sequence,
    epg_from_b,
    fit_decay,
    inverse_index,
    log_lengths,
    make_gateset,
    mean_gate_time,
    multiplication_table,
    net_epg,
    rb_run,
    reference_idle_run,
    repg,
    two_qubit_repeat_run,
)
from puddingsim.sequence import PulseSequence, propagate
from puddingsim.unitary import I2, chain, dagger


def same_up_to_phase(u, v, tol=1e-9):
    return abs(abs(np.trace(dagger(u) @ v)) - 2) < tol


# -- group structure -----------------------------------------------------------------

def test_clifford_group_has_24_distinct_elements():
    group = clifford_group()
    assert len(group) == 24
    for i, a in enumerate(group):
        assert same_up_to_phase(a.recompose(), a.unitary)
        for b in group[i + 1:]:
            assert not same_up_to_phase(a.unitary, b.unitary)


def test_multiplication_table_is_a_latin_square():
    table = multiplication_table()
    for row in table:
        assert sorted(row) == list(range(24))
    for col in table.T:
        assert sorted(col) == list(range(24))
    assert (table[0] == np.arange(24)).all()


def test_inverse_index_recovers_identity():
    rng = np.random.default_rng(0)
    group = clifford_group()
    for _ in range(20):
        idx = list(rng.integers(0, 24, size=rng.integers(1, 15)))
        u = I2.copy()
        for i in idx + [inverse_index(idx)]:
            u = group[i].unitary @ u
        assert same_up_to_phase(u, I2)


# -- compilation -----------------------------------------------------------------------

@pytest.mark.parametrize("name", ["unprotected", "pudding"])
def test_compiled_clifford_matches_target(name):
    gs = make_gateset(name, 1.0)
    for frame in (0.0, np.pi / 2, 3 * np.pi / 2):
        for c in clifford_group():
            seq, new_frame = compile_clifford(c, gs, frame)
            u = propagate(seq) if len(seq) else I2
            assert same_up_to_phase(_rz(new_frame) @ u, c.unitary @ _rz(frame))


@pytest.mark.parametrize("name", ["unprotected", "pudding"])
def test_compiled_sequence_with_inverse_returns_to_zero(name):
    gs = make_gateset(name, 1.0)
    rng = np.random.default_rng(1)
    idx = [int(i) for i in rng.integers(0, 24, size=30)]
    seqs, _ = compile_sequence(idx + [inverse_index(idx)], gs)
    u = chain(np.stack([propagate(s) if len(s) else I2 for s in seqs]))
    assert abs(u[0, 0]) ** 2 == pytest.approx(1.0, abs=1e-10)


def test_mean_gate_times():
    assert mean_gate_time(make_gateset("unprotected", 13e-6)) == pytest.approx(6.5e-6, rel=1e-12)
    assert mean_gate_time(make_gateset("pudding", 13e-6)) == pytest.approx(58.5e-6, rel=1e-12)


def test_unknown_gateset():
    with pytest.raises(ValueError):
        make_gateset("bb1")


def test_log_lengths():
    lengths = log_lengths(1000, 8)
    assert lengths[0] == 1 and lengths[-1] == 1000 and len(lengths) == 8
    assert all(b > a for a, b in zip(lengths, lengths[1:]))


def test_config_validation():
    with pytest.raises(ValueError):
        RBConfig((3, 2))
    with pytest.raises(ValueError):
        RBConfig((1, 2), trials=0)
    with pytest.raises(ValueError):
        RBConfig((1, 2), inverse="double")
    with pytest.raises(ValueError):
        RepeatConfig(())


# -- single-qubit RB ---------------------------------------------------------------------

def test_noiseless_rb_is_flat():
    curve = rb_run(RBConfig((1, 5, 20), trials=10, gateset="pudding"))
    np.testing.assert_allclose(curve.mean, 1.0, atol=1e-10)
    assert fit_decay(curve).epg is None


def test_depolarizing_oracle():
    p = 0.999
    curve = rb_run(RBConfig(tuple(log_lengths(1000, 8)), trials=200, depolarizing_p=p))
    # every Clifford, the recovery included, is followed by the channel
    np.testing.assert_allclose(curve.mean, 0.5 + 0.5 * p ** (curve.m + 1), rtol=1e-9)
    fit = fit_decay(curve)
    assert fit.repg == pytest.approx(5.0e-4, rel=0.1)


def test_spam_constants_are_applied():
    curve = rb_run(RBConfig((1, 2, 3), trials=2, spam_a=0.9, spam_b=0.05))
    np.testing.assert_allclose(curve.mean, 0.95, atol=1e-10)


def test_quasistatic_noise_decays_and_is_deterministic():
    cfg = RBConfig((1, 10, 40), trials=20, noise=QuasiStaticDetuning(2e-5), seed=3)
    a, b = rb_run(cfg), rb_run(cfg)
    np.testing.assert_array_equal(a.mean, b.mean)
    assert a.mean[-1] < a.mean[0] < 1.0


def test_t1_factor_multiplies_survival():
    base = rb_run(RBConfig((1, 4), trials=3))
    decayed = rb_run(RBConfig((1, 4), trials=3, t1=1e-3))
    assert decayed.mean[1] < decayed.mean[0] < base.mean[0]


def test_reference_idle_matches_t1_decay():
    cfg = RBConfig((1, 10, 100), trials=50, t1=1e-3, seed=2)
    curve = reference_idle_run(cfg)
    gates = rb_run(RBConfig((1, 10, 100), trials=50, t1=1e-3, seed=2))
    np.testing.assert_allclose(curve.mean, gates.mean, atol=1e-10)
    mirror = reference_idle_run(RBConfig((1, 10, 100), trials=50, t1=1e-3, seed=2, inverse="mirror"))
    assert mirror.mean[-1] < curve.mean[-1]
    with pytest.raises(ValueError):
        reference_idle_run(RBConfig((1, 2)))


def test_curve_csv():
    text = rb_run(RBConfig((1, 2), trials=2)).to_csv()
    assert text.splitlines()[0] == "m,mean_survival,stderr,n_trials"
    assert len(text.splitlines()) == 3


# -- two-qubit repeat protocol ---------------------------------------------------------------

@pytest.mark.parametrize("gate", ["walsh1", "pudding"])
def test_repeat_protocol_noiseless_is_flat(gate):
    res = two_qubit_repeat_run(RepeatConfig((0, 1, 5), gate=gate, delta=1.0, trials=2))
    for curve in (res.curve, res.resonant, res.detuned):
        np.testing.assert_allclose(curve.mean, 1.0, atol=1e-10)


def test_repeat_protocol_protected_gate_survives_longer():
    noise = QuasiStaticDetuning(30.0)
    out = {}
    for gate in ("walsh1", "pudding"):
        res = two_qubit_repeat_run(RepeatConfig((1, 20), gate=gate, delta=1.0, trials=20, noise=noise))
        out[gate] = 1 - res.curve.mean[-1]
    assert out["pudding"] < out["walsh1"]


# -- fitting ------------------------------------------------------------------------------------

def synthetic(a=0.45, b=2e-3, c=0.5, noise=1e-4, seed=0):
    m = np.array(log_lengths(1000, 8), float)
    rng = np.random.default_rng(seed)
    y = a * np.exp(-b * m) + c + rng.normal(0, noise, m.size)
    return DecayCurve(m, y, np.full(m.size, noise), np.full(m.size, 100))


@pytest.mark.parametrize("form", ["exp", "survival-p"])
def test_fit_recovers_synthetic_decay(form):
    fit = fit_decay(synthetic(), form)
    assert fit.B == pytest.approx(2e-3, rel=0.03)
    assert fit.p == pytest.approx(np.exp(-fit.B))
    assert fit.epg == pytest.approx(epg_from_b(2e-3), rel=0.03)
    assert fit.repg == pytest.approx(repg(np.exp(-2e-3)), rel=0.03)
    assert fit.epg_err > 0 and not fit.flags


def test_fit_flags_flat_curve():
    m = np.array([1, 10, 100, 1000], float)
    curve = DecayCurve(m, np.full(4, 0.99), np.full(4, 1e-3), np.full(4, 10))
    fit = fit_decay(curve)
    assert "fit-degenerate" in fit.flags
    assert fit.epg is None and fit.epg_upper > 0


def test_fit_needs_three_lengths():
    with pytest.raises(ValueError):
        fit_decay(DecayCurve(np.array([1.0, 2.0]), np.array([1.0, 0.9]), np.zeros(2), np.ones(2)))
    with pytest.raises(ValueError):
        fit_decay(synthetic(), "linear")


def test_fit_to_dict_reports_both_dimensions():
    d = fit_decay(synthetic()).to_dict()
    assert d["repg_d4"] == pytest.approx(0.75 * (1 - d["p"]))
    assert d["repg"] == pytest.approx(0.5 * (1 - d["p"]))


def test_epg_from_b():
    assert abs(epg_from_b(0.002) - (1 - np.exp(-0.002)) / 2) < 1e-12
    assert epg_from_b(0.0) == 0.0


def test_net_epg_worked_example():
    r = net_epg((0.0039, 0.0011), (0.0013, 0.0002))
    assert round(r.value, 4) == 0.0026
    assert round(r.uncertainty, 4) == 0.0011
    assert r.uncertainty == pytest.approx(np.hypot(0.0011, 0.0002))
    assert r.upper_bound is None


def test_net_epg_negative_becomes_upper_bound():
    r = net_epg((0.001, 0.0005), (0.0012, 0.0002))
    assert r.value < 0
    assert r.upper_bound == pytest.approx(r.value + r.uncertainty)


def test_net_epg_accepts_fits():
    fit = fit_decay(synthetic())
    r = net_epg(fit, (0.0, 0.0))
    assert r.value == fit.epg and r.uncertainty == pytest.approx(fit.epg_err)
    flat = fit_decay(DecayCurve(np.array([1.0, 10, 100]), np.ones(3), np.full(3, 1e-3), np.ones(3)))
    with pytest.raises(ValueError):
        net_epg(flat, (0.0, 0.0))
