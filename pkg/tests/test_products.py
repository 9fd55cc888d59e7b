import io

import numpy as np
import pytest

from puddingsim.presets import PUBLISHED_TABLE
from puddingsim.products import (
    CHANNELS,
    GATESETS,
    protection_report,
    derivative_rows,
    gateset_cases,
    loglog_slope,
    noise_model,
    project,
    projection_csv,
    protection_orders,
    protection_table,
    sweep_csv,
    sweep_t2star,
)


def epgs(rows, tag):
    return np.array([r.epg for r in rows if r.gateset == tag])


def test_gateset_cases():
    assert len(gateset_cases("unprotected-1q").cases) == 24
    assert len(gateset_cases("pudding-2q").cases) == 1
    with pytest.raises(ValueError):
        gateset_cases("bb1-1q")


def test_noise_model_composition():
    assert len(noise_model(1e-3).parts) == 1
    assert len(noise_model(1e-3, 1e-2, 1e-3, 0.01).parts) == 3


@pytest.mark.parametrize("name, expected", [("unprotected-1q", -1.0), ("pudding-1q", -2.0)])
def test_quasistatic_slopes(name, expected):
    t2s = [1e-2, 1e-1]
    rows = sweep_t2star([name], t2s, n_realizations=60, seed=1)
    assert loglog_slope(t2s, epgs(rows, name)) == pytest.approx(expected, abs=0.2)


def test_finite_t2_floors_are_monotone():
    rows = sweep_t2star(["pudding-2q"], [1e-5], n_realizations=20, t2_values=(4e-5, 1e-3))
    short, long_ = epgs(rows, "pudding-2q[t2=4e-05]"), epgs(rows, "pudding-2q[t2=0.001]")
    assert short[0] > long_[0]


def test_amplitude_noise_plateaus():
    t2s = [1.0]
    out = {}
    for name in ("unprotected-1q", "pudding-1q"):
        ys = [sweep_t2star([name], t2s, n_realizations=40, sigma_alpha=s)[0].epg for s in (1e-3, 1e-2)]
        out[name] = loglog_slope([1e-3, 1e-2], ys)
    assert out["unprotected-1q"] == pytest.approx(1.0, abs=0.15)
    assert out["pudding-1q"] == pytest.approx(2.0, abs=0.2)


def test_sweep_tags_skip_and_csv():
    rows = sweep_t2star(["walsh1-2q"], [1e-5, 1e-3], n_realizations=4, t2_values=(None, 1e-4),
                        sigma_alpha=1e-3, systematic_eps=0.01)
    tags = [r.gateset for r in rows]
    assert tags.count("walsh1-2q[sigma_alpha=0.001][eps=0.01]") == 2
    # T2* = 1e-3 exceeds T2 = 1e-4 and is skipped
    assert tags.count("walsh1-2q[t2=0.0001][sigma_alpha=0.001][eps=0.01]") == 1
    text = sweep_csv(rows)
    assert text.splitlines()[0] == "t2star,epg,stderr,gateset"
    data = np.genfromtxt(io.StringIO(text), delimiter=",", skip_header=1, usecols=(0, 1, 2))
    np.testing.assert_array_equal(data[:, 1], [r.epg for r in rows])


def test_sweep_independent_of_workers():
    kw = dict(gatesets=["unprotected-1q", "walsh1-2q"], t2star_values=[1e-3, 1e-2], n_realizations=4)
    assert sweep_t2star(**kw, workers=1) == sweep_t2star(**kw, workers=2)


def test_projection_rows():
    rows = project(n_realizations=4)
    assert len(rows) == len(PUBLISHED_TABLE)
    times = {(r.qubits, r.protocol): r.gate_time for r in rows}
    assert times[(1, "unprotected")] == pytest.approx(6.5e-6)
    assert times[(1, "pudding")] == pytest.approx(5.85e-5)
    assert times[(2, "unprotected")] == pytest.approx(2.332e-7, rel=1e-3)
    assert times[(2, "pudding")] == pytest.approx(6.24e-6, rel=1e-9)
    assert all(r.epg > 0 for r in rows)
    text = projection_csv(rows)
    assert text.splitlines()[0] == "qubits,protocol,sample,preset,model,epg,stderr,published_epg,gate_time,published_gate_time"
    assert len(text.splitlines()) == 9


def test_protection_orders_and_table():
    orders = protection_orders(["walsh1-2q", "pudding-2q"], n_realizations=10)
    assert orders["walsh1-2q"]["systematic-amplitude"] == pytest.approx(1.0, abs=0.1)
    assert orders["pudding-2q"]["systematic-amplitude"] == pytest.approx(2.0, abs=0.1)
    assert orders["pudding-2q"]["random-detuning"] == pytest.approx(2.0, abs=0.2)
    table = protection_table(orders)
    assert table.count("\n") == 2 + len(CHANNELS)
    assert "(published 2)" in table


def test_derivative_rows():
    rows = {(r["gate"], r["subspace"]): r for r in derivative_rows()}
    assert rows[("rect-pi", "single")]["d_eta"] == pytest.approx(1 / np.sqrt(2), rel=1e-3)
    assert rows[("u5a", "single")]["d_eps"] < 1e-6
    for sub in ("resonant", "detuned"):
        assert rows[("pudding", sub)]["d_eps"] < 1e-5 and rows[("pudding", sub)]["d_eta"] < 1e-5
    assert rows[("walsh1", "detuned")]["d_eps"] > 0.1
    report = protection_report({"walsh1-2q": {c: 1.0 for c in CHANNELS}}, derivative_rows())
    assert report.startswith("# Protection orders")
    assert "| pudding-2q | pudding | detuned |" in report


def test_gatesets_constant():
    assert set(GATESETS) == {"unprotected-1q", "pudding-1q", "walsh1-2q", "pudding-2q"}
