"""Data products: T2* sweeps, the projection table and the protection table."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .gates import build_conditional, conditional_spec, rect_gate, seven_pulse, u5a_pi
from .noise import (
    Composite,
    QuasiStaticAmplitude,
    QuasiStaticDetuning,
    Systematic,
    calibrate,
    conditional_case,
    monte_carlo_epg,
    single_qubit_case,
)
from .presets import NUCLEAR_PI_TIME, PUBLISHED_TABLE, TWO_QUBIT_DELTA, get_preset
from .rb import clifford_group, compile_clifford, make_gateset, mean_gate_time
from .sequence import propagate
from .solver import derivative_null_report

GATESETS = ("unprotected-1q", "pudding-1q", "walsh1-2q", "pudding-2q")


@dataclass(frozen=True)
class GateSetCases:
    name: str
    cases: tuple
    mean_duration: float


@lru_cache(maxsize=None)
def gateset_cases(name: str, pi_time: float = NUCLEAR_PI_TIME, delta: float = TWO_QUBIT_DELTA) -> GateSetCases:
    """Noise-free targets for a named gate set.

    Single-qubit sets are the 24 compiled Cliffords (pure-Z elements are
    frame updates and contribute zero error); two-qubit sets are one
    conditional gate evaluated on both control subspaces.
    """
    if name in ("unprotected-1q", "pudding-1q"):
        gs = make_gateset(name.split("-")[0], pi_time)
        cases = []
        for c in clifford_group():
            seq, _ = compile_clifford(c, gs)
            cases.append(single_qubit_case(seq, propagate(seq)))
        return GateSetCases(name, tuple(cases), mean_gate_time(gs))
    if name in ("walsh1-2q", "pudding-2q"):
        fam = name.split("-")[0]
        seq = build_conditional(fam, delta)
        return GateSetCases(name, (conditional_case(seq, conditional_spec(fam, delta, seq)),), seq.duration)
    raise ValueError(f"unknown gate set {name!r}; choose from {', '.join(GATESETS)}")


def noise_model(t2star: float, t2: float | None = None, sigma_alpha: float = 0.0, systematic_eps: float = 0.0):
    """Quasi-static model for ``t2 is None``, otherwise a calibrated 1/f model,
    plus optional random and systematic amplitude errors."""
    parts = [QuasiStaticDetuning(t2star) if t2 is None else calibrate(t2star, t2)]
    if sigma_alpha > 0:
        parts.append(QuasiStaticAmplitude(sigma_alpha))
    if systematic_eps != 0:
        parts.append(Systematic(eps=systematic_eps))
    return Composite(tuple(parts))


@dataclass(frozen=True)
class SweepRow:
    t2star: float
    epg: float
    stderr: float
    gateset: str


def _sweep_point(task) -> SweepRow:
    name, tag, t2s, t2, sigma_alpha, systematic_eps, pi_time, delta, n, seed = task
    cases = gateset_cases(name, pi_time, delta).cases
    model = noise_model(t2s, t2, sigma_alpha, systematic_eps)
    r = monte_carlo_epg(list(cases), model, n, seed)
    return SweepRow(t2s, r.mean_epg, r.stderr, tag)


def sweep_t2star(gatesets, t2star_values, n_realizations: int = 200, seed: int = 0, t2_values=(None,),
                 sigma_alpha: float = 0.0, systematic_eps: float = 0.0, pi_time: float = NUCLEAR_PI_TIME,
                 delta: float = TWO_QUBIT_DELTA, workers: int = 1) -> list[SweepRow]:
    """Monte-Carlo EPG against T2* for every gate set and T2 value.

    Points with ``T2* > T2`` are skipped.  Variants are tagged in the gate-set
    column, e.g. ``pudding-2q[t2=4e-05]``.  Every point uses the same seed, so
    the output does not depend on ``workers``.
    """
    tasks = []
    for name in gatesets:
        gateset_cases(name, pi_time, delta)  # validate early
        for t2 in t2_values:
            tag = name
            if t2 is not None:
                tag += f"[t2={t2:.6g}]"
            if sigma_alpha > 0:
                tag += f"[sigma_alpha={sigma_alpha:.6g}]"
            if systematic_eps != 0:
                tag += f"[eps={systematic_eps:.6g}]"
            for t2s in t2star_values:
                if t2 is not None and t2s > t2:
                    continue
                tasks.append((name, tag, float(t2s), t2, sigma_alpha, systematic_eps, pi_time, delta,
                              n_realizations, seed))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_point, tasks))
    return [_sweep_point(t) for t in tasks]


def sweep_csv(rows) -> str:
    lines = ["t2star,epg,stderr,gateset"]
    lines += [f"{r.t2star:.17e},{r.epg:.17e},{r.stderr:.17e},{r.gateset}" for r in rows]
    return "\n".join(lines) + "\n"


def loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


# -- projection table --------------------------------------------------------

_PROJECTION_PRESET = {"elsc": "elsc-300k", "c12": "c12-4k"}


@dataclass(frozen=True)
class ProjectionRow:
    qubits: int
    protocol: str
    sample: str
    preset: str
    model: str
    epg: float
    stderr: float
    published_epg: float
    gate_time: float
    published_gate_time: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def project(n_realizations: int = 200, seed: int = 0, sigma_alpha: float = 0.0,
            presets: dict | None = None) -> list[ProjectionRow]:
    """Simulated EPG for every published gate-set entry beside the published numbers.

    Single-qubit gates see the nuclear coherence of the preset, two-qubit
    gates the electron coherence; a 1/f model is used whenever T2 is known.
    """
    presets = presets or _PROJECTION_PRESET
    rows = []
    for entry in PUBLISHED_TABLE:
        preset = get_preset(presets[entry.sample])
        coh = preset.nuclear if entry.qubits == 1 else preset.electron
        if coh.t2star is None:
            raise ValueError(f"preset {preset.name} has no T2* for the {'nuclear' if entry.qubits == 1 else 'electron'} spin")
        gs_name = f"{'walsh1' if entry.protocol == 'unprotected' and entry.qubits == 2 else entry.protocol}-{entry.qubits}q"
        gsc = gateset_cases(gs_name)
        model = noise_model(coh.t2star, coh.t2, sigma_alpha)
        r = monte_carlo_epg(list(gsc.cases), model, n_realizations, seed)
        label = "quasi-static" if coh.t2 is None else "1/f"
        rows.append(ProjectionRow(entry.qubits, entry.protocol, entry.sample, preset.name, label, r.mean_epg,
                                  r.stderr, entry.epg, gsc.mean_duration, entry.gate_time))
    return rows


def projection_csv(rows) -> str:
    cols = ["qubits", "protocol", "sample", "preset", "model", "epg", "stderr", "published_epg", "gate_time",
            "published_gate_time"]
    lines = [",".join(cols)]
    for r in rows:
        d = r.to_dict()
        lines.append(",".join(f"{d[c]:.6e}" if isinstance(d[c], float) else str(d[c]) for c in cols))
    return "\n".join(lines) + "\n"


# -- protection table ---------------------------------------------------------

PROTECTION_CLAIMS = {
    # gate set: (systematic detuning, systematic amplitude, random detuning, random amplitude) orders
    "pudding-2q": (2, 2, 2, 2),
    "pudding-1q": (2, 2, 2, 2),
    "walsh1-2q": (1, 1, 1, 1),
    "unprotected-1q": (1, 1, 1, 1),
}

CHANNELS = ("systematic-detuning", "systematic-amplitude", "random-detuning", "random-amplitude")


def _channel_epg(cases, channel: str, x: float, scale: float, n_realizations: int, seed: int) -> float:
    if channel == "systematic-detuning":
        model = Systematic(detuning=x * scale)
    elif channel == "systematic-amplitude":
        model = Systematic(eps=x)
    elif channel == "random-detuning":
        model = QuasiStaticDetuning(1.0 / (x * scale))
    else:
        model = QuasiStaticAmplitude(x)
    return monte_carlo_epg(list(cases), model, n_realizations, seed).mean_epg


def protection_orders(gatesets=GATESETS, levels=(1e-4, 1e-3), n_realizations: int = 50, seed: int = 0) -> dict:
    """Measured power law of EPG in each error channel.

    Detuning errors are in units of the gate's natural frequency scale (the
    simple-pulse Rabi frequency for single-qubit sets, Delta for two-qubit
    sets).  The order is the log-log slope between the two ``levels``.
    """
    out = {}
    for name in gatesets:
        gsc = gateset_cases(name)
        scale = np.pi / NUCLEAR_PI_TIME if name.endswith("1q") else TWO_QUBIT_DELTA
        orders = []
        for ch in CHANNELS:
            ys = [_channel_epg(gsc.cases, ch, x, scale, n_realizations, seed) for x in levels]
            orders.append(loglog_slope(levels, ys))
        out[name] = dict(zip(CHANNELS, orders))
    return out


def protection_table(orders: dict) -> str:
    """Markdown table of measured orders beside the published ones."""
    head = "| channel | " + " | ".join(orders) + " |"
    sep = "|---|" + "---|" * len(orders)
    lines = [head, sep]
    for i, ch in enumerate(CHANNELS):
        cells = []
        for name, vals in orders.items():
            claim = PROTECTION_CLAIMS.get(name, (None,) * 4)[i]
            cells.append(f"{vals[ch]:.2f} (published {claim})")
        lines.append(f"| {ch} | " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def derivative_rows(metric: str = "raw", step: float = 1e-4, delta: float = TWO_QUBIT_DELTA) -> list[dict]:
    """First-derivative sensitivities of the building blocks of each gate set.

    A vanishing ``d_eps``/``d_eta`` means the EPG starts at second order in
    that error.  Two-qubit gates are reported on both control subspaces with
    eta in units of Delta.
    """
    rabi = np.pi / NUCLEAR_PI_TIME
    rows = []
    for gs, label, seq in (
        ("unprotected-1q", "rect-pi", rect_gate(np.pi, 0.0, rabi)),
        ("unprotected-1q", "rect-pi/2", rect_gate(np.pi / 2, 0.0, rabi)),
        ("pudding-1q", "u5a", u5a_pi(rabi)),
        ("pudding-1q", "seven-pulse(pi/2)", seven_pulse(np.pi / 2, rabi)),
    ):
        r = derivative_null_report(seq, scale=rabi, step=step, metric=metric)
        rows.append({"gateset": gs, "gate": label, "subspace": "single", "d_eps": r.d_eps, "d_eta": r.d_eta})
    for gs in ("walsh1-2q", "pudding-2q"):
        fam = gs.split("-")[0]
        seq = build_conditional(fam, delta)
        spec = conditional_spec(fam, delta, seq)
        for sub, det, tgt in (("resonant", 0.0, spec.resonant_target), ("detuned", delta, spec.detuned_target)):
            r = derivative_null_report(seq, tgt, det, delta, step, sub, metric)
            rows.append({"gateset": gs, "gate": fam, "subspace": sub, "d_eps": r.d_eps, "d_eta": r.d_eta})
    return rows


def protection_report(orders: dict, derivs: list[dict]) -> str:
    """Protection table plus the derivative checks it is built from."""
    lines = ["# Protection orders (log-log EPG slope per error channel)", "", protection_table(orders).rstrip(), "",
             "# First derivatives of EPG", "", "| gate set | gate | subspace | dEPG/deps | dEPG/deta |",
             "|---|---|---|---|---|"]
    for d in derivs:
        lines.append(f"| {d['gateset']} | {d['gate']} | {d['subspace']} | {d['d_eps']:.3e} | {d['d_eta']:.3e} |")
    return "\n".join(lines) + "\n"
