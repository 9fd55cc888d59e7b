"""Command-line entry point.

Every subcommand is driven by a :class:`RunConfig`, built from defaults, an
optional flat JSON file (``--config``) and the global flags, in that order.

Frequencies in config files are given in Hz (keys ending in ``_hz``) and are
converted to angular units exactly once, in :func:`hz_to_angular`, when the
config is parsed.  Internally everything is rad/s and seconds.

Errors are reported on stderr as a single JSON line
``{"error": "<kind>", "message": "..."}`` with exit status 2.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import products
from .gates import (
    CONDITIONAL_FAMILIES,
    build_conditional,
    conditional_spec,
    landscape,
    rect_gate,
    seven_pulse,
    u5a_pi,
    write_landscape_csv,
)
from .noise import Composite, QuasiStaticDetuning, calibrate, noiseless
from .presets import NUCLEAR_PI_TIME, PRESETS, TWO_QUBIT_DELTA, get_preset
from .rb import RBConfig, RepeatConfig, fit_decay, log_lengths, rb_run, two_qubit_repeat_run
from .solver import derivative_null_report, solve_augmenting

COMMANDS = ("landscape", "sweep", "rb", "solve", "derivcheck", "project", "report-appendix1")
SINGLE_QUBIT_GATES = ("rect-pi", "u5a", "seven-pulse")


class ConfigError(ValueError):
    """Invalid user configuration."""


def hz_to_angular(value_hz: float) -> float:
    """The only Hz -> rad/s conversion in the command-line layer."""
    return 2 * math.pi * float(value_hz)


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs; serializes to the flat JSON it was read from.

    ``delta`` and ``rabi`` are angular frequencies; in JSON they appear as
    ``delta_hz`` and ``rabi_hz``.
    """

    command: str = "solve"
    seed: int = 0
    out: str | None = None
    metric: str = "raw"
    preset: str | None = None
    workers: int = 1
    # gate
    gate: str = "pudding"
    delta: float = TWO_QUBIT_DELTA
    rabi: float = math.pi / NUCLEAR_PI_TIME
    alpha: float = math.pi / 2
    form: str = "corrected"
    branch: str = "condition-1"
    sign: int = 1
    theta: float = math.pi
    step: float = 1e-4
    # landscape grid
    eps_min: float = -0.2
    eps_max: float = 0.2
    eps_points: int = 81
    eta_min: float = -0.2
    eta_max: float = 0.2
    eta_points: int = 81
    # sweeps and noise
    gatesets: tuple = ("unprotected-1q", "pudding-1q")
    t2star_min: float = 1e-3
    t2star_max: float = 1e-1
    points_per_decade: int = 8
    t2_values: tuple = ()
    sigma_alpha: float = 0.0
    systematic_eps: float = 0.0
    n_realizations: int = 200
    pi_time: float = NUCLEAR_PI_TIME
    t2star: float | None = None
    t2: float | None = None
    # randomized benchmarking
    rb_gateset: str = "unprotected"
    lengths: tuple = ()
    max_length: int = 1000
    n_lengths: int = 8
    trials: int = 200
    depolarizing_p: float | None = None
    t1: float | None = None
    inverse: str = "single"
    fit_form: str = "exp"
    spam_a: float = 1.0
    spam_b: float = 0.0

    _HZ = {"delta_hz": "delta", "rabi_hz": "rabi"}

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        names = {f.name: f for f in fields(cls)}
        kw = {}
        for key, value in data.items():
            if key in cls._HZ:
                if value is None:
                    continue
                kw[cls._HZ[key]] = hz_to_angular(_number(key, value))
            elif key in names and key not in cls._HZ.values():
                kw[key] = tuple(value) if isinstance(value, list) else value
            else:
                raise ConfigError(f"unknown config key {key!r}")
        return cls(**kw).validated()

    def to_dict(self) -> dict:
        d = asdict(self)
        for hz, name in self._HZ.items():
            d[hz] = d.pop(name) / (2 * math.pi)
        return {k: list(v) if isinstance(v, tuple) else v for k, v in sorted(d.items())}

    def validated(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.metric not in ("raw", "aligned"):
            raise ConfigError(f"metric must be raw or aligned, got {self.metric!r}")
        if self.preset is not None and self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}; choose from {', '.join(PRESETS)}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        for name in ("delta", "rabi", "pi_time", "t2star_min", "t2star_max", "step"):
            if not _number(name, getattr(self, name)) > 0:
                raise ConfigError(f"{name} must be positive")
        for name in ("eps_points", "eta_points", "points_per_decade", "n_realizations", "trials", "n_lengths",
                     "max_length", "workers"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.t2star_max < self.t2star_min:
            raise ConfigError("t2star_max must be >= t2star_min")
        if self.fit_form not in ("exp", "survival-p"):
            raise ConfigError("fit_form must be exp or survival-p")
        return self


def _number(name, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


# -- helpers ------------------------------------------------------------------

def _gate_sequence(cfg: RunConfig):
    """Sequence and conditional spec (None for single-qubit gates)."""
    if cfg.gate in CONDITIONAL_FAMILIES:
        kw = {}
        if cfg.gate == "pzap" or cfg.gate == "pudding":
            kw = {"branch": cfg.branch, "sign": cfg.sign}
        elif cfg.gate == "walsh3":
            kw = {"theta": cfg.theta}
        seq = build_conditional(cfg.gate, cfg.delta, **kw)
        return seq, conditional_spec(cfg.gate, cfg.delta, seq)
    if cfg.gate == "rect-pi":
        return rect_gate(math.pi, 0.0, cfg.rabi), None
    if cfg.gate == "u5a":
        return u5a_pi(cfg.rabi), None
    if cfg.gate == "seven-pulse":
        return seven_pulse(cfg.alpha, cfg.rabi, form=cfg.form), None
    raise ConfigError(f"unknown gate {cfg.gate!r}; choose from "
                      f"{', '.join(CONDITIONAL_FAMILIES + SINGLE_QUBIT_GATES)}")


def _explicit_noise(cfg: RunConfig, spin: str):
    """Noise model from explicit T2*/T2 or the preset; noiseless otherwise."""
    t2star, t2 = cfg.t2star, cfg.t2
    if t2star is None and cfg.preset is not None:
        coh = getattr(get_preset(cfg.preset), spin)
        t2star, t2 = coh.t2star, coh.t2 if t2 is None else t2
    if t2star is None:
        return noiseless()
    base = QuasiStaticDetuning(t2star) if t2 is None else calibrate(t2star, t2)
    return Composite((base,))


def _t2star_grid(cfg: RunConfig) -> np.ndarray:
    decades = math.log10(cfg.t2star_max / cfg.t2star_min)
    n = max(int(round(decades * cfg.points_per_decade)) + 1, 1)
    return np.logspace(math.log10(cfg.t2star_min), math.log10(cfg.t2star_max), n)


def _finite(obj):
    """Replace non-finite floats by None so the output is strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def _json(obj) -> str:
    return json.dumps(_finite(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


# -- commands -----------------------------------------------------------------

def cmd_landscape(cfg: RunConfig) -> dict:
    seq, spec = _gate_sequence(cfg)
    if spec is None:
        raise ConfigError(f"landscape needs a conditional gate, got {cfg.gate!r}")
    e, n, res, det = landscape(seq, spec, np.linspace(cfg.eps_min, cfg.eps_max, cfg.eps_points),
                               np.linspace(cfg.eta_min, cfg.eta_max, cfg.eta_points), cfg.metric)
    buf = io.StringIO()
    write_landscape_csv(buf, e, n, res, det)
    return {"": buf.getvalue()}


def cmd_sweep_t2star(cfg: RunConfig) -> dict:
    for name in cfg.gatesets:
        if name not in products.GATESETS:
            raise ConfigError(f"unknown gate set {name!r}; choose from {', '.join(products.GATESETS)}")
    t2_values = tuple(float(t) for t in cfg.t2_values) or (None,)
    rows = products.sweep_t2star(cfg.gatesets, _t2star_grid(cfg), cfg.n_realizations, cfg.seed, t2_values,
                                 cfg.sigma_alpha, cfg.systematic_eps, cfg.pi_time, cfg.delta, cfg.workers)
    return {"": products.sweep_csv(rows)}


def cmd_rb(cfg: RunConfig) -> dict:
    lengths = cfg.lengths or tuple(log_lengths(cfg.max_length, cfg.n_lengths))
    if cfg.rb_gateset in ("unprotected", "pudding"):
        rc = RBConfig(lengths, cfg.trials, cfg.rb_gateset, _explicit_noise(cfg, "nuclear"), cfg.seed, cfg.spam_a,
                      cfg.spam_b, cfg.t1, cfg.pi_time, cfg.depolarizing_p, cfg.inverse)
        curve, d = rb_run(rc), 2
    elif cfg.rb_gateset in ("walsh1-2q", "pudding-2q"):
        rc = RepeatConfig(lengths, cfg.rb_gateset.split("-")[0], cfg.delta, cfg.trials,
                          _explicit_noise(cfg, "electron"), cfg.seed, spam_a=cfg.spam_a, spam_b=cfg.spam_b)
        curve, d = two_qubit_repeat_run(rc).curve, 4
    else:
        raise ConfigError(f"unknown rb_gateset {cfg.rb_gateset!r}")
    fit = fit_decay(curve, cfg.fit_form).to_dict()
    fit["dimension"] = d
    return {"": curve.to_csv(), ".fit.json": _json(fit)}


def cmd_solve(cfg: RunConfig) -> dict:
    sol = solve_augmenting(cfg.branch, cfg.sign, cfg.theta)
    return {"": _json(sol.to_dict())}


def cmd_derivcheck(cfg: RunConfig) -> dict:
    seq, spec = _gate_sequence(cfg)
    if spec is None:
        out = {"single": derivative_null_report(seq, scale=cfg.rabi, step=cfg.step, subspace="single",
                                                metric=cfg.metric).to_dict()}
    else:
        out = {
            "resonant": derivative_null_report(seq, spec.resonant_target, 0.0, cfg.delta, cfg.step, "resonant",
                                               cfg.metric).to_dict(),
            "detuned": derivative_null_report(seq, spec.detuned_target, cfg.delta, cfg.delta, cfg.step,
                                              "detuned", cfg.metric).to_dict(),
        }
    out["gate"] = cfg.gate
    return {"": _json(out)}


def cmd_project(cfg: RunConfig) -> dict:
    presets = None
    if cfg.preset is not None:
        presets = {"elsc": cfg.preset, "c12": cfg.preset}
    rows = products.project(cfg.n_realizations, cfg.seed, cfg.sigma_alpha, presets)
    return {"": products.projection_csv(rows)}


def cmd_report_appendix1(cfg: RunConfig) -> dict:
    orders = products.protection_orders(n_realizations=min(cfg.n_realizations, 50), seed=cfg.seed)
    derivs = products.derivative_rows(cfg.metric, cfg.step, cfg.delta)
    return {"": products.protection_report(orders, derivs)}


HANDLERS = {
    "landscape": cmd_landscape,
    "sweep": cmd_sweep_t2star,
    "rb": cmd_rb,
    "solve": cmd_solve,
    "derivcheck": cmd_derivcheck,
    "project": cmd_project,
    "report-appendix1": cmd_report_appendix1,
}


def run(cfg: RunConfig) -> dict:
    """Execute a validated config; returns ``{suffix: text}`` outputs."""
    return HANDLERS[cfg.command](cfg)


# -- argument parsing -----------------------------------------------------------

def _global_flags(parser: argparse.ArgumentParser) -> None:
    s = argparse.SUPPRESS
    parser.add_argument("--config", default=s, help="flat JSON file of RunConfig fields")
    parser.add_argument("--seed", type=int, default=s, help="master RNG seed")
    parser.add_argument("--out", default=s, help="output path (stdout if omitted)")
    parser.add_argument("--metric", choices=("raw", "aligned"), default=s)
    parser.add_argument("--preset", choices=tuple(PRESETS), default=s)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"usage: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="puddingsim", description=__doc__.splitlines()[0])
    _global_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _global_flags(p)
    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if "config" in args:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc.msg} at line {exc.lineno}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        if any(isinstance(v, dict) for v in data.values()):
            raise ConfigError("config must be flat (no nested objects)")
    data = dict(data, command=args.command)
    for key in ("seed", "out", "metric", "preset"):
        if key in args:
            data[key] = getattr(args, key)
    return RunConfig.from_mapping(data)


def _error(kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": " ".join(str(message).split())}) + "\n")
    return 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ConfigError as exc:
        return _error("usage", exc.args[0])
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        cfg = _load_config(args)
        outputs = run(cfg)
    except (ConfigError, ValueError, KeyError, TypeError) as exc:
        return _error("config", exc.args[0] if exc.args else exc)
    except Exception as exc:  # noqa: BLE001 - surfaced as a one-line error
        return _error(type(exc).__name__, exc)
    for suffix, text in outputs.items():
        if cfg.out is None:
            sys.stdout.write(text)
        else:
            path = Path(cfg.out)
            if suffix:
                path = path.with_name(path.stem + suffix)
            path.write_text(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
