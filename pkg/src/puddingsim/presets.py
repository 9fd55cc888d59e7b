"""Named coherence presets and the reference gate timings.

Values are the room-temperature and 4 K coherence constants of natural
abundance (``elsc``) and 12C-enriched (``c12``) diamond.  Entries quoted only
as a lower bound (``T1 >> 60 s``) are stored as ``inf`` with the bound kept in
``t1_lower_bound``; entries that were not measured are ``None``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

INF = float("inf")


@dataclass(frozen=True)
class Coherence:
    t1: float | None = None
    t2: float | None = None
    t2star: float | None = None
    t1_lower_bound: float | None = None


@dataclass(frozen=True)
class Preset:
    name: str
    electron: Coherence
    nuclear: Coherence

    def override(self, **kw) -> "Preset":
        """Replace fields, e.g. ``override(electron_t2star=5e-6)``."""
        e, n = self.electron, self.nuclear
        for key, value in kw.items():
            who, _, attr = key.partition("_")
            if who == "electron":
                e = replace(e, **{attr: value})
            elif who == "nuclear":
                n = replace(n, **{attr: value})
            else:
                raise KeyError(f"unknown preset field {key!r}")
        return replace(self, electron=e, nuclear=n)


PRESETS = {
    "elsc-300k": Preset(
        "elsc-300k",
        electron=Coherence(t1=5.7e-3, t2=4e-5, t2star=2.99e-6),
        nuclear=Coherence(t2star=3.21e-3),
    ),
    "elsc-4k": Preset(
        "elsc-4k",
        electron=Coherence(t1=INF, t2=4e-5, t2star=2.99e-6, t1_lower_bound=60.0),
        nuclear=Coherence(t1=INF, t2star=7.35e-3, t1_lower_bound=60.0),
    ),
    "c12-300k": Preset(
        "c12-300k",
        electron=Coherence(t1=2.22e-3, t2=429e-6, t2star=12.85e-6),
        nuclear=Coherence(t1=100.0, t2=3.33e-3),
    ),
    "c12-4k": Preset(
        "c12-4k",
        electron=Coherence(t1=INF, t2=1.8e-3, t2star=3e-4, t1_lower_bound=60.0),
        nuclear=Coherence(t1=INF, t2=5.7, t2star=0.55, t1_lower_bound=60.0),
    ),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


# -- gate timing -----------------------------------------------------------

NUCLEAR_PI_TIME = 13e-6
"""Simple-pulse pi time of the single-qubit (nuclear) gates, seconds."""

PUDDING_DURATION_UNITS = 18.917806653555  # PUDDING length in units of 2 pi / Delta
TWO_QUBIT_PUDDING_TIME = 6.24e-6
TWO_QUBIT_DELTA = 2 * np.pi * PUDDING_DURATION_UNITS / TWO_QUBIT_PUDDING_TIME
"""Conditional shift (rad/s) that makes the two-qubit PUDDING 6.24 us long."""


@dataclass(frozen=True)
class TableEntry:
    qubits: int
    protocol: str
    sample: str
    epg: float
    gate_time: float


PUBLISHED_TABLE = (
    TableEntry(1, "unprotected", "elsc", 2.93e-3, 6.5e-6),
    TableEntry(1, "unprotected", "c12", 1.9e-4, 6.5e-6),
    TableEntry(1, "pudding", "elsc", 3.2e-4, 5.8e-5),
    TableEntry(1, "pudding", "c12", 2e-7, 5.8e-5),
    TableEntry(2, "unprotected", "elsc", 3.7e-2, 2.32e-7),
    TableEntry(2, "unprotected", "c12", 4e-4, 2.32e-7),
    TableEntry(2, "pudding", "elsc", 4.5e-3, 6.24e-6),
    TableEntry(2, "pudding", "c12", 1.2e-5, 6.24e-6),
)
