"""Pulse-level simulation of error-protected single- and two-qubit gates.

The package builds composite pulse sequences (simple, derivative-nulling and
zero-area conditional gates), solves for their parameters, propagates them
under systematic and stochastic noise, and benchmarks them with randomized
benchmarking.
"""

from .gates import (
    CONDITIONAL_FAMILIES,
    ConditionalGateSpec,
    build_conditional,
    conditional_spec,
    evaluate_conditional,
    landscape,
    pudding,
    pzap,
    rect_gate,
    seven_pulse,
    u5a_pi,
    walsh1_zap,
    walsh3_zap,
)
from .noise import (
    Composite,
    Dynamical1f,
    QuasiStaticAmplitude,
    QuasiStaticDetuning,
    Systematic,
    calibrate,
    monte_carlo_epg,
)
from .rb import RBConfig, RepeatConfig, fit_decay, net_epg, rb_run, two_qubit_repeat_run
from .sequence import PulseSegment, PulseSequence, propagate
from .solver import derivative_null_report, magnus_check, seven_pulse_params, solve_augmenting, walsh3_params
from .unitary import ErrorPair, frobenius_epg, phase_aligned_epg

__version__ = "0.1.0"

__all__ = [
    "CONDITIONAL_FAMILIES", "Composite", "ConditionalGateSpec", "Dynamical1f", "ErrorPair", "PulseSegment",
    "PulseSequence", "QuasiStaticAmplitude", "QuasiStaticDetuning", "RBConfig", "RepeatConfig", "Systematic",
    "build_conditional", "calibrate", "conditional_spec", "derivative_null_report", "evaluate_conditional",
    "fit_decay", "frobenius_epg", "landscape", "magnus_check", "monte_carlo_epg", "net_epg", "phase_aligned_epg",
    "propagate", "pudding", "pzap", "rb_run", "rect_gate", "seven_pulse", "seven_pulse_params",
    "solve_augmenting", "two_qubit_repeat_run", "u5a_pi", "walsh1_zap", "walsh3_params", "walsh3_zap",
]
