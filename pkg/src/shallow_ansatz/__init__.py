"""Shallow non-unitary rewrites of CX-ladder ansatz circuits."""

__version__ = "0.1.0"

from .ansatz import AnsatzSpec, CoreKind, build_ansatz, build_core
from .circuit import Circuit, schedule_asap, validate
from .noise import NoiseParams, budget_closed_form, budget_from_schedule, fidelity_lower_bound, lambda_total
from .rewrite import rewrite_deferred, rewrite_ladder
from .simulator import StateVector, channel_equivalent, run

__all__ = [
    "AnsatzSpec",
    "Circuit",
    "CoreKind",
    "NoiseParams",
    "StateVector",
    "budget_closed_form",
    "budget_from_schedule",
    "build_ansatz",
    "build_core",
    "channel_equivalent",
    "fidelity_lower_bound",
    "lambda_total",
    "rewrite_deferred",
    "rewrite_ladder",
    "run",
    "schedule_asap",
    "validate",
]
