"""Weighted sum-rate bounds for the two-user fading Gaussian broadcast channel."""

from .bounds import (
    BoundReport,
    ConditionFailed,
    Mechanism,
    Order,
    RatePoint,
    Reason,
    achievable_pair,
    achievable_wsr,
    evaluate_bound,
    outer_value,
    region_sweep,
    tightness,
    trivial_outer,
)
from .channel import BoundQuery, Channel, ChannelError, FadePmf, load_channel, validate_channel
from .constructions import degraded_certificate, thm2_certificate, thm2_condition, thm3_conditions
from .feasibility import (
    CouplingMatrix,
    Infeasible,
    build_feasibility_program,
    check_certificate,
    solve_feasibility,
)
from .kernel import Case, CaseClassification, classify_case, constant_C, r_eval

__all__ = [
    "BoundQuery", "BoundReport", "Case", "CaseClassification", "Channel", "ChannelError",
    "ConditionFailed", "CouplingMatrix", "FadePmf", "Infeasible", "Mechanism", "Order",
    "RatePoint", "Reason", "achievable_pair", "achievable_wsr", "build_feasibility_program",
    "check_certificate", "classify_case", "constant_C", "degraded_certificate",
    "evaluate_bound", "load_channel", "outer_value", "r_eval", "region_sweep",
    "solve_feasibility", "thm2_certificate", "thm2_condition", "thm3_conditions",
    "tightness", "trivial_outer", "validate_channel",
]
