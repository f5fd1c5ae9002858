"""Stability analysis of time-varying systems whose Lyapunov derivative may be indefinite."""

__version__ = "0.1.0"

from .certificates import (Certificate, CertificateError, Envelope, MonotoneExpr, PowerForm, Theorem,
                           envelope_T1, iiss_estimate_T4, iss_envelope_T3)
from .exprlang import VectorField, evaluate, parse, to_text
from .gronwall import DriftPair, gelig_check, gronwall_bound, kappa, majorant_check
from .odesim import InputSignal, Trajectory, simulate
from .quadsig import (ScalarSignal, StabilityClass, StabilityVerdict, classify, integrate, periodic_test,
                      positive_part_integral, transition_factor, verdict_from_pair)
from .sysfile import load_system, parse_system
from .verify import Analysis, analyze, catalog, catalog_entry

__all__ = [
    "__version__", "Certificate", "CertificateError", "Envelope", "MonotoneExpr", "PowerForm", "Theorem",
    "envelope_T1", "iiss_estimate_T4", "iss_envelope_T3", "VectorField", "evaluate", "parse", "to_text",
    "DriftPair", "gelig_check", "gronwall_bound", "kappa", "majorant_check", "InputSignal", "Trajectory",
    "simulate", "ScalarSignal", "StabilityClass", "StabilityVerdict", "classify", "integrate", "periodic_test",
    "positive_part_integral", "transition_factor", "verdict_from_pair", "load_system", "parse_system", "Analysis", "analyze",
    "catalog", "catalog_entry",
]
