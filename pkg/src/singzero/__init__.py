"""Deflation, refinement and interval certification of singular zeros."""

from .deflation import DeflatedSystem, DeflationError, cdss, rank_guess_pipeline
from .polycore import Polynomial, PolySystem
from .refine import Convergence, Diagnosis, Verdict, adaptive_refine, newton_refine
from .textio import format_system, parse_system
from .verify import VerificationFailed, VerifiedInclusion, krawczyk_verify

__all__ = [
    "Convergence",
    "DeflatedSystem",
    "DeflationError",
    "Diagnosis",
    "PolySystem",
    "Polynomial",
    "VerificationFailed",
    "Verdict",
    "VerifiedInclusion",
    "adaptive_refine",
    "cdss",
    "format_system",
    "krawczyk_verify",
    "newton_refine",
    "parse_system",
    "rank_guess_pipeline",
]
