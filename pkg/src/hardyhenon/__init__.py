"""Backward self-similar blow-up profiles of the Hardy–Hénon heat equation."""

from .exponents import (
    UNBOUNDED,
    RegimeParams,
    lepin_gap,
    p_joseph_lundgren,
    p_lepin,
    p_sobolev,
    predicted_multiplicity,
    profile_constants,
)

__version__ = "0.1.0"
