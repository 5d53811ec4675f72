"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "DomainError",
    "SingularityError",
    "DiscriminantNegative",
    "BracketInvalid",
    "ConsistencyError",
]


class DomainError(ValueError):
    """An input lies outside the domain where a formula or transform is defined."""


class SingularityError(DomainError):
    """A vector field was evaluated at a singular point (e.g. xi = 0)."""


class DiscriminantNegative(DomainError):
    """A^2 - 4B < 0: the tail of the linearized equation oscillates (p below p_JL)."""


class BracketInvalid(ValueError):
    """Both ends of a shooting bracket carry the same label."""


class ConsistencyError(RuntimeError):
    """Two independent evaluations of the same quantity disagree."""
