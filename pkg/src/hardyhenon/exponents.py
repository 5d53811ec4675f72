"""Critical exponents, derived constants and theory predictions.

Everything here is closed-form arithmetic in double precision.  An infinite
exponent is returned as the :data:`UNBOUNDED` singleton rather than a float
sentinel, so callers can branch on finiteness explicitly while ordinary
comparisons against floats still work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

from .errors import ConsistencyError, DiscriminantNegative, DomainError

__all__ = [
    "UNBOUNDED",
    "Unbounded",
    "Exponent",
    "is_finite",
    "RegimeParams",
    "DerivedConstants",
    "TheoryPrediction",
    "p_sobolev",
    "p_joseph_lundgren",
    "p_joseph_lundgren_forms",
    "p_lepin",
    "profile_constants",
    "lepin_gap",
    "zero_count_from_gap",
    "predicted_multiplicity",
    "conjectured_nonexistence",
    "theory_summary",
]

# Relative agreement demanded between the two closed forms of p_JL.
JL_FORM_RTOL = 1e-12


class Unbounded:
    """Tagged +infinity.

    Compares greater than every real number and equal only to itself (or to
    ``math.inf``).  ``float(UNBOUNDED)`` gives ``inf`` for plotting and CSV.
    """

    _instance: "Unbounded | None" = None

    def __new__(cls) -> "Unbounded":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "UNBOUNDED"

    def __str__(self) -> str:
        return "inf"

    def __float__(self) -> float:
        return math.inf

    def __hash__(self) -> int:
        return hash(math.inf)

    def __eq__(self, other: object) -> bool:
        if other is self:
            return True
        if isinstance(other, (int, float)):
            return math.isinf(other) and other > 0
        return NotImplemented

    def __ne__(self, other: object) -> bool:
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __lt__(self, other: object) -> bool:
        if isinstance(other, (int, float, Unbounded)):
            return False
        return NotImplemented

    def __le__(self, other: object) -> bool:
        if isinstance(other, (int, float, Unbounded)):
            return self == other
        return NotImplemented

    def __gt__(self, other: object) -> bool:
        if isinstance(other, (int, float, Unbounded)):
            return not self == other
        return NotImplemented

    def __ge__(self, other: object) -> bool:
        if isinstance(other, (int, float, Unbounded)):
            return True
        return NotImplemented


UNBOUNDED = Unbounded()
Exponent = Union[float, Unbounded]


def is_finite(value: Exponent) -> bool:
    return not isinstance(value, Unbounded)


def _check_sigma(sigma: float) -> None:
    if not math.isfinite(sigma) or sigma <= -2.0:
        raise DomainError(f"sigma must be a finite number > -2, got {sigma!r}")


def _check_dimension(N: int, minimum: int) -> None:
    if int(N) != N or N < minimum:
        raise DomainError(f"dimension N must be an integer >= {minimum}, got {N!r}")


# ---------------------------------------------------------------------------
# critical exponents


def p_sobolev(N: int, sigma: float) -> Exponent:
    """Hardy–Sobolev exponent (N+2σ+2)/(N−2); unbounded for N in {1, 2}."""
    _check_dimension(N, 1)
    _check_sigma(sigma)
    if N <= 2:
        return UNBOUNDED
    return (N + 2.0 * sigma + 2.0) / (N - 2.0)


def p_joseph_lundgren_forms(N: int, sigma: float) -> tuple[float, float]:
    """Both closed forms of the Joseph–Lundgren exponent (requires N > 10+4σ).

    The first is the rational expression with a square root in the numerator,
    the second the compact ``1 + 2(σ+2)/(N−4−σ−R)`` with R = √((2N+σ−2)(σ+2)).
    """
    _check_dimension(N, 3)
    _check_sigma(sigma)
    if not N > 10.0 + 4.0 * sigma:
        raise DomainError("p_JL is finite only for N > 10 + 4*sigma")
    s2 = sigma + 2.0
    num = (N - 2.0) ** 2 - 2.0 * (N + sigma) * s2 + 2.0 * s2 * math.sqrt((N + sigma) ** 2 - (N - 2.0) ** 2)
    den = (N - 2.0) * (N - 10.0 - 4.0 * sigma)
    form1 = num / den
    R = math.sqrt((2.0 * N + sigma - 2.0) * s2)
    form2 = 1.0 + 2.0 * s2 / (N - 4.0 - sigma - R)
    return form1, form2


def p_joseph_lundgren(N: int, sigma: float) -> Exponent:
    """Joseph–Lundgren exponent; unbounded when N ≤ 10+4σ.

    Both closed forms are evaluated and must agree; a disagreement raises
    :class:`ConsistencyError`.
    """
    _check_dimension(N, 3)
    _check_sigma(sigma)
    if not N > 10.0 + 4.0 * sigma:
        return UNBOUNDED
    form1, form2 = p_joseph_lundgren_forms(N, sigma)
    # both forms cancel catastrophically as N approaches 10+4σ; widen the check by that conditioning
    cond = max(1.0, N / (N - 10.0 - 4.0 * sigma))
    if abs(form1 - form2) > JL_FORM_RTOL * cond * abs(form2):
        raise ConsistencyError(f"p_JL forms disagree at N={N}, sigma={sigma}: {form1!r} vs {form2!r}")
    return form2


def _lepin_level(N: int, sigma: float, j: int) -> float:
    """p_{L,j}(σ) = (σ−2j)(N−2+σ−2j)/((N−2)(σ−2j)+4(j+1)²), meaningful for σ ≥ 2j."""
    d = sigma - 2.0 * j
    return d * (N - 2.0 + d) / ((N - 2.0) * d + 4.0 * (j + 1) ** 2)


def p_lepin(N: int, sigma: float, j: int = 1) -> Exponent:
    """Lepin-type upper exponent.

    * ``j = 1``, σ in (0, 2): p_L(σ), unbounded unless N > 2(10−σ)/(2−σ);
    * ``j = 1``, σ in (−2, 0): p̄_L(σ), unbounded unless N > (2σ−4)/σ;
    * ``j = 1``, σ = 0: 1 + 6/(N−10) (unbounded for N ≤ 10);
    * σ ≥ 2j: the level-j exponent p_{L,j}(σ), which lies below p_S(σ).

    Level ``j ≥ 2`` with σ < 2j has no closed form and raises DomainError.
    """
    _check_dimension(N, 3)
    _check_sigma(sigma)
    if int(j) != j or j < 1:
        raise DomainError(f"level j must be an integer >= 1, got {j!r}")
    if sigma >= 2.0 * j:
        return _lepin_level(N, sigma, j)
    if j != 1:
        raise DomainError(f"level-{j} Lepin exponent requires sigma >= {2 * j}")
    if sigma > 0.0:
        if N > 2.0 * (10.0 - sigma) / (2.0 - sigma):
            return (2.0 - sigma) * (N + sigma - 4.0) / (N * (2.0 - sigma) - 2.0 * (10.0 - sigma))
        return UNBOUNDED
    if sigma == 0.0:
        return 1.0 + 6.0 / (N - 10.0) if N > 10 else UNBOUNDED
    if N > (2.0 * sigma - 4.0) / sigma:
        return sigma * (N - 2.0 + sigma) / (sigma * (N - 2.0) + 4.0)
    return UNBOUNDED


# ---------------------------------------------------------------------------
# parameters and derived constants


@dataclass(frozen=True)
class RegimeParams:
    """Validated (N, σ, p) triple."""

    N: int
    sigma: float
    p: float

    def __post_init__(self) -> None:
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 3:
            raise DomainError(f"N must be an integer >= 3, got {self.N!r}")
        _check_sigma(self.sigma)
        if not math.isfinite(self.p) or self.p <= 1.0:
            raise DomainError(f"p must be a finite number > 1, got {self.p!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "p", float(self.p))

    @property
    def alpha(self) -> float:
        return (self.sigma + 2.0) / (2.0 * (self.p - 1.0))

    @property
    def y_stat(self) -> float:
        """Y-coordinate of the stationary line, −(σ+2)/(p−1)."""
        return -(self.sigma + 2.0) / (self.p - 1.0)

    @property
    def supercritical_jl(self) -> bool:
        """True when N > 10+4σ and p > p_JL(σ)."""
        pjl = p_joseph_lundgren(self.N, self.sigma)
        return is_finite(pjl) and self.p > pjl

    def as_dict(self) -> dict:
        return {"N": self.N, "sigma": self.sigma, "p": self.p}


@dataclass(frozen=True)
class DerivedConstants:
    alpha: float
    C_sigma: float
    Z0: float
    A: float
    B: float


def _z0_value(N: int, sigma: float, p: float) -> float:
    return (sigma + 2.0) * ((N - 2.0) * p - (N + sigma)) / (p - 1.0) ** 2


def profile_constants(params: RegimeParams) -> DerivedConstants:
    """α, C(σ), Z0, A and B for the given regime.

    Requires (N−2)p > N+σ so that the stationary amplitude exists.
    """
    N, s, p = params.N, params.sigma, params.p
    if not (N - 2.0) * p > N + s:
        raise DomainError("stationary amplitude C(sigma) needs (N-2)p > N+sigma")
    Z0 = _z0_value(N, s, p)
    try:
        C = Z0 ** (1.0 / (p - 1.0))
    except OverflowError:  # p very close to 1: the amplitude is not representable
        C = math.inf
    A = N - 2.0 - 2.0 * (s + 2.0) / (p - 1.0)
    B = (s + 2.0) * (N - 2.0 - (s + 2.0) / (p - 1.0))
    return DerivedConstants(alpha=params.alpha, C_sigma=C, Z0=Z0, A=A, B=B)


# ---------------------------------------------------------------------------
# predictions


@dataclass(frozen=True)
class TheoryPrediction:
    p_S: Exponent
    p_JL: Exponent
    p_L_or_pbarL: Exponent
    lepin_gap: float | None
    zero_count: int | None
    existence: bool
    multiplicity_lower_bound: int
    conjectured_nonexistence: bool
    notes: tuple[str, ...] = field(default_factory=tuple)


def zero_count_from_gap(gap: float) -> int:
    """j+2 for 4(j+1) < gap ≤ 4(j+2); gaps in (0, 4] give 1."""
    if gap <= 4.0:
        return 1
    return max(2, math.ceil(gap / 4.0))


def _lepin_coefficients(params: RegimeParams) -> tuple[float, float]:
    N, s, p = params.N, params.sigma, params.p
    A = N - 2.0 - 2.0 * (s + 2.0) / (p - 1.0)
    B = (s + 2.0) * (N - 2.0 - (s + 2.0) / (p - 1.0))
    return A, B


def _gap(params: RegimeParams) -> float:
    A, B = _lepin_coefficients(params)
    disc = A * A - 4.0 * B
    if disc < 0.0:
        # tolerate rounding right at p = p_JL
        if disc >= -1e-9 * A * A:
            disc = 0.0
        else:
            raise DiscriminantNegative(f"A^2-4B = {disc:.6g} < 0 (p below p_JL)")
    return A - math.sqrt(disc)


def _interm13(N: int, sigma: float) -> bool:
    """N ≥ 2(2−σ)/(σ+2), the extra dimension condition for σ in (−2, 0)."""
    return N >= 2.0 * (2.0 - sigma) / (sigma + 2.0)


def predicted_multiplicity(params: RegimeParams) -> int:
    """Number of self-similar profiles guaranteed by the existence theorems (0 = none applies)."""
    N, s, p = params.N, params.sigma, params.p
    pjl = p_joseph_lundgren(N, s)
    if not is_finite(pjl) or not p > pjl:
        return 0
    if s >= 2.0:
        return int(math.floor((s + 2.0) / 4.0))
    if 0.0 < s < 2.0:
        return 1 if p < p_lepin(N, s, 1) else 0
    if -2.0 < s < 0.0:
        return 1 if (_interm13(N, s) and p < p_lepin(N, s, 1)) else 0
    return 0


def conjectured_nonexistence(params: RegimeParams) -> bool:
    """True where non-existence is expected but unproven (p at or above p_L / p̄_L)."""
    N, s, p = params.N, params.sigma, params.p
    if 0.0 < s < 2.0 or -2.0 < s < 0.0:
        return p >= p_lepin(N, s, 1)
    return False


def lepin_gap(params: RegimeParams) -> TheoryPrediction:
    """Gap A − √(A²−4B), its zero-count bracket and the existence flag (gap > 8).

    Raises :class:`DiscriminantNegative` below p_JL.
    """
    gap = _gap(params)
    return _prediction(params, gap)


def theory_summary(params: RegimeParams) -> TheoryPrediction:
    """Like :func:`lepin_gap`, but reports a missing gap instead of raising."""
    try:
        gap: float | None = _gap(params)
    except DiscriminantNegative:
        gap = None
    return _prediction(params, gap)


def _prediction(params: RegimeParams, gap: float | None) -> TheoryPrediction:
    N, s = params.N, params.sigma
    notes: list[str] = []
    if -2.0 < s < 0.0 and not _interm13(N, s):
        notes.append("outside theorem hypotheses: N < 2(2-sigma)/(sigma+2)")
    if gap is None:
        notes.append("discriminant negative: oscillatory tail")
    return TheoryPrediction(
        p_S=p_sobolev(N, s),
        p_JL=p_joseph_lundgren(N, s),
        p_L_or_pbarL=p_lepin(N, s, 1),
        lepin_gap=gap,
        zero_count=None if gap is None else zero_count_from_gap(gap),
        existence=gap is not None and gap > 8.0,
        multiplicity_lower_bound=predicted_multiplicity(params),
        conjectured_nonexistence=conjectured_nonexistence(params),
        notes=tuple(notes),
    )
