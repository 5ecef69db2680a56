"""Closed-form equilibria and their existence conditions.

Each constructor evaluates the fully expanded closed form and an
algebraically equivalent reduced form (solve the x3-, then x1-, then
x2-equation in turn).  The candidate with the smaller vector-field residual
is kept; a disagreement between the two is logged.  This keeps the expanded
formulas in play while guarding against transcription slips and
cancellation at small ``beta``.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams, _rhs

logger = logging.getLogger(__name__)

__all__ = [
    "EquilibriumKind",
    "ExistenceCondition",
    "Equilibrium",
    "vanishing",
    "axial",
    "top_predator_free",
    "coexisting",
    "all_equilibria",
    "equilibrium_of_kind",
    "residual",
    "RESIDUAL_TOL",
]

RESIDUAL_TOL = 1e-9
_AGREE_TOL = 1e-8
# Relative size below which a closed-form denominator is treated as zero.
_SINGULAR_TOL = 1e-12


class EquilibriumKind(enum.Enum):
    VANISHING = "Vanishing"
    AXIAL = "Axial"
    TOP_PREDATOR_FREE = "TopPredatorFree"
    COEXISTING = "Coexisting"

    @classmethod
    def parse(cls, value) -> "EquilibriumKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        aliases = {
            "vanishing": cls.VANISHING, "ev": cls.VANISHING,
            "axial": cls.AXIAL, "ea": cls.AXIAL,
            "toppredatorfree": cls.TOP_PREDATOR_FREE, "et": cls.TOP_PREDATOR_FREE,
            "coexisting": cls.COEXISTING, "ec": cls.COEXISTING,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown equilibrium kind {value!r}") from None


@dataclass(frozen=True)
class ExistenceCondition:
    name: str
    satisfied: bool
    margin: float


@dataclass(frozen=True)
class Equilibrium:
    kind: EquilibriumKind
    point: np.ndarray
    exists: bool
    existence_report: tuple[ExistenceCondition, ...] = ()
    degenerate: bool = False
    reason: str = ""
    source: str = "closed-form"
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.point)))

    def margin(self, name: str) -> float:
        for cond in self.existence_report:
            if cond.name == name:
                return cond.margin
        raise KeyError(name)


def residual(point, p: ModelParams) -> float:
    """Infinity norm of the vector field at ``point`` (inf for non-finite points)."""
    x = np.asarray(point, dtype=float)
    if not np.all(np.isfinite(x)):
        return math.inf
    return float(np.max(np.abs(_rhs(x, p))))


def _cond(name: str, margin: float) -> ExistenceCondition:
    # Boundary (margin == 0) counts as not satisfied.
    margin = float(margin)
    return ExistenceCondition(name, bool(np.isfinite(margin) and margin > 0), margin)


def _pick(candidates: list[tuple[str, np.ndarray]], p: ModelParams) -> tuple[str, np.ndarray]:
    scored = [(residual(x, p), label, x) for label, x in candidates]
    finite = [s for s in scored if math.isfinite(s[0])]
    if not finite:
        return candidates[0][0], candidates[0][1]
    finite.sort(key=lambda s: s[0])
    best = finite[0]
    for other in finite[1:]:
        if not np.allclose(other[2], best[2], rtol=_AGREE_TOL, atol=_AGREE_TOL):
            logger.debug("closed forms disagree: %s=%s vs %s=%s (kept %s)",
                         best[1], best[2], other[1], other[2], best[1])
    return best[1], best[2]


def _safe_div(num: float, den: float) -> float:
    if den == 0 or not math.isfinite(den):
        return math.nan
    return num / den


def vanishing(p: ModelParams) -> Equilibrium:
    """Total extinction; always exists."""
    return Equilibrium(EquilibriumKind.VANISHING, np.zeros(3), True,
                       (ExistenceCondition("always", True, math.inf),))


def axial(p: ModelParams) -> Equilibrium:
    """Prey-only state ``(1 - q r / r1, 0, 0)``; exists iff ``r < r1 / q``."""
    if p.r1 == 0:
        return Equilibrium(EquilibriumKind.AXIAL, np.full(3, math.nan), False,
                           (ExistenceCondition("r < r1/q", False, math.nan),),
                           degenerate=True, reason="r1 = 0: prey has no growth")
    point = np.array([1.0 - p.q * p.r / p.r1, 0.0, 0.0])
    if p.q == 0:
        # Bound r1/q is infinite: the condition is vacuous and holds.
        return Equilibrium(EquilibriumKind.AXIAL, point, True,
                           (ExistenceCondition("r < r1/q", True, math.inf),),
                           reason="q = 0: harvesting-free, condition vacuous")
    margin = p.r1 / p.q - p.r
    cond = _cond("r < r1/q", margin)
    return Equilibrium(EquilibriumKind.AXIAL, point, cond.satisfied, (cond,))


def _omega6(p: ModelParams) -> float:
    r, q, r1, r3, m1, beta = p.r, p.q, p.r1, p.r3, p.m1, p.beta
    return (beta * r**2 * m1 * q**2 * r3 + r * q * r1 * r3 + 2 * beta * r * q * r1 * r3
            - r * m1 * q * r1 * r3 - 2 * beta * r * m1 * q * r1 * r3 - r1**2 * r3
            - beta * r1**2 * r3 + m1 * r1**2 * r3 + beta * m1 * r1**2 * r3)


def axial_invasion_bound(p: ModelParams) -> float:
    """Threshold on r2 above which the intermediate predator can invade the prey-only state."""
    den = -p.beta * p.r**2 * p.q**2 * p.r3 + _omega6(p)
    return _safe_div(-p.d1 * p.r1**2, den)


def top_predator_free(p: ModelParams) -> Equilibrium:
    """Prey and intermediate predator coexist, top predator absent: ``(A, B, 0)``."""
    kind = EquilibriumKind.TOP_PREDATOR_FREE
    k = p.r2 * p.r3 * (1.0 - p.m1)
    if k <= 0:
        return Equilibrium(kind, np.full(3, math.nan), False, (), degenerate=True,
                           reason="r2 r3 (1 - m1) <= 0: closed form divides by zero or flips sign")
    radicand = (-1 + p.m1) * p.r2 * p.r3 * (-4 * p.beta * p.d1 - p.r2 * p.r3 + p.m1 * p.r2 * p.r3)
    conditions = []
    if p.q > 0:
        conditions.append(_cond("r < r1/q", p.r1 / p.q - p.r))
    else:
        conditions.append(ExistenceCondition("r < r1/q", True, math.inf))
    conditions.append(_cond("r2 > invasion bound", p.r2 - axial_invasion_bound(p)))
    conditions.append(ExistenceCondition("omega1 radicand >= 0", bool(radicand >= 0), radicand))
    if radicand < 0:
        return Equilibrium(kind, np.full(3, math.nan), False, tuple(conditions),
                           reason="complex branch")

    candidates = []
    if p.beta > 0:
        w1 = math.sqrt(radicand)
        a_expanded = (-p.r2 * p.r3 + p.m1 * p.r2 * p.r3 + w1) / (2 * p.beta * p.r2 * p.r3
                                                               - 2 * p.beta * p.m1 * p.r2 * p.r3)
        inner = (-1 + p.m1) * p.r2 * p.r3 + w1
        b_expanded = _safe_div(
            -p.r1 * inner + p.beta * (2 * p.d1 * p.r1 + (p.r * p.q - p.r1) * inner),
            2 * p.beta**2 * p.d1 * (-1 + p.m1) * p.r2,
        )
        candidates.append(("expanded", np.array([a_expanded, b_expanded, 0.0])))
        a_reduced = 2 * p.d1 / (k + w1)
    else:
        a_reduced = p.d1 / k
    b_reduced = _safe_div(p.r1 * (1 - a_reduced) - p.q * p.r,
                          p.r2 * (1 - p.m1) * (1 + p.beta * a_reduced))
    candidates.append(("reduced", np.array([a_reduced, b_reduced, 0.0])))
    source, point = _pick(candidates, p)

    conditions.append(_cond("A > 0", point[0]))
    conditions.append(_cond("B > 0", point[1]))
    exists = all(c.satisfied for c in conditions) and residual(point, p) < RESIDUAL_TOL
    return Equilibrium(kind, point, bool(exists), tuple(conditions), source=source)


def _coexisting_expanded(p: ModelParams) -> np.ndarray:
    r1, r2, r3, r4, r5 = p.r1, p.r2, p.r3, p.r4, p.r5
    d1, d2, be, b, q, r, m1, m2 = p.d1, p.d2, p.beta, p.b, p.q, p.r, p.m1, p.m2
    rq = r * q
    den_d = b * d2 + (-1 + m2) * r4 * r5
    den_c = b * d2 * r1 + be * d2 * (-1 + m1) * r2 + (-1 + m2) * r1 * r4 * r5
    w2 = d1 * r1**2 + (-1 + m1) * (rq - r1) * (be * rq - r1 - be * r1) * r2 * r3
    w3 = (d2 * (-1 + m1)**2 * r2**2 * r3
          - (-1 + m2) * (d1 * r1 - (-1 + m1) * (rq - r1) * r2 * r3) * r4 * r5)
    w4 = 2 * d1 * d2 * r1 + (rq - r1) * r3 * (d2 * (-1 + m1) * r2 + (-1 + m2) * (rq - r1) * r4 * r5)
    # The last factor uses (r q - r1), the same combination as in w4.
    w5 = (r1 * (-d2 * (-1 + m1)**2 * r2**2 * r3
                + 2 * (-1 + m2) * (d1 * r1 - (-1 + m1) * (rq - r1) * r2 * r3) * r4 * r5)
          + be * (-1 + m1) * r2 * (2 * d1 * d2 * r1 + (rq - r1) * r3
                                   * (d2 * (-1 + m1) * r2 + 2 * (-1 + m2) * (rq - r1) * r4 * r5)))
    c = _safe_div(b * d2 * (-rq + r1) + d2 * (r2 - m1 * r2) - (-1 + m2) * (rq - r1) * r4 * r5, den_c)
    d = _safe_div(-d2, den_d)
    e = _safe_div(
        r5 * (be**2 * d1 * d2**2 * (-1 + m1)**2 * r2**2 + b**2 * d2**2 * w2
              - (-1 + m2) * r1 * r4 * r5 * w3 + be * (-1 + m1) * (-1 + m2) * r2 * r4 * r5 * w4
              + b * d2 * w5),
        den_d * den_c**2,
    )
    return np.array([c, d, e])


def _coexisting_reduced(p: ModelParams) -> np.ndarray:
    k1 = p.r2 * (1 - p.m1)
    d = _safe_div(p.d2, p.r5 * p.r4 * (1 - p.m2) - p.b * p.d2)
    c = _safe_div(p.r1 - p.q * p.r - k1 * d, p.r1 + p.beta * k1 * d)
    e = _safe_div((1 + p.b * d) * (p.r3 * k1 * (1 + p.beta * c) * c - p.d1), p.r4 * (1 - p.m2))
    return np.array([c, d, e])


def coexisting_conditions(p: ModelParams) -> tuple[ExistenceCondition, ...]:
    """The four existence inequalities for the interior point, as signed margins."""
    r1, r2, r3, r4, r5 = p.r1, p.r2, p.r3, p.r4, p.r5
    d1, d2, be, b, q, r, m1, m2 = p.d1, p.d2, p.beta, p.b, p.q, p.r, p.m1, p.m2
    den_d = b * d2 + (-1 + m2) * r4 * r5
    w7 = b * d2 * r1 + be * d2 * (-1 + m1) * r2 + (-1 + m2) * r1 * r4 * r5
    w8 = be * r * q - r1 - be * r1
    w9 = den_d * (b * d2 * (r * q - r1) + d2 * (-1 + m1) * r2 + (-1 + m2) * (r * q - r1) * r4 * r5)
    r1_bound = _safe_div(d2 * (-1 + m1) * r2, den_d)
    r3_bound = _safe_div(-d1 * w7**2, (-1 + m1) * w8 * r2 * w9)
    r4_bound = _safe_div(b * d2, r5 - m2 * r5)
    r_bound = _safe_div(b * d2 * r1 + d2 * (r2 - m1 * r2) + (-1 + m2) * r1 * r4 * r5, q * den_d) \
        if q > 0 else math.inf
    return (
        _cond("r1 > refuge bound", r1 - r1_bound),
        _cond("r3 > conversion bound", r3 - r3_bound),
        _cond("r4 > handling bound", r4 - r4_bound),
        _cond("r < harvest bound", r_bound - r if math.isfinite(r_bound) else math.inf),
    )


def coexisting(p: ModelParams) -> Equilibrium:
    """Interior equilibrium ``(C, D, E)`` with all three species present."""
    kind = EquilibriumKind.COEXISTING
    den_d = p.b * p.d2 + (-1 + p.m2) * p.r4 * p.r5
    den_c = p.b * p.d2 * p.r1 + p.beta * p.d2 * (-1 + p.m1) * p.r2 + (-1 + p.m2) * p.r1 * p.r4 * p.r5
    if abs(den_d) <= _SINGULAR_TOL * (p.b * p.d2 + p.r4 * p.r5) or p.m2 == 1 or p.r4 == 0:
        return Equilibrium(kind, np.full(3, math.nan), False, (), degenerate=True,
                           reason="b d2 + (m2 - 1) r4 r5 = 0: closed form divides by zero")
    if den_c == 0:
        return Equilibrium(kind, np.full(3, math.nan), False, (), degenerate=True,
                           reason="prey-coordinate denominator vanishes")
    conditions = list(coexisting_conditions(p))
    source, point = _pick([("expanded", _coexisting_expanded(p)), ("reduced", _coexisting_reduced(p))], p)
    degenerate = p.m1 >= 1
    conditions += [_cond("C > 0", point[0]), _cond("D > 0", point[1]), _cond("E > 0", point[2])]
    exists = (not degenerate and all(c.satisfied for c in conditions)
              and residual(point, p) < RESIDUAL_TOL)
    return Equilibrium(kind, point, bool(exists), tuple(conditions), degenerate=degenerate,
                       reason="m1 >= 1: prey fully sheltered" if degenerate else "", source=source)


_CONSTRUCTORS = {
    EquilibriumKind.VANISHING: vanishing,
    EquilibriumKind.AXIAL: axial,
    EquilibriumKind.TOP_PREDATOR_FREE: top_predator_free,
    EquilibriumKind.COEXISTING: coexisting,
}


def equilibrium_of_kind(kind, p: ModelParams) -> Equilibrium:
    return _CONSTRUCTORS[EquilibriumKind.parse(kind)](p)


def all_equilibria(p: ModelParams) -> list[Equilibrium]:
    """Vanishing, axial, top-predator-free and coexisting equilibria, in that order."""
    return [ctor(p) for ctor in _CONSTRUCTORS.values()]
