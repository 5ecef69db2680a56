"""Local stability of equilibria: characteristic cubic, eigenvalues, classifiers.

Integer order uses the Routh-Hurwitz conditions on the characteristic cubic.
Fractional order uses the argument condition ``|arg lambda| > alpha pi / 2``
as the single source of truth; the discriminant-based sufficient conditions
for cubics are reported alongside but never override it.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .equilibria import Equilibrium, EquilibriumKind, axial_invasion_bound
from .exceptions import DomainError
from .model import ModelParams, jacobian

__all__ = [
    "Verdict",
    "Criterion",
    "CharPoly",
    "NamedCheck",
    "StabilityReport",
    "MARGINAL_BAND",
    "char_poly_at",
    "eigenvalues_cubic",
    "routh_hurwitz",
    "rh_quantities",
    "matignon_classify",
    "cubic_discriminant",
    "fractional_cubic_criteria",
    "classify_equilibrium",
]

MARGINAL_BAND = 1e-12
_EQUALITY_TOL = 1e-9
_ROOT_RESIDUAL = 1e-9


class Verdict(enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    MARGINAL = "Marginal"
    INCONCLUSIVE = "Inconclusive"


class Criterion(enum.Enum):
    ROUTH_HURWITZ = "RouthHurwitz"
    MATIGNON = "Matignon"
    FRACTIONAL_CUBIC = "FractionalCubic"


@dataclass(frozen=True)
class CharPoly:
    """Monic cubic ``lambda^3 + c1 lambda^2 + c2 lambda + c3``."""

    c1: float
    c2: float
    c3: float

    @classmethod
    def from_matrix(cls, J) -> "CharPoly":
        J = np.asarray(J, dtype=float)
        if J.shape != (3, 3):
            raise DomainError(f"expected a 3x3 matrix, got shape {J.shape}")
        if not np.all(np.isfinite(J)):
            raise DomainError("Jacobian has non-finite entries")
        minors = (J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
                  + J[0, 0] * J[2, 2] - J[0, 2] * J[2, 0]
                  + J[1, 1] * J[2, 2] - J[1, 2] * J[2, 1])
        return cls(-float(np.trace(J)), float(minors), -float(np.linalg.det(J)))

    @classmethod
    def from_roots(cls, roots) -> "CharPoly":
        c = np.real_if_close(np.poly(np.asarray(roots, dtype=complex)), tol=1e6)
        return cls(float(np.real(c[1])), float(np.real(c[2])), float(np.real(c[3])))

    @property
    def hopf_indicator(self) -> float:
        return self.c1 * self.c2 - self.c3

    def __call__(self, lam):
        return ((lam + self.c1) * lam + self.c2) * lam + self.c3

    def derivative(self, lam):
        return (3 * lam + 2 * self.c1) * lam + self.c2

    def norm(self) -> float:
        return max(abs(self.c1), abs(self.c2), abs(self.c3))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.c1, self.c2, self.c3)


@dataclass(frozen=True)
class NamedCheck:
    """A closed-form stability condition evaluated next to the eigenvalue verdict.

    ``kind`` is ``"iff"`` for necessary-and-sufficient conditions and
    ``"sufficient"`` for one-sided ones.
    """

    name: str
    holds: bool
    kind: str
    agrees: bool


@dataclass(frozen=True)
class StabilityReport:
    kind: EquilibriumKind
    alpha: float
    char_poly: CharPoly | None
    eigenvalues: tuple[complex, complex, complex]
    rh_quantities: tuple[float, float, float, float]
    discriminant: float
    matignon_margins: tuple[float, float, float]
    verdict: Verdict
    criterion_used: Criterion
    fractional_condition: int | None = None
    checks: tuple[NamedCheck, ...] = ()
    reason: str = ""
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def checks_agree(self) -> bool:
        return all(c.agrees for c in self.checks)


def char_poly_at(eq: Equilibrium, p: ModelParams) -> CharPoly:
    """Characteristic cubic of the analytic Jacobian at an equilibrium."""
    if not eq.finite:
        raise DomainError(f"{eq.kind.value} equilibrium has non-finite coordinates")
    return CharPoly.from_matrix(jacobian(eq.point, p))


def _polish(cp: CharPoly, z: complex, iters: int = 3) -> complex:
    for _ in range(iters):
        d = cp.derivative(z)
        if d == 0:
            break
        step = cp(z) / d
        candidate = z - step
        if abs(cp(candidate)) >= abs(cp(z)):
            break
        z = candidate
    return z


def _closed_form_roots(cp: CharPoly) -> list[complex]:
    a, b, c = cp.c1, cp.c2, cp.c3
    shift = a / 3.0
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    if p == 0.0 and q == 0.0:
        return [complex(-shift)] * 3
    disc = -(4.0 * p**3 + 27.0 * q * q)
    if disc > 0:
        # Three distinct real roots: trigonometric form.
        m = 2.0 * math.sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        theta = math.acos(max(-1.0, min(1.0, arg))) / 3.0
        return [complex(m * math.cos(theta - 2.0 * math.pi * k / 3.0) - shift) for k in range(3)]
    s = math.sqrt(max(q * q / 4.0 + p**3 / 27.0, 0.0))
    big = -q / 2.0 + (s if q <= 0 else -s)
    u = math.copysign(abs(big) ** (1.0 / 3.0), big)
    v = -p / (3.0 * u) if u != 0 else 0.0
    real = u + v
    re_pair = -real / 2.0 - shift
    im_pair = math.sqrt(3.0) / 2.0 * abs(u - v)
    return [complex(real - shift), complex(re_pair, im_pair), complex(re_pair, -im_pair)]


def _finalize(cp: CharPoly, roots: list[complex]) -> list[complex]:
    roots = [_polish(cp, z) for z in roots]
    complex_roots = [z for z in roots if z.imag != 0.0]
    if len(complex_roots) == 2:
        re = 0.5 * (complex_roots[0].real + complex_roots[1].real)
        im = 0.5 * (abs(complex_roots[0].imag) + abs(complex_roots[1].imag))
        real = [z for z in roots if z.imag == 0.0]
        roots = real + [complex(re, im), complex(re, -im)]
    return roots


def eigenvalues_cubic(cp: CharPoly) -> tuple[complex, complex, complex]:
    """Roots of the characteristic cubic, sorted by real part then imaginary part (descending).

    Closed form first; falls back to the companion-matrix eigen-solver when the
    closed form leaves a residual above ``1e-9 (1 + |cp|)``.
    """
    if not all(math.isfinite(x) for x in cp.as_tuple()):
        raise DomainError("characteristic polynomial has non-finite coefficients")
    bound = _ROOT_RESIDUAL * (1.0 + cp.norm())
    roots = _finalize(cp, _closed_form_roots(cp))
    if max(abs(cp(z)) for z in roots) > bound:
        companion = np.array([[-cp.c1, -cp.c2, -cp.c3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        roots = _finalize(cp, [complex(z) for z in np.linalg.eigvals(companion)])
    roots.sort(key=lambda z: (-z.real, -z.imag))
    return tuple(roots)


def _band_verdict(values) -> Verdict:
    if any(v < -MARGINAL_BAND for v in values):
        return Verdict.UNSTABLE
    if any(abs(v) <= MARGINAL_BAND for v in values):
        return Verdict.MARGINAL
    return Verdict.STABLE


def rh_quantities(cp: CharPoly) -> tuple[float, float, float, float]:
    return (cp.c1, cp.c2, cp.c3, cp.hopf_indicator)


def routh_hurwitz(cp: CharPoly) -> Verdict:
    """Stable iff c1, c2, c3 and c1 c2 - c3 are all positive."""
    return _band_verdict(rh_quantities(cp))


def matignon_classify(eigs, alpha: float) -> tuple[Verdict, tuple[float, ...]]:
    """Argument test: stable iff every eigenvalue has ``|arg| > alpha pi / 2``."""
    if not 0 < alpha <= 1:
        raise DomainError(f"alpha must lie in (0, 1], got {alpha}")
    margins = tuple(abs(cmath.phase(complex(z))) - alpha * math.pi / 2 for z in eigs)
    return _band_verdict(margins), margins


def cubic_discriminant(cp: CharPoly) -> float:
    """Standard discriminant; positive iff three distinct real roots."""
    a, b, c = cp.c1, cp.c2, cp.c3
    return 18 * a * b * c + (a * b) ** 2 - 4 * a**3 * c - 4 * b**3 - 27 * c * c


def fractional_cubic_criteria(cp: CharPoly, alpha: float) -> tuple[Verdict, int | None, float]:
    """Discriminant-based sufficient conditions for fractional cubic stability.

    Returns ``(Stable, index, disc)`` for the first satisfied condition (1-based),
    otherwise ``(Inconclusive, None, disc)``.
    """
    if not 0 < alpha < 1:
        raise DomainError(f"fractional criteria need alpha in (0, 1), got {alpha}")
    n1, n2, n3 = cp.as_tuple()
    disc = cubic_discriminant(cp)
    h = cp.hopf_indicator
    if disc > 0 and n1 > 0 and n3 > 0 and h > 0:
        return Verdict.STABLE, 1, disc
    if disc < 0 and n1 >= 0 and n2 >= 0 and n3 > 0 and alpha < 2.0 / 3.0:
        return Verdict.STABLE, 2, disc
    if disc < 0 and n1 > 0 and n2 > 0 and abs(h) <= _EQUALITY_TOL:
        return Verdict.STABLE, 3, disc
    return Verdict.INCONCLUSIVE, None, disc


def _check(name: str, holds: bool, kind: str, verdict: Verdict) -> NamedCheck:
    if verdict is Verdict.MARGINAL:
        agrees = True
    elif kind == "iff":
        agrees = holds == (verdict is Verdict.STABLE)
    else:
        agrees = (not holds) or verdict is Verdict.STABLE
    return NamedCheck(name, bool(holds), kind, bool(agrees))


def _closed_form_checks(eq: Equilibrium, p: ModelParams, J: np.ndarray, cp: CharPoly,
                        verdict: Verdict, frac_condition: int | None) -> tuple[NamedCheck, ...]:
    kind = eq.kind
    if kind is EquilibriumKind.VANISHING:
        holds = p.q * p.r > p.r1
        return (_check("r > r1/q", holds, "iff", verdict),)
    if kind is EquilibriumKind.AXIAL:
        holds = p.q * p.r < p.r1 and p.r2 < axial_invasion_bound(p)
        return (_check("r < r1/q and r2 < invasion bound", holds, "iff", verdict),)
    if kind is EquilibriumKind.TOP_PREDATOR_FREE:
        if p.alpha == 1:
            return (_check("M1, M2, M3 > 0 and M1 M2 - M3 > 0",
                           routh_hurwitz(cp) is Verdict.STABLE, "iff", verdict),)
        t11, t12, t21, t33 = J[0, 0], J[0, 1], J[1, 0], J[2, 2]
        holds = t33 < 0 and t11**2 + 4 * t12 * t21 < 0 and t11 < 0
        return (_check("t33 < 0, t11^2 + 4 t12 t21 < 0, t11 < 0", holds, "sufficient", verdict),)
    if p.alpha == 1:
        return (_check("N1, N2, N3 > 0 and N1 N2 - N3 > 0",
                       routh_hurwitz(cp) is Verdict.STABLE, "iff", verdict),)
    return (_check("fractional cubic condition", frac_condition is not None, "sufficient", verdict),)


def classify_equilibrium(eq: Equilibrium, p: ModelParams) -> StabilityReport:
    """Full local-stability report for one equilibrium at the order ``p.alpha``."""
    nan3 = (complex(math.nan),) * 3
    if not eq.finite:
        criterion = Criterion.ROUTH_HURWITZ if p.alpha == 1 else Criterion.MATIGNON
        return StabilityReport(eq.kind, p.alpha, None, nan3, (math.nan,) * 4, math.nan,
                               (math.nan,) * 3, Verdict.MARGINAL, criterion,
                               reason=eq.reason or "equilibrium is degenerate")
    J = jacobian(eq.point, p)
    cp = CharPoly.from_matrix(J)
    eigs = eigenvalues_cubic(cp)
    rh_verdict = routh_hurwitz(cp)
    mat_verdict, margins = matignon_classify(eigs, p.alpha)
    disc = cubic_discriminant(cp)
    frac_condition = None
    if p.alpha < 1:
        _, frac_condition, _ = fractional_cubic_criteria(cp, p.alpha)
        verdict, criterion = mat_verdict, Criterion.MATIGNON
    else:
        verdict, criterion = rh_verdict, Criterion.ROUTH_HURWITZ
    reason = ""
    if eq.degenerate:
        verdict, reason = Verdict.MARGINAL, eq.reason or "equilibrium is degenerate"
    checks = _closed_form_checks(eq, p, J, cp, verdict, frac_condition)
    return StabilityReport(eq.kind, p.alpha, cp, eigs, rh_quantities(cp), disc, margins,
                           verdict, criterion, frac_condition, checks, reason,
                           extra={"matignon_verdict": mat_verdict, "rh_verdict": rh_verdict})
