"""Randomized invariant suite behind ``fracchain validate``.

Every check is reproducible from the seed.  Draw ranges keep parameters
inside the model's domain and refuges in [0, 0.95].
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize
from scipy.special import erfcx

from .equilibria import RESIDUAL_TOL, EquilibriumKind, all_equilibria, coexisting, residual
from .fracsolve import (NEG_TOL, SolverConfig, check_boundedness, integrate_caputo_abm,
                        integrate_classic)
from .mittag_leffler import mittag_leffler
from .model import (ModelParams, ParamBatch, baseline_params, harvest_scenario_params, jacobian,
                    vector_field)
from .stability import (CharPoly, Verdict, classify_equilibrium, cubic_discriminant,
                        eigenvalues_cubic, matignon_classify, routh_hurwitz)

__all__ = ["CheckResult", "random_params", "random_state", "run_suite", "SCENARIOS"]

_RANGES = {
    "r1": (0.5, 3.0), "r2": (0.1, 2.0), "r3": (0.1, 1.0), "r4": (0.5, 4.0), "r5": (0.1, 1.0),
    "d1": (0.05, 0.5), "d2": (0.05, 0.8), "beta": (0.0, 0.5), "b": (0.1, 2.0),
    "q": (0.0, 1.0), "r": (0.0, 0.5), "m1": (0.0, 0.95), "m2": (0.0, 0.95),
}


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def random_params(rng: np.random.Generator, alpha: float = 1.0) -> ModelParams:
    """One parameter draw from the suite's box."""
    v = {k: float(rng.uniform(lo, hi)) for k, (lo, hi) in _RANGES.items()}
    return ModelParams.from_refuge(m1=v.pop("m1"), m2=v.pop("m2"), alpha=alpha, **v)


def random_state(rng: np.random.Generator, scale: float = 2.0) -> np.ndarray:
    return rng.uniform(0.0, scale, 3)


def coexisting_oracle(p: ModelParams, guess) -> np.ndarray:
    """Interior root of the vector field by a general-purpose nonlinear solver."""
    sol, info, ier, msg = optimize.fsolve(lambda x: vector_field(x, p), np.asarray(guess, float),
                                          fprime=lambda x: jacobian(x, p), xtol=1e-14, full_output=True)
    return sol


def check_equilibria(rng, n: int = 200) -> CheckResult:
    worst, worst_oracle, existing = 0.0, 0.0, 0
    for _ in range(n):
        p = random_params(rng)
        for eq in all_equilibria(p):
            if eq.exists:
                worst = max(worst, residual(eq.point, p))
        ec = coexisting(p)
        if ec.exists:
            existing += 1
            start = ec.point * rng.uniform(0.97, 1.03, 3)
            worst_oracle = max(worst_oracle, float(np.max(np.abs(coexisting_oracle(p, start) - ec.point))))
    ok = worst < RESIDUAL_TOL and worst_oracle < 1e-8
    return CheckResult("equilibrium residuals and root-finder oracle", ok,
                       f"max residual {worst:.2e}, max oracle gap {worst_oracle:.2e} over {existing} interior points")


def check_jacobian(rng, n: int = 100) -> CheckResult:
    worst = 0.0
    for _ in range(n):
        p, x = random_params(rng), random_state(rng)
        J = jacobian(x, p)
        fd = np.empty((3, 3))
        for j in range(3):
            e = np.zeros(3)
            e[j] = 1e-6
            fd[:, j] = (vector_field(x + e, p) - vector_field(x - e, p)) / 2e-6
        worst = max(worst, float(np.max(np.abs(fd - J))))
    return CheckResult("jacobian vs finite differences", worst < 1e-6, f"max gap {worst:.2e}")


def _random_roots(rng) -> list[complex]:
    if rng.random() < 0.5:
        return list(rng.uniform(-3, 3, 3).astype(complex))
    re, im = rng.uniform(-3, 3), rng.uniform(0.05, 3)
    return [complex(rng.uniform(-3, 3)), complex(re, im), complex(re, -im)]


def check_matignon_rh(rng, n: int = 500) -> CheckResult:
    bad = 0
    for _ in range(n):
        cp = CharPoly.from_roots(_random_roots(rng))
        mat, _ = matignon_classify(eigenvalues_cubic(cp), 1.0)
        rh = routh_hurwitz(cp)
        if Verdict.MARGINAL in (mat, rh):
            continue
        bad += mat is not rh
    return CheckResult("Matignon at alpha=1 agrees with Routh-Hurwitz", bad == 0, f"{bad}/{n} disagreements")


def check_discriminant(rng, n: int = 500) -> CheckResult:
    bad = skipped = 0
    for _ in range(n):
        cp = CharPoly(*rng.uniform(-5, 5, 3))
        disc = cubic_discriminant(cp)
        if abs(disc) < 1e-8:
            skipped += 1
            continue
        roots = np.roots([1.0, cp.c1, cp.c2, cp.c3])
        n_real = int(np.sum(np.abs(roots.imag) < 1e-9 * max(1.0, cp.norm())))
        bad += (disc > 0) != (n_real == 3)
    return CheckResult("discriminant sign vs root structure", bad == 0,
                       f"{bad}/{n - skipped} mismatches ({skipped} near-degenerate skipped)")


def check_trajectories(rng, n: int = 100, t_end: float = 500.0, h: float = 1e-2,
                       alphas=(1.0, 0.95, 0.9, 0.8)) -> tuple[CheckResult, CheckResult]:
    """Nonnegativity and boundedness over ``n`` draws, batched per fractional order."""
    groups = np.array_split(np.arange(n), len(alphas))
    worst_clamp, failures, total = 0.0, [], 0
    for alpha, idx in zip(alphas, groups):
        if len(idx) == 0:
            continue
        params = [random_params(rng, alpha) for _ in idx]
        s0 = np.stack([random_state(rng, 1.0) for _ in idx], axis=1)
        cfg = SolverConfig(t_end=t_end, h=h)
        integrate = integrate_classic if alpha == 1 else integrate_caputo_abm
        traj = integrate(s0, ParamBatch(params), cfg)
        worst_clamp = max(worst_clamp, traj.max_clamp)
        for k in range(len(idx)):
            total += 1
            if not check_boundedness(traj.select(k)):
                failures.append(f"alpha={alpha} draw {k}")
    return (CheckResult("nonnegativity", worst_clamp <= NEG_TOL,
                        f"largest clamp {worst_clamp:.2e} over {total} trajectories"),
            CheckResult("W(t) boundedness", not failures,
                        f"{len(failures)}/{total} violations" + (f": {failures[:3]}" if failures else "")))


SCENARIOS = (
    ("q=1.35 -> vanishing stable", lambda: harvest_scenario_params(q=1.35), EquilibriumKind.VANISHING),
    ("q=0.838 -> axial stable", lambda: harvest_scenario_params(q=0.838), EquilibriumKind.AXIAL),
    ("q=0.019 -> top-predator-free stable", lambda: harvest_scenario_params(q=0.019),
     EquilibriumKind.TOP_PREDATOR_FREE),
    ("m2=0.6 -> coexisting stable", lambda: baseline_params(m2=0.6), EquilibriumKind.COEXISTING),
)


def check_scenarios() -> CheckResult:
    failed = []
    for name, make, kind in SCENARIOS:
        p = make()
        eq = [e for e in all_equilibria(p) if e.kind is kind][0]
        if not (eq.exists and classify_equilibrium(eq, p).verdict is Verdict.STABLE):
            failed.append(name)
    return CheckResult("stability scenario matrix", not failed, "all four stable" if not failed else str(failed))


def check_mittag_leffler() -> CheckResult:
    worst = max(abs(mittag_leffler(1.0, -1.0) - math.exp(-1.0)),
                max(abs(mittag_leffler(a, 0.0) - 1.0) for a in (0.3, 0.5, 0.9)))
    # E_{1/2}(-x) = exp(x^2) erfc(x) in closed form.
    for x in (0.3, 1.0, 4.0, 12.0, 30.0):
        worst = max(worst, abs(mittag_leffler(0.5, -x) - erfcx(x)) / erfcx(x))
    return CheckResult("Mittag-Leffler identities", worst < 1e-10, f"max relative gap {worst:.2e}")


def run_suite(seed: int = 0, n_draws: int = 100, t_end: float = 500.0,
              log: Callable[[str], None] | None = None) -> list[CheckResult]:
    """Run every invariant check and return their results in a fixed order."""
    rng = np.random.default_rng(seed)
    results = []

    def record(res):
        results.append(res)
        if log:
            log(f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.detail}")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        record(check_equilibria(rng, 2 * n_draws))
        record(check_jacobian(rng, n_draws))
        record(check_matignon_rh(rng, 5 * n_draws))
        record(check_discriminant(rng, 5 * n_draws))
        for res in check_trajectories(rng, n_draws, t_end):
            record(res)
        record(check_scenarios())
        record(check_mittag_leffler())
    return results
