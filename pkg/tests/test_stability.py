import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from fracchain.equilibria import axial, coexisting, top_predator_free, vanishing
from fracchain.exceptions import DomainError
from fracchain.model import (baseline_params, fractional_scenario_params, harvest_scenario_params,
                             jacobian)
from fracchain.stability import (CharPoly, Criterion, Verdict, char_poly_at, classify_equilibrium,
                                 cubic_discriminant, eigenvalues_cubic, fractional_cubic_criteria,
                                 matignon_classify, routh_hurwitz)
from fracchain.validation import random_params

coef = st.floats(-20, 20, allow_nan=False)
seeds = st.integers(0, 2**32 - 1)


def _match(a, b, tol):
    # Greedy pairing is enough for three roots separated well beyond tol.
    b = list(b)
    for z in a:
        k = min(range(len(b)), key=lambda i: abs(b[i] - z))
        if abs(b[k] - z) > tol:
            return False
        b.pop(k)
    return True


@given(coef, coef, coef)
def test_cubic_roots_match_numpy(c1, c2, c3):
    cp = CharPoly(c1, c2, c3)
    ours = eigenvalues_cubic(cp)
    ref = np.roots([1.0, c1, c2, c3])
    scale = 1 + cp.norm()
    assert max(abs(cp(z)) for z in ours) <= 1e-9 * scale
    # Near-multiple roots are ill-conditioned; compare only well-separated sets.
    gaps = [abs(a - b) for i, a in enumerate(ref) for b in ref[i + 1:]]
    assume(min(gaps) > 1e-3)
    assert _match(ours, ref, 1e-6 * scale)


@given(seeds)
def test_char_poly_of_jacobian_matches_eigvals(seed):
    rng = np.random.default_rng(seed)
    p = random_params(rng)
    J = jacobian(rng.uniform(0, 2, 3), p)
    ref = np.linalg.eigvals(J)
    ours = eigenvalues_cubic(CharPoly.from_matrix(J))
    assert _match(ours, ref, 1e-6 * (1 + np.abs(J).max()))


@given(seeds)
def test_routh_hurwitz_agrees_with_spectrum(seed):
    rng = np.random.default_rng(seed)
    re = rng.uniform(-2, 2, 2)
    im = rng.uniform(0, 2)
    assume(np.all(np.abs(re) > 1e-3))
    roots = [re[0], complex(re[1], im), complex(re[1], -im)]
    cp = CharPoly.from_roots(roots)
    expected = Verdict.STABLE if max(re) < 0 else Verdict.UNSTABLE
    assert routh_hurwitz(cp) is expected
    assert matignon_classify(roots, 1.0)[0] is expected


def test_matignon_sector():
    # |arg| = 80 degrees: stable for alpha < 8/9, unstable above.
    z = cmath.rect(1.0, math.radians(80))
    roots = [-1.0, z, z.conjugate()]
    assert matignon_classify(roots, 0.85)[0] is Verdict.STABLE
    assert matignon_classify(roots, 0.95)[0] is Verdict.UNSTABLE
    with pytest.raises(DomainError):
        matignon_classify(roots, 0.0)


@given(seeds)
def test_discriminant_sign_counts_real_roots(seed):
    rng = np.random.default_rng(seed)
    if rng.random() < 0.5:
        roots = rng.uniform(-3, 3, 3)
        assume(min(abs(roots[0] - roots[1]), abs(roots[1] - roots[2]), abs(roots[0] - roots[2])) > 1e-2)
        assert cubic_discriminant(CharPoly.from_roots(roots)) > 0
    else:
        a, re, im = rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(1e-2, 3)
        assert cubic_discriminant(CharPoly.from_roots([a, complex(re, im), complex(re, -im)])) < 0


@given(seeds, st.floats(0.05, 0.99))
def test_fractional_conditions_are_sufficient(seed, alpha):
    rng = np.random.default_rng(seed)
    roots = [complex(x) for x in rng.uniform(-3, 1, 1)]
    re, im = rng.uniform(-3, 1), rng.uniform(0, 3)
    roots += [complex(re, im), complex(re, -im)]
    cp = CharPoly.from_roots(roots)
    verdict, cond, _ = fractional_cubic_criteria(cp, alpha)
    if verdict is Verdict.STABLE:
        assert matignon_classify(eigenvalues_cubic(cp), alpha)[0] is not Verdict.UNSTABLE


def test_fractional_criteria_need_fractional_order():
    with pytest.raises(DomainError):
        fractional_cubic_criteria(CharPoly(1.0, 1.0, 0.5), 1.0)


def test_vanishing_spectrum_and_threshold():
    p = baseline_params()
    rep = classify_equilibrium(vanishing(p), p)
    expected = sorted([p.r1 - p.q * p.r, -p.d1, -p.d2])
    assert sorted(z.real for z in rep.eigenvalues) == pytest.approx(expected)
    assert rep.verdict is Verdict.UNSTABLE
    harvested = baseline_params(q=2.0, r=1.5)
    assert classify_equilibrium(vanishing(harvested), harvested).verdict is Verdict.STABLE


def test_structural_jacobian_entries():
    # At the interior point the top-predator diagonal vanishes and the (2,3)
    # entry reduces to -d2/r5; at the planar point the (1,2) entry is -d1/r3.
    for m1, beta in ((0.5, 0.01), (0.6, 0.3), (0.45, 1.2)):
        p = baseline_params(m1=m1, beta=beta)
        J = jacobian(coexisting(p).point, p)
        assert J[2, 2] == pytest.approx(0.0, abs=1e-14)
        assert J[1, 2] == pytest.approx(-p.d2 / p.r5, rel=1e-13)
    p = harvest_scenario_params(q=0.838, r2=1.5)
    J = jacobian(top_predator_free(p).point, p)
    assert J[0, 1] == pytest.approx(-p.d1 / p.r3, rel=1e-12)
    assert J[1, 1] == pytest.approx(0.0, abs=1e-13)


def test_criterion_selection_and_closed_form_agreement():
    p = baseline_params(m1=0.6)
    rep = classify_equilibrium(coexisting(p), p)
    assert rep.criterion_used is Criterion.ROUTH_HURWITZ
    assert rep.verdict is Verdict.STABLE
    assert rep.checks_agree
    frac = baseline_params(alpha=0.9, m1=0.6)
    rep = classify_equilibrium(coexisting(frac), frac)
    assert rep.criterion_used is Criterion.MATIGNON
    assert rep.verdict is Verdict.STABLE
    assert rep.checks_agree


def test_bubble_interior_is_unstable_only_at_integer_order():
    p = baseline_params(m1=0.49)
    assert classify_equilibrium(coexisting(p), p).verdict is Verdict.UNSTABLE
    q = baseline_params(m1=0.49, alpha=0.95)
    assert classify_equilibrium(coexisting(q), q).verdict is Verdict.STABLE


def test_axial_stability_in_harvest_scenario():
    p = harvest_scenario_params(q=0.838)
    rep = classify_equilibrium(axial(p), p)
    assert rep.verdict is Verdict.STABLE
    assert rep.checks_agree


def test_degenerate_equilibrium_is_marginal_not_error():
    p = baseline_params(m2=1 - 0.5 / 3.0)
    rep = classify_equilibrium(coexisting(p), p)
    assert rep.verdict is Verdict.MARGINAL
    assert rep.char_poly is None
    with pytest.raises(DomainError):
        char_poly_at(coexisting(p), p)


def test_fractional_condition_one_just_below_existence_edge():
    # The discriminant is positive only on a window about 3e-5 wide in m1 before
    # the interior point disappears; inside it condition (i) certifies stability.
    p = fractional_scenario_params(m1=0.9471740535)
    eq = coexisting(p)
    assert eq.exists
    verdict, condition, disc = fractional_cubic_criteria(char_poly_at(eq, p), p.alpha)
    assert (verdict, condition) == (Verdict.STABLE, 1)
    assert disc == pytest.approx(0.0024, abs=1e-6)
    rounded = fractional_scenario_params(m1=0.9471)
    assert fractional_cubic_criteria(char_poly_at(coexisting(rounded), rounded), 0.98)[1] is None
