import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import fsolve

from fracchain.equilibria import (RESIDUAL_TOL, EquilibriumKind, all_equilibria, axial,
                                  coexisting, equilibrium_of_kind, residual, top_predator_free,
                                  vanishing)
from fracchain.model import baseline_params, harvest_scenario_params, vector_field
from fracchain.validation import random_params

seeds = st.integers(0, 2**32 - 1)


@given(seeds)
def test_existing_equilibria_are_fixed_points(seed):
    p = random_params(np.random.default_rng(seed))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for eq in all_equilibria(p):
            if eq.exists:
                assert residual(eq.point, p) < RESIDUAL_TOL
                assert np.all(eq.point >= 0)


def test_baseline_coexisting_by_hand():
    p = baseline_params()
    # D from the top-predator nullcline, then C from the prey nullcline.
    D = p.d2 / (p.r5 * p.r4 * (1 - p.m2) - p.b * p.d2)
    k1 = p.r2 * (1 - p.m1)
    C = (p.r1 - p.q * p.r - k1 * D) / (p.r1 + p.beta * k1 * D)
    eq = coexisting(p)
    assert eq.exists
    assert eq.point[:2] == pytest.approx([C, D], rel=1e-13)
    root = fsolve(lambda x: vector_field(x, p), eq.point * 1.1, xtol=1e-13)
    assert np.allclose(root, eq.point, atol=1e-10)


def test_top_predator_free_matches_root_finder():
    p = harvest_scenario_params(q=0.838, r2=1.5)
    eq = top_predator_free(p)
    assert eq.point[2] == 0
    root = fsolve(lambda x: vector_field([x[0], x[1], 0.0], p)[:2], eq.point[:2] * 1.05, xtol=1e-14)
    assert np.allclose(root, eq.point[:2], atol=1e-9)


def test_top_predator_free_without_odour_term():
    p = baseline_params(beta=0.0, m1=0.6)
    eq = top_predator_free(p)
    assert eq.point[0] == pytest.approx(p.d1 / (p.r2 * p.r3 * (1 - p.m1)), rel=1e-14)
    assert residual(eq.point, p) < RESIDUAL_TOL


def test_axial_point_and_boundary():
    p = baseline_params(q=2.0, r=0.3)
    assert np.allclose(axial(p).point, [1 - 0.6 / 2.0, 0, 0])
    edge = baseline_params(q=2.0, r=1.0)
    eq = axial(edge)
    assert eq.margin("r < r1/q") == 0.0
    assert not eq.exists
    assert axial(baseline_params(q=0.0)).exists


def test_vanishing_always_exists():
    eq = vanishing(baseline_params())
    assert eq.exists and np.array_equal(eq.point, np.zeros(3))


def test_heavy_harvest_leaves_only_extinction():
    p = harvest_scenario_params(q=1.35)
    flags = {eq.kind: eq.exists for eq in all_equilibria(p)}
    assert flags == {EquilibriumKind.VANISHING: True, EquilibriumKind.AXIAL: False,
                     EquilibriumKind.TOP_PREDATOR_FREE: False, EquilibriumKind.COEXISTING: False}


def test_degenerate_cases_reported_not_raised():
    full_refuge = coexisting(baseline_params(m1=1.0))
    assert full_refuge.degenerate and not full_refuge.exists
    # b d2 = (1 - m2) r4 r5 makes the predator coordinate blow up.
    singular = coexisting(baseline_params(m2=1 - 0.5 / 3.0))
    assert singular.degenerate and not singular.exists
    assert all(math.isnan(v) for v in singular.point)


def test_missing_top_predator_beyond_transcritical():
    p = baseline_params(m1=0.75)
    assert not coexisting(p).exists
    assert top_predator_free(p).exists


def test_kind_lookup():
    p = baseline_params()
    assert equilibrium_of_kind("Axial", p).kind is EquilibriumKind.AXIAL
    assert [e.kind.value for e in all_equilibria(p)] == [
        "Vanishing", "Axial", "TopPredatorFree", "Coexisting"]
    with pytest.raises(Exception):
        EquilibriumKind.parse("Bogus")
