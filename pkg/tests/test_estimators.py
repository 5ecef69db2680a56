import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from fracchain.estimators import BifurcationAnalyzer, FoodChainModel
from fracchain.equilibria import EquilibriumKind
from fracchain.exceptions import DomainError
from fracchain.fracsolve import SolverConfig, integrate_caputo_abm
from fracchain.model import baseline_params


def test_params_round_trip_and_clone():
    est = FoodChainModel(alpha=0.9, q=0.7, t_end=5.0)
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    est.set_params(a1=0.6)
    assert est.fit().params_.m1 == 0.6


def test_fit_matches_functional_api():
    est = FoodChainModel(a1=0.6).fit()
    assert est.params_ == baseline_params(m1=0.6)
    assert [eq.kind for eq in est.equilibria_] == list(EquilibriumKind)
    assert est.stable_equilibria() == [EquilibriumKind.COEXISTING]


def test_predict_is_batched_simulate():
    est = FoodChainModel(alpha=0.9, t_end=5.0).fit()
    X = np.array([[0.8, 0.6, 0.8], [0.2, 0.1, 0.3]])
    Y = est.predict(X)
    assert Y.shape == (2, 3)
    for x, y in zip(X, Y):
        ref = integrate_caputo_abm(x, baseline_params(alpha=0.9), SolverConfig(t_end=5.0)).final
        assert np.allclose(y, ref, atol=1e-13)
        assert np.allclose(est.simulate(x).final, ref, atol=1e-13)
    with pytest.raises(DomainError):
        est.predict(np.ones((2, 2)))


def test_unfitted_and_bad_method():
    with pytest.raises(NotFittedError):
        FoodChainModel().predict(np.ones((1, 3)))
    with pytest.raises(DomainError):
        FoodChainModel(method="euler").fit()


def test_bifurcation_analyzer():
    an = BifurcationAnalyzer(n=64).fit()
    kinds = [e.kind.value for e in an.events_]
    assert kinds == ["Hopf", "Hopf", "Transcritical"]
    rh = an.transform([0.6, 0.45])
    assert rh.shape == (2, 4)
    assert rh[0, 0] == pytest.approx(1.75771, abs=1e-5)
    with pytest.raises(ValueError):
        an.transform([np.nan])
    with pytest.raises(NotFittedError):
        BifurcationAnalyzer().transform([0.5])
