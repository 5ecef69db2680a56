"""scikit-learn style wrappers over the functional API.

The model has no data to learn from, so ``fit`` means "resolve the
parameter set and precompute its analysis"; ``predict`` / ``transform`` map
inputs (initial states, parameter values) to outputs.  Hyperparameters are
the constructor arguments, which keeps ``get_params`` / ``set_params`` /
``clone`` working.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .bifurcation import SweepSpec, detect_hopf, detect_transcritical, sweep_equilibrium_curve
from .equilibria import EquilibriumKind, all_equilibria
from .exceptions import DomainError
from .fracsolve import SolverConfig, integrate_caputo_abm, integrate_classic
from .model import ModelParams, ParamBatch
from .stability import classify_equilibrium

__all__ = ["FoodChainModel", "BifurcationAnalyzer"]


class FoodChainModel(BaseEstimator):
    """Parameter set plus integrator settings.

    After ``fit``: ``params_``, ``equilibria_`` and ``stability_`` (one
    report per equilibrium).  ``predict(X)`` integrates each row of ``X``
    (initial states, shape ``(n, 3)``) to ``t_end`` and returns the final
    states.
    """

    def __init__(self, r1=2.0, r2=1.0, r3=1.0, r4=3.0, r5=1.0, d1=0.25, d2=0.5, beta=0.01,
                 b=1.0, q=0.5, r=0.01, m_fp=1.0, a1=0.5, m_sp=1.0, a2=0.5, alpha=1.0,
                 t_end=100.0, h=1e-2, method="auto"):
        self.r1, self.r2, self.r3, self.r4, self.r5 = r1, r2, r3, r4, r5
        self.d1, self.d2, self.beta, self.b, self.q, self.r = d1, d2, beta, b, q, r
        self.m_fp, self.a1, self.m_sp, self.a2, self.alpha = m_fp, a1, m_sp, a2, alpha
        self.t_end, self.h, self.method = t_end, h, method

    def _model_params(self) -> ModelParams:
        names = ("r1", "r2", "r3", "r4", "r5", "d1", "d2", "beta", "b", "q", "r",
                 "m_fp", "a1", "m_sp", "a2", "alpha")
        return ModelParams(**{k: getattr(self, k) for k in names})

    def fit(self, X=None, y=None):
        if self.method not in ("auto", "abm", "rk4"):
            raise DomainError(f"method must be auto, abm or rk4, got {self.method!r}")
        self.params_ = self._model_params()
        self.solver_ = SolverConfig(t_end=self.t_end, h=self.h)
        self.equilibria_ = all_equilibria(self.params_)
        self.stability_ = [classify_equilibrium(eq, self.params_) for eq in self.equilibria_]
        return self

    def _integrator(self):
        use_rk4 = self.method == "rk4" or (self.method == "auto" and self.params_.alpha == 1)
        return integrate_classic if use_rk4 else integrate_caputo_abm

    def simulate(self, s0):
        """Full :class:`~fracchain.fracsolve.Trajectory` from one initial state."""
        check_is_fitted(self, "params_")
        return self._integrator()(s0, self.params_, self.solver_)

    def predict(self, X):
        check_is_fitted(self, "params_")
        X = check_array(X, dtype=float)
        if X.shape[1] != 3:
            raise DomainError(f"expected initial states of shape (n, 3), got {X.shape}")
        batch = ParamBatch([self.params_] * len(X))
        traj = self._integrator()(X.T.copy(), batch, self.solver_)
        return np.asarray(traj.final).T.copy()

    def stable_equilibria(self) -> list[EquilibriumKind]:
        check_is_fitted(self, "stability_")
        return [eq.kind for eq, rep in zip(self.equilibria_, self.stability_)
                if eq.exists and rep.verdict.value == "Stable"]


class BifurcationAnalyzer(TransformerMixin, BaseEstimator):
    """One-parameter bifurcation analysis of a tracked equilibrium.

    ``fit`` sweeps ``[lo, hi]`` and stores ``curve_``, ``hopf_`` and
    ``transcritical_``.  ``transform(X)`` maps a column of parameter values to
    ``(N1, N2, N3, N1 N2 - N3)`` at the tracked equilibrium.
    """

    def __init__(self, param="m1", lo=0.3, hi=0.8, n=256, kind="Coexisting", base=None, threads=None):
        self.param = param
        self.lo = lo
        self.hi = hi
        self.n = n
        self.kind = kind
        self.base = base
        self.threads = threads

    def _spec(self) -> SweepSpec:
        base = self.base if self.base is not None else ModelParams.from_refuge()
        return SweepSpec(self.param, float(self.lo), float(self.hi), int(self.n), base, self.kind)

    def fit(self, X=None, y=None):
        self.spec_ = self._spec()
        self.curve_ = sweep_equilibrium_curve(self.spec_, self.threads)
        self.hopf_ = detect_hopf(self.curve_)
        self.transcritical_ = detect_transcritical(self.curve_)
        return self

    @property
    def events_(self):
        check_is_fitted(self, "curve_")
        return sorted(self.hopf_ + self.transcritical_, key=lambda e: e.critical_value)

    def transform(self, X):
        check_is_fitted(self, "spec_")
        X = check_array(np.asarray(X, dtype=float).reshape(-1, 1), dtype=float,
                        ensure_all_finite=True)
        spec = self.spec_
        out = np.empty((len(X), 4))
        for i, v in enumerate(X[:, 0]):
            p = spec.params_at(v)
            eq = [e for e in all_equilibria(p) if e.kind is spec.kind][0]
            out[i] = classify_equilibrium(eq, p).rh_quantities
        return out
