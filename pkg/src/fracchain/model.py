"""Odour-mediated three-species food chain: parameters, states, vector field.

The same right-hand side drives both the classical system and its Caputo
counterpart; the fractional order only matters to the integrator and to the
stability classifier.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .exceptions import DomainError, NonPhysicalParameterWarning

__all__ = [
    "ModelParams",
    "State",
    "ParamBatch",
    "PARAM_NAMES",
    "SWEEPABLE",
    "baseline_params",
    "harvest_scenario_params",
    "fractional_scenario_params",
    "odour_scenario_params",
    "PRESETS",
    "derived_refuge",
    "vector_field",
    "jacobian",
    "as_state_array",
    "rhs_factory",
]

_RATE_FIELDS = ("r1", "r2", "r4", "d1", "d2", "beta", "b", "q", "r")


@dataclass(frozen=True)
class ModelParams:
    """All constants of the food-chain model plus the Caputo order.

    ``m1`` and ``m2`` are derived (``m_fp * a1`` and ``m_sp * a2``) and are
    kept in sync by the constructor; use :meth:`with_value` or
    :func:`dataclasses.replace` to derive new parameter sets.
    """

    r1: float = 2.0
    r2: float = 1.0
    r3: float = 1.0
    r4: float = 3.0
    r5: float = 1.0
    d1: float = 0.25
    d2: float = 0.5
    beta: float = 0.01
    b: float = 1.0
    q: float = 0.5
    r: float = 0.01
    m_fp: float = 1.0
    a1: float = 0.5
    m_sp: float = 1.0
    a2: float = 0.5
    alpha: float = 1.0
    m1: float = field(init=False, repr=False)
    m2: float = field(init=False, repr=False)

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if not f.init:
                continue
            value = getattr(self, f.name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise DomainError(f"parameter {f.name!r} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise DomainError(f"parameter {f.name!r} must be finite, got {value!r}")
            object.__setattr__(self, f.name, value)
        for name in _RATE_FIELDS:
            if getattr(self, name) < 0:
                raise DomainError(f"rate parameter {name!r} must be >= 0, got {getattr(self, name)}")
        for name in ("r3", "r5"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise DomainError(f"conversion efficiency {name!r} must lie in (0, 1], got {v}")
        if not 0 < self.alpha <= 1:
            raise DomainError(f"fractional order alpha must lie in (0, 1], got {self.alpha}")
        object.__setattr__(self, "m1", self.m_fp * self.a1)
        object.__setattr__(self, "m2", self.m_sp * self.a2)

    @classmethod
    def from_refuge(cls, m1: float = 0.5, m2: float = 0.5, **kwargs) -> "ModelParams":
        """Build a parameter set from the refuge fractions directly (``m_fp = m_sp = 1``)."""
        return cls(m_fp=1.0, a1=m1, m_sp=1.0, a2=m2, **kwargs)

    @property
    def is_physical(self) -> bool:
        return 0 <= self.m1 < 1 and 0 <= self.m2 < 1

    def check_physical(self) -> bool:
        """Warn (never raise) when a refuge fraction leaves [0, 1)."""
        if not self.is_physical:
            warnings.warn(
                f"refuge fractions m1={self.m1:.6g}, m2={self.m2:.6g} outside [0, 1)",
                NonPhysicalParameterWarning,
                stacklevel=2,
            )
            return False
        return True

    def with_value(self, name: str, value: float) -> "ModelParams":
        """Return a copy with one parameter changed.

        ``"m1"``/``"m2"`` are routed through the odour parameterisation by
        fixing the refuge probability at 1 and setting the odour intensity.
        """
        if name == "m1":
            return dataclasses.replace(self, m_fp=1.0, a1=value)
        if name == "m2":
            return dataclasses.replace(self, m_sp=1.0, a2=value)
        if name not in PARAM_NAMES:
            raise DomainError(f"unknown parameter {name!r}")
        return dataclasses.replace(self, **{name: value})

    def get(self, name: str) -> float:
        if name in ("m1", "m2") or name in PARAM_NAMES:
            return float(getattr(self, name))
        raise DomainError(f"unknown parameter {name!r}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.init}


PARAM_NAMES = tuple(f.name for f in dataclasses.fields(ModelParams) if f.init)
SWEEPABLE = ("m1", "m2", "q", "r", "beta", "a1", "a2", "r1", "r2", "r3", "r4", "r5",
             "d1", "d2", "b", "alpha")


@dataclass(frozen=True)
class State:
    """Population densities of prey, intermediate predator and top predator."""

    x1: float
    x2: float
    x3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2, self.x3], dtype=float)

    def __iter__(self):
        return iter((self.x1, self.x2, self.x3))


class ParamBatch:
    """Column-stacked parameters, so the vector field can broadcast over many sets.

    Exposes the same attribute names as :class:`ModelParams`, with each
    attribute a 1-d array; states are then shaped ``(3, n_sets)``.
    """

    def __init__(self, params: Sequence[ModelParams]):
        if not params:
            raise DomainError("ParamBatch needs at least one parameter set")
        self.params = tuple(params)
        for name in PARAM_NAMES + ("m1", "m2"):
            setattr(self, name, np.array([getattr(p, name) for p in self.params]))

    def __len__(self):
        return len(self.params)


def baseline_params(**overrides) -> ModelParams:
    """The default parameter set (r1=2, r4=3, beta=0.01, m1=m2=0.5, ...)."""
    m1 = overrides.pop("m1", 0.5)
    m2 = overrides.pop("m2", 0.5)
    return ModelParams.from_refuge(m1=m1, m2=m2, **overrides)


def harvest_scenario_params(q: float = 0.838, **overrides) -> ModelParams:
    """Parameter set used to exhibit stability of the boundary equilibria."""
    base = dict(r1=0.46, r2=0.32, r3=0.5, r4=0.002, r5=0.38, beta=4.047, d1=0.096,
                d2=0.279, b=3.33, q=q, r=0.38)
    m1 = overrides.pop("m1", 0.72)
    m2 = overrides.pop("m2", 0.17)
    base.update(overrides)
    return ModelParams.from_refuge(m1=m1, m2=m2, **base)


def fractional_scenario_params(**overrides) -> ModelParams:
    base = dict(beta=4.047, m1=0.9471, m2=0.17, alpha=0.98)
    base.update(overrides)
    return baseline_params(**base)


def odour_scenario_params(**overrides) -> ModelParams:
    """Baseline with explicit odour parameterisation (m_fp=0.5, m_sp=0.6, a1=a2=1)."""
    base = dict(r1=2.0, r2=1.0, r3=1.0, r4=3.0, r5=1.0, d1=0.25, d2=0.5, beta=0.01, b=1.0,
                q=0.5, r=0.01, m_fp=0.5, a1=1.0, m_sp=0.6, a2=1.0)
    base.update(overrides)
    return ModelParams(**base)


PRESETS = {
    "baseline": baseline_params,
    "harvest": harvest_scenario_params,
    "fractional": fractional_scenario_params,
    "odour": odour_scenario_params,
}


def derived_refuge(params: ModelParams) -> tuple[float, float]:
    """Refuge fractions ``(m1, m2) = (m_fp * a1, m_sp * a2)``."""
    return params.m_fp * params.a1, params.m_sp * params.a2


def as_state_array(s) -> np.ndarray:
    """Coerce a :class:`State` or array-like of leading length 3 into a float array."""
    if isinstance(s, State):
        arr = s.as_array()
    else:
        arr = np.asarray(s, dtype=float)
    if arr.ndim == 0 or arr.shape[0] != 3:
        raise DomainError(f"state must have leading dimension 3, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("state contains non-finite values")
    return arr


def _rhs(x, p):
    # No validation: hot path for the integrators. Broadcasts over trailing axes.
    x1, x2, x3 = x[0], x[1], x[2]
    prey_eaten = p.r2 * (1.0 - p.m1) * (1.0 + p.beta * x1) * x1 * x2
    mid_eaten = p.r4 * (1.0 - p.m2) * x2 * x3 / (1.0 + p.b * x2)
    return np.array([
        p.r1 * x1 * (1.0 - x1) - prey_eaten - p.q * p.r * x1,
        p.r3 * prey_eaten - mid_eaten - p.d1 * x2,
        p.r5 * mid_eaten - p.d2 * x3,
    ])


def rhs_factory(p):
    """Fast closure ``x -> f(x)`` with the parameter combinations precomputed.

    Works for :class:`ModelParams` and :class:`ParamBatch`; integrators call
    it in their inner loops.
    """
    k1 = p.r2 * (1.0 - p.m1)
    k2 = p.r4 * (1.0 - p.m2)
    r3, r5, beta, b = p.r3, p.r5, p.beta, p.b
    r1, d1, d2 = p.r1, p.d1, p.d2
    growth = p.r1 - p.q * p.r

    def f(x):
        x1, x2, x3 = x[0], x[1], x[2]
        u = k1 * (1.0 + beta * x1) * x1 * x2
        v = k2 * x2 * x3 / (1.0 + b * x2)
        out = np.empty_like(x)
        out[0] = (growth - r1 * x1) * x1 - u
        out[1] = r3 * u - v - d1 * x2
        out[2] = r5 * v - d2 * x3
        return out

    return f


def vector_field(s, p: ModelParams) -> np.ndarray:
    """Right-hand side ``(f1, f2, f3)`` of the model at state ``s``."""
    return _rhs(as_state_array(s), p)


def jacobian(s, p: ModelParams) -> np.ndarray:
    """Analytic 3x3 Jacobian of :func:`vector_field` at ``s``."""
    x1, x2, x3 = as_state_array(s)[:3]
    k1 = p.r2 * (1.0 - p.m1)
    k2 = p.r4 * (1.0 - p.m2)
    g = 1.0 + p.b * x2
    odour = 1.0 + p.beta * x1
    dodour = 1.0 + 2.0 * p.beta * x1  # d/dx1 of (1 + beta x1) x1
    return np.array([
        [p.r1 * (1.0 - 2.0 * x1) - k1 * dodour * x2 - p.q * p.r, -k1 * odour * x1, 0.0],
        [p.r3 * k1 * dodour * x2, p.r3 * k1 * odour * x1 - k2 * x3 / g**2 - p.d1, -k2 * x2 / g],
        [0.0, p.r5 * k2 * x3 / g**2, p.r5 * k2 * x2 / g - p.d2],
    ])


def states_from_rows(rows: Iterable[Sequence[float]]) -> list[State]:
    return [State(*map(float, row)) for row in rows]
