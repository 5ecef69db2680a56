"""Time integration of the food chain.

``integrate_caputo_abm`` is the fractional Adams-Bashforth-Moulton
predictor-corrector on a uniform grid with the full history kept.  The
history sums are causal convolutions of the stored right-hand sides with
fixed weight sequences; they are evaluated with a divide-and-conquer FFT
scheme, which is exact (no memory truncation) and costs O(N log^2 N)
instead of O(N^2).

``integrate_classic`` is fixed-step RK4 for the integer-order system.  Both
accept a :class:`~fracchain.model.ParamBatch` so that many parameter sets
can be advanced in lock step; states are then shaped ``(3, n_sets)``.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np
from scipy import signal, special

from .exceptions import DivergenceError, DomainError, IntegrationError
from .mittag_leffler import mittag_leffler
from .model import ModelParams, ParamBatch, State, as_state_array, rhs_factory

__all__ = [
    "NonnegPolicy",
    "SolverConfig",
    "Trajectory",
    "integrate_caputo_abm",
    "integrate_classic",
    "abm_solve",
    "orbit_amplitude",
    "boundedness_constants",
    "lyapunov_w",
    "check_boundedness",
    "write_trajectory_csv",
    "NEG_TOL",
]

log = logging.getLogger(__name__)

NEG_TOL = 1e-9
_BASE_BLOCK = 256

Params = Union[ModelParams, ParamBatch]


class NonnegPolicy(enum.Enum):
    Clamp = "clamp"
    Reject = "reject"

    @classmethod
    def parse(cls, value) -> "NonnegPolicy":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise DomainError(f"unknown nonneg policy {value!r}; use 'clamp' or 'reject'") from None


@dataclass(frozen=True)
class SolverConfig:
    """Grid and policy settings shared by both integrators.

    ``alpha=None`` takes the order from the parameter set.
    """

    t_end: float = 100.0
    h: float = 1e-2
    alpha: float | None = None
    corrector_iterations: int = 1
    nonneg_policy: NonnegPolicy = NonnegPolicy.Clamp
    transient_fraction: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "nonneg_policy", NonnegPolicy.parse(self.nonneg_policy))
        if not (math.isfinite(self.h) and self.h > 0):
            raise DomainError(f"step size h must be positive, got {self.h}")
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise DomainError(f"t_end must be positive, got {self.t_end}")
        if int(self.corrector_iterations) != self.corrector_iterations or self.corrector_iterations < 1:
            raise DomainError(f"corrector_iterations must be an integer >= 1, got {self.corrector_iterations}")
        if self.alpha is not None and not 0 < self.alpha <= 1:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0 <= self.transient_fraction < 1:
            raise DomainError(f"transient_fraction must lie in [0, 1), got {self.transient_fraction}")

    @property
    def n_steps(self) -> int:
        # Round rather than floor so t_end=5, h=1e-3 gives exactly 5000 steps.
        return max(1, int(round(self.t_end / self.h)))


@dataclass(frozen=True)
class Trajectory:
    """Uniform-grid solution. ``values`` has shape ``(n_times, 3)`` or ``(n_times, 3, n_sets)``."""

    times: np.ndarray
    values: np.ndarray
    alpha: float
    params: object
    method: str = "abm"
    clamp_count: int = 0
    max_clamp: float = 0.0
    transient_fraction: float = 0.5
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for arr in (self.times, self.values):
            arr.setflags(write=False)

    def __len__(self):
        return len(self.times)

    @property
    def batched(self) -> bool:
        return self.values.ndim == 3

    @property
    def states(self) -> list[State]:
        if self.batched:
            raise DomainError("states of a batched trajectory are not single State objects")
        return [State(*row) for row in self.values.tolist()]

    @property
    def final(self) -> np.ndarray:
        return self.values[-1]

    def component(self, index: int) -> np.ndarray:
        if index not in (0, 1, 2):
            raise DomainError(f"component index must be 0, 1 or 2, got {index}")
        return self.values[:, index]

    def select(self, k: int) -> "Trajectory":
        """Single parameter set ``k`` out of a batched trajectory."""
        if not self.batched:
            raise DomainError("trajectory is not batched")
        p = self.params.params[k] if isinstance(self.params, ParamBatch) else self.params
        return Trajectory(self.times, np.ascontiguousarray(self.values[:, :, k]), self.alpha, p,
                          self.method, self.clamp_count, self.max_clamp, self.transient_fraction)


def _check_initial(s0, params) -> np.ndarray:
    x0 = as_state_array(s0)
    if isinstance(params, ParamBatch):
        if x0.ndim == 1:
            x0 = np.repeat(x0[:, None], len(params), axis=1)
        elif x0.shape != (3, len(params)):
            raise DomainError(f"batched initial state must have shape (3, {len(params)}), got {x0.shape}")
    if np.any(x0 < 0):
        raise DomainError("initial state must be nonnegative")
    return x0.astype(float)


class _Guard:
    """Nonnegativity policy plus divergence detection, with clamp bookkeeping."""

    def __init__(self, policy: NonnegPolicy):
        self.policy = policy
        self.count = 0
        self.worst = 0.0

    def __call__(self, x: np.ndarray, step: int) -> np.ndarray:
        if not np.all(np.isfinite(x)):
            raise DivergenceError(f"state became non-finite at step {step}", step=step)
        neg = x < 0
        if neg.any():
            depth = float(-x[neg].min())
            if self.policy is NonnegPolicy.Reject and depth > NEG_TOL:
                raise IntegrationError(
                    f"component dropped to {-depth:.3e} at step {step} under the reject policy", step=step)
            self.count += int(neg.sum())
            if depth > self.worst:
                self.worst = depth
            if depth > NEG_TOL:
                log.debug("clamped negative state %.3e at step %d", -depth, step)
            x = np.where(neg, 0.0, x)
        return x


def _abm_weights(alpha: float, n: int):
    k = np.arange(n + 2, dtype=float)
    b = (k + 1) ** alpha - k**alpha
    c = (k + 2) ** (alpha + 1) + k ** (alpha + 1) - 2 * (k + 1) ** (alpha + 1)
    return b, c


def abm_solve(f: Callable[[np.ndarray, int], np.ndarray], x0: np.ndarray, alpha: float, h: float,
              n_steps: int, corrector_iterations: int = 1,
              guard: Callable[[np.ndarray, int], np.ndarray] | None = None) -> np.ndarray:
    """Generic fractional ABM for ``D^alpha x = f(x)``, ``x(0) = x0``, any state shape.

    ``f(x, step)`` returns the right-hand side; ``guard(x, step)`` may
    post-process each accepted state.  Returns an array of shape
    ``(n_steps + 1,) + x0.shape``.
    """
    x0 = np.asarray(x0, dtype=float)
    shape = x0.shape
    d = x0.size
    N = n_steps
    b, c = _abm_weights(alpha, N)
    pred_scale = h**alpha / special.gamma(alpha + 1)
    corr_scale = h**alpha / special.gamma(alpha + 2)
    m = np.arange(N + 1, dtype=float)
    # a_{0,m} for m >= 1; replaces c[m-1] on the j=0 history term.
    a0 = np.zeros(N + 1)
    a0[1:] = (m[1:] - 1) ** (alpha + 1) - (m[1:] - 1 - alpha) * m[1:] ** alpha

    X = np.empty((N + 1, d))
    F = np.empty((N + 1, d))
    SP = np.zeros((N + 1, d))  # sum_{j<m} b[m-1-j] F_j
    SC = np.zeros((N + 1, d))  # sum_{j<m} c[m-1-j] F_j
    X[0] = x0.ravel()
    F[0] = np.asarray(f(x0, 0), dtype=float).ravel()
    x0_flat = X[0]
    guard = guard or (lambda x, step: x)

    def direct(lo: int, hi: int):
        for mm in range(max(lo, 1), hi):
            if mm > lo:
                seg = F[lo:mm]
                SP[mm] += b[mm - 1 - lo::-1][: mm - lo] @ seg
                SC[mm] += c[mm - 1 - lo::-1][: mm - lo] @ seg
            hist = SC[mm] + (a0[mm] - c[mm - 1]) * F[0]
            xp = x0_flat + pred_scale * SP[mm]
            for _ in range(corrector_iterations):
                fp = np.asarray(f(xp.reshape(shape), mm), dtype=float).ravel()
                xp = x0_flat + corr_scale * (fp + hist)
            x = guard(xp.reshape(shape), mm).ravel()
            X[mm] = x
            F[mm] = np.asarray(f(x.reshape(shape), mm), dtype=float).ravel()

    def solve(lo: int, hi: int):
        if hi - lo <= _BASE_BLOCK:
            direct(lo, hi)
            return
        mid = (lo + hi) // 2
        solve(lo, mid)
        l1, l2 = mid - lo, hi - mid
        seg = F[lo:mid]
        for w, S in ((b, SP), (c, SC)):
            conv = signal.fftconvolve(seg, w[: l1 + l2 - 1, None], axes=0)
            S[mid:hi] += conv[l1 - 1: l1 - 1 + l2]
        solve(mid, hi)

    solve(0, N + 1)
    return X.reshape((N + 1,) + shape)


def integrate_caputo_abm(s0, p: Params, cfg: SolverConfig | None = None) -> Trajectory:
    """Caputo food chain by fractional ABM (PECE by default), full memory.

    At ``alpha = 1`` the weights collapse to Euler predictor plus trapezoidal
    corrector.
    """
    cfg = cfg or SolverConfig()
    alpha = _order(p, cfg)
    x0 = _check_initial(s0, p)
    guard = _Guard(cfg.nonneg_policy)
    rhs = rhs_factory(p)
    X = abm_solve(lambda x, step: rhs(x), x0, alpha, cfg.h, cfg.n_steps,
                  cfg.corrector_iterations, guard)
    times = np.arange(cfg.n_steps + 1) * cfg.h
    return Trajectory(times, X, alpha, p, "abm", guard.count, guard.worst, cfg.transient_fraction)


def _order(p, cfg: SolverConfig) -> float:
    if cfg.alpha is not None:
        return float(cfg.alpha)
    alpha = np.unique(np.atleast_1d(p.alpha))
    if alpha.size != 1:
        raise DomainError("batched parameter sets must share one fractional order")
    return float(alpha[0])


def integrate_classic(s0, p: Params, cfg: SolverConfig | None = None) -> Trajectory:
    """Integer-order system by classical fixed-step RK4; ``alpha`` is ignored."""
    cfg = cfg or SolverConfig()
    x = _check_initial(s0, p)
    h, N = cfg.h, cfg.n_steps
    guard = _Guard(cfg.nonneg_policy)
    X = np.empty((N + 1,) + x.shape)
    X[0] = x
    f = rhs_factory(p)
    half, sixth = 0.5 * h, h / 6.0
    for n in range(1, N + 1):
        k1 = f(x)
        k2 = f(x + half * k1)
        k3 = f(x + half * k2)
        k4 = f(x + h * k3)
        x = guard(x + sixth * (k1 + 2.0 * (k2 + k3) + k4), n)
        X[n] = x
    times = np.arange(N + 1) * h
    return Trajectory(times, X, 1.0, p, "rk4", guard.count, guard.worst, cfg.transient_fraction)


def orbit_amplitude(traj: Trajectory, component: int = 0, transient_fraction: float | None = None):
    """Peak-to-peak amplitude of one component after discarding the transient.

    Returns a float, or an array over parameter sets for a batched trajectory.
    """
    frac = traj.transient_fraction if transient_fraction is None else transient_fraction
    if not 0 <= frac < 1:
        raise DomainError(f"transient fraction must lie in [0, 1), got {frac}")
    start = int(math.floor(frac * (len(traj) - 1)))
    if len(traj) - start < 2:
        raise DomainError("trajectory too short for the requested transient window")
    window = traj.component(component)[start:]
    amp = window.max(axis=0) - window.min(axis=0)
    return float(amp) if np.ndim(amp) == 0 else amp


def boundedness_constants(p: ModelParams) -> tuple[float, float]:
    """``(delta, bound)`` with ``delta = min(d1, d2) / 2`` and ``bound = (r1 + delta)^2 / (4 r1 delta)``.

    ``W = x1 + x2 / r3 + x3 / (r3 r5)`` satisfies ``D^alpha W + delta W <= (r1 + delta)^2 / (4 r1)``,
    so ``bound`` is the asymptotic ceiling of ``W``.
    """
    delta = min(p.d1, p.d2) / 2.0
    if delta <= 0 or p.r1 <= 0:
        raise DomainError("boundedness needs r1 > 0 and min(d1, d2) > 0")
    return delta, (p.r1 + delta) ** 2 / (4.0 * p.r1 * delta)


def lyapunov_w(values: np.ndarray, p: ModelParams) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    return v[..., 0] + v[..., 1] / p.r3 + v[..., 2] / (p.r3 * p.r5)


def check_boundedness(traj: Trajectory, eps: float = 0.05, n_checkpoints: int = 400) -> bool:
    """Check ``W(t) <= (1 + eps) * envelope(t)`` along a single trajectory.

    The comparison principle gives ``W(t) <= W0 E + bound (1 - E)`` with
    ``E = E_alpha(-delta t^alpha)``.  ``E`` is evaluated at checkpoints and
    used as an upper envelope on the interval that follows each one.
    """
    if traj.batched:
        raise DomainError("check_boundedness expects a single trajectory")
    p = traj.params
    delta, bound = boundedness_constants(p)
    w = lyapunov_w(traj.values, p)
    w0 = w[0]
    idx = np.unique(np.linspace(0, len(w) - 1, n_checkpoints + 1).astype(int))
    for i0, i1 in zip(idx[:-1], idx[1:]):
        e = mittag_leffler(traj.alpha, -delta * traj.times[i0] ** traj.alpha)
        env = w0 * e + bound * (1 - e) if w0 >= bound else bound
        if w[i0:i1 + 1].max() > (1 + eps) * env:
            return False
    return True


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """Write ``t,x1,x2,x3`` rows with 17 significant digits."""
    if traj.batched:
        raise DomainError("select a single parameter set before exporting")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x1", "x2", "x3"])
        for t, row in zip(traj.times.tolist(), traj.values.tolist()):
            w.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])
