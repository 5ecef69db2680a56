"""One-parameter sweeps, Hopf and transcritical detection, bubbling diagrams.

Hopf points are sign changes of ``H = N1 N2 - N3`` along the tracked
equilibrium (at ``alpha < 1`` the Matignon margin of the complex pair takes
its place).  Transcritical points are sign changes of ``N3`` or of an
existence margin.  Every candidate is refined by bisection on a freshly
recomputed indicator.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .equilibria import Equilibrium, EquilibriumKind, all_equilibria, equilibrium_of_kind
from .exceptions import DivergenceError, DomainError, PreconditionError
from .fracsolve import (SolverConfig, integrate_caputo_abm, integrate_classic, orbit_amplitude)
from .model import SWEEPABLE, ModelParams, ParamBatch, _rhs, jacobian
from .stability import StabilityReport, classify_equilibrium

__all__ = [
    "EventKind",
    "SweepSpec",
    "CurvePoint",
    "EquilibriumCurve",
    "BifurcationEvent",
    "SotomayorCheck",
    "AmplitudeDiagram",
    "DEFAULT_INITIAL_STATE",
    "sweep_equilibrium_curve",
    "hopf_indicator",
    "transcritical_indicator",
    "detect_hopf",
    "detect_transcritical",
    "refine_bisection",
    "verify_transcritical_sotomayor",
    "bubbling_diagram",
    "write_sweep_csv",
    "write_events_csv",
    "write_amplitude_csv",
]

log = logging.getLogger(__name__)

DEFAULT_INITIAL_STATE = (0.8, 0.6, 0.8)
REFINE_TOL = 1e-7
ZERO_EIG_TOL = 1e-6
_DEGENERATE_SLOPE = 1e-8


class EventKind(enum.Enum):
    Hopf = "Hopf"
    Transcritical = "Transcritical"


@dataclass(frozen=True)
class SweepSpec:
    param: str
    lo: float
    hi: float
    n: int = 256
    base: ModelParams = field(default_factory=ModelParams)
    kind: EquilibriumKind = EquilibriumKind.COEXISTING

    def __post_init__(self):
        object.__setattr__(self, "kind", EquilibriumKind.parse(self.kind))
        if self.param not in SWEEPABLE:
            raise DomainError(f"parameter {self.param!r} cannot be swept; choose from {SWEEPABLE}")
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise DomainError(f"sweep range needs lo < hi, got ({self.lo}, {self.hi})")
        if int(self.n) != self.n or self.n < 16:
            raise DomainError(f"sweep needs at least 16 grid points, got {self.n}")

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, int(self.n))

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    def params_at(self, value: float) -> ModelParams:
        return self.base.with_value(self.param, float(value))


@dataclass(frozen=True)
class CurvePoint:
    value: float
    params: ModelParams | None
    equilibrium: Equilibrium | None
    report: StabilityReport | None
    error: str = ""

    @property
    def exists(self) -> bool:
        return self.equilibrium is not None and self.equilibrium.exists

    @property
    def rh(self) -> tuple[float, float, float, float]:
        if self.report is None:
            return (math.nan,) * 4
        return self.report.rh_quantities

    @property
    def verdict(self) -> str:
        if self.report is None:
            return "Invalid"
        return self.report.verdict.value


@dataclass(frozen=True)
class EquilibriumCurve:
    spec: SweepSpec
    points: tuple[CurvePoint, ...]

    def __len__(self):
        return len(self.points)

    @property
    def values(self) -> np.ndarray:
        return np.array([pt.value for pt in self.points])

    @property
    def exists(self) -> np.ndarray:
        return np.array([pt.exists for pt in self.points])

    @property
    def rh_table(self) -> np.ndarray:
        """Columns ``N1, N2, N3, H``."""
        return np.array([pt.rh for pt in self.points], dtype=float)

    def segments(self) -> list[tuple[float, float, str]]:
        """Maximal runs of equal verdict (nonexistent points labelled ``Absent``)."""
        out = []
        for pt in self.points:
            label = pt.verdict if pt.exists else "Absent"
            if out and out[-1][2] == label:
                out[-1] = (out[-1][0], pt.value, label)
            else:
                out.append((pt.value, pt.value, label))
        return out


@dataclass(frozen=True)
class SotomayorCheck:
    u1: np.ndarray
    u2: np.ndarray
    eigenvalue: float
    q1: float
    q2: float
    q3: float
    passed: bool
    co_moving: bool = False


@dataclass(frozen=True)
class BifurcationEvent:
    kind: EventKind
    param_name: str
    critical_value: float
    bracket: tuple[float, float]
    indicator: str
    residual: float
    transversality: float
    transversal: bool
    nonphysical: bool = False
    sotomayor: SotomayorCheck | None = None
    extra: dict = field(default_factory=dict, compare=False)


def _evaluate(spec: SweepSpec, value: float) -> CurvePoint:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            p = spec.params_at(value)
    except DomainError as exc:
        return CurvePoint(float(value), None, None, None, str(exc))
    eq = equilibrium_of_kind(spec.kind, p)
    return CurvePoint(float(value), p, eq, classify_equilibrium(eq, p))


def sweep_equilibrium_curve(spec: SweepSpec, threads: int | None = None) -> EquilibriumCurve:
    """Equilibrium and stability report at every grid value; nothing is dropped.

    ``threads > 1`` evaluates grid points concurrently; the output is
    assembled by index and does not depend on evaluation order.
    """
    grid = spec.grid
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(lambda v: _evaluate(spec, v), grid))
    else:
        points = [_evaluate(spec, v) for v in grid]
    return EquilibriumCurve(spec, tuple(points))


def _complex_pair(eigs) -> complex | None:
    pair = [z for z in eigs if abs(z.imag) > 1e-12]
    return max(pair, key=lambda z: z.real) if pair else None


def hopf_indicator(spec: SweepSpec) -> Callable[[float], float]:
    """``v -> N1 N2 - N3`` at the tracked equilibrium (Matignon margin of the pair when alpha < 1)."""
    def f(value: float) -> float:
        pt = _evaluate(spec, value)
        if pt.report is None or pt.report.char_poly is None:
            return math.nan
        if pt.params.alpha < 1:
            z = _complex_pair(pt.report.eigenvalues)
            return math.nan if z is None else abs(math.atan2(z.imag, z.real)) - pt.params.alpha * math.pi / 2
        return pt.report.char_poly.hopf_indicator
    return f


def transcritical_indicator(spec: SweepSpec) -> Callable[[float], float]:
    """``v -> N3`` (``-det J``) at the tracked equilibrium."""
    def f(value: float) -> float:
        pt = _evaluate(spec, value)
        if pt.report is None or pt.report.char_poly is None:
            return math.nan
        return pt.report.char_poly.c3
    return f


def _margin_indicator(spec: SweepSpec, name: str) -> Callable[[float], float]:
    def f(value: float) -> float:
        pt = _evaluate(spec, value)
        try:
            return pt.equilibrium.margin(name)
        except (KeyError, AttributeError):
            return math.nan
    return f


def refine_bisection(indicator: Callable[[float], float], bracket: tuple[float, float],
                     tol: float = REFINE_TOL, max_iter: int = 80) -> tuple[float, tuple[float, float]]:
    """Shrink a sign-change bracket until its width is below ``tol * (1 + |v|)``.

    Returns ``(midpoint, (lo, hi))``.  A NaN probe is handled by nudging the
    probe toward the nearer finite end; after ``max_iter`` probes the current
    bracket is returned as is.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = indicator(lo), indicator(hi)
    if not (math.isfinite(flo) and math.isfinite(fhi)):
        raise PreconditionError(f"indicator not finite at the bracket ends ({flo}, {fhi})")
    if flo == 0:
        return lo, (lo, lo)
    if fhi == 0:
        return hi, (hi, hi)
    if np.sign(flo) == np.sign(fhi):
        raise PreconditionError(f"indicator has the same sign at {lo} and {hi}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if hi - lo < tol * (1 + abs(mid)):
            break
        fm = indicator(mid)
        frac = 0.5
        while not math.isfinite(fm) and frac > 1e-3:
            frac *= 0.5
            mid = lo + frac * (hi - lo)
            fm = indicator(mid)
        if not math.isfinite(fm):
            log.warning("indicator NaN throughout (%g, %g); stopping refinement", lo, hi)
            break
        if fm == 0:
            return mid, (mid, mid)
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return 0.5 * (lo + hi), (lo, hi)


def _slope(indicator, v: float, step: float) -> float:
    return (indicator(v + step) - indicator(v - step)) / (2 * step)


def _nonphysical(spec: SweepSpec, v: float) -> bool:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            p = spec.params_at(v)
    except DomainError:
        return True
    return not p.is_physical or (spec.param in ("a1", "a2") and v < 0)


def _eigen_crossings(curve: EquilibriumCurve) -> list[float]:
    re, vals = [], []
    for pt in curve.points:
        z = _complex_pair(pt.report.eigenvalues) if pt.report and pt.report.char_poly else None
        if curve.spec.base.alpha < 1 and z is not None:
            re.append(abs(math.atan2(z.imag, z.real)) - pt.params.alpha * math.pi / 2)
        else:
            re.append(z.real if z is not None else math.nan)
        vals.append(pt.value)
    out = []
    for i in range(len(re) - 1):
        a, b = re[i], re[i + 1]
        if math.isfinite(a) and math.isfinite(b) and a * b < 0:
            out.append(vals[i] + (vals[i + 1] - vals[i]) * a / (a - b))
    return out


def detect_hopf(curve: EquilibriumCurve, tol: float = REFINE_TOL) -> list[BifurcationEvent]:
    """Sign changes of the Hopf indicator between two existing grid points."""
    spec = curve.spec
    ind = hopf_indicator(spec)
    table = curve.rh_table
    fractional = spec.base.alpha < 1 and spec.param != "alpha"
    if fractional:
        raw = np.array([ind(v) for v in curve.values])
    else:
        raw = table[:, 3]
    crossings = _eigen_crossings(curve)
    events = []
    for i in range(len(curve) - 1):
        a, b = raw[i], raw[i + 1]
        if not (math.isfinite(a) and math.isfinite(b)):
            if curve.points[i].exists or curve.points[i + 1].exists:
                warnings.warn(f"Hopf indicator not finite near {curve.values[i]:.6g}; cell skipped")
            continue
        if not (curve.points[i].exists and curve.points[i + 1].exists):
            continue
        if a * b > 0 or (a == 0 and b == 0):
            continue
        if a == 0 and i > 0 and raw[i - 1] * b < 0:
            continue  # already reported from the previous cell
        n1, n2 = table[i, 0], table[i, 1]
        m1, m2 = table[i + 1, 0], table[i + 1, 1]
        if not fractional and not ((n1 > 0 and n2 > 0) or (m1 > 0 and m2 > 0)):
            continue
        v, br = refine_bisection(ind, (curve.values[i], curve.values[i + 1]), tol)
        at = _evaluate(spec, v)
        if not fractional and not at.rh[1] > 0:
            # H = 0 with N2 <= 0 puts a real pair +-sqrt(-N2) on the axis: neutral saddle, no Hopf.
            log.info("H sign change at %g is a neutral saddle (N2 <= 0); skipped", v)
            continue
        slope = _slope(ind, v, 1e-5 * (spec.hi - spec.lo))
        near = [c for c in crossings if abs(c - v) <= 2 * spec.spacing]
        events.append(BifurcationEvent(
            EventKind.Hopf, spec.param, v, br,
            "matignon-margin" if fractional else "N1N2-N3",
            ind(v), slope, abs(slope) >= _DEGENERATE_SLOPE, _nonphysical(spec, v),
            extra={"eigen_crossing": near[0] if near else None,
                   "detectors_agree": bool(near)}))
    return events


def _cell_candidates(curve: EquilibriumCurve) -> list[tuple[int, str, str]]:
    """(cell index, indicator label, margin name or '') for every transcritical candidate."""
    table = curve.rh_table
    out = []
    pts = curve.points
    for i in range(len(pts) - 1):
        a, b = table[i, 2], table[i + 1, 2]
        either = pts[i].exists or pts[i + 1].exists
        found = False
        if math.isfinite(a) and math.isfinite(b) and a * b < 0 and either:
            out.append((i, "N3", ""))
            found = True
        elif either and not (math.isfinite(a) and math.isfinite(b)):
            warnings.warn(f"N3 not finite near {pts[i].value:.6g}; cell skipped")
        if found or pts[i].exists == pts[i + 1].exists:
            continue
        eq_a, eq_b = pts[i].equilibrium, pts[i + 1].equilibrium
        if eq_a is None or eq_b is None:
            continue
        for ca in eq_a.existence_report:
            try:
                mb = eq_b.margin(ca.name)
            except KeyError:
                continue
            if math.isfinite(ca.margin) and math.isfinite(mb) and ca.margin * mb < 0:
                out.append((i, "margin", ca.name))
                break
    return out


def _partners(p: ModelParams, tracked: EquilibriumKind) -> list[Equilibrium]:
    return [eq for eq in all_equilibria(p) if eq.kind is not tracked and eq.finite]


def _collision(spec: SweepSpec, v: float) -> EquilibriumKind | None:
    p = spec.params_at(v)
    me = equilibrium_of_kind(spec.kind, p)
    if not me.finite:
        return None
    best, dist = None, math.inf
    for eq in _partners(p, spec.kind):
        d = float(np.max(np.abs(eq.point - me.point)))
        if d < dist:
            best, dist = eq.kind, d
    return best if dist < 1e-4 else None


def _exchange(spec: SweepSpec, bracket: tuple[float, float], partner: EquilibriumKind | None) -> bool | None:
    if partner is None:
        return None
    step = max(10 * (bracket[1] - bracket[0]), 1e-4 * (spec.hi - spec.lo))
    verdicts = []
    for v in (bracket[0] - step, bracket[1] + step):
        try:
            p = spec.params_at(v)
        except DomainError:
            return None
        me = equilibrium_of_kind(spec.kind, p)
        other = equilibrium_of_kind(partner, p)
        if not (me.finite and other.finite):
            return None
        verdicts.append((classify_equilibrium(me, p).verdict, classify_equilibrium(other, p).verdict))
    (m_lo, o_lo), (m_hi, o_hi) = verdicts
    return m_lo != m_hi and o_lo != o_hi


def detect_transcritical(curve: EquilibriumCurve, tol: float = REFINE_TOL,
                         sotomayor: bool = True) -> list[BifurcationEvent]:
    """Zero-eigenvalue crossings (``N3`` sign change) and existence-margin flips."""
    spec = curve.spec
    n3 = transcritical_indicator(spec)
    events = []
    for i, label, margin in _cell_candidates(curve):
        ind = n3 if label == "N3" else _margin_indicator(spec, margin)
        try:
            v, br = refine_bisection(ind, (curve.values[i], curve.values[i + 1]), tol)
        except PreconditionError as exc:
            log.warning("transcritical candidate near %g dropped: %s", curve.values[i], exc)
            continue
        slope = _slope(ind, v, 1e-5 * (spec.hi - spec.lo))
        partner = _collision(spec, v)
        check = None
        if sotomayor and partner is not None:
            p = spec.params_at(v)
            try:
                check = verify_transcritical_sotomayor(
                    p, equilibrium_of_kind(spec.kind, p), param=spec.param,
                    branch=lambda mu, k=partner: equilibrium_of_kind(k, spec.params_at(mu)).point)
            except PreconditionError as exc:
                log.info("Sotomayor check skipped at %g: %s", v, exc)
        events.append(BifurcationEvent(
            EventKind.Transcritical, spec.param, v, br,
            "N3" if label == "N3" else f"margin:{margin}",
            ind(v), slope, abs(slope) >= _DEGENERATE_SLOPE, _nonphysical(spec, v), check,
            extra={"collision_partner": partner.value if partner else None,
                   "exchange_of_stability": _exchange(spec, br, partner)}))
    merged: list[BifurcationEvent] = []
    for ev in sorted(events, key=lambda e: e.critical_value):
        if merged and abs(ev.critical_value - merged[-1].critical_value) <= spec.spacing:
            if merged[-1].indicator != "N3" and ev.indicator == "N3":
                merged[-1] = ev
            continue
        merged.append(ev)
    return merged


def _null_vectors(J: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Smallest singular directions; sign fixed so the largest entry is positive.
    _, _, vt = np.linalg.svd(J)
    u1 = vt[-1]
    _, _, wt = np.linalg.svd(J.T)
    u2 = wt[-1]
    u1 = u1 * np.sign(u1[np.argmax(np.abs(u1))])
    u2 = u2 * np.sign(u2[np.argmax(np.abs(u2))])
    return u1, u2


def verify_transcritical_sotomayor(p: ModelParams, eq: Equilibrium, param: str = "r1",
                                   branch: Callable[[float], np.ndarray] | None = None,
                                   step: float = 1e-5, tol: float = 1e-7) -> SotomayorCheck:
    """Sotomayor conditions for a transcritical bifurcation in ``param`` at ``eq``.

    ``q1 = U2 . f_mu``, ``q2 = U2 . (D f_mu U1)``, ``q3 = U2 . D^2 f(U1, U1)``
    with unit null vectors and central differences.  Passing ``branch`` (a
    map ``mu -> point`` of the equilibrium that persists through the
    collision) differentiates along that branch instead of at a frozen
    state, which the conditions need when no branch sits at a fixed
    point of phase space.
    """
    if not eq.finite:
        raise PreconditionError("equilibrium has non-finite coordinates")
    x0 = np.asarray(eq.point, dtype=float)
    J = jacobian(x0, p)
    eigs = np.linalg.eigvals(J)
    k = int(np.argmin(np.abs(eigs)))
    if abs(eigs[k]) >= ZERO_EIG_TOL:
        raise PreconditionError(f"no near-zero eigenvalue at the equilibrium (smallest |lambda| = {abs(eigs[k]):.3e})")
    u1, u2 = _null_vectors(J)
    mu = p.get(param)
    h = step * max(1.0, abs(mu))

    def at(m):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return p.with_value(param, m)

    p_hi, p_lo = at(mu + h), at(mu - h)
    if branch is None:
        x_hi = x_lo = x0
    else:
        x_hi, x_lo = np.asarray(branch(mu + h)), np.asarray(branch(mu - h))
    q1 = float(u2 @ (_rhs(x_hi, p_hi) - _rhs(x_lo, p_lo)) / (2 * h)) if branch is None else 0.0
    dJ = (jacobian(x_hi, p_hi) - jacobian(x_lo, p_lo)) / (2 * h)
    q2 = float(u2 @ dJ @ u1)
    e = 1e-4
    d2f = (_rhs(x0 + e * u1, p) - 2 * _rhs(x0, p) + _rhs(x0 - e * u1, p)) / e**2
    q3 = float(u2 @ d2f)
    passed = abs(q1) < tol and abs(q2) > tol and abs(q3) > tol
    return SotomayorCheck(u1, u2, float(eigs[k].real), q1, q2, q3, bool(passed), branch is not None)


@dataclass(frozen=True)
class AmplitudeDiagram:
    param: str
    values: np.ndarray
    amplitudes: np.ndarray  # (n, 3); inf marks a divergent run
    diverged: np.ndarray


def _batch_amplitudes(params: Sequence[ModelParams], s0, cfg: SolverConfig, alpha: float) -> np.ndarray:
    integrate = integrate_classic if alpha == 1 else integrate_caputo_abm
    traj = integrate(s0, ParamBatch(params), cfg)
    return np.stack([np.atleast_1d(orbit_amplitude(traj, c)) for c in range(3)], axis=1)


def bubbling_diagram(spec: SweepSpec, cfg: SolverConfig | None = None,
                     s0=DEFAULT_INITIAL_STATE) -> AmplitudeDiagram:
    """Post-transient peak-to-peak amplitudes over the sweep grid.

    All grid points are integrated together as one batch (RK4 at
    ``alpha = 1``, ABM otherwise).  If the batch diverges, the points are
    rerun one by one and the divergent ones get infinite amplitude.
    """
    cfg = cfg or SolverConfig(t_end=2000, h=0.02)
    values = spec.grid
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params = [spec.params_at(v) for v in values]
    alpha = cfg.alpha if cfg.alpha is not None else params[0].alpha
    if any(p.alpha != alpha for p in params) and cfg.alpha is None:
        rows = [_batch_amplitudes([p], s0, cfg, p.alpha)[0] for p in params]
        amps = np.array(rows)
    else:
        try:
            amps = _batch_amplitudes(params, s0, cfg, alpha)
        except DivergenceError:
            rows = []
            for p in params:
                try:
                    rows.append(_batch_amplitudes([p], s0, cfg, alpha)[0])
                except DivergenceError:
                    rows.append(np.full(3, math.inf))
            amps = np.array(rows)
    return AmplitudeDiagram(spec.param, values, amps, ~np.all(np.isfinite(amps), axis=1))


def _g(x: float) -> str:
    return f"{x:.17g}"


def write_sweep_csv(curve: EquilibriumCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["param", "x1", "x2", "x3", "N1", "N2", "N3", "H", "verdict", "exists"])
        for pt in curve.points:
            x = pt.equilibrium.point if pt.equilibrium is not None else (math.nan,) * 3
            w.writerow([_g(pt.value)] + [_g(float(v)) for v in x] + [_g(v) for v in pt.rh]
                       + [pt.verdict, str(pt.exists).lower()])


def write_events_csv(events: Sequence[BifurcationEvent], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "param_name", "critical_value", "bracket_lo", "bracket_hi", "transversal"])
        for ev in events:
            w.writerow([ev.kind.value, ev.param_name, _g(ev.critical_value), _g(ev.bracket[0]),
                        _g(ev.bracket[1]), str(ev.transversal).lower()])


def write_amplitude_csv(diagram: AmplitudeDiagram, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["param", "amp_x1", "amp_x2", "amp_x3"])
        for v, row in zip(diagram.values.tolist(), diagram.amplitudes.tolist()):
            w.writerow([_g(v)] + [_g(a) for a in row])
