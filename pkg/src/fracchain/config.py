"""Run configuration: TOML document + ``--set`` overrides -> validated :class:`RunConfig`.

Precedence is flags > file > built-in defaults.  Layout::

    command = "sweep"          # optional; the CLI subcommand wins
    out = "out"
    seed = 0
    threads = 1
    s0 = [0.8, 0.6, 0.8]

    [params]                   # any ModelParams field, plus preset / m1 / m2
    preset = "baseline"
    m1 = 0.5

    [solver]                   # SolverConfig fields, plus method = auto | abm | rk4
    t_end = 100.0

    [sweep]
    param = "m1"
    lo = 0.3
    hi = 0.8

    [validate]
    n_draws = 100
    t_end = 500.0
"""

from __future__ import annotations

import copy
import dataclasses
import enum
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .bifurcation import DEFAULT_INITIAL_STATE, SweepSpec
from .equilibria import EquilibriumKind
from .exceptions import ConfigError, DomainError
from .fracsolve import NonnegPolicy, SolverConfig
from .model import PARAM_NAMES, PRESETS, ModelParams

__all__ = ["Command", "RunConfig", "parse_config", "load_config", "apply_overrides", "COMMAND_DEFAULTS"]


class Command(enum.Enum):
    simulate = "simulate"
    equilibria = "equilibria"
    stability = "stability"
    sweep = "sweep"
    bubbling = "bubbling"
    validate = "validate"


_NUM = (int, float)
_TOP = {"command": str, "out": str, "seed": int, "threads": int, "s0": list}
_PARAM_KEYS = {**{k: _NUM for k in PARAM_NAMES}, "m1": _NUM, "m2": _NUM, "preset": str}
_SOLVER_KEYS = {"t_end": _NUM, "h": _NUM, "alpha": _NUM, "corrector_iterations": int,
                "nonneg_policy": str, "transient_fraction": _NUM, "method": str}
_SWEEP_KEYS = {"param": str, "lo": _NUM, "hi": _NUM, "n": int, "kind": str}
_VALIDATE_KEYS = {"n_draws": int, "t_end": _NUM}
_SECTIONS = {"params": _PARAM_KEYS, "solver": _SOLVER_KEYS, "sweep": _SWEEP_KEYS,
             "validate": _VALIDATE_KEYS}

# Defaults that differ by command; the bubbling horizon has to outlast the
# slow decay near the two Hopf points.
COMMAND_DEFAULTS = {
    Command.simulate: {"solver": {"t_end": 100.0, "h": 1e-2}},
    Command.sweep: {"sweep": {"param": "m1", "lo": 0.3, "hi": 0.8, "n": 256}},
    Command.bubbling: {"solver": {"t_end": 40000.0, "h": 0.1, "transient_fraction": 0.5},
                       "sweep": {"param": "m1", "lo": 0.40, "hi": 0.58, "n": 19}},
}


@dataclass(frozen=True)
class RunConfig:
    command: Command
    params: ModelParams
    solver: SolverConfig
    sweep: SweepSpec | None
    out: Path
    seed: int = 0
    threads: int = 1
    s0: tuple[float, float, float] = DEFAULT_INITIAL_STATE
    method: str = "auto"
    n_draws: int = 100
    validate_t_end: float = 500.0
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def integrator(self) -> str:
        if self.method != "auto":
            return self.method
        return "rk4" if self.params.alpha == 1 else "abm"


def _type_name(types) -> str:
    types = types if isinstance(types, tuple) else (types,)
    return " or ".join(t.__name__ for t in types)


def _check_type(path: str, value, types):
    if isinstance(value, bool) or not isinstance(value, types):
        raise ConfigError(f"{path}: expected {_type_name(types)}, got {type(value).__name__} ({value!r})")
    if isinstance(value, float) and not math.isfinite(value):
        raise ConfigError(f"{path}: must be finite, got {value!r}")


def _validate_shape(doc: dict):
    unknown = [k for k in doc if k not in _TOP and k not in _SECTIONS]
    for section, keys in _SECTIONS.items():
        block = doc.get(section, {})
        if not isinstance(block, dict):
            raise ConfigError(f"{section}: expected a table, got {type(block).__name__}")
        unknown += [f"{section}.{k}" for k in block if k not in keys]
        for k, v in block.items():
            if k in keys:
                _check_type(f"{section}.{k}", v, keys[k])
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    for k, t in _TOP.items():
        if k in doc:
            _check_type(k, doc[k], t)


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(doc: dict, assignments) -> dict:
    """Apply ``key=value`` strings; ``key`` is dotted (``params.alpha``) or a unique bare name."""
    doc = copy.deepcopy(doc)
    for item in assignments or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, text = (s.strip() for s in item.split("=", 1))
        value = _parse_value(text)
        if "." in key:
            section, name = key.split(".", 1)
            doc.setdefault(section, {})
            if not isinstance(doc[section], dict):
                raise ConfigError(f"{section}: expected a table")
            doc[section][name] = value
        elif key in _TOP:
            doc[key] = value
        else:
            owners = [s for s, keys in _SECTIONS.items() if key in keys]
            if len(owners) != 1:
                where = "ambiguous between " + ", ".join(owners) if owners else "unknown"
                raise ConfigError(f"--set {key}: {where}; use section.key")
            doc.setdefault(owners[0], {})[key] = value
    return doc


def _build_params(block: dict) -> ModelParams:
    block = dict(block)
    preset = block.pop("preset", "baseline")
    if preset not in PRESETS:
        raise ConfigError(f"params.preset: unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    refuge = {k: block.pop(k) for k in ("m1", "m2") if k in block}
    for name, alias in (("m1", "a1"), ("m2", "a2")):
        if name in refuge and alias in block:
            raise ConfigError(f"params: give either {name} or {alias}, not both")
    try:
        p = PRESETS[preset](**{k: float(v) for k, v in block.items()})
        for name, v in refuge.items():
            p = p.with_value(name, float(v))
    except DomainError as exc:
        raise ConfigError(f"params: {exc}") from None
    return p


def parse_config(doc: dict | str | None, command=None, overrides=None, out=None,
                 threads: int | None = None) -> RunConfig:
    """Validate a configuration document (dict or TOML text) and apply defaults."""
    if doc is None:
        doc = {}
    elif isinstance(doc, str):
        try:
            doc = tomllib.loads(doc)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"malformed TOML: {exc}") from None
    doc = apply_overrides(doc, overrides)
    _validate_shape(doc)
    name = command or doc.get("command")
    if name is None:
        raise ConfigError("no command given")
    try:
        cmd = Command(name.value if isinstance(name, Command) else name)
    except ValueError:
        raise ConfigError(f"command: unknown command {name!r}; choose from {[c.value for c in Command]}") from None
    doc = _merge(COMMAND_DEFAULTS.get(cmd, {}), doc)

    params = _build_params(doc.get("params", {}))
    solver_block = dict(doc.get("solver", {}))
    method = solver_block.pop("method", "auto")
    if method not in ("auto", "abm", "rk4"):
        raise ConfigError(f"solver.method: expected auto, abm or rk4, got {method!r}")
    try:
        if "nonneg_policy" in solver_block:
            solver_block["nonneg_policy"] = NonnegPolicy.parse(solver_block["nonneg_policy"])
        solver = SolverConfig(**solver_block)
    except DomainError as exc:
        raise ConfigError(f"solver: {exc}") from None

    sweep = None
    if cmd in (Command.sweep, Command.bubbling):
        block = dict(doc.get("sweep", {}))
        missing = [k for k in ("param", "lo", "hi") if k not in block]
        if missing:
            raise ConfigError(f"sweep: missing keys {missing}")
        try:
            kind = EquilibriumKind.parse(block.pop("kind", "Coexisting"))
            sweep = SweepSpec(block["param"], float(block["lo"]), float(block["hi"]),
                              int(block.get("n", 256)), params, kind)
        except (DomainError, ValueError) as exc:
            raise ConfigError(f"sweep: {exc}") from None

    s0 = doc.get("s0", list(DEFAULT_INITIAL_STATE))
    if len(s0) != 3 or not all(isinstance(v, _NUM) and not isinstance(v, bool) for v in s0):
        raise ConfigError(f"s0: expected three numbers, got {s0!r}")
    if any(v < 0 for v in s0):
        raise ConfigError(f"s0: initial state must be nonnegative, got {s0!r}")
    validate = doc.get("validate", {})
    if validate.get("n_draws", 1) < 1:
        raise ConfigError(f"validate.n_draws: must be >= 1, got {validate['n_draws']}")
    if validate.get("t_end", 1.0) <= 0:
        raise ConfigError(f"validate.t_end: must be positive, got {validate['t_end']}")
    n_threads = threads if threads is not None else doc.get("threads", 1)
    if n_threads < 1:
        raise ConfigError(f"threads: must be >= 1, got {n_threads}")
    return RunConfig(
        command=cmd, params=params, solver=solver, sweep=sweep,
        out=Path(out if out is not None else doc.get("out", "out")),
        seed=int(doc.get("seed", 0)), threads=int(n_threads),
        s0=tuple(float(v) for v in s0), method=method,
        n_draws=int(validate.get("n_draws", 100)), validate_t_end=float(validate.get("t_end", 500.0)),
        raw=doc,
    )


def load_config(path, **kwargs) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, **kwargs)


def params_table(p: ModelParams) -> dict:
    """Plain dict of the init fields, for manifests."""
    return {f.name: getattr(p, f.name) for f in dataclasses.fields(p) if f.init}
