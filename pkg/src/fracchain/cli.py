"""``fracchain`` command line.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 validation-suite failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .bifurcation import (bubbling_diagram, detect_hopf, detect_transcritical,
                          sweep_equilibrium_curve, write_amplitude_csv, write_events_csv,
                          write_sweep_csv)
from .config import Command, RunConfig, load_config, params_table, parse_config
from .equilibria import all_equilibria, residual
from .exceptions import ConfigError, FracChainError
from .fracsolve import integrate_caputo_abm, integrate_classic, write_trajectory_csv
from .stability import classify_equilibrium
from .validation import run_suite

__all__ = ["run", "main", "EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERICAL", "EXIT_VALIDATION"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VALIDATION = 0, 2, 3, 4

log = logging.getLogger("fracchain")


def _g(x) -> str:
    return f"{float(x):.17g}"


class _Artifacts:
    """Tracks written files so a failed run can remove its partial output."""

    def __init__(self, out: Path):
        self.out = out
        self.files: list[Path] = []
        self.manifest: dict = {}

    def path(self, name: str, columns, x=None, y=None) -> Path:
        p = self.out / name
        self.files.append(p)
        self.manifest[name] = {"columns": list(columns), "x": x, "y": y}
        return p

    def cleanup(self):
        for p in self.files:
            p.unlink(missing_ok=True)


def _simulate(cfg: RunConfig, art: _Artifacts, echo):
    integrate = integrate_classic if cfg.integrator == "rk4" else integrate_caputo_abm
    traj = integrate(cfg.s0, cfg.params, cfg.solver)
    write_trajectory_csv(traj, art.path("trajectory.csv", ["t", "x1", "x2", "x3"], "t", ["x1", "x2", "x3"]))
    echo(f"{cfg.integrator}: {len(traj)} points, alpha={traj.alpha}, final state "
         + ", ".join(f"{v:.6g}" for v in traj.final)
         + (f", {traj.clamp_count} clamps (largest {traj.max_clamp:.2e})" if traj.clamp_count else ""))


def _equilibria(cfg: RunConfig, art: _Artifacts, echo):
    cols = ["kind", "x1", "x2", "x3", "exists", "degenerate", "residual", "margins"]
    with open(art.path("equilibria.csv", cols), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for eq in all_equilibria(cfg.params):
            margins = ";".join(f"{c.name}={_g(c.margin)}" for c in eq.existence_report)
            w.writerow([eq.kind.value] + [_g(v) for v in eq.point]
                       + [str(eq.exists).lower(), str(eq.degenerate).lower(),
                          _g(residual(eq.point, cfg.params)), margins])
            echo(f"{eq.kind.value:16s} exists={str(eq.exists):5s} point=("
                 + ", ".join(f"{v:.6g}" for v in eq.point) + ")")


def _stability(cfg: RunConfig, art: _Artifacts, echo):
    cols = ["kind", "exists", "verdict", "criterion", "N1", "N2", "N3", "H", "discriminant",
            "eig1_re", "eig1_im", "eig2_re", "eig2_im", "eig3_re", "eig3_im", "fractional_condition"]
    with open(art.path("stability.csv", cols), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for eq in all_equilibria(cfg.params):
            rep = classify_equilibrium(eq, cfg.params)
            eig = [part for z in rep.eigenvalues for part in (_g(z.real), _g(z.imag))]
            w.writerow([eq.kind.value, str(eq.exists).lower(), rep.verdict.value, rep.criterion_used.value]
                       + [_g(v) for v in rep.rh_quantities] + [_g(rep.discriminant)] + eig
                       + [rep.fractional_condition or ""])
            echo(f"{eq.kind.value:16s} exists={str(eq.exists):5s} {rep.verdict.value} "
                 f"({rep.criterion_used.value})")


def _sweep(cfg: RunConfig, art: _Artifacts, echo):
    curve = sweep_equilibrium_curve(cfg.sweep, threads=cfg.threads)
    write_sweep_csv(curve, art.path("sweep.csv", ["param", "x1", "x2", "x3", "N1", "N2", "N3", "H",
                                                  "verdict", "exists"], "param", ["x1", "x2", "x3"]))
    events = sorted(detect_hopf(curve) + detect_transcritical(curve), key=lambda e: e.critical_value)
    write_events_csv(events, art.path("events.csv", ["kind", "param_name", "critical_value",
                                                     "bracket_lo", "bracket_hi", "transversal"]))
    for ev in events:
        flag = " (nonphysical)" if ev.nonphysical else ""
        echo(f"{ev.kind.value:13s} {ev.param_name} = {ev.critical_value:.9g}{flag}")


def _bubbling(cfg: RunConfig, art: _Artifacts, echo):
    from dataclasses import replace
    solver = cfg.solver if cfg.solver.alpha is not None else replace(cfg.solver, alpha=cfg.params.alpha)
    diagram = bubbling_diagram(cfg.sweep, solver, cfg.s0)
    write_amplitude_csv(diagram, art.path("amplitude.csv", ["param", "amp_x1", "amp_x2", "amp_x3"],
                                          "param", ["amp_x1", "amp_x2", "amp_x3"]))
    k = int(np.argmax(np.where(np.isfinite(diagram.amplitudes[:, 0]), diagram.amplitudes[:, 0], -1)))
    echo(f"{len(diagram.values)} points; peak x1 amplitude {diagram.amplitudes[k, 0]:.6g} "
         f"at {cfg.sweep.param}={diagram.values[k]:.6g}; {int(diagram.diverged.sum())} diverged")


def _validate(cfg: RunConfig, art: _Artifacts, echo) -> bool:
    results = run_suite(cfg.seed, cfg.n_draws, cfg.validate_t_end, log=echo)
    with open(art.path("validation.csv", ["check", "passed", "detail"]), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["check", "passed", "detail"])
        for r in results:
            w.writerow([r.name, str(r.passed).lower(), r.detail])
    ok = all(r.passed for r in results)
    echo(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
    return ok


_HANDLERS = {
    Command.simulate: _simulate,
    Command.equilibria: _equilibria,
    Command.stability: _stability,
    Command.sweep: _sweep,
    Command.bubbling: _bubbling,
    Command.validate: _validate,
}


def run(cfg: RunConfig, echo=print) -> int:
    """Execute one configured command, write its artifacts, return the exit status."""
    try:
        cfg.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        echo(f"error: cannot create output directory {cfg.out}: {exc}")
        return EXIT_CONFIG
    art = _Artifacts(cfg.out)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            outcome = _HANDLERS[cfg.command](cfg, art, echo)
    except FracChainError as exc:
        art.cleanup()
        echo(f"error: {type(exc).__name__}: {exc}")
        return EXIT_CONFIG if isinstance(exc, ConfigError) else EXIT_NUMERICAL
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        art.cleanup()
        echo(f"error: numerical failure: {exc}")
        return EXIT_NUMERICAL
    manifest = {
        "command": cfg.command.value,
        "version": __version__,
        "params": params_table(cfg.params),
        "integrator": cfg.integrator if cfg.command in (Command.simulate, Command.bubbling) else None,
        "seed": cfg.seed,
        "files": art.manifest,
    }
    with open(cfg.out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if cfg.command is Command.validate and not outcome:
        return EXIT_VALIDATION
    return EXIT_OK


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration value, e.g. params.alpha=0.98 (repeatable)")
    common.add_argument("--threads", type=int, help="worker threads for sweep grids")
    common.add_argument("-q", "--quiet", action="store_true", help="suppress progress output")

    parser = argparse.ArgumentParser(prog="fracchain", description="Odour-mediated food chain analysis.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        Command.simulate: "integrate one trajectory",
        Command.equilibria: "tabulate the four equilibria and their existence margins",
        Command.stability: "classify every equilibrium",
        Command.sweep: "sweep a parameter and detect Hopf / transcritical points",
        Command.bubbling: "orbit amplitude over a parameter sweep",
        Command.validate: "run the randomized invariant suite",
    }
    for cmd, text in helps.items():
        sub.add_parser(cmd.value, parents=[common], help=text)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    echo = (lambda *_: None) if args.quiet else print
    try:
        kwargs = dict(command=args.command, overrides=args.overrides, out=args.out, threads=args.threads)
        cfg = load_config(args.config, **kwargs) if args.config else parse_config({}, **kwargs)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(cfg, echo)


if __name__ == "__main__":
    sys.exit(main())
