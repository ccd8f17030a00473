"""Command-line front end.

Subcommands: solve (one trajectory, final density out), study (convergence
table), mc-validate (stochastic cross-check), prox-bench (single proximal
step timing). Any flag may also come from a key=value config file; explicit
flags win. Failures exit nonzero with a JSON error record on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from ._version import __version__
from .caputo import FractionalOrder
from .grids import build_grid, potential_from_function
from .solver import SolverConfig, free_energy, solve
from .study import (
    ExperimentConfig,
    FORCINGS,
    default_grid_size,
    emit,
    emit_validation,
    mc_validation,
    resolve_forcing,
    run_convergence_study,
)

_FORMATS = ("csv", "json", "pretty")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fjko", description=__doc__)
    parser.add_argument("--version", action="version", version=f"fjko {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="key=value file supplying defaults for any flag")
        p.add_argument("--alpha", help="fractional order (comma list for study)")
        p.add_argument("--forcing", help=f"forcing name, one of {sorted(FORCINGS)}")
        p.add_argument("--grid-size", help="cells per axis")
        p.add_argument("--steps", help="time steps (comma list for study)")
        p.add_argument("--ref-steps", help="reference time steps (study)")
        p.add_argument("--horizon", help="final time T")
        p.add_argument("--gamma-eval", help="fixed relaxation for the transport error metric")
        p.add_argument("--eps", help="marginal tolerance of the proximal stepper")
        p.add_argument("--max-iters", help="iteration cap of the proximal stepper")
        p.add_argument("--seed", help="random seed")
        p.add_argument("--workers", help="process count for study cells")
        p.add_argument("--paths", help="Monte-Carlo path count")
        p.add_argument("--out", help="output path (default stdout)")
        p.add_argument("--format", help=f"output format, one of {_FORMATS}")

    for name in ("solve", "study", "mc-validate", "prox-bench"):
        common(sub.add_parser(name))
    return parser


def _load_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"malformed config line {line!r} (expected key=value)")
            values[key.strip()] = value.strip()
    return values


class _Options:
    """Flag values resolved against the config file and per-command defaults."""

    def __init__(self, args: argparse.Namespace, defaults: dict[str, str | None]):
        self._cli = vars(args)
        self._file = _load_config_file(args.config) if args.config else {}
        self._defaults = defaults

    def raw(self, flag: str) -> str | None:
        cli = self._cli.get(flag.replace("-", "_"))
        if cli is not None:
            return cli
        if flag in self._file:
            return self._file[flag]
        return self._defaults.get(flag)

    def str_(self, flag: str) -> str:
        value = self.raw(flag)
        if value is None:
            raise ValueError(f"missing required option --{flag}")
        return value

    def float_(self, flag: str) -> float:
        return float(self.str_(flag))

    def int_(self, flag: str) -> int:
        return int(self.str_(flag))

    def optional_float(self, flag: str) -> float | None:
        value = self.raw(flag)
        return None if value is None else float(value)

    def float_list(self, flag: str) -> tuple[float, ...]:
        return tuple(float(v) for v in self.str_(flag).split(","))

    def int_list(self, flag: str) -> tuple[int, ...]:
        return tuple(int(v) for v in self.str_(flag).split(","))


def _write(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _solver_config(opt: _Options) -> SolverConfig:
    forcing = resolve_forcing(opt.str_("forcing"))
    m = int(opt.raw("grid-size") or default_grid_size(forcing.dim))
    grid = build_grid(forcing.dim, m)
    return SolverConfig(
        order=FractionalOrder(opt.float_("alpha")),
        horizon=opt.float_("horizon"),
        steps=opt.int_("steps"),
        grid=grid,
        potential=potential_from_function(grid, forcing.fn),
        eps=opt.optional_float("eps"),
        max_iter=opt.int_("max-iters"),
    )


def _cmd_solve(opt: _Options) -> str:
    cfg = _solver_config(opt)
    trajectory = solve(cfg)
    final = trajectory.final
    coords = cfg.grid.coordinates()
    meta = {
        "generator": f"fjko {__version__}",
        "command": "solve",
        "alpha": repr(cfg.order.alpha),
        "forcing": opt.str_("forcing"),
        "grid-size": str(cfg.grid.m),
        "steps": str(cfg.steps),
        "horizon": repr(cfg.horizon),
        "gamma": repr(cfg.gamma_value),
        "free_energy": repr(free_energy(final, cfg.potential)),
        "mass_error": repr(abs(final.total_mass - 1.0)),
        "dykstra_iterations": str(sum(r.iterations for r in trajectory.steps)),
    }
    fmt = opt.str_("format")
    axis_names = ["x1", "x2"][: cfg.grid.dim]
    if fmt == "csv":
        lines = [f"# {k}={v}" for k, v in meta.items()]
        lines.append(",".join(["index", *axis_names, "p"]))
        for i in range(cfg.grid.n_cells):
            xs = [repr(float(c[i])) for c in coords]
            lines.append(",".join([str(i), *xs, repr(float(final.p[i]))]))
        return "\n".join(lines) + "\n"
    if fmt == "json":
        doc = {
            "metadata": meta,
            "cells": {name: [float(v) for v in c] for name, c in zip(axis_names, coords)},
            "p": [float(v) for v in final.p],
        }
        return json.dumps(doc, indent=2) + "\n"
    if fmt == "pretty":
        lines = [f"{k} = {v}" for k, v in meta.items()]
        for i in range(cfg.grid.n_cells):
            xs = " ".join(f"{float(c[i]):8.5f}" for c in coords)
            lines.append(f"{i:>6d} {xs} {final.p[i]:.8e}")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def _cmd_study(opt: _Options) -> str:
    forcing = resolve_forcing(opt.str_("forcing"))
    config = ExperimentConfig(
        forcing=forcing.name,
        alphas=opt.float_list("alpha"),
        n_values=opt.int_list("steps"),
        n_ref=opt.int_("ref-steps"),
        m=int(opt.raw("grid-size")) if opt.raw("grid-size") else None,
        horizon=opt.float_("horizon"),
        gamma_eval=opt.optional_float("gamma-eval"),
        eps=opt.optional_float("eps"),
        max_iter=opt.int_("max-iters"),
        seed=opt.int_("seed"),
        workers=opt.int_("workers"),
    )
    return emit(run_convergence_study(config), opt.str_("format"))


def _cmd_mc_validate(opt: _Options) -> str:
    forcing = resolve_forcing(opt.str_("forcing"))
    report = mc_validation(
        forcing=forcing.name,
        alpha=opt.float_("alpha"),
        horizon=opt.float_("horizon"),
        n_paths=opt.int_("paths"),
        m=int(opt.raw("grid-size") or default_grid_size(forcing.dim)),
        pde_steps=opt.int_("steps"),
        seed=opt.int_("seed"),
        eps=opt.optional_float("eps"),
        max_iter=opt.int_("max-iters"),
    )
    return emit_validation(report, opt.str_("format"))


def _cmd_prox_bench(opt: _Options) -> str:
    cfg = _solver_config(opt)
    kernel = cfg.build_kernel()
    q_bar = cfg.initial_density()
    from .entropic import dykstra_jko_step

    start = time.perf_counter()
    density, state = dykstra_jko_step(
        q_bar, kernel, cfg.potential, cfg.tau_prime, cfg.eps_value, cfg.max_iter
    )
    elapsed = time.perf_counter() - start
    record = {
        "generator": f"fjko {__version__}",
        "command": "prox-bench",
        "alpha": cfg.order.alpha,
        "forcing": opt.str_("forcing"),
        "grid-size": cfg.grid.m,
        "steps": cfg.steps,
        "gamma": cfg.gamma_value,
        "tau_prime": cfg.tau_prime,
        "representation": kernel.representation,
        "iterations": state.ell,
        "violation": state.violation,
        "seconds": elapsed,
        "free_energy_before": free_energy(q_bar, cfg.potential),
        "free_energy_after": free_energy(density, cfg.potential),
    }
    fmt = opt.str_("format")
    if fmt == "json":
        return json.dumps(record, indent=2) + "\n"
    if fmt == "csv":
        lines = ["key,value"] + [f"{k},{v}" for k, v in record.items()]
        return "\n".join(lines) + "\n"
    if fmt == "pretty":
        return "\n".join(f"{k} = {v}" for k, v in record.items()) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


_DEFAULTS: dict[str, dict[str, str | None]] = {
    "solve": {
        "forcing": "linear",
        "alpha": "0.6",
        "steps": "20",
        "horizon": "1.0",
        "max-iters": "5000",
        "format": "csv",
    },
    "study": {
        "forcing": "linear",
        "alpha": "0.6,0.8,1.0",
        "steps": "20,40,80,160,320",
        "ref-steps": "1280",
        "horizon": "1.0",
        "max-iters": "5000",
        "seed": "0",
        "workers": "1",
        "format": "csv",
    },
    "mc-validate": {
        "forcing": "linear",
        "alpha": "0.8",
        "steps": "320",
        "horizon": "1.0",
        "paths": "200000",
        "max-iters": "5000",
        "seed": "0",
        "format": "csv",
    },
    "prox-bench": {
        "forcing": "linear",
        "alpha": "0.6",
        "steps": "20",
        "horizon": "1.0",
        "max-iters": "5000",
        "format": "pretty",
    },
}

_COMMANDS = {
    "solve": _cmd_solve,
    "study": _cmd_study,
    "mc-validate": _cmd_mc_validate,
    "prox-bench": _cmd_prox_bench,
}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        opt = _Options(args, _DEFAULTS[args.command])
        text = _COMMANDS[args.command](opt)
        _write(text, opt.raw("out"))
        return 0
    except Exception as exc:  # error record contract: machine readable, nonzero exit
        record = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(record), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
