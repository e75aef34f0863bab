"""Command-line surface: flat key = value configs, JSON reports, CSV profiles.

The config format is one ``key = value`` pair per line, ``#`` starts a
comment, unknown keys are rejected.  Every run writes ``report.json``
into the output directory plus one CSV per computed radial profile with
columns ``r,u,h,tail,A0,Atheta``.  All numeric output uses 17
significant digits so files are byte-identical across runs with the
same config and seed.

Exit codes: 0 success, 1 experiment-level failure, 2 configuration
error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import oracles
from .chern_simons import b_energy, b_gradient, compute_h, gauge_fields
from .experiments import (
    DEFAULT_SCHEDULE,
    asymptotics_experiment,
    continuation,
    doubling_experiment,
    multiplicity_sweep,
)
from .flow import FlowError, FlowOptions, Solution, solve_ground, solve_nodal
from .functionals import ProblemParams, gradient
from .grid import RadialGrid, h1_norm_sq, integrate, make_grid
from .operator_t import apply_T

__all__ = ["RunConfig", "ConfigError", "parse_config", "serialize_config", "run", "main"]


class ConfigError(ValueError):
    """Malformed or out-of-range configuration."""


_COMMANDS = (
    "verify",
    "ground",
    "nodal",
    "continuation",
    "doubling",
    "asymptotics",
    "multiplicity",
)

# key -> (python type, default); the single source of truth for the format
_SCHEMA: dict[str, tuple[type, object]] = {
    "command": (str, "verify"),
    "omega": (float, 1.0),
    "lam": (float, 1.0),
    "p": (float, 5.0),
    "gamma": (float, 0.0),
    "beta": (float, 0.0),
    "alpha": (float, 0.25),
    "q": (float, 7.0),
    "cs_strength": (float, 1.0),
    "r_max": (float, 40.0),
    "n_nodes": (int, 4097),
    "max_iters": (int, 2000),
    "grad_tol": (float, 1e-8),
    "eps_cone": (float, 1e-3),
    "step_init": (float, 1.0),
    "step_shrink": (float, 0.5),
    "armijo_c": (float, 1e-4),
    "rng_seed": (int, 0),
    "lambda_list": (list, [10.0, 100.0, 1000.0]),
    "k_list": (list, [2, 3]),
    "lambda_small": (float, 0.1),
    "output_dir": (str, "out"),
    "threads": (int, 1),
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    params: ProblemParams
    r_max: float
    n_nodes: int
    opts: FlowOptions
    lambda_list: tuple[float, ...]
    k_list: tuple[int, ...]
    lambda_small: float
    output_dir: str
    threads: int


def _parse_value(key: str, raw: str, lineno: int):
    typ, _ = _SCHEMA[key]
    try:
        if typ is list:
            items = [s.strip() for s in raw.split(",") if s.strip()]
            if key == "k_list":
                return [int(s) for s in items]
            return [float(s) for s in items]
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(
            f"line {lineno}: cannot parse value {raw!r} for key {key!r} as {typ.__name__}"
        ) from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate a flat key = value config."""
    values: dict[str, object] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw, lineno)
    for key, (_, default) in _SCHEMA.items():
        values.setdefault(key, default.copy() if isinstance(default, list) else default)

    if values["command"] not in _COMMANDS:
        raise ConfigError(
            f"command must be one of {', '.join(_COMMANDS)}, got {values['command']!r}"
        )
    try:
        params = ProblemParams(
            omega=values["omega"],
            lam=values["lam"],
            p=values["p"],
            gamma=values["gamma"],
            beta=values["beta"],
            alpha=values["alpha"],
            q=values["q"],
            cs_strength=values["cs_strength"],
        )
        opts = FlowOptions(
            max_iters=values["max_iters"],
            grad_tol=values["grad_tol"],
            eps_cone=values["eps_cone"],
            step_init=values["step_init"],
            step_shrink=values["step_shrink"],
            armijo_c=values["armijo_c"],
            rng_seed=values["rng_seed"],
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None
    if values["command"] != "verify" and params.lam <= 0:
        raise ConfigError("lam must be positive for solver commands")
    if values["n_nodes"] < 16:
        raise ConfigError(f"n_nodes must be >= 16, got {values['n_nodes']}")
    if not values["r_max"] > 0:
        raise ConfigError(f"r_max must be positive, got {values['r_max']}")
    if values["threads"] < 1:
        raise ConfigError(f"threads must be >= 1, got {values['threads']}")
    if not 0.0 < values["lambda_small"] <= 1.0:
        raise ConfigError(
            f"lambda_small must lie in (0, 1], got {values['lambda_small']}"
        )
    return RunConfig(
        command=values["command"],
        params=params,
        r_max=values["r_max"],
        n_nodes=values["n_nodes"],
        opts=opts,
        lambda_list=tuple(values["lambda_list"]),
        k_list=tuple(values["k_list"]),
        lambda_small=values["lambda_small"],
        output_dir=values["output_dir"],
        threads=values["threads"],
    )


def serialize_config(config: RunConfig) -> str:
    """Emit a config text that parses back to the identical RunConfig."""
    p, o = config.params, config.opts
    pairs = [
        ("command", config.command),
        ("omega", repr(p.omega)),
        ("lam", repr(p.lam)),
        ("p", repr(p.p)),
        ("gamma", repr(p.gamma)),
        ("beta", repr(p.beta)),
        ("alpha", repr(p.alpha)),
        ("q", repr(p.q)),
        ("cs_strength", repr(p.cs_strength)),
        ("r_max", repr(config.r_max)),
        ("n_nodes", str(config.n_nodes)),
        ("max_iters", str(o.max_iters)),
        ("grad_tol", repr(o.grad_tol)),
        ("eps_cone", repr(o.eps_cone)),
        ("step_init", repr(o.step_init)),
        ("step_shrink", repr(o.step_shrink)),
        ("armijo_c", repr(o.armijo_c)),
        ("rng_seed", str(o.rng_seed)),
        ("lambda_list", ",".join(repr(x) for x in config.lambda_list)),
        ("k_list", ",".join(str(x) for x in config.k_list)),
        ("lambda_small", repr(config.lambda_small)),
        ("output_dir", config.output_dir),
        ("threads", str(config.threads)),
    ]
    return "".join(f"{k} = {v}\n" for k, v in pairs)


def config_dict(config: RunConfig) -> dict:
    """The flat key -> value mapping echoed into every report."""
    p, o = config.params, config.opts
    return {
        "command": config.command,
        "omega": p.omega,
        "lam": p.lam,
        "p": p.p,
        "gamma": p.gamma,
        "beta": p.beta,
        "alpha": p.alpha,
        "q": p.q,
        "cs_strength": p.cs_strength,
        "r_max": config.r_max,
        "n_nodes": config.n_nodes,
        "max_iters": o.max_iters,
        "grad_tol": o.grad_tol,
        "eps_cone": o.eps_cone,
        "step_init": o.step_init,
        "step_shrink": o.step_shrink,
        "armijo_c": o.armijo_c,
        "rng_seed": o.rng_seed,
        "lambda_list": list(config.lambda_list),
        "k_list": list(config.k_list),
        "lambda_small": config.lambda_small,
        "output_dir": config.output_dir,
        "threads": config.threads,
    }


# ---------------------------------------------------------------------------
# output


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_profile_csv(path: Path, grid: RadialGrid, u: np.ndarray) -> None:
    """Radial profile with the gauge quantities derived from it."""
    u = np.asarray(u, dtype=float)
    h = compute_h(grid, u)
    a0, atheta = gauge_fields(grid, u)
    # tail and A0 coincide under the decaying gauge; both columns are
    # kept so the file carries the full ansatz.
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("r,u,h,tail,A0,Atheta\n")
        for i in range(grid.n_nodes):
            fh.write(
                ",".join(
                    (
                        _fmt(grid.nodes[i]),
                        _fmt(u[i]),
                        _fmt(h[i]),
                        _fmt(a0[i]),
                        _fmt(a0[i]),
                        _fmt(atheta[i]),
                    )
                )
                + "\n"
            )


def _solution_dict(sol: Solution) -> dict:
    return {
        "energy": sol.energy,
        "grad_norm": sol.residuals.grad_norm,
        "nehari": sol.residuals.nehari,
        "pohozaev": sol.residuals.pohozaev,
        "node_count": sol.cone.node_count,
        "dist_plus": sol.cone.dist_plus,
        "dist_minus": sol.cone.dist_minus,
        "in_W": sol.cone.in_W,
        "iters": sol.iters,
        "converged": sol.converged,
    }


def _write_report(outdir: Path, config: RunConfig, payload: dict) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    payload = {"config": config_dict(config), **payload}
    with (outdir / "report.json").open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# verify suite


def _verify_checks(config: RunConfig) -> list[dict]:
    grid = make_grid(config.r_max, config.n_nodes)
    params = ProblemParams(
        omega=1.0, lam=1.0, p=5.0, gamma=0.5, beta=0.5, alpha=0.25, q=7.0
    )
    checks: list[dict] = []

    def record(name: str, measured: float, threshold: float) -> None:
        checks.append(
            {
                "check": name,
                "measured": measured,
                "threshold": threshold,
                "passed": bool(measured <= threshold),
            }
        )

    for l in (1.0, 2.0):
        target = 16.0 * math.pi * l * l / 3.0
        vals = oracles.extremal_check(grid, l)
        worst = max(abs(v - target) / target for v in vals)
        record(f"extremal_identity_l={l:g}", worst, 5e-3)

    quad = ProblemParams(omega=1.0, lam=0.0, p=5.0, cs_strength=0.0)
    u = oracles.seeded_field(grid, config.opts.rng_seed)
    record(
        "gradient_quadratic",
        oracles.fd_gradient_check(quad, grid, u, step=7e-4),
        1e-10,
    )
    record(
        "gradient_full",
        oracles.fd_gradient_check(params, grid, u, step=1e-5),
        1e-5,
    )

    worst_hom = 0.0
    for seed in range(20):
        w = oracles.seeded_field(grid, seed)
        pairing = float(np.dot(b_gradient(grid, w), w))
        six_b = 6.0 * b_energy(grid, w)
        worst_hom = max(worst_hom, abs(pairing - six_b) / abs(six_b))
        worst_hom = max(
            worst_hom, abs(b_energy(grid, 2.0 * w) - 64.0 * b_energy(grid, w))
            / abs(64.0 * b_energy(grid, w))
        )
    record("homogeneity_degree6", worst_hom, 1e-12)

    worst_desc = 0.0
    for seed in range(20):
        w = oracles.seeded_field(grid, 100 + seed)
        d = w - apply_T(params, grid, w)
        pairing = float(np.dot(gradient(params, grid, w), d))
        violation = h1_norm_sq(grid, params.omega, d) - pairing
        worst_desc = max(worst_desc, violation / h1_norm_sq(grid, params.omega, w))
    record("descent_inequality", worst_desc, 1e-10)
    return checks


# ---------------------------------------------------------------------------
# command runners


def run(config: RunConfig) -> int:
    # cap the BLAS/OpenMP pools; the banded solves gain nothing from
    # oversubscription and reproducibility is easier to reason about
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(config.threads)
    outdir = Path(config.output_dir)
    grid = make_grid(config.r_max, config.n_nodes)
    try:
        if config.command == "verify":
            checks = _verify_checks(config)
            _write_report(outdir, config, {"command": "verify", "checks": checks})
            return 0 if all(c["passed"] for c in checks) else 1

        if config.command == "ground":
            sol = solve_ground(config.params, grid, config.opts)
            _write_report(
                outdir, config, {"command": "ground", "solution": _solution_dict(sol)}
            )
            write_profile_csv(outdir / "ground.csv", grid, sol.field)
            return 0 if sol.converged else 1

        if config.command == "nodal":
            sol = solve_nodal(config.params, grid, config.opts)
            _write_report(outdir, config, {"command": "nodal", "solution": _solution_dict(sol)})
            write_profile_csv(outdir / "nodal.csv", grid, sol.field)
            return 0 if sol.converged and not sol.cone.in_W else 1

        if config.command == "continuation":
            report = continuation(config.params, DEFAULT_SCHEDULE, grid, config.opts)
            payload = {"command": "continuation", **report.to_dict()}
            _write_report(outdir, config, payload)
            if report.final is None:
                return 1
            write_profile_csv(outdir / "continuation_final.csv", grid, report.final.field)
            return 0

        if config.command == "doubling":
            report = doubling_experiment(
                list(config.lambda_list), config.params, grid, config.opts
            )
            _write_report(outdir, config, {"command": "doubling", **report.to_dict()})
            for row, sol in zip(report.rows, report.solutions):
                if sol is not None:
                    write_profile_csv(
                        outdir / f"doubling_lam{row.lam:g}.csv", grid, sol.field
                    )
            return 0 if all(r.error is None for r in report.rows) else 1

        if config.command == "asymptotics":
            report = asymptotics_experiment(
                list(config.lambda_list), config.params, grid, config.opts
            )
            _write_report(outdir, config, {"command": "asymptotics", **report.to_dict()})
            for row, sol in zip(report.rows, report.solutions):
                if sol is not None:
                    write_profile_csv(
                        outdir / f"asymptotics_lam{row.lam:g}.csv", grid, sol.field
                    )
            return 0 if all(r.error is None for r in report.rows) else 1

        if config.command == "multiplicity":
            report = multiplicity_sweep(
                list(config.k_list),
                config.lambda_small,
                config.params,
                grid,
                config.opts,
            )
            _write_report(outdir, config, {"command": "multiplicity", **report.to_dict()})
            for entry, sol in zip(report.entries, report.solutions):
                write_profile_csv(
                    outdir / f"multiplicity_k{entry.k}.csv", grid, sol.field
                )
            return 0 if report.distinct_count >= 1 else 1
    except FlowError as err:
        print(f"experiment failed: {err}", file=sys.stderr)
        return 1
    raise AssertionError(f"unhandled command {config.command!r}")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="csflow",
        description="Radial solver and experiment runner for the gauged "
        "Schrodinger equation with a self-consistent Chern-Simons term.",
    )
    parser.add_argument("--config", type=Path, help="path to a key = value config file")
    parser.add_argument("--output", type=Path, help="output directory override")
    parser.add_argument("--seed", type=int, help="rng_seed override")
    parser.add_argument("--threads", type=int, help="worker thread cap override")
    args = parser.parse_args(argv)

    text = ""
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as err:
            print(f"config error: {err}", file=sys.stderr)
            return 2
    try:
        config = parse_config(text)
        if args.output is not None:
            config = replace(config, output_dir=str(args.output))
        if args.seed is not None:
            config = replace(config, opts=replace(config.opts, rng_seed=args.seed))
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigError(f"threads must be >= 1, got {args.threads}")
            config = replace(config, threads=args.threads)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
