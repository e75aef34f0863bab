"""Headline experiments: continuation, energy doubling, asymptotics,
and the multi-bump sweep.

Each experiment returns a plain report dataclass whose ``to_dict`` gives
a JSON-ready summary; full radial profiles stay on the Solution objects
so the CLI can serialize them separately.

Large coefficients are handled in the unit-coefficient form: for lam > 1
the solvers run on the rescaled problem (lam = 1, shrunken nonlocal
coefficient) where amplitudes are O(1), and the computed field is mapped
back by the exact amplitude scaling before certification at the
requested parameters.  For lam <= 1 the problem is solved directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import oracles
from .flow import (
    FlowError,
    FlowOptions,
    Solution,
    _certify,
    _projected_descent,
    anneal_stage,
    newton_refine,
    solve_ground,
    solve_nodal,
)
from .functionals import ProblemParams, rescaled_params
from .grid import RadialGrid, h1_norm_sq

__all__ = [
    "DEFAULT_SCHEDULE",
    "StageSummary",
    "ContinuationReport",
    "DoublingRow",
    "DoublingReport",
    "AsymptoticsRow",
    "AsymptoticsReport",
    "MultiplicityEntry",
    "MultiplicityReport",
    "continuation",
    "doubling_experiment",
    "asymptotics_experiment",
    "multiplicity_sweep",
    "alternating_bumps",
    "refine_to_grid",
]


DEFAULT_SCHEDULE: tuple[tuple[float, float], ...] = tuple(
    [(2.0 ** (-k), 2.0 ** (-k)) for k in range(21)] + [(0.0, 0.0)]
)


def _summary_of(sol: Solution) -> dict:
    return {
        "energy": sol.energy,
        "grad_norm": sol.residuals.grad_norm,
        "nehari": sol.residuals.nehari,
        "pohozaev": sol.residuals.pohozaev,
        "node_count": sol.cone.node_count,
        "in_W": sol.cone.in_W,
        "iters": sol.iters,
        "converged": sol.converged,
    }


# ---------------------------------------------------------------------------
# continuation


@dataclass(frozen=True)
class StageSummary:
    gamma: float
    beta: float
    energy: float
    grad_norm: float
    node_count: int


@dataclass(frozen=True)
class ContinuationReport:
    schedule: tuple[tuple[float, float], ...]
    stages: tuple[StageSummary, ...]
    final: Solution | None
    trace: tuple[float, ...]
    aborted_at: int | None = None

    def to_dict(self) -> dict:
        out = {
            "schedule": [list(pair) for pair in self.schedule],
            "stages": [
                {
                    "gamma": s.gamma,
                    "beta": s.beta,
                    "energy": s.energy,
                    "grad_norm": s.grad_norm,
                    "node_count": s.node_count,
                }
                for s in self.stages
            ],
            "trace": list(self.trace),
            "aborted_at": self.aborted_at,
        }
        out["final"] = _summary_of(self.final) if self.final is not None else None
        return out


def continuation(
    params_base: ProblemParams,
    schedule: tuple[tuple[float, float], ...],
    grid: RadialGrid,
    opts: FlowOptions,
) -> ContinuationReport:
    """Walk a sign-changing solution along a (gamma, beta) schedule.

    The first stage is solved cold by the two-bump battery; every later
    stage is re-converged from the previous field.  A stage that cannot
    be re-converged aborts the walk and the report carries the stages
    completed so far.
    """
    if not schedule:
        raise ValueError("schedule must contain at least one (gamma, beta) stage")
    for g_, b_ in schedule:
        if not (0.0 <= g_ <= 1.0 and 0.0 <= b_ <= 1.0):
            raise ValueError(f"schedule stage ({g_}, {b_}) outside [0, 1]^2")

    stages: list[StageSummary] = []
    trace: list[float] = []
    sol: Solution | None = None
    u = None
    n_ref: int | None = None
    for k, (g_, b_) in enumerate(schedule):
        stage_params = replace(params_base, gamma=g_, beta=b_)
        try:
            if k == 0:
                sol = solve_nodal(stage_params, grid, opts)
                u = np.asarray(sol.field, dtype=float)
                n_ref = sol.cone.node_count
            else:
                u = anneal_stage(stage_params, grid, u, opts, n_want=n_ref)
                sol = _certify(stage_params, grid, u, opts, 0, True)
        except FlowError:
            return ContinuationReport(
                schedule=tuple(schedule),
                stages=tuple(stages),
                final=None,
                trace=tuple(trace),
                aborted_at=k,
            )
        stages.append(
            StageSummary(
                gamma=g_,
                beta=b_,
                energy=sol.energy,
                grad_norm=sol.residuals.grad_norm,
                node_count=sol.cone.node_count,
            )
        )
        trace.append(sol.energy)
    return ContinuationReport(
        schedule=tuple(schedule),
        stages=tuple(stages),
        final=sol,
        trace=tuple(trace),
    )


# ---------------------------------------------------------------------------
# solve-space plumbing shared by the lambda experiments


def _bar_form(params: ProblemParams) -> tuple[ProblemParams, float]:
    """Unit-coefficient parameters and the field scale back to the original.

    Returns (params_bar, amp) with u = amp * u_bar.  Identity when
    lam <= 1 (the problem is then solved as posed).
    """
    if params.lam <= 1.0:
        return params, 1.0
    bar = rescaled_params(replace(params, gamma=0.0, beta=0.0))
    bar = replace(bar, gamma=params.gamma, beta=params.beta)
    amp = params.lam ** (-1.0 / (params.p - 2.0))
    return bar, amp


def _nodal_at(
    params: ProblemParams, grid: RadialGrid, opts: FlowOptions
) -> Solution:
    """Sign-changing solution at params, solved in the friendlier space."""
    bar, amp = _bar_form(params)
    report = continuation(bar, DEFAULT_SCHEDULE, grid, opts)
    if report.final is None:
        raise FlowError(f"continuation aborted at stage {report.aborted_at}")
    if amp == 1.0:
        return report.final
    u = amp * np.asarray(report.final.field, dtype=float)
    u, rel, ok = newton_refine(params, grid, u, tol=min(opts.grad_tol, 1e-11))
    if not ok:
        raise FlowError(f"mapped-back field failed to recertify, rel={rel:.2e}")
    return _certify(params, grid, u, opts, 0, True)


def _ground_at(
    params: ProblemParams, grid: RadialGrid, opts: FlowOptions
) -> Solution:
    bar, amp = _bar_form(params)
    sol = solve_ground(bar, grid, opts)
    if amp == 1.0:
        return sol
    u = amp * np.asarray(sol.field, dtype=float)
    u, rel, ok = newton_refine(params, grid, u, tol=min(opts.grad_tol, 1e-11))
    if not ok:
        raise FlowError(f"mapped-back ground failed to recertify, rel={rel:.2e}")
    return _certify(params, grid, u, opts, sol.iters, True)


# ---------------------------------------------------------------------------
# energy doubling


@dataclass(frozen=True)
class DoublingRow:
    lam: float
    c_lambda: float
    m_lambda: float
    ratio: float
    doubled: bool
    error: str | None = None


@dataclass(frozen=True)
class DoublingReport:
    rows: tuple[DoublingRow, ...]
    c_local: float
    m_local: float
    solutions: tuple[Solution | None, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "lambda": r.lam,
                    "c_lambda": r.c_lambda,
                    "m_lambda": r.m_lambda,
                    "ratio": r.ratio,
                    "doubled": r.doubled,
                    "error": r.error,
                }
                for r in self.rows
            ],
            "c_local": self.c_local,
            "m_local": self.m_local,
            "m_local_doubled": self.m_local > 2.0 * self.c_local,
        }


def doubling_experiment(
    lambda_list: list[float],
    base: ProblemParams,
    grid: RadialGrid,
    opts: FlowOptions,
) -> DoublingReport:
    """Compare the sign-changing level against twice the ground level.

    For each lambda the ground energy c_lambda comes from the positive
    battery and the sign-changing energy m_lambda from the continuation
    final stage.  The local-equation reference pair (c0, m0) from the
    shooting oracle is attached for context.  Per-lambda failures are
    recorded in their row and the sweep continues.
    """
    if any(l <= 0 for l in lambda_list):
        raise ValueError("lambda_list must be positive")
    if sorted(lambda_list) != list(lambda_list):
        raise ValueError("lambda_list must be ascending")
    _, c_local = oracles.local_shoot(grid, base.omega, base.p, node_target=0)
    _, m_local = oracles.local_shoot(grid, base.omega, base.p, node_target=1)
    rows: list[DoublingRow] = []
    sols: list[Solution | None] = []
    for lam in lambda_list:
        params = replace(base, lam=lam, gamma=0.0, beta=0.0)
        try:
            c_sol = _ground_at(params, grid, opts)
            m_sol = _nodal_at(params, grid, opts)
        except FlowError as err:
            rows.append(
                DoublingRow(
                    lam=lam,
                    c_lambda=math.nan,
                    m_lambda=math.nan,
                    ratio=math.nan,
                    doubled=False,
                    error=str(err),
                )
            )
            sols.append(None)
            continue
        c_l, m_l = c_sol.energy, m_sol.energy
        rows.append(
            DoublingRow(
                lam=lam,
                c_lambda=c_l,
                m_lambda=m_l,
                ratio=m_l / c_l,
                doubled=m_l > 2.0 * c_l,
            )
        )
        sols.append(m_sol)
    return DoublingReport(
        rows=tuple(rows),
        c_local=c_local,
        m_local=m_local,
        solutions=tuple(sols),
    )


# ---------------------------------------------------------------------------
# asymptotics


@dataclass(frozen=True)
class AsymptoticsRow:
    lam: float
    lam_bar: float
    distance: float
    error: str | None = None


@dataclass(frozen=True)
class AsymptoticsReport:
    rows: tuple[AsymptoticsRow, ...]
    solutions: tuple[Solution | None, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "lambda": r.lam,
                    "lambda_bar": r.lam_bar,
                    "distance": r.distance,
                    "error": r.error,
                }
                for r in self.rows
            ]
        }


def asymptotics_experiment(
    lambda_list: list[float],
    base: ProblemParams,
    grid: RadialGrid,
    opts: FlowOptions,
) -> AsymptoticsReport:
    """Distance of the rescaled sign-changing solution to the local profile.

    The reference is the one-node shooting solution of the equation with
    the nonlocal term removed; the computed solution at each lambda is
    amplitude-rescaled onto unit coefficients and compared in the
    omega-weighted H1 norm, against both signs of the reference.
    """
    if len(lambda_list) < 3:
        raise ValueError("lambda_list needs at least 3 entries")
    if sorted(lambda_list) != list(lambda_list):
        raise ValueError("lambda_list must be ascending")
    w_ref, _ = oracles.local_shoot(grid, base.omega, base.p, node_target=1)
    ref_norm = math.sqrt(h1_norm_sq(grid, base.omega, w_ref))
    rows: list[AsymptoticsRow] = []
    sols: list[Solution | None] = []
    for lam in lambda_list:
        lam_bar = lam ** (-4.0 / (base.p - 2.0))
        params = replace(base, lam=lam, gamma=0.0, beta=0.0)
        try:
            sol = _nodal_at(params, grid, opts)
        except FlowError as err:
            rows.append(
                AsymptoticsRow(
                    lam=lam, lam_bar=lam_bar, distance=math.nan, error=str(err)
                )
            )
            sols.append(None)
            continue
        u_bar = lam ** (1.0 / (base.p - 2.0)) * np.asarray(sol.field, dtype=float)
        dist = min(
            math.sqrt(h1_norm_sq(grid, base.omega, u_bar - w_ref)),
            math.sqrt(h1_norm_sq(grid, base.omega, u_bar + w_ref)),
        )
        rows.append(
            AsymptoticsRow(lam=lam, lam_bar=lam_bar, distance=dist / ref_norm)
        )
        sols.append(sol)
    return AsymptoticsReport(rows=tuple(rows), solutions=tuple(sols))


# ---------------------------------------------------------------------------
# multiplicity


def alternating_bumps(
    grid: RadialGrid, k: int, signs: tuple[int, ...] | None = None
) -> np.ndarray:
    """Superposition of k disjoint annular bumps with alternating signs.

    The outermost bump is always positive.  Passing explicit signs is
    allowed only if they alternate; adjacent bumps of equal sign would
    merge into one component and cannot seed a k-bump configuration.
    """
    if k < 2:
        raise ValueError(f"need at least 2 bumps, got {k}")
    if signs is None:
        signs = tuple((-1) ** (k - i) for i in range(1, k + 1))
    if len(signs) != k:
        raise ValueError(f"expected {k} signs, got {len(signs)}")
    if any(s not in (-1, 1) for s in signs):
        raise ValueError("signs must be +1 or -1")
    if any(signs[i] == signs[i + 1] for i in range(k - 1)):
        raise ValueError("adjacent bumps must carry opposite signs")
    u = np.zeros(grid.n_nodes)
    edges = [(0.4 + 2.8 * i, 2.6 + 3.0 * i) for i in range(k)]
    for (lo, hi), s in zip(edges, signs):
        z = (2.0 * grid.nodes - lo - hi) / (hi - lo)
        inside = np.abs(z) < 1.0
        u[inside] += s * (1.0 - z[inside] ** 2) ** 2
    u[-1] = 0.0
    return u


@dataclass(frozen=True)
class MultiplicityEntry:
    k: int
    node_count: int
    energy: float
    grad_norm: float


@dataclass(frozen=True)
class MultiplicityReport:
    lam: float
    entries: tuple[MultiplicityEntry, ...]
    failures: tuple[str, ...]
    solutions: tuple[Solution, ...] = field(default=(), repr=False)

    @property
    def distinct_count(self) -> int:
        return len(self.entries)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "distinct_count": self.distinct_count,
            "entries": [
                {
                    "k": e.k,
                    "node_count": e.node_count,
                    "energy": e.energy,
                    "grad_norm": e.grad_norm,
                }
                for e in self.entries
            ],
            "failures": list(self.failures),
        }


def multiplicity_sweep(
    k_list: list[int],
    lambda_small: float,
    base: ProblemParams,
    grid: RadialGrid,
    opts: FlowOptions,
) -> MultiplicityReport:
    """Distinct sign-changing solutions seeded by k-bump configurations.

    Each k seeds an alternating-bump start, solved at full perturbation
    strength and walked to the unperturbed coefficients.  Converged
    solutions are deduplicated: two count as the same when their node
    counts agree and their energies differ by less than 1e-4 relative.
    """
    if not 0.0 < lambda_small <= 1.0:
        raise ValueError(f"lambda_small must lie in (0, 1], got {lambda_small}")
    if any(k not in (2, 3, 4, 5) for k in k_list):
        raise ValueError(f"k_list must be within {{2, 3, 4, 5}}, got {k_list}")
    params = replace(base, lam=lambda_small, gamma=0.0, beta=0.0)
    perturbed = replace(params, gamma=1.0, beta=1.0)
    found: list[tuple[int, Solution]] = []
    failures: list[str] = []
    for k in k_list:
        u0 = alternating_bumps(grid, k)
        try:
            u, _ = _projected_descent(perturbed, grid, u0, opts, n_want=k - 1)
            if u is None:
                raise FlowError(f"k={k}: cold stage did not converge")
            for theta in [2.0 ** (-j) for j in range(1, 21)] + [0.0]:
                stage = replace(params, gamma=theta, beta=theta)
                u = anneal_stage(stage, grid, u, opts, n_want=k - 1)
            sol = _certify(params, grid, u, opts, 0, True)
        except FlowError as err:
            failures.append(f"k={k}: {err}")
            continue
        if sol.cone.in_W or sol.cone.node_count < 1:
            failures.append(f"k={k}: converged into the signed cones")
            continue
        found.append((k, sol))

    distinct: list[tuple[int, Solution]] = []
    for k, sol in found:
        duplicate = False
        for _, kept in distinct:
            same_nodes = kept.cone.node_count == sol.cone.node_count
            close = abs(kept.energy - sol.energy) <= 1e-4 * max(
                abs(kept.energy), abs(sol.energy)
            )
            if same_nodes and close:
                duplicate = True
                break
        if not duplicate:
            distinct.append((k, sol))
    distinct.sort(key=lambda pair: pair[1].energy)
    return MultiplicityReport(
        lam=lambda_small,
        entries=tuple(
            MultiplicityEntry(
                k=k,
                node_count=sol.cone.node_count,
                energy=sol.energy,
                grad_norm=sol.residuals.grad_norm,
            )
            for k, sol in distinct
        ),
        failures=tuple(failures),
        solutions=tuple(sol for _, sol in distinct),
    )


# ---------------------------------------------------------------------------
# grid refinement helper


def refine_to_grid(
    params: ProblemParams,
    coarse: RadialGrid,
    u_coarse: np.ndarray,
    fine: RadialGrid,
    opts: FlowOptions,
) -> Solution:
    """Transfer a solution to a finer grid and re-converge it there.

    Linear interpolation seeds the fine grid; the Newton polish removes
    the interpolation error.  Used to measure how discretization-bound
    certificates (the dilation identity residual in particular) shrink
    under refinement.
    """
    if fine.r_max != coarse.r_max:
        raise ValueError("refinement must keep the domain radius")
    u0 = np.interp(fine.nodes, coarse.nodes, np.asarray(u_coarse, dtype=float))
    u0[-1] = 0.0
    u, rel, ok = newton_refine(params, fine, u0, tol=min(opts.grad_tol, 1e-11))
    if not ok:
        raise FlowError(f"fine-grid polish failed, rel={rel:.2e}")
    return _certify(params, fine, u, opts, 0, True)
