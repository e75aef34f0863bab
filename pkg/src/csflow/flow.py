"""Descending flow, cone bookkeeping, and the ground/nodal solvers.

The solvers in this module share one engine: a projected descent that
follows T(u) - u while re-normalizing the amplitude of every sign
component after each step, plus a preconditioned Newton polish that
turns a rough critical-point candidate into one with certificates at
solver precision.  The plain Armijo flow ``descend`` is kept separate
and unprojected; it documents the raw dynamics and is what the solvers
would reduce to if the energy landscape had no saddle structure.

Sign-changing targets with the perturbation switched off are reached by
continuation: solve at full perturbation strength first, then walk the
(gamma, beta) pair to the requested values with warm restarts.  See
``anneal_stage`` and ``solve_nodal``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded
from scipy.sparse.linalg import LinearOperator, minres

from .functionals import (
    ProblemParams,
    Residuals,
    energy,
    gradient,
    hessian_vec,
    nehari_residual,
    pohozaev_residual,
)
from .grid import RadialGrid, h1_norm_sq, pos_neg_parts
from .operator_t import OperatorError, apply_T, assemble

__all__ = [
    "FlowError",
    "FlowOptions",
    "ConeStatus",
    "Solution",
    "classify",
    "descend",
    "newton_refine",
    "anneal_stage",
    "solve_ground",
    "solve_nodal",
]


class FlowError(RuntimeError):
    """Raised when an iteration leaves the numerically meaningful regime."""


@dataclass(frozen=True)
class FlowOptions:
    """Iteration controls shared by all solvers.

    grad_tol is relative: convergence means ||u - T(u)|| <= grad_tol ||u||
    in the omega-weighted H1 norm.  eps_cone is likewise relative and
    sets the half-width of the signed cones used by classify.
    """

    max_iters: int = 2000
    grad_tol: float = 1e-8
    eps_cone: float = 1e-3
    step_init: float = 1.0
    step_shrink: float = 0.5
    armijo_c: float = 1e-4
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.grad_tol > 0:
            raise ValueError(f"grad_tol must be positive, got {self.grad_tol}")
        if not self.eps_cone > 0:
            raise ValueError(f"eps_cone must be positive, got {self.eps_cone}")
        if not 0.0 < self.step_init <= 1.0:
            raise ValueError(f"step_init must lie in (0, 1], got {self.step_init}")
        if not 0.0 < self.step_shrink < 1.0:
            raise ValueError(
                f"step_shrink must lie in (0, 1), got {self.step_shrink}"
            )
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError(f"armijo_c must lie in (0, 1), got {self.armijo_c}")


@dataclass(frozen=True)
class ConeStatus:
    """Position of a field relative to the signed cones.

    dist_plus is the omega-weighted H1 norm of the negative part (the
    operative bound on the distance to the nonnegative cone); dist_minus
    is the norm of the positive part.  in_W means the field sits inside
    the eps-neighborhood of one of the cones, i.e. it is numerically of
    one sign.
    """

    dist_plus: float
    dist_minus: float
    in_W: bool
    node_count: int


@dataclass(frozen=True)
class Solution:
    field: np.ndarray
    energy: float
    residuals: Residuals
    cone: ConeStatus
    iters: int
    converged: bool


_SIGN_FLOOR = 1e-10  # nodes below this fraction of max|u| carry no sign


def _node_count(u: np.ndarray) -> int:
    amax = float(np.abs(u).max())
    if amax == 0.0 or not math.isfinite(amax):
        return 0
    mask = np.abs(u) > _SIGN_FLOOR * amax
    signs = np.sign(u[mask])
    if signs.size < 2:
        return 0
    return int(np.sum(signs[1:] * signs[:-1] < 0))


def classify(grid: RadialGrid, omega: float, u: np.ndarray, eps_cone: float) -> ConeStatus:
    """Cone distances, membership in W, and the radial sign-change count."""
    up, um = pos_neg_parts(u)
    dist_plus = math.sqrt(h1_norm_sq(grid, omega, um))
    dist_minus = math.sqrt(h1_norm_sq(grid, omega, up))
    norm = math.sqrt(h1_norm_sq(grid, omega, u))
    in_w = min(dist_plus, dist_minus) < eps_cone * norm if norm > 0 else True
    return ConeStatus(
        dist_plus=dist_plus,
        dist_minus=dist_minus,
        in_W=in_w,
        node_count=_node_count(u),
    )


def _safe_energy(params: ProblemParams, grid: RadialGrid, u: np.ndarray) -> float:
    if not np.all(np.isfinite(u)):
        return math.inf
    with np.errstate(over="ignore", invalid="ignore"):
        try:
            val = energy(params, grid, u)
        except (ValueError, FloatingPointError, OverflowError):
            return math.inf
    return val if math.isfinite(val) else math.inf


def _safe_T(params: ProblemParams, grid: RadialGrid, u: np.ndarray) -> np.ndarray | None:
    if not np.all(np.isfinite(u)):
        return None
    with np.errstate(over="ignore", invalid="ignore"):
        try:
            v = apply_T(params, grid, u)
        except (OperatorError, ValueError, FloatingPointError, OverflowError):
            return None
    if not np.all(np.isfinite(v)):
        return None
    return v


def _rel_residual(params: ProblemParams, grid: RadialGrid, u: np.ndarray) -> float:
    v = _safe_T(params, grid, u)
    if v is None:
        return math.inf
    return math.sqrt(
        h1_norm_sq(grid, params.omega, v - u) / h1_norm_sq(grid, params.omega, u)
    )


def _certify(
    params: ProblemParams,
    grid: RadialGrid,
    u: np.ndarray,
    opts: FlowOptions,
    iters: int,
    converged: bool,
) -> Solution:
    v = _safe_T(params, grid, u)
    if v is None:
        raise FlowError("cannot certify a field outside the operator domain")
    grad_norm = math.sqrt(h1_norm_sq(grid, params.omega, v - u))
    res = Residuals(
        grad_norm=grad_norm,
        nehari=nehari_residual(params, grid, u),
        pohozaev=pohozaev_residual(params, grid, u),
    )
    field = u.copy()
    field.flags.writeable = False
    return Solution(
        field=field,
        energy=energy(params, grid, u),
        residuals=res,
        cone=classify(grid, params.omega, u, opts.eps_cone),
        iters=iters,
        converged=converged,
    )


def descend(
    params: ProblemParams,
    grid: RadialGrid,
    u0: np.ndarray,
    opts: FlowOptions,
) -> Solution:
    """Armijo-damped iteration along T(u) - u.

    Accepts a step s only if the energy drops by at least
    armijo_c * s * ||u - T(u)||^2.  Stops at grad_tol (converged) or at
    max_iters (not converged).  An iterate with non-finite energy is an
    error; a line search that cannot make progress stops early with
    converged=False.
    """
    u = np.asarray(u0, dtype=float).copy()
    if not np.all(np.isfinite(u)) or not np.any(u):
        raise FlowError("initial field must be finite and nonzero")
    E = _safe_energy(params, grid, u)
    if not math.isfinite(E):
        raise FlowError("initial field has non-finite energy")
    for it in range(opts.max_iters):
        v = _safe_T(params, grid, u)
        if v is None:
            raise FlowError(f"operator failure at iteration {it}")
        d = v - u
        dn2 = h1_norm_sq(grid, params.omega, d)
        rel = math.sqrt(dn2 / h1_norm_sq(grid, params.omega, u))
        if rel <= opts.grad_tol:
            return _certify(params, grid, u, opts, it, True)
        s = opts.step_init
        accepted = False
        while s > 1e-14:
            trial = u + s * d
            Et = _safe_energy(params, grid, trial)
            if Et <= E - opts.armijo_c * s * dn2:
                accepted = True
                break
            s *= opts.step_shrink
        if not accepted:
            return _certify(params, grid, u, opts, it, False)
        u, E = trial, Et
        if not math.isfinite(E):
            raise FlowError(f"energy diverged at iteration {it}")
    return _certify(params, grid, u, opts, opts.max_iters, False)


# ---------------------------------------------------------------------------
# nodal-amplitude projection


def _amplitude_peak(
    f,
    a0: float = 0.5,
    grow: float = 1.4,
    a_max: float = 2e3,
    rtol: float = 1e-10,
) -> float | None:
    """First interior local maximum of f on (0, a_max), or None.

    Marches geometrically from a0 until the first downturn (marching
    down if f decreases immediately), then sharpens the bracket by
    golden-section ascent.  Along rays through sign-changing fields the
    energy typically rises to a ridge and then falls away without
    bound; the first maximum is the one the solvers must sit on, so any
    later structure is deliberately ignored.
    """
    a_prev, f_prev = a0, f(a0)
    if not math.isfinite(f_prev):
        return None
    hist = [(a_prev, f_prev)]
    a = a0 * grow
    while a <= a_max:
        fa = f(a)
        if not math.isfinite(fa):
            return None
        hist.append((a, fa))
        if fa < f_prev:
            break
        a_prev, f_prev = a, fa
        a *= grow
    else:
        return None
    while len(hist) < 3:
        b = hist[0][0] / grow
        if b < 1e-9:
            return None
        fb = f(b)
        if not math.isfinite(fb):
            return None
        hist.insert(0, (b, fb))
        if fb < hist[1][1]:
            break
    lo, hi = hist[-3][0], hist[-1][0]
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = hi - phi * (hi - lo)
    d = lo + phi * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > rtol * hi:
        if fc > fd:
            hi, d, fd = d, c, fc
            c = hi - phi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + phi * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def _sign_components(u: np.ndarray) -> list[np.ndarray]:
    """Split u into its maximal single-sign pieces, zero-padded to full length.

    Neutral gaps (nodes below the sign floor) are cut at their midpoint
    so the pieces tile the grid without overlap.
    """
    amax = float(np.abs(u).max())
    if amax == 0.0 or not math.isfinite(amax):
        return []
    signs = np.zeros(u.shape, dtype=int)
    big = np.abs(u) > _SIGN_FLOOR * amax
    signs[big] = np.sign(u[big]).astype(int)
    runs: list[tuple[int, int, int]] = []
    current, start = 0, 0
    for i, si in enumerate(signs):
        if si == 0:
            continue
        if current == 0:
            current, start = si, i
        elif si != current:
            runs.append((start, i, current))
            current, start = si, i
    if current != 0:
        runs.append((start, len(u), current))
    parts = []
    for j, (a, b, _) in enumerate(runs):
        lo = 0 if j == 0 else (runs[j - 1][1] + a) // 2
        hi = len(u) if j + 1 == len(runs) else (b + runs[j + 1][0]) // 2
        piece = np.zeros_like(u)
        piece[lo:hi] = u[lo:hi]
        parts.append(piece)
    return parts


def _nodal_project(
    params: ProblemParams,
    grid: RadialGrid,
    u: np.ndarray,
    rounds: int = 3,
    rtol: float = 1e-10,
) -> np.ndarray | None:
    """Rescale each sign component of u to its energy ridge.

    Coordinate ascent over the component amplitudes; each sweep
    maximizes the energy of one component with the others held fixed.
    Returns None when any component has no interior maximum along its
    ray (the candidate configuration does not support a critical point).
    """
    parts = _sign_components(u)
    if not parts:
        return None
    amps = [1.0] * len(parts)
    for _ in range(rounds):
        for i in range(len(parts)):
            if len(parts) > 1:
                rest = sum(
                    a * q for j, (a, q) in enumerate(zip(amps, parts)) if j != i
                )
            else:
                rest = 0.0
            peak = _amplitude_peak(
                lambda x: _safe_energy(params, grid, rest + x * parts[i]),
                rtol=rtol,
            )
            if peak is None:
                return None
            amps[i] = peak
    return sum(a * q for a, q in zip(amps, parts))


# ---------------------------------------------------------------------------
# Newton polish

_riesz_cache: dict[tuple[float, int, float], object] = {}


def _riesz_factor(grid: RadialGrid, omega: float):
    """Banded Cholesky factor of the linear part, cached per grid and omega."""
    key = (grid.r_max, grid.n_nodes, omega)
    fac = _riesz_cache.get(key)
    if fac is None:
        quad = ProblemParams(omega=omega, lam=0.0, p=5.0, cs_strength=0.0)
        a = assemble(quad, grid, np.zeros(grid.n_nodes))
        ab = np.zeros((2, grid.n_nodes - 1))
        ab[0, 1:] = a.off
        ab[1, :] = a.diag
        fac = cholesky_banded(ab)
        _riesz_cache[key] = fac
    return fac


def newton_refine(
    params: ProblemParams,
    grid: RadialGrid,
    u0: np.ndarray,
    tol: float = 1e-11,
    max_outer: int = 40,
) -> tuple[np.ndarray, float, bool]:
    """Polish a candidate with Newton steps solved by preconditioned MINRES.

    The linear part of the operator serves as preconditioner, which
    keeps the inner iteration count mesh-independent.  Steps are capped
    at a multiple of the current residual and rejected if the residual
    more than triples, with one shortened retry; persistent rejection
    means the start was outside the attraction basin and the method
    returns success=False rather than wandering.

    Returns (field, relative residual, success).
    """
    n = grid.n_nodes
    u = np.asarray(u0, dtype=float).copy()
    rel = _rel_residual(params, grid, u)
    if not math.isfinite(rel):
        return u, rel, False
    fac = _riesz_factor(grid, params.omega)

    def precond(x: np.ndarray) -> np.ndarray:
        return cho_solve_banded((fac, False), x)

    for it in range(max_outer):
        if rel <= tol:
            return u, rel, True
        with np.errstate(over="ignore", invalid="ignore"):
            g = gradient(params, grid, u)
        if not np.all(np.isfinite(g)) or np.abs(g).max() > 1e100:
            return u, rel, False

        def hess(x: np.ndarray) -> np.ndarray:
            v = np.zeros(n)
            v[:-1] = x
            with np.errstate(over="ignore", invalid="ignore"):
                out = hessian_vec(params, grid, u, v)[:-1]
            return np.where(np.isfinite(out), out, 0.0)

        step, _ = minres(
            LinearOperator((n - 1, n - 1), matvec=hess),
            -g[:-1],
            rtol=1e-12,
            maxiter=400,
            M=LinearOperator((n - 1, n - 1), matvec=precond),
        )
        if not np.all(np.isfinite(step)):
            return u, rel, False
        d = np.zeros(n)
        d[:-1] = step
        nd = math.sqrt(h1_norm_sq(grid, params.omega, d))
        nu = math.sqrt(h1_norm_sq(grid, params.omega, u))
        cap = min(0.5 * nu, max(20.0 * rel * nu, 1e-13 * nu))
        if nd > cap:
            d *= cap / nd
        trial = u + d
        rel2 = _rel_residual(params, grid, trial)
        if not math.isfinite(rel2) or rel2 > 3.0 * rel:
            trial = u + 0.25 * d
            rel2 = _rel_residual(params, grid, trial)
            if not math.isfinite(rel2) or rel2 > 3.0 * rel:
                return u, rel, False
        u, rel = trial, rel2
    return u, rel, rel <= tol


# ---------------------------------------------------------------------------
# the solver engine: projected descent with periodic Newton attempts


def _projected_descent(
    params: ProblemParams,
    grid: RadialGrid,
    u0: np.ndarray,
    opts: FlowOptions,
    n_want: int | None = None,
    newton_every: int = 150,
    flow_tol: float = 2e-3,
) -> tuple[np.ndarray | None, int]:
    """Drive u0 to a critical point on the nodal-amplitude manifold.

    Each step follows T(u) - u with backtracking, re-projecting every
    trial so the component amplitudes stay on their energy ridges; the
    ridge-restricted energy then decreases monotonically.  Every
    newton_every steps (and whenever the residual is already small or
    the line search stalls) a Newton polish is attempted; the first
    polish that converges with the requested sign structure wins.

    Returns (field or None, descent iterations used).
    """
    u = _nodal_project(params, grid, u0)
    if u is None:
        return None, 0
    E = _safe_energy(params, grid, u)
    if not math.isfinite(E):
        return None, 0
    floor = -1e6 * (1.0 + abs(E))
    for it in range(opts.max_iters):
        v = _safe_T(params, grid, u)
        if v is None:
            return None, it
        d = v - u
        rel = math.sqrt(
            h1_norm_sq(grid, params.omega, d) / h1_norm_sq(grid, params.omega, u)
        )
        s = opts.step_init
        accepted = False
        while s > 1e-12:
            trial = _nodal_project(params, grid, u + s * d, rounds=2, rtol=1e-7)
            if trial is not None:
                Et = _safe_energy(params, grid, trial)
                if Et < E:
                    accepted = True
                    break
            s *= opts.step_shrink
        due = (it % newton_every == newton_every - 1) or rel < flow_tol or not accepted
        if due:
            w, _, ok = newton_refine(params, grid, u, tol=min(opts.grad_tol, 1e-11))
            if ok and (n_want is None or _node_count(w) == n_want):
                return w, it + 1
            if not accepted:
                return None, it + 1
        if not accepted:
            return None, it + 1
        u, E = trial, Et
        if E < floor:
            return None, it + 1
    return None, opts.max_iters


def anneal_stage(
    params: ProblemParams,
    grid: RadialGrid,
    u_warm: np.ndarray,
    opts: FlowOptions,
    n_want: int | None = None,
) -> np.ndarray:
    """Re-converge a warm start after a parameter change.

    Tries the Newton polish directly (cheap and usually sufficient when
    the change is small); falls back to the projected descent when the
    warm start is outside the basin or lands on the wrong branch.
    Raises FlowError when both fail.
    """
    u, _, ok = newton_refine(params, grid, u_warm, tol=min(opts.grad_tol, 1e-11))
    if ok and (n_want is None or _node_count(u) == n_want):
        return u
    u, _ = _projected_descent(params, grid, u_warm, opts, n_want=n_want)
    if u is None:
        raise FlowError(
            f"warm restart lost the solution branch at gamma={params.gamma:g}, "
            f"beta={params.beta:g}"
        )
    return u


# ---------------------------------------------------------------------------
# ground state


def _gaussian(grid: RadialGrid, amplitude: float, width: float) -> np.ndarray:
    u = amplitude * np.exp(-((grid.nodes / width) ** 2))
    u[-1] = 0.0
    return u


def solve_ground(
    params: ProblemParams,
    grid: RadialGrid,
    opts: FlowOptions,
) -> Solution:
    """Least-energy positive solution from a battery of bell-shaped starts.

    Amplitudes and widths span a small seeded geometric range; every
    start is driven by the projected descent restricted to its single
    sign component, polished by Newton, and the lowest-energy converged
    positive field wins.
    """
    rng = np.random.default_rng(opts.rng_seed)
    jitter = 1.0 + 0.05 * rng.standard_normal(9)
    combos = [
        (a * jitter[3 * i + j], w)
        for i, a in enumerate((0.8, 1.6, 3.2))
        for j, w in enumerate((0.8, 1.6, 3.2))
    ]
    best: np.ndarray | None = None
    best_E = math.inf
    total_iters = 0
    for amplitude, width in combos:
        u0 = _gaussian(grid, amplitude, width)
        u, used = _projected_descent(params, grid, u0, opts, n_want=0)
        total_iters += used
        if u is None:
            continue
        if np.min(u[:-1]) < -_SIGN_FLOOR * np.abs(u).max():
            continue
        E = _safe_energy(params, grid, u)
        if E < best_E:
            best, best_E = u, E
    if best is None:
        raise FlowError("no positive solution found from the start battery")
    # One operator application of the clipped field lands exactly in the
    # nonnegative cone without leaving the solution (T preserves it).
    v = _safe_T(params, grid, np.maximum(best, 0.0))
    if v is not None and _rel_residual(params, grid, np.maximum(v, 0.0)) <= 10 * opts.grad_tol:
        best = np.maximum(v, 0.0)
    rel = _rel_residual(params, grid, best)
    return _certify(params, grid, best, opts, total_iters, rel <= 10 * opts.grad_tol)


# ---------------------------------------------------------------------------
# nodal solver


def _bump(grid: RadialGrid, lo: float, hi: float) -> np.ndarray:
    """Smooth compactly supported profile on the annulus (lo, hi)."""
    z = (2.0 * grid.nodes - lo - hi) / (hi - lo)
    out = np.zeros(grid.n_nodes)
    inside = np.abs(z) < 1.0
    out[inside] = (1.0 - z[inside] ** 2) ** 2
    out[-1] = 0.0
    return out


def _lattice_starts(grid: RadialGrid) -> list[np.ndarray]:
    """Two-bump triangle lattice: u = R (t v1(R r) + s v2(R r)).

    v1 is a negative inner bump, v2 a positive outer one; (t, s) runs
    over a 15 x 15 barycentric lattice on the open triangle t + s <= 1,
    and R over dilation factors {1, 2, 4}.
    """
    starts = []
    for R in (1.0, 2.0, 4.0):
        v1 = np.zeros(grid.n_nodes)
        v2 = np.zeros(grid.n_nodes)
        z = grid.nodes * R
        m1 = (z > 0.4) & (z < 2.6)
        zz = (2.0 * z - 3.0) / 2.2
        v1[m1] = -((1.0 - zz[m1] ** 2) ** 2)
        m2 = (z > 3.2) & (z < 5.6)
        zz = (2.0 * z - 8.8) / 2.4
        v2[m2] = (1.0 - zz[m2] ** 2) ** 2
        v1[-1] = v2[-1] = 0.0
        for i in range(1, 16):
            for j in range(1, 16):
                if i + j > 16:
                    continue
                t, s = i / 16.0, j / 16.0
                starts.append(R * (t * v1 + s * v2))
    return starts


_UNPERTURBED_LADDER = [2.0 ** (-k) for k in range(21)] + [0.0]


def solve_nodal(
    params: ProblemParams,
    grid: RadialGrid,
    opts: FlowOptions,
) -> Solution:
    """Least-energy sign-changing solution found from the two-bump battery.

    Candidate starts are screened by projecting their amplitudes and
    ranking the projected energy; the best few distinct candidates are
    driven to convergence and the lowest-energy field that stays outside
    the signed cones wins.

    When the requested perturbation is absent (gamma or beta zero) the
    battery is solved at full strength first and the result walked to
    the requested coefficients by halving stages; the raw flow has no
    interior target to descend to in that regime, so every cold start
    would otherwise escape along the unbounded rays.
    """
    target_g, target_b = params.gamma, params.beta
    perturbed = replace(params, gamma=max(target_g, 1.0), beta=max(target_b, 1.0))

    scored: list[tuple[float, np.ndarray]] = []
    for u0 in _lattice_starts(grid):
        status = classify(grid, params.omega, u0, opts.eps_cone)
        if status.in_W:
            continue
        proj = _nodal_project(perturbed, grid, u0, rounds=2, rtol=1e-7)
        if proj is None:
            continue
        scored.append((_safe_energy(perturbed, grid, proj), u0))
    scored.sort(key=lambda pair: pair[0])
    if not scored:
        raise FlowError("every two-bump start failed amplitude projection")

    failures: list[str] = []
    best: np.ndarray | None = None
    best_E = math.inf
    total_iters = 0
    for rank, (E_proj, u0) in enumerate(scored[:4]):
        u, used = _projected_descent(perturbed, grid, u0, opts)
        total_iters += used
        if u is None:
            failures.append(f"start {rank}: no convergence (proj energy {E_proj:.3g})")
            continue
        status = classify(grid, perturbed.omega, u, opts.eps_cone)
        if status.in_W or status.node_count < 1:
            failures.append(f"start {rank}: converged into the signed cones")
            continue
        E = _safe_energy(perturbed, grid, u)
        if E < best_E:
            best, best_E = u, E
    if best is None:
        raise FlowError(
            "no sign-changing solution from the two-bump battery: "
            + "; ".join(failures)
        )

    u = best
    if (target_g, target_b) != (perturbed.gamma, perturbed.beta):
        n_ref = _node_count(u)
        for theta in _UNPERTURBED_LADDER:
            stage = replace(
                params,
                gamma=target_g + theta * (perturbed.gamma - target_g),
                beta=target_b + theta * (perturbed.beta - target_b),
            )
            u = anneal_stage(stage, grid, u, opts, n_want=n_ref)
    rel = _rel_residual(params, grid, u)
    return _certify(params, grid, u, opts, total_iters, rel <= 10 * opts.grad_tol)
