"""Independent ground truth used to validate the main solver stack.

Three instruments live here, deliberately decoupled from the flow and
operator modules:

* the closed-form extremal family u_l(r) = sqrt(8) l / (1 + (l r)^2) of
  the sharp quartic interpolation inequality, whose three integrals all
  equal 16 pi l^2 / 3;
* a shooting solver for the local limit equation -lap u + omega u =
  |u|^{p-2} u (classical 4-stage integrator with step halving, bisection
  on the central amplitude to select the number of interior zeros);
* a central-difference gradient checker.

Plus the seeded smooth-field generators the property tests draw from.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .chern_simons import b_energy
from .functionals import ProblemParams, energy, gradient
from .grid import (
    RadialGrid,
    grad_energy,
    h1_norm_sq,
    integrate,
    lp_norm_p,
)

__all__ = [
    "extremal_field",
    "extremal_check",
    "local_shoot",
    "fd_gradient_check",
    "seeded_field",
    "seeded_signed_field",
]


# ---------------------------------------------------------------------------
# extremal family


def extremal_field(grid: RadialGrid, l: float) -> np.ndarray:
    """u_l sampled at the nodes.  Not zeroed at r_max on purpose: the decay
    is only algebraic, and the field is used in quadrature tests that
    account for the truncation themselves."""
    if l <= 0:
        raise ValueError(f"l must be positive, got {l}")
    return math.sqrt(8.0) * l / (1.0 + (l * grid.nodes) ** 2)


def extremal_check(grid: RadialGrid, l: float) -> tuple[float, float, float]:
    """(int |grad u_l|^2, 1/4 int u_l^4, int (u_l^2/r^2) h_l^2); all three
    equal 16 pi l^2 / 3 in the continuum."""
    if l * grid.r_max < 20.0:
        raise ValueError(
            f"decay precondition l*r_max >= 20 violated: {l * grid.r_max:.3g}"
        )
    u = extremal_field(grid, l)
    grad_int = grad_energy(grid, u)
    quarter_u4 = 0.25 * lp_norm_p(grid, u, 4.0)
    cs_int = 2.0 * b_energy(grid, u)
    return grad_int, quarter_u4, cs_int


# ---------------------------------------------------------------------------
# shooting for the local equation


def _rk4_step(f, r, u, du, h):
    k1u, k1d = f(r, u, du)
    k2u, k2d = f(r + 0.5 * h, u + 0.5 * h * k1u, du + 0.5 * h * k1d)
    k3u, k3d = f(r + 0.5 * h, u + 0.5 * h * k2u, du + 0.5 * h * k2d)
    k4u, k4d = f(r + h, u + h * k3u, du + h * k3d)
    return (
        u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
        du + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d),
    )


def _integrate_profile(omega, p, a, r_end, tol, blowup):
    """Integrate u'' + u'/r = omega u - |u|^{p-2} u from the origin.

    Scalar arithmetic on purpose; the state is two floats and the adaptive
    loop is the hot path of the oracle.  Returns (rs, us, dus, n_zeros).
    """
    pm2 = p - 2.0

    def f(r, u, du):
        return du, omega * u - abs(u) ** pm2 * u - du / r

    r0 = 1e-4
    g0 = omega * a - abs(a) ** pm2 * a
    u = a + 0.25 * g0 * r0 * r0
    du = 0.5 * g0 * r0
    r = r0
    h = 1e-3
    rs = [0.0, r0]
    us = [a, u]
    dus = [0.0, du]
    n_zeros = 0
    while r < r_end:
        h = min(h, r_end - r)
        uf, df_ = _rk4_step(f, r, u, du, h)
        um, dm = _rk4_step(f, r, u, du, 0.5 * h)
        uh, dh = _rk4_step(f, r + 0.5 * h, um, dm, 0.5 * h)
        err = max(abs(uf - uh), abs(df_ - dh))
        if not math.isfinite(err) or err > tol * (1.0 + max(abs(uh), abs(dh))):
            h *= 0.5
            continue
        if uh * u < 0.0:
            n_zeros += 1
        r += h
        u, du = uh, dh
        rs.append(r)
        us.append(u)
        dus.append(du)
        if err < tol / 64.0 * (1.0 + max(abs(uh), abs(dh))):
            h *= 2.0
        if abs(u) > blowup:
            break
    return np.array(rs), np.array(us), np.array(dus), n_zeros


def local_shoot(
    grid: RadialGrid,
    omega: float,
    p: float,
    node_target: int,
    tol: float = 1e-10,
) -> tuple[np.ndarray, float]:
    """Radial profile of the local equation with node_target interior zeros,
    resampled to the grid, together with its energy
    1/2 ||u||^2 - 1/p int |u|^p.
    """
    if omega <= 0:
        raise ValueError(f"omega must be positive, got {omega}")
    if not 2.0 < p < 6.0:
        raise ValueError(f"p must lie in (2, 6), got {p}")
    if node_target < 0:
        raise ValueError(f"node_target must be nonnegative, got {node_target}")

    r_end = grid.r_max
    # an amplitude below the pass never crosses zero, so count(a) is a
    # nondecreasing staircase; bracket the jump past node_target.
    scale = omega ** (1.0 / (p - 2.0))

    def count(a):
        return _integrate_profile(omega, p, a, r_end, tol, blowup=10.0 * a + 10.0)[3]

    a_lo = scale
    while count(a_lo) > node_target:
        a_lo *= 0.5
        if a_lo < 1e-8 * scale:
            raise RuntimeError("bisection bracket not found (lower)")
    a_hi = a_lo
    while count(a_hi) <= node_target:
        a_hi *= 1.25
        if a_hi > 1e8 * scale:
            raise RuntimeError("bisection bracket not found (upper)")
    while (a_hi - a_lo) > 1e-15 * a_hi:
        a_mid = 0.5 * (a_lo + a_hi)
        if count(a_mid) <= node_target:
            a_lo = a_mid
        else:
            a_hi = a_mid

    a = a_lo
    rs, us, dus, _ = _integrate_profile(omega, p, a, r_end, tol, blowup=10.0 * a + 10.0)

    # splice the asymptotic decay e^{-sqrt(omega) r}/sqrt(r) past the point
    # where finite precision sends the trajectory off the decaying branch:
    # take the smallest |u| at least one unit beyond the last interior zero.
    zero_idx = np.nonzero(np.sign(us[1:]) * np.sign(us[:-1]) < 0)[0]
    r_floor = rs[zero_idx[-1]] + 1.0 if zero_idx.size else 1.0
    sel = np.nonzero(rs > r_floor)[0]
    i_cut = sel[np.argmin(np.abs(us[sel]))] if sel.size else len(rs) - 1
    r_cut, u_cut = rs[i_cut], us[i_cut]
    keep = slice(0, i_cut + 1)
    spline = CubicHermiteSpline(rs[keep], us[keep], dus[keep])

    u_grid = np.zeros(grid.n_nodes)
    inner = grid.nodes <= r_cut
    u_grid[inner] = spline(grid.nodes[inner])
    outer = ~inner
    if np.any(outer) and abs(u_cut) > 0:
        rr = grid.nodes[outer]
        u_grid[outer] = u_cut * np.sqrt(r_cut / rr) * np.exp(-math.sqrt(omega) * (rr - r_cut))
    u_grid[-1] = 0.0

    e = 0.5 * h1_norm_sq(grid, omega, u_grid) - lp_norm_p(grid, u_grid, p) / p
    return u_grid, float(e)


# ---------------------------------------------------------------------------
# finite-difference gradient check


def fd_gradient_check(
    params: ProblemParams,
    grid: RadialGrid,
    u: np.ndarray,
    step: float,
    n_directions: int = 64,
    seed: int = 0,
) -> float:
    """Worst relative error of <gradient, phi> against central differences
    of the energy over seeded smooth directions.  Valid steps live in
    (1e-8, 1e-3); larger steps are accepted and simply show the truncation
    growth."""
    g = gradient(params, grid, u)
    worst = 0.0
    for k in range(n_directions):
        phi = seeded_field(grid, seed + 1000 + k)
        phi /= math.sqrt(h1_norm_sq(grid, 1.0, phi))
        fd = (energy(params, grid, u + step * phi) - energy(params, grid, u - step * phi)) / (
            2.0 * step
        )
        dd = float(np.dot(g, phi))
        worst = max(worst, abs(fd - dd) / max(1.0, abs(dd)))
    return worst


# ---------------------------------------------------------------------------
# seeded smooth fields


def seeded_field(grid: RadialGrid, seed: int, n_bumps: int = 5) -> np.ndarray:
    """Deterministic smooth field: a few Gaussian bumps, zero at r_max."""
    rng = np.random.default_rng(seed)
    r = grid.nodes
    u = np.zeros(grid.n_nodes)
    span = min(grid.r_max * 0.45, 18.0)
    for _ in range(n_bumps):
        amp = rng.uniform(0.2, 1.0) * rng.choice([-1.0, 1.0])
        center = rng.uniform(0.0, span)
        width = rng.uniform(0.5, 3.0)
        u += amp * np.exp(-(((r - center) / width) ** 2))
    u[-1] = 0.0
    return u


def seeded_signed_field(
    grid: RadialGrid,
    omega: float,
    seed: int,
    sign: float = 1.0,
    wrong_fraction: float = 5e-4,
) -> np.ndarray:
    """A field close to the sign cone: dominant part of the given sign plus
    a far-out bump of the other sign with H1 norm wrong_fraction * ||u||."""
    rng = np.random.default_rng(seed)
    r = grid.nodes
    main = np.zeros(grid.n_nodes)
    for _ in range(4):
        amp = rng.uniform(0.3, 1.0)
        center = rng.uniform(0.0, min(grid.r_max * 0.3, 12.0))
        width = rng.uniform(0.8, 3.0)
        main += amp * np.exp(-(((r - center) / width) ** 2))
    main[-1] = 0.0
    c0 = min(grid.r_max * 0.7, 0.75 * grid.r_max)
    bump = np.exp(-(((r - c0) / 1.5) ** 2))
    bump[-1] = 0.0
    nb = math.sqrt(h1_norm_sq(grid, omega, bump))
    nm = math.sqrt(h1_norm_sq(grid, omega, main))
    u = sign * (main - wrong_fraction * nm / nb * bump)
    return u
