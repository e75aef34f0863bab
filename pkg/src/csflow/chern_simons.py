"""Nonlocal gauge quantities attached to a radial field.

For a radial u the azimuthal gauge component is determined by

    h(r) = 1/2 * int_0^r s u(s)^2 ds,

and the self-interaction energy and its multiplier involve h^2/r^2
together with the tail integral g(r) = int_r^rmax (h(s)/s) u(s)^2 ds.

The one design rule here: b_gradient is the exact derivative of the
discrete b_energy, obtained by transposing the cumulative trapezoid
operator, not a separate discretization of the analytic formula.  That
choice is what makes <B'(u), u> = 6 B(u) and the operator/descent
identities hold to rounding error instead of truncation error.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .grid import RadialGrid, check_field, integrate

__all__ = [
    "compute_h",
    "compute_tail",
    "b_energy",
    "b_gradient",
    "b_hessian_vec",
    "multiplier",
    "gauge_fields",
]


def _cumtrapz(y: np.ndarray, dr: float) -> np.ndarray:
    return cumulative_trapezoid(y, dx=dr, initial=0.0)


def _cumtrapz_adjoint(g: np.ndarray, dr: float) -> np.ndarray:
    """Transpose of _cumtrapz: (C^T g)_j = sum_i g_i c_ij.

    Row i of C integrates up to node i with endpoint weights dr/2, so the
    transpose is a reverse cumulative sum with the same endpoint handling.
    """
    s = np.cumsum(g[::-1])[::-1]
    out = dr * (s - 0.5 * g)
    out[0] = 0.5 * dr * (s[0] - g[0])
    return out


def _h_from_u(grid: RadialGrid, u: np.ndarray) -> np.ndarray:
    return _cumtrapz(0.5 * grid.nodes * u * u, grid.dr)


def compute_h(grid: RadialGrid, u: np.ndarray) -> np.ndarray:
    """Cumulative trapezoid of (1/2) s u^2; h(0) = 0, nondecreasing."""
    u = check_field(grid, u)
    return _h_from_u(grid, u)


def _tail_integrand(grid: RadialGrid, u: np.ndarray, h: np.ndarray) -> np.ndarray:
    # (h(s)/s) u^2 with the removable zero at s = 0 (h ~ s^2 there).
    phi = np.zeros_like(u)
    phi[1:] = h[1:] / grid.nodes[1:] * u[1:] ** 2
    return phi


def compute_tail(grid: RadialGrid, u: np.ndarray, h: np.ndarray) -> np.ndarray:
    """g(r) = int_r^rmax (h/s) u^2 ds; nonnegative, nonincreasing, g(rmax) = 0."""
    u = check_field(grid, u)
    phi = _tail_integrand(grid, u, h)
    return _cumtrapz(phi[::-1], grid.dr)[::-1]


def _tail_adjoint(grid: RadialGrid, u: np.ndarray, h: np.ndarray) -> np.ndarray:
    """The tail that appears in the exact gradient of b_energy.

    Equals compute_tail at every node except r_max, where the transposed
    operator keeps the half-weight dr/2 * (h/r) u^2 that the ordinary tail
    sets to zero; the two agree identically on fields with u(rmax) = 0.
    """
    m = np.zeros_like(u)
    m[1:] = grid.area_weights[1:] * u[1:] ** 2 / grid.nodes[1:] ** 2
    return _cumtrapz_adjoint(m * h, grid.dr) / (2.0 * np.pi * grid.line_weights)


def b_energy(grid: RadialGrid, u: np.ndarray, h: np.ndarray | None = None) -> float:
    """B(u) = 1/2 int (u^2/r^2) h^2 dx; the origin node contributes zero."""
    u = check_field(grid, u)
    if h is None:
        h = _h_from_u(grid, u)
    integrand = np.zeros_like(u)
    integrand[1:] = u[1:] ** 2 / grid.nodes[1:] ** 2 * h[1:] ** 2
    return 0.5 * integrate(grid, integrand)


def multiplier(grid: RadialGrid, u: np.ndarray, h: np.ndarray | None = None) -> np.ndarray:
    """Pointwise factor in the nonlocal term: h^2/r^2 + tail, >= 0.

    Consistent with b_gradient: b_gradient(u)_i = w_i * multiplier(u)_i * u_i
    exactly, w_i the area weights.  h^2/r^2 -> 0 at the origin.
    """
    u = check_field(grid, u)
    if h is None:
        h = _h_from_u(grid, u)
    hsq = np.zeros_like(u)
    hsq[1:] = (h[1:] / grid.nodes[1:]) ** 2
    return hsq + _tail_adjoint(grid, u, h)


def b_gradient(grid: RadialGrid, u: np.ndarray) -> np.ndarray:
    """Exact gradient of the discrete B: entries w_i [h_i^2/r_i^2 + g_i] u_i."""
    u = check_field(grid, u)
    h = _h_from_u(grid, u)
    return grid.area_weights * multiplier(grid, u, h) * u


def b_hessian_vec(grid: RadialGrid, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Directional derivative of b_gradient at u along v (exact, O(n)).

    Differentiates grad B = w (h^2/r^2) u + r u C^T(m h) with
    m = w u^2 / r^2, using dh = C(r u v) and dm = 2 w u v / r^2.
    """
    w = grid.area_weights
    r = grid.nodes
    h = _h_from_u(grid, u)
    dh = _cumtrapz(r * u * v, grid.dr)

    inv_r2 = np.zeros_like(u)
    inv_r2[1:] = 1.0 / r[1:] ** 2
    m = w * u * u * inv_r2
    dm = 2.0 * w * u * v * inv_r2

    out = w * inv_r2 * (h * h * v + 2.0 * h * dh * u)
    out += r * v * _cumtrapz_adjoint(m * h, grid.dr)
    out += r * u * _cumtrapz_adjoint(dm * h + m * dh, grid.dr)
    return out


def gauge_fields(grid: RadialGrid, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Temporal and azimuthal gauge profiles (A0, Atheta) = (tail, h/r).

    The additive constant in A0 is fixed by decay: A0(rmax) = 0.  Atheta
    vanishes at the origin like r.
    """
    u = check_field(grid, u)
    h = _h_from_u(grid, u)
    a0 = compute_tail(grid, u, h)
    atheta = np.zeros_like(u)
    atheta[1:] = h[1:] / grid.nodes[1:]
    return a0, atheta
