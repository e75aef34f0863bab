"""Linearized fixed-point operator: solve the radial problem

    -lap v + [omega + sigma*Bu + gamma (int u^4)^alpha u^2] v
        = lambda |u|^{p-2} u + beta |u|^{q-2} u

for v given u.  Fixed points of T: u -> v are exactly the zeros of the
energy gradient, because the assembled matrix and right side reuse the
same quadrature as the functional: grad E(u) = A(u) u - rhs(u) holds
entry for entry.

Discretization notes.  The radial Laplacian is kept in flux form,
row i ~ -(r_{i+1/2}(v_{i+1}-v_i) - r_{i-1/2}(v_i-v_{i-1}))/(r_i dr^2),
symmetrized by the trapezoid mass.  At the origin the flux form reduces
to the 2-d regularity stencil -4(v_1-v_0)/dr^2 scaled by the mass of the
half-cell pi dr^2/4; the reaction term carries the trapezoid weight
w_0 = 0 there, which is what makes the quadratic form agree with
h1_norm_sq exactly.  v(r_max) = 0 is eliminated from the unknowns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solveh_banded

from . import chern_simons as cs
from .functionals import ProblemParams
from .grid import RadialGrid, check_field, lp_norm_p


class OperatorError(RuntimeError):
    """Solver breakdown distinct from ordinary validation errors."""


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """Symmetric positive definite tridiagonal system on nodes 0..n-2."""

    grid: RadialGrid
    diag: np.ndarray  # length n-1
    off: np.ndarray   # length n-2, sub- and super-diagonal

    def quadratic_form(self, v: np.ndarray) -> float:
        """v^T A v for a full-length field with v[-1] = 0."""
        x = v[:-1]
        return float(np.dot(self.diag * x, x) + 2.0 * np.dot(self.off * x[:-1], x[1:]))

    def apply(self, v: np.ndarray) -> np.ndarray:
        """A v, returned as a full-length field with last entry 0."""
        x = v[:-1]
        y = self.diag * x
        y[:-1] += self.off * x[1:]
        y[1:] += self.off * x[:-1]
        out = np.zeros_like(v)
        out[:-1] = y
        return out

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Direct banded Cholesky solve of A x = rhs (rhs over nodes 0..n-2)."""
        ab = np.zeros((2, self.diag.size))
        ab[0, 1:] = self.off
        ab[1, :] = self.diag
        try:
            x = solveh_banded(ab, rhs, lower=False)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - SPD by construction
            raise OperatorError(f"tridiagonal solve failed: {exc}") from exc
        out = np.zeros(self.grid.n_nodes)
        out[:-1] = x
        return out


def assemble(params: ProblemParams, grid: RadialGrid, u: np.ndarray) -> TridiagonalOperator:
    u = check_field(grid, u)
    k = 2.0 * np.pi / grid.dr * grid.midpoints  # interval stiffness, length n-1
    n = grid.n_nodes
    diag = np.zeros(n - 1)
    diag += k  # right-interval flux for every retained node
    diag[1:] += k[:-1]  # left-interval flux (absent at the origin row)

    react = params.omega + params.cs_strength * cs.multiplier(grid, u)
    if params.gamma != 0.0:
        react = react + params.gamma * lp_norm_p(grid, u, 4.0) ** params.alpha * u * u
    diag += grid.area_weights[:-1] * react[:-1]
    return TridiagonalOperator(grid=grid, diag=diag, off=-k[:-1])


def rhs_vector(params: ProblemParams, grid: RadialGrid, u: np.ndarray) -> np.ndarray:
    """Quadrature-weighted right side over the retained nodes 0..n-2."""
    f = params.lam * np.abs(u) ** (params.p - 2.0) * u
    if params.beta != 0.0:
        f = f + params.beta * np.abs(u) ** (params.q - 2.0) * u
    return (grid.area_weights * f)[:-1]


def apply_T(params: ProblemParams, grid: RadialGrid, u: np.ndarray) -> np.ndarray:
    """One fixed-point solve; raises OperatorError on non-finite input."""
    u = np.asarray(u, dtype=float)
    if u.shape != (grid.n_nodes,) or not np.all(np.isfinite(u)):
        raise OperatorError("apply_T needs a finite field matching the grid")
    op = assemble(params, grid, u)
    b = rhs_vector(params, grid, u)
    v = op.solve(b)
    resid = op.apply(v)[:-1] - b
    # backward-error normalization: the usual relative residual for a
    # direct solve, ||Av - b|| / (||A|| ||v|| + ||b||)
    norm_a = np.abs(op.diag).max() + 2.0 * (np.abs(op.off).max() if op.off.size else 0.0)
    scale = norm_a * np.linalg.norm(v) + np.linalg.norm(b)
    if scale > 0 and np.linalg.norm(resid) > 1e-12 * scale:
        raise OperatorError("tridiagonal solve residual above 1e-12")
    return v
