"""Energy functional, exact discrete gradient, and solution certificates.

The functional on the truncated radial grid is

    E(u) = 1/2 ||u||^2 + sigma B(u) + gamma/(4(1+alpha)) (int u^4)^(1+alpha)
           - lambda/p int |u|^p - beta/q int |u|^q

with ||u||^2 the omega-weighted H1 norm and B the nonlocal gauge energy.
sigma (cs_strength) scales the nonlocal term; 1 is the physical problem,
other values support the lambda-rescaled form and diagnostics.  gamma and
beta are the compactness regularizers that the continuation experiment
drives to zero.

gradient() is the exact derivative of the discrete E, so finite-difference
checks hold at rounding level and the fixed-point operator satisfies
grad E(u) = A(u) u - rhs(u) identically.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import chern_simons as cs
from .grid import RadialGrid, check_field, grad_energy, h1_norm_sq, integrate, lp_norm_p


@dataclass(frozen=True)
class ProblemParams:
    """Coefficients of the functional; validated on construction.

    lambda is spelled lam.  lam = 0 is admitted (used by gradient
    diagnostics with the nonlocal term switched off); the CLI insists on
    lam > 0 for actual runs.
    """

    omega: float = 1.0
    lam: float = 1.0
    p: float = 5.0
    gamma: float = 0.0
    beta: float = 0.0
    alpha: float = 0.25
    q: float = 7.0
    cs_strength: float = 1.0

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if not self.lam >= 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")
        if not 4.0 < self.p < 6.0:
            raise ValueError(f"p must lie in (4, 6), got {self.p}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")
        amax = min(0.5, (self.p - 4.0) / 2.0)
        if not 0.0 < self.alpha < amax:
            raise ValueError(
                f"alpha must lie in (0, {amax}) for p={self.p}, got {self.alpha}"
            )
        if not 6.0 < self.q < 8.0:
            raise ValueError(f"q must lie in (6, 8), got {self.q}")
        if not self.cs_strength >= 0:
            raise ValueError(f"cs_strength must be nonnegative, got {self.cs_strength}")


@dataclass(frozen=True)
class Residuals:
    """Convergence certificates attached to a computed solution."""

    grad_norm: float
    nehari: float
    pohozaev: float


def energy(params: ProblemParams, grid: RadialGrid, u: np.ndarray) -> float:
    u = check_field(grid, u)
    val = 0.5 * h1_norm_sq(grid, params.omega, u)
    if params.cs_strength != 0.0:
        val += params.cs_strength * cs.b_energy(grid, u)
    if params.gamma != 0.0:
        q4 = lp_norm_p(grid, u, 4.0)
        val += params.gamma / (4.0 * (1.0 + params.alpha)) * q4 ** (1.0 + params.alpha)
    if params.lam != 0.0:
        val -= params.lam / params.p * lp_norm_p(grid, u, params.p)
    if params.beta != 0.0:
        val -= params.beta / params.q * lp_norm_p(grid, u, params.q)
    return float(val)


def _stiffness_apply(grid: RadialGrid, u: np.ndarray) -> np.ndarray:
    """Gradient of 1/2 * int |grad u|^2 under the midpoint quadrature."""
    k = 2.0 * np.pi / grid.dr * grid.midpoints
    du = k * np.diff(u)
    out = np.zeros_like(u)
    out[:-1] -= du
    out[1:] += du
    return out


def gradient(params: ProblemParams, grid: RadialGrid, u: np.ndarray) -> np.ndarray:
    """Exact gradient of the discrete energy; <gradient, phi> is the
    directional derivative along phi.

    The last entry is zeroed: fields live on the Dirichlet-truncated
    space, so variations at r_max are not admissible.
    """
    u = check_field(grid, u)
    w = grid.area_weights
    out = _stiffness_apply(grid, u) + params.omega * w * u
    if params.cs_strength != 0.0:
        out += params.cs_strength * cs.b_gradient(grid, u)
    if params.gamma != 0.0:
        q4 = lp_norm_p(grid, u, 4.0)
        out += params.gamma * q4**params.alpha * w * u**3
    if params.lam != 0.0:
        out -= params.lam * w * np.abs(u) ** (params.p - 2.0) * u
    if params.beta != 0.0:
        out -= params.beta * w * np.abs(u) ** (params.q - 2.0) * u
    out[-1] = 0.0
    return out


def hessian_vec(params: ProblemParams, grid: RadialGrid, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Exact Hessian-vector product of the discrete energy (last entry zeroed)."""
    w = grid.area_weights
    out = _stiffness_apply(grid, v) + params.omega * w * v
    if params.cs_strength != 0.0:
        out += params.cs_strength * cs.b_hessian_vec(grid, u, v)
    if params.gamma != 0.0:
        q4 = lp_norm_p(grid, u, 4.0)
        wu3 = w * u**3
        out += params.gamma * (
            3.0 * q4**params.alpha * w * u * u * v
            + 4.0 * params.alpha * q4 ** (params.alpha - 1.0) * float(np.dot(wu3, v)) * wu3
        )
    if params.lam != 0.0:
        out -= params.lam * (params.p - 1.0) * w * np.abs(u) ** (params.p - 2.0) * v
    if params.beta != 0.0:
        out -= params.beta * (params.q - 1.0) * w * np.abs(u) ** (params.q - 2.0) * v
    out[-1] = 0.0
    return out


def nehari_residual(params: ProblemParams, grid: RadialGrid, u: np.ndarray) -> float:
    """<E'(u), u> in closed form:
    ||u||^2 + 6 sigma B + gamma (int u^4)^(1+alpha) - lambda int |u|^p - beta int |u|^q.
    """
    u = check_field(grid, u)
    val = h1_norm_sq(grid, params.omega, u)
    val += 6.0 * params.cs_strength * cs.b_energy(grid, u)
    if params.gamma != 0.0:
        val += params.gamma * lp_norm_p(grid, u, 4.0) ** (1.0 + params.alpha)
    if params.lam != 0.0:
        val -= params.lam * lp_norm_p(grid, u, params.p)
    if params.beta != 0.0:
        val -= params.beta * lp_norm_p(grid, u, params.q)
    return float(val)


def pohozaev_residual(params: ProblemParams, grid: RadialGrid, u: np.ndarray) -> float:
    """Dilation identity residual:
    omega ||u||_2^2 + 4 sigma B + gamma/2 (int u^4)^(1+alpha)
        - 2 lambda/p int |u|^p - 2 beta/q int |u|^q.

    Zero for exact solutions of the continuum problem; on the grid it
    decays with the truncation error and serves as a discretization
    certificate, not a machine-zero identity.
    """
    u = check_field(grid, u)
    val = params.omega * integrate(grid, u * u)
    val += 4.0 * params.cs_strength * cs.b_energy(grid, u)
    if params.gamma != 0.0:
        val += 0.5 * params.gamma * lp_norm_p(grid, u, 4.0) ** (1.0 + params.alpha)
    if params.lam != 0.0:
        val -= 2.0 * params.lam / params.p * lp_norm_p(grid, u, params.p)
    if params.beta != 0.0:
        val -= 2.0 * params.beta / params.q * lp_norm_p(grid, u, params.q)
    return float(val)


def rescale(lam: float, p: float, grid: RadialGrid, u: np.ndarray) -> tuple[float, np.ndarray]:
    """Map (lambda, u) to the unit-coefficient form.

    Returns (lam_bar, u_bar) with lam_bar = lambda^(-4/(p-2)) and
    u_bar = lambda^(1/(p-2)) u, so that the functional with lam = 1 and
    cs_strength = lam_bar satisfies
    E_bar(u_bar) = lambda^(2/(p-2)) E(u) exactly.
    """
    if lam <= 0:
        raise ValueError(f"lambda must be positive to rescale, got {lam}")
    lam_bar = lam ** (-4.0 / (p - 2.0))
    u_bar = lam ** (1.0 / (p - 2.0)) * u
    return lam_bar, u_bar


def rescaled_params(params: ProblemParams) -> ProblemParams:
    """Parameters of the unit-coefficient form (gamma = beta = 0 only)."""
    if params.gamma != 0.0 or params.beta != 0.0:
        raise ValueError("the rescaled form is defined for gamma = beta = 0 only")
    lam_bar = params.lam ** (-4.0 / (params.p - 2.0))
    return replace(params, lam=1.0, cs_strength=params.cs_strength * lam_bar)


def grad_part(grid: RadialGrid, u: np.ndarray) -> float:
    """int |grad u|^2 alone (the gradient half of h1_norm_sq)."""
    return grad_energy(grid, u)
