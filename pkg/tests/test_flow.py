import math

import numpy as np
import pytest
from pytest import approx, raises

from csflow.flow import (
    FlowError,
    FlowOptions,
    anneal_stage,
    classify,
    descend,
    newton_refine,
    solve_ground,
)
from csflow.functionals import ProblemParams, energy
from csflow.grid import h1_norm_sq, make_grid
from csflow.operator_t import apply_T
from csflow.oracles import seeded_field, seeded_signed_field


def _gaussian(grid, amp=1.0, width=1.0):
    u = amp * np.exp(-((grid.nodes / width) ** 2))
    u[-1] = 0.0
    return u


@pytest.fixture(scope="module")
def ground_2049():
    """One converged positive solution shared by the warm-start tests."""
    grid = make_grid(40.0, 2049)
    params = ProblemParams()
    sol = solve_ground(params, grid, FlowOptions())
    return grid, params, sol


def test_flow_options_validation():
    with raises(ValueError):
        FlowOptions(max_iters=0)
    with raises(ValueError):
        FlowOptions(grad_tol=0.0)
    with raises(ValueError):
        FlowOptions(eps_cone=-1.0)
    with raises(ValueError):
        FlowOptions(step_init=1.5)
    with raises(ValueError):
        FlowOptions(step_shrink=1.0)
    with raises(ValueError):
        FlowOptions(armijo_c=0.0)


def test_classify_signed_fields(grid_small):
    pos = _gaussian(grid_small)
    st = classify(grid_small, 1.0, pos, 1e-3)
    assert st.in_W
    assert st.dist_plus == 0.0
    assert st.dist_minus > 0.0
    assert st.node_count == 0

    neg = classify(grid_small, 1.0, -pos, 1e-3)
    assert neg.in_W
    assert neg.dist_minus == 0.0
    assert neg.dist_plus == st.dist_minus  # sign flip swaps the two cones


def test_classify_sign_changing(grid_small):
    u = _gaussian(grid_small, width=1.0) - 0.8 * np.exp(
        -(((grid_small.nodes - 4.0) / 1.2) ** 2)
    )
    u[-1] = 0.0
    st = classify(grid_small, 1.0, u, 1e-3)
    assert not st.in_W
    assert st.node_count == 1
    assert st.dist_plus > 0.0 and st.dist_minus > 0.0


def test_classify_eps_is_relative(grid_small):
    u = seeded_signed_field(grid_small, 1.0, 0, sign=1.0)  # wrong part ~5e-4
    assert classify(grid_small, 1.0, u, 1e-3).in_W
    assert not classify(grid_small, 1.0, u, 1e-5).in_W
    # scaling the field must not change membership: both cuts are relative
    assert classify(grid_small, 1.0, 50.0 * u, 1e-3).in_W


def test_classify_zero_field(grid_small):
    st = classify(grid_small, 1.0, np.zeros(grid_small.n_nodes), 1e-3)
    assert st.in_W
    assert st.node_count == 0


def test_descend_rejects_bad_starts(grid_small, params_default, opts_default):
    with raises(FlowError):
        descend(params_default, grid_small, np.zeros(grid_small.n_nodes), opts_default)
    bad = _gaussian(grid_small)
    bad[3] = math.inf
    with raises(FlowError):
        descend(params_default, grid_small, bad, opts_default)


def test_descend_on_unbounded_ray_is_exposed_by_certificates(grid_small):
    # a large bump sits past the mountain ridge and the flow rides the
    # ray downhill; T approaches the identity at huge amplitude, so the
    # relative stopping rule can fire there, but the dilation identity
    # residual (and the absurd energy) flag the output as spurious
    params = ProblemParams()
    u0 = _gaussian(grid_small, amp=3.0)
    sol = descend(params, grid_small, u0, FlowOptions(max_iters=40))
    assert sol.energy < energy(params, grid_small, u0)
    assert math.isfinite(sol.energy)
    assert sol.energy < 0.0  # true critical levels are positive
    mass = params.omega * h1_norm_sq(grid_small, params.omega, sol.field)
    assert abs(sol.residuals.pohozaev) > mass


def test_descend_fixed_point_returns_immediately(ground_2049):
    grid, params, sol = ground_2049
    again = descend(params, grid, sol.field.copy(), FlowOptions(grad_tol=1e-6))
    assert again.converged
    assert again.iters == 0
    assert again.energy == approx(sol.energy, rel=1e-12)


def test_newton_refine_polishes(ground_2049):
    grid, params, sol = ground_2049
    noise = seeded_field(grid, 77)
    scale = 1e-4 * math.sqrt(
        h1_norm_sq(grid, params.omega, sol.field) / h1_norm_sq(grid, 1.0, noise)
    )
    u0 = sol.field + scale * noise
    u, rel, ok = newton_refine(params, grid, u0, tol=1e-12)
    assert ok
    assert rel <= 1e-12
    v = apply_T(params, grid, u)
    measured = math.sqrt(
        h1_norm_sq(grid, params.omega, v - u) / h1_norm_sq(grid, params.omega, u)
    )
    assert measured <= 1e-11


def test_anneal_stage_follows_parameter_move(ground_2049):
    grid, params, sol = ground_2049
    moved = ProblemParams(omega=1.05)
    opts = FlowOptions()
    u = anneal_stage(moved, grid, sol.field.copy(), opts, n_want=0)
    v = apply_T(moved, grid, u)
    rel = math.sqrt(
        h1_norm_sq(grid, moved.omega, v - u) / h1_norm_sq(grid, moved.omega, u)
    )
    assert rel <= 1e-10
    # same branch: still a one-sign field, and only slightly moved
    assert classify(grid, moved.omega, u, opts.eps_cone).node_count == 0
    drift = math.sqrt(h1_norm_sq(grid, 1.0, u - sol.field))
    assert drift <= 0.2 * math.sqrt(h1_norm_sq(grid, 1.0, sol.field))


def test_solve_ground_certificates(ground_2049):
    grid, params, sol = ground_2049
    assert sol.converged
    assert sol.cone.in_W
    assert sol.cone.node_count == 0
    assert np.all(sol.field >= 0.0)
    # the refined-grid level is 5.0868; the coarse value may differ by
    # the discretization error only
    assert sol.energy == approx(5.08679227, rel=2e-3)
    norm2 = h1_norm_sq(grid, params.omega, sol.field)
    assert abs(sol.residuals.nehari) <= 1e-7 * norm2
    assert sol.field.flags.writeable is False
    with raises(ValueError):
        sol.field[0] = 1.0
