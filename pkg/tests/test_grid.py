import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from pytest import approx, raises

from csflow.grid import (
    check_field,
    grad_energy,
    h1_inner,
    h1_norm_sq,
    integrate,
    lp_norm_p,
    make_grid,
    pos_neg_parts,
)
from csflow.oracles import seeded_field


def test_make_grid_rejects_bad_arguments():
    with raises(ValueError):
        make_grid(-1.0, 100)
    with raises(ValueError):
        make_grid(0.0, 100)
    with raises(ValueError):
        make_grid(10.0, 8)
    with raises(ValueError):
        make_grid(math.inf, 100)


def test_grid_geometry():
    grid = make_grid(10.0, 101)
    assert grid.dr == approx(0.1)
    assert grid.nodes[0] == 0.0
    assert grid.nodes[-1] == approx(10.0)
    assert len(grid.midpoints) == 100
    # endpoint line weights are halved; the area weight at r = 0 vanishes
    assert grid.line_weights[0] == approx(0.05)
    assert grid.area_weights[0] == 0.0


def test_integrate_constant_gives_disk_area():
    # f(r) r is linear, so the trapezoid rule is exact here
    grid = make_grid(7.0, 257)
    ones = np.ones(grid.n_nodes)
    assert integrate(grid, ones) == approx(math.pi * 49.0, rel=1e-14)


def test_integrate_gaussian():
    # int exp(-r^2) over the plane = pi
    grid = make_grid(15.0, 2049)
    f = np.exp(-grid.nodes**2)
    assert integrate(grid, f) == approx(math.pi, rel=5e-5)


def test_quadrature_second_order():
    exact = math.pi  # same Gaussian as above
    errs = []
    for n in (257, 513, 1025):
        grid = make_grid(15.0, n)
        errs.append(abs(integrate(grid, np.exp(-grid.nodes**2)) - exact))
    assert errs[0] / errs[1] == approx(4.0, rel=0.1)
    assert errs[1] / errs[2] == approx(4.0, rel=0.1)


def test_grad_energy_gaussian():
    # u = exp(-r^2/2): int |grad u|^2 = 2 pi int r^3 exp(-r^2) dr = pi
    grid = make_grid(15.0, 4097)
    u = np.exp(-0.5 * grid.nodes**2)
    assert grad_energy(grid, u) == approx(math.pi, rel=1e-5)


def test_h1_norm_splits_into_parts():
    grid = make_grid(12.0, 513)
    u = seeded_field(grid, 3)
    omega = 1.7
    expected = grad_energy(grid, u) + omega * integrate(grid, u * u)
    assert h1_norm_sq(grid, omega, u) == approx(expected, rel=1e-14)
    assert h1_inner(grid, omega, u, u) == approx(expected, rel=1e-14)


def test_h1_norm_requires_positive_omega():
    grid = make_grid(12.0, 513)
    u = seeded_field(grid, 3)
    with raises(ValueError):
        h1_norm_sq(grid, 0.0, u)


@settings(deadline=None, max_examples=25)
@given(
    seed_u=st.integers(0, 10_000),
    seed_v=st.integers(0, 10_000),
    a=st.floats(-3.0, 3.0),
    omega=st.floats(0.1, 4.0),
)
def test_h1_inner_symmetric_bilinear(seed_u, seed_v, a, omega):
    grid = make_grid(12.0, 257)
    u = seeded_field(grid, seed_u)
    v = seeded_field(grid, seed_v)
    uv = h1_inner(grid, omega, u, v)
    assert h1_inner(grid, omega, v, u) == approx(uv, rel=1e-12, abs=1e-12)
    scale = 1.0 if uv == 0.0 else abs(uv)
    assert h1_inner(grid, omega, a * u, v) == approx(
        a * uv, rel=1e-10, abs=1e-10 * scale
    )


@settings(deadline=None, max_examples=25)
@given(seed=st.integers(0, 10_000))
def test_pos_neg_parts_reassemble(seed):
    grid = make_grid(12.0, 257)
    u = seeded_field(grid, seed)
    up, um = pos_neg_parts(u)
    assert np.all(up >= 0.0)
    assert np.all(um <= 0.0)
    np.testing.assert_array_equal(up + um, u)
    assert np.all(up * um == 0.0)


def test_lp_norm_even_power():
    grid = make_grid(12.0, 513)
    u = seeded_field(grid, 11)
    assert lp_norm_p(grid, u, 4.0) == approx(integrate(grid, u**4), rel=1e-14)
    # odd field, odd power: absolute value matters
    assert lp_norm_p(grid, -u, 3.0) == approx(lp_norm_p(grid, u, 3.0), rel=1e-14)


def test_check_field_rejects_bad_input():
    grid = make_grid(12.0, 257)
    with raises(ValueError):
        check_field(grid, np.zeros(256))
    bad = np.zeros(257)
    bad[10] = math.nan
    with raises(ValueError):
        check_field(grid, bad)
