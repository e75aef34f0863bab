"""End-to-end battery for the quantitative claims the library exists to
reproduce.  Each test prints exactly one line, pass or fail, with the
measured numbers, and the heavy pipelines are shared through
module-scoped fixtures so nothing is solved twice.
"""

import math
import time

import numpy as np
import pytest

from csflow.chern_simons import b_energy, b_gradient
from csflow.experiments import (
    DEFAULT_SCHEDULE,
    asymptotics_experiment,
    continuation,
    doubling_experiment,
    multiplicity_sweep,
    refine_to_grid,
)
from csflow.flow import FlowOptions
from csflow.functionals import (
    ProblemParams,
    energy,
    gradient,
    rescale,
    rescaled_params,
)
from csflow.grid import h1_norm_sq, integrate, make_grid, pos_neg_parts
from csflow.operator_t import apply_T
from csflow.oracles import (
    extremal_check,
    fd_gradient_check,
    seeded_field,
    seeded_signed_field,
)

FULL_PARAMS = ProblemParams(
    omega=1.0, lam=1.0, p=5.0, gamma=0.5, beta=0.5, alpha=0.25, q=7.0
)


def _report(capsys, idx, name, ok, detail):
    tag = "PASS" if ok else "FAIL"
    with capsys.disabled():
        print(f"[criterion {idx:02d}] {name}: {tag} ({detail})")
    assert ok, f"criterion {idx} {name}: {detail}"


@pytest.fixture(scope="module")
def main_grid():
    return make_grid(40.0, 4097)


@pytest.fixture(scope="module")
def continuation_run(main_grid):
    """Full perturbation schedule at lam = 1, plus the doubled-grid refine."""
    params = ProblemParams()
    opts = FlowOptions()
    t0 = time.monotonic()
    report = continuation(params, DEFAULT_SCHEDULE, main_grid, opts)
    fine_grid = make_grid(40.0, 8193)
    fine = refine_to_grid(params, main_grid, report.final.field, fine_grid, opts)
    elapsed = time.monotonic() - t0
    return params, report, fine_grid, fine, elapsed


@pytest.fixture(scope="module")
def lambda_ladder(main_grid):
    """Doubling table and rescaled distances over lam = 10, 100, 1000."""
    base = ProblemParams()
    opts = FlowOptions()
    t0 = time.monotonic()
    doubling = doubling_experiment([10.0, 100.0, 1000.0], base, main_grid, opts)
    t1 = time.monotonic()
    asym = asymptotics_experiment([10.0, 100.0, 1000.0], base, main_grid, opts)
    t2 = time.monotonic()
    return doubling, asym, t1 - t0, t2 - t1


@pytest.fixture(scope="module")
def multiplicity_run(main_grid):
    base = ProblemParams()
    opts = FlowOptions(max_iters=3000)
    t0 = time.monotonic()
    report = multiplicity_sweep([2, 3], 0.1, base, main_grid, opts)
    return report, time.monotonic() - t0


def test_criterion_01_extremal_identity(capsys):
    t0 = time.monotonic()
    worst_dev = 0.0
    worst_pair = 0.0
    for l in (0.5, 1.0, 2.0):
        grid = make_grid(40.0 * max(1.0, l) / l, 4097)
        target = 16.0 * math.pi * l * l / 3.0
        vals = extremal_check(grid, l)
        worst_dev = max(worst_dev, max(abs(v - target) / target for v in vals))
        for a in vals:
            for b in vals:
                worst_pair = max(worst_pair, abs(a - b) / target)
    elapsed = time.monotonic() - t0
    ok = worst_dev <= 5e-3 and worst_pair <= 2e-3 and elapsed < 1.0
    _report(
        capsys, 1, "extremal identity 16*pi*l^2/3", ok,
        f"worst dev {worst_dev:.2e}, pairwise {worst_pair:.2e}, {elapsed:.2f}s",
    )


def test_criterion_02_six_fold_homogeneity(capsys, main_grid):
    t0 = time.monotonic()
    worst = 0.0
    for seed in range(100):
        u = seeded_field(main_grid, seed)
        b = b_energy(main_grid, u)
        pairing = float(np.dot(b_gradient(main_grid, u), u))
        worst = max(worst, abs(pairing - 6.0 * b) / abs(6.0 * b))
        worst = max(worst, abs(b_energy(main_grid, 2.0 * u) - 64.0 * b) / (64.0 * b))
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    _report(
        capsys, 2, "degree-6 homogeneity of the nonlocal energy", ok,
        f"worst rel {worst:.2e}, {elapsed:.2f}s",
    )


def test_criterion_03_gradient_correctness(capsys, main_grid):
    t0 = time.monotonic()
    u = seeded_field(main_grid, 1)
    worst = fd_gradient_check(FULL_PARAMS, main_grid, u, step=1e-5, n_directions=64)
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-5 and elapsed < 10.0
    _report(
        capsys, 3, "gradient vs finite differences, all terms on", ok,
        f"worst rel {worst:.2e} over 64 directions, {elapsed:.2f}s",
    )


def test_criterion_04_descent_inequality(capsys, main_grid):
    t0 = time.monotonic()
    worst = -math.inf
    for seed in range(100):
        u = seeded_field(main_grid, seed)
        d = u - apply_T(FULL_PARAMS, main_grid, u)
        pairing = float(np.dot(gradient(FULL_PARAMS, main_grid, u), d))
        shortfall = h1_norm_sq(main_grid, FULL_PARAMS.omega, d) - pairing
        worst = max(worst, shortfall / h1_norm_sq(main_grid, FULL_PARAMS.omega, u))
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-10 and elapsed < 30.0
    _report(
        capsys, 4, "descent direction inequality on 100 fields", ok,
        f"worst shortfall {worst:.2e} (rel to ||u||^2), {elapsed:.2f}s",
    )


def test_criterion_05_cone_contraction(capsys, main_grid):
    t0 = time.monotonic()
    checked = 0
    worst_ratio = 0.0
    for sign in (1.0, -1.0):
        for seed in range(100):
            u = seeded_signed_field(main_grid, FULL_PARAMS.omega, seed, sign=sign)
            up, um = pos_neg_parts(u)
            wrong = um if sign > 0 else up
            wrong_norm = math.sqrt(h1_norm_sq(main_grid, FULL_PARAMS.omega, wrong))
            total = math.sqrt(h1_norm_sq(main_grid, FULL_PARAMS.omega, u))
            assert wrong_norm <= 1e-3 * total  # near-signed by construction
            v = apply_T(FULL_PARAMS, main_grid, u)
            vp, vm = pos_neg_parts(v)
            vwrong = vm if sign > 0 else vp
            vnorm = math.sqrt(h1_norm_sq(main_grid, FULL_PARAMS.omega, vwrong))
            worst_ratio = max(worst_ratio, vnorm / wrong_norm)
            checked += 1
    elapsed = time.monotonic() - t0
    ok = worst_ratio <= 1.0 and checked == 200 and elapsed < 60.0
    _report(
        capsys, 5, "operator contracts the wrong-sign part, 200 fields", ok,
        f"worst ratio {worst_ratio:.3e}, {elapsed:.1f}s",
    )


def test_criterion_06_existence_pipeline(capsys, main_grid, continuation_run):
    params, report, fine_grid, fine, elapsed = continuation_run
    final = report.final
    ok = report.aborted_at is None and final is not None and final.converged
    detail = f"aborted at {report.aborted_at}"
    if ok:
        norm = math.sqrt(h1_norm_sq(main_grid, params.omega, final.field))
        mass = params.omega * integrate(main_grid, final.field**2)
        poh_c = abs(final.residuals.pohozaev)
        poh_f = abs(fine.residuals.pohozaev)
        sign_changing = (not final.cone.in_W) and final.cone.node_count >= 1
        grad_ok = final.residuals.grad_norm <= 1e-6 * norm
        nehari_ok = abs(final.residuals.nehari) <= 1e-5 * norm * norm
        poh_ok = poh_c <= 1e-2 * mass and poh_f <= 0.55 * poh_c
        ok = sign_changing and grad_ok and nehari_ok and poh_ok and elapsed < 600.0
        detail = (
            f"E {final.energy:.8f}, grad {final.residuals.grad_norm:.1e}, "
            f"nehari {final.residuals.nehari:.1e}, dilation {poh_c:.2e}"
            f" -> {poh_f:.2e} on the doubled grid, {elapsed:.0f}s"
        )
    _report(capsys, 6, "schedule walk to the unperturbed equation", ok, detail)


def test_criterion_07_energy_doubling(capsys, lambda_ladder):
    doubling, _, elapsed, _ = lambda_ladder
    rows_ok = all(r.error is None for r in doubling.rows)
    largest = doubling.rows[-1] if doubling.rows else None
    local_ok = doubling.m_local > 2.0 * doubling.c_local
    ok = (
        rows_ok
        and largest is not None
        and largest.doubled
        and local_ok
        and elapsed < 1800.0
    )
    if rows_ok and largest is not None:
        detail = (
            f"m/2c at lam=1000: {largest.m_lambda / (2.0 * largest.c_lambda):.4f}, "
            f"local m0/2c0 {doubling.m_local / (2.0 * doubling.c_local):.4f}, "
            f"{elapsed:.0f}s"
        )
    else:
        detail = "; ".join(r.error or "ok" for r in doubling.rows) or "no rows"
    _report(capsys, 7, "sign-changing level above twice the ground level", ok, detail)


def test_criterion_08_asymptotic_convergence(capsys, lambda_ladder):
    _, asym, t_doubling, t_asym = lambda_ladder
    dists = [r.distance for r in asym.rows]
    finite = all(math.isfinite(d) for d in dists)
    decreasing = finite and all(a > b for a, b in zip(dists, dists[1:]))
    ok = decreasing and (t_doubling + t_asym) < 1800.0
    detail = (
        "distances " + " > ".join(f"{d:.2e}" for d in dists)
        + f", {t_asym:.0f}s on top of the doubling run"
    )
    _report(capsys, 8, "rescaled profiles approach the local reference", ok, detail)


def test_criterion_09_rescaling_identity(capsys, main_grid):
    t0 = time.monotonic()
    worst = 0.0
    for lam in (10.0, 100.0):
        params = ProblemParams(lam=lam)
        bar = rescaled_params(params)
        scale = lam ** (2.0 / (params.p - 2.0))
        for seed in range(20):
            u = seeded_field(main_grid, seed)
            lam_bar, u_bar = rescale(lam, params.p, main_grid, u)
            assert lam_bar == bar.cs_strength
            left = energy(bar, main_grid, u_bar)
            right = scale * energy(params, main_grid, u)
            worst = max(worst, abs(left - right) / max(1.0, abs(right)))
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-12 and elapsed < 1.0
    _report(
        capsys, 9, "amplitude rescaling maps the energy exactly", ok,
        f"worst rel {worst:.2e}, {elapsed:.2f}s",
    )


def test_criterion_10_multiplicity(capsys, multiplicity_run):
    report, elapsed = multiplicity_run
    node_counts = sorted({e.node_count for e in report.entries})
    ok = (
        report.distinct_count >= 2
        and len(node_counts) >= 2
        and elapsed < 1200.0
    )
    detail = (
        f"{report.distinct_count} distinct, node counts {node_counts}, "
        + ", ".join(f"E={e.energy:.3f}" for e in report.entries)
        + f", {elapsed:.0f}s"
    )
    _report(capsys, 10, "several sign-changing solutions at weak coupling", ok, detail)
