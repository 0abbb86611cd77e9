"""Acceptance criteria at desk scale (n_x = n_t = 50).

Each test appends one ``[PASS]``/``[FAIL] criterion N: ...`` line that is
printed in the terminal summary, then asserts the criterion unchanged.
"""

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES, smooth_field

from thermoisp.experiments import (
    COPPER,
    RunConfig,
    build_case,
    f0_profile,
    f1_profile,
    nondimensional_epsilon,
    prepare_data,
    run_reconstruction,
    run_sweep,
)
from thermoisp.forward import ProblemSpec, solve_forward, solve_sensitivity
from thermoisp.gradients import (
    CostConfig,
    SobolevWeights,
    assemble_elliptic,
    cost,
    forward_image,
    grad_l2,
    optimal_step,
)
from thermoisp.grid import SpaceGrid, TimeGrid, inner_l2, norm_l2
from thermoisp.kernel import Kernel, conv_adjoint, conv_forward
from thermoisp.measurements import MeasurementKind, apply_measurement
from thermoisp.reconstruction import (
    ReconstructionConfig,
    landweber_threshold,
    operator_norm_estimate,
    reconstruct,
)

BETAS = [0.0, 1e-3, 1e-2, 1e-1]


def report(n: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
    return ok


def _run(**kw):
    return run_reconstruction(RunConfig(**kw)).result


@pytest.fixture(scope="module")
def beta_sweep():
    return run_sweep(RunConfig(method="sd", gradient="l2", target="f0"), "beta", BETAS)


def test_criterion_01_forward_mms():
    errs = []
    for n_t in (50, 100):
        case = build_case("f0", "1.2")
        space, time = SpaceGrid(50), TimeGrid(n_t)
        chi = apply_measurement(solve_forward(case.full_problem(space, time)), "1.2")
        exact = 7 / 40 * (1 - np.cos(2 * np.pi * space.nodes))
        errs.append(norm_l2(chi - exact, space) / norm_l2(exact, space))
    ratio = errs[0] / errs[1]
    ok = errs[0] <= 2e-2 and 1.5 <= ratio <= 2.5
    report(1, ok, f"MMS rel err {errs[0]:.3e} (<= 2e-2), halving tau ratio {ratio:.2f} in [1.5, 2.5]")
    assert ok


def test_criterion_02_norm_pins():
    grid = SpaceGrid(50)
    n0 = norm_l2(grid.sample(f0_profile), grid)
    n1 = norm_l2(grid.sample(f1_profile), grid)
    ok = abs(n0 - 0.40042) <= 1e-3 and abs(n1 - 0.36969) <= 1e-3
    report(2, ok, f"||f0|| = {n0:.5f} (0.40042), ||f1|| = {n1:.5f} (0.36969), tol 1e-3")
    assert ok


def test_criterion_03_epsilon_pin():
    eps, gamma = nondimensional_epsilon(**COPPER)
    ok = abs(eps - 0.0189) <= 2e-4 and abs(gamma - 6.633e6) <= 1e3
    report(3, ok, f"epsilon = {eps:.5f} (0.0189 +- 2e-4), gamma = {gamma:.1f} (6.633e6 +- 1e3)")
    assert ok


def test_criterion_04_landweber_noise_free():
    r0 = _run(method="landweber", alpha=6.0, target="f0")
    r1 = _run(method="landweber", alpha=6.0, target="f1")
    ok = r0.e_r <= 0.05 and r1.e_r <= 0.20 and r0.DF <= 5e-4 and r0.K == 200
    report(4, ok, f"Landweber a=6: e_r(f0) = {r0.e_r:.4f} (<= 0.05), e_r(f1) = {r1.e_r:.4f} "
                  f"(<= 0.20), DF(f0) = {r0.DF:.3e} (<= 5e-4), K = {r0.K}")
    assert ok


def test_criterion_05_landweber_threshold():
    case, space, time, _, _ = prepare_data(RunConfig())
    thr = landweber_threshold(operator_norm_estimate("1.2", 20, case.problem(space, time), case.g))
    small = _run(method="landweber", alpha=3.0, max_iter=50)
    e = np.asarray(small.error_history)
    monotone = len(e) == 51 and bool(np.all(np.diff(e) < 0))
    big = _run(method="landweber", alpha=4 * thr)
    ok = 4 <= thr <= 9 and monotone and big.diverged
    report(5, ok, f"threshold 2/||A||^2 = {thr:.3f} in [4, 9]; a=3 e_r decreasing over 50 its: "
                  f"{monotone}; a=4x threshold diverged: {big.diverged} at K = {big.K}")
    assert ok


def test_criterion_06_morozov_noise():
    out = run_reconstruction(RunConfig(method="landweber", alpha=6.0, noise=0.05))
    res, e, r = out.result, out.measurement.noise_e, 1.001
    ok = res.stop_reason == "discrepancy" and res.K <= 100 and e <= res.DF <= 1.5 * r * e
    report(6, ok, f"5% noise seed {out.config.seed}: stop={res.stop_reason}, K = {res.K} (<= 100), "
                  f"DF = {res.DF:.4e} in [e, 1.5 r e] = [{e:.4e}, {1.5 * r * e:.4e}]")
    assert ok


def test_criterion_07_sd_l2():
    r0 = _run(method="sd", gradient="l2", target="f0")
    r1 = _run(method="sd", gradient="l2", target="f1")
    ok = r0.e_r <= 0.05 and r1.e_r <= 0.20 and r0.K <= 200 and r1.K <= 200
    report(7, ok, f"SD-L2: e_r(f0) = {r0.e_r:.4f} (<= 0.05, K = {r0.K}), "
                  f"e_r(f1) = {r1.e_r:.4f} (<= 0.20, K = {r1.K})")
    assert ok


def test_criterion_08_cg_termination():
    l2 = _run(method="cg", gradient="l2", target="f0")
    sob = _run(method="cg", gradient="sobolev", target="f0")
    ok_l2 = l2.K <= 10 and l2.e_r <= 0.15
    ok_sob = sob.K <= 5 and sob.e_r <= 0.45
    ok = ok_l2 and ok_sob
    report(8, ok, f"CG-L2 K = {l2.K} (<= 10), e_r = {l2.e_r:.4f} (<= 0.15), stop={l2.stop_reason}; "
                  f"CG-Sobolev K = {sob.K} (<= 5), e_r = {sob.e_r:.4f} (<= 0.45), "
                  f"stop={sob.stop_reason}")
    assert ok


def test_criterion_09_boundary_behaviour():
    case, space, time, _, R = prepare_data(RunConfig(target="f1"))
    prob = case.problem(space, time)
    truth = space.sample(case.f)
    frozen = True
    for method in ("landweber", "sd", "cg"):
        cfg = ReconstructionConfig(case.isp, prob, case.g, method=method, gradient="l2",
                                   alpha=6.0, keep_iterates=True)
        res = reconstruct(cfg, R, truth)
        frozen &= all(f[0] == 0.0 and f[-1] == 0.0 for f in res.iterates)
    sob = reconstruct(ReconstructionConfig(case.isp, prob, case.g, method="sd",
                                           gradient="sobolev"), R, truth)
    left = sob.f_final[0]
    ok = frozen and abs(left - 0.2) < 0.15
    report(9, ok, f"L2 iterates keep f(0) = f(1) = 0 exactly: {frozen}; "
                  f"Sobolev-SD f_K(0) = {left:.4f}, |f_K(0) - 0.2| < 0.15")
    assert ok


def _fd_mismatch(n_t: int) -> dict:
    case = build_case("f0", "1.2")
    space = SpaceGrid(50)
    prob = ProblemSpec(space, TimeGrid(n_t), case.params, case.kernel)
    x = space.nodes
    out = {}
    for isp in MeasurementKind:
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(10):
            f, d, R = smooth_field(rng, x), smooth_field(rng, x), smooth_field(rng, x)
            cfg = CostConfig(isp, R, case.g, prob)
            eps = 1e-3
            fd = (cost(f + eps * d, cfg) - cost(f - eps * d, cfg)) / (2 * eps)
            ad = inner_l2(grad_l2(f, cfg), d, space)
            worst = max(worst, abs(ad - fd) / abs(fd))
        out[isp.value] = worst
    return out


def test_criterion_10_gradient_fd():
    m50, m100 = _fd_mismatch(50), _fd_mismatch(100)
    ok = all(m50[k] <= 1e-2 and m50[k] / m100[k] >= 1.5 for k in m50)
    detail = ", ".join(f"ISP{k}: {m50[k]:.2e} -> {m100[k]:.2e} (x{m50[k] / m100[k]:.2f})"
                       for k in m50)
    report(10, ok, f"max rel adjoint/FD mismatch over 10 pairs, n_t 50 -> 100: {detail}; "
                   f"need <= 1e-2 and shrink >= 1.5")
    assert ok


def test_criterion_11_structural_invariants(beta_sweep):
    case = build_case("f0", "1.2")
    space, time = SpaceGrid(50), TimeGrid(50)
    prob = case.problem(space, time)
    x = space.nodes
    rng = np.random.default_rng(11)
    checks = {}

    d1, d2 = smooth_field(rng, x), smooth_field(rng, x)
    lin = True
    for kind in MeasurementKind:
        m = [apply_measurement(solve_sensitivity(d, case.g, prob, into=kind.source_slot), kind)
             for d in (d1, d2, 2 * d1 - 0.5 * d2)]
        lin &= np.abs(2 * m[0] - 0.5 * m[1] - m[2]).max() <= 1e-10 * np.abs(m[2]).max()
    checks["measurement linearity"] = lin

    full = solve_forward(case.full_problem(space, time))
    both = solve_forward(case.known_problem(space, time)) + solve_sensitivity(
        space.sample(case.f), case.g, prob)
    checks["superposition"] = all(
        np.abs(getattr(both, n) - getattr(full, n)).max() <= 1e-10 * np.abs(getattr(full, n)).max()
        for n in ("u", "theta"))

    A = assemble_elliptic(SobolevWeights(1.0, 0.01), space)
    checks["A 1 = r0"] = bool(np.array_equal(A @ np.ones(space.n_nodes), np.ones(space.n_nodes)))

    mono = True
    for isp in MeasurementKind:
        cfg = CostConfig(isp, smooth_field(rng, x), case.g, prob, beta=1e-3)
        f = smooth_field(rng, x)
        g = grad_l2(f, cfg)
        step = optimal_step(forward_image(f, cfg) - cfg.remainder, forward_image(g, cfg), f, g,
                            cfg.beta, space)
        mono &= cost(f - step * g, cfg) <= cost(f, cfg) + 1e-10
    checks["line search monotone"] = mono

    z = rng.normal(size=(11, 3))
    kern = Kernel(0.01, 2.0)
    caus = True
    for i in range(11):
        for j in range(11):
            zp = z.copy()
            zp[j] += 1.0
            caus &= np.array_equal(conv_forward(kern, z, 0.1, i), conv_forward(kern, zp, 0.1, i)) \
                == (j > i or j == 0)
            caus &= np.array_equal(conv_adjoint(kern, z, 0.1, i), conv_adjoint(kern, zp, 0.1, i)) \
                == (j < i or j == 10)
    checks["convolution (anti)causality"] = caus

    df = [row["DF"] for row in beta_sweep]
    p = [row["P"] for row in beta_sweep]
    checks["beta monotone DF/P"] = bool(np.all(np.diff(df) > 0) and np.all(np.diff(p) < 0))

    ok = all(checks.values())
    report(11, ok, "; ".join(f"{k}: {'ok' if v else 'VIOLATED'}" for k, v in checks.items()))
    assert ok


def test_criterion_12_beta_sweep(beta_sweep):
    df = [row["DF"] for row in beta_sweep]
    p = [row["P"] for row in beta_sweep]
    ok = bool(np.all(np.diff(df) > 0) and np.all(np.diff(p) < 0))
    pts = ", ".join(f"b={b:g}: DF={d:.3e} P={q:.4f}" for b, d, q in zip(BETAS, df, p))
    report(12, ok, f"SD-L2 f0 beta sweep, DF increasing and P decreasing: {pts}")
    assert ok
