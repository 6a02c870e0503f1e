"""Acceptance gate: one quantitative criterion per test, one verdict line each.

Every test prints ``CRITERION <n> PASS/FAIL`` with the measured numbers so
the verdicts survive in the captured report, then asserts.  Tolerances are
pinned here and must not be loosened; a criterion that cannot be met is
left to fail loudly.
"""

import time

import numpy as np
import pytest

from psl import analytic2, bounds, grape, magic, model

from conftest import BIG_GAMMA, THREE_LEVEL_GAMMA, random_model, \
    random_uniform_spec


def _verdict(capsys, number, ok, detail):
    with capsys.disabled():
        print("\nCRITERION %d %s: %s" % (number, "PASS" if ok else "FAIL",
                                         detail))


def _three_level_model():
    spec = model.RelaxationSpec.uniform_dephasing(3, THREE_LEVEL_GAMMA,
                                                  BIG_GAMMA)
    return model.build_lindblad_model(spec, model.three_level_hamiltonians())


def _pure_state_on_mo(m, mo):
    no = m.n_off
    pops = np.full(3, 1.0 / 3.0)
    for k in range(m.n_diag):
        pops = pops + mo.s_d_m[k] * np.diag(m.basis.elements[no + k]).real
    psi = np.sqrt(pops)
    return model.rho_to_coherence(np.outer(psi, psi), m.basis).s, pops


def test_criterion_1_magic_subspace_location(capsys):
    tol = 5e-4
    start = time.perf_counter()
    m = _three_level_model()
    mo = magic.locate_Mo(m, BIG_GAMMA)
    _, pops = _pure_state_on_mo(m, mo)
    elapsed = time.perf_counter() - start
    err_s7 = abs(mo.s_d_m[0] - (-0.1928))
    err_s8 = abs(mo.s_d_m[1] - (-0.1485))
    err_pop = np.abs(pops - np.array([0.1364, 0.4091, 0.4545])).max()
    ok = err_s7 < tol and err_s8 < tol and err_pop < tol and elapsed < 1.0
    _verdict(capsys, 1, ok,
             "magic subspace s_d=(%.5f, %.5f) pops=(%.4f, %.4f, %.4f), "
             "max errors (%.1e, %.1e, %.1e) < %g, %.2fs < 1s"
             % (mo.s_d_m[0], mo.s_d_m[1], *pops, err_s7, err_s8, err_pop,
                tol, elapsed))
    assert ok


def test_criterion_2_purity_bounds(capsys):
    tol = 1e-3
    start = time.perf_counter()
    spec = model.RelaxationSpec.uniform_dephasing(3, THREE_LEVEL_GAMMA,
                                                  BIG_GAMMA)
    rep = bounds.bound_report(spec)
    elapsed = time.perf_counter() - start
    err_l = abs(rep.t_L - np.log(3.0) / 4.0)
    err_h = abs(rep.t_H - 0.0379)
    ok = err_l < tol and err_h < tol and elapsed < 1.0
    _verdict(capsys, 2, ok,
             "t_L=%.6f (err %.1e vs ln3/4), t_H=%.6f (err %.1e vs 0.0379), "
             "tol %g, %.2fs < 1s"
             % (rep.t_L, err_l, rep.t_H, err_h, tol, elapsed))
    assert ok


def test_criterion_3_three_level_minimum_time(capsys):
    target = 0.9735
    start = time.perf_counter()
    m = _three_level_model()
    mo = magic.locate_Mo(m, BIG_GAMMA)
    s0, _ = _pure_state_on_mo(m, mo)
    times = np.arange(0.5, 1.3001, 0.05)
    sweep = grape.minimum_time_sweep(m, s0, times, n_segments=200,
                                     n_restarts=8, seed=12345)
    elapsed = time.perf_counter() - start
    # runtime here is a stated target, not a hard gate (hardware dependent);
    # it is reported alongside the gating accuracy check
    ok = (sweep.conclusive and sweep.t_star is not None
          and abs(sweep.t_star - target) <= 0.05 * target)
    _verdict(capsys, 3, ok,
             "three-level t*=%s vs %.4f (band +-5%% = [%.4f, %.4f]), "
             "floor=%.1e, %.0fs (runtime target 600s)"
             % (sweep.t_star, target, 0.95 * target, 1.05 * target,
                sweep.floor, elapsed))
    assert ok


def test_criterion_4_two_level_tightness(capsys):
    start = time.perf_counter()
    params = analytic2.TwoLevelParams(1.0, 0.5, 2.0)
    t_ms = analytic2.t_ms_two_level(params)[2]
    m = model.build_lindblad_model(params.to_relaxation_spec(),
                                   model.two_level_hamiltonians())
    s0 = np.linalg.solve(m.R, -m.q)
    times = np.arange(0.5, 1.3001, 0.05)
    sweep = grape.minimum_time_sweep(m, s0, times, n_segments=200,
                                     n_restarts=8, seed=23456)
    elapsed = time.perf_counter() - start
    ok = (sweep.conclusive and sweep.t_star is not None
          and abs(sweep.t_star - t_ms) <= 0.05 * t_ms
          and elapsed < 300.0)
    _verdict(capsys, 4, ok,
             "two-level t*=%s vs t_MS=%.6f (band +-5%% = [%.4f, %.4f]), "
             "%.0fs < 300s"
             % (sweep.t_star, t_ms, 0.95 * t_ms, 1.05 * t_ms, elapsed))
    assert ok


def test_criterion_5_formula_vs_oracle_suites(capsys):
    from scipy.integrate import solve_ivp

    # (a) descent-time formula vs numeric purity-ODE zero crossing
    rng = np.random.default_rng(71)
    worst_a = 0.0
    for n in (2, 3):
        for _ in range(50):
            m, gamma = random_model(rng, n)
            mo = magic.locate_Mo(m, gamma)
            p_o0 = rng.uniform(0.2, 0.6) * (1.0 - 1.0 / n
                                            - mo.s_d_m @ mo.s_d_m)
            t_ref = magic.time_to_zero_po(mo, p_o0)

            def crossing(_t, p):
                return p[0]

            crossing.terminal = True
            crossing.direction = -1
            sol = solve_ivp(lambda _t, p: -2 * gamma * p + 2 * mo.lam,
                            (0.0, 10.0 * t_ref), [p_o0], method="DOP853",
                            rtol=1e-12, atol=1e-14, events=crossing)
            worst_a = max(worst_a, abs(float(sol.t_events[0][0]) - t_ref))
    ok_a = worst_a < 1e-8

    # (b) two-level divergence time: closed form vs multiplier ODE
    worst_b = 0.0
    for g in np.linspace(1.5, 100.0, 9):
        params = analytic2.TwoLevelParams(1.0, 0.5, g)
        m = model.build_lindblad_model(params.to_relaxation_spec(),
                                       model.two_level_hamiltonians())
        worst_b = max(worst_b, abs(magic.integrate_mu(m, g).t_d
                                   - analytic2.t_d_closed(params)))
    ok_b = worst_b < 1e-6

    # (c) coherence-vector propagation vs dense superoperator propagation
    rng = np.random.default_rng(72)
    worst_c = 0.0
    for _ in range(20):
        n = 2 if rng.uniform() < 0.5 else 3
        gam = rng.uniform(0.0, 2.0, size=(n, n))
        np.fill_diagonal(gam, 0.0)
        spec = model.RelaxationSpec.uniform_dephasing(n, gam,
                                                      2.5 * gam.sum())
        hams = (model.two_level_hamiltonians() if n == 2
                else model.three_level_hamiltonians())
        m = model.build_lindblad_model(spec, hams)
        x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        rho0 = x @ x.conj().T
        rho0 = rho0 / np.trace(rho0)
        amps = rng.normal(size=(4, m.n_controls))
        controls = model.PiecewiseConstantControls(np.linspace(0, 5.0, 5),
                                                   amps)
        t_eval = np.linspace(0.0, 5.0, 11)
        traj = model.propagate(m, model.rho_to_coherence(rho0, m.basis),
                               controls, 5.0, t_eval=t_eval)
        _, rhos = model.propagate_density_matrix(spec, hams, rho0, controls,
                                                 5.0, t_eval=t_eval)
        for s, rho in zip(traj.states, rhos):
            worst_c = max(worst_c, np.abs(
                s - model.rho_to_coherence(rho, m.basis).s).max())
    ok_c = worst_c < 1e-8

    ok = ok_a and ok_b and ok_c
    _verdict(capsys, 5, ok,
             "formula-vs-oracle: t_o ODE max err %.1e < 1e-8 (%s), "
             "t_d closed-vs-ODE max err %.1e < 1e-6 (%s), "
             "propagator max err %.1e < 1e-8 (%s)"
             % (worst_a, "ok" if ok_a else "FAIL",
                worst_b, "ok" if ok_b else "FAIL",
                worst_c, "ok" if ok_c else "FAIL"))
    assert ok


def test_criterion_6_asymptotics(capsys):
    ratios = {}
    for g in (1e2, 1e3):
        spec = model.RelaxationSpec.uniform_dephasing(3, THREE_LEVEL_GAMMA,
                                                      g)
        m = model.build_lindblad_model(spec,
                                       model.three_level_hamiltonians())
        res = magic.t_ms(m, g, 1.0)
        ratios[g] = res.t_ms / magic.asymptotic_t_ms(g)
    spec = model.RelaxationSpec.uniform_dephasing(3, THREE_LEVEL_GAMMA, 1e3)
    t_l = bounds.t_liouville(spec, 1.0, 1.0 / 3.0)[0]
    liou_ratio = t_l * 2.0 * 1e3 / np.log(3.0)
    ok = (0.8 <= ratios[1e2] <= 1.2
          and abs(ratios[1e3] - 1.0) < abs(ratios[1e2] - 1.0)
          and 0.99 <= liou_ratio <= 1.01)
    _verdict(capsys, 6, ok,
             "t_MS/(lnG/G) = %.4f at G=1e2, %.4f at G=1e3 (trend toward 1); "
             "t_L*2G/ln3 = %.5f at G=1e3"
             % (ratios[1e2], ratios[1e3], liou_ratio))
    assert ok


def test_criterion_7_invariant_suites(capsys):
    rng = np.random.default_rng(73)
    # bound ordering on random specifications
    order_ok = True
    for _ in range(100):
        n = int(rng.integers(2, 4))
        rep = bounds.bound_report(random_uniform_spec(rng, n))
        order_ok = order_ok and rep.t_L >= rep.t_H - 1e-12

    # generator structure
    struct_err = 0.0
    for n in (2, 3):
        m, _ = random_model(rng, n)
        no = m.n_off
        for a in m.generators:
            struct_err = max(struct_err, float(np.abs(a + a.T).max()),
                             float(np.abs(a[no:, no:]).max()))
    struct_ok = struct_err < 1e-12

    # adjoint gradient against central finite differences
    grad_ok = True
    worst_g = 0.0
    for trial in range(20):
        n = 2 if trial % 2 == 0 else 3
        m, _ = random_model(rng, n)
        nseg = 5
        problem = grape.PulseProblem(m, t_final=float(rng.uniform(0.3, 1.0)),
                                     n_segments=nseg)
        s0 = rng.normal(size=m.dim)
        s0 *= 0.4 / np.linalg.norm(s0)
        problem.set_initial_state(s0)
        u = rng.normal(size=nseg * m.n_controls)
        _, grad = problem.cost_and_gradient(u)
        eps = 1e-6
        for k in rng.choice(u.size, size=4, replace=False):
            up, dn = u.copy(), u.copy()
            up[k] += eps
            dn[k] -= eps
            fd = (problem.cost_and_gradient(up)[0]
                  - problem.cost_and_gradient(dn)[0]) / (2 * eps)
            rel = abs(grad[k] - fd) / max(abs(fd), abs(grad[k]), 1e-8)
            worst_g = max(worst_g, rel)
    grad_ok = worst_g < 1e-4

    # purity conservation without dissipation
    spec = model.RelaxationSpec(3, np.zeros((3, 3)), np.zeros((3, 3)))
    m = model.build_lindblad_model(spec, model.three_level_hamiltonians())
    s0 = rng.normal(size=m.dim)
    s0 *= 0.5 / np.linalg.norm(s0)
    controls = model.PiecewiseConstantControls(
        np.linspace(0.0, 2.0, 5), rng.normal(size=(4, m.n_controls)))
    traj = model.propagate(m, model.CoherenceState.from_vector(3, s0),
                           controls, 2.0)
    norms = np.linalg.norm(traj.states, axis=1)
    purity_err = float(np.abs(norms - norms[0]).max())
    purity_ok = purity_err < 1e-9

    ok = order_ok and struct_ok and grad_ok and purity_ok
    _verdict(capsys, 7, ok,
             "t_L>=t_H on 100 specs (%s); generator defects %.1e < 1e-12 "
             "(%s); gradient rel err %.1e < 1e-4 (%s); purity drift %.1e "
             "< 1e-9 (%s)"
             % ("ok" if order_ok else "FAIL", struct_err,
                "ok" if struct_ok else "FAIL", worst_g,
                "ok" if grad_ok else "FAIL", purity_err,
                "ok" if purity_ok else "FAIL"))
    assert ok


def test_criterion_8_formula_vs_propagation_ledger(capsys):
    tol = 1e-4
    m = _three_level_model()
    mo = magic.locate_Mo(m, BIG_GAMMA)
    s0, _ = _pure_state_on_mo(m, mo)
    p_o0 = float(s0[:m.n_off] @ s0[:m.n_off])

    t_o_formula = magic.time_to_zero_po(mo, p_o0)
    t_d_formula = magic.time_on_Md_quadrature(m, BIG_GAMMA)
    t_ms_formula = t_o_formula + t_d_formula

    hit, tail, drift, n_windows = magic.t_o_by_propagation(m, mo)
    t_o_prop = hit + tail
    t_d_ode = magic.integrate_mu(m, BIG_GAMMA).t_d
    t_ms_prop = t_o_prop + t_d_ode

    err_o = abs(t_o_prop - t_o_formula)
    err_ms = abs(t_ms_prop - t_ms_formula)
    ok = err_o < tol and err_ms < tol and drift < 1e-8

    printed_o, printed_ms = 0.5613, 0.8985
    match_o = abs(t_o_formula - printed_o) < 5e-4
    match_ms = abs(t_ms_formula - printed_ms) < 5e-4
    _verdict(capsys, 8, ok,
             "internal consistency: t_o formula %.6f vs propagation %.6f "
             "(err %.1e), t_MS formula %.6f vs propagation %.6f (err %.1e), "
             "tol %g, diagonal drift %.1e over %d windows; reference-digit "
             "comparison (recorded, not gating): t_o vs %.4f %s, t_MS vs "
             "%.4f %s"
             % (t_o_formula, t_o_prop, err_o, t_ms_formula, t_ms_prop,
                err_ms, tol, drift, n_windows,
                printed_o, "MATCHES" if match_o else "DOES NOT MATCH",
                printed_ms, "MATCHES" if match_ms else "DOES NOT MATCH"))
    assert ok
