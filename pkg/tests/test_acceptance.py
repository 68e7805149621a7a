"""Acceptance criteria 1-11.

Each test records one PASS/FAIL line; the lines are printed at the end of the
pytest run (see conftest.py) and when this file is executed directly.
"""

from __future__ import annotations

import time

import numpy as np

from screenlab import (
    Environment,
    Regime,
    SimConfig,
    ThresholdProfile,
    backload,
    brute_force,
    build_improvement,
    check_assumption1,
    check_assumption2,
    find_alpha_hat,
    make_truncated_normal,
    make_uniform,
    simulate,
    simulate_stochastic,
    solve,
    sweep_alpha,
    virtual_cost_inverse,
)
from screenlab.history import WorkHistory, histories_of_length, node_count
from screenlab.mechanism import InterimSchedule, NodeState, agent_interim_utility, principal_payoff
from screenlab.sim import deviation_search
from screenlab.solver import interior_at_thetabar, solve_foc_system
from screenlab.stochastic import epsilon_bound, improvement_delta, stochastic_payoff, verify_stochastic

RESULTS: dict[int, str] = {}

U12 = make_uniform(1.0, 2.0)


def record(n: int, ok: bool, detail: str, seconds: float) -> None:
    RESULTS[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} ({seconds:.2f} s) {detail}"
    print(RESULTS[n])
    assert ok, RESULTS[n]


def test_c01_oracle_one_period():
    t0 = time.perf_counter()
    worst = 0.0
    for alpha in (2.0, 2.4, 3.0):
        prof, _, _ = brute_force(Environment(U12, 1, alpha), grid_points=201, refine_rounds=3)
        worst = max(worst, abs(prof.cutoffs[0] - virtual_cost_inverse(U12, alpha)))
    dt = time.perf_counter() - t0
    record(1, worst <= 5e-3 and dt < 5, f"max |c1 - G^-1(alpha)| = {worst:.3g} (tol 5e-3)", dt)


def test_c02_oracle_two_periods():
    t0 = time.perf_counter()
    env = Environment(U12, 2, 2.0)
    sol = solve_foc_system(env)
    v_foc = principal_payoff(sol.menu.mechanism(U12), env)
    prof, v_bf, _ = brute_force(env, grid_points=201, refine_rounds=3)
    grid_c = np.array([prof.cutoff(WorkHistory.empty()), prof.cutoff(WorkHistory.zeros(1))])
    dv = abs(v_foc - v_bf)
    dc = float(np.max(np.abs(np.asarray(sol.menu.start_cutoffs) - grid_c)))
    dt = time.perf_counter() - t0
    record(2, dv <= 2e-3 and dc <= 2e-3 and dt < 60, f"|dV| = {dv:.3g}, max |dc| = {dc:.3g} (tol 2e-3)", dt)


def _structure(N, alpha, grid_points, rounds):
    prof, _, step = brute_force(Environment(U12, N, alpha), grid_points=grid_points, refine_rounds=rounds)
    started_ok = all(
        prof.cutoff(w) >= U12.hi - step
        for t in range(1, N)
        for w in histories_of_length(t)
        if w.started
    )
    starts = prof.start_cutoffs()
    interior = bool(np.all((starts > U12.lo + step) & (starts < U12.hi - step)))
    return started_ok, interior, starts


def test_c03_structure():
    t0 = time.perf_counter()
    failures = []
    n3_time = 0.0
    for N, pts, rounds in ((2, 201, 3), (3, 9, 8)):
        for alpha in (2.0, 2.2):
            s = time.perf_counter()
            started_ok, interior, starts = _structure(N, alpha, pts, rounds)
            if N == 3:
                n3_time += time.perf_counter() - s
            if not started_ok:
                failures.append(f"N={N} alpha={alpha}: started cutoff below hi")
            if not interior:
                failures.append(f"N={N} alpha={alpha}: start cutoffs {np.round(starts, 4).tolist()} not interior")
    dt = time.perf_counter() - t0
    detail = "; ".join(failures) if failures else "started cutoffs at hi, start cutoffs interior"
    record(3, not failures and n3_time < 600, detail, dt)


def _interior_menus():
    cases = [(U12, 2, a) for a in (2.0, 2.1, 2.2)] + [(U12, 3, a) for a in (2.0, 2.01)]
    tn = make_truncated_normal(1.5, 1.0, 1.0, 2.0)
    cases += [(tn, 2, 2.0), (tn, 3, 2.0), (make_uniform(2.0, 3.0), 2, 3.0)]
    out = []
    for d, N, a in cases:
        rep = solve(Environment(d, N, a))
        if rep.regime == Regime.ConsecutiveMenu:
            out.append((d, N, a, rep))
    return out


def test_c04_binding_ir():
    t0 = time.perf_counter()
    menus = _interior_menus()
    worst_u, worst_rent = 0.0, 0.0
    for d, N, _, rep in menus:
        mech = rep.mechanism
        node = NodeState(N, WorkHistory.zeros(N - 1), d.hi)
        worst_u = max(worst_u, abs(agent_interim_utility(mech, node)))
        c = np.asarray(rep.menu.start_cutoffs)
        worst_rent = max(worst_rent, abs(rep.u1_star - float(sum(d.I(x) for x in c[1:]))))
    dt = time.perf_counter() - t0
    ok = len(menus) >= 6 and worst_u <= 1e-10 and worst_rent <= 1e-12
    record(4, ok, f"{len(menus)} menus; max |u(0_N)| = {worst_u:.3g}, max rent gap = {worst_rent:.3g}", dt)


def test_c05_regime_switch():
    t0 = time.perf_counter()
    res = find_alpha_hat(U12, 2)
    upper = (2 - 1) * U12.hi + 3.0
    rows = sweep_alpha(U12, 2, np.linspace(U12.hi, 6.0, 50))
    v = [r["V_star"] for r in rows]
    reg = [r["regime"] for r in rows]
    switches = sum(a != b for a, b in zip(reg, reg[1:]))
    dt = time.perf_counter() - t0
    ok = (
        U12.hi < res.alpha_hat < upper
        and abs(res.gap_at_alpha_hat) <= 1e-7
        and switches == 1
        and all(b >= a for a, b in zip(v, v[1:]))
        and dt < 30
    )
    record(5, ok, f"alpha_hat = {res.alpha_hat!r}, gap = {res.gap_at_alpha_hat:.3g}, switches = {switches}", dt)


def test_c06_envelope():
    t0 = time.perf_counter()
    h = 1e-4
    worst = 0.0
    for alpha in (2.05, 2.1, 2.2, 3.0, 4.5):  # alpha_hat = 2.25 for this case
        up = solve(Environment(U12, 2, alpha + h)).V_star
        dn = solve(Environment(U12, 2, alpha - h)).V_star
        ew = solve(Environment(U12, 2, alpha)).expected_work
        worst = max(worst, abs((up - dn) / (2 * h) - ew) / ew)
    dt = time.perf_counter() - t0
    record(6, worst <= 1e-3, f"max relative gap = {worst:.3g} (tol 1e-3)", dt)


def test_c07_backloading():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    N = 3
    worst_dv, worst_ds = 0.0, np.inf
    for _ in range(20):
        prof = ThresholdProfile(N, rng.uniform(U12.lo, U12.hi, node_count(N)))
        sched = InterimSchedule(N, tuple(rng.exponential(0.5, 1 << t) for t in range(1, N + 1)))
        alpha = float(rng.uniform(2, 4))
        res = backload(sched, prof, U12)
        env = Environment(U12, N, alpha)
        worst_dv = max(worst_dv, abs(sched.principal_payoff(prof, U12, alpha) - principal_payoff(res.mechanism, env)))
        worst_ds = min(worst_ds, res.slack_gain)
    dt = time.perf_counter() - t0
    # slacks before and after are sums of the same terms in a different order,
    # so "weakly larger" is judged up to float rounding
    ok = worst_dv <= 1e-12 and worst_ds >= -1e-12
    record(7, ok, f"max |dV| = {worst_dv:.3g}, min slack gain = {worst_ds:.3g} (>= -1e-12)", dt)


def test_c08_ic():
    t0 = time.perf_counter()
    cfg = SimConfig(n_paths=1, seed=0, deviation_nodes=200)
    worst = 0.0
    for d, N, a, rep in _interior_menus():
        worst = max(worst, deviation_search(rep.mechanism, Environment(d, N, a), cfg).max_violation)
    aw_env = Environment(U12, 3, 3.0)
    worst = max(worst, deviation_search(solve(aw_env).mechanism, aw_env, cfg).max_violation)
    env = Environment(U12, 2, 2.0)
    mech = solve(env).mechanism
    bumped = mech.payments.copy()
    bumped[0b01] += 0.1
    planted = deviation_search(mech.with_payments(bumped), env, cfg).max_violation
    dt = time.perf_counter() - t0
    record(8, worst <= 1e-9 and planted > 0.05, f"clean max = {worst:.3g}, planted = {planted:.3g}", dt)


def test_c09_stochastic_gain():
    t0 = time.perf_counter()
    env = Environment(U12, 2, 2.0)
    rep = solve(env)
    eps = 0.5 * epsilon_bound(rep, env)
    sm = build_improvement(rep, env, eps)
    delta = improvement_delta(rep, env, eps)
    exact = stochastic_payoff(sm) - rep.V_star
    chk = verify_stochastic(sm)
    sim = simulate_stochastic(sm, SimConfig(n_paths=10**6, seed=9))
    g = sim.extra["gain"]
    z = abs(g["mean"] - delta) / g["stderr"]
    dt = time.perf_counter() - t0
    ok = abs(delta - exact) <= 1e-10 and delta > 0 and chk.min_slack >= -1e-9 and z <= 4 and dt < 60
    record(
        9,
        ok,
        f"delta = {delta:.6g}, |delta - exact| = {abs(delta - exact):.3g}, "
        f"min slack = {chk.min_slack:.3g}, simulated gain at {z:.2f} sigma",
        dt,
    )


def test_c10_assumptions():
    t0 = time.perf_counter()
    a1 = check_assumption1(U12) and not check_assumption1(make_uniform(0.0, 1.0))
    a2 = all(check_assumption2(U12, N).a2_density_bound == (N <= 3) for N in range(2, 9))
    chk = interior_at_thetabar(U12, 2)
    _, v_bf, _ = brute_force(Environment(U12, 2, U12.hi), grid_points=201, refine_rounds=3)
    v_aw = 2 * U12.hi - (U12.hi + U12.mean)
    consistent = chk.interior and chk.lemma_holds and (v_bf > v_aw)
    dt = time.perf_counter() - t0
    record(10, a1 and a2 and consistent, f"A1 ok = {a1}, A2 bound iff N <= 3 = {a2}, oracle V_cm - V_aw = {v_bf - v_aw:.4g}", dt)


def test_c11_simulation():
    t0 = time.perf_counter()
    worst_z = 0.0
    for alpha in (2.0, 3.0):  # consecutive menu, always-working
        env = Environment(U12, 2, alpha)
        rep = solve(env)
        for seed in (1, 2, 3):
            res = simulate(rep.mechanism, env, SimConfig(n_paths=200_000, seed=seed, deviation_nodes=0))
            # the always-working run has zero variance; allow float summation error
            tol = 4 * res.principal_stderr + 1e-12 * max(1.0, abs(rep.V_star))
            if abs(res.principal_mean - rep.V_star) > tol:
                worst_z = np.inf
            elif res.principal_stderr > 0:
                worst_z = max(worst_z, abs(res.principal_mean - rep.V_star) / res.principal_stderr)
    env = Environment(U12, 2, 2.0)
    mech = solve(env).mechanism
    cfg = SimConfig(n_paths=200_000, seed=5, dump_paths=True)
    same = simulate(mech, env, cfg).to_json() == simulate(mech, env, cfg).to_json()
    dt = time.perf_counter() - t0
    record(11, worst_z <= 4 and same, f"worst |z| = {worst_z:.2f}, repeat run identical = {same}", dt)


if __name__ == "__main__":
    import sys

    for name, fn in sorted(globals().items()):
        if name.startswith("test_c"):
            try:
                fn()
            except AssertionError:
                pass
    sys.exit(0 if all("PASS" in line for line in RESULTS.values()) else 1)
