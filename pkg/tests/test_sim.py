import numpy as np
import pytest

from screenlab import Environment, Mechanism, SimConfig, ThresholdProfile, build_improvement, simulate, simulate_stochastic, solve
from screenlab.mechanism import check_interim_ir, principal_payoff
from screenlab.sim import BLOCK_SIZE, deviation_search, draw_uniforms, quit_search
from screenlab.stochastic import epsilon_bound, improvement_delta


@pytest.fixture(scope="module")
def menu2(u12):
    env = Environment(u12, 2, 2.0)
    return solve(env).mechanism, env


def test_draws_do_not_depend_on_threads():
    a = draw_uniforms(SimConfig(n_paths=3 * BLOCK_SIZE + 17, seed=5, threads=1), 3)
    b = draw_uniforms(SimConfig(n_paths=3 * BLOCK_SIZE + 17, seed=5, threads=4), 3)
    assert np.array_equal(a, b)
    # a longer run extends a shorter one
    c = draw_uniforms(SimConfig(n_paths=BLOCK_SIZE + 1, seed=5, threads=2), 3)
    assert np.array_equal(a[: BLOCK_SIZE + 1], c)


def test_thread_env_var(monkeypatch, menu2):
    mech, env = menu2
    monkeypatch.setenv("SCREENLAB_THREADS", "3")
    a = simulate(mech, env, SimConfig(n_paths=150_000, seed=2))
    monkeypatch.setenv("SCREENLAB_THREADS", "1")
    b = simulate(mech, env, SimConfig(n_paths=150_000, seed=2))
    assert a.to_dict() == b.to_dict()


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(n_paths=0)
    with pytest.raises(ValueError):
        SimConfig(seed=-1)


def test_always_working_is_exact(u12):
    env = Environment(u12, 3, 2.5)
    mech = Mechanism.from_profile(ThresholdProfile.constant(3, u12.hi), u12)
    res = simulate(mech, env, SimConfig(n_paths=10_000, seed=1))
    assert res.principal_stderr == 0.0
    assert res.principal_mean == pytest.approx(3 * 2.5 - (2 + 2 * 1.5), abs=1e-12)
    assert res.start_frequency["1"] == 1.0


def test_menu_within_four_sigma(menu2):
    mech, env = menu2
    res = simulate(mech, env, SimConfig(n_paths=1_000_000, seed=7))
    exact = principal_payoff(mech, env)
    assert abs(res.principal_mean - exact) <= 4 * res.principal_stderr
    F1 = float(env.d.F(mech.profile.cutoffs[0]))
    se = np.sqrt(F1 * (1 - F1) / res.n_paths)
    assert abs(res.start_frequency["1"] - F1) <= 4 * se
    assert sum(res.start_frequency.values()) == pytest.approx(1.0, abs=1e-12)
    # interim, not ex-post, participation: some agents end below zero
    assert res.expost_negative_mass > 0


def test_stderr_scaling(menu2):
    mech, env = menu2
    a = simulate(mech, env, SimConfig(n_paths=200_000, seed=3, deviation_nodes=0))
    b = simulate(mech, env, SimConfig(n_paths=400_000, seed=3, deviation_nodes=0))
    ratio = a.principal_stderr / b.principal_stderr
    assert abs(ratio / np.sqrt(2) - 1) <= 0.1


def test_deviation_search_clean_and_planted(menu2):
    mech, env = menu2
    cfg = SimConfig(n_paths=1, seed=0, deviation_nodes=200)
    assert deviation_search(mech, env, cfg).max_violation <= 1e-9
    bumped = mech.payments.copy()
    bumped[0b01] += 0.1  # work leaf after a first-period shirk
    rep = deviation_search(mech.with_payments(bumped), env, cfg)
    assert rep.max_violation > 0.05


def test_deviation_one_period(u12):
    env = Environment(u12, 1, 2.0)
    mech = solve(env).mechanism
    assert deviation_search(mech, env, SimConfig(n_paths=1, deviation_nodes=100)).max_violation <= 1e-12


def test_quit_search_matches_ir(menu2, u12):
    mech, env = menu2
    cfg = SimConfig(n_paths=1, seed=0)
    q = quit_search(mech, env, cfg)
    assert q.min_utility == pytest.approx(check_interim_ir(mech).min_slack, abs=1e-9)
    assert q.min_utility == pytest.approx(0.0, abs=1e-10) and str(q.worst.w_prev) == "0"
    aw_env = Environment(u12, 3, 3.0)
    aw = Mechanism.from_profile(ThresholdProfile.constant(3, u12.hi), u12)
    qa = quit_search(aw, aw_env, cfg)
    assert qa.min_utility == 0.0 and qa.worst.t == 1
    short = mech.with_payments(mech.payments - 0.01)
    assert quit_search(short, env, cfg).min_utility < 0


def test_reproducible(menu2):
    mech, env = menu2
    cfg = SimConfig(n_paths=100_000, seed=11, dump_paths=True)
    a, b = simulate(mech, env, cfg), simulate(mech, env, cfg)
    assert a.to_json() == b.to_json()
    assert a.paths_csv() == b.paths_csv()
    assert a.paths_csv().splitlines()[0] == "path,leaf_mask,principal,agent"


def test_stochastic_gain_and_shirk_frequency(menu2):
    _, env = menu2
    rep = solve(env)
    eps = epsilon_bound(rep, env)
    sm = build_improvement(rep, env, eps)
    res = simulate_stochastic(sm, SimConfig(n_paths=1_000_000, seed=3))
    gain = res.extra["gain"]
    assert abs(gain["mean"] - improvement_delta(rep, env, eps)) <= 4 * gain["stderr"]
    d = env.d
    p = eps * (float(d.F(sm.c1)) - float(d.F(sm.x_sb)))
    freq = res.extra["shirk_branch_frequency"]
    assert abs(freq["mean"] - p) <= 4 * np.sqrt(p * (1 - p) / res.n_paths)


def test_stochastic_gain_shrinks_with_epsilon(menu2):
    # the shirk branch carries rent / eps with probability ~eps, so the sample
    # must be large enough to see it; the gain tracks the exact delta as eps falls
    _, env = menu2
    rep = solve(env)
    bound = epsilon_bound(rep, env)
    prev = np.inf
    for frac in (0.5, 0.25, 0.125):
        eps = frac * bound
        sm = build_improvement(rep, env, eps)
        res = simulate_stochastic(sm, SimConfig(n_paths=400_000, seed=4))
        delta = improvement_delta(rep, env, eps)
        assert abs(res.extra["gain"]["mean"] - delta) <= 4 * res.extra["gain"]["stderr"]
        assert delta < prev
        prev = delta
