"""Randomising the first-period recommendation beats the best deterministic menu.

Middle-cost types are told to work only with probability 1 - eps.  On the
work branch they earn nothing; on the rare shirk branch they get the whole
rent scaled by 1/eps.  The principal saves the cost of the rent on most paths.
"""

from screenlab import Environment, SimConfig, build_improvement, make_uniform, simulate_stochastic, solve
from screenlab.stochastic import epsilon_bound, improvement_delta, stochastic_payoff, verify_stochastic

d = make_uniform(1.0, 2.0)
env = Environment(d, N=2, alpha=2.0)
base = solve(env)

bound = epsilon_bound(base, env)
print(f"admissible eps up to {bound:.6f}")

for frac in (0.25, 0.5, 1.0):
    sm = build_improvement(base, env, frac * bound)
    delta = improvement_delta(base, env, sm.epsilon)
    exact = stochastic_payoff(sm) - base.V_star
    chk = verify_stochastic(sm)
    print(f"eps={sm.epsilon:.5f}: gain {delta:.3e} (exact integration {exact:.3e}), worst ex-post slack {chk.min_slack:.1e} [{chk.worst}]")

# Pushing eps past the bound breaks the shirk-branch participation constraint.
over = build_improvement(base, env, 1.01 * bound, check_range=False)
print(f"eps 1% above bound: worst slack {verify_stochastic(over).min_slack:.2e}")

# A million simulated agents, common random numbers against the base menu.
sm = build_improvement(base, env, 0.5 * bound)
res = simulate_stochastic(sm, SimConfig(n_paths=1_000_000, seed=1))
g = res.extra["gain"]
print(f"simulated gain {g['mean']:.3e} +/- {g['stderr']:.1e}")
