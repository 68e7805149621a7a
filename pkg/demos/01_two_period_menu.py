"""Two periods, uniform costs on [1, 2], value alpha = 2 per unit of work.

Walks through the optimal consecutive-working menu: where the cutoffs land,
what the agent is paid on each path, and why the shirk-then-shirk branch is
where participation binds.
"""

import numpy as np

from screenlab import Environment, WorkHistory, brute_force, check_interim_ir, make_uniform, solve
from screenlab.mechanism import payoff_by_start_period

d = make_uniform(1.0, 2.0)
env = Environment(d, N=2, alpha=2.0)

rep = solve(env)
print(f"regime            : {rep.regime}")
print(f"start cutoffs     : {np.round(rep.menu.start_cutoffs, 6)}")
print(f"principal payoff  : {rep.V_star:.10f}   (always-working gives {rep.V_aw})")
print(f"top-type rent u1* : {rep.u1_star:.10f}")

# Once the agent has worked, the cutoff is the top cost: every started
# history keeps working.  Leaf payments follow from the cutoffs alone.
mech = rep.mechanism
for mask in range(4):
    leaf = WorkHistory(2, mask)
    print(f"  path {leaf}: pays {mech.payments[mask]:.6f}")

# The agent who shirked in period 1 and faces the top cost in period 2 gets
# exactly nothing: this is the participation constraint that pins u1*.
ir = check_interim_ir(mech)
print(f"min interim slack : {ir.min_slack:.2e} at period {ir.worst_node.t}, history '{ir.worst_node.w_prev}'")

p_start, cond = payoff_by_start_period(mech, env)
for t, (p, v) in enumerate(zip(p_start, cond), start=1):
    label = str(t) if t <= env.N else "never"
    print(f"  start {label:>5}: prob {p:.4f}, principal payoff {v:+.4f}")

# A structure-free grid search over all three cutoffs lands on the same menu.
prof, v_grid, step = brute_force(env, grid_points=201, refine_rounds=3)
print(f"grid oracle       : V = {v_grid:.6f}, cutoffs {prof.to_mapping()} (step {step:.1e})")
