"""How the optimal mechanism changes with the value of work.

For small alpha the principal screens with a consecutive-working menu; past
a switch point it simply asks for work in every period.  The sweep below is
the data behind a payoff-versus-alpha plot, written to sweep_n2.csv.
"""

from pathlib import Path

import numpy as np

from screenlab import Environment, find_alpha_hat, make_uniform, solve, sweep_alpha
from screenlab.solver import interior_at_thetabar, sweep_to_csv

d = make_uniform(1.0, 2.0)

for N in (2, 3, 4):
    chk = interior_at_thetabar(d, N)
    res = find_alpha_hat(d, N)
    print(
        f"N={N}: menu beats always-working at alpha=hi: {chk.interior} "
        f"(gap {chk.menu_gap:+.4f}); switch point {res.alpha_hat:.8f}"
    )

# N=2: the interior branch runs continuously into the corner c1 = hi.
rows = sweep_alpha(d, 2, np.linspace(2.0, 3.0, 21))
for r in rows[::4]:
    print(f"  alpha {r['alpha']:.2f}  {r['regime']:<16} V* {r['V_star']:.5f}  c1 {r['c1']:.4f}")

out = Path("sweep_n2.csv")
out.write_text(sweep_to_csv(sweep_alpha(d, 2, np.linspace(2.0, 6.0, 81)), 2))
print(f"wrote {out}")

# Envelope check: the slope of V* is the expected number of working periods.
alpha, h = 2.1, 1e-4
slope = (solve(Environment(d, 2, alpha + h)).V_star - solve(Environment(d, 2, alpha - h)).V_star) / (2 * h)
print(f"dV*/dalpha at {alpha}: {slope:.6f} vs expected work {solve(Environment(d, 2, alpha)).expected_work:.6f}")
