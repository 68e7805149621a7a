"""Randomised first-period recommendations that beat the best deterministic menu.

Starting from an interior consecutive menu with first cutoff ``c1`` and the
static second-best cutoff ``x_sb = G^{-1}(alpha) < c1``, types in
``[x_sb, c1]`` are told to work with probability ``1 - eps`` only.  On the
work branch they receive zero surplus; on the rare shirk branch they are
promised the whole envelope rent divided by ``eps`` and then work in every
remaining period.  Types below ``x_sb`` always work and types above ``c1``
follow the base menu.

The gain over the base menu is ``eps * (H(c1) - H(x_sb))`` with
``H(theta) = F(theta) (theta - alpha)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from ._numerics import adaptive_simpson
from .dist import check_assumption1, virtual_cost_inverse
from .history import WorkHistory
from .mechanism import Environment, Mechanism, check_interim_ir, principal_payoff
from .solver import Regime, SolveReport

__all__ = [
    "InapplicableError",
    "StochasticMechanism",
    "StochasticCheck",
    "build_improvement",
    "epsilon_bound",
    "improvement_delta",
    "stochastic_payoff",
    "verify_stochastic",
    "split_promise",
    "improvement_report",
]

QUAD_TOL = 1e-13


class InapplicableError(ValueError):
    """The base mechanism admits no improvement of this form."""


def split_promise(q: float, rent: float) -> tuple[float, float]:
    """Implement an expected rent under a randomised recommendation.

    With work recommended with probability ``q``, the cheapest way to deliver
    ``rent`` leaves the work branch with zero surplus and pays the shirk branch
    ``rent / (1 - q)``.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {q}")
    if rent < 0:
        raise ValueError(f"rent must be nonnegative, got {rent}")
    if q == 1.0:
        if rent > 0:
            raise ZeroDivisionError("a positive rent cannot be carried by a shirk branch of probability zero")
        return 0.0, 0.0
    return 0.0, rent / (1.0 - q)


def epsilon_bound(report: SolveReport, env: Environment) -> float:
    d = env.d
    return report.u1_star / (d.hi - d.mean)


@dataclass(frozen=True)
class StochasticMechanism:
    base: SolveReport
    env: Environment
    epsilon: float
    x_sb: float
    c1: float
    u1_star: float

    @property
    def N(self) -> int:
        return self.env.N

    @property
    def base_mechanism(self) -> Mechanism:
        return self.base.mechanism

    def q1(self, theta):
        """Probability that period 1 recommends work."""
        theta = np.asarray(theta, dtype=float)
        out = np.where(theta < self.x_sb, 1.0, np.where(theta <= self.c1, 1.0 - self.epsilon, 0.0))
        return out[()]

    def rent(self, theta: float) -> float:
        """Envelope rent ``int_theta^hi q1``."""
        eps, x, c = self.epsilon, self.x_sb, self.c1
        if theta < x:
            return (x - theta) + (1.0 - eps) * (c - x)
        if theta <= c:
            return (1.0 - eps) * (c - theta)
        return 0.0

    def future_cost(self, periods: int) -> float:
        return periods * self.env.d.mean

    def payment_low(self, theta1: float) -> float:
        """Types below ``x_sb``: always work, paid cost plus total envelope rent."""
        return theta1 + self.rent(theta1) + self.u1_star + self.future_cost(self.N - 1)

    def payment_work(self, theta1: float) -> float:
        """Middle types, work branch: zero surplus."""
        return theta1 + self.future_cost(self.N - 1)

    def payment_shirk(self, theta1: float) -> float:
        """Middle types, shirk branch: whole rent scaled up by ``1/eps``."""
        _, extra = split_promise(1.0 - self.epsilon, self.u1_star + self.rent(theta1))
        return extra + self.future_cost(self.N - 1)

    def utility(self, theta1: float) -> float:
        """Period-1 interim utility of a type ``theta1`` following recommendations."""
        E_rest = self.future_cost(self.N - 1)
        if theta1 < self.x_sb:
            return self.payment_low(theta1) - theta1 - E_rest
        if theta1 <= self.c1:
            eps = self.epsilon
            work = self.payment_work(theta1) - theta1 - E_rest
            shirk = self.payment_shirk(theta1) - E_rest
            return (1.0 - eps) * work + eps * shirk
        return self.base_mechanism.K(WorkHistory.from_bits("0"))

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "x_sb": self.x_sb,
            "c1": self.c1,
            "u1_star": self.u1_star,
            "N": self.N,
            "alpha": self.env.alpha,
        }


def build_improvement(report: SolveReport, env: Environment, epsilon: float, check_range: bool = True) -> StochasticMechanism:
    """Construct the randomised improvement of an interior consecutive menu.

    ``check_range=False`` admits ``epsilon`` above its bound; this is only
    meant for probing where the ex-post constraints start to fail.
    """
    d = env.d
    if report.regime != Regime.ConsecutiveMenu or report.menu is None:
        raise InapplicableError("the base mechanism is always-working; there is no first-period cutoff to randomise")
    if not check_assumption1(d):
        raise InapplicableError("the construction needs lo + E >= hi so the work branch stays individually rational")
    x_sb = virtual_cost_inverse(d, env.alpha)
    c1 = report.menu.start_cutoffs[0]
    if not x_sb < c1:
        raise InapplicableError(f"x_sb={x_sb!r} is not below c1={c1!r}; the randomisation has nothing to gain")
    bound = epsilon_bound(report, env)
    if not epsilon > 0 or (check_range and epsilon > bound):
        raise ValueError(f"epsilon={epsilon!r} outside (0, {bound!r}]")
    if epsilon >= 1:
        raise ValueError("epsilon must stay below 1")
    return StochasticMechanism(report, env, float(epsilon), float(x_sb), float(c1), float(report.u1_star))


def improvement_delta(report: SolveReport, env: Environment, epsilon: float) -> float:
    d, alpha = env.d, env.alpha
    x_sb = virtual_cost_inverse(d, alpha)
    c1 = report.menu.start_cutoffs[0]

    def H(theta):
        return float(d.F(theta)) * (theta - alpha)

    return epsilon * (H(c1) - H(x_sb))


def _after_shirk_payoff(mech: Mechanism, env: Environment) -> float:
    """Base principal payoff conditional on shirking in period 1."""
    N, d = mech.N, mech.d
    total, mass = 0.0, 0.0
    for tail in range(1 << (N - 1)):
        leaf = WorkHistory(N, tail)  # leading bit 0
        prob = 1.0
        for k in range(1, N):
            c = mech.profile.cutoff(leaf.prefix(k))
            Fc = float(d.F(c))
            prob *= Fc if leaf.bits[k] else 1.0 - Fc
        total += prob * (env.alpha * leaf.n_work - float(mech.payments[leaf.mask]))
        mass += prob
    return total / mass


def stochastic_payoff(sm: StochasticMechanism) -> float:
    """Exact principal payoff, integrating over the three first-period segments."""
    env, d = sm.env, sm.env.d
    N, alpha, eps = sm.N, env.alpha, sm.epsilon
    f = d.f

    def low(theta):
        return float(f(theta)) * (alpha * N - sm.payment_low(theta))

    def middle(theta):
        work = alpha * N - sm.payment_work(theta)
        shirk = alpha * (N - 1) - sm.payment_shirk(theta)
        return float(f(theta)) * ((1.0 - eps) * work + eps * shirk)

    seg_low = adaptive_simpson(low, d.lo, sm.x_sb, tol=QUAD_TOL)
    seg_mid = adaptive_simpson(middle, sm.x_sb, sm.c1, tol=QUAD_TOL)
    seg_high = (1.0 - float(d.F(sm.c1))) * _after_shirk_payoff(sm.base_mechanism, env)
    return seg_low + seg_mid + seg_high


@dataclass(frozen=True)
class StochasticCheck:
    min_slack: float
    worst: str
    envelope_error: float
    q_monotone: bool
    slacks: dict

    @property
    def ok(self) -> bool:
        return self.min_slack >= -1e-9 and self.envelope_error <= 1e-9 and self.q_monotone

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "min_slack": self.min_slack,
            "worst": self.worst,
            "envelope_error": self.envelope_error,
            "q_monotone": self.q_monotone,
            "slacks": self.slacks,
        }


def verify_stochastic(sm: StochasticMechanism, n_grid: int = 257) -> StochasticCheck:
    """Check the ex-post participation constraints after the period-1 draw.

    After the randomisation resolves, the agent must still want to continue:
    period-1 utility on each branch is nonnegative, and from period 2 on the
    worst case is a cost of ``hi`` now and average costs afterwards (the
    period-1 cost is sunk by then).  Period 2 binds, since later periods face
    smaller remaining costs against the same final payment.
    The period-1 envelope identity ``u1(theta) = u1* + int_theta^hi q1`` and
    the monotonicity of ``q1`` are checked on a grid.
    """
    d = sm.env.d
    N = sm.N
    E = d.mean
    E_rest = sm.future_cost(N - 1)
    slacks: dict[str, float] = {}

    def record(key, value):
        slacks[key] = min(slacks.get(key, math.inf), float(value))

    low = np.linspace(d.lo, sm.x_sb, n_grid, endpoint=False)
    mid = np.linspace(sm.x_sb, sm.c1, n_grid)
    high = np.linspace(sm.c1, d.hi, n_grid)[1:]
    env_err = 0.0
    for th in low:
        p = sm.payment_low(th)
        record("low.period1", p - th - E_rest)
        if N >= 2:
            record("low.period2", p - d.hi - (N - 2) * E)
        env_err = max(env_err, abs(sm.utility(th) - (sm.u1_star + sm.rent(th))))
    for th in mid:
        pw, ps = sm.payment_work(th), sm.payment_shirk(th)
        record("work.period1", pw - th - E_rest)
        record("shirk.period1", ps - E_rest)
        if N >= 2:
            record("work.period2", pw - d.hi - (N - 2) * E)
            record("shirk.period2", ps - d.hi - (N - 2) * E)
        env_err = max(env_err, abs(sm.utility(th) - (sm.u1_star + sm.rent(th))))
    for th in high:
        env_err = max(env_err, abs(sm.utility(th) - (sm.u1_star + sm.rent(th))))
    record("period1.top", sm.utility(d.hi))
    base_ir = check_interim_ir(sm.base_mechanism)
    record("base.after_shirk", base_ir.min_slack)
    grid = np.linspace(d.lo, d.hi, 4 * n_grid)
    q = sm.q1(grid)
    monotone = bool(np.all(np.diff(q) <= 0))
    worst = min(slacks, key=slacks.get)
    return StochasticCheck(slacks[worst], worst, env_err, monotone, slacks)


def improvement_report(sm: StochasticMechanism, check: StochasticCheck | None = None) -> dict:
    check = check or verify_stochastic(sm)
    stoch_v = stochastic_payoff(sm)
    base_v = principal_payoff(sm.base_mechanism, sm.env)
    return {
        "epsilon": sm.epsilon,
        "x_sb": sm.x_sb,
        "delta": improvement_delta(sm.base, sm.env, sm.epsilon),
        "slack_min": check.min_slack,
        "base_V": base_v,
        "stochastic_V": stoch_v,
    }


def improvement_json(sm: StochasticMechanism, **kw) -> str:
    return json.dumps(improvement_report(sm), **kw)
