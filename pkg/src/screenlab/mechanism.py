"""Pay-at-the-end threshold mechanisms on the work/shirk tree.

Nodes are stored flat: the node that decides period ``t`` after history
``w`` (length ``t - 1``) lives at ``2**(t-1) - 1 + mask(w)``.  Leaves (complete
histories of length ``N``) are indexed by their mask.

Continuation values ``K`` drive everything agent-side.  For a history ``w`` of
length ``s``, ``K(w) = E[p_N - sum_{i > s} theta_i x_i | w]`` under truthful
play, so the interim utility at the node deciding period ``t`` with cost
``theta`` is ``K(w+1) - theta`` when working and ``K(w+0)`` when shirking.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .dist import CostDistribution
from .history import (
    MissingThresholdError,
    WorkHistory,
    histories_of_length,
    leaf_probabilities,
    node_count,
    node_index,
)

__all__ = [
    "SLACK_TOL",
    "ThresholdProfile",
    "Environment",
    "Mechanism",
    "NodeState",
    "IRReport",
    "BackloadResult",
    "InterimSchedule",
    "StaleRentError",
    "LimitedLiabilityError",
    "surplus_terms",
    "reachable_nodes",
    "u1_star",
    "u1_star_variants",
    "final_payment",
    "principal_payoff",
    "payoff_batch",
    "agent_interim_utility",
    "check_interim_ir",
    "deviation_value",
    "backload",
    "continuation_stats",
    "continuation_values",
    "expected_work",
    "payoff_by_start_period",
]

SLACK_TOL = 1e-9


class StaleRentError(RuntimeError):
    """Cached top-type rent disagrees with the value implied by the cutoffs."""


class LimitedLiabilityError(ValueError):
    pass


# --------------------------------------------------------------------------
# profiles and environments


@dataclass(frozen=True, eq=False)
class ThresholdProfile:
    """One cutoff per decision node, ``2**N - 1`` values in flat node order."""

    N: int
    cutoffs: np.ndarray

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"horizon must be >= 1, got {self.N}")
        arr = np.array(self.cutoffs, dtype=float).reshape(-1)
        if arr.size != node_count(self.N):
            raise MissingThresholdError(
                f"{self.N}-period profile needs {node_count(self.N)} cutoffs, got {arr.size}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("cutoffs must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "cutoffs", arr)

    @classmethod
    def constant(cls, N: int, c: float) -> "ThresholdProfile":
        return cls(N, np.full(node_count(N), float(c)))

    @classmethod
    def from_mapping(cls, N: int, mapping: Mapping) -> "ThresholdProfile":
        """Build from ``{history: cutoff}`` with bit-string or ``WorkHistory`` keys."""
        arr = np.full(node_count(N), np.nan)
        for key, c in mapping.items():
            w = key if isinstance(key, WorkHistory) else WorkHistory.from_bits(str(key))
            if w.length >= N:
                raise ValueError(f"history {str(w)!r} has no decision node in an {N}-period tree")
            arr[node_index(w)] = float(c)
        missing = np.flatnonzero(np.isnan(arr))
        if missing.size:
            w = _node_history(int(missing[0]))
            raise MissingThresholdError(f"no cutoff for node {str(w)!r} (period {w.length + 1})")
        return cls(N, arr)

    @classmethod
    def consecutive(cls, start_cutoffs: Iterable[float], hi: float) -> "ThresholdProfile":
        """Cutoff ``start_cutoffs[t-1]`` on the all-shirk chain, ``hi`` once work has started."""
        starts = [float(c) for c in start_cutoffs]
        N = len(starts)
        arr = np.full(node_count(N), float(hi))
        for t in range(N):
            arr[node_index(WorkHistory.zeros(t))] = starts[t]
        return cls(N, arr)

    def cutoff(self, w: WorkHistory) -> float:
        if w.length >= self.N:
            raise MissingThresholdError(f"no decision node at history {str(w)!r} in an {self.N}-period tree")
        return float(self.cutoffs[node_index(w)])

    def with_cutoff(self, w: WorkHistory, c: float) -> "ThresholdProfile":
        arr = self.cutoffs.copy()
        arr[node_index(w)] = float(c)
        return ThresholdProfile(self.N, arr)

    def start_cutoffs(self) -> np.ndarray:
        return np.array([self.cutoffs[node_index(WorkHistory.zeros(t))] for t in range(self.N)])

    def nodes(self) -> Iterable[WorkHistory]:
        for t in range(self.N):
            yield from histories_of_length(t)

    def to_mapping(self) -> dict[str, float]:
        return {str(w): float(self.cutoffs[node_index(w)]) for w in self.nodes()}

    def check_support(self, d: CostDistribution) -> None:
        bad = np.flatnonzero((self.cutoffs < d.lo) | (self.cutoffs > d.hi))
        if bad.size:
            w = _node_history(int(bad[0]))
            raise ValueError(
                f"cutoff {self.cutoffs[bad[0]]!r} at node {str(w)!r} outside support [{d.lo}, {d.hi}]"
            )

    def __eq__(self, other):
        return (
            isinstance(other, ThresholdProfile)
            and self.N == other.N
            and np.array_equal(self.cutoffs, other.cutoffs)
        )

    def __repr__(self):
        return f"ThresholdProfile(N={self.N}, cutoffs={self.to_mapping()})"


def _node_history(idx: int) -> WorkHistory:
    t = (idx + 1).bit_length() - 1
    return WorkHistory(t, idx - ((1 << t) - 1))


@dataclass(frozen=True)
class Environment:
    d: CostDistribution
    N: int
    alpha: float

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"horizon must be >= 1, got {self.N}")
        if self.alpha < self.d.lo:
            raise ValueError(f"alpha={self.alpha} below the lowest cost {self.d.lo}")

    @property
    def efficient_regime(self) -> bool:
        return self.alpha >= self.d.hi

    def with_alpha(self, alpha: float) -> "Environment":
        return Environment(self.d, self.N, alpha)


@dataclass(frozen=True)
class NodeState:
    t: int
    w_prev: WorkHistory
    theta: float

    def __post_init__(self):
        if self.w_prev.length != self.t - 1:
            raise ValueError(f"period {self.t} needs a history of length {self.t - 1}, got {self.w_prev}")


# --------------------------------------------------------------------------
# batch kernels; every array carries leading batch axes and a trailing node/leaf axis


def _accruals(cutoffs: np.ndarray, d: CostDistribution, N: int):
    """Accrued surplus at every node and leaf.

    ``acc(w) = sum_{i<=|w|} x_i c_i(w_{i-1}) - sum_{i=2}^{|w|} I(c_i(w_{i-1}))``.
    Returns ``(node_surplus, leaf_acc, reachable)``.  ``node_surplus`` is the
    rent minimisation target at each node, ``acc(w) - I(c_{|w|+1}(w))`` (no
    integral term in the first period), set to ``+inf`` at nodes that no
    sequence of reports can reach: shirking is impossible under cutoff ``hi``.
    """
    Ic = np.asarray(d.I(cutoffs), dtype=float)
    batch = cutoffs.shape[:-1]
    surplus = np.empty(cutoffs.shape)
    acc = np.zeros(batch + (1,))
    reach = np.ones(batch + (1,), dtype=bool)
    node_reach = np.empty(cutoffs.shape, dtype=bool)
    for t in range(N):
        sl = slice((1 << t) - 1, (1 << (t + 1)) - 1)
        c = cutoffs[..., sl]
        rent = Ic[..., sl] if t >= 1 else np.zeros_like(c)
        node_reach[..., sl] = reach
        surplus[..., sl] = np.where(reach, acc - rent, np.inf)
        nxt = np.empty(batch + (1 << (t + 1),))
        nxt[..., 0::2] = acc - rent
        nxt[..., 1::2] = acc - rent + c
        nreach = np.empty(batch + (1 << (t + 1),), dtype=bool)
        nreach[..., 0::2] = reach & (c < d.hi)
        nreach[..., 1::2] = reach
        acc, reach = nxt, nreach
    return surplus, acc, node_reach


def surplus_terms(profile: ThresholdProfile, d: CostDistribution) -> np.ndarray:
    surplus, _, _ = _accruals(profile.cutoffs, d, profile.N)
    return surplus


def _reachable_leaves(profile: ThresholdProfile, d: CostDistribution) -> np.ndarray:
    node_reach = _accruals(profile.cutoffs, d, profile.N)[2]
    N = profile.N
    last = slice((1 << (N - 1)) - 1, (1 << N) - 1)
    leaves = np.empty(1 << N, dtype=bool)
    leaves[0::2] = node_reach[last] & (profile.cutoffs[last] < d.hi)
    leaves[1::2] = node_reach[last]
    return leaves


def reachable_nodes(profile: ThresholdProfile, d: CostDistribution) -> np.ndarray:
    """Boolean mask over flat nodes: can some report sequence lead there?"""
    return _accruals(profile.cutoffs, d, profile.N)[2]


def _leaf_work_counts(N: int) -> np.ndarray:
    return np.array([bin(m).count("1") for m in range(1 << N)], dtype=float)


def payoff_batch(cutoffs: np.ndarray, d: CostDistribution, N: int, alpha: float) -> np.ndarray:
    """Exact principal payoff for a batch of profiles under the revenue-equivalent payment."""
    cutoffs = np.asarray(cutoffs, dtype=float)
    surplus, acc, _ = _accruals(cutoffs, d, N)
    rent = -np.min(surplus, axis=-1, keepdims=True)
    probs = leaf_probabilities(cutoffs, d, N)
    value = alpha * _leaf_work_counts(N) - (acc + rent)
    return np.sum(probs * value, axis=-1)


def u1_star(profile: ThresholdProfile, d: CostDistribution) -> tuple[float, list[WorkHistory]]:
    """Minimal top-type rent making every interim IR hold, and the nodes attaining it."""
    surplus = surplus_terms(profile, d)
    lowest = float(np.min(surplus))
    argmin = [_node_history(int(i)) for i in np.flatnonzero(surplus == lowest)]
    return -lowest, argmin


def u1_star_variants(profile: ThresholdProfile, d: CostDistribution) -> dict[str, float]:
    """Rent over all periods versus only periods ``t <= N - 1``.

    The restricted minimum ignores the period-``N`` nodes and can come out
    smaller than the rent needed for IR at the last period.
    """
    surplus = surplus_terms(profile, d)
    upto = node_count(profile.N - 1) if profile.N > 1 else 1
    return {
        "all_periods": float(-np.min(surplus)),
        "periods_before_last": float(-np.min(surplus[:upto])),
    }


# --------------------------------------------------------------------------
# mechanism


@dataclass(frozen=True, eq=False)
class Mechanism:
    """Threshold action rules plus final payments on every leaf.

    ``rule == "revenue_equivalent"`` marks payments built from the cutoffs
    (accrued surplus plus ``u1_star``); ``"custom"`` marks arbitrary leaf
    payments, e.g. the output of :func:`backload` or a planted corruption.
    """

    profile: ThresholdProfile
    d: CostDistribution
    payments: np.ndarray
    u1_star: float
    rule: str = "revenue_equivalent"
    _K: list = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        pay = np.array(self.payments, dtype=float).reshape(-1)
        if pay.size != 1 << self.profile.N:
            raise ValueError(f"need {1 << self.profile.N} leaf payments, got {pay.size}")
        pay.setflags(write=False)
        object.__setattr__(self, "payments", pay)
        object.__setattr__(self, "_K", _continuation_levels(self.profile, self.d, pay))

    @classmethod
    def from_profile(cls, profile: ThresholdProfile, d: CostDistribution) -> "Mechanism":
        profile.check_support(d)
        surplus, acc, _ = _accruals(profile.cutoffs, d, profile.N)
        rent = float(-np.min(surplus)) + 0.0
        pay = acc + rent
        # Leaves no report sequence can reach keep the formula value floored at
        # zero; they carry no probability and no incentive weight.
        pay = np.where(_reachable_leaves(profile, d), pay, np.maximum(pay, 0.0))
        return cls(profile, d, pay, rent)

    @property
    def N(self) -> int:
        return self.profile.N

    def verify_rent(self) -> None:
        """Recompute the rent and payments from the cutoffs; mismatch is fatal."""
        if self.rule != "revenue_equivalent":
            return
        fresh = Mechanism.from_profile(self.profile, self.d)
        if fresh.u1_star != self.u1_star or not np.array_equal(fresh.payments, self.payments):
            raise StaleRentError(
                f"cached u1_star={self.u1_star!r} but cutoffs imply {fresh.u1_star!r}"
            )

    def with_profile(self, profile: ThresholdProfile) -> "Mechanism":
        return Mechanism.from_profile(profile, self.d)

    def with_payments(self, payments) -> "Mechanism":
        return Mechanism(self.profile, self.d, payments, self.top_type_rent(payments), rule="custom")

    def top_type_rent(self, payments=None) -> float:
        """Interim utility of the highest cost type in period 1."""
        K = self._K if payments is None else _continuation_levels(self.profile, self.d, np.asarray(payments))
        c = float(self.profile.cutoffs[0])
        return _truthful(K, 0, 0, c, self.d.hi)

    def K(self, w: WorkHistory) -> float:
        return float(self._K[w.length][w.mask])

    def to_dict(self) -> dict:
        out = {
            "N": self.N,
            "cutoffs": self.profile.to_mapping(),
            "u1_star": self.u1_star,
        }
        if self.rule != "revenue_equivalent":
            out["rule"] = self.rule
            out["payments"] = {str(WorkHistory(self.N, m)): float(p) for m, p in enumerate(self.payments)}
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: Mapping, d: CostDistribution) -> "Mechanism":
        profile = ThresholdProfile.from_mapping(int(data["N"]), data["cutoffs"])
        if data.get("rule", "revenue_equivalent") == "revenue_equivalent":
            mech = cls.from_profile(profile, d)
            if "u1_star" in data and float(data["u1_star"]) != mech.u1_star:
                raise StaleRentError(
                    f"serialized u1_star={data['u1_star']!r} but cutoffs imply {mech.u1_star!r}"
                )
            return mech
        pay = np.empty(1 << profile.N)
        for key, p in data["payments"].items():
            pay[WorkHistory.from_bits(key).mask] = float(p)
        return cls(profile, d, pay, float(data["u1_star"]), rule=str(data["rule"]))

    @classmethod
    def from_json(cls, text: str, d: CostDistribution) -> "Mechanism":
        return cls.from_dict(json.loads(text), d)


def _continuation_levels(profile: ThresholdProfile, d: CostDistribution, payments: np.ndarray) -> list:
    """``K`` at every history, one array per length ``0..N``."""
    N = profile.N
    levels = [None] * (N + 1)
    levels[N] = np.asarray(payments, dtype=float)
    for t in range(N - 1, -1, -1):
        c = profile.cutoffs[(1 << t) - 1 : (1 << (t + 1)) - 1]
        Fc = np.asarray(d.F(c), dtype=float)
        work_cost = c * Fc - np.asarray(d.I(c), dtype=float)
        child = levels[t + 1]
        levels[t] = Fc * child[1::2] - work_cost + (1.0 - Fc) * child[0::2]
    return levels


def _truthful(K: list, depth: int, mask: int, c: float, theta: float) -> float:
    if theta <= c:
        return float(K[depth + 1][2 * mask + 1]) - theta
    return float(K[depth + 1][2 * mask])


def final_payment(mech: Mechanism, w_N: WorkHistory) -> float:
    if w_N.length != mech.N:
        raise ValueError(f"final payment needs a complete history of length {mech.N}, got {w_N}")
    return float(mech.payments[w_N.mask])


def principal_payoff(mech: Mechanism, env: Environment) -> float:
    probs = leaf_probabilities(mech.profile.cutoffs, mech.d, mech.N)
    value = env.alpha * _leaf_work_counts(mech.N) - mech.payments
    return float(np.sum(probs * value))


def expected_work(mech: Mechanism) -> float:
    probs = leaf_probabilities(mech.profile.cutoffs, mech.d, mech.N)
    return float(np.sum(probs * _leaf_work_counts(mech.N)))


def payoff_by_start_period(mech: Mechanism, env: Environment) -> tuple[np.ndarray, np.ndarray]:
    """Probability of first working in period ``t`` (index ``N`` = never) and the
    principal's expected payoff conditional on each start period."""
    N = mech.N
    probs = leaf_probabilities(mech.profile.cutoffs, mech.d, N)
    value = env.alpha * _leaf_work_counts(N) - mech.payments
    start = np.array([N - m.bit_length() if m else N for m in range(1 << N)])
    p_start = np.bincount(start, weights=probs, minlength=N + 1)
    mass = np.bincount(start, weights=probs * value, minlength=N + 1)
    cond = np.divide(mass, p_start, out=np.zeros_like(mass), where=p_start > 0)
    return p_start, cond


# --------------------------------------------------------------------------
# agent side


def agent_interim_utility(mech: Mechanism, node: NodeState) -> float:
    c = mech.profile.cutoff(node.w_prev)
    return _truthful(mech._K, node.w_prev.length, node.w_prev.mask, c, node.theta)


def deviation_value(mech: Mechanism, node: NodeState, forced_action: int | bool | None = None) -> float:
    """Utility from reporting a type on the other side of the cutoff this period
    and reporting truthfully afterwards.

    ``forced_action`` picks the action explicitly; by default it is the
    opposite of the truthful one.  When no report in the support produces that
    action (shirking under cutoff ``hi``), the truthful value is returned.
    """
    c = mech.profile.cutoff(node.w_prev)
    depth, mask = node.w_prev.length, node.w_prev.mask
    truthful_work = node.theta <= c
    action = (not truthful_work) if forced_action is None else bool(forced_action)
    if action:
        return float(mech._K[depth + 1][2 * mask + 1]) - node.theta
    if c >= mech.d.hi:
        return _truthful(mech._K, depth, mask, c, node.theta)
    return float(mech._K[depth + 1][2 * mask])


@dataclass(frozen=True)
class IRReport:
    min_slack: float
    worst_node: NodeState
    violations: list
    checked: int

    @property
    def ok(self) -> bool:
        return self.min_slack >= -SLACK_TOL

    def to_dict(self) -> dict:
        return {
            "min_slack": self.min_slack,
            "worst_period": self.worst_node.t,
            "worst_history": str(self.worst_node.w_prev),
            "worst_theta": self.worst_node.theta,
            "violations": [
                {"period": n.t, "history": str(n.w_prev), "theta": n.theta, "slack": s}
                for n, s in self.violations
            ],
            "checked": self.checked,
        }


def check_interim_ir(
    mech: Mechanism,
    env: Environment | None = None,
    paranoid: bool = False,
    rng: np.random.Generator | None = None,
    n_theta: int = 64,
) -> IRReport:
    """Interim IR at the highest cost of every node (the per-branch worst case).

    With ``paranoid`` set, a random cost grid per node is checked as well.
    """
    d = mech.d
    thetas = [d.hi]
    if paranoid:
        rng = rng if rng is not None else np.random.default_rng(0)
        thetas = [d.hi, *rng.uniform(d.lo, d.hi, size=n_theta)]
    worst = (math.inf, None)
    violations = []
    checked = 0
    reach = reachable_nodes(mech.profile, d)
    for w in mech.profile.nodes():
        if not reach[node_index(w)]:
            continue
        c = mech.profile.cutoff(w)
        for theta in thetas:
            s = _truthful(mech._K, w.length, w.mask, c, float(theta))
            node = NodeState(w.length + 1, w, float(theta))
            checked += 1
            if s < worst[0]:
                worst = (s, node)
            if s < -SLACK_TOL:
                violations.append((node, s))
    return IRReport(worst[0], worst[1], violations, checked)


# --------------------------------------------------------------------------
# backloading


@dataclass(frozen=True, eq=False)
class InterimSchedule:
    """Per-period payments ``p_t(w_t)``: ``payments[t-1][mask]`` for histories of length ``t``."""

    N: int
    payments: tuple

    def __post_init__(self):
        if len(self.payments) != self.N:
            raise ValueError(f"need payments for {self.N} periods, got {len(self.payments)}")
        arrs = []
        for t, p in enumerate(self.payments, start=1):
            a = np.array(p, dtype=float).reshape(-1)
            if a.size != 1 << t:
                raise ValueError(f"period {t} needs {1 << t} payments, got {a.size}")
            a.setflags(write=False)
            arrs.append(a)
        object.__setattr__(self, "payments", tuple(arrs))

    @classmethod
    def zeros(cls, N: int) -> "InterimSchedule":
        return cls(N, tuple(np.zeros(1 << t) for t in range(1, N + 1)))

    @classmethod
    def pay_at_end(cls, mech: Mechanism) -> "InterimSchedule":
        pays = [np.zeros(1 << t) for t in range(1, mech.N)] + [mech.payments]
        return cls(mech.N, tuple(pays))

    def path_totals(self) -> np.ndarray:
        total = np.zeros(1 << self.N)
        for t, p in enumerate(self.payments, start=1):
            total += np.repeat(p, 1 << (self.N - t))
        return total

    def min_payment(self) -> float:
        return min(float(np.min(p)) for p in self.payments)

    def principal_payoff(self, profile: ThresholdProfile, d: CostDistribution, alpha: float) -> float:
        probs = leaf_probabilities(profile.cutoffs, d, self.N)
        value = alpha * _leaf_work_counts(self.N) - self.path_totals()
        return float(np.sum(probs * value))

    def ir_slacks(self, profile: ThresholdProfile, d: CostDistribution) -> np.ndarray:
        """Interim utility at the highest cost of each node, counting only
        current and future payments (past ones were already received)."""
        N = self.N
        future = [None] * (N + 1)
        future[N] = np.zeros(1 << N)
        slacks = np.empty(node_count(N))
        for t in range(N - 1, -1, -1):
            c = profile.cutoffs[(1 << t) - 1 : (1 << (t + 1)) - 1]
            Fc = np.asarray(d.F(c), dtype=float)
            work_cost = c * Fc - np.asarray(d.I(c), dtype=float)
            pay = self.payments[t]
            branch = pay + future[t + 1]
            k1, k0 = branch[1::2], branch[0::2]
            future[t] = Fc * k1 - work_cost + (1.0 - Fc) * k0
            slacks[(1 << t) - 1 : (1 << (t + 1)) - 1] = np.where(d.hi <= c, k1 - d.hi, k0)
        slacks[~reachable_nodes(profile, d)] = np.inf
        return slacks


@dataclass(frozen=True)
class BackloadResult:
    mechanism: Mechanism
    min_slack_before: float
    min_slack_after: float

    @property
    def slack_gain(self) -> float:
        return self.min_slack_after - self.min_slack_before


def backload(schedule: InterimSchedule, profile: ThresholdProfile, d: CostDistribution) -> BackloadResult:
    """Defer every interim payment to the final period along each path."""
    if schedule.N != profile.N:
        raise ValueError("schedule and profile horizons differ")
    for t, p in enumerate(schedule.payments, start=1):
        neg = np.flatnonzero(p < 0)
        if neg.size:
            w = WorkHistory(t, int(neg[0]))
            raise LimitedLiabilityError(f"negative payment {p[neg[0]]!r} at history {str(w)!r}")
    totals = schedule.path_totals()
    before = float(np.min(schedule.ir_slacks(profile, d)))
    deferred = InterimSchedule(profile.N, tuple([np.zeros(1 << t) for t in range(1, profile.N)] + [totals]))
    after = float(np.min(deferred.ir_slacks(profile, d)))
    base = Mechanism(profile, d, totals, 0.0, rule="custom")
    mech = Mechanism(profile, d, totals, base.top_type_rent(), rule="custom")
    return BackloadResult(mech, before, after)


# --------------------------------------------------------------------------
# continuation statistics


def continuation_values(mech: Mechanism) -> list:
    return [np.array(level) for level in mech._K]


def continuation_stats(mech: Mechanism, env: Environment, w: WorkHistory) -> tuple[float, float, float]:
    """Expected future work ``T``, the future payment burden ``P`` and ``V = alpha T - P``.

    ``P`` is the expected final payment net of what the history ``w`` has
    already accrued, so for revenue-equivalent payments it equals the expected
    future accrual plus ``u1_star``.
    """
    N, d = mech.N, mech.d
    if w.length > N:
        raise ValueError(f"history {w} longer than horizon {N}")
    sub_t = N - w.length
    # enumerate the subtree below w
    T = 0.0
    pay = 0.0
    for tail in range(1 << sub_t):
        leaf = WorkHistory(N, (w.mask << sub_t) | tail)
        prob = 1.0
        for k in range(w.length, N):
            node = leaf.prefix(k)
            Fc = float(d.F(mech.profile.cutoff(node)))
            prob *= Fc if leaf.bits[k] else 1.0 - Fc
        if prob == 0.0:
            continue
        T += prob * (leaf.n_work - w.n_work)
        pay += prob * float(mech.payments[leaf.mask])
    P = pay - _accrued(mech.profile, d, w)
    return T, P, env.alpha * T - P


def _accrued(profile: ThresholdProfile, d: CostDistribution, w: WorkHistory) -> float:
    acc = 0.0
    for k, x in enumerate(w.bits):
        c = profile.cutoff(w.prefix(k))
        if k >= 1:
            acc -= float(d.I(c))
        if x:
            acc += c
    return acc
