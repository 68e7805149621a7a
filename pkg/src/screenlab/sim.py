"""Monte Carlo runs of threshold mechanisms and behavioural constraint searches.

Cost paths come from counter-based Philox streams: block ``k`` of
``BLOCK_SIZE`` paths is drawn from a generator keyed by ``(seed, k)``, so the
output does not depend on how many threads process the blocks or in which
order they finish.  Per-path results are concatenated in block order before
any reduction.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .history import WorkHistory, node_index
from .mechanism import (
    Environment,
    Mechanism,
    NodeState,
    agent_interim_utility,
    deviation_value,
    reachable_nodes,
)
from .stochastic import StochasticMechanism

__all__ = [
    "BLOCK_SIZE",
    "SimConfig",
    "SimResult",
    "DeviationReport",
    "QuitReport",
    "draw_uniforms",
    "simulate",
    "simulate_stochastic",
    "deviation_search",
    "quit_search",
    "thread_count",
]

BLOCK_SIZE = 1 << 16
QUANTILES = (0.0, 0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99, 1.0)


def thread_count(default: int | None = None) -> int:
    env = os.environ.get("SCREENLAB_THREADS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError(f"SCREENLAB_THREADS must be >= 1, got {env!r}")
        return n
    return default or os.cpu_count() or 1


@dataclass(frozen=True)
class SimConfig:
    n_paths: int = 100_000
    seed: int = 0
    deviation_nodes: int = 200
    theta_grid: int = 16
    threads: int | None = None
    dump_paths: bool = False

    def __post_init__(self):
        if self.n_paths < 1:
            raise ValueError(f"n_paths must be >= 1, got {self.n_paths}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.deviation_nodes < 0 or self.theta_grid < 0:
            raise ValueError("search sizes must be nonnegative")


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))


def draw_uniforms(cfg: SimConfig, width: int) -> np.ndarray:
    """``(n_paths, width)`` uniforms, reproducible block by block."""
    n_blocks = -(-cfg.n_paths // BLOCK_SIZE)

    def block(k):
        m = min(BLOCK_SIZE, cfg.n_paths - k * BLOCK_SIZE)
        return _block_rng(cfg.seed, k).random((m, width))

    workers = min(cfg.threads or thread_count(), n_blocks)
    if workers <= 1:
        parts = [block(k) for k in range(n_blocks)]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(block, range(n_blocks)))
    return np.concatenate(parts, axis=0)


def _mean_stderr(x: np.ndarray) -> tuple[float, float]:
    n = x.size
    mean = float(np.sum(x) / n)
    if n < 2:
        return mean, 0.0
    var = float(np.sum((x - mean) ** 2) / (n - 1))
    return mean, math.sqrt(var / n)


@dataclass
class SimResult:
    n_paths: int
    seed: int
    principal_mean: float
    principal_stderr: float
    agent_mean: float
    agent_stderr: float
    start_frequency: dict
    expost_quantiles: dict
    expost_negative_mass: float
    max_ic_violation: float
    min_interim_utility: float
    extra: dict = field(default_factory=dict)
    paths: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {
            "n_paths": self.n_paths,
            "seed": self.seed,
            "principal_payoff": {"mean": self.principal_mean, "stderr": self.principal_stderr},
            "agent_payoff": {"mean": self.agent_mean, "stderr": self.agent_stderr},
            "start_frequency": self.start_frequency,
            "expost_agent_quantiles": self.expost_quantiles,
            "expost_negative_mass": self.expost_negative_mass,
            "max_ic_violation": self.max_ic_violation,
            "min_interim_utility": self.min_interim_utility,
        }
        out.update(self.extra)
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def paths_csv(self) -> str:
        if self.paths is None:
            raise ValueError("paths were not kept; set dump_paths in the config")
        lines = ["path,leaf_mask,principal,agent"]
        for i, (mask, prin, agent) in enumerate(self.paths):
            lines.append(f"{i},{int(mask)},{float(prin)!r},{float(agent)!r}")
        return "\n".join(lines) + "\n"


def _run_paths(mech: Mechanism, thetas: np.ndarray):
    """Apply threshold actions (ties work) and return leaf masks and cost totals."""
    n, N = thetas.shape
    mask = np.zeros(n, dtype=np.int64)
    cost = np.zeros(n)
    cut = mech.profile.cutoffs
    for t in range(N):
        c = cut[(1 << t) - 1 + mask]
        work = thetas[:, t] <= c
        cost += np.where(work, thetas[:, t], 0.0)
        mask = 2 * mask + work
    return mask, cost


def _start_histogram(mask: np.ndarray, N: int) -> dict:
    # first work period is N - bit_length(mask) + 1
    bl = np.zeros(mask.shape, dtype=np.int64)
    m = mask.copy()
    while np.any(m):
        bl += m > 0
        m >>= 1
    start = np.where(mask > 0, N - bl + 1, 0)
    counts = np.bincount(start, minlength=N + 1)
    n = mask.size
    hist = {str(t): float(counts[t] / n) for t in range(1, N + 1)}
    hist["never"] = float(counts[0] / n)
    return hist


def _summarise(agent: np.ndarray) -> tuple[dict, float]:
    qs = np.quantile(agent, QUANTILES)
    return {f"{q:g}": float(v) for q, v in zip(QUANTILES, qs)}, float(np.mean(agent < 0))


def simulate(mech: Mechanism, env: Environment, cfg: SimConfig) -> SimResult:
    d, N = env.d, env.N
    u = draw_uniforms(cfg, N)
    thetas = d.ppf(u)
    mask, cost = _run_paths(mech, thetas)
    pay = mech.payments[mask]
    work = np.array([bin(m).count("1") for m in range(1 << N)], dtype=float)[mask]
    principal = env.alpha * work - pay
    agent = pay - cost
    p_mean, p_se = _mean_stderr(principal)
    a_mean, a_se = _mean_stderr(agent)
    quant, neg = _summarise(agent)
    dev = deviation_search(mech, env, cfg)
    quit_ = quit_search(mech, env, cfg)
    return SimResult(
        n_paths=cfg.n_paths,
        seed=cfg.seed,
        principal_mean=p_mean,
        principal_stderr=p_se,
        agent_mean=a_mean,
        agent_stderr=a_se,
        start_frequency=_start_histogram(mask, N),
        expost_quantiles=quant,
        expost_negative_mass=neg,
        max_ic_violation=dev.max_violation,
        min_interim_utility=quit_.min_utility,
        paths=np.column_stack([mask, principal, agent]) if cfg.dump_paths else None,
    )


# --------------------------------------------------------------------------
# behavioural searches


@dataclass(frozen=True)
class DeviationReport:
    max_violation: float
    worst: NodeState | None
    kind: str
    checked: int

    def to_dict(self) -> dict:
        return {
            "max_violation": self.max_violation,
            "kind": self.kind,
            "period": self.worst.t if self.worst else None,
            "history": str(self.worst.w_prev) if self.worst else None,
            "theta": self.worst.theta if self.worst else None,
            "checked": self.checked,
        }


def _sample_nodes(mech: Mechanism, env: Environment, cfg: SimConfig, salt: int) -> list[NodeState]:
    """On-path nodes reached by simulated cost draws, with a fresh cost at each."""
    if cfg.deviation_nodes == 0:
        return []
    d, N = env.d, env.N
    rng = _block_rng(cfg.seed, 2**32 + salt)
    periods = rng.integers(1, N + 1, size=cfg.deviation_nodes)
    u = rng.random((cfg.deviation_nodes, N))
    thetas = d.ppf(u)
    nodes = []
    for k, t in enumerate(periods):
        w = WorkHistory.empty()
        for s in range(t - 1):
            w = w.append(thetas[k, s] <= mech.profile.cutoff(w))
        nodes.append(NodeState(int(t), w, float(thetas[k, t - 1])))
    return nodes


def _flip_gain(mech: Mechanism, w: WorkHistory) -> float:
    """Expected gain at node ``w`` from always taking the action opposite to the truthful one."""
    d = mech.d
    c = mech.profile.cutoff(w)
    K1 = mech.K(w.append(1))
    K0 = mech.K(w.append(0))
    Fc = float(d.F(c))
    pm = float(d.partial_mean(c))
    gain_low = Fc * (K0 - K1) + pm if c < d.hi else 0.0
    gain_high = (1.0 - Fc) * (K1 - K0) - (d.mean - pm)
    return gain_low + gain_high


def _reach_prob(mech: Mechanism, start: WorkHistory, end: WorkHistory) -> float:
    prob = 1.0
    d = mech.d
    for k in range(start.length, end.length):
        Fc = float(d.F(mech.profile.cutoff(end.prefix(k))))
        prob *= Fc if end.bits[k] else 1.0 - Fc
    return prob


def deviation_search(mech: Mechanism, env: Environment, cfg: SimConfig) -> DeviationReport:
    """Largest gain from misreporting, by exact continuation arithmetic.

    Checks one-shot deviations (the opposite action now, truthful later) at
    sampled on-path nodes and at every reachable node with the cost exactly at
    its cutoff, where the one-shot gain peaks.  Double deviations add a second
    lie at one later node of the deviated subtree.
    """
    d, N = env.d, env.N
    rng = _block_rng(cfg.seed, 2**33)
    nodes = _sample_nodes(mech, env, cfg, 0)
    reach = reachable_nodes(mech.profile, d)
    for t in range(N):
        for mask in range(1 << t):
            w = WorkHistory(t, mask)
            if reach[node_index(w)]:
                c = mech.profile.cutoff(w)
                nodes.append(NodeState(t + 1, w, c))
                nodes.append(NodeState(t + 1, w, float(np.nextafter(c, np.inf)) if c < d.hi else c))
    best = (0.0, None, "none")
    checked = 0
    for node in nodes:
        truthful = agent_interim_utility(mech, node)
        lie = deviation_value(mech, node)
        checked += 1
        gap = lie - truthful
        if gap > best[0]:
            best = (gap, node, "one-shot")
        # second lie somewhere below the deviated branch
        c = mech.profile.cutoff(node.w_prev)
        dev_action = not (node.theta <= c)
        if not dev_action and c >= d.hi:
            continue
        branch = node.w_prev.append(dev_action)
        if branch.length >= N:
            continue
        later_len = int(rng.integers(branch.length, N))
        tail = int(rng.integers(0, 1 << (later_len - branch.length))) if later_len > branch.length else 0
        v = WorkHistory(later_len, (branch.mask << (later_len - branch.length)) | tail)
        if not reach[node_index(v)] and v != branch:
            continue
        double = lie + _reach_prob(mech, branch, v) * _flip_gain(mech, v)
        checked += 1
        gap2 = double - truthful
        if gap2 > best[0]:
            best = (gap2, node, "double")
    return DeviationReport(float(best[0]), best[1], best[2], checked)


@dataclass(frozen=True)
class QuitReport:
    min_utility: float
    worst: NodeState | None
    checked: int

    def to_dict(self) -> dict:
        return {
            "min_utility": self.min_utility,
            "period": self.worst.t if self.worst else None,
            "history": str(self.worst.w_prev) if self.worst else None,
            "theta": self.worst.theta if self.worst else None,
            "checked": self.checked,
        }


def quit_search(mech: Mechanism, env: Environment, cfg: SimConfig) -> QuitReport:
    """Smallest interim continuation utility over sampled nodes and every
    reachable node at the highest cost."""
    d = env.d
    nodes = _sample_nodes(mech, env, cfg, 1)
    reach = reachable_nodes(mech.profile, d)
    rng = _block_rng(cfg.seed, 2**34)
    for w in mech.profile.nodes():
        if not reach[node_index(w)]:
            continue
        nodes.append(NodeState(w.length + 1, w, d.hi))
        for th in d.ppf(rng.random(cfg.theta_grid)):
            nodes.append(NodeState(w.length + 1, w, float(th)))
    best = (math.inf, None)
    for node in nodes:
        u = agent_interim_utility(mech, node)
        if u < best[0]:
            best = (u, node)
    return QuitReport(float(best[0]), best[1], len(nodes))


# --------------------------------------------------------------------------
# stochastic improvement


def simulate_stochastic(sm: StochasticMechanism, cfg: SimConfig) -> SimResult:
    """Run the randomised mechanism and its deterministic base on the same draws.

    Common random numbers make the estimated gain far less noisy than the
    difference of two independent runs.
    """
    env, d = sm.env, sm.env.d
    N, alpha = env.N, env.alpha
    base = sm.base_mechanism
    u = draw_uniforms(cfg, N + 1)
    thetas = d.ppf(u[:, :N])
    coin = u[:, N]

    mask, cost = _run_paths(base, thetas)
    work_counts = np.array([bin(m).count("1") for m in range(1 << N)], dtype=float)
    base_principal = alpha * work_counts[mask] - base.payments[mask]

    th1 = thetas[:, 0]
    low = th1 < sm.x_sb
    mid = (th1 >= sm.x_sb) & (th1 <= sm.c1)
    shirk = mid & (coin < sm.epsilon)
    rest_cost = thetas[:, 1:].sum(axis=1) if N > 1 else np.zeros(th1.shape)
    rent = np.vectorize(sm.rent, otypes=[float])(th1)
    E_rest = (N - 1) * d.mean

    pay = base.payments[mask].astype(float).copy()
    agent_cost = cost.copy()
    work = work_counts[mask].copy()
    started = low | mid
    pay = np.where(low, th1 + rent + sm.u1_star + E_rest, pay)
    pay = np.where(mid & ~shirk, th1 + E_rest, pay)
    pay = np.where(shirk, (sm.u1_star + rent) / sm.epsilon + E_rest, pay)
    agent_cost = np.where(started & ~shirk, th1 + rest_cost, agent_cost)
    agent_cost = np.where(shirk, rest_cost, agent_cost)
    work = np.where(started & ~shirk, N, work)
    work = np.where(shirk, N - 1, work)

    principal = alpha * work - pay
    agent = pay - agent_cost
    gain = principal - base_principal
    p_mean, p_se = _mean_stderr(principal)
    a_mean, a_se = _mean_stderr(agent)
    g_mean, g_se = _mean_stderr(gain)
    quant, neg = _summarise(agent)
    # start period: shirk-branch paths start in period 2
    smask = np.where(started & ~shirk, (1 << N) - 1, mask)
    smask = np.where(shirk, (1 << (N - 1)) - 1, smask)
    shirk_freq, shirk_se = _mean_stderr(shirk.astype(float))
    return SimResult(
        n_paths=cfg.n_paths,
        seed=cfg.seed,
        principal_mean=p_mean,
        principal_stderr=p_se,
        agent_mean=a_mean,
        agent_stderr=a_se,
        start_frequency=_start_histogram(smask, N),
        expost_quantiles=quant,
        expost_negative_mass=neg,
        max_ic_violation=float("nan"),
        min_interim_utility=float("nan"),
        extra={
            "gain": {"mean": g_mean, "stderr": g_se},
            "shirk_branch_frequency": {"mean": shirk_freq, "stderr": shirk_se},
            "base_principal_payoff": _mean_stderr(base_principal)[0],
        },
        paths=np.column_stack([smask, principal, agent]) if cfg.dump_paths else None,
    )
