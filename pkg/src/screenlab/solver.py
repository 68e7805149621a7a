"""Optimal mechanisms: the always-working benchmark, the consecutive menu and
the structure-free grid oracle.

The consecutive menu is parameterised by its start cutoffs ``c_t = c_t(0...0)``.
Writing ``A_t`` for the principal's payoff when work starts in period ``t`` and
``C_t`` for the expected payoff after a shirk in period ``t``,

    A_t = alpha (N - t + 1) - c_t - (N - t) E - sum_{j>t} I(c_j)
    C_N = 0,    C_{t-1} = F(c_t) A_t + (1 - F(c_t)) C_t,

the payoff is ``C_0`` and its stationarity conditions are

    P_{t-1} (A_t - C_t) = F(c_t) / f(c_t),     P_{t-1} = prod_{i<t} (1 - F(c_i)).
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from dataclasses import dataclass, field, fields
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from ._numerics import ConvergenceError, bisect, damped_newton
from .dist import CostDistribution, check_assumption1, check_assumption2, virtual_cost, virtual_cost_inverse
from .history import node_count
from .mechanism import (
    Environment,
    Mechanism,
    ThresholdProfile,
    check_interim_ir,
    expected_work,
    payoff_batch,
    principal_payoff,
)

__all__ = [
    "ConsecMenu",
    "FOCSolution",
    "Feasibility",
    "SolveReport",
    "Regime",
    "SolverRefusal",
    "BracketError",
    "SizeError",
    "always_working",
    "consec_payoff",
    "foc_residuals",
    "solve_foc_system",
    "feasibility",
    "interior_at_thetabar",
    "InteriorCheck",
    "AlphaHat",
    "solve",
    "find_alpha_hat",
    "brute_force",
    "sweep_alpha",
    "sweep_to_csv",
]

log = logging.getLogger(__name__)

DEGENERATE_TOL = 1e-8
FOC_TOL = 1e-10
LOWER_OFFSET = 1e-12
FIXED_POINT_ITERS = 200
BRUTE_FORCE_MAX_N = 3
DEFAULT_GRID = {1: 201, 2: 201, 3: 9}
BATCH_ROWS = 1 << 16


class SolverRefusal(ValueError):
    """The request lies outside the range the optimality results cover."""


class BracketError(RuntimeError):
    pass


class SizeError(ValueError):
    pass


# --------------------------------------------------------------------------
# menus and benchmarks


@dataclass(frozen=True)
class ConsecMenu:
    start_cutoffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "start_cutoffs", tuple(float(c) for c in self.start_cutoffs))
        if not self.start_cutoffs:
            raise ValueError("a menu needs at least one period")

    @property
    def N(self) -> int:
        return len(self.start_cutoffs)

    def validate(self, d: CostDistribution) -> None:
        for t, c in enumerate(self.start_cutoffs, start=1):
            if not d.lo < c <= d.hi:
                raise ValueError(f"start cutoff c_{t}={c!r} outside ({d.lo}, {d.hi}]")

    def to_profile(self, d: CostDistribution) -> ThresholdProfile:
        return ThresholdProfile.consecutive(self.start_cutoffs, d.hi)

    def mechanism(self, d: CostDistribution) -> Mechanism:
        return Mechanism.from_profile(self.to_profile(d), d)


def always_working(env: Environment) -> tuple[Mechanism, float]:
    d, N = env.d, env.N
    mech = Mechanism.from_profile(ThresholdProfile.constant(N, d.hi), d)
    v_aw = env.alpha * N - (d.hi + (N - 1) * d.mean)
    return mech, v_aw


def _consec_cutoffs(starts: np.ndarray, hi: float, N: int) -> np.ndarray:
    starts = np.asarray(starts, dtype=float)
    out = np.full(starts.shape[:-1] + (node_count(N),), hi)
    for t in range(N):
        out[..., (1 << t) - 1] = starts[..., t]
    return out


def consec_payoff(d: CostDistribution, N: int, alpha: float, starts) -> np.ndarray:
    """Exact payoff of consecutive menus; ``starts`` has shape ``(..., N)``."""
    return payoff_batch(_consec_cutoffs(starts, d.hi, N), d, N, alpha)


# --------------------------------------------------------------------------
# first-order system


def _start_terms(c: np.ndarray, d: CostDistribution, N: int, alpha: float):
    F = np.asarray(d.F(c), dtype=float)
    Ic = np.asarray(d.I(c), dtype=float)
    tail_I = np.concatenate([np.cumsum(Ic[::-1])[::-1][1:], [0.0]])
    remaining = N - np.arange(N)  # periods left when starting in period t (1-based t = index + 1)
    A = alpha * remaining - c - (remaining - 1) * d.mean - tail_I
    C = np.zeros(N)
    for t in range(N - 1, 0, -1):
        C[t - 1] = F[t] * A[t] + (1.0 - F[t]) * C[t]
    P = np.concatenate([[1.0], np.cumprod(1.0 - F)[:-1]])
    return F, A, C, P


def foc_residuals(c, d: CostDistribution, N: int, alpha: float, projected: bool = True) -> np.ndarray:
    """Stationarity residuals ``P_{t-1}(A_t - C_t) - F(c_t)/f(c_t)``.

    With ``projected`` set, a residual pushing a cutoff through the upper
    bound (or the lower bound) counts as satisfied.
    """
    c = np.asarray(c, dtype=float)
    F, A, C, P = _start_terms(c, d, N, alpha)
    r = P * (A - C) - F / np.asarray(d.f(c), dtype=float)
    if projected:
        at_hi = (c >= d.hi) & (r > 0)
        at_lo = (c <= d.lo + LOWER_OFFSET) & (r < 0)
        r = np.where(at_hi | at_lo, 0.0, r)
    return r


def _gauss_seidel(c: np.ndarray, d: CostDistribution, N: int, alpha: float, sweeps: int, omega: float = 0.7):
    """Damped coordinate fixed point: each equation is monotone in its own cutoff."""
    lo, hi = d.lo + LOWER_OFFSET, d.hi
    c = c.copy()
    for _ in range(sweeps):
        for t in range(N):
            _, A, C, P = _start_terms(c, d, N, alpha)
            # A_t depends on c_t only through the explicit -c_t term
            target = A[t] + c[t] - C[t]

            def g(x, P=P[t], target=target):
                return P * (target - x) - float(d.F(x)) / float(d.f(x))

            if g(hi) >= 0:
                new = hi
            elif g(lo) <= 0:
                new = lo
            else:
                new = bisect(g, lo, hi, xtol=1e-14)
            c[t] = c[t] + omega * (new - c[t])
    return c


@dataclass(frozen=True)
class FOCSolution:
    menu: ConsecMenu
    residual: float
    degenerate: bool
    method: str
    trace: tuple
    alternate_roots: tuple = ()


def _initial_guess(d: CostDistribution, N: int, alpha: float) -> np.ndarray:
    g_hi = float(virtual_cost(d, d.hi))
    x0 = d.hi if alpha >= g_hi else virtual_cost_inverse(d, max(alpha, float(virtual_cost(d, d.lo))))
    return np.full(N, min(max(x0, d.lo + LOWER_OFFSET), d.hi))


def _newton_then_fixed_point(x0, d, N, alpha):
    lower = np.full(N, d.lo + LOWER_OFFSET)
    upper = np.full(N, d.hi)
    step = 1e-6 * (d.hi - d.lo)

    def fn(x):
        return foc_residuals(x, d, N, alpha)

    x, res, trace, ok = damped_newton(fn, x0, lower, upper, step, tol=FOC_TOL)
    method = "newton"
    if not ok:
        log.debug("Newton stalled at residual %.3e; switching to fixed point", res)
        x = _gauss_seidel(x, d, N, alpha, FIXED_POINT_ITERS)
        x, res, trace2, ok = damped_newton(fn, x, lower, upper, step, tol=FOC_TOL)
        trace = trace + trace2
        method = "fixed-point+newton"
    return x, res, trace, ok, method


def solve_foc_system(
    env: Environment,
    extra_starts: Iterable[Sequence[float]] = (),
    multistart: int = 0,
) -> FOCSolution:
    """Solve the stationarity system of the consecutive menu.

    Newton starts from the static second-best cutoff in every period; any
    ``extra_starts`` and ``multistart`` seeded uniform draws are also tried.
    Distinct converged roots are kept in ``alternate_roots`` and the root with
    the highest exact payoff is returned.
    """
    d, N, alpha = env.d, env.N, env.alpha
    extra_starts = list(extra_starts)
    if multistart:
        rng = np.random.default_rng(0)
        extra_starts += list(rng.uniform(d.lo, d.hi, size=(multistart, N)))
    rep = check_assumption2(d, N) if N >= 2 else None
    if rep is not None and not rep.a2_g_monotone:
        warnings.warn("virtual cost is not monotone; the first-order system may have several roots")
    starts = [_initial_guess(d, N, alpha)] + [np.asarray(s, dtype=float) for s in extra_starts]
    found = []
    traces = []
    for s in starts:
        x, res, trace, ok, method = _newton_then_fixed_point(s, d, N, alpha)
        traces.extend(trace)
        if ok:
            found.append((x, res, method))
    if not found:
        raise ConvergenceError(
            f"first-order system did not converge for alpha={alpha}, N={N}; last residual {traces[-1]:.3e}",
            traces,
        )
    distinct = []
    for x, res, method in found:
        if all(np.max(np.abs(x - y)) > 1e-7 for y, _, _ in distinct):
            distinct.append((x, res, method))
    values = [float(consec_payoff(d, N, alpha, x)) for x, _, _ in distinct]
    best = int(np.argmax(values))
    x, res, method = distinct[best]
    others = tuple(tuple(float(v) for v in y) for i, (y, _, _) in enumerate(distinct) if i != best)
    if len(distinct) > 1:
        log.info("first-order system has %d distinct roots; keeping the best", len(distinct))
    degenerate = bool(x[0] >= d.hi - DEGENERATE_TOL)
    return FOCSolution(ConsecMenu(tuple(x)), float(res), degenerate, method, tuple(traces), others)


# --------------------------------------------------------------------------
# feasibility


@dataclass(frozen=True)
class Feasibility:
    feasible: bool
    margin: float
    assumption1: bool

    def to_dict(self) -> dict:
        return {"feasible": self.feasible, "margin": self.margin, "assumption1": self.assumption1}


def feasibility(menu: ConsecMenu, env: Environment) -> Feasibility:
    """IR margin of the started branches: ``min_t (c_{t+1} + sum_{i>t+1} I(c_i)) + E - hi``.

    When ``lo + E >= hi`` the margin is nonnegative for any menu with cutoffs
    above ``lo``, so feasibility follows without looking at the cutoffs; the
    margin is still computed and reported.
    """
    d, N = env.d, menu.N
    c = np.asarray(menu.start_cutoffs)
    a1 = check_assumption1(d)
    if N < 2:
        return Feasibility(True, math.inf, a1)
    Ic = np.asarray(d.I(c), dtype=float)
    tail = np.concatenate([np.cumsum(Ic[::-1])[::-1][1:], [0.0]])
    margin = float(np.min(c[: N - 1] + tail[: N - 1])) + d.mean - d.hi
    return Feasibility(a1 or margin >= -1e-12, margin, a1)


@dataclass(frozen=True)
class InteriorCheck:
    """Whether the consecutive menu strictly beats always-working at ``alpha = hi``.

    ``lemma_holds`` is the closed-form test ``1/f(hi) > rhs``, the sign of the
    first-cutoff derivative at ``hi`` with the later cutoffs held at their
    optimal values for the remaining ``N - 1`` periods.  ``menu_gap`` is the
    direct comparison ``V_cm - V_aw`` at the best root of the first-order
    system; ``interior`` reads that gap.  The two disagree when a small
    interior move pays off locally but cannot cover the rent the later start
    cutoffs create (uniform costs with ``N = 4`` is an example).
    """

    lemma_holds: bool
    lhs: float
    rhs: float
    menu_gap: float

    @property
    def interior(self) -> bool:
        return self.menu_gap > 0

    @property
    def agrees(self) -> bool:
        return self.lemma_holds == self.interior

    def to_dict(self) -> dict:
        return {
            "interior": self.interior,
            "lemma_holds": self.lemma_holds,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "menu_gap": self.menu_gap,
            "agrees": self.agrees,
        }


def interior_at_thetabar(d: CostDistribution, N: int) -> InteriorCheck:
    lhs = 1.0 / float(d.f(d.hi))
    if N == 1:
        rhs = 0.0
        tail = np.zeros(0)
    else:
        tail = np.asarray(solve_foc_system(Environment(d, N - 1, d.hi)).menu.start_cutoffs)
        F = np.asarray(d.F(tail), dtype=float)
        Ic = np.asarray(d.I(tail), dtype=float)
        gap = d.hi - d.mean
        survive = np.concatenate([[1.0], np.cumprod(1.0 - F)[:-1]])
        periods = np.arange(2, N + 1)
        bracket = F * (d.hi - tail) + Ic + F * (N - periods) * gap
        rhs = (N - 1) * gap - float(np.sum(survive * bracket))
    hints = [np.concatenate([[d.hi - 0.05 * (d.hi - d.lo)], tail])]
    menu_gap, _ = _menu_advantage(d, N, d.hi, multistart=16, hints=hints)
    return InteriorCheck(bool(lhs > rhs), lhs, float(rhs), menu_gap)


# --------------------------------------------------------------------------
# top-level solve


@dataclass
class SolveReport:
    regime: Regime
    menu: ConsecMenu | None
    u1_star: float
    V_star: float
    V_aw: float
    V_cm: float | None
    foc_residual: float | None
    feasibility: dict
    ir_min_slack: float
    expected_work: float
    alpha: float
    N: int
    degenerate: bool = False
    degraded: bool = False
    alternate_roots: tuple = ()
    mechanism: Mechanism | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name not in ("mechanism", "menu")}
        out["regime"] = self.regime.value
        out["menu"] = list(self.menu.start_cutoffs) if self.menu is not None else None
        out["alternate_roots"] = [list(r) for r in self.alternate_roots]
        out["mechanism"] = self.mechanism.to_dict() if self.mechanism is not None else None
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(_jsonable(self.to_dict()), **kw)


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


class Regime(str, Enum):
    ConsecutiveMenu = "consecutive_menu"
    AlwaysWorking = "always_working"

    def __str__(self) -> str:
        return self.value


CONSECUTIVE = Regime.ConsecutiveMenu
ALWAYS = Regime.AlwaysWorking


def _grid_menu(env: Environment, points: int = 201, rounds: int = 12) -> np.ndarray:
    """Best consecutive menu on a grid, for when the first-order system fails."""
    d, N = env.d, env.N
    per_axis = max(3, int(round(points ** (2.0 / N)))) if N > 2 else points
    axis = np.linspace(d.hi, d.lo, per_axis)[:-1]
    best, best_v = None, -math.inf
    for chunk in _grid_chunks(axis, N):
        v = consec_payoff(d, N, env.alpha, chunk)
        i = int(np.argmax(v))
        if v[i] > best_v:
            best, best_v = chunk[i].copy(), float(v[i])
    step = float(axis[0] - axis[1])
    x = _coordinate_descent(lambda z: consec_payoff(d, N, env.alpha, z), best, d.lo, d.hi, step, rounds)
    return x


def solve(env: Environment, check_paranoid: bool = False) -> SolveReport:
    d, N, alpha = env.d, env.N, env.alpha
    if alpha < d.hi:
        raise SolverRefusal(
            f"alpha={alpha} is below the highest cost {d.hi}; the optimality results "
            "assume work is always efficient, so no optimal mechanism is reported"
        )
    aw_mech, v_aw = always_working(env)
    degraded = False
    try:
        sol = solve_foc_system(env)
        starts = np.asarray(sol.menu.start_cutoffs)
        residual, degenerate, alternates = sol.residual, sol.degenerate, sol.alternate_roots
    except ConvergenceError as exc:
        log.warning("%s; falling back to a grid search over menus", exc)
        starts = _grid_menu(env)
        residual = float(np.max(np.abs(foc_residuals(starts, d, N, alpha))))
        degenerate = bool(starts[0] >= d.hi - DEGENERATE_TOL)
        alternates = ()
        degraded = True

    menu = ConsecMenu(tuple(starts))
    v_cm = None
    feas = Feasibility(True, math.inf, check_assumption1(d))
    chosen = aw_mech
    regime = ALWAYS
    if not degenerate:
        feas = feasibility(menu, env)
        cm_mech = menu.mechanism(d)
        v_cm = principal_payoff(cm_mech, env)
        ir = check_interim_ir(cm_mech, paranoid=check_paranoid)
        if feas.feasible and ir.ok and v_cm > v_aw:
            chosen, regime = cm_mech, CONSECUTIVE
    ir = check_interim_ir(chosen, paranoid=check_paranoid)
    v_star = principal_payoff(chosen, env)
    interior = interior_at_thetabar(d, N)
    return SolveReport(
        regime=regime,
        menu=menu if regime == CONSECUTIVE else None,
        u1_star=chosen.u1_star,
        V_star=v_star,
        V_aw=v_aw,
        V_cm=v_cm,
        foc_residual=residual,
        feasibility={
            "assumption1": feas.assumption1,
            "condition4": feas.feasible,
            "condition4_margin": feas.margin,
            "lemma_interior": interior.interior,
            "lemma_display_holds": interior.lemma_holds,
        },
        ir_min_slack=ir.min_slack,
        expected_work=expected_work(chosen),
        alpha=alpha,
        N=N,
        degenerate=degenerate,
        degraded=degraded,
        alternate_roots=alternates,
        mechanism=chosen,
    )


# --------------------------------------------------------------------------
# alpha-hat


def _menu_advantage(
    d: CostDistribution, N: int, alpha: float, hint=None, multistart: int = 0, hints=()
) -> tuple[float, np.ndarray | None]:
    """``V_cm - V_aw`` for the best root of the first-order system, and that root.

    A degenerate root (first cutoff at ``hi``) is always-working, so its
    advantage is exactly zero; an infeasible menu counts as ``-inf``.
    """
    env = Environment(d, N, alpha)
    _, v_aw = always_working(env)
    starts = list(hints) + ([hint] if hint is not None else [])
    sol = solve_foc_system(env, extra_starts=starts, multistart=multistart)
    if sol.degenerate:
        return 0.0, None
    if not feasibility(sol.menu, env).feasible:
        return -math.inf, None
    x = np.asarray(sol.menu.start_cutoffs)
    return float(consec_payoff(d, N, alpha, x)) - v_aw, x


@dataclass(frozen=True)
class AlphaHat:
    alpha_hat: float
    interior_at_thetabar: bool
    gap_at_alpha_hat: float
    bracket: tuple
    samples: tuple
    single_crossing: bool

    def to_dict(self) -> dict:
        return {
            "alpha_hat": self.alpha_hat,
            "interior_at_thetabar": self.interior_at_thetabar,
            "gap_at_alpha_hat": self.gap_at_alpha_hat,
            "bracket": list(self.bracket),
            "single_crossing": self.single_crossing,
            "samples": [list(s) for s in self.samples],
        }


def find_alpha_hat(d: CostDistribution, N: int, n_samples: int = 50) -> AlphaHat:
    """Switch point from the consecutive menu to always-working.

    Bisects on whether the best menu strictly beats always-working.  The
    advantage either falls continuously to zero as the first cutoff reaches
    ``hi`` or crosses zero while the menu is still interior, in which case
    the optimal cutoffs jump.  Interior roots found so far seed the Newton
    solves closer to the switch.
    """
    check = interior_at_thetabar(d, N)
    lo_a = d.hi
    hi_a = (N - 1) * d.hi + float(virtual_cost(d, d.hi))
    if not check.interior:
        return AlphaHat(d.hi, False, check.menu_gap, (lo_a, hi_a), (), True)

    g_lo, hint = _menu_advantage(d, N, lo_a, multistart=16)
    g_hi, _ = _menu_advantage(d, N, hi_a, multistart=16)
    if not (g_lo > 0 and g_hi <= 0):
        raise BracketError(
            f"menu advantage does not change sign on [{lo_a}, {hi_a}]: {g_lo!r} -> {g_hi!r}"
        )
    a, b = lo_a, hi_a
    width = 1e-8 * d.hi
    while b - a > width:
        m = 0.5 * (a + b)
        gap, root = _menu_advantage(d, N, m, hint)
        if gap > 0:
            a, hint = m, root
        else:
            b = m
    alpha_hat = 0.5 * (a + b)
    samples = []
    hint_s = None
    for x in np.linspace(lo_a, hi_a, n_samples):
        gap, root = _menu_advantage(d, N, float(x), hint_s)
        hint_s = root if root is not None else hint_s
        samples.append((float(x), gap))
    signs = [g > 0 for _, g in samples]
    flips = sum(1 for u, v in zip(signs, signs[1:]) if u != v)
    return AlphaHat(
        alpha_hat,
        True,
        _menu_advantage(d, N, alpha_hat, hint)[0],
        (lo_a, hi_a),
        tuple(samples),
        flips <= 1 and signs[0],
    )


# --------------------------------------------------------------------------
# brute-force oracle


def _grid_chunks(axis: np.ndarray, k: int, rows: int = BATCH_ROWS):
    """All points of ``axis ** k`` in row-major order, in batches."""
    n = axis.size
    total = n**k
    for start in range(0, total, rows):
        idx = np.arange(start, min(start + rows, total))
        digits = np.empty((idx.size, k), dtype=np.int64)
        rem = idx
        for j in range(k - 1, -1, -1):
            digits[:, j] = rem % n
            rem = rem // n
        yield axis[digits]


def _coordinate_descent(fn, x, lo, hi, step, rounds, sweeps=50):
    """Accept a move only on strict improvement; halve the step each round."""
    x = np.array(x, dtype=float)
    best = float(fn(x[None, :])[0])
    for _ in range(rounds):
        step *= 0.5
        for _ in range(sweeps):
            moved = False
            for j in range(x.size):
                cands = np.clip(x[j] + step * np.array([2, 1, -1, -2]), lo, hi)
                trial = np.repeat(x[None, :], cands.size, axis=0)
                trial[:, j] = cands
                vals = fn(trial)
                i = int(np.argmax(vals))
                if vals[i] > best:
                    best = float(vals[i])
                    x = trial[i]
                    moved = True
            if not moved:
                break
    return x


def brute_force(env: Environment, grid_points: int | None = None, refine_rounds: int = 8):
    """Maximise the exact payoff over every threshold profile on a grid.

    No structure is imposed: each of the ``2**N - 1`` nodes gets its own cutoff.
    Grid points run from ``hi`` down to ``lo`` so ties resolve toward larger
    cutoffs, which keeps payoff-irrelevant cutoffs at ``hi``.
    Returns ``(profile, V, step)`` where ``step`` is the final resolution.
    """
    d, N = env.d, env.N
    if N > BRUTE_FORCE_MAX_N:
        raise SizeError(f"brute force is limited to N <= {BRUTE_FORCE_MAX_N}, got N={N}")
    n = grid_points or DEFAULT_GRID[N]
    if n < 2:
        raise ValueError("need at least two grid points per axis")
    axis = np.linspace(d.hi, d.lo, n)
    k = node_count(N)
    best, best_v = None, -math.inf
    for chunk in _grid_chunks(axis, k):
        v = payoff_batch(chunk, d, N, env.alpha)
        i = int(np.argmax(v))
        if v[i] > best_v:
            best, best_v = chunk[i].copy(), float(v[i])
    step = float(axis[0] - axis[1])
    x = _coordinate_descent(lambda z: payoff_batch(z, d, N, env.alpha), best, d.lo, d.hi, step, refine_rounds)
    final_step = step * 0.5**refine_rounds
    profile = ThresholdProfile(N, x)
    return profile, float(payoff_batch(x[None, :], d, N, env.alpha)[0]), final_step


# --------------------------------------------------------------------------
# sweeps


def sweep_alpha(d: CostDistribution, N: int, alphas: Sequence[float]) -> list[dict]:
    alphas = [float(a) for a in alphas]
    if any(b < a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alpha grid must be ascending")
    rows = []
    for a in alphas:
        rep = solve(Environment(d, N, a))
        row = {"alpha": a, "regime": rep.regime.value, "V_star": rep.V_star, "V_aw": rep.V_aw}
        cut = rep.menu.start_cutoffs if rep.menu is not None else (d.hi,) * N
        for t, c in enumerate(cut, start=1):
            row[f"c{t}"] = c
        row["expected_work"] = rep.expected_work
        rows.append(row)
    return rows


def sweep_to_csv(rows: list[dict], N: int) -> str:
    cols = ["alpha", "regime", "V_star", "V_aw", *[f"c{t}" for t in range(1, N + 1)], "expected_work"]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()
