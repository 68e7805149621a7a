"""Small numerical kernels shared across modules."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

MAX_SIMPSON_INTERVALS = 2**20


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, trace: list[float] | None = None):
        super().__init__(message)
        self.trace = trace or []


def adaptive_simpson(
    fn: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_intervals: int = MAX_SIMPSON_INTERVALS,
) -> float:
    """Adaptive Simpson quadrature with Richardson correction.

    The tolerance budget is split in proportion to interval width, so the
    absolute error target holds for the whole integral.
    """
    if a == b:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    fa, fb = fn(a), fn(b)
    m = 0.5 * (a + b)
    fm = fn(m)
    whole = (b - a) * (fa + 4.0 * fm + fb) / 6.0
    stack = [(a, b, fa, fm, fb, whole, tol)]
    total = 0.0
    leaves = 0
    while stack:
        lo, hi, flo, fmid, fhi, est, eps = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = fn(lm), fn(rm)
        left = (mid - lo) * (flo + 4.0 * flm + fmid) / 6.0
        right = (hi - mid) * (fmid + 4.0 * frm + fhi) / 6.0
        delta = left + right - est
        if abs(delta) <= 15.0 * eps or leaves + len(stack) >= max_intervals or hi - lo < 1e-15:
            total += left + right + delta / 15.0
            leaves += 1
            continue
        stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps))
        stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps))
    return sign * total


def bisect(fn: Callable[[float], float], a: float, b: float, xtol: float = 1e-12, maxiter: int = 200) -> float:
    """Root of a continuous ``fn`` with a sign change on ``[a, b]``."""
    fa = fn(a)
    if fa == 0:
        return a
    fb = fn(b)
    if fb == 0:
        return b
    if math.copysign(1.0, fa) == math.copysign(1.0, fb):
        raise ValueError(f"no sign change on [{a}, {b}]: f(a)={fa}, f(b)={fb}")
    for _ in range(maxiter):
        m = 0.5 * (a + b)
        if b - a <= xtol:
            return m
        fm = fn(m)
        if fm == 0:
            return m
        if math.copysign(1.0, fm) == math.copysign(1.0, fa):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def forward_jacobian(fn, x: np.ndarray, fx: np.ndarray, step: float, upper=None) -> np.ndarray:
    n = x.size
    jac = np.empty((fx.size, n))
    for j in range(n):
        xp = x.copy()
        h = step
        # Step inward when at the upper bound so the probe stays feasible.
        if upper is not None and x[j] + h > upper[j]:
            h = -step
        xp[j] += h
        jac[:, j] = (fn(xp) - fx) / h
    return jac


def damped_newton(
    fn: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    fd_step: float,
    tol: float = 1e-10,
    maxiter: int = 100,
    max_halvings: int = 30,
) -> tuple[np.ndarray, float, list[float], bool]:
    """Box-clamped Newton iteration with backtracking on the residual inf-norm.

    Returns ``(x, residual, trace, converged)``; never raises on stall so the
    caller can switch strategy.
    """
    x = np.clip(np.asarray(x0, dtype=float), lower, upper)
    fx = fn(x)
    res = float(np.max(np.abs(fx)))
    trace = [res]
    for _ in range(maxiter):
        if res <= tol:
            return x, res, trace, True
        jac = forward_jacobian(fn, x, fx, fd_step, upper)
        try:
            dx = np.linalg.solve(jac, -fx)
        except np.linalg.LinAlgError:
            dx = np.linalg.lstsq(jac, -fx, rcond=None)[0]
        lam = 1.0
        improved = False
        for _ in range(max_halvings):
            cand = np.clip(x + lam * dx, lower, upper)
            fc = fn(cand)
            rc = float(np.max(np.abs(fc)))
            if np.all(np.isfinite(fc)) and rc < res:
                improved = True
                break
            lam *= 0.5
        if not improved:
            return x, res, trace, False
        x, fx, res = cand, fc, rc
        trace.append(res)
    return x, res, trace, res <= tol
