"""Cost distributions on a bounded support.

Every quantity the mechanism formulas need is exposed here: density, CDF,
mean, the CDF integral ``I(x) = int_lo^x F``, the quantile function used by
the simulator, and the virtual cost ``G(x) = x + F(x)/f(x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from ._numerics import adaptive_simpson, bisect

__all__ = [
    "Support",
    "CostDistribution",
    "AssumptionReport",
    "DistributionError",
    "make_uniform",
    "make_truncated_normal",
    "make_scaled_beta",
    "check_assumption1",
    "check_assumption2",
    "virtual_cost",
    "virtual_cost_inverse",
    "G_GRID_POINTS",
    "G_MONOTONE_SLACK",
]

# Resolution and slack of the virtual-cost monotonicity check.
G_GRID_POINTS = 10_001
G_MONOTONE_SLACK = -1e-9

CDF_INTEGRAL_TOL = 1e-10


class DistributionError(ValueError):
    """Invalid distribution parameters or out-of-range query."""


@dataclass(frozen=True)
class Support:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise DistributionError(f"support must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise DistributionError(f"support needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi


@dataclass(frozen=True, eq=False)
class CostDistribution:
    """Continuous cost distribution with strictly positive density on its support.

    ``pdf`` and ``cdf`` must accept numpy arrays.  ``cdf_integral`` and ``ppf``
    are optional closed forms; when missing, the integral falls back to
    adaptive Simpson quadrature and the quantile to bisection on the CDF.
    :meth:`quad_I` always integrates numerically, for cross-checking.
    """

    name: str
    support: Support
    pdf: Callable[[np.ndarray], np.ndarray]
    cdf: Callable[[np.ndarray], np.ndarray]
    mean: float
    params: dict = field(default_factory=dict)
    cdf_integral_exact: Callable[[np.ndarray], np.ndarray] | None = None
    ppf_exact: Callable[[np.ndarray], np.ndarray] | None = None

    @property
    def lo(self) -> float:
        return self.support.lo

    @property
    def hi(self) -> float:
        return self.support.hi

    def f(self, x):
        return self.pdf(x)

    def F(self, x):
        return self.cdf(x)

    def I(self, x):
        """CDF integral ``int_lo^x F(s) ds``; scalar in, scalar out."""
        if self.cdf_integral_exact is not None:
            return self.cdf_integral_exact(x)
        if np.ndim(x) == 0:
            return self._quad_cdf(float(x))
        arr = np.asarray(x, dtype=float)
        return np.vectorize(self._quad_cdf, otypes=[float])(arr)

    def quad_I(self, x):
        if np.ndim(x) == 0:
            return self._quad_cdf(float(x))
        return np.vectorize(self._quad_cdf, otypes=[float])(np.asarray(x, dtype=float))

    def _quad_cdf(self, x: float) -> float:
        x = min(max(x, self.lo), self.hi)
        if x == self.lo:
            return 0.0
        return adaptive_simpson(lambda s: float(self.cdf(s)), self.lo, x, tol=CDF_INTEGRAL_TOL)

    def partial_mean(self, x):
        """``int_lo^x s f(s) ds``, via integration by parts: ``x F(x) - I(x)``."""
        return x * self.F(x) - self.I(x)

    def ppf(self, u):
        if self.ppf_exact is not None:
            return self.ppf_exact(u)
        u = np.asarray(u, dtype=float)
        return np.vectorize(
            lambda p: bisect(lambda s: float(self.cdf(s)) - p, self.lo, self.hi, xtol=1e-13),
            otypes=[float],
        )(u)

    def to_dict(self) -> dict:
        return {"kind": self.name, **self.params}

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"CostDistribution({self.name}: {args})"


def make_uniform(lo: float, hi: float) -> CostDistribution:
    support = Support(float(lo), float(hi))
    lo, hi = support.lo, support.hi
    width = hi - lo

    def pdf(x):
        return np.full(np.shape(x), 1.0 / width) if np.ndim(x) else 1.0 / width

    def cdf(x):
        return np.clip((np.asarray(x, dtype=float) - lo) / width, 0.0, 1.0)[()]

    def cdf_integral(x):
        z = np.clip(np.asarray(x, dtype=float), lo, hi) - lo
        return (z * z / (2.0 * width))[()]

    def ppf(u):
        return (lo + np.asarray(u, dtype=float) * width)[()]

    return CostDistribution(
        name="uniform",
        support=support,
        pdf=pdf,
        cdf=cdf,
        mean=0.5 * (lo + hi),
        params={"lo": lo, "hi": hi},
        cdf_integral_exact=cdf_integral,
        ppf_exact=ppf,
    )


def make_truncated_normal(mu: float, sigma: float, lo: float, hi: float) -> CostDistribution:
    if not sigma > 0:
        raise DistributionError(f"sigma must be positive, got {sigma}")
    support = Support(float(lo), float(hi))
    mu, sigma = float(mu), float(sigma)
    a = (support.lo - mu) / sigma
    b = (support.hi - mu) / sigma
    Phi_a, Phi_b = special.ndtr(a), special.ndtr(b)
    Z = Phi_b - Phi_a
    if not Z > 0:
        raise DistributionError("truncation interval carries no normal mass")

    def phi(z):
        return np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)

    def pdf(x):
        z = (np.asarray(x, dtype=float) - mu) / sigma
        return (phi(z) / (sigma * Z))[()]

    def cdf(x):
        x = np.clip(np.asarray(x, dtype=float), support.lo, support.hi)
        return np.clip((special.ndtr((x - mu) / sigma) - Phi_a) / Z, 0.0, 1.0)[()]

    def ppf(u):
        u = np.asarray(u, dtype=float)
        return np.clip(mu + sigma * special.ndtri(Phi_a + u * Z), support.lo, support.hi)[()]

    def cdf_integral(x):
        # int_lo^x F = x F(x) - int_lo^x s f(s) ds, with the partial mean in closed form
        x = np.clip(np.asarray(x, dtype=float), support.lo, support.hi)
        z = (x - mu) / sigma
        Phi_z = special.ndtr(z)
        partial = (mu * (Phi_z - Phi_a) - sigma * (phi(z) - phi(a))) / Z
        Fx = np.clip((Phi_z - Phi_a) / Z, 0.0, 1.0)
        return np.maximum(x * Fx - partial, 0.0)[()]

    mean = mu - sigma * (phi(b) - phi(a)) / Z
    return CostDistribution(
        name="truncnorm",
        support=support,
        pdf=pdf,
        cdf=cdf,
        mean=float(mean),
        params={"mu": mu, "sigma": sigma, "lo": support.lo, "hi": support.hi},
        cdf_integral_exact=cdf_integral,
        ppf_exact=ppf,
    )


def make_scaled_beta(a: float, b: float, lo: float, hi: float) -> CostDistribution:
    """Beta(a, b) stretched onto ``[lo, hi]``.

    The density must stay positive on the closed support, so both shape
    parameters are restricted to ``<= 1`` at the ends where they would vanish;
    in practice that means ``a, b`` in ``(0, 1]``.
    """
    if not (a > 0 and b > 0):
        raise DistributionError(f"beta shapes must be positive, got a={a}, b={b}")
    if a > 1 or b > 1:
        raise DistributionError("beta density vanishes at an endpoint unless a, b <= 1")
    support = Support(float(lo), float(hi))
    a, b = float(a), float(b)
    width = support.width
    log_norm = special.betaln(a, b)

    def pdf(x):
        z = np.clip((np.asarray(x, dtype=float) - support.lo) / width, 0.0, 1.0)
        logp = np.full(z.shape, -log_norm)
        with np.errstate(divide="ignore"):
            if a != 1.0:
                logp = logp + (a - 1) * np.log(z)
            if b != 1.0:
                logp = logp + (b - 1) * np.log1p(-z)
        return (np.exp(logp) / width)[()]

    def cdf(x):
        z = np.clip((np.asarray(x, dtype=float) - support.lo) / width, 0.0, 1.0)
        return special.betainc(a, b, z)[()]

    def ppf(u):
        return (support.lo + width * special.betaincinv(a, b, np.asarray(u, dtype=float)))[()]

    def cdf_integral(x):
        # int_0^z B(a,b; s) ds = z B(a,b; z) - a/(a+b) B(a+1,b; z), B the regularised incomplete beta
        z = np.clip((np.asarray(x, dtype=float) - support.lo) / width, 0.0, 1.0)
        val = z * special.betainc(a, b, z) - a / (a + b) * special.betainc(a + 1, b, z)
        return (width * np.maximum(val, 0.0))[()]

    return CostDistribution(
        name="scaledbeta",
        support=support,
        pdf=pdf,
        cdf=cdf,
        mean=support.lo + width * a / (a + b),
        params={"a": a, "b": b, "lo": support.lo, "hi": support.hi},
        cdf_integral_exact=cdf_integral,
        ppf_exact=ppf,
    )


def check_assumption1(d: CostDistribution) -> bool:
    """Whether ``lo + E[theta] >= hi`` (equality counts as holding)."""
    return d.lo + d.mean >= d.hi


@dataclass(frozen=True)
class AssumptionReport:
    a1_holds: bool
    a2_g_monotone: bool
    a2_density_bound: bool
    details: str

    @property
    def a2_holds(self) -> bool:
        return self.a2_g_monotone and self.a2_density_bound

    def to_dict(self) -> dict:
        return {
            "a1_holds": self.a1_holds,
            "a2_g_monotone": self.a2_g_monotone,
            "a2_density_bound": self.a2_density_bound,
            "details": self.details,
        }


def _g_monotone(d: CostDistribution) -> tuple[bool, float]:
    grid = np.linspace(d.lo, d.hi, G_GRID_POINTS)
    g = virtual_cost(d, grid)
    worst = float(np.min(np.diff(g)))
    return worst >= G_MONOTONE_SLACK, worst


def check_assumption2(d: CostDistribution, N: int) -> AssumptionReport:
    if N < 2:
        raise ValueError(f"the density bound needs N >= 2, got N={N}")
    monotone, worst_step = _g_monotone(d)
    f_hi = float(d.f(d.hi))
    gap = d.hi - d.mean
    bound = 1.0 / ((N - 1) * gap)
    # Relative slack so analytically tight cases (uniform, N=3) are not lost to rounding.
    density_ok = f_hi <= bound * (1.0 + 1e-12)
    details = (
        f"lo + mean - hi = {d.lo + d.mean - d.hi:.17g}; "
        f"min step of G on {G_GRID_POINTS}-point grid = {worst_step:.6g}; "
        f"f(hi) = {f_hi:.17g} vs 1/((N-1)(hi - mean)) = {bound:.17g}"
    )
    return AssumptionReport(check_assumption1(d), monotone, density_ok, details)


def virtual_cost(d: CostDistribution, theta):
    return theta + d.F(theta) / d.f(theta)


def virtual_cost_inverse(d: CostDistribution, y: float) -> float:
    """Solve ``G(x) = y`` on the support by bisection (abs tol 1e-12)."""
    g_lo = float(virtual_cost(d, d.lo))
    g_hi = float(virtual_cost(d, d.hi))
    if y < g_lo or y > g_hi:
        clamped = d.lo if y < g_lo else d.hi
        raise DistributionError(
            f"virtual cost {y!r} outside [{g_lo!r}, {g_hi!r}]; clamped endpoint would be {clamped!r}"
        )
    if y == g_lo:
        return d.lo
    if y == g_hi:
        return d.hi
    return bisect(lambda x: float(virtual_cost(d, x)) - y, d.lo, d.hi, xtol=1e-13)
