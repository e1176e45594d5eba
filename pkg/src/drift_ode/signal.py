"""Periodic and drifted-periodic signals, and the cached exponent a(t).

A drifted-periodic function b satisfies b(t+T) = b(t) + beta(t) with beta
T-periodic; equivalently b splits as a periodic part plus (t/T)*beta(t).
The exponent a(t) = lambda * integral of rho over [0, t] inherits the
period structure of rho: a(t + nT) = a(t) + n*a(T), which is what makes
every large-time formula in this package computable from one-period
quadratures.  ExponentCache exploits exactly that identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import NonContracting, PeriodicityViolation
from .numerics import DEFAULT_QUAD, QuadratureConfig, _as_batch, integrate

__all__ = [
    "PeriodicSignal",
    "DriftedSignal",
    "ExponentCache",
    "PeriodicityReport",
    "split_periods",
    "verify_periodicity",
    "decompose_drift",
    "reconstruct_drift",
    "exponent",
    "period_exponent",
]


def split_periods(t, period: float):
    """Split t into (whole periods n, residual r) with r in [0, period).

    Uses floor division and then clamps the residual, so large t does not
    suffer catastrophic cancellation turning into r slightly outside the
    fundamental window.
    """
    t = np.asarray(t, dtype=float)
    n = np.floor(t / period)
    r = t - n * period
    high = r >= period
    n = np.where(high, n + 1, n)
    r = np.where(high, r - period, r)
    low = r < 0
    n = np.where(low, n - 1, n)
    r = np.where(low, r + period, r)
    return n, r


@dataclass(frozen=True)
class PeriodicityReport:
    """Result of a sampled periodicity check."""

    passed: bool
    max_deviation: float
    worst_t: float
    tol: float
    samples: int
    periods: int

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        return (f"periodicity {status}: max |f(t+T)-f(t)| = "
                f"{self.max_deviation:.3e} at t = {self.worst_t:.6g} "
                f"(tol {self.tol:.1e}, {self.samples} samples, "
                f"{self.periods} periods)")


def verify_periodicity(f: Callable, period: float, samples: int = 1024,
                       tol: float = 1e-8, periods: int = 3) -> PeriodicityReport:
    """Sample f(t+T) - f(t) on an equispaced grid over [0, periods*T]."""
    if samples < 2:
        raise ValueError("samples must be >= 2")
    if tol <= 0:
        raise ValueError("tol must be > 0")
    ts = np.linspace(0.0, periods * period, samples)
    fb = _as_batch(f, ts[:2])
    dev = np.abs(fb(ts + period) - fb(ts))
    worst = int(np.argmax(dev))
    return PeriodicityReport(
        passed=bool(dev[worst] <= tol),
        max_deviation=float(dev[worst]),
        worst_t=float(ts[worst]),
        tol=tol, samples=samples, periods=periods)


@dataclass(frozen=True)
class PeriodicSignal:
    """Evaluable real function of t >= 0 with a declared period."""

    func: Callable
    period: float

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be > 0")

    def __call__(self, t):
        return self.func(t)

    def check(self, samples: int = 1024, tol: float = 1e-8,
              periods: int = 3) -> PeriodicityReport:
        return verify_periodicity(self.func, self.period, samples, tol, periods)

    @classmethod
    def from_window(cls, window_func: Callable, period: float) -> "PeriodicSignal":
        """Periodic extension of a function given on [0, period)."""

        def extended(t):
            _, r = split_periods(t, period)
            return window_func(r)

        return cls(extended, period)

    @classmethod
    def zero(cls, period: float) -> "PeriodicSignal":
        return cls(lambda t: np.zeros_like(np.asarray(t, dtype=float)), period)


@dataclass(frozen=True)
class DriftedSignal:
    """Function with b(t+T) = b(t) + drift(t), drift T-periodic."""

    func: Callable
    period: float
    drift: PeriodicSignal

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be > 0")
        if abs(self.drift.period - self.period) > 1e-12 * max(1.0, self.period):
            raise ValueError("drift period must match the signal period")

    def __call__(self, t):
        return self.func(t)

    @classmethod
    def from_periodic(cls, sig: PeriodicSignal) -> "DriftedSignal":
        """A periodic signal seen as drifted-periodic with zero drift."""
        return cls(sig.func, sig.period, PeriodicSignal.zero(sig.period))

    def check(self, samples: int = 1024, tol: float = 1e-8,
              periods: int = 3) -> PeriodicityReport:
        """Sampled check of the defining relation b(t+T) - b(t) = drift(t)."""

        def residual(t):
            t = np.asarray(t, dtype=float)
            return self.func(t + self.period) - self.func(t) - self.drift(t)

        ts = np.linspace(0.0, periods * self.period, samples)
        fb = _as_batch(residual, ts[:2])
        dev = np.abs(fb(ts))
        worst = int(np.argmax(dev))
        return PeriodicityReport(bool(dev[worst] <= tol), float(dev[worst]),
                                 float(ts[worst]), tol, samples, periods)


def decompose_drift(b: DriftedSignal, samples: int = 1024,
                    tol: float = 1e-8) -> tuple[PeriodicSignal, PeriodicSignal]:
    """Split a drifted signal into (periodic part, drift).

    The periodic part is b(t) - (t/T)*drift(t); the declared drift is
    returned unchanged.  Raises PeriodicityViolation when the residual
    fails its sampled periodicity test, i.e. when b does not actually
    satisfy the relation it was declared with.
    """
    beta = b.drift
    period = b.period

    def tilde(t):
        t = np.asarray(t, dtype=float)
        return b.func(t) - t / period * beta(t)

    report = verify_periodicity(tilde, period, samples, tol)
    if not report.passed:
        raise PeriodicityViolation(
            f"drift decomposition residual is not periodic: {report}")
    return PeriodicSignal(tilde, period), beta


def reconstruct_drift(tilde: PeriodicSignal, beta: PeriodicSignal) -> DriftedSignal:
    """Inverse of decompose_drift: b(t) = tilde(t) + (t/T)*beta(t)."""
    if abs(tilde.period - beta.period) > 1e-12 * max(1.0, tilde.period):
        raise ValueError("periodic part and drift must share the period")
    period = tilde.period

    def func(t):
        t = np.asarray(t, dtype=float)
        return tilde(t) + t / period * beta(t)

    return DriftedSignal(func, period, beta)


class _CumulativeIntegral:
    """Dense antiderivative table on [0, hi] with cubic interpolation.

    Node values come from per-panel Simpson sums (three-point, so the
    per-panel error is O(h^5) and negligible at 4096 panels); evaluation
    goes through a cubic spline.
    """

    def __init__(self, f: Callable, hi: float, nodes: int = 4096):
        xs = np.linspace(0.0, hi, nodes + 1)
        mids = (xs[:-1] + xs[1:]) / 2
        fb = _as_batch(f, xs[:2] + hi * 1e-4)
        f_nodes = fb(xs)
        f_mids = fb(mids)
        h = xs[1] - xs[0]
        panels = h / 6 * (f_nodes[:-1] + 4 * f_mids + f_nodes[1:])
        values = np.concatenate([[0.0], np.cumsum(panels)])
        self.hi = hi
        self.total = float(values[-1])
        self._spline = CubicSpline(xs, values)

    def __call__(self, x):
        return self._spline(x)


@dataclass(frozen=True)
class ExponentCache:
    """a(t) = lam * integral of rho over [0, t], with period reduction.

    a is evaluated as a(t mod T) + floor(t/T) * a(T).  The residual value
    comes from a dense table when the table was validated against direct
    quadrature at construction, and from fresh quadrature otherwise.
    """

    lam: float
    rho: PeriodicSignal
    period_exponent: float        # a(T)
    quad_cfg: QuadratureConfig
    _table: _CumulativeIntegral | None = field(repr=False, default=None)
    _use_table: bool = field(repr=False, default=False)

    @classmethod
    def build(cls, lam: float, rho: PeriodicSignal,
              quad_cfg: QuadratureConfig = DEFAULT_QUAD,
              table_nodes: int = 4096, validation_points: int = 64) -> "ExponentCache":
        if not lam < 0:
            raise ValueError("lam must be < 0")
        period = rho.period

        def integrand(s):
            return lam * np.asarray(rho(s), dtype=float)

        a_period = integrate(integrand, 0.0, period, quad_cfg)
        table = _CumulativeIntegral(integrand, period, table_nodes)

        # accept the table only where it reproduces direct quadrature
        rng = np.random.default_rng(1789)
        probes = rng.uniform(0.0, period, validation_points)
        use_table = True
        for r in probes:
            direct = integrate(integrand, 0.0, float(r), quad_cfg)
            limit = quad_cfg.abs_tol + quad_cfg.rel_tol * abs(direct)
            if abs(float(table(r)) - direct) > limit:
                use_table = False
                break

        return cls(lam, rho, a_period, quad_cfg, table, use_table)

    @property
    def period(self) -> float:
        return self.rho.period

    @property
    def contraction_ratio(self) -> float:
        """exp(a(T)); must lie in (0, 1) for the asymptotic theory."""
        ratio = math.exp(self.period_exponent)
        if ratio >= 1.0:
            raise NonContracting(
                f"exp(a(T)) = {ratio:.6g} >= 1: per-period multiplier does "
                "not contract, downstream series diverge")
        return ratio

    def exponent(self, t):
        """a(t) for scalar or array t >= 0."""
        t = np.asarray(t, dtype=float)
        n, r = split_periods(t, self.period)
        if self._use_table and self._table is not None:
            base = np.asarray(self._table(r), dtype=float)
        else:
            flat = np.atleast_1d(r)

            def integrand(s):
                return self.lam * np.asarray(self.rho(s), dtype=float)

            vals = np.array([integrate(integrand, 0.0, float(x), self.quad_cfg)
                             for x in flat])
            base = vals.reshape(r.shape)
        out = base + n * self.period_exponent
        if out.ndim == 0:
            return float(out)
        return out

    def __call__(self, t):
        return self.exponent(t)


def exponent(cache: ExponentCache, t):
    """a(t) evaluated through the cache's period reduction."""
    return cache.exponent(t)


def period_exponent(cache: ExponentCache) -> float:
    """a(T).  Raises NonContracting when exp(a(T)) >= 1, since every
    consumer of this value needs the contracting regime."""
    cache.contraction_ratio  # noqa: B018 - raises if non-contracting
    return cache.period_exponent
