"""Quadrature and a fixed-step RK4 integrator.

Every closed form in the rest of the package is cross-checked against
these two primitives, so they are deliberately boring: globally adaptive
Simpson with a Richardson correction, and classical Runge-Kutta 4 with
dense output at every step.  Both are deterministic: the same inputs
produce bit-identical results, which the golden-output tests rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NonFiniteSample, SubdivisionLimit

__all__ = [
    "QuadratureConfig",
    "IntegratorConfig",
    "Trajectory",
    "DEFAULT_QUAD",
    "integrate",
    "integrate_gauss",
    "rk4_solve",
    "rk4_solve_vector",
]


@dataclass(frozen=True)
class QuadratureConfig:
    """Error targets for :func:`integrate`.

    abs_tol and rel_tol combine as ``abs_tol + rel_tol * |integral|``;
    max_subdivisions caps the total number of interval splits.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 2 ** 20

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be > 0")
        if self.rel_tol < 0:
            raise ValueError("rel_tol must be >= 0")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed step size and horizon for :func:`rk4_solve`."""

    step: float
    t_max: float

    def __post_init__(self):
        if not 0 < self.step <= self.t_max:
            raise ValueError("need 0 < step <= t_max")

    @property
    def n_steps(self) -> int:
        n = round(self.t_max / self.step)
        if n < 1 or abs(n * self.step - self.t_max) > 1e-9 * max(1.0, self.t_max):
            raise ValueError(
                f"step {self.step} does not divide t_max {self.t_max} within rounding"
            )
        return n


DEFAULT_QUAD = QuadratureConfig()


@dataclass(frozen=True)
class Trajectory:
    """Dense RK4 output: values[k] is the state at times[k]."""

    times: np.ndarray
    values: np.ndarray

    @property
    def step(self) -> float:
        return float(self.times[1] - self.times[0])

    def value_at(self, t: float):
        """State at a grid time t.  t must land on a step (no interpolation)."""
        i = int(round((t - float(self.times[0])) / self.step))
        if not 0 <= i < len(self.times) or abs(float(self.times[i]) - t) > 1e-8:
            raise ValueError(f"t={t} is not on the trajectory grid")
        return self.values[i]

    def window(self, t_lo: float, t_hi: float) -> "Trajectory":
        keep = (self.times >= t_lo - 1e-12) & (self.times <= t_hi + 1e-12)
        return Trajectory(self.times[keep], self.values[keep])


def _as_batch(f: Callable, probe: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    """Return a callable mapping a sample array to a value array.

    Integrands written against numpy work unchanged; scalar-only callables
    (math.sin style) are wrapped in a per-point loop.
    """
    try:
        out = np.asarray(f(probe), dtype=float)
        if out.shape == probe.shape:
            return lambda xs: np.asarray(f(xs), dtype=float)
    except (TypeError, ValueError):
        pass

    def batched(xs: np.ndarray) -> np.ndarray:
        return np.array([float(f(x)) for x in xs], dtype=float)

    return batched


def _check_finite(values: np.ndarray, samples: np.ndarray, what: str):
    bad = ~np.isfinite(values)
    if bad.any():
        s = float(np.asarray(samples)[bad][0])
        raise NonFiniteSample(f"{what} returned a non-finite value at t={s!r}")


def integrate(f: Callable, lo: float, hi: float,
              cfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Adaptive-Simpson estimate of the integral of f over [lo, hi].

    The interval queue is refined until every subinterval passes the
    standard (S_fine - S_coarse)/15 error test against a width-proportional
    share of the global tolerance.  Accepted pieces carry the Richardson
    correction, so polynomials of degree <= 3 come out exact.

    Raises SubdivisionLimit when cfg.max_subdivisions splits were not
    enough, and NonFiniteSample as soon as f returns NaN/inf.
    """
    lo = float(lo)
    hi = float(hi)
    if lo > hi:
        raise ValueError("need lo <= hi")
    if lo == hi:
        return 0.0

    width = hi - lo
    fb = _as_batch(f, np.array([lo + 0.31 * width, lo + 0.77 * width]))

    a = np.array([lo])
    b = np.array([hi])
    m = (a + b) / 2
    first = fb(np.concatenate([a, m, b]))
    _check_finite(first, np.concatenate([a, m, b]), "integrand")
    fa, fm, fbv = first[0:1], first[1:2], first[2:3]
    coarse = (b - a) / 6 * (fa + 4 * fm + fbv)
    depth = np.zeros(1, dtype=int)

    done_pos: list[float] = []
    done_val: list[float] = []
    done_sum = 0.0
    splits = 0

    while a.size:
        ml = (a + m) / 2
        mr = (m + b) / 2
        nodes = np.concatenate([ml, mr])
        vals = fb(nodes)
        _check_finite(vals, nodes, "integrand")
        fml, fmr = vals[: a.size], vals[a.size:]

        h6 = (b - a) / 12
        s_left = h6 * (fa + 4 * fml + fm)
        s_right = h6 * (fm + 4 * fmr + fbv)
        fine = s_left + s_right
        err = (fine - coarse) / 15

        estimate = done_sum + float(np.sum(fine))
        local_tol = (cfg.abs_tol + cfg.rel_tol * abs(estimate)) * (b - a) / width
        # two forced levels guard against aliasing on periodic integrands;
        # slivers below float resolution (isolated jumps) are taken as is
        accept = ((np.abs(err) <= local_tol) & (depth >= 2)) \
            | ((b - a) <= 1e-15 * width)

        if accept.any():
            done_pos.extend(a[accept].tolist())
            done_val.extend((fine[accept] + err[accept]).tolist())
            done_sum = math.fsum(done_val)

        split = ~accept
        n_split = int(np.count_nonzero(split))
        if n_split == 0:
            break
        splits += n_split
        if splits > cfg.max_subdivisions:
            worst = int(np.argmax(np.abs(err[split])))
            bad_lo = float(a[split][worst])
            bad_hi = float(b[split][worst])
            raise SubdivisionLimit(
                f"tolerance not met after {cfg.max_subdivisions} subdivisions "
                f"(worst interval [{bad_lo!r}, {bad_hi!r}])"
            )

        a, m, b, fa, fm, fbv, coarse, depth = (
            np.concatenate([a[split], m[split]]),
            np.concatenate([ml[split], mr[split]]),
            np.concatenate([m[split], b[split]]),
            np.concatenate([fa[split], fm[split]]),
            np.concatenate([fml[split], fmr[split]]),
            np.concatenate([fm[split], fbv[split]]),
            np.concatenate([s_left[split], s_right[split]]),
            np.concatenate([depth[split] + 1, depth[split] + 1]),
        )

    order = np.argsort(np.array(done_pos), kind="stable")
    return math.fsum(np.array(done_val)[order])


def integrate_gauss(f: Callable, lo: float, hi: float,
                    panels: int = 64, order: int = 12) -> float:
    """Composite Gauss-Legendre rule; same interface, used for stress tests."""
    lo = float(lo)
    hi = float(hi)
    if lo > hi:
        raise ValueError("need lo <= hi")
    if lo == hi:
        return 0.0
    fb = _as_batch(f, np.array([lo + 0.31 * (hi - lo), lo + 0.77 * (hi - lo)]))
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    xs = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    vals = fb(xs)
    _check_finite(vals, xs, "integrand")
    contrib = (vals.reshape(panels, order) * weights[None, :]).sum(axis=1) * half
    return math.fsum(contrib.tolist())


def _rk4_loop(rhs, y0, cfg: IntegratorConfig, what: str) -> Trajectory:
    n = cfg.n_steps
    h = cfg.t_max / n
    y = np.array(y0, dtype=float)
    scalar = y.ndim == 0
    out = np.empty((n + 1,) + y.shape)
    out[0] = y
    for k in range(n):
        t = k * h
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NonFiniteSample(f"{what} blew up near t={t + h!r}")
        out[k + 1] = y
    times = h * np.arange(n + 1)
    return Trajectory(times, out if not scalar else out.reshape(n + 1))


def rk4_solve(lam: float, rho: Callable, b: Callable, y0: float,
              cfg: IntegratorConfig) -> Trajectory:
    """Classical RK4 trajectory of y' = lam * rho(t) * y + b(t), y(0) = y0.

    The stage abscissae form a fixed half-step grid, so both coefficients
    are sampled there up front (vectorized when they allow it) and the
    time loop is plain scalar arithmetic.
    """
    n = cfg.n_steps
    h = cfg.t_max / n
    stage_times = (h / 2) * np.arange(2 * n + 1)
    rho_s = _as_batch(rho, stage_times[1:3])(stage_times)
    b_s = _as_batch(b, stage_times[1:3])(stage_times)
    _check_finite(rho_s, stage_times, "rho")
    _check_finite(b_s, stage_times, "b")
    rate = lam * rho_s

    out = np.empty(n + 1)
    y = float(y0)
    out[0] = y
    for k in range(n):
        j = 2 * k
        r0, rm, r1 = rate[j], rate[j + 1], rate[j + 2]
        b0, bm, b1 = b_s[j], b_s[j + 1], b_s[j + 2]
        k1 = r0 * y + b0
        k2 = rm * (y + h / 2 * k1) + bm
        k3 = rm * (y + h / 2 * k2) + bm
        k4 = r1 * (y + h * k3) + b1
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not math.isfinite(y):
            raise NonFiniteSample(f"rk4_solve blew up near t={(k + 1) * h!r}")
        out[k + 1] = y
    return Trajectory(h * np.arange(n + 1), out)


def rk4_solve_vector(rhs: Callable[[float, np.ndarray], np.ndarray],
                     y0: Sequence[float], cfg: IntegratorConfig) -> Trajectory:
    """RK4 for vector systems; rhs(t, y) must return an array like y."""
    return _rk4_loop(lambda t, y: np.asarray(rhs(t, y), dtype=float),
                     np.asarray(y0, dtype=float), cfg, "rk4_solve_vector")
