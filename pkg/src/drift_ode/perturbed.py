"""Window recursion and periodic-limit diagnostics for perturbed coefficients.

Here the coefficients are only asymptotically periodic: on window i the
rate and forcing deviate from their base-period shapes by alpha_i(t) and
beta_i(t),

    rho(t + iT) = rho(t) + alpha_i(t),   b(t + iT) = b(t) + beta_i(t),

with both families positive, pointwise nonincreasing in i, and decaying
fast enough that their exp(-i*a(T))-weighted window integrals sum.  Under
those conditions the window initial values y_n(0) converge and the
limiting equation (base rho, base b) has a unique T-periodic solution.

Everything here is computed two ways on purpose: a one-step recursion for
y_{n+1}(0), and an explicit product-sum expansion of the same value; the
two paths must agree to roundoff, and both are cross-checked against RK4
on the assembled global coefficients.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .asymptotic import ProblemInstance
from .errors import ConditionsNotVerified
from .numerics import DEFAULT_QUAD, IntegratorConfig, integrate, rk4_solve
from .signal import _CumulativeIntegral, split_periods

__all__ = [
    "PerturbationFamily",
    "SeriesDiagnostics",
    "CauchyGap",
    "CauchyDiagnostics",
    "PeriodicLimitSolution",
    "FamilyConsistencyWarning",
    "alpha_hat",
    "beta_hat",
    "window_solution",
    "iterate_initial_values",
    "product_sum_initial_values",
    "product_coefficients",
    "check_conditions",
    "limit_periodic_solution",
    "cauchy_diagnostics",
    "window_coefficients",
    "assemble_coefficients",
    "rk4_window_initial_values",
    "validate_family",
]

RATIO_TEST_MARGIN = 0.05


class FamilyConsistencyWarning(UserWarning):
    """The supplied family cannot come from a single global coefficient."""


@dataclass(frozen=True)
class PerturbationFamily:
    """Indexed perturbations alpha(i, t), beta(i, t) for windows i >= 1.

    Window 0 is the unperturbed base; by convention alpha and beta are
    identically zero there.  index_max is the truncation used by the
    series diagnostics.
    """

    alpha: Callable
    beta: Callable
    index_max: int = 64

    def __post_init__(self):
        if self.index_max < 1:
            raise ValueError("index_max must be >= 1")

    def alpha_at(self, i: int, t):
        t = np.asarray(t, dtype=float)
        if i == 0:
            return np.zeros_like(t)
        return np.asarray(self.alpha(i, t), dtype=float)

    def beta_at(self, i: int, t):
        t = np.asarray(t, dtype=float)
        if i == 0:
            return np.zeros_like(t)
        return np.asarray(self.beta(i, t), dtype=float)


def _require_periodic_base(base: ProblemInstance):
    ts = np.linspace(0.0, base.period, 17)
    if np.max(np.abs(np.asarray(base.b.drift(ts), dtype=float))) > 0:
        raise ValueError(
            "the perturbed-window theory needs a base with periodic forcing "
            "(declared drift identically zero)")


class _WindowContext:
    """Cached per-index window integrals for one (family, base) pair."""

    def __init__(self, fam: PerturbationFamily, base: ProblemInstance):
        _require_periodic_base(base)
        self.fam = fam
        self.base = base
        self.period = base.period
        self.lam = base.lam
        self.a_period = base.cache.period_exponent
        self.ratio = base.cache.contraction_ratio   # NonContracting guard
        # largest representable time still inside the window: periodized
        # bases wrap at exactly t = T, and window integrals must see the
        # window's own (left-limit) value there
        self._t_inside = np.nextafter(self.period, 0.0)
        self._alpha_tables: dict[int, _CumulativeIntegral | None] = {0: None}
        self._alpha_hat_T: dict[int, float] = {0: 0.0}
        self._beta_hat_T: dict[int, float] = {}
        self._beta_plain_T: dict[int, float] = {}

    def window_forcing(self, s):
        s = np.minimum(np.asarray(s, dtype=float), self._t_inside)
        return np.asarray(self.base.b(s), dtype=float)

    # -- hatted quantities ---------------------------------------------------

    def alpha_table(self, i: int):
        if i not in self._alpha_tables:
            self._alpha_tables[i] = _CumulativeIntegral(
                lambda s: self.fam.alpha_at(i, s), self.period)
        return self._alpha_tables[i]

    def alpha_hat(self, i: int, s):
        table = self.alpha_table(i)
        if table is None:
            return np.zeros_like(np.asarray(s, dtype=float))
        return np.asarray(table(s), dtype=float)

    def alpha_hat_T(self, i: int) -> float:
        if i not in self._alpha_hat_T:
            self._alpha_hat_T[i] = float(self.alpha_table(i).total)
        return self._alpha_hat_T[i]

    def beta_hat_integrand(self, i: int):
        base = self.base

        def integrand(s):
            s = np.asarray(s, dtype=float)
            forcing = self.window_forcing(s) + self.fam.beta_at(i, s)
            expo = -base.cache.exponent(s) - self.lam * self.alpha_hat(i, s)
            return forcing * np.exp(expo)

        return integrand

    def beta_hat(self, i: int, t: float) -> float:
        return integrate(self.beta_hat_integrand(i), 0.0, float(t), self.base.quad_cfg)

    def beta_hat_T(self, i: int) -> float:
        if i not in self._beta_hat_T:
            self._beta_hat_T[i] = self.beta_hat(i, self.period)
        return self._beta_hat_T[i]

    def beta_plain_T(self, i: int) -> float:
        """One-period integral of beta_i e^{-a}: the summable perturbation part."""
        if i not in self._beta_plain_T:
            base = self.base

            def integrand(s):
                s = np.asarray(s, dtype=float)
                return self.fam.beta_at(i, s) * np.exp(-base.cache.exponent(s))

            self._beta_plain_T[i] = integrate(integrand, 0.0, self.period,
                                              base.quad_cfg)
        return self._beta_plain_T[i]

    def mu(self, i: int) -> float:
        """Per-window multiplier exp(a(T) + lam * alpha_hat_i(T))."""
        return math.exp(self.a_period + self.lam * self.alpha_hat_T(i))

    # -- recursion and product-sum --------------------------------------------

    def initial_values(self, n_max: int) -> np.ndarray:
        """y_1(0), ..., y_{n_max+1}(0) by the one-step recursion."""
        values = np.empty(n_max + 1)
        y = self.base.y0
        for n in range(n_max + 1):
            y = self.mu(n) * (y + self.beta_hat_T(n))
            values[n] = y
        return values

    def delta_coefficients(self, n: int) -> np.ndarray:
        """delta_i^{(n)} = exp(i a(T) + lam (ahat_n + ... + ahat_{n+1-i})), i=1..n."""
        deltas = np.empty(n)
        suffix = 0.0
        for i in range(1, n + 1):
            suffix += self.alpha_hat_T(n + 1 - i)
            deltas[i - 1] = math.exp(i * self.a_period + self.lam * suffix)
        return deltas

    def product_sum(self, n: int) -> float:
        """y_{n+1}(0) = sum_i delta_i^{(n)} bhat_{n-i+1} + delta_n^{(n)} y(T)."""
        if n < 1:
            raise ValueError("n must be >= 1")
        deltas = self.delta_coefficients(n)
        terms = [deltas[i - 1] * self.beta_hat_T(n - i + 1) for i in range(1, n + 1)]
        y_period = self.mu(0) * (self.base.y0 + self.beta_hat_T(0))
        return math.fsum(terms) + deltas[n - 1] * y_period

    def z_value(self, n: int) -> float:
        deltas = self.delta_coefficients(n)
        return math.fsum(deltas[i - 1] * self.beta_hat_T(n - i + 1)
                         for i in range(1, n + 1))

    def envelope(self) -> float:
        """K = one-period integral of (|b| + beta_1) e^{-a - lam*ahat_1}."""
        base = self.base

        def integrand(s):
            s = np.asarray(s, dtype=float)
            mag = np.abs(self.window_forcing(s)) + self.fam.beta_at(1, s)
            return mag * np.exp(-base.cache.exponent(s) - self.lam * self.alpha_hat(1, s))

        return integrate(integrand, 0.0, self.period, base.quad_cfg)

    def forcing_magnitude(self) -> float:
        """One-period integral of (|b| + beta_1) e^{-a} (no rate perturbation)."""
        base = self.base

        def integrand(s):
            s = np.asarray(s, dtype=float)
            mag = np.abs(self.window_forcing(s)) + self.fam.beta_at(1, s)
            return mag * np.exp(-base.cache.exponent(s))

        return integrate(integrand, 0.0, self.period, base.quad_cfg)

    def base_forcing_integral(self) -> float:
        """One-period integral of b e^{-a} with the window's own endpoint value."""
        base = self.base

        def integrand(s):
            s = np.asarray(s, dtype=float)
            return self.window_forcing(s) * np.exp(-base.cache.exponent(s))

        return integrate(integrand, 0.0, self.period, base.quad_cfg)


# --- spec operations ----------------------------------------------------------

def alpha_hat(fam: PerturbationFamily, i: int, t: float,
              quad_cfg=DEFAULT_QUAD) -> float:
    """Window integral of alpha_i over [0, t]."""
    if i < 0:
        raise ValueError("i must be >= 0")
    if i == 0:
        return 0.0
    return integrate(lambda s: fam.alpha_at(i, s), 0.0, float(t), quad_cfg)


def beta_hat(fam: PerturbationFamily, i: int, t: float,
             base: ProblemInstance) -> float:
    """Window integral of (b + beta_i) e^{-a - lam*ahat_i} over [0, t]."""
    if i < 0:
        raise ValueError("i must be >= 0")
    return _WindowContext(fam, base).beta_hat(i, t)


def window_solution(fam: PerturbationFamily, base: ProblemInstance,
                    n: int, t: float) -> float:
    """y_n(t) = exp(a(t) + lam*ahat_n(t)) * (y_n(0) + bhat_n(t)) for t in [0, T]."""
    if n < 0:
        raise ValueError("n must be >= 0")
    ctx = _WindowContext(fam, base)
    y_n0 = base.y0 if n == 0 else float(ctx.initial_values(n - 1)[-1])
    expo = base.cache.exponent(float(t)) + ctx.lam * float(ctx.alpha_hat(n, float(t)))
    return math.exp(expo) * (y_n0 + ctx.beta_hat(n, float(t)))


def iterate_initial_values(fam: PerturbationFamily, base: ProblemInstance,
                           n_max: int) -> np.ndarray:
    """The recursion y_{n+1}(0) = mu_n (y_n(0) + bhat_n) started at y_0(0)=y0.

    Returns [y_1(0), ..., y_{n_max+1}(0)].
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    return _WindowContext(fam, base).initial_values(n_max)


def product_sum_initial_values(fam: PerturbationFamily, base: ProblemInstance,
                               n: int) -> float:
    """y_{n+1}(0) by the explicit product-sum expansion of the recursion."""
    return _WindowContext(fam, base).product_sum(n)


def product_coefficients(fam: PerturbationFamily, base: ProblemInstance,
                         n: int) -> np.ndarray:
    """The expansion coefficients delta_i^{(n)}, i = 1..n; each is <=
    ratio^i, with equality exactly when alpha vanishes."""
    return _WindowContext(fam, base).delta_coefficients(n)


@dataclass(frozen=True)
class SeriesDiagnostics:
    """Sampled verdict on the sufficient conditions for a periodic limit.

    alpha_hats/beta_hats hold the window integrals at the period; the
    series terms carry the exp(-i a(T)) weights.  The beta series weighs
    the perturbation-only integrals (beta_i e^{-a}): the full hatted
    integrals tend to the one-period forcing integral, a nonzero constant
    whenever b is nonzero, so weighting those could never sum and would
    say nothing about the family itself.
    """

    ratio: float
    envelope: float
    alpha_hats: np.ndarray
    beta_hats: np.ndarray
    beta_weights: np.ndarray
    alpha_series_terms: np.ndarray
    beta_series_terms: np.ndarray
    alpha_series_partial: np.ndarray
    beta_series_partial: np.ndarray
    checks: dict
    verdict: str                  # pass | fail | indeterminate | degenerate-periodic
    notes: tuple = ()

    @property
    def passed(self) -> bool:
        return self.verdict in ("pass", "degenerate-periodic")


def _ratio_test(terms: np.ndarray, margin: float = RATIO_TEST_MARGIN) -> str:
    if np.all(terms == 0):
        return "pass"
    half = len(terms) // 2
    window = terms[half:]
    if np.any(window <= 0):
        return "indeterminate"
    ratios = window[1:] / window[:-1]
    if ratios.size == 0:
        return "indeterminate"
    worst = float(np.max(ratios))
    if worst <= 1.0 - margin:
        return "pass"
    if worst >= 1.0:
        return "fail"
    return "indeterminate"


def check_conditions(fam: PerturbationFamily, base: ProblemInstance,
                     sample_points: int = 129) -> SeriesDiagnostics:
    """Sampled positivity/monotonicity plus ratio tests on the weighted series.

    The ratio test runs over the last half of the truncation window with a
    0.05 margin: pass when every successive-term ratio stays below 0.95,
    fail when some ratio reaches 1, indeterminate in between.  The all-zero
    family short-circuits to the degenerate-periodic verdict (plain
    periodic coefficients).
    """
    if fam.index_max < 8:
        raise ValueError("index_max must be >= 8 for a meaningful verdict")
    ctx = _WindowContext(fam, base)
    n = fam.index_max
    grid = np.linspace(0.0, base.period, sample_points)

    alpha_samples = np.stack([fam.alpha_at(i, grid) for i in range(1, n + 1)])
    beta_samples = np.stack([fam.beta_at(i, grid) for i in range(1, n + 1)])

    notes = tuple(validate_family(fam, base))
    for note in notes:
        warnings.warn(note, FamilyConsistencyWarning, stacklevel=2)

    alpha_hats = np.array([ctx.alpha_hat_T(i) for i in range(1, n + 1)])
    beta_hats = np.array([ctx.beta_hat_T(i) for i in range(1, n + 1)])
    beta_weights = np.array([ctx.beta_plain_T(i) for i in range(1, n + 1)])
    weights = ctx.ratio ** (-np.arange(1, n + 1, dtype=float))
    alpha_terms = weights * alpha_hats
    beta_terms = weights * beta_weights
    envelope = ctx.envelope()

    if np.all(alpha_samples == 0) and np.all(beta_samples == 0):
        checks = {key: "degenerate" for key in (
            "positivity_alpha", "positivity_beta", "monotone_alpha",
            "monotone_beta", "series_alpha", "series_beta")}
        return SeriesDiagnostics(
            ratio=ctx.ratio, envelope=envelope, alpha_hats=alpha_hats,
            beta_hats=beta_hats, beta_weights=beta_weights,
            alpha_series_terms=alpha_terms, beta_series_terms=beta_terms,
            alpha_series_partial=np.cumsum(alpha_terms),
            beta_series_partial=np.cumsum(beta_terms),
            checks=checks, verdict="degenerate-periodic", notes=notes)

    checks = {
        "positivity_alpha": "pass" if np.all(alpha_samples > 0) else "fail",
        "positivity_beta": "pass" if np.all(beta_samples > 0) else "fail",
        "monotone_alpha": ("pass" if np.all(alpha_samples[1:] <= alpha_samples[:-1])
                           else "fail"),
        "monotone_beta": ("pass" if np.all(beta_samples[1:] <= beta_samples[:-1])
                          else "fail"),
        "series_alpha": _ratio_test(alpha_terms),
        "series_beta": _ratio_test(beta_terms),
    }
    statuses = set(checks.values())
    if "fail" in statuses:
        verdict = "fail"
    elif "indeterminate" in statuses:
        verdict = "indeterminate"
    else:
        verdict = "pass"

    return SeriesDiagnostics(
        ratio=ctx.ratio, envelope=envelope, alpha_hats=alpha_hats,
        beta_hats=beta_hats, beta_weights=beta_weights,
        alpha_series_terms=alpha_terms, beta_series_terms=beta_terms,
        alpha_series_partial=np.cumsum(alpha_terms),
        beta_series_partial=np.cumsum(beta_terms),
        checks=checks, verdict=verdict, notes=notes)


@dataclass(frozen=True)
class PeriodicLimitSolution:
    """The T-periodic limit of the window solutions.

    limit_value = r/(1-r) * (one-period integral of b e^{-a}) with
    r = exp(a(T)); the evaluator is e^{a(t)} [limit_value + int_0^t b e^{-a}].
    """

    base: ProblemInstance
    limit_value: float
    diagnostics: SeriesDiagnostics

    def __call__(self, t):
        base = self.base
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t)
        out = np.array([
            math.exp(base.cache.exponent(float(x)))
            * (self.limit_value + base.forcing_integral(float(x)))
            for x in flat]).reshape(t.shape)
        if out.ndim == 0:
            return float(out)
        return out


def limit_periodic_solution(fam: PerturbationFamily, base: ProblemInstance,
                            diagnostics: SeriesDiagnostics | None = None,
                            force: bool = False) -> PeriodicLimitSolution:
    """Limit of the window solutions as a T-periodic function.

    Requires a passing (or degenerate-periodic) verdict; pass force=True
    to compute anyway when the verdict is fail/indeterminate.
    """
    diag = diagnostics if diagnostics is not None else check_conditions(fam, base)
    if not diag.passed and not force:
        raise ConditionsNotVerified(
            f"sufficient-condition verdict is '{diag.verdict}'; "
            "pass force=True to compute the limit anyway")
    ctx = _WindowContext(fam, base)
    limit_value = ctx.ratio / (1.0 - ctx.ratio) * ctx.base_forcing_integral()
    return PeriodicLimitSolution(base, limit_value, diag)


@dataclass(frozen=True)
class CauchyGap:
    n: int
    m: int
    gap: float
    bound: float

    @property
    def within(self) -> bool:
        return self.gap <= self.bound


@dataclass(frozen=True)
class CauchyDiagnostics:
    """Empirical Cauchy behavior of the product-sum partial values Z_n,
    with computable envelope bounds on each increment."""

    n_values: np.ndarray
    z_values: np.ndarray
    gaps: tuple
    ratio: float
    envelope: float

    @property
    def all_within(self) -> bool:
        return all(g.within for g in self.gaps)


def cauchy_diagnostics(fam: PerturbationFamily, base: ProblemInstance,
                       n_list: Sequence[int]) -> CauchyDiagnostics:
    """Z_n values for each n, plus |Z_m - Z_n| against its envelope bound.

    The bound combines the tail envelope K * sum of ratio^i over i in
    (n, m] with the weighted alpha tails: one part bounds how much the
    hatted forcing integrals can move between windows (the bound carries
    the exp(-lam*ahat_1) amplification so it genuinely dominates), the
    other bounds the drift of the expansion coefficients.
    """
    n_list = list(n_list)
    if any(n < 1 for n in n_list):
        raise ValueError("window indices must be >= 1")
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be strictly ascending")
    ctx = _WindowContext(fam, base)
    rho1 = ctx.ratio
    k_env = ctx.envelope()
    lam_abs = abs(ctx.lam)
    amp = math.exp(-ctx.lam * ctx.alpha_hat_T(1))
    base_mag = ctx.forcing_magnitude()

    z_values = np.array([ctx.z_value(n) for n in n_list])

    gaps = []
    for (n, z_n), (m, z_m) in zip(zip(n_list, z_values), zip(n_list[1:], z_values[1:])):
        j1 = k_env * rho1 ** (n + 1) * (1.0 - rho1 ** (m - n)) / (1.0 - rho1)
        hat_move = math.fsum(
            rho1 ** i * (lam_abs * amp * base_mag * ctx.alpha_hat_T(n - i + 1)
                         + amp * ctx.beta_plain_T(n - i + 1))
            for i in range(1, n + 1))
        coeff_move = k_env * lam_abs * rho1 ** (n + 1) / (1.0 - rho1) * math.fsum(
            (rho1 ** (-i) - 1.0) * ctx.alpha_hat_T(i) for i in range(1, n + 1))
        bound = j1 + hat_move + coeff_move
        gaps.append(CauchyGap(n, m, float(abs(z_m - z_n)), float(bound)))

    return CauchyDiagnostics(np.array(n_list), z_values, tuple(gaps),
                             rho1, k_env)


# --- assembled coefficients and the RK4 oracle ---------------------------------

def window_coefficients(fam: PerturbationFamily, base: ProblemInstance, i: int):
    """(rho_i, b_i) on window-local time: base shape plus the index-i bump.

    At exactly s = T a periodized base would already wrap to the next
    window; evaluation is clamped just inside so integrator stages at the
    window end see the window's own (left-limit) values.
    """
    inside = np.nextafter(base.period, 0.0)

    def rho_i(s):
        s = np.minimum(np.asarray(s, dtype=float), inside)
        return np.asarray(base.rho(s), dtype=float) + fam.alpha_at(i, s)

    def b_i(s):
        s = np.minimum(np.asarray(s, dtype=float), inside)
        return np.asarray(base.b(s), dtype=float) + fam.beta_at(i, s)

    return rho_i, b_i


def assemble_coefficients(fam: PerturbationFamily, base: ProblemInstance):
    """Global (rho, b) built window-by-window from base + family."""
    period = base.period

    def build(component):
        def global_fn(t):
            t = np.asarray(t, dtype=float)
            n, r = split_periods(t, period)
            flat_n = np.atleast_1d(n).astype(int)
            flat_r = np.atleast_1d(r)
            out = np.empty_like(flat_r)
            for idx in np.unique(flat_n):
                sel = flat_n == idx
                rho_i, b_i = window_coefficients(fam, base, int(idx))
                fn = rho_i if component == "rho" else b_i
                out[sel] = fn(flat_r[sel])
            out = out.reshape(np.shape(r))
            if out.ndim == 0:
                return float(out)
            return out

        return global_fn

    return build("rho"), build("b")


def rk4_window_initial_values(fam: PerturbationFamily, base: ProblemInstance,
                              n_max: int, step: float = 1e-3) -> np.ndarray:
    """Window initial values [y_0(0), y_1(0), ..., y_{n_max+1}(0)] from RK4.

    Integrates the assembled equation window by window (the coefficients
    may jump at window boundaries; the state is continuous), which keeps
    the full fourth-order accuracy of the integrator.
    """
    values = np.empty(n_max + 2)
    values[0] = base.y0
    y = base.y0
    # snap the step so it divides the window exactly
    n_steps = max(1, round(base.period / step))
    cfg = IntegratorConfig(step=base.period / n_steps, t_max=base.period)
    for i in range(n_max + 1):
        rho_i, b_i = window_coefficients(fam, base, i)
        traj = rk4_solve(base.lam, rho_i, b_i, y, cfg)
        y = float(traj.values[-1])
        values[i + 1] = y
    return values


def validate_family(fam: PerturbationFamily, base: ProblemInstance,
                    max_shift: int = 5, samples: int = 64,
                    tol: float = 1e-8) -> list:
    """Sample the assembled rho against its defining window relation.

    The relation must hold for every t, not only in the first window; a
    family whose indices do not compose (alpha_{i+j} != alpha_j + shifted
    alpha_i) cannot come from any single global coefficient.  Violations
    are reported as warnings, not errors: all window computations remain
    well defined, they just describe the assembled coefficient rather
    than a globally consistent one.
    """
    rho_global, b_global = assemble_coefficients(fam, base)
    ts = np.linspace(0.0, 2.0 * base.period, samples, endpoint=False)
    messages = []
    for i in range(1, max_shift + 1):
        dev_rho = np.max(np.abs(rho_global(ts + i * base.period)
                                - rho_global(ts) - fam.alpha_at(i, ts)))
        dev_b = np.max(np.abs(b_global(ts + i * base.period)
                              - b_global(ts) - fam.beta_at(i, ts)))
        dev = max(float(dev_rho), float(dev_b))
        if dev > tol:
            messages.append(
                f"family is not globally consistent at shift i={i}: assembled "
                f"coefficients deviate from the window relation by {dev:.3e}")
    return messages
