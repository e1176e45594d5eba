"""Scenario configuration files.

Flat INI-style text: ``key = value`` lines under ``[section]`` headers,
with coefficient functions as quoted expression strings in the language
of :mod:`drift_ode.exprparse`.  Scalar values are constant expressions,
so ``period = pi`` and ``t_max = 4*pi`` work.

Sections:

``[problem]``   lambda, period, rho, b, y0 (required), beta (default "0")
``[family]``    alpha, beta (expressions in i and t), index_max
``[system]``    row1..rowN, input1..inputN, drift1..driftN (default "0"),
                c0, labels (optional)
``[output]``    dir, t_min, t_max, points, n_windows, step (all optional)
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import exprparse
from .asymptotic import ProblemInstance
from .compartments import CompartmentSystem
from .errors import ConfigError, ExpressionError
from .numerics import DEFAULT_QUAD
from .perturbed import PerturbationFamily
from .signal import DriftedSignal, PeriodicSignal

__all__ = ["ScenarioConfig", "FamilySpec", "SystemSpec", "OutputSpec",
           "load_scenario"]


def _unquote(raw: str) -> str:
    text = raw.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in ("'", '"'):
        return text[1:-1]
    return text


@dataclass(frozen=True)
class FamilySpec:
    alpha_src: str
    beta_src: str
    index_max: int


@dataclass(frozen=True)
class SystemSpec:
    matrix: np.ndarray
    input_srcs: tuple
    drift_srcs: tuple
    initial: np.ndarray
    labels: tuple | None


@dataclass(frozen=True)
class OutputSpec:
    directory: str | None = None
    t_min: float = 0.0
    t_max: float | None = None     # default resolves to 4 periods
    points: int = 257
    n_windows: int | None = None   # per-command default
    step: float = 1e-3


@dataclass(frozen=True)
class ScenarioConfig:
    path: str
    lam: float
    period: float
    rho_src: str
    b_src: str
    beta_src: str
    y0: float
    family: FamilySpec | None
    system: SystemSpec | None
    output: OutputSpec

    # -- resolved grid -------------------------------------------------------

    def grid(self) -> np.ndarray:
        t_max = self.output.t_max
        if t_max is None:
            t_max = 4.0 * self.period
        return np.linspace(self.output.t_min, t_max, self.output.points)

    def windows(self, default: int = 5) -> int:
        n = self.output.n_windows
        return default if n is None else n

    # -- builders --------------------------------------------------------------

    def problem_instance(self, quad_cfg=DEFAULT_QUAD) -> ProblemInstance:
        rho = PeriodicSignal(exprparse.compile_expr(self.rho_src, "t"), self.period)
        beta = PeriodicSignal(exprparse.compile_expr(self.beta_src, "t"), self.period)
        b = DriftedSignal(exprparse.compile_expr(self.b_src, "t"), self.period, beta)
        return ProblemInstance.build(self.lam, rho, b, self.y0, quad_cfg)

    def base_instance(self, quad_cfg=DEFAULT_QUAD) -> ProblemInstance:
        """Window-convergence base: b restricted to [0, period) and extended
        periodically, with zero declared drift (beta is ignored here)."""
        rho = PeriodicSignal(exprparse.compile_expr(self.rho_src, "t"), self.period)
        b_window = exprparse.compile_expr(self.b_src, "t")
        b = DriftedSignal.from_periodic(
            PeriodicSignal.from_window(b_window, self.period))
        return ProblemInstance.build(self.lam, rho, b, self.y0, quad_cfg)

    def perturbation_family(self) -> PerturbationFamily:
        if self.family is None:
            raise ConfigError(f"{self.path}: no [family] section")
        alpha_ast = exprparse.parse(self.family.alpha_src)
        beta_ast = exprparse.parse(self.family.beta_src)

        def alpha(i, t):
            return exprparse.evaluate(alpha_ast, {"i": float(i), "t": t})

        def beta(i, t):
            return exprparse.evaluate(beta_ast, {"i": float(i), "t": t})

        return PerturbationFamily(alpha, beta, self.family.index_max)

    def compartment_system(self) -> CompartmentSystem:
        if self.system is None:
            raise ConfigError(f"{self.path}: no [system] section")
        rho = PeriodicSignal(exprparse.compile_expr(self.rho_src, "t"), self.period)
        inputs = []
        for input_src, drift_src in zip(self.system.input_srcs,
                                        self.system.drift_srcs):
            drift = PeriodicSignal(exprparse.compile_expr(drift_src, "t"),
                                   self.period)
            inputs.append(DriftedSignal(exprparse.compile_expr(input_src, "t"),
                                        self.period, drift))
        return CompartmentSystem.build(self.system.matrix, rho, inputs,
                                       self.system.initial, self.system.labels)


class _SectionReader:
    def __init__(self, path: str, section: str, parser: configparser.ConfigParser):
        self.path = path
        self.section = section
        self.parser = parser

    def _fail(self, key: str, why: str):
        raise ConfigError(f"{self.path}: [{self.section}] {key}: {why}")

    def raw(self, key: str, default: str | None = None) -> str:
        if not self.parser.has_option(self.section, key):
            if default is None:
                self._fail(key, "missing required key")
            return default
        return _unquote(self.parser.get(self.section, key))

    def scalar(self, key: str, default: float | None = None) -> float:
        raw = self.raw(key, None if default is None else repr(default))
        try:
            return exprparse.evaluate(exprparse.parse(raw))
        except ExpressionError as exc:
            self._fail(key, str(exc))

    def integer(self, key: str, default: int | None = None) -> int:
        value = self.scalar(key, None if default is None else float(default))
        if value != int(value):
            self._fail(key, f"expected an integer, got {value}")
        return int(value)

    def expression(self, key: str, default: str | None = None) -> str:
        raw = self.raw(key, default)
        try:
            exprparse.parse(raw)
        except ExpressionError as exc:
            self._fail(key, str(exc))
        return raw

    def floats(self, key: str) -> np.ndarray:
        raw = self.raw(key)
        try:
            return np.array([float(x) for x in raw.split()])
        except ValueError:
            self._fail(key, f"expected space-separated numbers, got {raw!r}")


def load_scenario(path) -> ScenarioConfig:
    """Parse and validate a scenario file; ConfigError carries the location."""
    path = Path(path)
    parser = configparser.ConfigParser(interpolation=None,
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    if not parser.has_section("problem"):
        raise ConfigError(f"{path}: missing required [problem] section")
    prob = _SectionReader(str(path), "problem", parser)
    lam = prob.scalar("lambda")
    period = prob.scalar("period")
    if not period > 0:
        raise ConfigError(f"{path}: [problem] period must be > 0")
    rho_src = prob.expression("rho")
    b_src = prob.expression("b")
    beta_src = prob.expression("beta", "0")
    y0 = prob.scalar("y0")

    family = None
    if parser.has_section("family"):
        fam = _SectionReader(str(path), "family", parser)
        family = FamilySpec(
            alpha_src=fam.expression("alpha"),
            beta_src=fam.expression("beta"),
            index_max=fam.integer("index_max", 64),
        )
        if family.index_max < 8:
            raise ConfigError(f"{path}: [family] index_max must be >= 8")

    system = None
    if parser.has_section("system"):
        sysr = _SectionReader(str(path), "system", parser)
        rows = []
        while parser.has_option("system", f"row{len(rows) + 1}"):
            rows.append(sysr.floats(f"row{len(rows) + 1}"))
        if not rows:
            raise ConfigError(f"{path}: [system] needs row1..rowN")
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ConfigError(f"{path}: [system] matrix must be square "
                              f"({n} rows of {n} entries)")
        input_srcs = tuple(sysr.expression(f"input{k + 1}") for k in range(n))
        drift_srcs = tuple(sysr.expression(f"drift{k + 1}", "0") for k in range(n))
        initial = sysr.floats("c0")
        if len(initial) != n:
            raise ConfigError(f"{path}: [system] c0 needs {n} entries")
        labels = None
        if parser.has_option("system", "labels"):
            labels = tuple(sysr.raw("labels").split())
            if len(labels) != n:
                raise ConfigError(f"{path}: [system] labels needs {n} names")
        system = SystemSpec(np.array(rows), input_srcs, drift_srcs,
                            initial, labels)

    output = OutputSpec()
    if parser.has_section("output"):
        out = _SectionReader(str(path), "output", parser)
        directory = out.raw("dir", "") or None
        t_min = out.scalar("t_min", 0.0)
        t_max = (out.scalar("t_max") if parser.has_option("output", "t_max")
                 else None)
        points = out.integer("points", 257)
        n_windows = (out.integer("n_windows")
                     if parser.has_option("output", "n_windows") else None)
        step = out.scalar("step", 1e-3)
        if points < 2:
            raise ConfigError(f"{path}: [output] points must be >= 2")
        if t_max is not None and not t_max > t_min:
            raise ConfigError(f"{path}: [output] needs t_max > t_min")
        if not step > 0:
            raise ConfigError(f"{path}: [output] step must be > 0")
        if n_windows is not None and n_windows < 1:
            raise ConfigError(f"{path}: [output] n_windows must be >= 1")
        output = OutputSpec(directory, t_min, t_max, points, n_windows, step)

    return ScenarioConfig(
        path=str(path), lam=lam, period=period, rho_src=rho_src,
        b_src=b_src, beta_src=beta_src, y0=y0,
        family=family, system=system, output=output)
