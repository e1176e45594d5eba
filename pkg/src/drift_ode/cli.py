"""Command-line front door: scenario configs in, CSV + gnuplot scripts out.

Subcommands:

* ``analyze <config>``          constants, drift function, asymptotic
                                solution and window tables for one scenario
* ``reproduce-paper``           regenerate the reference-scenario figure
                                data (fig1..fig4 CSVs) from first principles
* ``converge <config>``         window initial-value convergence table and
                                sufficient-condition verdicts
* ``soil <config>``             modal analysis + full-system trajectory for
                                a compartment system
* ``parse-check <expr>``        parse an expression and echo its canonical
                                form

All output paths are relative to ``--out`` (default ``./out``).  Output is
deterministic: the same config and version produce byte-identical files.
``DRIFT_ODE_THREADS`` caps the worker threads used for independent
window/mode computations (default 1); results do not depend on it.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import exprparse
from .asymptotic import asymptotic_solution, exact_solution, transient
from .compartments import analyze_system, simulate
from .config import ScenarioConfig, load_scenario
from .errors import (
    ConditionsNotVerified,
    ConfigError,
    ExpressionSyntaxError,
    MathDomainError,
    UnboundVariable,
    UnknownIdentifier,
)
from .numerics import IntegratorConfig
from .perturbed import (
    check_conditions,
    iterate_initial_values,
    limit_periodic_solution,
    product_sum_initial_values,
    rk4_window_initial_values,
)

GOLDEN_SCENARIO = {
    "lambda": "-1", "period": "pi", "rho": "sin(t)^2", "b": "t",
    "beta": "pi", "y0": "1",
}


# --- small helpers -------------------------------------------------------------

def _thread_count() -> int:
    raw = os.environ.get("DRIFT_ODE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_ordered(fn, items):
    """Map preserving order; parallel when DRIFT_ODE_THREADS > 1."""
    items = list(items)
    workers = _thread_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(cell if isinstance(cell, str) else _fmt(cell)
                              for cell in row) + "\n")


def _write_text(path: Path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _gnuplot(csv_name: str, columns, ylabel: str, out_name: str) -> str:
    plots = ", \\\n     ".join(
        f"'{csv_name}' using 1:{idx} with lines title '{title}'"
        for idx, title in columns)
    return (
        "set datafile separator ','\n"
        "set key top left\n"
        "set grid\n"
        "set xlabel 't'\n"
        f"set ylabel '{ylabel}'\n"
        f"set output '{out_name}'\n"
        "set terminal pngcairo size 900,600\n"
        f"plot {plots}\n")


def _constants_rows(sol):
    return [
        ("period_exponent", _fmt(sol.problem.cache.period_exponent)),
        ("contraction_ratio", _fmt(sol.ratio)),
        ("limit_initial_value", _fmt(sol.limit_value)),
        ("drift_at_zero", _fmt(sol.gamma0)),
    ]


def _golden_config() -> ScenarioConfig:
    from .config import OutputSpec

    return ScenarioConfig(
        path="<builtin>",
        lam=float(GOLDEN_SCENARIO["lambda"]),
        period=float(np.pi),
        rho_src=GOLDEN_SCENARIO["rho"],
        b_src=GOLDEN_SCENARIO["b"],
        beta_src=GOLDEN_SCENARIO["beta"],
        y0=float(GOLDEN_SCENARIO["y0"]),
        family=None, system=None, output=OutputSpec())


# --- commands -------------------------------------------------------------------

def cmd_analyze(cfg: ScenarioConfig, out_dir: Path) -> int:
    p = cfg.problem_instance()
    sol = asymptotic_solution(p)
    y = exact_solution(p)
    grid = cfg.grid()
    n_windows = cfg.windows(default=5)
    period = cfg.period

    _write_csv(out_dir / "constants.csv", ("name", "value"),
               _constants_rows(sol))

    gamma_vals = sol.gamma(grid)
    _write_csv(out_dir / "gamma.csv", ("t", "gamma"), zip(grid, gamma_vals))

    y_inf_vals = sol.y_inf(grid)
    _write_csv(out_dir / "y_inf.csv", ("t", "y_inf"), zip(grid, y_inf_vals))

    def window_columns(n):
        y_n = y(grid + n * period)
        z_n = y_inf_vals + n * gamma_vals
        d_n = transient(p, sol, n, grid)
        return y_n, z_n, d_n

    per_window = _map_ordered(window_columns, range(n_windows))
    header = ["t"]
    for n in range(n_windows):
        header += [f"y{n}", f"z{n}", f"delta{n}"]
    rows = []
    for j, t in enumerate(grid):
        row = [t]
        for y_n, z_n, d_n in per_window:
            row += [y_n[j], z_n[j], d_n[j]]
        rows.append(row)
    _write_csv(out_dir / "windows.csv", header, rows)

    _write_text(out_dir / "plot.gp",
                _gnuplot("gamma.csv", [(2, "gamma")], "drift", "gamma.png")
                + "\nreset\n"
                + _gnuplot("y_inf.csv", [(2, "y_inf")], "asymptotic solution",
                           "y_inf.png"))
    return 0


def cmd_reproduce_paper(out_dir: Path) -> int:
    cfg = _golden_config()
    p = cfg.problem_instance()
    sol = asymptotic_solution(p)
    y = exact_solution(p)
    period = cfg.period

    _write_csv(out_dir / "constants.csv", ("name", "value"),
               _constants_rows(sol))

    # fig 1: the periodic drift function
    t1 = np.linspace(0.0, 4 * period, 513)
    _write_csv(out_dir / "fig1.csv", ("t", "gamma"), zip(t1, sol.gamma(t1)))
    _write_text(out_dir / "fig1.gp",
                _gnuplot("fig1.csv", [(2, "gamma")], "drift", "fig1.png"))

    # fig 2: asymptotic solution and its period-shift; the shift gap equals gamma
    t2 = np.linspace(0.0, 4 * period, 513)
    cols = _map_ordered(lambda ts: sol.y_inf(ts), [t2, t2 + period])
    y_inf_vals, y_inf_shift = cols
    gamma_vals = sol.gamma(t2)
    _write_csv(out_dir / "fig2.csv",
               ("t", "y_inf", "y_inf_shifted", "shift_gap", "gamma"),
               zip(t2, y_inf_vals, y_inf_shift,
                   y_inf_shift - y_inf_vals, gamma_vals))
    _write_text(out_dir / "fig2.gp",
                _gnuplot("fig2.csv", [(2, "y_inf"), (3, "y_inf shifted")],
                         "asymptotic solution", "fig2.png"))

    # fig 3: first window vs its large-n approximation
    t3 = np.linspace(0.0, 10.0, 501)
    y1, z1 = _map_ordered(lambda fn: fn(), [
        lambda: y(t3 + period),
        lambda: sol.y_inf(t3) + sol.gamma(t3),
    ])
    _write_csv(out_dir / "fig3.csv", ("t", "y1", "z1", "gap"),
               zip(t3, y1, z1, np.abs(y1 - z1)))
    _write_text(out_dir / "fig3.gp",
                _gnuplot("fig3.csv", [(2, "window 1"), (3, "approximation")],
                         "y", "fig3.png"))

    # fig 4: window 5 and its period-shift (drift of the solution itself)
    t4 = np.linspace(0.0, period, 257)
    y5, y5_shift = _map_ordered(lambda shift: y(t4 + shift),
                                [5 * period, 6 * period])
    _write_csv(out_dir / "fig4.csv",
               ("t", "y5", "y5_shifted", "shift_gap", "gamma"),
               zip(t4, y5, y5_shift, y5_shift - y5, sol.gamma(t4)))
    _write_text(out_dir / "fig4.gp",
                _gnuplot("fig4.csv", [(2, "window 5"), (3, "window 5 shifted")],
                         "y", "fig4.png"))
    return 0


def cmd_converge(cfg: ScenarioConfig, out_dir: Path, force: bool) -> int:
    if cfg.family is None:
        raise ConfigError(f"{cfg.path}: converge needs a [family] section")
    base = cfg.base_instance()
    fam = cfg.perturbation_family()

    diag = check_conditions(fam, base)
    forced = False
    if not diag.passed:
        if not force:
            raise ConditionsNotVerified(
                f"sufficient-condition verdict is '{diag.verdict}' "
                "(rerun with --force to compute anyway)")
        forced = True

    n_max = cfg.windows(default=40)
    recursion = iterate_initial_values(fam, base, n_max)
    oracle = rk4_window_initial_values(fam, base, n_max, step=cfg.output.step)
    product = _map_ordered(
        lambda k: (recursion[0] if k == 1
                   else product_sum_initial_values(fam, base, k - 1)),
        range(1, n_max + 2))
    limit = limit_periodic_solution(fam, base, diag, force=True).limit_value

    rows = []
    for k in range(1, n_max + 2):
        rows.append((k, recursion[k - 1], product[k - 1], oracle[k],
                     abs(recursion[k - 1] - limit)))
    _write_csv(out_dir / "convergence.csv",
               ("n", "recursion", "product_sum", "rk4_oracle", "gap_to_limit"),
               rows)

    cond_rows = [
        ("verdict", diag.verdict),
        ("forced", "yes" if forced else "no"),
        ("contraction_ratio", _fmt(diag.ratio)),
        ("envelope", _fmt(diag.envelope)),
        ("limit_initial_value", _fmt(limit)),
    ]
    cond_rows += [(f"check_{name}", status)
                  for name, status in sorted(diag.checks.items())]
    cond_rows += [("warning", note) for note in diag.notes]
    _write_csv(out_dir / "conditions.csv", ("name", "value"), cond_rows)

    _write_text(out_dir / "plot.gp",
                _gnuplot("convergence.csv", [(5, "gap to limit")],
                         "|y_n(0) - limit|", "convergence.png")
                + "set logscale y\nreplot\n")
    return 0


def cmd_soil(cfg: ScenarioConfig, out_dir: Path) -> int:
    if cfg.system is None:
        raise ConfigError(f"{cfg.path}: soil needs a [system] section")
    sys_model = cfg.compartment_system()
    analysis = analyze_system(sys_model)

    _write_csv(out_dir / "modal_report.csv",
               ("mode", "eigenvalue", "limit_initial_value", "drift_at_zero"),
               [(k, analysis.modal.eigenvalues[k],
                 analysis.modes[k].limit_value, analysis.modes[k].gamma0)
                for k in range(sys_model.size)])

    grid = cfg.grid()
    t_max = float(grid[-1])
    per_interval = max(1, round((t_max - 0.0) / (len(grid) - 1) / cfg.output.step))
    n_steps = (len(grid) - 1) * per_interval
    traj = simulate(sys_model, IntegratorConfig(step=t_max / n_steps, t_max=t_max))
    emitted = traj.values[::per_interval]
    times = traj.times[::per_interval]
    _write_csv(out_dir / "trajectories.csv",
               ("t",) + sys_model.labels,
               (np.concatenate([[t], row]) for t, row in zip(times, emitted)))

    steady_now = _map_ordered(lambda ts: analysis.steady(ts),
                              [grid, grid + sys_model.period])
    drift_vals = analysis.drift(grid)
    residual = np.abs(steady_now[1] - steady_now[0] - drift_vals)
    _write_csv(out_dir / "drift.csv",
               ("t",) + tuple(f"residual_{lab}" for lab in sys_model.labels),
               (np.concatenate([[t], row]) for t, row in zip(grid, residual)))

    traj_cols = [(k + 2, lab) for k, lab in enumerate(sys_model.labels)]
    _write_text(out_dir / "plot.gp",
                _gnuplot("trajectories.csv", traj_cols, "carbon stock",
                         "trajectories.png"))
    return 0


def cmd_parse_check(source: str) -> int:
    tree = exprparse.parse(source)
    print(f"ok: {exprparse.to_source(tree)}")
    return 0


# --- argument parsing -------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drift-ode",
        description="Large-time analysis of y' = lambda*rho(t)*y + b(t) "
                    "with periodic rho and drifted-periodic b.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_analyze = sub.add_parser("analyze", help="asymptotics for one scenario")
    p_analyze.add_argument("config")
    p_analyze.add_argument("--out", default="out")

    p_repro = sub.add_parser("reproduce-paper",
                             help="regenerate the reference-scenario figure data")
    p_repro.add_argument("--out", default="out")

    p_conv = sub.add_parser("converge",
                            help="window initial-value convergence table")
    p_conv.add_argument("config")
    p_conv.add_argument("--force", action="store_true",
                        help="compute even when the condition verdict fails")
    p_conv.add_argument("--out", default="out")

    p_soil = sub.add_parser("soil", help="compartment-system analysis")
    p_soil.add_argument("config")
    p_soil.add_argument("--out", default="out")

    p_parse = sub.add_parser("parse-check", help="parse an expression")
    p_parse.add_argument("expr")

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "parse-check":
            return cmd_parse_check(args.expr)
        if args.command == "reproduce-paper":
            out_dir = Path(args.out)
            out_dir.mkdir(parents=True, exist_ok=True)
            return cmd_reproduce_paper(out_dir)

        cfg = load_scenario(args.config)
        out_dir = Path(args.out)
        if args.out == "out" and cfg.output.directory:
            out_dir = Path(cfg.output.directory)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "analyze":
            return cmd_analyze(cfg, out_dir)
        if args.command == "converge":
            return cmd_converge(cfg, out_dir, args.force)
        if args.command == "soil":
            return cmd_soil(cfg, out_dir)
        raise AssertionError(f"unhandled command {args.command}")
    except (ConfigError, ExpressionSyntaxError, UnknownIdentifier,
            UnboundVariable) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ConditionsNotVerified as exc:
        print(f"verdict failure: {exc}", file=sys.stderr)
        return 4
    except MathDomainError as exc:
        print(f"math domain error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
