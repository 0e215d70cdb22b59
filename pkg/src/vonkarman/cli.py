"""Command-line experiment runner writing convergence tables and plot data."""
import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .adapt import NewtonFailure, adaptive_run, uniform_run
from .assembly import PenaltyParams, write_system
from .estimator import write_indicators
from .mesh import write_mesh
from .problems import constant_load_problem, lshape_problem, square_problem
from .solver import SingularSystemError

EXPERIMENTS = {
    # id: (problem factory, mode, adaptive)
    "square-dg": (square_problem, "dg", False),
    "square-ip": (square_problem, "ip", False),
    "lshape-dg": (lshape_problem, "dg", False),
    "lshape-ip": (lshape_problem, "ip", False),
    "lshape-adaptive-dg": (lshape_problem, "dg", True),
    "lshape-adaptive-ip": (lshape_problem, "ip", True),
    "lshape-adaptive-f1": (constant_load_problem, None, True),
}

COLUMNS = ("level", "ndof", "err_u", "rate_u", "err_v", "rate_v",
           "eta_total", "rate_eta", "efficiency", "newton_iters")
PLOT_COLUMNS = ("ndof", "eta_total", "error")


@dataclass
class ExperimentConfig:
    experiment: str
    levels: Optional[int] = None
    sigma1: Optional[float] = None
    sigma2: float = 20.0
    theta: float = 0.3
    tol: float = 1e-8
    fmt: str = "csv"
    out: Optional[Path] = None
    plot_out: Optional[Path] = None
    mesh_out: Optional[Path] = None
    estimator_out: Optional[Path] = None
    dump_system: Optional[Path] = None
    max_ndof: Optional[int] = None
    mode: Optional[str] = None

    @property
    def adaptive(self):
        return EXPERIMENTS[self.experiment][2]

    def resolved_mode(self):
        return EXPERIMENTS[self.experiment][1] or self.mode or "dg"

    def resolved_levels(self):
        if self.levels is not None:
            return self.levels
        return 20 if self.adaptive else 4


def _finite(x):
    return x is not None and math.isfinite(x)


def table_rows(trace):
    """Table rows as dicts; values that do not apply are ``None``."""
    has_err = trace.records[0].err_u is not None
    rate_u = trace.rates("err_u") if has_err else [None] * len(trace)
    rate_v = trace.rates("err_v") if has_err else [None] * len(trace)
    rate_eta = trace.rates("eta")
    rows = []
    for i, r in enumerate(trace.records):
        row = dict(level=r.level, ndof=r.ndof, err_u=r.err_u, rate_u=rate_u[i], err_v=r.err_v,
                   rate_v=rate_v[i], eta_total=r.eta, rate_eta=rate_eta[i],
                   efficiency=r.efficiency, newton_iters=r.newton_iterations)
        rows.append({k: (float(v) if isinstance(v, float) and _finite(v) else v if isinstance(v, int) else None)
                     for k, v in row.items()})
    return rows


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return f"{v:.10g}"


def format_csv(rows, columns=COLUMNS):
    lines = [",".join(columns)]
    lines += [",".join(_cell(row.get(c)) for c in columns) for row in rows]
    return "\n".join(lines) + "\n"


def format_json(rows):
    return json.dumps(rows, indent=2) + "\n"


def plot_rows(trace):
    return [dict(ndof=r.ndof, eta_total=r.eta, error=r.error) for r in trace.records]


def execute(config, log=None):
    """Run the experiment of ``config`` and return its trace."""
    factory, _, adaptive = EXPERIMENTS[config.experiment]
    problem = factory()
    mode = config.resolved_mode()
    params = PenaltyParams(sigma1=config.sigma1, sigma2=config.sigma2)
    levels = config.resolved_levels()

    def progress(rec):
        if log:
            print(f"level {rec.level}: ndof={rec.ndof} eta={rec.eta:.4e} newton={rec.newton_iterations} "
                  f"({rec.seconds:.1f}s)", file=log, flush=True)

    if adaptive:
        return adaptive_run(problem, mode, params, theta=config.theta, max_levels=levels,
                            max_ndof=config.max_ndof, tol=config.tol, callback=progress)
    return uniform_run(problem, mode, params, levels=levels, tol=config.tol, callback=progress)


def write_outputs(config, trace, stdout=None):
    rows = table_rows(trace)
    text = format_json(rows) if config.fmt == "json" else format_csv(rows)
    if config.out:
        config.out.write_text(text)
    else:
        (stdout or sys.stdout).write(text)
    plot_path = config.plot_out
    if plot_path is None and config.out is not None:
        plot_path = config.out.with_name(config.out.stem + "_plot.csv")
    if plot_path is not None:
        plot_path.write_text(format_csv(plot_rows(trace), PLOT_COLUMNS))
    final = trace.final
    if config.mesh_out:
        with open(config.mesh_out, "w") as fh:
            write_mesh(final.dofmap.mesh, fh)
    if config.estimator_out:
        with open(config.estimator_out, "w") as fh:
            write_indicators(final.estimator, fh)
    if config.dump_system:
        with open(config.dump_system, "w") as fh:
            write_system(final.discretization.newton_system(final.psi), fh)


def build_parser():
    p = argparse.ArgumentParser(prog="vonkarman",
                                description="Convergence studies for dG and C0-IP von Karman plate solvers.")
    p.add_argument("--experiment", required=True, choices=sorted(EXPERIMENTS))
    p.add_argument("--levels", type=int, help="uniform levels, or maximal adaptive levels (default 4 / 20)")
    p.add_argument("--sigma1", type=float, help="function-jump penalty (dG only, default 20)")
    p.add_argument("--sigma2", type=float, default=20.0, help="normal-derivative-jump penalty")
    p.add_argument("--theta", type=float, default=0.3, help="Dorfler bulk parameter")
    p.add_argument("--tol", type=float, default=1e-8, help="Newton increment tolerance")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    p.add_argument("--out", type=Path, help="table file (default: stdout)")
    p.add_argument("--plot-out", type=Path, help="estimator-vs-ndof CSV (default: <out>_plot.csv)")
    p.add_argument("--mesh-out", type=Path, help="final mesh")
    p.add_argument("--estimator-out", type=Path, help="final per-triangle indicators CSV")
    p.add_argument("--dump-system", type=Path, help="final Newton matrix in coordinate format")
    p.add_argument("--max-ndof", type=int, help="adaptive runs stop before exceeding this size")
    p.add_argument("--mode", choices=("dg", "ip"), help="discretization for lshape-adaptive-f1 (default dg)")
    p.add_argument("--quiet", action="store_true", help="no progress lines on stderr")
    return p


def parse_config(argv=None):
    parser = build_parser()
    a = parser.parse_args(argv)
    if a.levels is not None and a.levels < 1:
        parser.error("--levels must be >= 1")
    if a.sigma2 < 1.0:
        parser.error("--sigma2 must be >= 1")
    if a.sigma1 is not None and a.sigma1 <= 0.0:
        parser.error("--sigma1 must be > 0")
    if not 0.0 < a.theta < 1.0:
        parser.error("--theta must lie in (0, 1)")
    if a.tol <= 0.0:
        parser.error("--tol must be > 0")
    if a.mode and EXPERIMENTS[a.experiment][1] not in (None, a.mode):
        parser.error(f"--mode {a.mode} conflicts with experiment {a.experiment}")
    if a.max_ndof is not None and not EXPERIMENTS[a.experiment][2]:
        parser.error("--max-ndof applies to adaptive experiments only")
    cfg = ExperimentConfig(a.experiment, a.levels, a.sigma1, a.sigma2, a.theta, a.tol, a.fmt, a.out,
                           a.plot_out, a.mesh_out, a.estimator_out, a.dump_system, a.max_ndof, a.mode)
    return cfg, a.quiet


def run(config, log=None, stdout=None):
    """Execute ``config``; returns the process exit status. ``log`` receives progress lines."""
    try:
        trace = execute(config, log)
    except (NewtonFailure, SingularSystemError) as exc:
        print(f"vonkarman: numerical failure: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"vonkarman: {exc}", file=sys.stderr)
        return 2
    write_outputs(config, trace, stdout)
    return 0


def main(argv=None):
    config, quiet = parse_config(argv)
    return run(config, log=None if quiet else sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
