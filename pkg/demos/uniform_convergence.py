"""Uniform refinement on the square and the L-shaped domain, dG and C0-IP.

Prints error and estimator tables. The square solution is smooth and both
methods converge at rate 1 in the energy norm; the corner singularity of the
L-shape solution lowers the rate towards its regularity index alpha.

    python demos/uniform_convergence.py [levels]
"""
import sys

from vonkarman.adapt import uniform_run
from vonkarman.cli import format_csv, table_rows
from vonkarman.problems import lshape_problem, square_problem


def main(levels=4):
    for problem in (square_problem(), lshape_problem()):
        for mode in ("dg", "ip"):
            print(f"# {problem.name}, {mode}, regularity index {problem.alpha:.6f}")
            trace = uniform_run(problem, mode, levels=levels)
            print(format_csv(table_rows(trace)))


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 4)
