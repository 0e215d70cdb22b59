"""Adaptive versus uniform refinement for f = 1 on the L-shaped domain.

Runs the solve-estimate-mark-refine loop with Dorfler marking (theta = 0.3)
and compares the decay of the estimator against uniform refinement. Writes
``ndof,eta`` pairs for a log-log plot and prints where the final adaptive
mesh has concentrated its triangles.

    python demos/adaptive_lshape.py [max_ndof] [mode]
"""
import sys

import numpy as np

from vonkarman.adapt import adaptive_run, uniform_run
from vonkarman.problems import constant_load_problem


def main(max_ndof=10000, mode="ip"):
    problem = constant_load_problem()
    adaptive = adaptive_run(problem, mode, max_ndof=max_ndof)
    uniform = uniform_run(problem, mode, levels=4)
    print(f"adaptive: {len(adaptive)} levels, final ndof {int(adaptive.ndofs[-1])}, "
          f"estimator slope over last 5 levels {adaptive.slope('eta'):.3f}")
    print(f"uniform:  final ndof {int(uniform.ndofs[-1])}, slope over last 2 levels {uniform.slope('eta', 2):.3f}")
    print("(slope -0.5 is the optimal rate for P2 in the energy norm)")

    mesh = adaptive.final.dofmap.mesh
    r = np.hypot(*mesh.vertices[mesh.triangles].mean(axis=1).T)
    for radius in (0.05, 0.1, 0.3):
        print(f"triangles with centroid within {radius} of the corner: {np.mean(r < radius):.1%}")

    with open(f"adaptive_{mode}_plot.csv", "w") as fh:
        fh.write("run,ndof,eta\n")
        for name, trace in (("adaptive", adaptive), ("uniform", uniform)):
            for n, e in zip(trace.ndofs, trace.etas):
                fh.write(f"{name},{int(n)},{e:.10g}\n")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 10000, sys.argv[2] if len(sys.argv) > 2 else "ip")
