"""Newton convergence on one mesh: increments, round-off floors and observed order.

    python demos/newton_history.py
"""
from vonkarman.adapt import level_zero_mesh
from vonkarman.mesh import uniform_refine
from vonkarman.problems import lshape_problem
from vonkarman.solver import Discretization, newton_solve
from vonkarman.space import DofMap


def main():
    problem = lshape_problem()
    mesh = uniform_refine(uniform_refine(level_zero_mesh(problem)))
    for mode in ("dg", "ip"):
        disc = Discretization(DofMap(mesh, mode), None, problem)
        _, rep = newton_solve(disc)
        print(f"{mode}: {rep.iterations} iterations, residual {rep.residual_norm:.2e}")
        for j, (e, f) in enumerate(zip(rep.increments, rep.floors)):
            print(f"  step {j + 1}: increment {e:.3e}  round-off floor {f:.1e}")
        print(f"  contraction slope {rep.contraction_slope():.2f}")


if __name__ == "__main__":
    main()
