"""
Elastic inverted pendulum
=========================

The base moves along the x-axis with commanded velocity and a spring holds
the upper mass, which should rise to height 2.  Plain Newton from a
straight-line guess does not converge here, so the solve walks down in
alpha from a forward-simulated start.
"""

# %%
import numpy as np

from ocpstab import NewtonSettings, PendulumParams, grid_from_dt, newton_solve, oscillation_index
from ocpstab import pendulum_problem

grid = grid_from_dt(4.0, 0.2)
guess = None
for alpha in (1e-2, 1e-3, 1e-4):
    problem = pendulum_problem(PendulumParams(alpha=alpha))
    tr = newton_solve(problem, grid, "mp", NewtonSettings(continuation=True), guess=guess)
    guess = tr
    print(f"alpha={alpha:g}: {tr.info['iterations']} iterations, residual {tr.info['residual']:.1e}, "
          f"index {oscillation_index(tr.u[:, 0]):.3f}, final height {tr.x[-1, 2]:.2f}")

# %%
# Control and height of the last solve
np.set_printoptions(precision=2, suppress=True, linewidth=120)
print("u  ", tr.u[:, 0])
print("x2y", tr.x[:, 2])
