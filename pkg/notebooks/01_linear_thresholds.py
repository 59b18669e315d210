"""
Thresholds of the scalar problem
================================

A body with drag ``b`` and mass ``m`` is steered toward a target speed.
Both the mid-point rule and implicit Euler produce a linear recurrence
whose eigenvalues decide whether the discrete control oscillates.
"""

# %%
# Closed-form thresholds at dt = 0.1
import numpy as np

from ocpstab import (LinearOCPParams, alpha_threshold, derive_constants, eval_analytic, make_grid,
                     oscillation_index, solve_bvp, stability_report)

params = LinearOCPParams(m=1, b=1, a=1, v_o=0, v_t=20, T=10, alpha=0.1)
grid = make_grid(params.T, 100)
for scheme in ("mp", "ie"):
    print(scheme, "alpha_th =", alpha_threshold(scheme, params.m, params.b, grid.dt))

# %%
# Below the threshold the eigenvalues turn negative and the control
# alternates in sign near the ends of the horizon.
for alpha in (1e-1, 1e-2, 1e-3):
    p = params.with_alpha(alpha)
    for scheme in ("mp", "ie"):
        rep = stability_report(p, grid.dt, scheme)
        tr = solve_bvp(p, grid, scheme)
        print(f"alpha={alpha:g} {scheme}: {rep.classification!s:12} e=({rep.e1:.3f}, {rep.e2:.3f}) "
              f"index={oscillation_index(tr.u):.3f}")

# %%
# Errors against the closed form shrink at second order for the mid-point
# rule and first order for implicit Euler.
sol = derive_constants(params)
for scheme in ("mp", "ie"):
    errs = []
    for N in (100, 200, 400):
        g = make_grid(params.T, N)
        errs.append(np.max(np.abs(solve_bvp(params, g, scheme).v - eval_analytic(sol, params, g.times)[0])))
    print(scheme, "max v error", ["%.2e" % e for e in errs])
