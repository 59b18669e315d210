"""
Phase diagram over (alpha, dt)
==============================

Every cell is solved numerically and classified by whether its control
alternates in sign; the analytic boundary is the threshold curve.
"""

# %%
import numpy as np

from ocpstab import LinearOCPParams, phase_sweep
from ocpstab.stability import boundary_offsets, off_boundary_agreement

params = LinearOCPParams()
alphas = np.logspace(-5, 0, 32)
dts = np.logspace(-2, 0, 32)

# %%
# Text rendering: '#' oscillatory, '.' smooth, 'x' blow-up; rows are dt.
for scheme in ("mp", "ie"):
    d = phase_sweep(params, alphas, dts, scheme)
    print(f"\n{scheme}: boundary offsets <= {max(o for *_, o in boundary_offsets(d)):.2f} cells, "
          f"off-boundary agreement {off_boundary_agreement(d):.3f}")
    sym = {"Oscillatory": "#", "Smooth": ".", "BlowUp": "x", "Boundary": "|"}
    for j in range(len(dts) - 1, -1, -4):
        print(f"dt={dts[j]:7.4f} " + "".join(sym[c] for c in d.numeric[j]))
