"""Eigenvalues, spectral radii and oscillation thresholds of the MP and iE
step maps, a sign-alternation detector, and the (alpha, dt) phase sweep.

Both schemes depend on the problem only through ``gamma * dt``:

=====  ==============================================  ====================
 MP    e = (2 + x)/(2 - x), (2 - x)/(2 + x)              singular at x = 2
 iE    e = 1/(1 + x), 1/(1 - x)                          singular at x = 1
=====  ==============================================  ====================

with ``x = gamma dt``.  Eigenvalues turn negative past the singular point,
which is where node-to-node oscillations appear; in terms of the control
weight this happens for ``alpha`` below :func:`alpha_threshold`.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .analytic import LinearOCPParams, gamma
from .errors import BlowUpError, ContractViolation, NoThresholdError, SolverError
from .grid import Scheme, ScalarTrajectory, TimeGrid, as_sequence
from .linear import solve_bvp

__all__ = [
    "Classification", "StabilityReport", "PhaseDiagram",
    "gamma", "eigenvalues_mp", "spectral_radius_mp", "eigenvalues_ie", "spectral_radius_ie",
    "alpha_threshold", "classify", "stability_report", "oscillation_index",
    "alternation_count", "phase_sweep",
]

#: Relative distance to the singular gamma*dt (or to alpha_th) treated as "on it".
CLASSIFY_RTOL = 1e-9
#: Index threshold that the original sweep design used; kept for comparison runs.
FRACTION_INDEX_THRESHOLD = 0.25


class Classification(str, enum.Enum):
    SMOOTH = "Smooth"
    OSCILLATORY = "Oscillatory"
    BLOWUP = "BlowUp"
    BOUNDARY = "Boundary"

    def __str__(self):
        return self.value


def _singular_value(scheme: Scheme) -> float:
    if scheme.tau == 0.5:
        return 2.0
    if scheme.tau == 0.0:
        return 1.0
    raise ContractViolation("stability formulas are available for MP (tau=1/2) and iE (tau=0) only")


def _check_x(x, singular):
    if not x > 0:
        raise ContractViolation(f"gamma*dt must be positive, got {x!r}")
    if abs(x - singular) <= 1e-12 * singular:
        raise BlowUpError(f"gamma*dt = {x!r} is the blow-up point", gamma_dt=x)


def eigenvalues_mp(gamma_dt: float) -> tuple[float, float]:
    x = gamma_dt
    _check_x(x, 2.0)
    return (2.0 + x) / (2.0 - x), (2.0 - x) / (2.0 + x)


def spectral_radius_mp(gamma_dt: float) -> float:
    x = gamma_dt
    _check_x(x, 2.0)
    return (2.0 + x) / abs(2.0 - x)


def eigenvalues_ie(gamma_dt: float) -> tuple[float, float]:
    x = gamma_dt
    _check_x(x, 1.0)
    return 1.0 / (1.0 + x), 1.0 / (1.0 - x)


def spectral_radius_ie(gamma_dt: float) -> float:
    x = gamma_dt
    _check_x(x, 1.0)
    return 1.0 / abs(1.0 - x)


def alpha_threshold(scheme, m: float, b: float, dt: float) -> float:
    """Control weight below which the scheme's eigenvalues are negative.

    MP: ``dt^2 / (4 m^2 - b^2 dt^2)``; iE: ``dt^2 / (m^2 - b^2 dt^2)``.

    Raises
    ------
    NoThresholdError
        When the denominator is not positive; every alpha then oscillates.
    """
    scheme = Scheme.parse(scheme)
    c = 4.0 if _singular_value(scheme) == 2.0 else 1.0
    den = c * m * m - (b * dt) ** 2
    if den <= 0:
        raise NoThresholdError(
            f"no oscillation threshold for {scheme.name} at dt={dt!r}: all alpha oscillate")
    return dt * dt / den


def classify(params: LinearOCPParams, dt: float, scheme, *,
             boundary_rtol: float = CLASSIFY_RTOL) -> Classification:
    """Analytic Smooth / Oscillatory / BlowUp / Boundary verdict.

    The blow-up point and ``alpha == alpha_th`` are the same point in
    parameter space; BlowUp takes precedence and is judged with a fixed
    1e-9 relative window on ``gamma*dt``.  ``boundary_rtol`` widens the
    window on ``alpha`` used for the informational Boundary tag.
    """
    scheme = Scheme.parse(scheme)
    singular = _singular_value(scheme)
    x = gamma(params) * dt
    if abs(x - singular) <= CLASSIFY_RTOL * singular:
        return Classification.BLOWUP
    try:
        a_th = alpha_threshold(scheme, params.m, params.b, dt)
    except NoThresholdError:
        return Classification.OSCILLATORY
    if abs(params.alpha - a_th) <= boundary_rtol * a_th:
        return Classification.BOUNDARY
    return Classification.OSCILLATORY if params.alpha < a_th else Classification.SMOOTH


@dataclass(frozen=True)
class StabilityReport:
    scheme: str
    gamma: float
    gamma_dt: float
    e1: float | None
    e2: float | None
    spectral_radius: float | None
    alpha_th: float | None
    classification: Classification
    log_distance: float
    """``|log10(gamma dt / 2)|``; large values go with bounded MP solutions."""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["classification"] = str(self.classification)
        return d


def stability_report(params: LinearOCPParams, dt: float, scheme, *,
                     boundary_rtol: float = CLASSIFY_RTOL) -> StabilityReport:
    scheme = Scheme.parse(scheme)
    g = gamma(params)
    x = g * dt
    eig, rho = (eigenvalues_mp, spectral_radius_mp) if scheme.tau == 0.5 else (eigenvalues_ie, spectral_radius_ie)
    _singular_value(scheme)
    cls = classify(params, dt, scheme, boundary_rtol=boundary_rtol)
    try:
        e1, e2 = eig(x)
        r = rho(x)
    except BlowUpError:
        e1 = e2 = r = None
    if cls is Classification.BLOWUP:
        e1 = e2 = r = None
    try:
        a_th = alpha_threshold(scheme, params.m, params.b, dt)
    except NoThresholdError:
        a_th = None
    return StabilityReport(scheme.name, g, x, e1, e2, r, a_th, cls, abs(math.log10(x / 2.0)))


def alternation_count(x) -> int:
    """Number of interior nodes whose neighbouring differences change sign.

    Differences whose product is above ``-eps^2``, ``eps = 1e-9 max|x|``,
    are treated as round-off and do not count.
    """
    x = as_sequence(x)
    if x.ndim != 1 or x.size < 3:
        raise ContractViolation("oscillation detection needs a 1-D sequence of length >= 3")
    scale = np.max(np.abs(x))
    if not scale > 0:
        return 0
    if not np.isfinite(scale):
        raise ContractViolation("oscillation detection needs finite values")
    # normalised so that the products below can neither overflow nor lose eps
    d = np.diff(x / scale)
    eps = 1e-9
    return int(np.count_nonzero(d[1:] * d[:-1] < -eps * eps))


def oscillation_index(x) -> float:
    """Fraction of interior nodes at which the sequence changes direction.

    A :class:`~ocpstab.grid.ScalarTrajectory` is reduced to its control
    sequence, which carries the alternating mode.
    """
    x = as_sequence(x)
    n = alternation_count(x)
    return n / (x.size - 2)


@dataclass(frozen=True)
class PhaseDiagram:
    """Numerical and analytic classification over an (alpha, dt) grid.

    Cell arrays are indexed ``[i_dt, i_alpha]``.  ``alpha_th`` is NaN where
    no threshold exists.
    """

    scheme: str
    alphas: np.ndarray
    dts: np.ndarray
    numeric: np.ndarray
    analytic: np.ndarray
    index: np.ndarray
    alternations: np.ndarray
    alpha_th: np.ndarray

    def rows(self):
        """Yield ``(alpha, dt, numeric, analytic, index, alpha_th)`` dt-major."""
        for j, dt in enumerate(self.dts):
            for i, al in enumerate(self.alphas):
                yield (al, dt, self.numeric[j, i], self.analytic[j, i],
                       self.index[j, i], self.alpha_th[j])


def _numeric_class(traj: ScalarTrajectory | None, index_threshold, min_alternations):
    if traj is None or not np.all(np.isfinite(traj.u)):
        return Classification.BLOWUP, math.nan, -1
    n_alt = alternation_count(traj.u)
    idx = n_alt / (traj.u.size - 2)
    if index_threshold is None:
        osc = n_alt >= min_alternations
    else:
        osc = idx >= index_threshold
    return (Classification.OSCILLATORY if osc else Classification.SMOOTH), idx, n_alt


def _sweep_row(task):
    params, alphas, dt, tau, index_threshold, min_alternations = task
    N = max(2, int(round(params.T / dt)))
    # keep dt exact; the horizon absorbs the rounding of T / dt
    grid = TimeGrid(N * dt, N)
    base = params.with_horizon(grid.T)
    numeric, analytic, index, alts = [], [], [], []
    for al in alphas:
        p = base.with_alpha(float(al))
        try:
            traj = solve_bvp(p, grid, tau)
        except SolverError:
            traj = None
        c, idx, n_alt = _numeric_class(traj, index_threshold, min_alternations)
        numeric.append(str(c))
        index.append(idx)
        alts.append(n_alt)
        analytic.append(str(classify(p, dt, tau)))
    try:
        a_th = alpha_threshold(tau, params.m, params.b, dt)
    except NoThresholdError:
        a_th = math.nan
    return numeric, analytic, index, alts, a_th


def phase_sweep(params: LinearOCPParams, alphas, dts, scheme, *, jobs: int | None = None,
                index_threshold: float | None = None, min_alternations: int = 2) -> PhaseDiagram:
    """Classify every ``(alpha, dt)`` cell by solving the discrete problem.

    ``params.alpha`` is ignored.  A cell is numerically Oscillatory when the
    control sequence alternates at ``min_alternations`` or more interior
    nodes, or, if ``index_threshold`` is given, when its
    :func:`oscillation_index` reaches that value.  Cells whose solve fails
    are recorded as BlowUp.  Rows are computed in parallel over ``dt`` with
    ``jobs`` worker processes (default: all CPUs); the result does not
    depend on ``jobs``.
    """
    scheme = Scheme.parse(scheme)
    _singular_value(scheme)
    alphas = np.asarray(alphas, dtype=float)
    dts = np.asarray(dts, dtype=float)
    for name, g in (("alpha", alphas), ("dt", dts)):
        if g.ndim != 1 or g.size < 1 or np.any(g <= 0) or np.any(np.diff(g) <= 0):
            raise ContractViolation(f"{name} grid must be positive and strictly increasing")
    tasks = [(params, alphas, float(dt), scheme.tau, index_threshold, min_alternations) for dt in dts]
    jobs = (os.cpu_count() or 1) if jobs is None else jobs
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            rows = list(pool.map(_sweep_row, tasks))
    else:
        rows = [_sweep_row(t) for t in tasks]
    numeric = np.array([r[0] for r in rows], dtype=object)
    analytic = np.array([r[1] for r in rows], dtype=object)
    index = np.array([r[2] for r in rows], dtype=float)
    alts = np.array([r[3] for r in rows], dtype=int)
    a_th = np.array([r[4] for r in rows], dtype=float)
    return PhaseDiagram(scheme.name, alphas, dts, numeric, analytic, index, alts, a_th)


def boundary_offsets(diagram: PhaseDiagram) -> list[tuple[float, float, float]]:
    """Locate each numerical Oscillatory/Smooth switch along alpha.

    Returns ``(dt, alpha_switch, offset)`` per switch in rows with a
    threshold.  ``alpha_switch`` is the geometric midpoint of the two cells
    that straddle the switch and ``offset`` is the distance from
    ``alpha_th`` to the nearer of them, in grid steps of the log-spaced
    alpha axis.
    """
    la = np.log(diagram.alphas)
    step = float(np.mean(np.diff(la))) if la.size > 1 else 1.0
    out = []
    for j, dt in enumerate(diagram.dts):
        a_th = diagram.alpha_th[j]
        if not np.isfinite(a_th):
            continue
        row = diagram.numeric[j]
        for i in range(len(row) - 1):
            pair = {row[i], row[i + 1]}
            if pair == {"Oscillatory", "Smooth"}:
                mid = 0.5 * (la[i] + la[i + 1])
                lt = math.log(a_th)
                dist = min(abs(la[i] - lt), abs(la[i + 1] - lt)) / step
                out.append((float(dt), float(math.exp(mid)), dist))
    return out


def off_boundary_agreement(diagram: PhaseDiagram) -> float:
    """Fraction of cells farther than one alpha grid step from ``alpha_th``
    on which the numerical and analytic classes agree."""
    la = np.log(diagram.alphas)
    step = float(np.mean(np.diff(la))) if la.size > 1 else math.inf
    agree = total = 0
    for j in range(len(diagram.dts)):
        a_th = diagram.alpha_th[j]
        for i in range(len(diagram.alphas)):
            if np.isfinite(a_th) and abs(la[i] - math.log(a_th)) <= step:
                continue
            total += 1
            agree += diagram.numeric[j, i] == diagram.analytic[j, i]
    return agree / total if total else 1.0
