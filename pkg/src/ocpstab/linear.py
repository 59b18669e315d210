"""Discretised linear problem: global two-point solve and step recurrences.

The discrete optimality system of the scalar problem is assembled for any
``tau`` in [0, 1/2] and solved as one banded linear system in the
interleaved unknowns ``(v_0, lam_0, v_1, lam_1, ..., v_N, lam_N)``.  The
equivalent step recurrences ``z_n = A z_{n-1} + a`` are exposed separately;
they are only meant for stability analysis since marching them forward is
exactly the unstable direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .analytic import LinearOCPParams, gamma
from .errors import BlowUpError, ContractViolation, SingularPropagationError, SolverError
from .grid import Scheme, ScalarTrajectory, TimeGrid

_SINGULAR_RTOL = 1e-12
_OVERFLOW = 1e300


@dataclass(frozen=True)
class MPCoefficients:
    p: float
    q: float
    s: float


@dataclass(frozen=True)
class IECoefficients:
    p: float
    q: float
    r: float
    s: float


@dataclass(frozen=True)
class PropagationForm:
    """Affine step map ``z_n = transition @ z_{n-1} + affine`` with ``z = (v, lam)``."""

    transition: np.ndarray
    affine: np.ndarray
    scheme: str

    def __post_init__(self):
        A = np.array(self.transition, dtype=float)
        c = np.array(self.affine, dtype=float)
        if A.shape != (2, 2) or c.shape != (2,):
            raise ContractViolation("propagation form must be a 2x2 matrix and a 2-vector")
        A.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "transition", A)
        object.__setattr__(self, "affine", c)

    def fixed_point(self) -> np.ndarray:
        return np.linalg.solve(np.eye(2) - self.transition, self.affine)


def assemble_mp(params: LinearOCPParams, dt: float) -> MPCoefficients:
    k = params.b / params.m
    return MPCoefficients(k + 2.0 / dt, k - 2.0 / dt, 1.0 / (params.alpha * params.m ** 2))


def assemble_ie(params: LinearOCPParams, dt: float) -> IECoefficients:
    k = params.b / params.m
    return IECoefficients(k + 1.0 / dt, k - 1.0 / dt, 1.0 / dt, 1.0 / (params.alpha * params.m ** 2))


def _check_denominator(s, pq, params, dt, blow_at):
    den = s + pq
    if abs(den) < _SINGULAR_RTOL * max(abs(s), abs(pq)):
        gdt = gamma(params) * dt
        raise SingularPropagationError(
            f"step system is singular (gamma*dt = {gdt:.12g}, blow-up at {blow_at})", gamma_dt=gdt)
    return den


def propagation_mp(params: LinearOCPParams, dt: float) -> PropagationForm:
    c = assemble_mp(params, dt)
    p, q, s = c.p, c.q, c.s
    den = _check_denominator(s, p * q, params, dt, 2)
    A = (-1.0 / den) * np.array([[s + q * q, -s * (p - q)],
                                 [-(p - q), s + p * p]])
    a = (-2.0 / den) * np.array([q * params.a - s * params.v_t,
                                 params.a + p * params.v_t])
    return PropagationForm(A, a, "mp")


def propagation_ie(params: LinearOCPParams, dt: float) -> PropagationForm:
    c = assemble_ie(params, dt)
    p, q, r, s = c.p, c.q, c.r, c.s
    den = _check_denominator(s, p * q, params, dt, 1)
    B = (-r / den) * np.array([[-q, -s],
                               [-1.0, p]])
    b = (-1.0 / den) * np.array([q * params.a - s * params.v_t,
                                 params.a + p * params.v_t])
    return PropagationForm(B, b, "ie")


def propagation_form(params: LinearOCPParams, dt: float, scheme) -> PropagationForm:
    scheme = Scheme.parse(scheme)
    if scheme.tau == 0.5:
        return propagation_mp(params, dt)
    if scheme.tau == 0.0:
        return propagation_ie(params, dt)
    raise ContractViolation("closed-form propagation matrices exist only for tau in {0, 1/2}")


def propagate(form: PropagationForm, z0, N: int) -> np.ndarray:
    """March ``z_n = A z_{n-1} + a`` for ``n = 1..N``; returns shape ``(N+1, 2)``.

    Raises :class:`BlowUpError` (with ``step`` and the ``partial`` sequence)
    once any component exceeds 1e300 in magnitude.
    """
    A, c = form.transition, form.affine
    z = np.empty((N + 1, 2))
    z[0] = z0
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, N + 1):
            z[n] = A @ z[n - 1] + c
            if not np.all(np.abs(z[n]) <= _OVERFLOW):
                raise BlowUpError(f"propagation overflowed at step {n}", step=n, partial=z[:n].copy())
    return z


def _banded_system(params: LinearOCPParams, grid: TimeGrid, tau: float):
    """Banded (l = u = 2) storage of the global system and its right-hand side.

    Row 0 is ``v_0 = v_o``, rows ``2n-1`` and ``2n`` are the adjoint and state
    equations of step ``n`` and the last row is ``lam_N = 0``.
    """
    N, dt = grid.N, grid.dt
    k = params.b / params.m
    s = 1.0 / (params.alpha * params.m ** 2)
    w0, w1 = tau, 1.0 - tau
    size = 2 * (N + 1)
    ab = np.zeros((5, size))
    rhs = np.zeros(size)
    n = np.arange(1, N + 1)
    iv0, il0, iv1, il1 = 2 * n - 2, 2 * n - 1, 2 * n, 2 * n + 1
    ra, rs = 2 * n - 1, 2 * n
    # banded position of A[i, j] is ab[2 + i - j, j]
    # adjoint: (lam_n - lam_{n-1})/dt - k lam_{n-tau} + v_{n-tau} = v_t
    ab[2 + ra - il1, il1] = 1.0 / dt - k * w1
    ab[2 + ra - il0, il0] = -1.0 / dt - k * w0
    ab[2 + ra - iv1, iv1] = w1
    ab[2 + ra - iv0, iv0] = w0
    rhs[ra] = params.v_t
    # state with u eliminated: (v_n - v_{n-1})/dt + k v_{n-tau} + s lam_{n-tau} = -a
    ab[2 + rs - iv1, iv1] = 1.0 / dt + k * w1
    ab[2 + rs - iv0, iv0] = -1.0 / dt + k * w0
    ab[2 + rs - il1, il1] = s * w1
    ab[2 + rs - il0, il0] = s * w0
    rhs[rs] = -params.a
    ab[2, 0] = 1.0
    rhs[0] = params.v_o
    ab[2, size - 1] = 1.0
    return ab, rhs


def solve_bvp(params: LinearOCPParams, grid: TimeGrid, scheme) -> ScalarTrajectory:
    """Solve the discrete two-point problem for all nodal ``v`` and ``lam``.

    Uses LAPACK banded LU with partial pivoting on the full system, then
    recovers ``u_n = -lam_n / (alpha m)``.
    """
    scheme = Scheme.parse(scheme)
    ab, rhs = _banded_system(params, grid, scheme.tau)
    gdt = gamma(params) * grid.dt
    try:
        with np.errstate(all="ignore"):
            z = linalg.solve_banded((2, 2), ab, rhs, check_finite=False)
    except (linalg.LinAlgError, ValueError) as exc:
        raise SolverError(f"discrete boundary-value system is singular (gamma*dt = {gdt:.12g})",
                          gamma_dt=gdt) from exc
    if not np.all(np.isfinite(z)):
        raise SolverError(f"non-finite solution of the discrete system (gamma*dt = {gdt:.12g})",
                          gamma_dt=gdt)
    v, lam = z[0::2].copy(), z[1::2].copy()
    v[0] = params.v_o
    lam[-1] = 0.0
    u = -lam / (params.alpha * params.m)
    return ScalarTrajectory(v, lam, u, grid)


def discrete_residuals(traj: ScalarTrajectory, params: LinearOCPParams, scheme) -> np.ndarray:
    """Residuals of the adjoint, state and control equations at every step.

    Returns an array of shape ``(N, 3)``; columns are adjoint, state (with the
    control kept explicit) and control stationarity.
    """
    tau = Scheme.parse(scheme).tau
    dt = traj.grid.dt
    k = params.b / params.m
    v, lam, u = traj.v, traj.lam, traj.u
    vm = tau * v[:-1] + (1 - tau) * v[1:]
    lm = tau * lam[:-1] + (1 - tau) * lam[1:]
    um = tau * u[:-1] + (1 - tau) * u[1:]
    r_adj = (lam[1:] - lam[:-1]) / dt - k * lm + vm - params.v_t
    r_state = (v[1:] - v[:-1]) / dt + k * vm - um / params.m + params.a
    r_ctrl = um + lm / (params.alpha * params.m)
    return np.column_stack([r_adj, r_state, r_ctrl])
