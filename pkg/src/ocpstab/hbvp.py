"""Newton solution of the discretised Euler-Lagrange boundary-value problem.

For a problem ``dx/dt = f(x, u)`` with running cost
``1/2 (x - x_t)' R (x - x_t) + alpha/2 u' Q u`` the discrete system on a
uniform grid is, for ``n = 1..N`` and with ``y_{n-tau} = tau y_{n-1} + (1 - tau) y_n``::

    (lam_{n-1} - lam_n)/dt = R (x_{n-tau} - x_t) + f_x(x_{n-tau}, u_{n-tau})' lam_{n-tau}
    (x_n - x_{n-1})/dt     = f(x_{n-tau}, u_{n-tau})
    0                      = alpha Q u_{n-tau} + f_u(x_{n-tau}, u_{n-tau})' lam_{n-tau}

with ``x_0 = x_o`` and ``lam_N = 0``.  Controls are stored at nodes, which
leaves one block of controls undetermined by the staggered equations (for
``tau = 1/2`` an alternating control sequence averages to zero).  The
control equation is therefore also imposed at node 0, which closes the
system and reproduces ``u_n = -lam_n/(alpha m)`` on the scalar linear
problem.

Unknowns are stacked node by node as ``[x_n, lam_n, u_n]``.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .analytic import LinearOCPParams
from .errors import ContractViolation, ConvergenceError, SolverError, ConfigurationError
from .grid import Scheme, TimeGrid, VectorTrajectory

logger = logging.getLogger(__name__)

Array = np.ndarray


@dataclass(frozen=True)
class ControlProblem:
    """Dynamics, quadratic cost and boundary data of an optimal control problem.

    ``lam_f_hessian(x, u, lam)`` may return the second derivatives
    ``(H_xx, H_xu, H_uu)`` of ``lam' f(x, u)``.  Without it the analytic
    Newton matrix differentiates ``f_x`` and ``f_u`` by central differences.
    """

    n_x: int
    n_u: int
    f: Callable[[Array, Array], Array]
    f_x: Callable[[Array, Array], Array]
    f_u: Callable[[Array, Array], Array]
    R: Array
    Q: Array
    x_t: Array
    alpha: float
    x_o: Array
    T: float
    lam_f_hessian: Optional[Callable[[Array, Array, Array], tuple]] = None
    name: str = "problem"

    def __post_init__(self):
        nx, nu = self.n_x, self.n_u
        for attr, shape in (("R", (nx, nx)), ("Q", (nu, nu)), ("x_t", (nx,)), ("x_o", (nx,))):
            arr = np.array(getattr(self, attr), dtype=float).reshape(shape)
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)
        for attr in ("R", "Q"):
            M = getattr(self, attr)
            if not np.allclose(M, M.T) or np.min(np.linalg.eigvalsh(M)) < -1e-12:
                raise ConfigurationError(f"{attr} must be symmetric positive semidefinite")
        if not self.alpha > 0:
            raise ConfigurationError(f"alpha must be positive, got {self.alpha!r}")
        if not self.T > 0:
            raise ConfigurationError(f"T must be positive, got {self.T!r}")

    def with_alpha(self, alpha: float) -> "ControlProblem":
        return dataclasses.replace(self, alpha=alpha)

    def hessians(self, x, u, lam):
        if self.lam_f_hessian is not None:
            return self.lam_f_hessian(x, u, lam)
        return _fd_hessians(self, x, u, lam)


def _fd_hessians(problem, x, u, lam, h=1e-6):
    nx, nu = problem.n_x, problem.n_u
    Hxx = np.empty((nx, nx))
    Hxu = np.empty((nx, nu))
    Huu = np.empty((nu, nu))
    for j in range(nx):
        e = np.zeros(nx)
        e[j] = h * (1 + abs(x[j]))
        Hxx[:, j] = (problem.f_x(x + e, u).T @ lam - problem.f_x(x - e, u).T @ lam) / (2 * e[j])
    for k in range(nu):
        e = np.zeros(nu)
        e[k] = h * (1 + abs(u[k]))
        Hxu[:, k] = (problem.f_x(x, u + e).T @ lam - problem.f_x(x, u - e).T @ lam) / (2 * e[k])
        Huu[:, k] = (problem.f_u(x, u + e).T @ lam - problem.f_u(x, u - e).T @ lam) / (2 * e[k])
    return 0.5 * (Hxx + Hxx.T), Hxu, 0.5 * (Huu + Huu.T)


@dataclass(frozen=True)
class NewtonSettings:
    tol: float = 1e-10
    max_iter: int = 50
    jacobian: str = "analytic"
    fd_step: float = 1e-7
    continuation: bool = False
    continuation_start: float = 10.0
    continuation_factor: float = 10.0 ** 0.25

    def __post_init__(self):
        if not self.tol > 0:
            raise ConfigurationError("tolerance must be positive")
        if self.max_iter < 1:
            raise ConfigurationError("max_iter must be >= 1")
        if self.jacobian not in ("analytic", "finite-difference"):
            raise ConfigurationError(f"unknown jacobian mode {self.jacobian!r}")
        if not (self.continuation_start > 0 and self.continuation_factor > 1):
            raise ConfigurationError("continuation needs a positive start and a factor above 1")


def _blocks(w, problem, grid):
    nx, nu = problem.n_x, problem.n_u
    if w.size != (grid.N + 1) * (2 * nx + nu):
        raise ContractViolation(
            f"unknown vector has {w.size} entries, expected {(grid.N + 1) * (2 * nx + nu)}")
    B = w.reshape(grid.N + 1, 2 * nx + nu)
    return B[:, :nx], B[:, nx:2 * nx], B[:, 2 * nx:]


def _residual_flat(w: Array, problem: ControlProblem, grid: TimeGrid, tau: float) -> Array:
    X, L, U = _blocks(w, problem, grid)
    nx, nu, N, dt = problem.n_x, problem.n_u, grid.N, grid.dt
    R, Q, a = problem.R, problem.Q, problem.alpha
    out = np.empty((N + 1) * (2 * nx + nu))
    out[:nx] = X[0] - problem.x_o
    out[nx:nx + nu] = a * Q @ U[0] + problem.f_u(X[0], U[0]).T @ L[0]
    pos = nx + nu
    for n in range(1, N + 1):
        xm = tau * X[n - 1] + (1 - tau) * X[n]
        um = tau * U[n - 1] + (1 - tau) * U[n]
        lm = tau * L[n - 1] + (1 - tau) * L[n]
        fx = problem.f_x(xm, um)
        out[pos:pos + nx] = (L[n - 1] - L[n]) / dt - R @ (xm - problem.x_t) - fx.T @ lm
        pos += nx
        out[pos:pos + nx] = (X[n] - X[n - 1]) / dt - problem.f(xm, um)
        pos += nx
        out[pos:pos + nu] = a * Q @ um + problem.f_u(xm, um).T @ lm
        pos += nu
    out[pos:pos + nx] = L[N]
    return out


def residual(unknowns: VectorTrajectory, problem: ControlProblem, grid: TimeGrid, tau) -> Array:
    """Stacked residual of the discrete Euler-Lagrange system.

    Order: ``x_0 - x_o``, control equation at node 0, then for each step the
    adjoint, state and control rows, and finally ``lam_N``.
    """
    tau = Scheme.parse(tau).tau
    if unknowns.n_x != problem.n_x or unknowns.n_u != problem.n_u or unknowns.grid.N != grid.N:
        raise ContractViolation("trajectory dimensions do not match the problem and grid")
    return _residual_flat(unknowns.flat(), problem, grid, tau)


def _jacobian_analytic(w, problem, grid, tau):
    X, L, U = _blocks(w, problem, grid)
    nx, nu, N, dt = problem.n_x, problem.n_u, grid.N, grid.dt
    nb = 2 * nx + nu
    R, Q, a = problem.R, problem.Q, problem.alpha
    I = np.eye(nx)
    rows, cols, vals = [], [], []

    def add(r0, c0, M):
        M = np.atleast_2d(M)
        ii, jj = np.nonzero(M)
        rows.extend(r0 + ii)
        cols.extend(c0 + jj)
        vals.extend(M[ii, jj])

    def cx(n):
        return n * nb

    def cl(n):
        return n * nb + nx

    def cu(n):
        return n * nb + 2 * nx

    add(0, cx(0), I)
    Hxx, Hxu, Huu = problem.hessians(X[0], U[0], L[0])
    add(nx, cx(0), Hxu.T)
    add(nx, cl(0), problem.f_u(X[0], U[0]).T)
    add(nx, cu(0), a * Q + Huu)
    pos = nx + nu
    w0, w1 = tau, 1 - tau
    for n in range(1, N + 1):
        xm = w0 * X[n - 1] + w1 * X[n]
        um = w0 * U[n - 1] + w1 * U[n]
        lm = w0 * L[n - 1] + w1 * L[n]
        fx = problem.f_x(xm, um)
        fu = problem.f_u(xm, um)
        Hxx, Hxu, Huu = problem.hessians(xm, um, lm)
        ra, rs, rc = pos, pos + nx, pos + 2 * nx
        for m, wt in ((n - 1, w0), (n, w1)):
            if wt == 0.0:
                continue
            add(ra, cx(m), -wt * (R + Hxx))
            add(ra, cu(m), -wt * Hxu)
            add(ra, cl(m), -wt * fx.T)
            add(rs, cx(m), -wt * fx)
            add(rs, cu(m), -wt * fu)
            add(rc, cx(m), wt * Hxu.T)
            add(rc, cl(m), wt * fu.T)
            add(rc, cu(m), wt * (a * Q + Huu))
        add(ra, cl(n - 1), I / dt)
        add(ra, cl(n), -I / dt)
        add(rs, cx(n), I / dt)
        add(rs, cx(n - 1), -I / dt)
        pos += nb
    add(pos, cl(N), I)
    size = (N + 1) * nb
    return sparse.csc_matrix((vals, (rows, cols)), shape=(size, size))


def _jacobian_fd(w, problem, grid, tau, step=1e-7):
    size = w.size
    J = np.empty((size, size))
    for j in range(size):
        h = step * (1 + abs(w[j]))
        wp = w.copy()
        wm = w.copy()
        wp[j] += h
        wm[j] -= h
        J[:, j] = (_residual_flat(wp, problem, grid, tau) - _residual_flat(wm, problem, grid, tau)) / (2 * h)
    return J


def residual_jacobian(unknowns: VectorTrajectory, problem: ControlProblem, grid: TimeGrid, tau,
                      mode: str = "analytic"):
    """Jacobian of :func:`residual` with respect to the stacked unknowns.

    ``mode="analytic"`` returns a sparse CSC matrix, ``"finite-difference"``
    a dense array built from central differences.
    """
    tau = Scheme.parse(tau).tau
    w = unknowns.flat()
    if mode == "analytic":
        return _jacobian_analytic(w, problem, grid, tau)
    if mode == "finite-difference":
        return _jacobian_fd(w, problem, grid, tau)
    raise ContractViolation(f"unknown jacobian mode {mode!r}")


def _newton(problem, grid, tau, settings, w, damped=False):
    F = _residual_flat(w, problem, grid, tau)
    norm = float(np.max(np.abs(F)))
    target = settings.tol * max(1.0, norm)
    history = [norm]
    it = 0
    while norm > target:
        if it >= settings.max_iter:
            raise ConvergenceError(
                f"Newton did not converge in {settings.max_iter} iterations "
                f"(residual {norm:.3e})", history)
        if settings.jacobian == "analytic":
            J = _jacobian_analytic(w, problem, grid, tau)
        else:
            J = sparse.csc_matrix(_jacobian_fd(w, problem, grid, tau, settings.fd_step))
        try:
            lu = splinalg.splu(J)
            dw = lu.solve(-F)
        except RuntimeError as exc:
            raise SolverError(f"singular Newton matrix at iteration {it + 1}") from exc
        step = 1.0
        if damped:
            # Armijo backtracking on the Euclidean residual norm
            merit = np.linalg.norm(F)
            while step > 1e-6:
                F_try = _residual_flat(w + step * dw, problem, grid, tau)
                if np.linalg.norm(F_try) < (1.0 - 1e-4 * step) * merit:
                    break
                step *= 0.5
        w = w + step * dw
        it += 1
        F = _residual_flat(w, problem, grid, tau)
        norm = float(np.max(np.abs(F)))
        history.append(norm)
        logger.debug("newton %d: residual %.3e step %.3g", it, norm, step)
        if not np.isfinite(norm):
            raise ConvergenceError(f"Newton diverged at iteration {it}", history)
    return w, it, history


def continuation_path(alpha: float, start: float, factor: float) -> list[float]:
    """Decreasing sequence ``start, start/factor, ...`` ending exactly at ``alpha``."""
    path = []
    al = start
    while al > alpha * (1.0 + 1e-12):
        path.append(al)
        al /= factor
    path.append(alpha)
    return path


def newton_solve(problem: ControlProblem, grid: TimeGrid, tau, settings: NewtonSettings | None = None,
                 guess: VectorTrajectory | None = None) -> VectorTrajectory:
    """Solve the discrete system by Newton's method.

    Convergence means ``max|F| <= tol * max(1, max|F_0|)``.  The returned
    trajectory's ``info`` holds ``iterations``, ``residual``, ``history``
    and the continuation path (``alphas``) when continuation was used.

    With ``settings.continuation`` a failed plain solve is retried along
    :func:`continuation_path`: the first stage starts from
    :func:`forward_guess`, every later one from its predecessor, and each
    uses backtracking Newton steps.  ``iterations`` and ``history`` then
    refer to the final stage.
    """
    settings = settings or NewtonSettings()
    tau = Scheme.parse(tau).tau
    if guess is None:
        guess = straight_line_guess(problem, grid)
    if guess.n_x != problem.n_x or guess.n_u != problem.n_u or guess.grid.N != grid.N:
        raise ContractViolation("initial guess dimensions do not match the problem and grid")
    w0 = guess.flat()
    try:
        w, it, history = _newton(problem, grid, tau, settings, w0)
        path = [problem.alpha]
    except (ConvergenceError, SolverError):
        if not settings.continuation:
            raise
        logger.info("plain Newton failed at alpha=%g, trying continuation", problem.alpha)
        path = continuation_path(problem.alpha, settings.continuation_start, settings.continuation_factor)
        w = forward_guess(problem.with_alpha(path[0]), grid, tau).flat()
        for al in path:
            w, it, history = _newton(problem.with_alpha(al), grid, tau, settings, w, damped=True)
    X, L, U = (b.copy() for b in _blocks(w, problem, grid))
    X[0] = problem.x_o
    L[-1] = 0.0
    info = {"iterations": it, "residual": history[-1], "history": history, "alphas": path}
    return VectorTrajectory(X, L, U, grid, info)


def straight_line_guess(problem: ControlProblem, grid: TimeGrid) -> VectorTrajectory:
    """States tracked by ``R`` move linearly from ``x_o`` to ``x_t``; all
    other states stay at ``x_o``; adjoints and controls are zero."""
    s = grid.times / grid.T
    tracked = np.diag(problem.R) != 0
    X = np.tile(problem.x_o, (grid.N + 1, 1))
    X[:, tracked] = problem.x_o[tracked] + np.outer(s, problem.x_t[tracked] - problem.x_o[tracked])
    L = np.zeros_like(X)
    U = np.zeros((grid.N + 1, problem.n_u))
    return VectorTrajectory(X, L, U, grid)


def forward_guess(problem: ControlProblem, grid: TimeGrid, tau) -> VectorTrajectory:
    """States obtained by marching the scheme with zero control; adjoints
    and controls are zero."""
    tau = Scheme.parse(tau).tau
    dt, nx = grid.dt, problem.n_x
    U = np.zeros((grid.N + 1, problem.n_u))
    X = np.empty((grid.N + 1, nx))
    X[0] = problem.x_o
    eye = np.eye(nx)
    for n in range(1, grid.N + 1):
        prev, x = X[n - 1], X[n - 1].copy()
        for _ in range(50):
            xm = tau * prev + (1.0 - tau) * x
            g = (x - prev) / dt - problem.f(xm, U[n])
            if np.max(np.abs(g)) <= 1e-13 * max(1.0, np.max(np.abs(x)) / dt):
                break
            x = x - np.linalg.solve(eye / dt - (1.0 - tau) * problem.f_x(xm, U[n]), g)
        if not np.all(np.isfinite(x)):
            raise SolverError(f"forward march failed at node {n}")
        X[n] = x
    return VectorTrajectory(X, np.zeros_like(X), U, grid)


def control_hamiltonian(x, u, lam, problem: ControlProblem) -> float:
    """``1/2 (x-x_t)' R (x-x_t) + alpha/2 u' Q u + lam' f(x, u)``."""
    x = np.asarray(x, dtype=float).reshape(problem.n_x)
    u = np.asarray(u, dtype=float).reshape(problem.n_u)
    lam = np.asarray(lam, dtype=float).reshape(problem.n_x)
    e = x - problem.x_t
    return float(0.5 * e @ problem.R @ e + 0.5 * problem.alpha * u @ problem.Q @ u
                 + lam @ problem.f(x, u))


def nodal_hamiltonian(traj: VectorTrajectory, problem: ControlProblem) -> Array:
    return np.array([control_hamiltonian(traj.x[n], traj.u[n], traj.lam[n], problem)
                     for n in range(traj.grid.N + 1)])


def linear_control_problem(params: LinearOCPParams) -> ControlProblem:
    """The scalar propelled-body problem written as a :class:`ControlProblem`."""
    m, b, a = params.m, params.b, params.a
    k = b / m
    fx = np.array([[-k]])
    fu = np.array([[1.0 / m]])
    zero1 = np.zeros((1, 1))
    return ControlProblem(
        n_x=1, n_u=1,
        f=lambda x, u: -k * x + u / m - a,
        f_x=lambda x, u: fx,
        f_u=lambda x, u: fu,
        R=[[1.0]], Q=[[1.0]], x_t=[params.v_t], alpha=params.alpha, x_o=[params.v_o], T=params.T,
        lam_f_hessian=lambda x, u, lam: (zero1, zero1, zero1),
        name="linear",
    )
