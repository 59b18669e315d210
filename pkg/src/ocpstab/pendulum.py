"""Planar elastic inverted pendulum driven by the velocity of its base.

Mass 1 slides on the x-axis and its velocity is the control; mass 2 moves
freely in the plane, tied to mass 1 by a linear spring of stiffness ``k``
and rest length ``l_o`` and pulled down by gravity ``a``.  The reduced
state is ``z = (x1, x2x, x2y, v2x, v2y)`` with dynamics::

    dx1/dt = u
    dx2/dt = v2
    m2 dv2/dt = -grad_{x2} U - m2 a e_y,        U = k/2 (|x2 - x1| - l_o)^2

and the cost tracks the height of mass 2 while penalising the base speed.
Because mass 1 has prescribed velocity its inertia ``m1`` does not enter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, SingularConfigurationError
from .hbvp import ControlProblem

_MIN_LENGTH = 1e-12

#: Projection from the reduced state onto the spring vector ``d = x2 - x1``.
_D = np.array([[-1.0, 1.0, 0.0, 0.0, 0.0],
               [0.0, 0.0, 1.0, 0.0, 0.0]])


@dataclass(frozen=True)
class PendulumParams:
    m1: float = 1.0
    m2: float = 1.0
    k: float = 1.0
    a: float = 1.0
    x_target: float = 2.0
    T: float = 4.0
    alpha: float = 1e-2
    l_o: float | None = None
    x1_0: tuple = (0.0, 0.0)
    x2_0: tuple = (0.3, 1.0)

    def __post_init__(self):
        for name in ("m1", "m2", "k", "T", "alpha"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ConfigurationError(f"{name} must be positive, got {val!r}")
        if self.x1_0[1] != 0.0:
            raise ConfigurationError("mass 1 is constrained to the x-axis")
        if self.l_o is None:
            object.__setattr__(self, "l_o", initial_length(self))
        if not self.l_o > 0:
            raise ConfigurationError(f"rest length must be positive, got {self.l_o!r}")

    @property
    def z0(self) -> np.ndarray:
        return np.array([self.x1_0[0], self.x2_0[0], self.x2_0[1], 0.0, 0.0])


def initial_length(params) -> float:
    dx = params.x2_0[0] - params.x1_0[0]
    dy = params.x2_0[1] - params.x1_0[1]
    return math.hypot(dx, dy)


def spring_potential(x1, x2, k: float, l_o: float) -> float:
    l = float(np.linalg.norm(np.asarray(x2, float) - np.asarray(x1, float)))
    return 0.5 * k * (l - l_o) ** 2


def spring_gradient(x1, x2, k: float, l_o: float):
    """Gradient of the spring energy with respect to each mass position.

    Returns ``(g1, g2)`` with ``g2 = k (l - l_o) (x2 - x1)/l`` and ``g1 = -g2``.
    """
    d = np.asarray(x2, float) - np.asarray(x1, float)
    l = float(np.linalg.norm(d))
    if l < _MIN_LENGTH:
        raise SingularConfigurationError("masses coincide; spring direction undefined")
    g2 = k * (l - l_o) / l * d
    return -g2, g2


def _spring_hessian(d, k, l_o):
    l = float(np.linalg.norm(d))
    if l < _MIN_LENGTH:
        raise SingularConfigurationError("masses coincide; spring direction undefined")
    c = k * (1.0 - l_o / l)
    beta = k * l_o / l ** 3
    return c * np.eye(2) + beta * np.outer(d, d)


def _spring_third(d, mu, k, l_o):
    # d/dd of (H(d) @ mu)
    l = float(np.linalg.norm(d))
    beta = k * l_o / l ** 3
    dm = float(d @ mu)
    return beta * (np.outer(mu, d) + np.outer(d, mu) + dm * np.eye(2)
                   - 3.0 * dm / (l * l) * np.outer(d, d))


def pendulum_problem(params: PendulumParams) -> ControlProblem:
    """Reduced five-state, one-control formulation of the pendulum."""
    m2, k, l_o, g = params.m2, params.k, params.l_o, params.a

    def f(z, u):
        d = _D @ z
        _, g2 = spring_gradient(np.zeros(2), d, k, l_o)
        return np.array([u[0], z[3], z[4], -g2[0] / m2, -g2[1] / m2 - g])

    def f_x(z, u):
        J = np.zeros((5, 5))
        J[1, 3] = J[2, 4] = 1.0
        J[3:5] = -(_spring_hessian(_D @ z, k, l_o) @ _D) / m2
        return J

    fu = np.array([[1.0], [0.0], [0.0], [0.0], [0.0]])

    def f_u(z, u):
        return fu

    def hess(z, u, lam):
        Hxx = -(_D.T @ _spring_third(_D @ z, lam[3:5], k, l_o) @ _D) / m2
        return Hxx, np.zeros((5, 1)), np.zeros((1, 1))

    R = np.zeros((5, 5))
    R[2, 2] = 1.0
    return ControlProblem(
        n_x=5, n_u=1, f=f, f_x=f_x, f_u=f_u,
        R=R, Q=[[1.0]], x_t=[0.0, 0.0, params.x_target, 0.0, 0.0],
        alpha=params.alpha, x_o=params.z0, T=params.T,
        lam_f_hessian=hess, name="pendulum",
    )
