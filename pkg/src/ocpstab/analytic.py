"""Closed-form optimal trajectory of the scalar propelled-body problem.

The body obeys ``m dv/dt = -b v + u - m a`` and the control minimises
``int_0^T 1/2 (v - v_t)^2 + alpha/2 u^2 dt``.  The optimality system is
linear with constant coefficients, so state and adjoint are sums of
``exp(+gamma t)``, ``exp(-gamma t)`` and a constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError

#: Above this value of gamma*T the integration constants are evaluated in
#: a form scaled by exp(-gamma*T) to avoid overflow.
_OVERFLOW_GT = 300.0


@dataclass(frozen=True)
class LinearOCPParams:
    """Physical and cost parameters of the scalar problem."""

    m: float = 1.0
    b: float = 1.0
    a: float = 1.0
    v_o: float = 0.0
    v_t: float = 20.0
    T: float = 10.0
    alpha: float = 1e-1

    def __post_init__(self):
        for name in ("m", "b", "T", "alpha"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ConfigurationError(f"{name} must be positive and finite, got {val!r}")
        if not self.a >= 0:
            raise ConfigurationError(f"a must be non-negative, got {self.a!r}")

    def with_alpha(self, alpha: float) -> "LinearOCPParams":
        return LinearOCPParams(self.m, self.b, self.a, self.v_o, self.v_t, self.T, alpha)

    def with_horizon(self, T: float) -> "LinearOCPParams":
        return LinearOCPParams(self.m, self.b, self.a, self.v_o, self.v_t, T, self.alpha)


def gamma(params) -> float:
    """Rate ``sqrt(b^2/m^2 + 1/(alpha m^2))`` of the optimal dynamics."""
    m, b, alpha = params.m, params.b, params.alpha
    return math.sqrt((b / m) ** 2 + 1.0 / (alpha * m * m))


@dataclass(frozen=True)
class AnalyticSolution:
    """Constants of the closed-form solution.

    ``C1_scaled`` equals ``C1 * exp(gamma T)``; it is what :func:`eval_analytic`
    uses so that large ``gamma T`` never overflows.
    """

    gamma: float
    v_p: float
    lam_p: float
    C1: float
    C2: float
    C1_scaled: float
    T: float


def derive_constants(params: LinearOCPParams) -> AnalyticSolution:
    m, b, a = params.m, params.b, params.a
    v_o, v_t, alpha, T = params.v_o, params.v_t, params.alpha, params.T
    g = gamma(params)
    mg2 = m * g * g
    v_p = (v_t - alpha * b * m * a) / (alpha * m * mg2)
    lam_p = -(b * v_t + m * a) / mg2
    bp, bm = b + m * g, b - m * g
    gT = g * T
    if gT > _OVERFLOW_GT:
        e1 = math.exp(-gT)
        e2 = e1 * e1
        C1_scaled = (m * (v_o - v_p) * e1 + bp * lam_p) / (bm * e2 - bp)
        C1 = C1_scaled * e1
    else:
        ep, em = math.exp(gT), math.exp(-gT)
        C1 = (m * (v_o - v_p) * em + bp * lam_p) / (bm * em - bp * ep)
        C1_scaled = C1 * ep
    C2 = (m * (v_o - v_p) - bm * C1) / bp
    return AnalyticSolution(g, v_p, lam_p, C1, C2, C1_scaled, T)


def eval_analytic(sol: AnalyticSolution, params: LinearOCPParams, t):
    """Evaluate ``(v, lam, u)`` of the closed-form solution at time(s) ``t``.

    The control is recovered from stationarity of the Hamiltonian,
    ``u = -lam / (alpha m)``.

    Raises
    ------
    DomainError
        If any ``t`` lies outside ``[0, T]``.
    """
    tt = np.asarray(t, dtype=float)
    if np.any(tt < 0) or np.any(tt > params.T) or not np.all(np.isfinite(tt)):
        raise DomainError(f"t must lie in [0, {params.T}]")
    g, k = sol.gamma, params.b / params.m
    grow = sol.C1_scaled * np.exp(g * (tt - params.T))
    decay = sol.C2 * np.exp(-g * tt)
    v = (k - g) * grow + (k + g) * decay + sol.v_p
    lam = grow + decay + sol.lam_p
    u = -lam / (params.alpha * params.m)
    if np.ndim(t) == 0:
        return float(v), float(lam), float(u)
    return v, lam, u
