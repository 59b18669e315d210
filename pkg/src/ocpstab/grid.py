"""Uniform time grids, the tau-family of schemes, and trajectory containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, ContractViolation

#: Relative mismatch allowed when converting a step size into a step count.
DT_ROUNDING_RTOL = 1e-9


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [0, T] with N steps."""

    T: float
    N: int

    def __post_init__(self):
        if not np.isfinite(self.T) or self.T <= 0:
            raise ConfigurationError(f"final time must be positive, got T={self.T!r}")
        if int(self.N) != self.N or self.N < 2:
            raise ConfigurationError(f"step count must be an integer >= 2, got N={self.N!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "T", float(self.T))

    @property
    def dt(self) -> float:
        return self.T / self.N

    @property
    def times(self) -> np.ndarray:
        # n * (T / N) rather than cumulative sums so that nodes are bit-reproducible
        t = np.arange(self.N + 1) * self.dt
        t[-1] = self.T
        return t


def make_grid(T: float, N: int) -> TimeGrid:
    """Build a :class:`TimeGrid` from final time and step count."""
    return TimeGrid(T, N)


def grid_from_dt(T: float, dt: float) -> TimeGrid:
    """Build a grid from a step size, insisting that dt divides T.

    N is taken as ``round(T / dt)``; a :class:`ConfigurationError` is raised
    when ``|N dt - T| / T`` exceeds 1e-9.
    """
    if not np.isfinite(dt) or dt <= 0:
        raise ConfigurationError(f"time step must be positive, got dt={dt!r}")
    if not np.isfinite(T) or T <= 0:
        raise ConfigurationError(f"final time must be positive, got T={T!r}")
    N = int(round(T / dt))
    if N < 1 or abs(N * dt - T) / T > DT_ROUNDING_RTOL:
        raise ConfigurationError(f"dt={dt!r} does not divide T={T!r} into an integer number of steps")
    return TimeGrid(T, N)


@dataclass(frozen=True)
class Scheme:
    """Member of the one-parameter family evaluating terms at ``t_{n - tau}``.

    ``tau = 0`` is implicit Euler, ``tau = 1/2`` is the mid-point rule.
    """

    tau: float

    def __post_init__(self):
        if not 0.0 <= self.tau <= 0.5:
            raise ConfigurationError(f"tau must lie in [0, 1/2], got {self.tau!r}")
        object.__setattr__(self, "tau", float(self.tau))

    @classmethod
    def implicit_euler(cls) -> "Scheme":
        return cls(0.0)

    @classmethod
    def midpoint(cls) -> "Scheme":
        return cls(0.5)

    @classmethod
    def parse(cls, value) -> "Scheme":
        """Accept ``"mp"``, ``"ie"``, a Scheme, or a numeric tau."""
        if isinstance(value, Scheme):
            return value
        if isinstance(value, str):
            key = value.strip().lower()
            if key == "mp":
                return cls.midpoint()
            if key == "ie":
                return cls.implicit_euler()
            try:
                return cls(float(key))
            except ValueError:
                raise ConfigurationError(f"unknown scheme {value!r}") from None
        return cls(float(value))

    @property
    def name(self) -> str:
        if self.tau == 0.5:
            return "mp"
        if self.tau == 0.0:
            return "ie"
        return f"tau={self.tau:g}"


def interpolated_node(seq, n: int, tau: float):
    """Return ``tau * seq[n-1] + (1 - tau) * seq[n]``.

    Works on scalar sequences and on arrays whose first axis is time.
    """
    if not 0.0 <= tau <= 0.5:
        raise ContractViolation(f"tau must lie in [0, 1/2], got {tau!r}")
    if n < 1 or n >= len(seq):
        raise ContractViolation(f"node index {n} outside 1..{len(seq) - 1}")
    if tau == 0.0:
        return seq[n]
    if tau == 0.5:
        return 0.5 * (np.asarray(seq[n - 1]) + np.asarray(seq[n]))
    return tau * np.asarray(seq[n - 1]) + (1.0 - tau) * np.asarray(seq[n])


@dataclass(frozen=True)
class ScalarTrajectory:
    """Nodal velocity, adjoint and control of a scalar problem."""

    v: np.ndarray
    lam: np.ndarray
    u: np.ndarray
    grid: TimeGrid

    def __post_init__(self):
        for name in ("v", "lam", "u"):
            arr = _frozen(getattr(self, name))
            if arr.shape != (self.grid.N + 1,):
                raise ContractViolation(
                    f"{name} has shape {arr.shape}, expected ({self.grid.N + 1},)")
            object.__setattr__(self, name, arr)

    @property
    def t(self) -> np.ndarray:
        return self.grid.times


@dataclass(frozen=True)
class VectorTrajectory:
    """Nodal states ``x[n]``, adjoints ``lam[n]`` and controls ``u[n]``.

    Arrays have shapes ``(N+1, n_x)``, ``(N+1, n_x)`` and ``(N+1, n_u)``.
    """

    x: np.ndarray
    lam: np.ndarray
    u: np.ndarray
    grid: TimeGrid
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        x = _frozen(np.atleast_2d(np.asarray(self.x, dtype=float).reshape(self.grid.N + 1, -1)))
        lam = _frozen(np.asarray(self.lam, dtype=float).reshape(self.grid.N + 1, -1))
        u = _frozen(np.asarray(self.u, dtype=float).reshape(self.grid.N + 1, -1))
        if lam.shape != x.shape:
            raise ContractViolation(f"adjoint shape {lam.shape} does not match state shape {x.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "u", u)

    @property
    def n_x(self) -> int:
        return self.x.shape[1]

    @property
    def n_u(self) -> int:
        return self.u.shape[1]

    @property
    def t(self) -> np.ndarray:
        return self.grid.times

    def flat(self) -> np.ndarray:
        """Unknown vector ordered node by node as ``[x_n, lam_n, u_n]``."""
        return np.hstack([self.x, self.lam, self.u]).ravel()

    @classmethod
    def from_flat(cls, w: np.ndarray, grid: TimeGrid, n_x: int, n_u: int, info=None) -> "VectorTrajectory":
        blocks = np.asarray(w, dtype=float).reshape(grid.N + 1, 2 * n_x + n_u)
        return cls(blocks[:, :n_x], blocks[:, n_x:2 * n_x], blocks[:, 2 * n_x:], grid, dict(info or {}))


def as_sequence(x: Sequence[float] | ScalarTrajectory) -> np.ndarray:
    if isinstance(x, ScalarTrajectory):
        return np.asarray(x.u)
    return np.asarray(x, dtype=float)
