"""Discrete action on a time lattice, with its gradient and Hessian.

Each slice contributes ``[m/2 ((x_{k+1} - x_k)/dt)**2 - V(midpoint)] dt``.
The same midpoint rule is used by the short-time kernel, so path sums and
kernel products carry identical phases.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal, solve_banded

from .errors import ValidationError
from .grid import PhysicalConstants, Potential, TimeGrid, as_positions


@dataclass(frozen=True)
class Tridiagonal:
    """Symmetric tridiagonal matrix stored as its diagonal and off-diagonal."""

    diag: np.ndarray
    off: np.ndarray

    @property
    def size(self) -> int:
        return self.diag.size

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def matvec(self, v):
        out = self.diag * v
        out[:-1] += self.off * v[1:]
        out[1:] += self.off * v[:-1]
        return out

    def solve(self, rhs):
        ab = np.zeros((3, self.size))
        ab[0, 1:] = self.off
        ab[1] = self.diag
        ab[2, :-1] = self.off
        return solve_banded((1, 1), ab, rhs)

    def eigvalsh(self):
        if self.size == 1:
            return self.diag.copy()
        return eigvalsh_tridiagonal(self.diag, self.off)


def _checked(path, tg: TimeGrid) -> np.ndarray:
    x = as_positions(path)
    if x.size != tg.n_slices + 1:
        raise ValidationError(
            f"path has {x.size} nodes but the time grid has {tg.n_slices + 1}"
        )
    return x


def _require_interior(tg: TimeGrid):
    if tg.n_slices < 2:
        raise ValidationError("no interior points: n_slices must be at least 2")


def slice_actions(path, p: Potential, tg: TimeGrid, c: PhysicalConstants) -> np.ndarray:
    """Action contributed by each slice."""
    x = _checked(path, tg)
    dt = tg.dt
    v = np.diff(x) / dt
    return (0.5 * c.mass * v**2 - p(0.5 * (x[1:] + x[:-1]))) * dt


def discrete_action(path, p: Potential, tg: TimeGrid, c: PhysicalConstants) -> float:
    return float(slice_actions(path, p, tg, c).sum())


def action_gradient(path, p: Potential, tg: TimeGrid, c: PhysicalConstants) -> np.ndarray:
    """dS/dx_k for the interior nodes k = 1 .. n-1."""
    _require_interior(tg)
    x = _checked(path, tg)
    dt, m = tg.dt, c.mass
    force = p.derivative(0.5 * (x[1:] + x[:-1]))
    return m * (2 * x[1:-1] - x[:-2] - x[2:]) / dt - 0.5 * dt * (force[:-1] + force[1:])


def action_hessian(path, p: Potential, tg: TimeGrid, c: PhysicalConstants) -> Tridiagonal:
    _require_interior(tg)
    x = _checked(path, tg)
    dt, m = tg.dt, c.mass
    curv = p.second_derivative(0.5 * (x[1:] + x[:-1]))
    diag = 2 * m / dt - 0.25 * dt * (curv[:-1] + curv[1:])
    off = -m / dt - 0.25 * dt * curv[1:-1]
    return Tridiagonal(np.asarray(diag, float), np.asarray(off, float))
