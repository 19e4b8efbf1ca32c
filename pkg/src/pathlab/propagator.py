"""Transition amplitudes on a space lattice.

The kernel is computed three ways. ``lattice_kernel`` iterates the
short-time kernel with quadrature weights, ``brute_force_kernel`` sums
``exp(iS/hbar)`` over every lattice path, and the closed forms serve as
oracles. All three share one normalisation: each slice contributes a
factor ``sqrt(m / (2 pi i hbar dt))`` on the branch with phase ``-pi/4``,
and each intermediate point carries its quadrature weight.

Real-time kernels have constant modulus, so a lattice only resolves them
while the chirp ``exp(i m (x - y)**2 / (2 hbar dt))`` stays below the
Nyquist rate across the domain. :func:`alias_ratio` measures this: above
1, spurious stationary points appear inside the domain and products of
short-time matrices grow without bound.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .action import discrete_action
from .errors import FocalPointError, ValidationError
from .grid import (DEFAULT_ENUMERATION_CAP, PhysicalConstants, Potential, SpaceGrid,
                   TimeGrid, enumerate_lattice_paths)

CAUSTIC_EPS = 1e-9


class AliasingWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class Kernel:
    """Kernel matrix indexed ``[x2 index, x1 index]``."""

    values: np.ndarray = field(repr=False)
    space_grid: SpaceGrid
    t_start: float
    t_end: float
    provenance: str
    dt: float | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.space_grid.n_points,) * 2:
            raise ValidationError(f"kernel shape {v.shape} does not match the space grid")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def dx(self) -> float:
        return self.space_grid.dx

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def entry(self, x2: float, x1: float) -> complex:
        sg = self.space_grid
        return complex(self.values[sg.index_of(x2), sg.index_of(x1)])


@dataclass(frozen=True)
class Wavefunction:
    values: np.ndarray = field(repr=False)
    space_grid: SpaceGrid
    time: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.space_grid.n_points,):
            raise ValidationError(f"wavefunction shape {v.shape} does not match the space grid")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2) * self.space_grid.dx)


def alias_ratio(sg: SpaceGrid, dt: float, c: PhysicalConstants) -> float:
    """Domain width over the alias length ``2 pi hbar dt / (m dx)``."""
    return c.mass * sg.width * sg.dx / (2 * np.pi * c.hbar * dt)


def _prefactor(m_over_hbar_t: float) -> complex:
    return np.sqrt(m_over_hbar_t / (2 * np.pi)) * np.exp(-0.25j * np.pi)


def short_time_kernel(x_to, x_from, dt: float, p: Potential, c: PhysicalConstants):
    """Single-slice amplitude with midpoint potential."""
    if not dt > 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    x_to = np.asarray(x_to, dtype=float)
    x_from = np.asarray(x_from, dtype=float)
    s = 0.5 * c.mass * (x_to - x_from) ** 2 / dt - dt * p(0.5 * (x_to + x_from))
    return _prefactor(c.mass / (c.hbar * dt)) * np.exp(1j * s / c.hbar)


def short_time_matrix(sg: SpaceGrid, dt: float, p: Potential, c: PhysicalConstants) -> np.ndarray:
    x = sg.points
    return short_time_kernel(x[:, None], x[None, :], dt, p, c)


def _warn_if_aliased(sg, dt, c):
    r = alias_ratio(sg, dt, c)
    if r > 1:
        warnings.warn(f"alias ratio {r:.3g} > 1: the lattice cannot resolve the "
                      f"short-time kernel over this domain", AliasingWarning, stacklevel=3)


def lattice_kernel(sg: SpaceGrid, tg: TimeGrid, p: Potential, c: PhysicalConstants) -> Kernel:
    s = short_time_matrix(sg, tg.dt, p, c)
    if tg.n_slices > 1:
        _warn_if_aliased(sg, tg.dt, c)
    w = sg.weights()[:, None]
    k = s
    for _ in range(tg.n_slices - 1):
        k = s @ (w * k)
    return Kernel(k, sg, tg.t_start, tg.t_end, "lattice", tg.dt)


def propagate_columns(sg: SpaceGrid, dt: float, n: int, p: Potential, c: PhysicalConstants,
                      source: int, s: np.ndarray | None = None) -> list[np.ndarray]:
    """Columns ``K_k[:, source]`` of the k-slice lattice kernels, k = 1..n.

    Lattice kernels are symmetric, so these are also their rows. Pass the
    short-time matrix as ``s`` to reuse it across calls.
    """
    if s is None:
        s = short_time_matrix(sg, dt, p, c)
    if n > 1:
        _warn_if_aliased(sg, dt, c)
    w = sg.weights()
    cols = [s[:, source].copy()]
    for _ in range(n - 1):
        cols.append(s @ (w * cols[-1]))
    return cols


def brute_force_kernel(sg: SpaceGrid, tg: TimeGrid, p: Potential, c: PhysicalConstants,
                       x1: float, x2: float, cap: int = DEFAULT_ENUMERATION_CAP) -> complex:
    """Literal sum of ``exp(iS/hbar)`` over every lattice path from x1 to x2."""
    w = sg.weights()
    x0 = sg.x_min
    dx = sg.dx
    total = 0j
    for path in enumerate_lattice_paths(sg, tg, x1, x2, cap):
        idx = np.rint((path.interior - x0) / dx).astype(int)
        total += np.prod(w[idx]) * np.exp(1j * discrete_action(path, p, tg, c) / c.hbar)
    return complex(_prefactor(c.mass / (c.hbar * tg.dt)) ** tg.n_slices * total)


def analytic_kernel_free(x2, x1, T: float, c: PhysicalConstants):
    if not T > 0:
        raise ValidationError(f"T must be positive, got {T}")
    x1, x2 = np.asarray(x1, float), np.asarray(x2, float)
    return _prefactor(c.mass / (c.hbar * T)) * np.exp(0.5j * c.mass * (x2 - x1) ** 2 / (c.hbar * T))


def analytic_kernel_harmonic(x2, x1, T: float, omega: float, c: PhysicalConstants,
                             eps: float = CAUSTIC_EPS):
    """Mehler kernel. Past each focal point the prefactor phase drops by pi/2."""
    if not T > 0:
        raise ValidationError(f"T must be positive, got {T}")
    wt = omega * T
    sn = np.sin(wt)
    if abs(sn) < eps:
        raise FocalPointError(f"focal point: |sin(omega T)| = {abs(sn):.3e} at omega T = {wt:.6g}")
    x1, x2 = np.asarray(x1, float), np.asarray(x2, float)
    maslov = np.floor(wt / np.pi)
    pref = np.sqrt(c.mass * omega / (2 * np.pi * c.hbar * abs(sn))) \
        * np.exp(-0.25j * np.pi - 0.5j * np.pi * maslov)
    phase = c.mass * omega / (2 * c.hbar * sn) * ((x1**2 + x2**2) * np.cos(wt) - 2 * x1 * x2)
    return pref * np.exp(1j * phase)


def analytic_kernel(sg: SpaceGrid, tg: TimeGrid, p: Potential, c: PhysicalConstants) -> Kernel:
    """Closed-form kernel sampled on the grid (free and harmonic families)."""
    x = sg.points
    if p.family == "free":
        k = analytic_kernel_free(x[:, None], x[None, :], tg.duration, c)
    elif p.family == "harmonic":
        k = analytic_kernel_harmonic(x[:, None], x[None, :], tg.duration, p.omega, c)
    else:
        raise ValidationError(f"no closed-form kernel for the {p.family} family")
    return Kernel(k, sg, tg.t_start, tg.t_end, "analytic")


def evolve_wavefunction(psi: Wavefunction, k: Kernel) -> Wavefunction:
    if psi.space_grid != k.space_grid:
        raise ValidationError("wavefunction and kernel live on different space grids")
    w = psi.space_grid.weights()
    return Wavefunction(k.values @ (w * psi.values), psi.space_grid, psi.time + k.duration)


def compose_kernels(k_a: Kernel, k_b: Kernel) -> Kernel:
    """Kernel over ``k_b``'s interval followed by ``k_a``'s."""
    if k_a.space_grid != k_b.space_grid:
        raise ValidationError("kernels live on different space grids")
    if not np.isclose(k_b.t_end, k_a.t_start, rtol=0, atol=1e-12 * max(1.0, abs(k_a.t_start))):
        raise ValidationError(
            f"intervals do not adjoin: first ends at {k_b.t_end}, second starts at {k_a.t_start}"
        )
    w = k_a.space_grid.weights()
    values = k_a.values @ (w[:, None] * k_b.values)
    dt = k_a.dt if k_a.dt == k_b.dt else None
    return Kernel(values, k_a.space_grid, k_b.t_start, k_a.t_end, "lattice", dt)


def gaussian_packet(sg: SpaceGrid, sigma0: float, k0: float, x0: float = 0.0,
                    time: float = 0.0) -> Wavefunction:
    """Normalised Gaussian with position spread ``sigma0`` and wavenumber ``k0``."""
    x = sg.points
    amp = (2 * np.pi * sigma0**2) ** -0.25
    return Wavefunction(amp * np.exp(-((x - x0) ** 2) / (4 * sigma0**2) + 1j * k0 * x), sg, time)


def free_gaussian_at(sg: SpaceGrid, sigma0: float, k0: float, x0: float, t: float,
                     c: PhysicalConstants) -> Wavefunction:
    """Closed-form free evolution of :func:`gaussian_packet` after time ``t``."""
    x = sg.points
    s = sigma0**2 + 0.5j * c.hbar * t / c.mass
    amp = (2 * np.pi * sigma0**2) ** -0.25 * np.sqrt(sigma0**2 / s)
    centre = x0 + c.hbar * k0 * t / c.mass
    vals = amp * np.exp(-((x - centre) ** 2) / (4 * s) + 1j * k0 * x
                        - 0.5j * c.hbar * k0**2 * t / c.mass)
    return Wavefunction(vals, sg, t)
