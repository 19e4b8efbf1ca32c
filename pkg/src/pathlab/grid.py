"""Lattices, potentials and lattice paths shared by the rest of the package."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import EnumerationCapError, ValidationError

DEFAULT_ENUMERATION_CAP = 10**7


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.mass > 0):
            raise ValidationError(f"hbar and mass must be positive, got {self.hbar}, {self.mass}")


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    t_end: float
    n_slices: int

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValidationError(
                f"non-positive interval: t_end={self.t_end} <= t_start={self.t_start}"
            )
        if int(self.n_slices) != self.n_slices or self.n_slices < 1:
            raise ValidationError(f"n_slices must be a positive integer, got {self.n_slices}")

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    @property
    def dt(self) -> float:
        return self.duration / self.n_slices

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_slices + 1)


def build_time_grid(t1: float, t2: float, n: int) -> TimeGrid:
    return TimeGrid(float(t1), float(t2), n)


def smooth_step(t):
    """C-infinity ramp from 0 (t <= 0) to 1 (t >= 1)."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)

    def bump(s):
        safe = np.where(s > 0, s, 1.0)
        return np.where(s > 0, np.exp(-1.0 / safe), 0.0)

    a, b = bump(t), bump(1.0 - t)
    return a / (a + b)


@dataclass(frozen=True)
class SpaceGrid:
    """Uniform spatial lattice on ``[x_min, x_max]``.

    ``edge_taper`` is the width, as a fraction of the domain, of a smooth
    window that takes the quadrature weights to zero at both edges. Zero
    gives plain trapezoid weights. A nonzero taper suppresses the spurious
    contributions that hard truncation of non-decaying oscillatory kernels
    produces at the boundary.
    """

    x_min: float
    x_max: float
    n_points: int
    edge_taper: float = 0.0

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValidationError(f"empty domain: x_max={self.x_max} <= x_min={self.x_min}")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValidationError(f"n_points must be an integer >= 2, got {self.n_points}")
        if not 0.0 <= self.edge_taper < 0.5:
            raise ValidationError(f"edge_taper must lie in [0, 0.5), got {self.edge_taper}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.width / (self.n_points - 1)

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @property
    def center(self) -> float:
        return 0.5 * (self.x_min + self.x_max)

    def weights(self) -> np.ndarray:
        w = np.full(self.n_points, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        if self.edge_taper > 0:
            x = self.points
            band = self.edge_taper * self.width
            w = w * smooth_step((x - self.x_min) / band) * smooth_step((self.x_max - x) / band)
        return w

    def index_of(self, x: float) -> int:
        """Index of the grid point at ``x``; raises if ``x`` is not a grid point."""
        k = int(round((x - self.x_min) / self.dx))
        if not 0 <= k < self.n_points or abs(self.x_min + k * self.dx - x) > 1e-9 * self.dx:
            raise ValidationError(f"coordinate {x} is not a point of the space grid")
        return k

    def inner_mask(self, fraction: float = 0.8) -> np.ndarray:
        """Points inside the central ``fraction`` of the domain."""
        return np.abs(self.points - self.center) <= 0.5 * fraction * self.width + 1e-12 * self.width

    def edge_leak(self, values, band: float = 0.1) -> float:
        """Fraction of ``sum |v|^2 dx`` lying in the two outer bands."""
        mass = np.abs(np.asarray(values)) ** 2
        total = mass.sum()
        if total == 0:
            return 0.0
        return float(mass[~self.inner_mask(1.0 - 2 * band)].sum() / total)


@dataclass(frozen=True)
class Potential:
    """Polynomial potential ``V(x) = sum c_k x**k``.

    Use the ``free``, ``harmonic`` and ``polynomial`` constructors; the
    harmonic family is stored as its polynomial with ``c2 = m w**2 / 2``.
    """

    coefficients: tuple[float, ...]
    family: str = "polynomial"
    omega: float | None = None

    def __post_init__(self):
        c = tuple(float(v) for v in self.coefficients) or (0.0,)
        if not all(np.isfinite(c)):
            raise ValidationError("potential coefficients must be finite")
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def free(cls) -> "Potential":
        return cls((0.0,), family="free")

    @classmethod
    def harmonic(cls, omega: float, mass: float = 1.0) -> "Potential":
        return cls((0.0, 0.0, 0.5 * mass * omega**2), family="harmonic", omega=float(omega))

    @classmethod
    def polynomial(cls, *coefficients: float) -> "Potential":
        return cls(tuple(coefficients), family="polynomial")

    @property
    def is_quadratic(self) -> bool:
        c = self.coefficients
        return all(v == 0.0 for v in c[3:])

    def scaled(self, s: float) -> "Potential":
        return Potential(tuple(s * v for v in self.coefficients), self.family,
                         None if self.omega is None else self.omega * np.sqrt(s))

    def __call__(self, x):
        return P.polyval(x, self.coefficients)

    def _eval_derivative(self, x, order):
        c = P.polyder(self.coefficients, order)
        if c.size == 0:
            return np.zeros_like(np.asarray(x, dtype=float))
        return P.polyval(x, c)

    def derivative(self, x):
        return self._eval_derivative(x, 1)

    def second_derivative(self, x):
        return self._eval_derivative(x, 2)


def eval_potential(p: Potential, x):
    return p(x)


def eval_potential_derivative(p: Potential, x):
    return p.derivative(x)


@dataclass(frozen=True)
class LatticePath:
    """Positions at every time node, endpoints included."""

    positions: np.ndarray = field(repr=False)

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 1 or pos.size < 2:
            raise ValidationError("a path needs at least its two endpoints")
        pos.flags.writeable = False
        object.__setattr__(self, "positions", pos)

    @property
    def n_slices(self) -> int:
        return self.positions.size - 1

    @property
    def endpoints(self) -> tuple[float, float]:
        return float(self.positions[0]), float(self.positions[-1])

    @property
    def interior(self) -> np.ndarray:
        return self.positions[1:-1]

    def __eq__(self, other):
        return isinstance(other, LatticePath) and np.array_equal(self.positions, other.positions)

    def __hash__(self):
        return hash(self.positions.tobytes())


def as_positions(path) -> np.ndarray:
    return path.positions if isinstance(path, LatticePath) else np.asarray(path, dtype=float)


def path_count(sg: SpaceGrid, tg: TimeGrid) -> int:
    return sg.n_points ** (tg.n_slices - 1)


def enumerate_lattice_paths(sg: SpaceGrid, tg: TimeGrid, x1: float, x2: float,
                            cap: int = DEFAULT_ENUMERATION_CAP):
    """Yield every lattice path from ``x1`` to ``x2``.

    Each interior node ranges independently over all grid points, so there
    are ``n_points ** (n_slices - 1)`` paths.
    """
    count = path_count(sg, tg)
    if count > cap:
        raise EnumerationCapError(count, cap)
    sg.index_of(x1)
    sg.index_of(x2)
    pts = sg.points
    for interior in itertools.product(pts, repeat=tg.n_slices - 1):
        yield LatticePath(np.array((x1, *interior, x2)))


def enumerate_lattice_indices(sg: SpaceGrid, tg: TimeGrid, cap: int = DEFAULT_ENUMERATION_CAP):
    """Interior grid indices of every lattice path, in the same order as
    :func:`enumerate_lattice_paths`."""
    count = path_count(sg, tg)
    if count > cap:
        raise EnumerationCapError(count, cap)
    return itertools.product(range(sg.n_points), repeat=tg.n_slices - 1)
