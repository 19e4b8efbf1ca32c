"""Transition quantities <f(tau)>: path sums with f(x(tau)) inserted.

Grouping the path sum by the position y at the intermediate node gives

    <f(tau_k)> = sum_y K_{n-k}(x2, y) f(y) K_k(y, x1) w(y)

which is what :func:`transition_quantity_insertion` evaluates. The brute
force version enumerates every path instead.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from .action import discrete_action
from .errors import ValidationError
from .grid import (DEFAULT_ENUMERATION_CAP, LatticePath, PhysicalConstants, Potential,
                   SpaceGrid, TimeGrid, as_positions, enumerate_lattice_paths)
from .propagator import _prefactor, propagate_columns, short_time_matrix


@dataclass(frozen=True)
class KinematicQuantity:
    """A function of position only, stored as polynomial coefficients."""

    tag: str
    coefficients: tuple[float, ...]

    @classmethod
    def position(cls):
        return cls("position", (0.0, 1.0))

    @classmethod
    def position_squared(cls):
        return cls("position_squared", (0.0, 0.0, 1.0))

    @classmethod
    def potential_energy(cls, p: Potential):
        return cls("potential_energy", p.coefficients)

    @classmethod
    def polynomial(cls, *coefficients):
        return cls("polynomial", tuple(float(v) for v in coefficients))

    @classmethod
    def unit(cls):
        return cls.polynomial(1.0)

    @classmethod
    def from_name(cls, name: str, p: Potential | None = None):
        if name == "position":
            return cls.position()
        if name == "position_squared":
            return cls.position_squared()
        if name == "potential_energy":
            return cls.potential_energy(p)
        if name == "unit":
            return cls.unit()
        raise ValidationError(f"unknown kinematic quantity {name!r}")

    def __call__(self, x):
        return P.polyval(x, self.coefficients)


def linear_combination(a: float, f: KinematicQuantity, b: float, g: KinematicQuantity):
    coeffs = P.polyadd(a * np.asarray(f.coefficients), b * np.asarray(g.coefficients))
    return KinematicQuantity.polynomial(*coeffs)


@dataclass(frozen=True)
class TransitionQuantity:
    quantity: str
    x1: float
    x2: float
    taus: np.ndarray = field(repr=False)
    samples: np.ndarray = field(repr=False)
    kernel_value: complex
    provenance: str = "insertion"

    @property
    def normalized(self) -> np.ndarray:
        """``<f(tau)> / K``, the theorem-facing observable."""
        return self.samples / self.kernel_value

    def table(self) -> tuple[list[str], list[list[float]]]:
        modulus, phase = modulus_and_phase(self)
        r = self.normalized
        header = ["tau", "re_f", "im_f", "abs_f", "phase", "re_K", "im_K", "R_f_re", "R_f_im"]
        rows = [[t, s.real, s.imag, m, ph, self.kernel_value.real, self.kernel_value.imag,
                 rv.real, rv.imag]
                for t, s, m, ph, rv in zip(self.taus, self.samples, modulus, phase, r)]
        return header, rows


def _grid_indices(sg: SpaceGrid, x1: float, x2: float):
    return sg.index_of(x1), sg.index_of(x2)


def _check_tau(tau_index: int, tg: TimeGrid):
    if not 0 < tau_index < tg.n_slices:
        raise ValidationError(
            f"tau must be interior: index {tau_index} not in 1..{tg.n_slices - 1}"
        )


def _insertion(fvals_list, x1, x2, sg, tg, p, c):
    """Samples at every interior node for each f, plus the kernel value."""
    n = tg.n_slices
    i1, i2 = _grid_indices(sg, x1, x2)
    s = short_time_matrix(sg, tg.dt, p, c)
    fwd = propagate_columns(sg, tg.dt, n, p, c, i1, s)
    bwd = fwd if i2 == i1 else propagate_columns(sg, tg.dt, n - 1, p, c, i2, s)
    w = sg.weights()
    pair = [w * bwd[n - k - 1] * fwd[k - 1] for k in range(1, n)]
    samples = [np.array([np.sum(pk * fvals) for pk in pair]) for fvals in fvals_list]
    return samples, complex(fwd[n - 1][i2])


def transition_quantity_insertion(f: KinematicQuantity, tau_index: int, x1: float, x2: float,
                                  sg: SpaceGrid, tg: TimeGrid, p: Potential,
                                  c: PhysicalConstants) -> complex:
    _check_tau(tau_index, tg)
    (samples,), _ = _insertion([f(sg.points)], x1, x2, sg, tg, p, c)
    return complex(samples[tau_index - 1])


def transition_quantity_brute_force(f: KinematicQuantity, tau_index: int, x1: float, x2: float,
                                    sg: SpaceGrid, tg: TimeGrid, p: Potential,
                                    c: PhysicalConstants,
                                    cap: int = DEFAULT_ENUMERATION_CAP) -> complex:
    _check_tau(tau_index, tg)
    w = sg.weights()
    total = 0j
    for path in enumerate_lattice_paths(sg, tg, x1, x2, cap):
        idx = np.rint((path.interior - sg.x_min) / sg.dx).astype(int)
        amp = np.prod(w[idx]) * np.exp(1j * discrete_action(path, p, tg, c) / c.hbar)
        total += f(path.positions[tau_index]) * amp
    return complex(_prefactor(c.mass / (c.hbar * tg.dt)) ** tg.n_slices * total)


def transition_quantities(fs, x1: float, x2: float, sg: SpaceGrid, tg: TimeGrid,
                          p: Potential, c: PhysicalConstants) -> list[TransitionQuantity]:
    """``<f(tau)>`` at every interior node for each f, computed by insertion."""
    if tg.n_slices < 2:
        raise ValidationError("tau must be interior: the time grid has no interior nodes")
    x = sg.points
    samples, k = _insertion([f(x) for f in fs], x1, x2, sg, tg, p, c)
    return [TransitionQuantity(f.tag, x1, x2, tg.nodes[1:-1], s, k, "insertion")
            for f, s in zip(fs, samples)]


def transition_quantity(f: KinematicQuantity, x1: float, x2: float, sg: SpaceGrid,
                        tg: TimeGrid, p: Potential, c: PhysicalConstants) -> TransitionQuantity:
    return transition_quantities([f], x1, x2, sg, tg, p, c)[0]


def transition_coordinate_path(x1, x2, sg, tg, p, c) -> TransitionQuantity:
    return transition_quantity(KinematicQuantity.position(), x1, x2, sg, tg, p, c)


def modulus_and_phase(tq: TransitionQuantity, zero_rtol: float = 1e-12):
    """Modulus and continuously unwrapped phase of the samples.

    Samples below ``zero_rtol`` times the larger of the largest sample and
    ``|K|`` have no defined phase and are reported as NaN. Unwrapping picks,
    at each node, the branch nearest the last defined phase.
    """
    s = np.asarray(tq.samples)
    modulus = np.abs(s)
    scale = max(modulus.max(initial=0.0), abs(tq.kernel_value))
    phase = np.full(s.size, np.nan)
    prev = None
    for i, (z, r) in enumerate(zip(s, modulus)):
        if r <= zero_rtol * scale or r == 0:
            continue
        a = float(np.angle(z))
        if prev is None:
            # keep the principal branch for the first defined node, with -pi mapped to pi
            a = np.pi if a == -np.pi else a
        else:
            a += 2 * np.pi * np.round((prev - a) / (2 * np.pi))
        phase[i] = prev = a
    return modulus, phase


def path_delta(a, b) -> int:
    """1 when the two paths coincide node for node, else 0."""
    xa, xb = as_positions(a), as_positions(b)
    if xa.shape != xb.shape:
        raise ValidationError("paths live on different time grids")
    return int(np.array_equal(xa, xb))


def sift(paths, gamma0: LatticePath, functional) -> complex:
    """``sum over paths of delta[gamma - gamma0] * F[gamma]``."""
    return sum(path_delta(g, gamma0) * functional(g) for g in paths)
