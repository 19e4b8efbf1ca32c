"""Fixed-endpoint stationary paths of the discrete action."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .action import action_gradient, action_hessian, discrete_action
from .errors import ConjugatePointError, ConvergenceError, ValidationError
from .grid import LatticePath, PhysicalConstants, Potential, TimeGrid, as_positions


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-10
    max_iters: int = 50
    mode: str = "stationary"  # or "minimum": halve steps that raise the action
    max_halvings: int = 30
    homotopy_steps: int = 4

    def __post_init__(self):
        if self.mode not in ("stationary", "minimum"):
            raise ValidationError(f"unknown solver mode {self.mode!r}")


@dataclass(frozen=True)
class MinimumCertificate:
    is_positive_definite_hessian: bool
    smallest_eigen_estimate: float

    @property
    def verdict(self) -> str:
        return "minimum" if self.is_positive_definite_hessian else "stationary but not minimal"


@dataclass(frozen=True)
class ClassicalPathResult:
    path: LatticePath
    action: float
    stationarity_residual: float
    minimum_certificate: MinimumCertificate
    iterations: int
    time_grid: TimeGrid = field(repr=False)
    potential: Potential = field(repr=False)
    constants: PhysicalConstants = field(repr=False)


def stationarity_residual(path, p: Potential, tg: TimeGrid, c: PhysicalConstants) -> float:
    return float(np.max(np.abs(action_gradient(path, p, tg, c))))


def straight_line(x1: float, x2: float, tg: TimeGrid) -> np.ndarray:
    return x1 + (x2 - x1) * (tg.nodes - tg.t_start) / tg.duration


def normalized_jacobi_eigenvalue(lam: float, tg: TimeGrid, c: PhysicalConstants) -> float:
    """Hessian eigenvalue in units of the lowest free Dirichlet mode.

    The discrete Hessian acts as ``dt`` times the Jacobi operator on smooth
    modes, so this tends to ``1 - (omega T / pi)**2`` for the oscillator.
    """
    return lam / (tg.dt * c.mass * (np.pi / tg.duration) ** 2)


def conjugate_band(tg: TimeGrid) -> float:
    """Half-width of the normalised-eigenvalue band treated as singular.

    The discrete conjugate point sits O(dt**2) away from the continuum one.
    """
    return (np.pi * tg.dt / tg.duration) ** 2


def _check_conjugate(h, tg, c):
    eig = h.eigvalsh()
    mu = normalized_jacobi_eigenvalue(eig[np.argmin(np.abs(eig))], tg, c)
    if abs(mu) < conjugate_band(tg):
        raise ConjugatePointError(
            f"conjugate point encountered: normalised Hessian eigenvalue {mu:.3e}"
        )
    return eig


def _newton(x, p, tg, c, opts):
    x = np.array(x, dtype=float)
    for it in range(opts.max_iters + 1):
        g = action_gradient(x, p, tg, c)
        res = float(np.max(np.abs(g)))
        if res < opts.tol:
            return x, it
        if it == opts.max_iters:
            break
        h = action_hessian(x, p, tg, c)
        _check_conjugate(h, tg, c)
        step = h.solve(-g)
        if opts.mode == "minimum":
            s0 = discrete_action(x, p, tg, c)
            for _ in range(opts.max_halvings):
                trial = x.copy()
                trial[1:-1] += step
                if discrete_action(trial, p, tg, c) <= s0:
                    break
                step = 0.5 * step
            else:
                raise ConvergenceError("no action-decreasing step found", res)
        x[1:-1] += step
        if not np.all(np.isfinite(x)):
            raise ConvergenceError("Newton iterate left the finite range", res)
    raise ConvergenceError(f"no convergence within {opts.max_iters} iterations", res)


def solve_classical_path(x1: float, x2: float, tg: TimeGrid, p: Potential,
                         c: PhysicalConstants, opts: SolverOptions | None = None,
                         initial=None) -> ClassicalPathResult:
    """Newton solve of ``dS/dx_k = 0`` with the endpoints held fixed.

    Starts from the straight line (or ``initial``). If Newton fails to
    converge, retries by ramping the potential strength up from zero.
    """
    opts = opts or SolverOptions()
    if tg.n_slices < 2:
        raise ValidationError("no interior points: n_slices must be at least 2")
    x0 = straight_line(x1, x2, tg) if initial is None else np.array(as_positions(initial), float)
    x0[0], x0[-1] = x1, x2
    try:
        x, iters = _newton(x0, p, tg, c, opts)
    except ConvergenceError:
        x, iters = x0, 0
        for k in range(1, opts.homotopy_steps + 1):
            x, n = _newton(x, p.scaled(k / opts.homotopy_steps), tg, c, opts)
            iters += n
    h = action_hessian(x, p, tg, c)
    eig = h.eigvalsh()
    cert = MinimumCertificate(bool(eig[0] > 0), float(eig[0]))
    return ClassicalPathResult(LatticePath(x), discrete_action(x, p, tg, c),
                               stationarity_residual(x, p, tg, c), cert, iters, tg, p, c)


def perturbation_probe(result: ClassicalPathResult, magnitude: float, trials: int,
                       rng_seed: int = 0) -> float:
    """Fraction of random fixed-endpoint perturbations that raise the action.

    Perturbations are random sine series over the interior nodes with
    amplitudes falling off as 1/j**2, scaled to peak at ``magnitude``, so
    that smooth long-wavelength directions (where a saddle first appears)
    get sampled.
    """
    tg, p, c = result.time_grid, result.potential, result.constants
    n = tg.n_slices
    rng = np.random.default_rng(rng_seed)
    k = np.arange(1, n)
    j = np.arange(1, n)
    modes = np.sin(np.pi * np.outer(j, k) / n) / j[:, None] ** 2
    base = result.path.positions
    s_m = discrete_action(base, p, tg, c)
    higher = 0
    for _ in range(trials):
        delta = rng.standard_normal(n - 1) @ modes
        delta *= magnitude / np.max(np.abs(delta))
        trial = base.copy()
        trial[1:-1] += delta
        higher += discrete_action(trial, p, tg, c) > s_m
    return higher / trials


def analytic_classical_path(p: Potential, x1: float, x2: float, taus, t1: float, t2: float):
    """Continuum solution of the boundary value problem (free and harmonic)."""
    taus = np.asarray(taus, float)
    if p.family == "free":
        return x1 + (x2 - x1) * (taus - t1) / (t2 - t1)
    if p.family == "harmonic":
        w = p.omega
        return (x1 * np.sin(w * (t2 - taus)) + x2 * np.sin(w * (taus - t1))) / np.sin(w * (t2 - t1))
    raise ValidationError(f"no closed-form classical path for the {p.family} family")


def slice_energies(path, p: Potential, tg: TimeGrid, c: PhysicalConstants) -> np.ndarray:
    """Kinetic plus midpoint potential energy on each slice."""
    x = as_positions(path)
    v = np.diff(x) / tg.dt
    return 0.5 * c.mass * v**2 + p(0.5 * (x[1:] + x[:-1]))
