"""Experiment configuration, reports and the subcommand implementations.

Every command validates its config before computing anything, stages all
output in memory, and only then writes it (see :class:`OutputSet`).
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .classical import (SolverOptions, analytic_classical_path, perturbation_probe,
                        slice_energies, solve_classical_path)
from .errors import NumericalError, TruncationError, ValidationError
from .grid import (DEFAULT_ENUMERATION_CAP, PhysicalConstants, Potential, SpaceGrid, TimeGrid)
from .propagator import (Kernel, alias_ratio, analytic_kernel, evolve_wavefunction,
                         free_gaussian_at, gaussian_packet, lattice_kernel, propagate_columns,
                         short_time_matrix)
from .reporting import OutputSet, gnuplot_script
from .transition import KinematicQuantity, transition_quantities


@dataclass
class PotentialSpec:
    family: str = "free"
    omega: float | None = None
    coefficients: list[float] = field(default_factory=list)

    def build(self, mass: float) -> Potential:
        if self.family == "free":
            return Potential.free()
        if self.family == "harmonic":
            if self.omega is None:
                raise ValidationError("harmonic potential needs omega")
            return Potential.harmonic(self.omega, mass)
        if self.family == "polynomial":
            if not self.coefficients:
                raise ValidationError("polynomial potential needs coefficients")
            return Potential.polynomial(*self.coefficients)
        raise ValidationError(f"unknown potential family {self.family!r}")


@dataclass
class TimeSpec:
    t_start: float = 0.0
    t_end: float = 1.0
    n_slices: int = 8


@dataclass
class SpaceSpec:
    # alias ratio 0.54 at hbar = 0.25, dt = 1/8; taper over the outer 10% bands
    x_min: float = -8.0
    x_max: float = 8.0
    n_points: int = 2401
    edge_taper: float = 0.1


@dataclass
class PacketSpec:
    sigma0: float = 1.0
    k0: float = 1.0
    x0: float = 0.0


@dataclass
class ProbeSpec:
    magnitude: float = 0.01
    trials: int = 200


@dataclass
class Tolerances:
    quadratic: float | None = None  # None: max(10 dt^2, 10 dx^2, 1e-8) * scale
    scale: float | None = None  # None: max(1, |x1|, |x2|)
    truncation_mass: float = 1e-6
    solver: float = 1e-10
    evolve_l2: float = 1e-2


@dataclass
class ExperimentConfig:
    hbar: float = 1.0
    mass: float = 1.0
    potential: PotentialSpec = field(default_factory=PotentialSpec)
    time: TimeSpec = field(default_factory=TimeSpec)
    space: SpaceSpec = field(default_factory=SpaceSpec)
    endpoints: list[float] = field(default_factory=lambda: [0.0, 1.0])
    quantities: list[str] = field(default_factory=lambda: ["position", "position_squared"])
    tolerances: Tolerances = field(default_factory=Tolerances)
    hbar_scan: list[float] = field(default_factory=lambda: [1.0, 0.5, 0.25])
    packet: PacketSpec = field(default_factory=PacketSpec)
    probe: ProbeSpec = field(default_factory=ProbeSpec)
    convergence_slices: list[int] = field(default_factory=lambda: [1, 2, 4, 8])
    seed: int = 0
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP
    output_dir: str = "out"
    output_stride: int = 12

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        return _from_dict(cls, data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """SHA-256 of the config, ignoring where outputs are written."""
        data = self.to_dict()
        data.pop("output_dir")
        return hashlib.sha256(json.dumps(data, sort_keys=True).encode()).hexdigest()

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


def _from_dict(cls, data):
    if not isinstance(data, dict):
        raise ValidationError(f"expected a mapping for {cls.__name__}, got {type(data).__name__}")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ValidationError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        default = known[name].default_factory if known[name].default_factory is not dataclasses.MISSING else None
        sub = type(default()) if default is not None else None
        if sub is not None and dataclasses.is_dataclass(sub):
            kwargs[name] = _from_dict(sub, value)
        else:
            kwargs[name] = value
    return cls(**kwargs)


@dataclass(frozen=True)
class Setup:
    constants: PhysicalConstants
    potential: Potential
    time_grid: TimeGrid
    space_grid: SpaceGrid
    x1: float
    x2: float


def validate(cfg: ExperimentConfig) -> Setup:
    """Build the numerical objects, raising ValidationError on any bad input."""
    try:
        c = PhysicalConstants(float(cfg.hbar), float(cfg.mass))
        p = cfg.potential.build(c.mass)
        tg = TimeGrid(float(cfg.time.t_start), float(cfg.time.t_end), cfg.time.n_slices)
        sg = SpaceGrid(float(cfg.space.x_min), float(cfg.space.x_max), cfg.space.n_points,
                       float(cfg.space.edge_taper))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(str(exc)) from exc
    if len(cfg.endpoints) != 2:
        raise ValidationError("endpoints must be a pair [x1, x2]")
    x1, x2 = (float(v) for v in cfg.endpoints)
    sg.index_of(x1)
    sg.index_of(x2)
    if any(not h > 0 for h in cfg.hbar_scan):
        raise ValidationError("hbar_scan values must be positive")
    if cfg.output_stride < 1:
        raise ValidationError("output_stride must be at least 1")
    if any(int(n) != n or n < 1 for n in cfg.convergence_slices):
        raise ValidationError("convergence_slices must be positive integers")
    if cfg.probe.trials < 1 or not cfg.probe.magnitude > 0:
        raise ValidationError("probe needs positive magnitude and trials")
    if cfg.packet.sigma0 <= 0:
        raise ValidationError("packet sigma0 must be positive")
    for q in cfg.quantities:
        KinematicQuantity.from_name(q, p)
    return Setup(c, p, tg, sg, x1, x2)


def tol_quadratic(cfg: ExperimentConfig, setup: Setup) -> float:
    t = cfg.tolerances
    if t.quadratic is not None:
        return float(t.quadratic)
    scale = t.scale if t.scale is not None else max(1.0, abs(setup.x1), abs(setup.x2))
    return max(10 * setup.time_grid.dt**2, 10 * setup.space_grid.dx**2, 1e-8) * scale


def metadata(cfg: ExperimentConfig, setup: Setup) -> dict:
    sg, tg, c = setup.space_grid, setup.time_grid, setup.constants
    return {
        "hbar": c.hbar, "mass": c.mass,
        "potential": f"{setup.potential.family}{list(setup.potential.coefficients)}",
        "t_start": tg.t_start, "t_end": tg.t_end, "n_slices": tg.n_slices, "dt": tg.dt,
        "x_min": sg.x_min, "x_max": sg.x_max, "n_points": sg.n_points, "dx": sg.dx,
        "edge_taper": sg.edge_taper, "alias_ratio": alias_ratio(sg, tg.dt, c),
        "seed": cfg.seed,
    }


def _require_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(np.asarray(a))):
            raise NumericalError("non-finite values in computed results")


def outside_mass(sg: SpaceGrid, values, inner: float = 0.8) -> float:
    """Fraction of ``sum |psi|^2`` outside the central ``inner`` fraction."""
    mass = np.abs(np.asarray(values)) ** 2
    return float(mass[~sg.inner_mask(inner)].sum() / mass.sum())


def mid_domain_error(k_lat: Kernel, k_ref: Kernel, fraction: float = 0.25) -> float:
    """Largest relative entry error with both coordinates in the central band."""
    mid = k_lat.space_grid.inner_mask(fraction)
    a = k_lat.values[np.ix_(mid, mid)]
    b = k_ref.values[np.ix_(mid, mid)]
    return float(np.max(np.abs(a - b) / np.abs(b)))


# ---------------------------------------------------------------------------
# theorem check


@dataclass
class TheoremReport:
    taus: np.ndarray
    x_m: np.ndarray
    r_x: np.ndarray
    deviation: np.ndarray
    raw_modulus: np.ndarray
    phase_difference: np.ndarray
    phase_target: np.ndarray
    r_x2: np.ndarray
    fluctuation_residual: np.ndarray
    hbar_values: list[float]
    max_deviation_by_hbar: list[float]
    fluctuation_by_hbar: list[float]
    tol_quadratic: float
    quadratic: bool
    edge_leak: float
    worst_alias_ratio: float
    metadata: dict

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.deviation))

    @property
    def passed(self) -> bool | None:
        return self.max_deviation < self.tol_quadratic if self.quadratic else None

    @property
    def max_phase_error(self) -> float:
        d = self.phase_difference - self.phase_target
        return float(np.max(np.abs(np.angle(np.exp(1j * d)))))

    def summary(self) -> dict:
        return {
            "quadratic": self.quadratic,
            "max_deviation": self.max_deviation,
            "tol_quadratic": self.tol_quadratic,
            "passed": self.passed,
            "max_phase_error": self.max_phase_error,
            "max_fluctuation_residual": float(np.max(self.fluctuation_residual)),
            "edge_leak": self.edge_leak,
            "worst_alias_ratio": self.worst_alias_ratio,
            "hbar_scan": {
                "hbar": self.hbar_values,
                "max_deviation": self.max_deviation_by_hbar,
                "max_fluctuation_residual": self.fluctuation_by_hbar,
                "deviation_decreasing": _strictly_decreasing(self.max_deviation_by_hbar),
                "fluctuation_decreasing": _strictly_decreasing(self.fluctuation_by_hbar),
            },
        }


def _strictly_decreasing(values) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


def _normalized_pair(setup: Setup, hbar: float):
    c = PhysicalConstants(hbar, setup.constants.mass)
    args = (setup.x1, setup.x2, setup.space_grid, setup.time_grid, setup.potential, c)
    tq_x, tq_x2 = transition_quantities(
        [KinematicQuantity.position(), KinematicQuantity.position_squared()], *args)
    return tq_x, tq_x2


def integrand_edge_leak(setup: Setup) -> float:
    """Edge leak of the weighted insertion integrand at the middle node."""
    sg, tg, p, c = setup.space_grid, setup.time_grid, setup.potential, setup.constants
    n = tg.n_slices
    k = n // 2
    s = short_time_matrix(sg, tg.dt, p, c)
    fwd = propagate_columns(sg, tg.dt, k, p, c, sg.index_of(setup.x1), s)[-1]
    bwd = propagate_columns(sg, tg.dt, n - k, p, c, sg.index_of(setup.x2), s)[-1]
    return sg.edge_leak(np.sqrt(np.abs(fwd * bwd * sg.weights())))


def check_endpoints_policy(setup: Setup):
    sg = setup.space_grid
    inner = sg.inner_mask(0.8)
    if not (inner[sg.index_of(setup.x1)] and inner[sg.index_of(setup.x2)]):
        leak = integrand_edge_leak(setup) if setup.time_grid.n_slices >= 2 else 1.0
        raise TruncationError("endpoints must lie in the inner 80% of the domain", leak)


def theorem_report(cfg: ExperimentConfig) -> TheoremReport:
    setup = validate(cfg)
    if setup.time_grid.n_slices < 2:
        raise ValidationError("theorem check needs at least two slices")
    check_endpoints_policy(setup)
    sol = solve_classical_path(setup.x1, setup.x2, setup.time_grid, setup.potential,
                               setup.constants, SolverOptions(tol=cfg.tolerances.solver))
    x_m = sol.path.interior.copy()

    hbars = list(dict.fromkeys([float(cfg.hbar), *map(float, cfg.hbar_scan)]))
    results = {h: _normalized_pair(setup, h) for h in hbars}

    tq_x, tq_x2 = results[float(cfg.hbar)]
    r_x, r_x2 = tq_x.normalized, tq_x2.normalized
    deviation = np.abs(r_x - x_m)
    fluct = np.abs(r_x2 - x_m**2)
    _require_finite(r_x, r_x2)

    scan = [float(h) for h in cfg.hbar_scan]
    dev_by_h = [float(np.max(np.abs(results[h][0].normalized - x_m))) for h in scan]
    fl_by_h = [float(np.max(np.abs(results[h][1].normalized - x_m**2))) for h in scan]
    _require_finite(dev_by_h, fl_by_h)

    return TheoremReport(
        taus=tq_x.taus, x_m=x_m, r_x=r_x, deviation=deviation,
        raw_modulus=np.abs(tq_x.samples),
        phase_difference=np.angle(r_x),
        phase_target=np.where(x_m >= 0, 0.0, np.pi),
        r_x2=r_x2, fluctuation_residual=fluct,
        hbar_values=scan, max_deviation_by_hbar=dev_by_h, fluctuation_by_hbar=fl_by_h,
        tol_quadratic=tol_quadratic(cfg, setup), quadratic=setup.potential.is_quadratic,
        edge_leak=integrand_edge_leak(setup),
        worst_alias_ratio=alias_ratio(setup.space_grid, setup.time_grid.dt,
                                      PhysicalConstants(min(hbars), setup.constants.mass)),
        metadata=metadata(cfg, setup),
    )


@dataclass
class CommandResult:
    outputs: OutputSet
    summary: dict
    ok: bool = True
    message: str = ""


def cmd_theorem_check(cfg: ExperimentConfig) -> CommandResult:
    rep = theorem_report(cfg)
    out = OutputSet("theorem-check", cfg.digest(), rep.metadata)
    header = ["tau", "x_m", "R_x_re", "R_x_im", "D", "abs_x_raw", "phase_x_minus_K",
              "phase_target", "R_x2_re", "R_x2_im", "fluctuation_residual"]
    rows = zip(rep.taus, rep.x_m, rep.r_x.real, rep.r_x.imag, rep.deviation, rep.raw_modulus,
               rep.phase_difference, rep.phase_target, rep.r_x2.real, rep.r_x2.imag,
               rep.fluctuation_residual)
    out.add_csv("theorem_table.csv", header, rows)
    out.add_csv("theorem_hbar_scan.csv", ["hbar", "max_D", "max_fluctuation_residual"],
                zip(rep.hbar_values, rep.max_deviation_by_hbar, rep.fluctuation_by_hbar))
    summary = rep.summary()
    out.add_json("theorem_summary.json", summary)
    out.add_text("theorem.gp", gnuplot_script(
        "theorem_table.csv", "classical path vs <x>/K", "tau", "x",
        [(1, 2, "x_m"), (1, 3, "Re <x>/K")]))
    ok = rep.passed is not False
    msg = "" if ok else (f"quadratic exactness check failed: max D {rep.max_deviation:.3e} "
                         f">= tol {rep.tol_quadratic:.3e}")
    return CommandResult(out, summary, ok, msg)


# ---------------------------------------------------------------------------
# kernel


def cmd_kernel(cfg: ExperimentConfig) -> CommandResult:
    setup = validate(cfg)
    sg, tg, p, c = setup.space_grid, setup.time_grid, setup.potential, setup.constants
    reference = None
    if p.family in ("free", "harmonic"):
        reference = analytic_kernel(sg, tg, p, c)
    k = lattice_kernel(sg, tg, p, c)
    _require_finite(k.values)

    out = OutputSet("kernel", cfg.digest(), metadata(cfg, setup))
    x = sg.points
    idx = range(0, sg.n_points, cfg.output_stride)
    out.add_csv("kernel.csv", ["i2", "i1", "x2", "x1", "re", "im"],
                ([i, j, x[i], x[j], k.values[i, j].real, k.values[i, j].imag]
                 for i in idx for j in idx))
    summary = {"alias_ratio": alias_ratio(sg, tg.dt, c)}
    if reference is not None:
        rows = []
        prev = None
        for n in cfg.convergence_slices:
            tgn = TimeGrid(tg.t_start, tg.t_end, n)
            err = mid_domain_error(lattice_kernel(sg, tgn, p, c), reference)
            order = np.log2(prev / err) if prev and err > 0 else float("nan")
            rows.append([n, tgn.dt, alias_ratio(sg, tgn.dt, c), err, order])
            prev = err
        errs = [r[3] for r in rows]
        summary.update(convergence_errors=errs, convergence_slices=list(cfg.convergence_slices),
                       monotone_decreasing=_strictly_decreasing(errs))
        out.add_csv("kernel_convergence.csv",
                    ["n_slices", "dt", "alias_ratio", "max_mid_rel_error", "observed_order"], rows)
        out.add_text("kernel_convergence.gp", gnuplot_script(
            "kernel_convergence.csv", "lattice vs closed-form kernel", "n_slices",
            "max mid-domain relative error", [(1, 4, "error")], logscale="xy"))
    out.add_json("kernel_summary.json", summary)
    return CommandResult(out, summary)


# ---------------------------------------------------------------------------
# evolve


def cmd_evolve(cfg: ExperimentConfig) -> CommandResult:
    setup = validate(cfg)
    sg, tg, p, c = setup.space_grid, setup.time_grid, setup.potential, setup.constants
    pk = cfg.packet
    psi = gaussian_packet(sg, pk.sigma0, pk.k0, pk.x0, tg.t_start)
    limit = cfg.tolerances.truncation_mass
    leak = outside_mass(sg, psi.values)
    if leak > limit:
        raise TruncationError("initial packet violates the truncation policy", leak)
    exact = p.family == "free"
    if exact:
        final = free_gaussian_at(sg, pk.sigma0, pk.k0, pk.x0, tg.duration, c)
        leak = outside_mass(sg, final.values)
        if leak > limit:
            raise TruncationError("packet spreads out of the inner domain before t_end", leak)

    step = Kernel(short_time_matrix(sg, tg.dt, p, c), sg, 0.0, tg.dt, "lattice", tg.dt)
    norm0 = psi.norm
    drift_rows = [[0, psi.time, norm0, 0.0, 0.0 if exact else float("nan"),
                   outside_mass(sg, psi.values) if np.any(psi.values) else 0.0]]
    density = [psi.values]
    for k in range(1, tg.n_slices + 1):
        psi = evolve_wavefunction(psi, step)
        _require_finite(psi.values)
        err = float("nan")
        if exact:
            ref = free_gaussian_at(sg, pk.sigma0, pk.k0, pk.x0, psi.time - tg.t_start, c)
            err = float(np.sqrt(np.sum(np.abs(psi.values - ref.values) ** 2) * sg.dx))
        drift_rows.append([k, psi.time, psi.norm, psi.norm - norm0, err,
                           outside_mass(sg, psi.values) if np.any(psi.values) else 0.0])
        density.append(psi.values)

    out = OutputSet("evolve", cfg.digest(), metadata(cfg, setup))
    x = sg.points
    idx = range(0, sg.n_points, cfg.output_stride)
    times = [r[1] for r in drift_rows]
    out.add_csv("evolve_density.csv", ["step", "t", "x", "prob"],
                ([k, times[k], x[i], abs(v[i]) ** 2] for k, v in enumerate(density) for i in idx))
    out.add_csv("evolve_norm.csv", ["step", "t", "norm", "norm_drift", "l2_error", "edge_mass"],
                drift_rows)
    out.add_text("evolve.gp", gnuplot_script("evolve_norm.csv", "norm drift and L2 error", "t",
                                             "value", [(2, 4, "norm drift"), (2, 5, "L2 error")]))
    final_err = drift_rows[-1][4]
    summary = {
        "final_norm": drift_rows[-1][2],
        "max_abs_norm_drift": float(max(abs(r[3]) for r in drift_rows)),
        "final_l2_error": final_err,
        "l2_within_tolerance": bool(final_err < cfg.tolerances.evolve_l2) if exact else None,
    }
    out.add_json("evolve_summary.json", summary)
    return CommandResult(out, summary)


# ---------------------------------------------------------------------------
# transition, classical path, variational check


def cmd_transition(cfg: ExperimentConfig) -> CommandResult:
    setup = validate(cfg)
    check_endpoints_policy(setup)
    out = OutputSet("transition", cfg.digest(), metadata(cfg, setup))
    summary = {}
    fs = [KinematicQuantity.from_name(name, setup.potential) for name in cfg.quantities]
    tqs = transition_quantities(fs, setup.x1, setup.x2, setup.space_grid, setup.time_grid,
                                setup.potential, setup.constants)
    for name, tq in zip(cfg.quantities, tqs):
        _require_finite(tq.samples)
        header, rows = tq.table()
        out.add_csv(f"transition_{name}.csv", header, rows)
        summary[name] = {"kernel_re": tq.kernel_value.real, "kernel_im": tq.kernel_value.imag}
    out.add_json("transition_summary.json", summary)
    return CommandResult(out, summary)


def _solve(cfg, setup):
    return solve_classical_path(setup.x1, setup.x2, setup.time_grid, setup.potential,
                                setup.constants, SolverOptions(tol=cfg.tolerances.solver))


def _result_summary(res) -> dict:
    cert = res.minimum_certificate
    return {
        "action": res.action,
        "stationarity_residual": res.stationarity_residual,
        "iterations": res.iterations,
        "is_positive_definite_hessian": cert.is_positive_definite_hessian,
        "smallest_eigen_estimate": cert.smallest_eigen_estimate,
    }


def cmd_classical_path(cfg: ExperimentConfig) -> CommandResult:
    setup = validate(cfg)
    res = _solve(cfg, setup)
    tg = setup.time_grid
    x = res.path.positions
    energies = slice_energies(x, setup.potential, tg, setup.constants)
    summary = _result_summary(res)
    summary["energy_variation"] = float(energies.max() - energies.min())
    header, cols = ["tau", "x_m"], [tg.nodes, x]
    if setup.potential.family in ("free", "harmonic"):
        ref = analytic_classical_path(setup.potential, setup.x1, setup.x2, tg.nodes,
                                      tg.t_start, tg.t_end)
        header.append("x_continuum")
        cols.append(ref)
        summary["max_error_vs_continuum"] = float(np.max(np.abs(x - ref)))
    out = OutputSet("classical-path", cfg.digest(), metadata(cfg, setup))
    out.add_csv("classical_path.csv", header, zip(*cols))
    out.add_json("classical_path_summary.json", summary)
    return CommandResult(out, summary)


def cmd_variational_check(cfg: ExperimentConfig) -> CommandResult:
    setup = validate(cfg)
    res = _solve(cfg, setup)
    frac = perturbation_probe(res, cfg.probe.magnitude, cfg.probe.trials, cfg.seed)
    summary = _result_summary(res)
    minimal = res.minimum_certificate.is_positive_definite_hessian and frac == 1.0
    summary.update(probe_fraction=frac, probe_magnitude=cfg.probe.magnitude,
                   probe_trials=cfg.probe.trials,
                   verdict="minimum" if minimal else "stationary but not minimal")
    out = OutputSet("variational-check", cfg.digest(), metadata(cfg, setup))
    out.add_json("variational_summary.json", summary)
    return CommandResult(out, summary)


COMMANDS = {
    "kernel": cmd_kernel,
    "evolve": cmd_evolve,
    "transition": cmd_transition,
    "classical-path": cmd_classical_path,
    "theorem-check": cmd_theorem_check,
    "variational-check": cmd_variational_check,
}
