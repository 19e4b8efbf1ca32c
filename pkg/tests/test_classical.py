import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pathlab.action import discrete_action
from pathlab.classical import (SolverOptions, analytic_classical_path, perturbation_probe,
                               slice_energies, solve_classical_path, stationarity_residual)
from pathlab.errors import ConjugatePointError, ValidationError
from pathlab.grid import PhysicalConstants, Potential, SpaceGrid, TimeGrid
from pathlab.transition import transition_coordinate_path

from .conftest import FAMILIES

C = PhysicalConstants()


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(2, 40))
def test_free_solution_is_straight_line(x1, x2, n):
    tg = TimeGrid(0, 1.3, n)
    res = solve_classical_path(x1, x2, tg, Potential.free(), C)
    np.testing.assert_allclose(res.path.positions, np.linspace(x1, x2, n + 1), atol=1e-12)
    assert res.stationarity_residual < 1e-10
    assert res.minimum_certificate.is_positive_definite_hessian


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_solved_paths_are_stationary(family):
    res = solve_classical_path(-0.5, 1.5, TimeGrid(0, 1, 24), FAMILIES[family], C)
    assert res.stationarity_residual < 1e-10
    assert res.minimum_certificate.verdict == "minimum"


def test_harmonic_error_is_second_order():
    errs = []
    for n in (8, 16, 32, 64):
        tg = TimeGrid(0, 1, n)
        res = solve_classical_path(0.0, 1.0, tg, Potential.harmonic(1.0), C)
        exact = analytic_classical_path(Potential.harmonic(1.0), 0.0, 1.0, tg.nodes, 0, 1)
        errs.append(np.max(np.abs(res.path.positions - exact)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    np.testing.assert_allclose(ratios, 4.0, rtol=0.05)


@pytest.mark.parametrize("n", [8, 16, 64, 256])
def test_conjugate_point_is_reported(n):
    with pytest.raises(ConjugatePointError, match="conjugate point"):
        solve_classical_path(0.0, 1.0, TimeGrid(0, np.pi, n), Potential.harmonic(1.0), C)


def test_probe_fractions():
    for p, t in [(Potential.free(), 1.0), (Potential.harmonic(1.0), 1.0)]:
        res = solve_classical_path(0.0, 1.0, TimeGrid(0, t, 32), p, C)
        assert perturbation_probe(res, 0.01, 200, rng_seed=3) == 1.0
    past = solve_classical_path(0.0, 1.0, TimeGrid(0, 3.5, 32), Potential.harmonic(1.0), C)
    assert past.stationarity_residual < 1e-10
    assert past.minimum_certificate.verdict == "stationary but not minimal"
    assert perturbation_probe(past, 0.01, 200, rng_seed=3) < 1.0


def test_probe_is_seeded():
    res = solve_classical_path(0.0, 1.0, TimeGrid(0, 3.5, 32), Potential.harmonic(1.0), C)
    assert perturbation_probe(res, 0.01, 100, 5) == perturbation_probe(res, 0.01, 100, 5)


def test_residual_examples():
    tg = TimeGrid(0, 1, 4)
    assert stationarity_residual(tg.nodes, Potential.free(), tg, C) < 1e-13
    bent = tg.nodes.copy()
    bent[2] += 0.1
    assert stationarity_residual(bent, Potential.free(), tg, C) == pytest.approx(0.8)


def test_reconverges_from_perturbed_guess():
    tg, p = TimeGrid(0, 1, 20), FAMILIES["quartic"]
    ref = solve_classical_path(-1.0, 2.0, tg, p, C)
    guess = ref.path.positions + 0.3 * np.sin(np.pi * 3 * tg.nodes)
    again = solve_classical_path(-1.0, 2.0, tg, p, C, initial=guess)
    np.testing.assert_allclose(again.path.positions, ref.path.positions, atol=1e-10)


def test_minimum_mode_agrees_with_stationary_mode():
    tg, p = TimeGrid(0, 1, 16), FAMILIES["quartic"]
    a = solve_classical_path(0.0, 2.0, tg, p, C)
    b = solve_classical_path(0.0, 2.0, tg, p, C, SolverOptions(mode="minimum"))
    np.testing.assert_allclose(a.path.positions, b.path.positions, atol=1e-10)
    assert a.action == pytest.approx(discrete_action(a.path, p, tg, C))


def test_energy_spread_shrinks_with_dt():
    spreads = []
    for n in (8, 16, 32):
        tg = TimeGrid(0, 1, n)
        res = solve_classical_path(0.0, 1.0, tg, FAMILIES["quartic"], C)
        e = slice_energies(res.path, FAMILIES["quartic"], tg, C)
        spreads.append(np.ptp(e))
    assert all(b < a for a, b in zip(spreads, spreads[1:]))


def test_option_and_input_errors():
    with pytest.raises(ValidationError):
        SolverOptions(mode="fastest")
    with pytest.raises(ValidationError, match="no interior points"):
        solve_classical_path(0.0, 1.0, TimeGrid(0, 1, 1), Potential.free(), C)
    with pytest.raises(ValidationError):
        analytic_classical_path(FAMILIES["quartic"], 0, 1, [0.5], 0, 1)


def test_lattice_average_tracks_solver_path():
    sg, tg = SpaceGrid(-8, 8, 1201, edge_taper=0.1), TimeGrid(0, 1, 8)
    res = solve_classical_path(0.0, 1.0, tg, Potential.harmonic(1.0), C)
    tq = transition_coordinate_path(0.0, 1.0, sg, tg, Potential.harmonic(1.0), C)
    assert np.max(np.abs(tq.normalized - res.path.interior)) < 0.15625
