import math

import numpy as np
import pytest

from toda_lab.errors import CollisionError, ConfigError, ContourProximityError, InsufficientDecayError
from toda_lab.gutzwiller import hill_zeros, q_plus_tau
from toda_lab.nlie import (
    NlieParams,
    analyticity_check,
    convolution_at,
    kernel,
    log_q_minus_delta,
    log_q_plus_delta,
    log_v_up,
    log_zeta,
    q_minus_delta,
    q_plus_delta,
    solve_nlie,
    t_delta_polynomial,
    tau_from_delta,
    theta,
    u_energy,
    v_down_shifted,
    v_up,
    zeta_j,
)
from toda_lab.numerics import multiset_distance

DELTA = (0.3, -0.3)


@pytest.fixture
def solution(nlie_solution):
    return nlie_solution(2, 0.3, DELTA)


##############################
# Parameters
##############################

def test_default_grid():
    p = NlieParams(N=2, hbar=1.0, Lambda=0.3, delta=DELTA)
    assert p.M == 40.0
    assert p.h == 0.05
    assert p.replace(h=0.025).h == 0.025


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(delta=(0.3 + 0.5j, -0.3 - 0.5j)),
        dict(delta=(0.3, -0.3, 0.0)),
        dict(delta=DELTA, Lambda=0.0),
        dict(delta=(0.3 + 0.1j, -0.3), require_real=True),
        dict(delta=DELTA, M=0.1, h=0.1),
        dict(delta=DELTA, M=40.0, h=0.0),
    ],
)
def test_params_validation(kwargs):
    base = dict(N=2, hbar=1.0, Lambda=0.3)
    base.update(kwargs)
    with pytest.raises(ConfigError):
        NlieParams(**base)


def test_conjugate_pairs_pass_the_reality_check():
    NlieParams(N=2, hbar=1.0, Lambda=0.3, delta=(0.2j, -0.2j), require_real=True)


def test_theta_at_origin():
    p = NlieParams(N=2, hbar=1.0, Lambda=0.3, delta=DELTA)
    expected = (0.3 ** 2 + 0.25) ** 2 / 0.3 ** 4
    assert abs(theta(0.0, p) - expected) < 1e-12


def test_kernel_peak():
    assert abs(kernel(0.0, 1.0) - 1.0 / math.pi) < 1e-15
    assert abs(kernel(2.0, 0.5) - 0.5 / math.pi / 4.25) < 1e-15


##############################
# Solving
##############################

def test_solution_is_a_fixed_point(solution):
    assert solution.residual < 1e-10
    assert solution.iterations == len(solution.history)
    assert solution.history[-1] < solution.history[0]


def test_x_decays_like_an_inverse_power(solution):
    X = solution.X.real
    pts = solution.points
    i4 = int(np.argmin(np.abs(pts - 4.0)))
    i40 = len(pts) - 1
    slope = math.log(X[i40] / X[i4]) / math.log(pts[i40] / pts[i4])
    assert abs(slope + 4.0) < 0.5


def test_x_vanishes_without_coupling():
    sol = solve_nlie(NlieParams(N=2, hbar=1.0, Lambda=1e-4, delta=DELTA))
    assert np.max(np.abs(sol.X)) < 1e-12
    assert abs(v_up(0.2, sol) - 1.0) < 1e-12
    assert abs(v_down_shifted(0.2, sol) - 1.0) < 1e-12


def test_weak_coupling_x_is_one_over_theta():
    p = NlieParams(N=2, hbar=1.0, Lambda=0.05, delta=DELTA)
    sol = solve_nlie(p)
    leading = 1.0 / theta(sol.points, p)
    assert np.max(np.abs(sol.X / leading - 1.0)) < 1e-3


def test_short_grid_reports_the_tail():
    p = NlieParams(N=2, hbar=1.0, Lambda=0.3, delta=DELTA, M=2.0, h=0.05)
    with pytest.raises(InsufficientDecayError) as info:
        solve_nlie(p)
    assert abs(info.value.details["M"] - 2.0) < 1e-12
    assert info.value.details["tail"] > 1e-6


def test_convolution_strip(solution):
    with pytest.raises(ContourProximityError):
        convolution_at(0.1 + 1.0j, solution)


@pytest.mark.parametrize("seeded", [False, True])
def test_grid_refinement_is_stable(solution, seeded):
    finer = solve_nlie(solution.params.replace(h=0.025), seed=solution if seeded else None)
    assert np.max(np.abs(log_zeta(finer) - log_zeta(solution))) < 1e-8
    assert abs(u_energy(finer) - u_energy(solution)) < 1e-8


##############################
# Q-functions
##############################

@pytest.mark.parametrize("q", [q_plus_delta, q_minus_delta])
@pytest.mark.parametrize("lam", [0.15, -0.6 + 0.1j])
def test_q_delta_solves_baxter(q, lam, solution):
    t = t_delta_polynomial(solution)
    lhs = t(lam) * q(lam, solution)
    rhs = 0.3 ** 2 * (-q(lam + 1j, solution) - q(lam - 1j, solution))
    assert abs(lhs - rhs) / max(abs(lhs), abs(rhs)) < 1e-7


def test_wronskian_vanishes_at_delta(solution):
    for d in DELTA:
        a = q_plus_delta(d, solution) * q_minus_delta(d + 1j, solution)
        b = q_plus_delta(d + 1j, solution) * q_minus_delta(d, solution)
        assert abs(a - b) / abs(a) < 1e-7


def test_zeta_is_the_ratio_at_delta(solution):
    ratios = [np.exp(log_q_plus_delta(d, solution) - log_q_minus_delta(d, solution)) for d in DELTA]
    assert np.allclose(ratios, zeta_j(solution), rtol=1e-10, atol=0.0)


def test_constructions_agree(nlie_solution):
    sol = nlie_solution(2, 0.2, DELTA)
    spectral = tau_from_delta(sol)
    lam = np.linspace(-1.0, 1.0, 7) + 0.1j
    from_tau = q_plus_tau(lam, spectral)
    from_delta = q_plus_delta(lam, sol)
    assert np.max(np.abs(from_tau - from_delta)) / np.max(np.abs(from_tau)) < 1e-7


def test_zeta_is_analytic_in_delta(solution):
    report = analyticity_check(solution.params, sol=solution)
    assert report["residual"] < 1e-6
    assert report["scale"] >= 1.0


def test_coincident_delta():
    sol = solve_nlie(NlieParams(N=2, hbar=1.0, Lambda=0.3, delta=(0.0, 0.0)))
    with pytest.raises(CollisionError):
        log_zeta(sol)


##############################
# tau(delta) and the Energy
##############################

def test_tau_is_delta_without_coupling():
    sol = solve_nlie(NlieParams(N=2, hbar=1.0, Lambda=1e-4, delta=DELTA))
    assert multiset_distance(tau_from_delta(sol).tau, DELTA) < 1e-10


def test_tau_from_delta_kmax(solution):
    with pytest.raises(ConfigError):
        tau_from_delta(solution, kmax=1)
    assert tau_from_delta(solution, kmax=6).tau == tau_from_delta(solution).tau


def test_hill_zeros_of_tau_recover_delta(solution):
    assert multiset_distance(hill_zeros(tau_from_delta(solution)).delta, DELTA) < 1e-7


def test_energy_is_minus_e2(solution):
    u = u_energy(solution)
    assert abs(u + tau_from_delta(solution).charges[0]) < 1e-12
    assert abs(u.imag) < 1e-14
    assert u.real > 0.5 * (0.3 ** 2 + 0.3 ** 2)


def test_energy_needs_zero_momentum():
    sol = solve_nlie(NlieParams(N=2, hbar=1.0, Lambda=0.3, delta=(0.4, -0.3)))
    with pytest.raises(ConfigError):
        u_energy(sol)


def test_v_up_decays_like_one_over_lambda(solution):
    near, far = log_v_up(200.0, solution), log_v_up(400.0, solution)
    assert abs(near) < 1e-3
    assert abs(far / near - 0.5) < 0.05


@pytest.mark.parametrize("shift, evaluate", [(-0.5j, v_up), (0.5j, v_down_shifted)])
def test_v_functions_refuse_the_contour(solution, shift, evaluate):
    with pytest.raises(ContourProximityError):
        evaluate(0.1 + shift, solution)
