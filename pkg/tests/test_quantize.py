import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.special import loggamma

from toda_lab.errors import ConfigError, ResidueError
from toda_lab.nlie import tau_from_delta
from toda_lab.quantize import (
    QuantizationProblem,
    baxter_residual_q,
    build_q,
    branch_stability_check,
    ground_modes,
    mirrored_modes,
    modes_for_level,
    oracle_spectrum_n2,
    parity_check,
    q_values,
    quantize,
    residue_ratio,
    small_lambda_seed,
)


##############################
# Quantum Numbers
##############################

def test_ground_modes():
    assert ground_modes(2) == (1, 0)
    assert ground_modes(4) == (3, 2, 1, 0)


def test_levels_raise_the_first_mode():
    assert modes_for_level(2, 0) == (1, 0)
    assert modes_for_level(2, 2) == (3, 0)
    with pytest.raises(ValueError):
        modes_for_level(2, -1)


def test_mirrored_modes():
    assert mirrored_modes((3, 1, 0)) == (0, -1, -3)
    assert mirrored_modes((1, 0)) == (0, -1)


def test_targets():
    qp = QuantizationProblem(N=2, hbar=1.0, Lambda=0.3, modes=(1, 0))
    assert np.allclose(qp.targets, [1j * math.pi])


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(N=2, hbar=1.0, Lambda=0.3, modes=(0, 0)),
        dict(N=3, hbar=1.0, Lambda=0.3, modes=(1, 0)),
        dict(N=2, hbar=1.0, Lambda=0.0, modes=(1, 0)),
        dict(N=2, hbar=1.0, Lambda=0.3, modes=(1, 0), seed=(0.1,)),
    ],
)
def test_problem_validation(kwargs):
    with pytest.raises(ConfigError):
        QuantizationProblem(**kwargs)


def test_small_lambda_seed_solves_the_closed_form():
    Lambda = 0.05
    d0, d1 = small_lambda_seed(2, 1.0, Lambda, (1, 0))
    assert abs(d0 + d1) < 1e-13
    assert abs(d0.imag) < 1e-13
    d = d0.real
    phase = 4.0 * d * math.log(1.0 / Lambda) + 2.0 * loggamma(1.0 + 2j * d).imag
    assert abs(phase - math.pi) < 1e-10


def test_small_lambda_seed_needs_lambda_below_hbar():
    with pytest.raises(ConfigError):
        small_lambda_seed(2, 1.0, 2.0, (1, 0))


##############################
# Schroedinger Oracle
##############################

def test_oracle_harmonic_limit():
    # 2 Lambda^2 cosh x ~ 2 Lambda^2 + Lambda^2 x^2, level spacing 2 hbar Lambda
    E0 = oracle_spectrum_n2(0.5, 2.0, 0)
    E1 = oracle_spectrum_n2(0.5, 2.0, 1)
    assert abs(E0 - 9.0) / 9.0 < 0.02
    assert abs(E1 - 11.0) / 11.0 < 0.02


def test_oracle_refuses_tiny_coupling():
    with pytest.raises(ConfigError):
        oracle_spectrum_n2(1.0, 1e-4, 0)


##############################
# Quantization
##############################

@pytest.fixture(scope="module")
def ground_state():
    return quantize(QuantizationProblem(N=2, hbar=1.0, Lambda=0.3, modes=(1, 0)))


@pytest.mark.slow
def test_ground_state_matches_oracle(ground_state):
    oracle = oracle_spectrum_n2(1.0, 0.3, 0)
    assert abs(-ground_state.E2.real - oracle) / abs(oracle) < 1e-6
    assert abs(ground_state.E2.imag) < 1e-10


@pytest.mark.slow
def test_ground_state_residuals(ground_state):
    r = ground_state.residuals
    assert r["zeta_spread"] < 1e-8
    assert r["zeta_power_N"] < 1e-8
    assert r["zeta_product"] < 1e-8
    assert r["momentum"] < 1e-12
    assert r["u_plus_E2"] < 1e-10
    assert ground_state.as_dict()["modes"] == [1, 0]


@pytest.mark.slow
@pytest.mark.parametrize("Lambda, level", [(0.3, 1), (0.15, 0), (0.15, 1)])
def test_levels_match_oracle(Lambda, level):
    rec = quantize(QuantizationProblem(N=2, hbar=1.0, Lambda=Lambda, modes=modes_for_level(2, level)))
    oracle = oracle_spectrum_n2(1.0, Lambda, level)
    assert abs(-rec.E2.real - oracle) / abs(oracle) < 1e-6


@pytest.mark.slow
def test_mirrored_modes_give_the_mirrored_state(ground_state):
    report = parity_check(ground_state)
    assert report["modes"] == (0, -1)
    assert report["deviation"] < 1e-9


@pytest.mark.slow
def test_rerun_from_the_solution_stays_put(ground_state):
    report = branch_stability_check(ground_state)
    assert report["iterations"] >= 1
    assert report["deviation"] < 1e-12


@pytest.mark.slow
def test_n3_ground_state_has_real_charges():
    rec = quantize(QuantizationProblem(N=3, hbar=1.0, Lambda=0.2, modes=ground_modes(3)))
    assert rec.residuals["zeta_spread"] < 1e-8
    assert all(abs(E.imag) < 1e-9 for E in rec.energies)
    assert abs(rec.zeta ** 3 - 1.0) < 1e-8


##############################
# Eigen-solution q
##############################

@pytest.mark.slow
def test_residues_match_zeta(ground_state):
    for j in range(2):
        assert abs(residue_ratio(j, ground_state, ground_state.solution) - ground_state.zeta) < 1e-7


@pytest.mark.slow
def test_q_solves_baxter(ground_state):
    spectral = tau_from_delta(ground_state.solution)
    for lam in (0.2 + 0.3j, -0.7 + 0.1j):
        assert baxter_residual_q(lam, ground_state, ground_state.solution, spectral) < 1e-7


@pytest.mark.slow
def test_q_is_regular_at_delta(ground_state):
    sol = ground_state.solution
    d = ground_state.delta_star[0]
    near = build_q(d + 0.01, ground_state, sol)
    assert np.isfinite(near)
    values = q_values(np.array([d + 0.01, d + 0.3]), ground_state, sol)
    assert abs(values[0] - near) < 1e-12 * max(1.0, abs(near))


@pytest.mark.slow
def test_wrong_zeta_leaves_a_pole(ground_state):
    broken = replace(ground_state, zeta=ground_state.zeta * 1.01)
    with pytest.raises(ResidueError):
        build_q(ground_state.delta_star[0] + 0.01, broken, ground_state.solution)
