import math
from dataclasses import replace

import numpy as np
import pytest
from scipy import special

from toda_lab.errors import ConfigError, ConvergenceError, ResidueError, SectorError
from toda_lab.gutzwiller import HillZeros, SpectralData, hill_zeros
from toda_lab.nlie import solve_nlie, tau_from_delta, zeta_j
from toda_lab.oper import (
    FloquetBasis,
    OperInstance,
    antiholomorphic_symmetry_check,
    asymptotic_series,
    bessel_floquet_n2,
    chi_max_decay,
    decoupled_floquet,
    floquet_asymptotics_check,
    floquet_eval,
    floquet_monodromy_check,
    floquet_wronskian,
    fourier_duality_check,
    hypergeometric_0FN,
    hypergeometric_ode_residual,
    max_decay_ratio_check,
    meijer_leading_form,
    meijer_maximal,
    ode_monodromy,
    ode_monodromy_matrix,
    open_chain_residual,
    oper_residual,
    recurrence_residual,
    rh_round_trip,
    truncation_certificate,
)
from toda_lab.quantize import QuantizationProblem, quantize

WEAK = 1e-5


@pytest.fixture(scope="module")
def basis_n2():
    return FloquetBasis.from_gutzwiller(SpectralData(N=2, tau=(0.7, -0.7), Lambda=0.3, hbar=1.0))


@pytest.fixture(scope="module")
def weak_basis():
    # sigma = (0.3, -0.3)
    return FloquetBasis.from_gutzwiller(SpectralData(N=2, tau=(-0.3j, 0.3j), Lambda=WEAK, hbar=1.0))


##############################
# Oper Instance
##############################

def test_companion_layout():
    inst = OperInstance(N=3, hbar=1.0, Lambda=0.2, charges=(-1.5, 0.25))
    A = inst.companion(1.0)
    expected_corner = -0.25 + 0.2 ** 3 * (1j ** 3 + 1j ** (-3))
    assert A[0, 0] == 0
    assert A[0, 1] == 1.5
    assert abs(A[0, 2] - expected_corner) < 1e-15
    assert A[1, 0] == 1 and A[2, 1] == 1
    assert np.trace(A) == 0


def test_scaled_variables_are_inverse():
    inst = OperInstance(N=2, hbar=1.0, Lambda=0.3, charges=(-0.5,))
    assert abs(inst.w(inst.w_prime(2.0)) - 2.0) < 1e-15
    assert inst.beta == -0.5


def test_oper_instance_validation():
    with pytest.raises(ConfigError):
        OperInstance(N=3, hbar=1.0, Lambda=0.2, charges=(-1.5,))


##############################
# Floquet Solutions
##############################

def test_floquet_recurrence(basis_n2):
    for j in range(2):
        assert np.max(recurrence_residual(basis_n2, j, range(-5, 6))) < 1e-9


def test_floquet_solutions_solve_the_oper(basis_n2):
    z = 1.3 * np.exp(0.4j)
    for j in range(2):
        assert oper_residual(j, z, basis_n2) < 1e-7


def test_floquet_monodromy(basis_n2):
    for j in range(2):
        assert floquet_monodromy_check(basis_n2, j, 0.8 + 0.2j) < 1e-9


def test_floquet_wronskian_is_nonzero(basis_n2):
    det, scale = floquet_wronskian(basis_n2, 1.0)
    assert abs(det) > 1e-8 * scale


def test_truncation_is_certified(basis_n2):
    for j in range(2):
        report = truncation_certificate(basis_n2, j, 1.5 + 0.5j)
        assert report["last_term"] < 1e-16
        assert report["doubling_change"] < 1e-9


def test_bases_from_both_constructions_agree(nlie_solution):
    sol = nlie_solution(2, 0.3, (0.3, -0.3))
    zeros = HillZeros(delta=sol.params.delta, zeta=tuple(zeta_j(sol)), source="from-delta-input")
    from_tau = FloquetBasis.from_gutzwiller(tau_from_delta(sol), zeros=zeros)
    from_delta = FloquetBasis.from_nlie(sol)
    for j in range(2):
        a = floquet_eval(j, 1.5, from_tau)
        b = floquet_eval(j, 1.5, from_delta)
        assert abs(a - b) / abs(a) < 1e-6


##############################
# ODE Monodromy
##############################

def test_ode_monodromy_matches_floquet_exponents():
    s = SpectralData(N=2, tau=(0.7, -0.7), Lambda=0.3, hbar=1.0)
    sigma = 1j * np.asarray(hill_zeros(s).delta)
    report = rh_round_trip(s, sigma)
    assert report["mismatch"] < 1e-6


def test_ode_monodromy_has_unit_determinant():
    inst = OperInstance(N=3, hbar=1.0, Lambda=0.2, charges=(-0.2, 0.01))
    assert abs(np.linalg.det(ode_monodromy_matrix(inst)) - 1.0) < 1e-7


def test_ode_monodromy_ignores_the_base_point():
    inst = OperInstance(N=2, hbar=1.0, Lambda=0.3, charges=(-0.2,))
    a = np.sort_complex(ode_monodromy(inst))
    b = np.sort_complex(ode_monodromy(inst, base_angle=0.7))
    assert np.max(np.abs(a - b)) / np.max(np.abs(a)) < 1e-8


##############################
# Decoupling Limit
##############################

def test_0f1_is_a_bessel_function():
    nu, x = 0.3, 1.7
    value = hypergeometric_0FN([1.0 + nu], x * x / 4.0) * (x / 2.0) ** nu
    assert abs(value - special.iv(nu, x)) < 1e-12


def test_0fn_at_the_origin():
    assert abs(hypergeometric_0FN([1.3, 0.6], 0.0) - special.rgamma(1.3) * special.rgamma(0.6)) < 1e-15


def test_0fn_ode():
    assert hypergeometric_ode_residual([1.3, 0.7 + 0.2j], 5.0) < 1e-12


def test_0fn_overflow_guard():
    with pytest.raises(ConvergenceError):
        hypergeometric_0FN([1.3], 1.3e5)


def test_decoupled_floquet_n2_is_bessel():
    for w in (0.5, 3.0):
        a = decoupled_floquet(2, (0.2, -0.2), w)
        assert abs(a[0] - bessel_floquet_n2(0.2, w)) < 1e-12 * abs(a[0])
        assert abs(a[1] - bessel_floquet_n2(-0.2, w)) < 1e-12 * abs(a[1])


def test_open_chain_equation():
    sigma = (0.2 + 0.1j, -0.05, -0.15 - 0.1j)
    for l in range(3):
        assert open_chain_residual(3, sigma, 2.5, l) < 1e-12


def test_floquet_decouples_to_bessel(weak_basis):
    scale = (1.0 / WEAK) ** 2
    for j in range(2):
        F = floquet_eval(j, scale * 2.0, weak_basis)
        expected = bessel_floquet_n2(weak_basis.sigma[j], 2.0)
        assert abs(F - expected) < 1e-8 * abs(expected)


def test_floquet_decouples_n3():
    s = SpectralData(N=3, tau=(0.45, 0.05, -0.5), Lambda=WEAK, hbar=1.0)
    basis = FloquetBasis.from_gutzwiller(s)
    w = 1.5
    expected = decoupled_floquet(3, basis.sigma, w)
    for j in range(3):
        F = floquet_eval(j, (1.0 / WEAK) ** 3 * w, basis)
        assert abs(F - expected[j]) < 1e-8 * abs(expected[j])


def test_meijer_n1():
    assert abs(meijer_maximal((0.3,), 2.0) - math.exp(-2.0) * 2.0 ** 0.3) < 1e-15


def test_meijer_n3_approaches_its_leading_form():
    b = (0.2, -0.05, -0.15)
    deviations = [abs(meijer_maximal(b, w) / meijer_leading_form(3, w) - 1.0) for w in (50.0, 500.0)]
    assert deviations[1] < deviations[0]
    assert deviations[1] < 0.05


##############################
# Maximal Decay and Asymptotics
##############################

def test_chi_is_a_meijer_function(weak_basis):
    scale = (1.0 / WEAK) ** 2
    chi = chi_max_decay("infinity", scale * 2.0, weak_basis)
    expected = (math.pi * 1j) ** (-2) * meijer_maximal(weak_basis.sigma, 2.0)
    assert abs(chi / expected - 1.0) < 1e-7


def test_chi_leading_correction(weak_basis):
    # first Bessel correction (4 nu^2 - 1)/(16 sqrt w) with nu = 2 sigma = 0.6
    report = asymptotic_series("chi-infinity", weak_basis, [4.0, 9.0, 16.0])
    for w, deviation in zip(report["w"], report["deviation"]):
        assert abs(deviation * math.sqrt(w) - 0.0275) < 0.25 * 0.0275


def test_chi_zero_leading_correction():
    # chi^(0) at w' is chi^(inf) at 1/w' with sigma -> -sigma, the same Bessel order here
    basis = FloquetBasis.from_gutzwiller(SpectralData(N=2, tau=(-0.3j, 0.3j), Lambda=WEAK, hbar=1.0), side="zero")
    report = asymptotic_series("chi-zero", basis, [1.0 / 4.0, 1.0 / 9.0, 1.0 / 16.0])
    for w, deviation in zip(report["w"], report["deviation"]):
        assert abs(deviation / math.sqrt(w) - 0.0275) < 0.25 * 0.0275


def test_chi_needs_the_matching_side(weak_basis):
    with pytest.raises(ValueError):
        chi_max_decay("zero", 1.0, weak_basis)


def test_even_sector_asymptotics():
    basis = FloquetBasis.from_gutzwiller(SpectralData(N=2, tau=(0.7, -0.7), Lambda=WEAK, hbar=1.0))
    report = floquet_asymptotics_check(basis)
    assert all(a > b for a, b in zip(report["deviation"], report["deviation"][1:]))
    assert report["deviation"][-1] < 0.1


def test_odd_sector_needs_two_exponentials():
    basis = FloquetBasis.from_gutzwiller(SpectralData(N=3, tau=(0.45, 0.05, -0.5), Lambda=WEAK, hbar=1.0))
    report = floquet_asymptotics_check(basis)
    assert report["fit_ratio"] > 10.0


def test_sector_bounds(basis_n2):
    with pytest.raises(SectorError):
        floquet_asymptotics_check(basis_n2, ray=1.1 * math.pi / 2)
    report = floquet_asymptotics_check(basis_n2, ray=0.9 * math.pi / 2, w_values=[20.0, 40.0])
    assert len(report["deviation"]) == 2


##############################
# Quantized Points
##############################

@pytest.fixture(scope="module")
def ground_state():
    return quantize(QuantizationProblem(N=2, hbar=1.0, Lambda=0.3, modes=(1, 0)))


def _off_spectrum(rec, shift):
    sol = rec.solution
    moved = solve_nlie(sol.params.replace(delta=(sol.params.delta[0] + shift, sol.params.delta[1] - shift)), seed=sol)
    return replace(rec, delta_star=moved.params.delta, solution=moved)


@pytest.mark.slow
def test_max_decay_solutions_match_when_quantized(ground_state):
    assert max_decay_ratio_check(ground_state)["spread"] < 1e-6


@pytest.mark.slow
def test_max_decay_solutions_differ_off_the_spectrum(ground_state):
    off = _off_spectrum(ground_state, 0.05)
    assert max_decay_ratio_check(off)["spread"] > 1e-3


@pytest.mark.slow
def test_antiholomorphic_symmetry(ground_state):
    assert antiholomorphic_symmetry_check(ground_state)["spread"] < 1e-6


@pytest.mark.slow
def test_fourier_duality(ground_state):
    assert fourier_duality_check(ground_state, ground_state.solution)["deviation"] < 1e-5


@pytest.mark.slow
def test_antiholomorphic_symmetry_fails_off_the_spectrum(ground_state):
    assert antiholomorphic_symmetry_check(_off_spectrum(ground_state, 0.1))["spread"] > 1e-2


@pytest.mark.slow
def test_fourier_transform_of_an_off_spectrum_q_hits_a_pole(ground_state):
    off = _off_spectrum(ground_state, 0.1)
    with pytest.raises(ResidueError):
        fourier_duality_check(off, off.solution)
