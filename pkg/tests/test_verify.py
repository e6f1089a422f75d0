import math

import pytest

from toda_lab.errors import ConfigError
from toda_lab.verify import (
    CheckResult,
    VerifyPoint,
    _asymptotics,
    _char_poly,
    _decoupling,
    _dilog_identities,
    _floquet_truncation,
    _floquet_wronskian,
    _grid_stability,
    _hill_routes,
    _log_gamma_recurrence,
    _nlie_params,
    _random_deltas,
    _run,
    _stokes_sparsity,
    _varpi_derivative,
    run_verify,
    standard_matrix,
)


def test_standard_matrix_covers_both_ranks_and_couplings():
    points = standard_matrix()
    assert len(points) == 4
    assert {(p.N, p.Lambda) for p in points} == {(2, 0.1), (2, 0.3), (3, 0.1), (3, 0.3)}
    assert all(p.hbar == 1.0 and len(p.delta) == p.N for p in points)


def test_check_result_as_dict():
    r = CheckResult("x", "nlie", {"N": 2}, 1e-12, 1e-8, True)
    assert r.as_dict() == {
        "name": "x",
        "module": "nlie",
        "point": {"N": 2},
        "value": 1e-12,
        "tolerance": 1e-8,
        "passed": True,
        "details": {},
    }


##############################
# Runner
##############################

def test_run_passes_below_tolerance():
    r = _run("small", "oper", {}, lambda: (1e-9, {"k": 1}), 1e-8)
    assert r.passed and r.value == 1e-9 and r.details == {"k": 1}


def test_run_fails_at_or_above_tolerance_and_on_nan():
    assert not _run("big", "oper", {}, lambda: (1e-8, {}), 1e-8).passed
    assert not _run("nan", "oper", {}, lambda: (float("nan"), {}), 1e-8).passed


def test_run_records_lab_errors_as_failures():
    def broken():
        raise ConfigError("bad input", module="config", where="here")

    r = _run("broken", "config", {"N": 2}, broken, 1.0)
    assert not r.passed
    assert math.isnan(r.value)
    assert r.details["type"] == "ConfigError"
    assert r.details["details"] == {"where": "here"}


def test_run_records_bare_value_errors_as_config_failures():
    def broken():
        raise ValueError("grid too coarse")

    r = _run("broken", "numerics", {}, broken, 1.0)
    assert not r.passed
    assert r.details["type"] == "ConfigError"
    assert r.details["details"] == {"origin": "ValueError"}


def test_short_grid_fails_with_a_tail_estimate():
    p = _nlie_params(VerifyPoint(N=2, hbar=1.0, Lambda=0.3, delta=(0.3, -0.3)), grid_M=2)
    r = _run("nlie_grid_stability", "nlie", {}, _grid_stability, 1e-8, p)
    assert not r.passed
    assert r.details["type"] == "InsufficientDecayError"


##############################
# Individual Checks
##############################

def test_char_poly_check_passes_and_flipped_sign_fails():
    value, details = _char_poly(False)
    assert value < 1e-12
    assert details["max_det_error"] < 1e-9
    flipped, _ = _char_poly(True)
    assert flipped > 1e-3


def test_stokes_sparsity_check_has_no_mismatches():
    value, _ = _stokes_sparsity()
    assert value == 0.0


@pytest.mark.parametrize("N", [2, 3])
def test_decoupling_check(N):
    value, details = _decoupling(N)
    assert value < 1e-8
    assert len(details["per_solution"]) == N


def test_special_function_identities():
    assert _log_gamma_recurrence()[0] < 1e-12
    assert _dilog_identities()[0] < 1e-13
    assert _varpi_derivative()[0] < 1e-8


def test_random_deltas_are_seeded_and_centered():
    first, second = list(_random_deltas(3)), list(_random_deltas(3))
    assert first == second
    assert len(first) == 5
    assert all(abs(sum(delta)) < 1e-12 for delta in first)


@pytest.mark.parametrize("N, tolerance", [(2, 0.1), (3, 1.0)])
def test_floquet_asymptotics_check(N, tolerance):
    value, _ = _asymptotics(N)
    assert value < tolerance


def test_solution_level_checks(nlie_solution):
    sol = nlie_solution(2, 0.3, (0.3, -0.3))
    assert _hill_routes(sol)[0] < 1e-8
    assert _floquet_wronskian(sol)[0] < 1.0
    assert _floquet_truncation(sol)[0] < 1.0


@pytest.mark.slow
def test_run_verify_summary_is_consistent():
    report = run_verify()
    names = {check["name"] for check in report["checks"]}
    summary = report["summary"]
    assert summary["total"] == len(report["checks"])
    assert summary["passed"] == summary["total"]
    assert summary["failed"] == []
    assert {
        "log_gamma_recurrence", "dilog_identities", "varpi_derivative", "hill_two_routes", "nlie_analyticity",
        "yang_yang_symmetry", "yang_yang_random_points", "branch_stability", "parity", "oracle_acceptance",
        "antiholomorphic_symmetry", "antiholomorphic_discrimination", "fourier_duality", "fourier_discrimination",
        "max_decay_ratio", "floquet_asymptotics", "floquet_wronskian", "floquet_truncation",
    } <= names


@pytest.mark.slow
def test_coarse_grid_stops_the_battery():
    with pytest.raises(ConfigError):
        run_verify(grid_M=0.1, grid_h=0.1)
