"""
Invariant battery behind `toda-lab verify`.

Most checks run on the standard matrix N in {2, 3}, hbar = 1,
Lambda in {0.1, 0.3}; each records the measured value next to its
tolerance. A check that raises a lab error is recorded as failed with the
error report as its details, so a shortened grid shows up as a failed NLIE
check carrying the tail estimate.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ResidueError, TodaLabError, as_lab_error
from .gutzwiller import SpectralData, hill_determinant, hill_determinant_direct, hill_zeros, log_q_tau
from .logs import get_logger
from .monodromy_algebra import (
    MonodromyData,
    characteristic_polynomial,
    connection_E,
    is_quantized_E,
    monodromy_M0,
    permutation_PN,
    stokes_matrix,
    stokes_nonzero_count,
)
from .nlie import (
    NlieParams,
    analyticity_check,
    log_q_minus_delta,
    log_q_plus_delta,
    log_zeta,
    solve_nlie,
    tau_from_delta,
    u_energy,
)
from .numerics import dilog, log_gamma, varpi
from .oper import (
    FloquetBasis,
    antiholomorphic_symmetry_check,
    bessel_floquet_n2,
    decoupled_floquet,
    floquet_asymptotics_check,
    floquet_eval,
    floquet_wronskian,
    fourier_duality_check,
    max_decay_ratio_check,
    recurrence_residual,
    rh_round_trip,
    truncation_certificate,
)
from .quantize import (
    QuantizationProblem,
    branch_stability_check,
    ground_modes,
    modes_for_level,
    oracle_spectrum_n2,
    parity_check,
    quantize,
)
from .yangyang import grad_delta_check, lambda_derivative_check, permutation_symmetry_check

verify_logger = get_logger("cli")

STANDARD_N = (2, 3)
STANDARD_LAMBDA = (0.1, 0.3)
STANDARD_HBAR = 1.0
SAMPLE_DELTA = {2: (0.3, -0.3), 3: (0.45, 0.05, -0.5)}
RANDOM_SIGMA_DRAWS = 100
RANDOM_SEED = 20240601
DECOUPLING_LAMBDA = 1e-5
DECOUPLING_W = 2.0
RANDOM_DELTA_DRAWS = 5
ORACLE_POINTS = ((0.3, 0), (0.3, 1), (0.15, 0), (0.15, 1))
OFF_SPECTRUM_SHIFT = 0.1
FLOQUET_POINT = 1.5 + 0.5j


@dataclass
class CheckResult:
    name: str
    module: str
    point: dict
    value: float
    tolerance: float
    passed: bool
    details: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "name": self.name,
            "module": self.module,
            "point": dict(self.point),
            "value": self.value,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "details": dict(self.details),
        }


@dataclass(frozen=True)
class VerifyPoint:
    N: int
    hbar: float
    Lambda: float
    delta: tuple

    def as_dict(self):
        return {"N": self.N, "hbar": self.hbar, "Lambda": self.Lambda}


def standard_matrix():
    return [
        VerifyPoint(N=N, hbar=STANDARD_HBAR, Lambda=Lambda, delta=SAMPLE_DELTA[N])
        for N in STANDARD_N
        for Lambda in STANDARD_LAMBDA
    ]


def _run(name, module, point, check, tolerance, *args):
    """check(*args) returns (value, details); passing means value < tolerance."""
    try:
        value, details = check(*args)
    except (TodaLabError, ValueError) as error:
        e = as_lab_error(error, module=module)
        verify_logger.error(f"verify {name} at {point}: {type(e).__name__}: {e}")
        return CheckResult(name, module, point, float("nan"), tolerance, False, e.report()["error"])
    passed = bool(np.isfinite(value) and value < tolerance)
    level = verify_logger.info if passed else verify_logger.warning
    level(f"verify {name} at {point}: {value:.3e} (tolerance {tolerance:.1e}) {'pass' if passed else 'FAIL'}")
    return CheckResult(name, module, point, float(value), tolerance, passed, details)


##############################
# NLIE and the Two Constructions
##############################

def _nlie_params(point, grid_M=None, grid_h=None):
    return NlieParams(N=point.N, hbar=point.hbar, Lambda=point.Lambda, delta=point.delta, M=grid_M, h=grid_h)


def _grid_stability(p):
    sol = solve_nlie(p)
    fine = solve_nlie(p.replace(h=p.h / 2), seed=sol)
    change_zeta = float(np.max(np.abs(log_zeta(fine) - log_zeta(sol))))
    change_u = float(abs(u_energy(fine) - u_energy(sol)))
    return max(change_zeta, change_u), {
        "iterations": sol.iterations,
        "residual": sol.residual,
        "change_log_zeta": change_zeta,
        "change_u": change_u,
    }


def _construction_equivalence(sol):
    s = tau_from_delta(sol)
    lam = np.linspace(-1.0, 1.0, 20) + 0.1j
    plus = np.abs(np.expm1(log_q_tau(lam, s, +1) - log_q_plus_delta(lam, sol)))
    minus = np.abs(np.expm1(log_q_tau(lam, s, -1) - log_q_minus_delta(lam, sol)))
    return float(max(np.max(plus), np.max(minus))), {"tau": list(s.tau)}


def _baxter_tau(sol):
    s = tau_from_delta(sol)
    lam = np.array([0.15, -0.4 + 0.2j, 0.7 - 0.1j, 1.1, -0.05j])
    worst = 0.0
    for sign in (+1, -1):
        q0 = np.exp(log_q_tau(lam, s, sign))
        up = np.exp(log_q_tau(lam + 1j * s.hbar, s, sign))
        down = np.exp(log_q_tau(lam - 1j * s.hbar, s, sign))
        lhs = s.t(lam) * q0
        rhs = s.Lambda ** s.N * (1j ** s.N * up + 1j ** (-s.N) * down)
        worst = max(worst, float(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(lhs), np.abs(rhs)))))
    return worst, {}


def _wronskian_zeros(sol):
    p = sol.params
    delta = np.asarray(p.delta)
    a = log_q_plus_delta(delta, sol) + log_q_minus_delta(delta + 1j * p.hbar, sol)
    b = log_q_minus_delta(delta, sol) + log_q_plus_delta(delta + 1j * p.hbar, sol)
    ratio = np.abs(np.expm1(b - a))
    return float(np.max(ratio)), {"per_zero": ratio.tolist()}


##############################
# Yang-Yang, Riemann-Hilbert and Oper
##############################

def _gradient(p, sol):
    report = grad_delta_check(p, sol=sol)
    return report["max_deviation"], {"deviations": report["deviations"]}


def _lambda_derivative(p, sol):
    report = lambda_derivative_check(p, sol=sol)
    return report["deviation"], {"u": report["u"]}


def _rh(sol):
    p = sol.params
    sigma = 1j * np.asarray(p.delta) / p.hbar
    report = rh_round_trip(tau_from_delta(sol), sigma)
    return report["mismatch"], {"eigenvalues": report["eigenvalues"]}


def _floquet_recurrence(sol):
    basis = FloquetBasis.from_nlie(sol, side="infinity")
    worst = max(float(np.max(recurrence_residual(basis, j, range(-5, 6)))) for j in range(basis.N))
    return worst, {}


def _decoupling(N):
    delta = SAMPLE_DELTA[N]
    s = SpectralData(N=N, tau=delta, Lambda=DECOUPLING_LAMBDA, hbar=STANDARD_HBAR)
    basis = FloquetBasis.from_gutzwiller(s, hill_zeros(s), side="infinity")
    z = DECOUPLING_W * (s.hbar / s.Lambda) ** N
    computed = np.array([floquet_eval(l, z, basis) for l in range(N)])
    if N == 2:
        expected = np.array([bessel_floquet_n2(sigma, DECOUPLING_W) for sigma in basis.sigma])
    else:
        expected = decoupled_floquet(N, basis.sigma, DECOUPLING_W)
    deviation = np.abs(computed - expected) / np.abs(expected)
    return float(np.max(deviation)), {"w": DECOUPLING_W, "per_solution": deviation.tolist()}


##############################
# Quantized Points
##############################

def _quantized_checks(point, grid_M, grid_h):
    """Quantize the ground level and collect the pipeline-point invariants."""
    qp = QuantizationProblem(
        N=point.N, hbar=point.hbar, Lambda=point.Lambda, modes=ground_modes(point.N), grid_M=grid_M, grid_h=grid_h
    )
    rec = quantize(qp)
    sigma = 1j * np.asarray(rec.delta_star) / rec.hbar
    eta = np.log(np.asarray(rec.zetas)) / (2j * math.pi)
    _, score = is_quantized_E(connection_E(MonodromyData(N=rec.N, sigma=tuple(sigma), eta=tuple(eta))), 1e-5)

    shift = np.zeros(rec.N)
    shift[0], shift[1] = 1e-2, -1e-2
    moved = rec.solution.params.replace(delta=tuple(np.asarray(rec.delta_star) + shift))
    moved_eta = log_zeta(solve_nlie(moved, seed=rec.solution)) / (2j * math.pi)
    moved_sigma = 1j * np.asarray(moved.delta) / rec.hbar
    _, moved_score = is_quantized_E(
        connection_E(MonodromyData(N=rec.N, sigma=tuple(moved_sigma), eta=tuple(moved_eta))), 1e-5
    )
    return rec, score, moved_score


def _oracle(rec):
    oracle = oracle_spectrum_n2(rec.hbar, rec.Lambda, 0)
    return abs(-rec.E2 - oracle) / abs(oracle), {"oracle": oracle, "pipeline": -rec.E2}


##############################
# Monodromy Algebra
##############################

def _random_sigma(rng, N):
    sigma = rng.uniform(-0.45, 0.45, N) + 1j * rng.uniform(-0.1, 0.1, N)
    return tuple(sigma - np.mean(sigma))


def _char_poly(flip_sign):
    rng = np.random.default_rng(RANDOM_SEED)
    worst, worst_det = 0.0, 0.0
    for N in range(2, 9):
        for _ in range(RANDOM_SIGMA_DRAWS):
            d = MonodromyData(N=N, sigma=_random_sigma(rng, N), flip_sign=flip_sign)
            M0 = monodromy_M0(d)
            expected = np.poly(d.Sigma)
            computed = characteristic_polynomial(M0)
            worst = max(worst, float(np.max(np.abs(computed - expected) / np.maximum(1.0, np.abs(expected)))))
            dets = [np.linalg.det(stokes_matrix(k, d)) for k in range(2 * N)]
            dets += [np.linalg.det(M0), np.linalg.det(permutation_PN(N))]
            worst_det = max(worst_det, float(np.max(np.abs(np.asarray(dets) - 1.0))))
    return worst, {"max_det_error": worst_det, "flip_sign": flip_sign}


def _stokes_sparsity():
    rng = np.random.default_rng(RANDOM_SEED)
    mismatches = 0
    for N in range(2, 9):
        d = MonodromyData(N=N, sigma=_random_sigma(rng, N))
        for k in range(2 * N):
            S = stokes_matrix(k, d)
            off = int(np.count_nonzero(np.abs(S - np.eye(N)) > 0))
            if N % 2:
                expected = (N - 1) // 2
            else:
                expected = N // 2 - 1 if k % 2 == 0 else N // 2
            mismatches += off != expected or off != stokes_nonzero_count(N, k)
    return float(mismatches), {}


##############################
# Special Functions
##############################

def _log_gamma_recurrence():
    rng = np.random.default_rng(RANDOM_SEED)
    z = rng.uniform(0.1, 5.0, 100) + 1j * rng.uniform(-5.0, 5.0, 100)
    residual = np.abs(log_gamma(z + 1.0) - log_gamma(z) - np.log(z))
    return float(np.max(residual)), {"points": len(z)}


def _dilog_identities():
    at_minus_one = abs(dilog(-1.0) + math.pi ** 2 / 12.0)
    series = sum((-0.3) ** k / k ** 2 for k in range(1, 200))
    at_minus_point_three = abs(dilog(-0.3) - series)
    return max(at_minus_one, at_minus_point_three), {"minus_one": at_minus_one, "minus_0.3": at_minus_point_three}


def _varpi_derivative():
    lam, eps = 0.4, 1e-5
    derivative = (varpi(lam + eps, 1.0) - varpi(lam - eps, 1.0)) / (2 * eps)
    return abs(derivative - log_gamma(1.0 + 1j * lam)), {"lambda": lam, "eps": eps}


##############################
# Random Points and Asymptotics
##############################

def _random_deltas(N):
    rng = np.random.default_rng(RANDOM_SEED + N)
    for _ in range(RANDOM_DELTA_DRAWS):
        delta = np.asarray(SAMPLE_DELTA[N]) + rng.uniform(-0.1, 0.1, N)
        yield tuple(delta - np.mean(delta))


def _random_identities(N, Lambda, grid_M, grid_h):
    gradient, derivative = [], []
    for delta in _random_deltas(N):
        p = NlieParams(N=N, hbar=STANDARD_HBAR, Lambda=Lambda, delta=delta, M=grid_M, h=grid_h)
        sol = solve_nlie(p)
        gradient.append(grad_delta_check(p, sol=sol)["max_deviation"])
        derivative.append(lambda_derivative_check(p, sol=sol)["deviation"])
    return max(max(gradient), max(derivative)), {"gradient": gradient, "lambda_derivative": derivative}


def _asymptotics(N):
    s = SpectralData(N=N, tau=SAMPLE_DELTA[N], Lambda=DECOUPLING_LAMBDA, hbar=STANDARD_HBAR)
    report = floquet_asymptotics_check(FloquetBasis.from_gutzwiller(s, hill_zeros(s), side="infinity"))
    deviations = report["deviation"]
    if N % 2:
        return 10.0 / max(report["fit_ratio"], 1e-300), {"fit_ratio": report["fit_ratio"]}
    decreasing = all(a > b for a, b in zip(deviations, deviations[1:]))
    return (deviations[-1] if decreasing else math.inf), {"deviation": deviations}


##############################
# Hill Routes, Analyticity and the Floquet Basis
##############################

def _hill_routes(sol):
    s = tau_from_delta(sol)
    lam = np.array([0.1 + 0.2j, -0.5 + 0.3j, 0.8 - 0.25j])
    return float(np.max(np.abs(hill_determinant(lam, s) - hill_determinant_direct(lam, s)))), {}


def _analyticity(p, sol):
    report = analyticity_check(p, sol=sol)
    return report["residual"], {"scale": report["scale"]}


def _y_symmetry(p, sol):
    report = permutation_symmetry_check(p, sol=sol)
    return report["max_change"], {"changes": report["changes"]}


def _floquet_wronskian(sol):
    det, scale = floquet_wronskian(FloquetBasis.from_nlie(sol, side="infinity"), FLOQUET_POINT)
    return 1e-8 * scale / max(abs(det), 1e-300), {"det": det, "scale": scale}


def _floquet_truncation(sol):
    basis = FloquetBasis.from_nlie(sol, side="infinity")
    reports = [truncation_certificate(basis, j, FLOQUET_POINT) for j in range(basis.N)]
    worst = max(max(r["last_term"] / 1e-16, r["doubling_change"] / 1e-9) for r in reports)
    return worst, {"per_solution": reports}


##############################
# Oper Checks at Quantized Points
##############################

def _off_spectrum(rec):
    shift = np.zeros(rec.N)
    shift[0], shift[1] = OFF_SPECTRUM_SHIFT, -OFF_SPECTRUM_SHIFT
    moved = rec.solution.params.replace(delta=tuple(np.asarray(rec.delta_star) + shift))
    sol = solve_nlie(moved, seed=rec.solution)
    return replace(rec, delta_star=moved.delta, solution=sol)


def _antiholomorphic(rec):
    report = antiholomorphic_symmetry_check(rec)
    return report["spread"], {"fixed_point_ratio": report["fixed_point_ratio"]}


def _antiholomorphic_discrimination(rec):
    spread = antiholomorphic_symmetry_check(_off_spectrum(rec))["spread"]
    return 1e-2 / max(spread, 1e-300), {"perturbed_spread": spread}


def _max_decay(rec):
    return max_decay_ratio_check(rec)["spread"], {}


def _fourier(rec):
    report = fourier_duality_check(rec, rec.solution)
    return report["deviation"], {"x": report["x"]}


def _fourier_discrimination(rec):
    off = _off_spectrum(rec)
    try:
        deviation = fourier_duality_check(off, off.solution)["deviation"]
    except ResidueError as e:
        return 0.0, {"pole": e.report()["error"]["details"]}
    return 1e-2 / max(deviation, 1e-300), {"perturbed_deviation": deviation}


def _parity(rec):
    report = parity_check(rec)
    return report["deviation"], {"modes": list(report["modes"])}


def _branch_stability(rec):
    report = branch_stability_check(rec)
    return report["deviation"], {"iterations": report["iterations"]}


def _oracle_level(Lambda, level, grid_M, grid_h):
    rec = quantize(
        QuantizationProblem(
            N=2, hbar=STANDARD_HBAR, Lambda=Lambda, modes=modes_for_level(2, level), grid_M=grid_M, grid_h=grid_h
        )
    )
    oracle = oracle_spectrum_n2(rec.hbar, rec.Lambda, level)
    return abs(-rec.E2 - oracle) / abs(oracle), {"oracle": oracle, "pipeline": -rec.E2, "modes": list(rec.modes)}


##############################
# Battery
##############################

def run_verify(grid_M=None, grid_h=None, flip_stokes_sign=False):
    results = []
    algebra = {"N": "2..8", "draws": RANDOM_SIGMA_DRAWS}
    results.append(_run("char_poly_identity", "monodromy_algebra", algebra, _char_poly, 1e-12, flip_stokes_sign))
    results.append(_run("stokes_sparsity", "monodromy_algebra", algebra, _stokes_sparsity, 0.5))
    results.append(_run("log_gamma_recurrence", "numerics", {}, _log_gamma_recurrence, 1e-12))
    results.append(_run("dilog_identities", "numerics", {}, _dilog_identities, 1e-13))
    results.append(_run("varpi_derivative", "numerics", {}, _varpi_derivative, 1e-8))
    for N in STANDARD_N:
        point = {"N": N, "Lambda": DECOUPLING_LAMBDA, "w": DECOUPLING_W}
        results.append(_run("decoupling_limit", "oper", point, _decoupling, 1e-8, N))
        results.append(_run("floquet_asymptotics", "oper", {"N": N, "Lambda": DECOUPLING_LAMBDA}, _asymptotics,
                            0.1 if N % 2 == 0 else 1.0, N))
        random_point = {"N": N, "Lambda": max(STANDARD_LAMBDA), "draws": RANDOM_DELTA_DRAWS}
        results.append(_run("yang_yang_random_points", "yangyang", random_point, _random_identities, 1e-6,
                            N, max(STANDARD_LAMBDA), grid_M, grid_h))

    for point in standard_matrix():
        where = point.as_dict()
        p = _nlie_params(point, grid_M, grid_h)
        results.append(_run("nlie_grid_stability", "nlie", where, _grid_stability, 1e-8, p))
        try:
            sol = solve_nlie(p)
        except (TodaLabError, ValueError) as error:
            verify_logger.error(f"verify: NLIE failed at {where}; dependent checks skipped: {error}")
            continue
        results.append(_run("construction_equivalence", "nlie", where, _construction_equivalence, 1e-7, sol))
        results.append(_run("baxter_residual_tau", "gutzwiller", where, _baxter_tau, 1e-9, sol))
        results.append(_run("hill_two_routes", "gutzwiller", where, _hill_routes, 1e-8, sol))
        results.append(_run("wronskian_zeros", "nlie", where, _wronskian_zeros, 1e-8, sol))
        results.append(_run("nlie_analyticity", "nlie", where, _analyticity, 1e-6, p, sol))
        results.append(_run("yang_yang_gradient", "yangyang", where, _gradient, 1e-6, p, sol))
        results.append(_run("lambda_derivative", "yangyang", where, _lambda_derivative, 1e-6, p, sol))
        results.append(_run("yang_yang_symmetry", "yangyang", where, _y_symmetry, 1e-12, p, sol))
        results.append(_run("rh_round_trip", "oper", where, _rh, 1e-6, sol))
        results.append(_run("floquet_recurrence", "oper", where, _floquet_recurrence, 1e-10, sol))
        results.append(_run("floquet_wronskian", "oper", where, _floquet_wronskian, 1.0, sol))
        results.append(_run("floquet_truncation", "oper", where, _floquet_truncation, 1.0, sol))

        try:
            rec, score, moved_score = _quantized_checks(point, grid_M, grid_h)
        except (TodaLabError, ValueError) as error:
            e = as_lab_error(error, module="quantize")
            verify_logger.error(f"verify: quantization failed at {where}: {e}")
            results.append(CheckResult("quantization", "quantize", where, float("nan"), 1e-8, False, e.report()["error"]))
            continue
        zeta_details = {"modes": list(rec.modes), "zeta": rec.zeta}
        results.append(_run("zeta_product", "quantize", where, lambda: (rec.residuals["zeta_product"], zeta_details), 1e-8))
        results.append(_run("zeta_spread", "quantize", where, lambda: (rec.residuals["zeta_spread"], zeta_details), 1e-8))
        results.append(_run("branch_stability", "quantize", where, _branch_stability, 1e-12, rec))
        results.append(_run("connection_criterion", "monodromy_algebra", where, lambda: (score, {}), 1e-5))
        results.append(
            _run(
                "connection_discrimination", "monodromy_algebra", where,
                lambda: (1e-3 / max(moved_score, 1e-300), {"perturbed_score": moved_score}), 1.0,
            )
        )
        results.append(_run("max_decay_ratio", "oper", where, _max_decay, 1e-6, rec))
        results.append(_run("antiholomorphic_symmetry", "oper", where, _antiholomorphic, 1e-6, rec))
        results.append(_run("antiholomorphic_discrimination", "oper", where, _antiholomorphic_discrimination, 1.0, rec))
        if point.N == 2:
            results.append(_run("oracle_n2", "quantize", where, _oracle, 1e-6, rec))
            results.append(_run("parity", "quantize", where, _parity, 1e-9, rec))
            results.append(_run("fourier_duality", "oper", where, _fourier, 1e-5, rec))
            results.append(_run("fourier_discrimination", "oper", where, _fourier_discrimination, 1.0, rec))

    for Lambda, level in ORACLE_POINTS:
        point = {"N": 2, "hbar": STANDARD_HBAR, "Lambda": Lambda, "level": level}
        results.append(_run("oracle_acceptance", "quantize", point, _oracle_level, 1e-6, Lambda, level, grid_M, grid_h))

    failed = [f"{r.name}@{r.point}" for r in results if not r.passed]
    verify_logger.info(f"verify: {len(results) - len(failed)}/{len(results)} checks passed")
    return {
        "checks": [r.as_dict() for r in results],
        "summary": {"total": len(results), "passed": len(results) - len(failed), "failed": failed},
    }
