"""Yang-Yang function Y = Y_pert + Y_inst and its derivative identities."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .logs import get_logger
from .nlie import NlieParams, log_zeta, solve_nlie, u_energy
from .numerics import dilog, quad_real_line, varpi

yangyang_logger = get_logger("yangyang")


@dataclass(frozen=True)
class YangYangValue:
    y_pert: complex
    y_inst: complex
    total: complex
    params: NlieParams


def y_pert(p):
    delta = np.asarray(p.delta)
    value = p.N * (1j / p.hbar) * (math.log(p.hbar) - math.log(p.Lambda)) * np.sum(delta ** 2)
    for dj in delta:
        for dk in delta:
            if dk != dj:
                value += varpi(dk - dj, p.hbar)
    return complex(value)


def y_inst(sol):
    integrand = 0.5 * sol.convolution * sol.f + dilog(-sol.X)
    return -quad_real_line(integrand, sol.grid, tol=sol.params.tail_tol) / (2j * math.pi)


def yang_yang(sol):
    p = sol.params
    pert = y_pert(p)
    inst = y_inst(sol)
    value = YangYangValue(y_pert=pert, y_inst=inst, total=pert + inst, params=p)
    delta = np.asarray(p.delta)
    if np.allclose(np.sort_complex(delta), np.sort_complex(np.conj(delta)), atol=1e-12):
        yangyang_logger.info(f"observation: Im(iY) = {(1j * value.total).imag:.3e} for self-conjugate delta")
    return value


def _y_at(p, seed):
    return yang_yang(solve_nlie(p, seed=seed)).total


##############################
# Derivative Identities
##############################

def grad_delta_check(p, eps=1e-4, sol=None):
    """Central differences of Y in each delta_k against log zeta_k."""
    base = sol if sol is not None else solve_nlie(p)
    target = log_zeta(base)
    deviations = []
    derivatives = []
    for k in range(p.N):
        shift = np.zeros(p.N, dtype=complex)
        shift[k] = eps
        plus = _y_at(p.replace(delta=tuple(np.asarray(p.delta) + shift)), base)
        minus = _y_at(p.replace(delta=tuple(np.asarray(p.delta) - shift)), base)
        fd = (plus - minus) / (2 * eps)
        derivatives.append(fd)
        deviations.append(abs(fd - target[k]))
    report = {
        "eps": eps,
        "fd_gradient": derivatives,
        "log_zeta": target.tolist(),
        "deviations": deviations,
        "max_deviation": float(max(deviations)),
    }
    yangyang_logger.info(f"grad_delta_check N={p.N} Lambda={p.Lambda} eps={eps}: max deviation {report['max_deviation']:.3e}")
    return report


def lambda_derivative_check(p, eps=1e-4, sol=None):
    """i hbar dY/d log Lambda^{2N} against the energy u."""
    base = sol if sol is not None else solve_nlie(p)
    u = u_energy(base)
    step = math.exp(eps / (2 * p.N))
    plus = _y_at(p.replace(Lambda=p.Lambda * step), base)
    minus = _y_at(p.replace(Lambda=p.Lambda / step), base)
    derivative = 1j * p.hbar * (plus - minus) / (2 * eps)
    report = {"eps": eps, "derivative": derivative, "u": u, "deviation": float(abs(derivative - u))}
    yangyang_logger.info(f"lambda_derivative_check N={p.N} Lambda={p.Lambda}: deviation {report['deviation']:.3e}")
    return report


def permutation_symmetry_check(p, sol=None):
    """Y at every cyclic shift and the reversal of delta against Y at delta."""
    base = sol if sol is not None else solve_nlie(p)
    value = yang_yang(base).total
    delta = list(p.delta)
    orders = [tuple(delta[k:] + delta[:k]) for k in range(1, p.N)] + [tuple(reversed(delta))]
    changes = [abs(_y_at(p.replace(delta=order), None) - value) / max(1.0, abs(value)) for order in orders]
    return {"Y": value, "changes": changes, "max_change": float(max(changes))}


##############################
# Oper Generating Function
##############################

def _params_for_sigma(sigma, Lambda, hbar, options):
    sigma = np.asarray(sigma, dtype=complex)
    if len(sigma) < 2:
        raise ConfigError("sigma needs at least two entries", module="yangyang")
    return NlieParams(N=len(sigma), hbar=hbar, Lambda=Lambda, delta=tuple(-1j * hbar * sigma), **options)


def generating_function_S(sigma, Lambda, hbar=1.0, **options):
    """S(sigma, Lambda) = Y(-i hbar sigma, Lambda) and eta_j = log zeta_j / (2 pi i)."""
    p = _params_for_sigma(sigma, Lambda, hbar, options)
    sol = solve_nlie(p)
    eta = log_zeta(sol) / (2j * math.pi)
    return yang_yang(sol).total, eta


def sigma_gradient_check(sigma, Lambda, hbar=1.0, eps=1e-4, **options):
    """Central differences of S in sigma_j against 2 pi hbar eta_j."""
    p = _params_for_sigma(sigma, Lambda, hbar, options)
    base = solve_nlie(p)
    eta = log_zeta(base) / (2j * math.pi)
    deviations = []
    for j in range(p.N):
        shift = np.zeros(p.N, dtype=complex)
        shift[j] = eps
        plus = _y_at(p.replace(delta=tuple(-1j * hbar * (np.asarray(sigma) + shift))), base)
        minus = _y_at(p.replace(delta=tuple(-1j * hbar * (np.asarray(sigma) - shift))), base)
        deviations.append(abs((plus - minus) / (2 * eps) - 2 * math.pi * hbar * eta[j]))
    return {"eps": eps, "eta": eta.tolist(), "deviations": deviations, "max_deviation": float(max(deviations))}
