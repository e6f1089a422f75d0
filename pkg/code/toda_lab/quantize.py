"""
Quantization of the Toda chain: Newton on the Yang-Yang gradient
conditions log zeta_k = 2 pi i (n_k - S/N), k < N, with sum(delta) = 0,
plus the finite-difference Schroedinger oracle for N = 2 and the entire
Baxter eigen-solution q(lambda).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import BranchError, ConfigError, ConvergenceError, NumericalError, ResidueError
from .logs import get_logger
from .numerics import log_gamma, log_sinh, newton_system
from .nlie import (
    NlieParams,
    log_q_minus_delta,
    log_q_plus_delta,
    log_zeta,
    solve_nlie,
    tau_from_delta,
    u_energy,
)

quantize_logger = get_logger("quantize")

CONTINUATION_STEP = 0.05
ORACLE_LAMBDA_FLOOR = 1e-3
ORACLE_H0 = 0.02
ORACLE_TOL = 1e-9
POLE_RADIUS = 0.1
POLE_NEAR = 0.05
CIRCLE_POINTS = 32


##############################
# Problem and Record Types
##############################

@dataclass(frozen=True)
class QuantizationProblem:
    N: int
    hbar: float
    Lambda: float
    modes: tuple
    seed: tuple = None
    tol: float = 1e-10
    max_iter: int = 30
    grid_M: float = None
    grid_h: float = None

    def __post_init__(self):
        modes = tuple(int(n) for n in self.modes)
        object.__setattr__(self, "modes", modes)
        if self.N < 2 or len(modes) != self.N:
            raise ConfigError(f"Need N >= 2 quantum numbers, got N={self.N}, modes={modes}", module="quantize")
        if self.hbar <= 0 or self.Lambda <= 0:
            raise ConfigError(f"hbar and Lambda must be positive ({self.hbar}, {self.Lambda})", module="quantize")
        if self.tol <= 0 or self.max_iter < 1:
            raise ConfigError("tol and max_iter must be positive", module="quantize")
        if len(set(modes)) != len(modes):
            raise ConfigError(f"Quantum numbers must be distinct, got {modes}", module="quantize")
        if self.seed is not None:
            seed = tuple(complex(d) for d in self.seed)
            if len(seed) != self.N:
                raise ConfigError(f"Seed needs {self.N} entries, got {len(seed)}", module="quantize")
            object.__setattr__(self, "seed", seed)

    @property
    def targets(self):
        """2 pi i (n_k - S/N) for k = 1..N-1."""
        S = sum(self.modes)
        return np.array([2j * math.pi * (n - S / self.N) for n in self.modes[:-1]])

    def grid_for(self, delta):
        """(M, h) for NLIE solves near delta; held fixed through one Newton run."""
        scale = max(1.0, float(np.max(np.abs(delta))), self.hbar)
        M = self.grid_M if self.grid_M is not None else 40.0 * math.ceil(2.0 * scale)
        h = self.grid_h if self.grid_h is not None else self.hbar / 20.0
        return M, h

    def nlie_params(self, delta, grid=None):
        M, h = grid if grid is not None else self.grid_for(delta)
        return NlieParams(N=self.N, hbar=self.hbar, Lambda=self.Lambda, delta=tuple(delta), M=M, h=h)


@dataclass
class SpectrumRecord:
    N: int
    hbar: float
    Lambda: float
    modes: tuple
    delta_star: tuple
    zeta: complex
    zetas: tuple
    energies: tuple
    residuals: dict
    oracle: dict = None
    solution: object = field(default=None, repr=False, compare=False)

    @property
    def E2(self):
        return self.energies[0]

    def as_dict(self):
        return {
            "N": self.N,
            "hbar": self.hbar,
            "Lambda": self.Lambda,
            "modes": list(self.modes),
            "delta_star": list(self.delta_star),
            "zeta": self.zeta,
            "zetas": list(self.zetas),
            "energies": list(self.energies),
            "residuals": dict(self.residuals),
            "oracle": self.oracle,
        }


def ground_modes(N):
    return tuple(range(N - 1, -1, -1))


def modes_for_level(N, level):
    """Level 0 is the ground state; higher levels raise the first quantum number."""
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    modes = list(ground_modes(N))
    modes[0] += level
    return tuple(modes)


##############################
# Closed-form Seed
##############################

def _closed_log_zeta(delta, N, hbar, Lambda):
    delta = np.asarray(delta, dtype=complex)
    out = np.empty(N, dtype=complex)
    log_ratio = math.log(hbar) - math.log(Lambda)
    for k in range(N):
        d = np.delete(delta[k] - delta, k) / hbar
        out[k] = 2j * N * delta[k] / hbar * log_ratio + np.sum(log_gamma(1.0 + 1j * d) - log_gamma(1.0 - 1j * d))
    return out


def small_lambda_seed(N, hbar, Lambda, modes):
    """Solution of the quantization conditions with X = 0."""
    qp = QuantizationProblem(N=N, hbar=hbar, Lambda=Lambda, modes=modes)
    log_ratio = math.log(hbar) - math.log(Lambda)
    S = sum(qp.modes)
    if log_ratio <= 0:
        raise ConfigError(f"Closed-form seed needs Lambda < hbar, got Lambda={Lambda}", module="quantize")
    guess = np.array([math.pi * hbar * (n - S / N) / (N * log_ratio) for n in qp.modes], dtype=complex)
    targets = qp.targets

    def F(delta):
        return np.r_[_closed_log_zeta(delta, N, hbar, Lambda)[:-1] - targets, np.sum(delta)]

    return newton_system(F, guess, tol=1e-13)


##############################
# Newton on the Quantization Conditions
##############################

def _newton(qp, seed):
    state = {"sol": None, "log_zeta": None}
    targets = qp.targets
    grid = qp.grid_for(seed)

    def F(delta):
        try:
            p = qp.nlie_params(delta, grid)
        except ConfigError as e:
            raise ConvergenceError(f"Newton iterate left the admissible strip: {e}", module="quantize") from e
        sol = solve_nlie(p, seed=state["sol"])
        lz = log_zeta(sol)
        state["last"] = (sol, lz)
        if state["sol"] is None:
            state["sol"] = sol
        return np.r_[lz[:-1] - targets, np.sum(delta)]

    def monitor(x_old, x_new, f_new):
        previous = state["log_zeta"]
        current = f_new[:-1] + targets
        if previous is not None and np.max(np.abs(current - previous)) > math.pi:
            raise BranchError(
                f"log zeta jumped by {np.max(np.abs(current - previous)):.3f} between iterates",
                module="quantize",
                x=x_new,
            )
        state["log_zeta"] = current
        state["sol"] = state["last"][0]

    report = newton_system(F, seed, tol=qp.tol, max_iter=qp.max_iter, rel_eps=1e-6, monitor=monitor, report=True)
    report.grid = grid
    return report


def _continue_in_lambda(qp):
    start = min(CONTINUATION_STEP, qp.Lambda)
    delta = small_lambda_seed(qp.N, qp.hbar, start, qp.modes)
    steps = int(math.ceil(qp.Lambda / CONTINUATION_STEP))
    report = None
    for k in range(1, steps + 1):
        Lambda = min(k * CONTINUATION_STEP, qp.Lambda)
        step_problem = QuantizationProblem(
            N=qp.N, hbar=qp.hbar, Lambda=Lambda, modes=qp.modes, tol=qp.tol, max_iter=qp.max_iter,
            grid_M=qp.grid_M, grid_h=qp.grid_h,
        )
        report = _newton(step_problem, delta)
        delta = report.x
        quantize_logger.debug(f"continuation Lambda={Lambda}: delta={np.round(delta, 10).tolist()}")
    return report


def quantize(qp):
    if qp.seed is not None:
        seed = np.asarray(qp.seed)
    else:
        seed = small_lambda_seed(qp.N, qp.hbar, qp.Lambda, qp.modes) if qp.Lambda < qp.hbar else None
    report = None
    if seed is not None:
        try:
            report = _newton(qp, seed)
        except NumericalError as e:
            quantize_logger.warning(f"Direct quantization failed for modes={qp.modes} Lambda={qp.Lambda}: {e}")
    if report is None:
        report = _continue_in_lambda(qp)

    delta = report.x
    delta = delta - np.mean(delta)
    sol = solve_nlie(qp.nlie_params(delta, report.grid))
    lz = log_zeta(sol)
    zetas = np.exp(lz)
    zeta = complex(np.mean(zetas))
    spectral = tau_from_delta(sol)
    energies = tuple(spectral.charges)
    u = u_energy(sol)
    residuals = {
        "newton": report.residual,
        "newton_iterations": report.iterations,
        "zeta_spread": float(np.max(np.abs(zetas - zeta)) / abs(zeta)),
        "zeta_power_N": float(abs(zeta ** qp.N - 1.0)),
        "zeta_product": float(abs(np.prod(zetas) - 1.0)),
        "momentum": float(abs(np.sum(delta))),
        "u_plus_E2": float(abs(u + energies[0])),
        "nlie": sol.residual,
    }
    quantize_logger.info(
        f"quantized N={qp.N} hbar={qp.hbar} Lambda={qp.Lambda} modes={qp.modes}: "
        f"E={[complex(np.round(E, 12)) for E in energies]} zeta_spread={residuals['zeta_spread']:.2e}"
    )
    return SpectrumRecord(
        N=qp.N, hbar=qp.hbar, Lambda=qp.Lambda, modes=qp.modes, delta_star=tuple(delta), zeta=zeta,
        zetas=tuple(zetas), energies=energies, residuals=residuals, solution=sol,
    )


##############################
# Parity and Branch Stability
##############################

def mirrored_modes(modes):
    """Quantum numbers of the parity image: n_k -> -n_{N+1-k}."""
    return tuple(-int(n) for n in reversed(modes))


def _same_grid(rec, **changes):
    fields = dict(
        N=rec.N, hbar=rec.hbar, Lambda=rec.Lambda, modes=rec.modes,
        grid_M=rec.solution.params.M, grid_h=rec.solution.params.h,
    )
    fields.update(changes)
    return QuantizationProblem(**fields)


def parity_check(rec):
    """Quantize the mirrored modes from scratch; delta* must map to -reversed(delta*) with E_2 unchanged."""
    mirrored = quantize(_same_grid(rec, modes=mirrored_modes(rec.modes)))
    expected = -np.asarray(rec.delta_star)[::-1]
    delta_change = float(np.max(np.abs(np.asarray(mirrored.delta_star) - expected)))
    energy_change = float(abs(mirrored.E2 - rec.E2))
    quantize_logger.info(
        f"parity modes={rec.modes} -> {mirrored.modes}: delta change {delta_change:.2e}, E2 change {energy_change:.2e}"
    )
    return {
        "modes": mirrored.modes,
        "delta_change": delta_change,
        "energy_change": energy_change,
        "deviation": max(delta_change, energy_change),
    }


def branch_stability_check(rec):
    """Rerun Newton from the converged delta*; it must come back unchanged."""
    again = quantize(_same_grid(rec, seed=rec.delta_star))
    delta_change = float(np.max(np.abs(np.asarray(again.delta_star) - np.asarray(rec.delta_star))))
    energy_change = float(abs(again.E2 - rec.E2))
    return {
        "delta_change": delta_change,
        "energy_change": energy_change,
        "iterations": again.residuals["newton_iterations"],
        "deviation": max(delta_change, energy_change),
    }


##############################
# N = 2 Schroedinger Oracle
##############################

def _fd_eigenvalue(hbar, Lambda, level, L, h):
    n = int(round(2 * L / h)) - 1
    x = -L + h * np.arange(1, n + 1)
    diagonal = 2.0 * hbar * hbar / (h * h) + 2.0 * Lambda * Lambda * np.cosh(x)
    off = np.full(n - 1, -hbar * hbar / (h * h))
    values = eigh_tridiagonal(diagonal, off, eigvals_only=True, select="i", select_range=(level, level))
    return float(values[0])


def _oracle_domain(E, Lambda):
    return max(10.0, 4.0 * math.acosh(max(1.0, abs(E) / (2.0 * Lambda * Lambda))) + 4.0)


def oracle_spectrum_n2(hbar, Lambda, level):
    """Eigenvalue -E_2 of -hbar^2 psi'' + 2 Lambda^2 cosh(x) psi for the given level."""
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    if Lambda < ORACLE_LAMBDA_FLOOR:
        raise ConfigError(f"Oracle needs Lambda >= {ORACLE_LAMBDA_FLOOR}, got {Lambda}", module="quantize")
    if hbar <= 0:
        raise ConfigError(f"hbar must be positive, got {hbar}", module="quantize")

    L = 10.0
    for _ in range(5):
        estimate = _fd_eigenvalue(hbar, Lambda, level, L, ORACLE_H0)
        new_L = _oracle_domain(estimate, Lambda)
        if new_L <= L:
            break
        L = new_L

    h = ORACLE_H0
    coarse = _fd_eigenvalue(hbar, Lambda, level, L, h)
    fine = _fd_eigenvalue(hbar, Lambda, level, L, h / 2)
    previous = (4.0 * fine - coarse) / 3.0
    for _ in range(4):
        h /= 2
        coarse, fine = fine, _fd_eigenvalue(hbar, Lambda, level, L, h / 2)
        current = (4.0 * fine - coarse) / 3.0
        if abs(current - previous) < ORACLE_TOL * max(1.0, abs(current)):
            wider = _fd_eigenvalue(hbar, Lambda, level, L + 4.0, h / 2)
            if abs(wider - fine) < ORACLE_TOL * max(1.0, abs(fine)):
                quantize_logger.info(f"oracle hbar={hbar} Lambda={Lambda} level={level}: {current:.12g} (L={L}, h={h / 2})")
                return current
        previous = current
    raise ConvergenceError(
        f"Schroedinger oracle did not stabilize (last change {abs(current - previous):.3e})", module="quantize"
    )


##############################
# Baxter Eigen-solution q
##############################

def _log_denominator(lam, rec):
    lam = np.asarray(lam, dtype=complex)
    delta = np.asarray(rec.delta_star)
    return np.sum(-math.pi * lam[..., None] / rec.hbar + log_sinh(math.pi * (lam[..., None] - delta) / rec.hbar), axis=-1)


def _q_regular(lam, rec, sol):
    lam = np.asarray(lam, dtype=complex)
    numerator = np.exp(log_q_plus_delta(lam, sol)) - rec.zeta * np.exp(log_q_minus_delta(lam, sol))
    return numerator / np.exp(_log_denominator(lam, rec))


def _nearest_pole(lam, rec):
    delta = np.asarray(rec.delta_star)
    m = np.round((lam - delta).imag / rec.hbar)
    centers = delta + 1j * rec.hbar * m
    j = int(np.argmin(np.abs(lam - centers)))
    return centers[j], abs(lam - centers[j])


def build_q(lam, rec, sol):
    """q(lambda); inside a small disc around a denominator zero the value comes from a Cauchy circle."""
    lam = complex(lam)
    center, distance = _nearest_pole(lam, rec)
    if distance >= POLE_NEAR * rec.hbar:
        return complex(_q_regular(lam, rec, sol))
    r = POLE_RADIUS * rec.hbar
    nodes = center + r * np.exp(2j * math.pi * np.arange(CIRCLE_POINTS) / CIRCLE_POINTS)
    values = _q_regular(nodes, rec, sol)
    residue = np.mean(values * (nodes - center))
    scale = float(np.max(np.abs(values))) * r
    if abs(residue) > 1e-6 * scale:
        raise ResidueError(
            f"q has a pole at {center}: residue {abs(residue):.3e} against scale {scale:.3e}",
            module="quantize",
            residue=complex(residue),
        )
    return complex(np.mean(values * (nodes - center) / (nodes - lam)))


def q_values(lams, rec, sol):
    """build_q over an array; only points near a denominator zero take the circle route."""
    lams = np.asarray(lams, dtype=complex)
    delta = np.asarray(rec.delta_star)
    m = np.round((lams[..., None] - delta).imag / rec.hbar)
    gap = np.min(np.abs(lams[..., None] - delta - 1j * rec.hbar * m), axis=-1)
    near = gap < POLE_NEAR * rec.hbar
    out = np.empty(lams.shape, dtype=complex)
    if np.any(~near):
        out[~near] = _q_regular(lams[~near], rec, sol)
    for index in zip(*np.nonzero(near)):
        out[index] = build_q(lams[index], rec, sol)
    return out


def residue_ratio(j, rec, sol):
    """Q+(delta_j) / Q-(delta_j), which quantization makes equal to zeta."""
    d = rec.delta_star[j]
    return complex(np.exp(log_q_plus_delta(d, sol) - log_q_minus_delta(d, sol)))


def baxter_residual_q(lam, rec, sol, spectral):
    """Relative residual of t q = Lambda^N (i^N q(lambda + i hbar) + i^-N q(lambda - i hbar))."""
    N, hbar = rec.N, rec.hbar
    q0 = build_q(lam, rec, sol)
    up = build_q(lam + 1j * hbar, rec, sol)
    down = build_q(lam - 1j * hbar, rec, sol)
    rhs = rec.Lambda ** N * (1j ** N * up + 1j ** (-N) * down)
    lhs = complex(spectral.t(lam)) * q0
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs))
