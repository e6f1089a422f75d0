"""
Nonlinear-integral-equation construction of the Baxter solutions.

The equation is solved for log X on a uniform real grid by Picard
iteration. Everything else (v-up/v-down, the Q-functions, zeta_k, the
power sums of tau and the energy) is a real-line integral of
f = log(1 + X) against an explicit kernel.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import toeplitz

from .errors import (
    BranchError,
    CollisionError,
    ConfigError,
    ContourProximityError,
    ConvergenceError,
    InsufficientDecayError,
)
from .gutzwiller import SpectralData
from .logs import get_logger
from .numerics import ComplexGrid, Polynomial, log_gamma, newton_identities, poly_roots, quad_real_line

nlie_logger = get_logger("nlie")

CONTOUR_DISTANCE = 1e-6
COLLISION_DISTANCE = 1e-6


##############################
# Parameters and Solution
##############################

@dataclass(frozen=True)
class NlieParams:
    N: int
    hbar: float
    Lambda: float
    delta: tuple
    M: float = None
    h: float = None
    tol: float = 1e-13
    max_iter: int = 200
    tail_tol: float = 1e-6
    require_real: bool = False

    def __post_init__(self):
        delta = tuple(complex(d) for d in self.delta)
        object.__setattr__(self, "delta", delta)
        if self.N < 2 or len(delta) != self.N:
            raise ConfigError(f"Need N >= 2 entries of delta, got N={self.N}, delta={delta}", module="nlie")
        if self.hbar <= 0 or self.Lambda <= 0:
            raise ConfigError(f"hbar and Lambda must be positive ({self.hbar}, {self.Lambda})", module="nlie")
        if self.tol <= 0 or self.tail_tol <= 0 or self.max_iter < 1:
            raise ConfigError("Tolerances and max_iter must be positive", module="nlie")
        for d in delta:
            if abs(d.imag) >= self.hbar / 2:
                raise ConfigError(f"|Im delta| must stay below hbar/2, got {d}", module="nlie")
        if self.require_real:
            conj = sorted(np.conj(delta), key=lambda z: (round(z.real, 9), round(z.imag, 9)))
            own = sorted(delta, key=lambda z: (round(z.real, 9), round(z.imag, 9)))
            if np.max(np.abs(np.asarray(conj) - np.asarray(own))) > 1e-12:
                raise ConfigError("delta is not closed under conjugation", module="nlie")
        if self.M is None:
            object.__setattr__(self, "M", 40.0 * max(1.0, max(abs(d) for d in delta), self.hbar))
        if self.h is None:
            object.__setattr__(self, "h", self.hbar / 20.0)
        if not (self.M > 0 and self.h > 0) or round(self.M / self.h) < 2:
            raise ConfigError(
                f"NLIE grid needs M > 0, h > 0 and M/h >= 2, got M={self.M}, h={self.h}", module="nlie",
                M=self.M, h=self.h,
            )

    @property
    def grid(self):
        return ComplexGrid.build(self.M, self.h)

    def replace(self, **changes):
        fields = dict(
            N=self.N, hbar=self.hbar, Lambda=self.Lambda, delta=self.delta, M=self.M, h=self.h,
            tol=self.tol, max_iter=self.max_iter, tail_tol=self.tail_tol, require_real=self.require_real,
        )
        fields.update(changes)
        return NlieParams(**fields)


@dataclass
class NlieSolution:
    params: NlieParams
    grid: ComplexGrid
    iterations: int
    residual: float
    history: list
    damping: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def points(self):
        return self.grid.points

    @property
    def logX(self):
        return self.grid.values

    @property
    def X(self):
        return np.exp(self.grid.values)

    @property
    def f(self):
        return np.log1p(self.X)

    @property
    def convolution(self):
        """log(X Theta) on the grid, which is the kernel convolution of f."""
        return self.grid.values + log_theta(self.points, self.params)


##############################
# Theta and the Kernel
##############################

def _vartheta(mu, delta):
    mu = np.asarray(mu, dtype=complex)
    return np.prod(mu[..., None] - np.asarray(delta), axis=-1)


def theta(mu, p):
    return p.Lambda ** (-2 * p.N) * _vartheta(np.asarray(mu) - 0.5j * p.hbar, p.delta) * _vartheta(
        np.asarray(mu) + 0.5j * p.hbar, p.delta
    )


def log_theta(mu, p):
    mu = np.asarray(mu, dtype=complex)[..., None]
    delta = np.asarray(p.delta)
    return -2 * p.N * math.log(p.Lambda) + np.sum(
        np.log(mu - 0.5j * p.hbar - delta) + np.log(mu + 0.5j * p.hbar - delta), axis=-1
    )


def kernel(mu, hbar):
    """K(mu)/(2 pi i) with K(mu) = 2 i hbar/(mu^2 + hbar^2)."""
    mu = np.asarray(mu, dtype=complex)
    return (hbar / math.pi) / (mu * mu + hbar * hbar)


@lru_cache(maxsize=8)
def _kernel_matrix(n, h, hbar):
    column = (hbar / math.pi) / ((h * np.arange(n)) ** 2 + hbar * hbar)
    weights = np.full(n, h)
    weights[0] = weights[-1] = 0.5 * h
    matrix = toeplitz(column) * weights[None, :]
    matrix.flags.writeable = False
    return matrix


##############################
# Picard Iteration
##############################

def _log1p_checked(logX):
    X = np.exp(logX)
    one_plus = 1.0 + X
    if np.any(one_plus.real <= 0.0):
        raise BranchError("1 + X crossed the negative real axis", module="nlie", min_re=float(np.min(one_plus.real)))
    return np.log1p(X)


def _check_grid(sol):
    """Tail of the convolution at the centre and the size of f at the edges."""
    p = sol.params
    f = sol.f
    edge = float(max(abs(f[0]), abs(f[-1]))) * sol.grid.M
    if edge > p.tail_tol:
        raise InsufficientDecayError(
            f"Grid too small: |log(1+X)| * M = {edge:.3e} at the edges exceeds {p.tail_tol:.1e}",
            module="nlie",
            tail=edge,
            M=sol.grid.M,
            h=sol.grid.h,
        )
    try:
        quad_real_line(kernel(0.0 - sol.points, p.hbar) * f, sol.grid, tol=p.tail_tol)
    except InsufficientDecayError as e:
        e.module = "nlie"
        raise


def solve_nlie(p, seed=None):
    """
    Picard iteration log X <- -log Theta + K * log(1 + X). `seed` may be an
    earlier NlieSolution whose log X is interpolated onto the new grid.
    """
    grid = p.grid
    points = grid.points
    lt = log_theta(points, p)
    K = _kernel_matrix(len(points), grid.h, p.hbar)

    if seed is not None:
        logX = seed.grid.interpolate(points)
        outside = np.abs(points) > seed.grid.M
        logX = np.where(outside, -lt, logX)
    else:
        logX = -lt

    alpha = 1.0
    history = []
    for it in range(1, p.max_iter + 1):
        update = -lt + K @ _log1p_checked(logX)
        residual = float(np.max(np.abs(update - logX)))
        new = logX + alpha * (update - logX)
        logX = new
        history.append(residual)
        nlie_logger.debug(f"NLIE iteration {it}: residual {residual:.3e} (alpha={alpha})")
        if residual < p.tol:
            break
        if it > 3 and residual > 1e2 * p.tol:
            ratio = residual / history[-2]
            if alpha == 1.0 and ratio > 0.5:
                nlie_logger.warning(f"NLIE contraction ratio {ratio:.3f} at iteration {it}; damping with alpha=0.5")
                alpha = 0.5
            elif alpha < 1.0 and ratio > 0.75:
                raise ConvergenceError(
                    f"NLIE iteration is not contracting (ratio {ratio:.3f} at iteration {it})",
                    module="nlie",
                    residual=residual,
                    residual_history=history,
                )
    else:
        raise ConvergenceError(
            f"NLIE did not converge in {p.max_iter} iterations (residual {history[-1]:.3e})",
            module="nlie",
            residual=history[-1],
            residual_history=history,
        )

    sol = NlieSolution(
        params=p, grid=grid.with_values(logX), iterations=len(history), residual=history[-1],
        history=history, damping=alpha,
    )
    _check_grid(sol)
    nlie_logger.info(
        f"NLIE converged N={p.N} hbar={p.hbar} Lambda={p.Lambda} in {sol.iterations} iterations "
        f"(residual {sol.residual:.2e}, M={grid.M}, h={grid.h})"
    )
    return sol


##############################
# Off-axis Continuation of X
##############################

def convolution_at(mu, sol):
    """Kernel convolution of f at complex mu, |Im mu| < hbar."""
    p = sol.params
    mu = np.asarray(mu, dtype=complex)
    if np.any(np.abs(mu.imag) >= p.hbar):
        raise ContourProximityError("Kernel convolution is only defined for |Im mu| < hbar", module="nlie")
    samples = kernel(mu[..., None] - sol.points, p.hbar) * sol.f
    return quad_real_line(samples, sol.grid, tol=p.tail_tol)


def x_at(mu, sol):
    return np.exp(convolution_at(mu, sol) - log_theta(mu, sol.params))


##############################
# v-up and v-down
##############################

def _cauchy(lam, sol, offset, sign):
    p = sol.params
    lam = np.asarray(lam, dtype=complex)
    if np.any(np.abs(lam.imag + offset.imag) < CONTOUR_DISTANCE):
        raise ContourProximityError(
            f"lambda too close to the Cauchy contour Im lambda = {-offset.imag}", module="nlie"
        )
    samples = sol.f / (lam[..., None] - sol.points + offset)
    return sign * quad_real_line(samples, sol.grid, tol=p.tail_tol) / (2j * math.pi)


def log_v_up(lam, sol):
    return _cauchy(lam, sol, 0.5j * sol.params.hbar, -1.0)


def log_v_down_shifted(lam, sol):
    """log v-down(lam - i hbar)."""
    return _cauchy(lam, sol, -0.5j * sol.params.hbar, +1.0)


def v_up(lam, sol):
    return np.exp(log_v_up(lam, sol))


def v_down_shifted(lam, sol):
    return np.exp(log_v_down_shifted(lam, sol))


##############################
# Q-functions from the NLIE
##############################

def t_delta_polynomial(sol):
    """t_delta(lambda) as a Polynomial, from the power sums of tau(delta)."""
    cached = sol._cache.get("t_delta")
    if cached is not None:
        return cached
    N = sol.params.N
    e = newton_identities(power_sums(sol, N))
    coeffs = np.zeros(N + 1, dtype=complex)
    for k in range(N + 1):
        coeffs[N - k] = (-1) ** k * e[k]
    poly = Polynomial(tuple(coeffs))
    sol._cache["t_delta"] = poly
    return poly


def _log_add(a, b):
    """log(e^a + e^b) for complex a, b."""
    big = np.where(a.real >= b.real, a, b)
    small = np.where(a.real >= b.real, b, a)
    return big + np.log1p(np.exp(small - big))


def _log_q_direct(lam, sol, sign):
    p = sol.params
    N, hbar = p.N, p.hbar
    delta = np.asarray(p.delta)
    prefactor = sign * 1j * N * lam / hbar * (math.log(hbar) - math.log(p.Lambda)) - N * math.pi * lam / hbar
    gammas = np.sum(log_gamma(1.0 - sign * 1j * (lam[..., None] - delta) / hbar), axis=-1)
    v = log_v_up(lam, sol) if sign > 0 else log_v_down_shifted(lam, sol)
    return prefactor + v - gammas


def _log_q_continued(lam, sol, sign):
    """Direct form multiplied by 1 + X continued across the contour."""
    p = sol.params
    N, hbar = p.N, p.hbar
    delta = np.asarray(p.delta)
    prefactor = sign * 1j * N * lam / hbar * (math.log(hbar) - math.log(p.Lambda)) - N * math.pi * lam / hbar
    v = log_v_up(lam, sol) if sign > 0 else log_v_down_shifted(lam, sol)
    shifted = lam + sign * 1j * hbar
    bracket = _vartheta(lam, delta) * _vartheta(shifted, delta) + p.Lambda ** (2 * N) * np.exp(
        convolution_at(lam + sign * 0.5j * hbar, sol)
    )
    gammas = np.sum(log_gamma(2.0 - sign * 1j * (lam[..., None] - delta) / hbar), axis=-1)
    return (
        prefactor
        + v
        + N * np.log(-sign * 1j / hbar)
        + np.log(bracket)
        - np.log(_vartheta(lam, delta))
        - gammas
    )


def _log_q_baxter_step(lam, sol, sign):
    """Q(lam) = i^{sN} [t(lam + s i hbar) Q(lam + s i hbar) / Lambda^N - i^{sN} Q(lam + 2 s i hbar)]."""
    p = sol.params
    t = t_delta_polynomial(sol)
    near = lam + sign * 1j * p.hbar
    far = lam + 2 * sign * 1j * p.hbar
    a = sign * p.N * 0.5j * math.pi + np.log(t(near)) + _log_q_delta(near, sol, sign) - p.N * math.log(p.Lambda)
    b = _log_q_delta(far, sol, sign) + 1j * math.pi * (p.N + 1)
    return _log_add(a, b)


def _log_q_delta(lam, sol, sign):
    shape = np.shape(lam)
    lam = np.atleast_1d(np.asarray(lam, dtype=complex)).ravel()
    y = -sign * lam.imag / sol.params.hbar
    out = np.empty(lam.shape, dtype=complex)
    regions = (
        (y < 0.25, _log_q_direct),
        ((y >= 0.25) & (y < 0.75), _log_q_baxter_step),
        ((y >= 0.75) & (y <= 1.25), _log_q_continued),
        (y > 1.25, _log_q_baxter_step),
    )
    for mask, evaluate in regions:
        if np.any(mask):
            out[mask] = evaluate(lam[mask], sol, sign)
    return out.reshape(shape)


def log_q_plus_delta(lam, sol):
    out = _log_q_delta(lam, sol, +1)
    return complex(out) if out.ndim == 0 else out


def log_q_minus_delta(lam, sol):
    out = _log_q_delta(lam, sol, -1)
    return complex(out) if out.ndim == 0 else out


def q_plus_delta(lam, sol):
    return np.exp(log_q_plus_delta(lam, sol))


def q_minus_delta(lam, sol):
    return np.exp(log_q_minus_delta(lam, sol))


##############################
# zeta_k, tau(delta) and the Energy
##############################

def log_zeta(sol):
    """log zeta_k on the branch continuous from the Lambda -> 0 closed form."""
    p = sol.params
    N, hbar = p.N, p.hbar
    delta = np.asarray(p.delta)
    for j in range(N):
        for k in range(j + 1, N):
            if abs(delta[j] - delta[k]) < COLLISION_DISTANCE:
                raise CollisionError(f"Coincident delta entries {j} and {k}", module="nlie")
    out = np.empty(N, dtype=complex)
    for k in range(N):
        d = np.delete(delta[k] - delta, k) / hbar
        closed = 2j * N * delta[k] / hbar * (math.log(hbar) - math.log(p.Lambda)) + np.sum(
            log_gamma(1.0 + 1j * d) - log_gamma(1.0 - 1j * d)
        )
        P = 1.0 / (delta[k] - sol.points + 0.5j * hbar) + 1.0 / (delta[k] - sol.points - 0.5j * hbar)
        out[k] = closed - quad_real_line(P * sol.f, sol.grid, tol=p.tail_tol) / (2j * math.pi)
    return out


def zeta_j(sol):
    return np.exp(log_zeta(sol))


def power_sums(sol, kmax):
    """p_k = sum tau^k for k = 1..kmax."""
    p = sol.params
    if kmax < p.N:
        raise ConfigError(f"kmax must be >= N={p.N}, got {kmax}", module="nlie", kmax=kmax)
    delta = np.asarray(p.delta)
    mu = sol.points
    sums = []
    for k in range(1, kmax + 1):
        bracket = (mu + 0.5j * p.hbar) ** (k - 1) - (mu - 0.5j * p.hbar) ** (k - 1)
        integral = quad_real_line(bracket * sol.f, sol.grid, tol=p.tail_tol) / (2j * math.pi) if k > 1 else 0j
        sums.append(np.sum(delta ** k) + k * integral)
    return np.asarray(sums)


def tau_from_delta(sol, kmax=None):
    """
    Charges tau from the N-th degree polynomial t_delta. `kmax` only states how
    many power sums the caller trusts; sums past 2N - 2 do not converge on the
    real line, so nothing beyond the first N is ever computed.
    """
    p = sol.params
    if kmax is not None and kmax < p.N:
        raise ConfigError(f"kmax must be >= N={p.N}, got {kmax}", module="nlie", kmax=kmax)
    poly = t_delta_polynomial(sol)
    roots = poly_roots(poly)
    return SpectralData(N=p.N, tau=tuple(roots - np.mean(roots) + np.sum(p.delta) / p.N), Lambda=p.Lambda, hbar=p.hbar)


def u_energy(sol):
    p = sol.params
    delta = np.asarray(p.delta)
    if abs(np.sum(delta)) > 1e-10 * max(1.0, float(np.max(np.abs(delta)))):
        raise ConfigError(f"u_energy needs total momentum zero, sum(delta)={np.sum(delta)}", module="nlie")
    return 0.5 * np.sum(delta ** 2) + p.hbar / (2.0 * math.pi) * quad_real_line(sol.f, sol.grid, tol=p.tail_tol)


def analyticity_check(p, eps=1e-4, sol=None):
    """Cauchy-Riemann residual of log zeta in each delta_k from central differences."""
    base = sol if sol is not None else solve_nlie(p)
    delta = np.asarray(p.delta)
    scale = 1.0
    worst = 0.0
    for k in range(p.N):
        steps = {}
        for name, step in (("x", eps), ("y", 1j * eps)):
            shift = np.zeros(p.N, dtype=complex)
            shift[k] = step
            plus = log_zeta(solve_nlie(p.replace(delta=tuple(delta + shift)), seed=base))
            minus = log_zeta(solve_nlie(p.replace(delta=tuple(delta - shift)), seed=base))
            steps[name] = (plus - minus) / (2 * eps)
        scale = max(scale, float(np.max(np.abs(steps["x"]))))
        worst = max(worst, float(np.max(np.abs(steps["y"] - 1j * steps["x"]))))
    residual = worst / scale
    nlie_logger.info(f"analyticity N={p.N} Lambda={p.Lambda}: Cauchy-Riemann residual {residual:.3e}")
    return {"eps": eps, "residual": residual, "scale": scale}
