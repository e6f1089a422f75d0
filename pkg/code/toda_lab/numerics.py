"""
Complex-arithmetic primitives used by every other module: special
functions, real-line quadrature, polynomials, and a finite-difference
Newton solver.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special
from scipy.optimize import linear_sum_assignment

from .errors import (
    ConfigError,
    ConvergenceError,
    InsufficientDecayError,
    NumericalError,
    PoleError,
    SingularJacobianError,
)
from .logs import get_logger

numerics_logger = get_logger("numerics")

DEFAULT_TAIL_TOL = 1e-6


##############################
# Grids and Polynomials
##############################

@dataclass(frozen=True)
class ComplexGrid:
    """Uniform symmetric grid on [-M, M] with optional complex samples."""

    points: np.ndarray
    M: float
    h: float
    values: np.ndarray = field(default=None, compare=False)

    @classmethod
    def build(cls, M, h, values=None):
        if M <= 0 or h <= 0:
            raise ConfigError(f"Grid needs positive M and h, got M={M}, h={h}", module="numerics", M=M, h=h)
        half = int(round(M / h))
        if half < 2:
            raise ConfigError(f"Grid too coarse: M/h = {M / h}, need at least 2", module="numerics", M=M, h=h)
        points = h * np.arange(-half, half + 1, dtype=float)
        grid = cls(points=points, M=half * h, h=h, values=None)
        return grid if values is None else grid.with_values(values)

    def __len__(self):
        return len(self.points)

    @property
    def weights(self):
        w = np.full(len(self.points), self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    def with_values(self, values):
        values = np.asarray(values, dtype=complex)
        if values.shape[-1] != len(self.points):
            raise ValueError("Sample count does not match grid size.")
        return ComplexGrid(points=self.points, M=self.M, h=self.h, values=values)

    def interpolate(self, x):
        """Linear interpolation of the samples; zero outside [-M, M]."""
        if self.values is None:
            raise ValueError("Grid carries no samples.")
        x = np.asarray(x, dtype=float)
        re = np.interp(x, self.points, self.values.real, left=0.0, right=0.0)
        im = np.interp(x, self.points, self.values.imag, left=0.0, right=0.0)
        return re + 1j * im


@dataclass(frozen=True)
class Polynomial:
    """Coefficients c_0..c_n in ascending order."""

    coefficients: tuple

    def __post_init__(self):
        coeffs = tuple(complex(c) for c in self.coefficients)
        if not coeffs:
            raise ValueError("Polynomial needs at least one coefficient.")
        object.__setattr__(self, "coefficients", coeffs)

    @classmethod
    def from_roots(cls, roots):
        return cls(tuple(np.polynomial.polynomial.polyfromroots(np.asarray(roots, dtype=complex))))

    @property
    def degree(self):
        return len(self.coefficients) - 1

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, np.asarray(self.coefficients))


##############################
# Special Functions
##############################

def log_gamma(z):
    """Principal-branch log Gamma; continuous off the negative real axis."""
    z_arr = np.asarray(z, dtype=complex)
    nearest = np.round(z_arr.real)
    at_pole = (np.abs(z_arr - nearest) < 1e-14) & (nearest <= 0)
    if np.any(at_pole):
        raise PoleError(f"log_gamma evaluated at a pole of Gamma: {z}", module="numerics", z=z)
    out = special.loggamma(z_arr)
    return complex(out) if np.ndim(out) == 0 else out


def log_sinh(z):
    """log sinh(z) without overflow for large |Re z|; branch is immaterial after exp."""
    z = np.asarray(z, dtype=complex)
    flip = z.real < 0
    w = np.where(flip, -z, z)
    out = w + np.log(-np.expm1(-2.0 * w)) - math.log(2.0)
    out = np.where(flip, out + 1j * math.pi, out)
    return complex(out) if np.ndim(out) == 0 else out


def dilog(z):
    """Li_2(z) on the principal branch (cut on (1, inf))."""
    z_arr = np.asarray(z, dtype=complex)
    out = special.spence(1.0 - z_arr)
    return complex(out) if np.ndim(out) == 0 else out


def varpi(lam, hbar):
    """
    Antiderivative of log Gamma(1 + i t / hbar) along the segment [0, lam],
    normalized so that varpi(0) = 0.
    """
    lam = complex(lam)
    if lam == 0:
        return 0j
    if abs(lam.real) <= 1e-14 * (1.0 + abs(lam)) and lam.imag >= hbar * (1.0 - 1e-14):
        raise PoleError(
            f"Integration path [0, {lam}] runs into the Gamma cut at i*hbar", module="numerics", lam=lam
        )

    def part(s, pick):
        value = lam * special.loggamma(1.0 + 1j * s * lam / hbar)
        return value.real if pick == 0 else value.imag

    opts = dict(epsabs=1e-15, epsrel=1e-14, limit=200)
    re, _ = integrate.quad(part, 0.0, 1.0, args=(0,), **opts)
    im, _ = integrate.quad(part, 0.0, 1.0, args=(1,), **opts)
    return complex(re, im)


##############################
# Quadrature
##############################

def _tail(edge, half, M, x_half):
    """Power-law tail beyond M from samples at M and x_half; (tail, exponent)."""
    shape = np.shape(edge)
    edge = np.atleast_1d(edge).ravel()
    half = np.atleast_1d(half).ravel()
    a_edge = np.abs(edge)
    a_half = np.abs(half)
    tail = np.zeros(edge.shape, dtype=complex)
    exponent = np.full(edge.shape, np.inf)
    live = (a_edge > 1e-300) & (a_half > 1e-300)
    if np.any(live):
        p = np.log(a_half[live] / a_edge[live]) / math.log(M / x_half)
        exponent[live] = p
        with np.errstate(divide="ignore", invalid="ignore"):
            tail[live] = np.where(p > 1.0, edge[live] * M / (p - 1.0), np.inf)
    return tail.reshape(shape), exponent.reshape(shape)


def quad_real_line(f, grid, tol=DEFAULT_TAIL_TOL):
    """
    Trapezoid integral over the real line on `grid` plus a power-law tail
    correction at both ends. `f` is a callable on the grid points or an
    array of samples whose last axis runs along the grid.
    """
    samples = f(grid.points) if callable(f) else f
    samples = np.asarray(samples, dtype=complex)
    if samples.shape[-1] != len(grid.points):
        raise ValueError("Integrand samples do not match the grid.")

    body = np.sum(samples * grid.weights, axis=-1)
    i_half = len(grid.points) // 4
    x_half = abs(grid.points[i_half])
    tail_r, p_r = _tail(samples[..., -1], samples[..., -1 - i_half], grid.M, x_half)
    tail_l, p_l = _tail(samples[..., 0], samples[..., i_half], grid.M, x_half)
    tail = tail_r + tail_l
    worst = float(np.max(np.abs(tail_r) + np.abs(tail_l)))

    numerics_logger.debug(f"quad_real_line M={grid.M} h={grid.h} tail={worst:.3e}")
    if not np.isfinite(worst) or worst > tol:
        raise InsufficientDecayError(
            f"Integrand does not decay fast enough on [-{grid.M}, {grid.M}]: tail {worst:.3e} > {tol:.1e}",
            module="numerics",
            tail=worst,
            tol=tol,
            exponent_right=float(np.min(p_r)),
            exponent_left=float(np.min(p_l)),
        )
    value = body + tail
    return complex(value) if np.ndim(value) == 0 else value


##############################
# Polynomial Algebra
##############################

def poly_roots(p):
    """All roots of p by the eigenvalues of its companion matrix."""
    coeffs = np.asarray(p.coefficients, dtype=complex)
    if p.degree < 1:
        raise ConfigError("poly_roots needs degree >= 1.", module="numerics")
    scale = np.max(np.abs(coeffs))
    if abs(coeffs[-1]) <= 1e-14 * scale:
        raise NumericalError(f"Degenerate leading coefficient {coeffs[-1]}", module="numerics", leading=coeffs[-1])
    # np.roots builds the companion matrix from descending coefficients
    return np.roots(coeffs[::-1]).astype(complex)


def elementary_symmetric(values, i):
    values = np.asarray(values, dtype=complex)
    if i < 0 or i > len(values):
        raise ValueError(f"Elementary symmetric index {i} out of range 0..{len(values)}")
    if i == 0:
        return 1.0 + 0j
    e = np.zeros(len(values) + 1, dtype=complex)
    e[0] = 1.0
    for v in values:
        e[1:] = e[1:] + v * e[:-1]
    return complex(e[i])


def newton_identities(power_sums):
    """Elementary symmetric e_0..e_n from power sums p_1..p_n."""
    n = len(power_sums)
    e = [1.0 + 0j]
    for k in range(1, n + 1):
        acc = 0j
        for i in range(1, k + 1):
            acc += (-1) ** (i - 1) * e[k - i] * power_sums[i - 1]
        e.append(acc / k)
    return np.asarray(e, dtype=complex)


def multiset_distance(a, b):
    """Largest pairing error under the optimal matching of two multisets."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ValueError("Multisets must have the same size.")
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols])) if len(a) else 0.0


##############################
# Newton Solver
##############################

@dataclass
class NewtonReport:
    x: np.ndarray
    residual: float
    iterations: int
    history: list


def _fd_jacobian(F, x, fx, rel_eps):
    m = len(x)
    J = np.empty((len(fx), m), dtype=complex)
    for k in range(m):
        eps = rel_eps * max(1.0, abs(x[k]))
        xp = x.copy()
        xm = x.copy()
        xp[k] += eps
        xm[k] -= eps
        J[:, k] = (np.asarray(F(xp), dtype=complex) - np.asarray(F(xm), dtype=complex)) / (2.0 * eps)
    return J


def newton_system(F, x0, tol=1e-12, max_iter=50, rel_eps=1e-6, monitor=None, report=False):
    """
    Solve F(x) = 0 for F: C^m -> C^m by Newton steps with a central-difference
    Jacobian. `monitor(x_old, x_new, f_new)` may raise to reject a step.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=complex)).copy()
    fx = np.atleast_1d(np.asarray(F(x), dtype=complex))
    history = [float(np.max(np.abs(fx)))]
    for it in range(1, max_iter + 1):
        # the first Jacobian is always inspected, even at an exact root
        if history[-1] < tol and it > 1:
            break
        J = _fd_jacobian(F, x, fx, rel_eps)
        scale = max(1.0, float(np.max(np.abs(J))))
        sv = np.linalg.svd(J, compute_uv=False)
        if sv[0] == 0.0 or sv[-1] <= 1e-13 * sv[0]:
            raise SingularJacobianError(
                "Newton Jacobian is singular.", module="numerics", x=x, residual_history=history
            )
        try:
            step = np.linalg.solve(J / scale, fx / scale)
        except np.linalg.LinAlgError as e:
            raise SingularJacobianError(f"Newton Jacobian is singular: {e}", module="numerics", x=x,
                                        residual_history=history) from e
        x_new = x - step
        f_new = np.atleast_1d(np.asarray(F(x_new), dtype=complex))
        if monitor is not None:
            monitor(x, x_new, f_new)
        x, fx = x_new, f_new
        history.append(float(np.max(np.abs(fx))))
        numerics_logger.debug(f"newton iteration {it}: residual {history[-1]:.3e}")
    if history[-1] >= tol:
        raise ConvergenceError(
            f"Newton did not reach tol={tol:.1e} in {max_iter} iterations (residual {history[-1]:.3e})",
            module="numerics",
            x=x,
            residual_history=history,
        )
    if report:
        return NewtonReport(x=x, residual=history[-1], iterations=len(history) - 1, history=history)
    return x
