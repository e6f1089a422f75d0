"""
Determinant construction of Baxter-equation solutions.

Q^+_tau and Q^-_tau are evaluated as entire functions. The Gamma product
in their definition is shifted by the recursion depth M, and the Pochhammer
factor it produces is the same polynomial that multiplies the principal
minors of K^+/K^-, so every evaluation reduces to one stable three-term
recursion with no quotient to cancel. Values are carried as complex logs
wherever they can overflow.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import CollisionError, ConfigError, ConvergenceError, NumericalError, PoleError
from .logs import get_logger
from .numerics import Polynomial, elementary_symmetric, log_gamma, log_sinh, newton_system, poly_roots

gutzwiller_logger = get_logger("gutzwiller")

DEFAULT_TRUNC = 64
TRUNC_TOL = 1e-12
MAX_TRUNC = 4096
POLE_DISTANCE = 1e-8
COLLISION_DISTANCE = 1e-6
CONTINUATION_STEP = 0.05


##############################
# Spectral Data
##############################

@dataclass(frozen=True)
class SpectralData:
    """Roots tau_k of t(lambda) together with N, Lambda and hbar."""

    N: int
    tau: tuple
    Lambda: float
    hbar: float

    def __post_init__(self):
        tau = tuple(complex(t) for t in self.tau)
        object.__setattr__(self, "tau", tau)
        if self.N < 2:
            raise ConfigError(f"N must be >= 2, got {self.N}", module="gutzwiller")
        if len(tau) != self.N:
            raise ConfigError(f"Expected {self.N} roots tau, got {len(tau)}", module="gutzwiller")
        if self.hbar <= 0:
            raise ConfigError(f"hbar must be positive, got {self.hbar}", module="gutzwiller")
        if self.Lambda < 0:
            raise ConfigError(f"Lambda must be non-negative, got {self.Lambda}", module="gutzwiller")
        scale = max(1.0, max(abs(t) for t in tau))
        if abs(sum(tau)) > 1e-10 * scale:
            raise ConfigError(f"Total momentum sum(tau) = {sum(tau)} must vanish", module="gutzwiller")

    @classmethod
    def from_charges(cls, charges, Lambda, hbar):
        """Build from E_2..E_N, i.e. t = lambda^N + E_2 lambda^(N-2) + ... + E_N."""
        N = len(charges) + 1
        coeffs = np.zeros(N + 1, dtype=complex)
        coeffs[N] = 1.0
        for k, E in enumerate(charges, start=2):
            coeffs[N - k] = E
        roots = poly_roots(Polynomial(tuple(coeffs)))
        roots = roots - np.mean(roots)
        return cls(N=N, tau=tuple(roots), Lambda=Lambda, hbar=hbar)

    @property
    def charges(self):
        return tuple((-1) ** k * elementary_symmetric(self.tau, k) for k in range(2, self.N + 1))

    @property
    def polynomial(self):
        return Polynomial.from_roots(self.tau)

    def t(self, lam):
        lam = np.asarray(lam, dtype=complex)
        return np.prod(lam[..., None] - np.asarray(self.tau), axis=-1)

    def at_lambda(self, Lambda):
        return SpectralData(N=self.N, tau=self.tau, Lambda=Lambda, hbar=self.hbar)


##############################
# K^+ and K^- Recursions
##############################

def _check_poles(lam, s, sign):
    # poles of K^sign sit at tau_k - sign*i*hbar*m, m >= 1
    m = sign * 1j * (lam[..., None] - np.asarray(s.tau)) / s.hbar
    m_int = np.maximum(np.round(m.real), 1.0)
    dist = np.min(s.hbar * np.abs(m - m_int), axis=-1) if m.size else np.inf
    if np.any(dist < POLE_DISTANCE):
        raise PoleError(
            f"lambda within {POLE_DISTANCE} of the K pole lattice", module="gutzwiller", distance=float(np.min(dist))
        )


def _k_recursion(lam, s, sign, depth):
    L2N = s.Lambda ** (2 * s.N)
    d1 = np.ones(lam.shape, dtype=complex)
    d2 = np.ones(lam.shape, dtype=complex)
    t_far = s.t(lam + sign * 1j * s.hbar * (depth + 1))
    for n in range(depth - 1, -1, -1):
        t_near = s.t(lam + sign * 1j * s.hbar * (n + 1))
        d0 = d1 - L2N / (t_near * t_far) * d2
        d2, d1 = d1, d0
        t_far = t_near
    return d1


def _k_value(lam, s, sign, trunc):
    if trunc < 1:
        raise ValueError(f"trunc must be >= 1, got {trunc}")
    lam_arr = np.asarray(lam, dtype=complex)
    _check_poles(lam_arr, s, sign)
    if s.Lambda == 0:
        out = np.ones(lam_arr.shape, dtype=complex)
        return complex(out) if out.ndim == 0 else out
    previous = _k_recursion(lam_arr, s, sign, trunc)
    depth = trunc
    while depth < MAX_TRUNC:
        depth *= 2
        current = _k_recursion(lam_arr, s, sign, depth)
        change = float(np.max(np.abs(current - previous)))
        if change < TRUNC_TOL:
            return complex(current) if current.ndim == 0 else current
        previous = current
    raise ConvergenceError(
        f"K recursion did not settle by depth {depth} (last change {change:.3e})", module="gutzwiller"
    )


def k_plus(lam, s, trunc=DEFAULT_TRUNC):
    return _k_value(lam, s, +1, trunc)


def k_minus(lam, s, trunc=DEFAULT_TRUNC):
    return _k_value(lam, s, -1, trunc)


##############################
# Entire Q-functions
##############################

def _log_minor_poly(lam, s, sign, depth):
    """
    log of R_0 where R_n = t_{n+1} R_{n+1} - Lambda^{2N} R_{n+2},
    t_m = t(lam + sign*i*hbar*m), seeded by R_depth = 1, R_{depth+1} = 1/t_{depth+1}.
    """
    L2N = s.Lambda ** (2 * s.N)
    r1 = np.ones(lam.shape, dtype=complex)
    r2 = 1.0 / s.t(lam + sign * 1j * s.hbar * (depth + 1))
    log_scale = np.zeros(lam.shape)
    for n in range(depth - 1, -1, -1):
        r0 = s.t(lam + sign * 1j * s.hbar * (n + 1)) * r1 - L2N * r2
        scale = np.maximum(np.abs(r0), np.abs(r1))
        scale = np.where(scale > 0, scale, 1.0)
        r2, r1 = r1 / scale, r0 / scale
        log_scale += np.log(scale)
    with np.errstate(divide="ignore"):
        return np.log(r1) + log_scale


def _log_q_at_depth(lam, s, sign, depth):
    N, hbar = s.N, s.hbar
    tau = np.asarray(s.tau)
    log_ratio = math.log(hbar) - math.log(s.Lambda)
    x = 1.0 - sign * 1j * (lam[..., None] - tau) / hbar
    log_gamma_sum = np.sum(log_gamma(x + depth), axis=-1)
    return (
        sign * 1j * N * lam / hbar * log_ratio
        - N * math.pi * lam / hbar
        + N * depth * (-math.log(hbar) - sign * 0.5j * math.pi)
        - log_gamma_sum
        + _log_minor_poly(lam, s, sign, depth)
    )


def log_q_tau(lam, s, sign, trunc=DEFAULT_TRUNC):
    """Complex log of Q^+_tau (sign=+1) or Q^-_tau (sign=-1)."""
    if s.Lambda <= 0:
        raise ConfigError("Q-functions need Lambda > 0", module="gutzwiller")
    lam_arr = np.asarray(lam, dtype=complex)
    reach = -sign * (lam_arr.imag[..., None] - np.asarray(s.tau).imag) / s.hbar
    extra = int(math.ceil(max(0.0, float(np.max(reach)) if reach.size else 0.0)))
    depth = trunc + extra + 2
    previous = _log_q_at_depth(lam_arr, s, sign, depth)
    while depth < MAX_TRUNC + extra:
        depth *= 2
        current = _log_q_at_depth(lam_arr, s, sign, depth)
        change = np.abs(np.expm1(current - previous))
        change = float(np.max(np.where(np.isfinite(change), change, 0.0)))
        if change < TRUNC_TOL:
            return complex(current) if current.ndim == 0 else current
        previous = current
    raise ConvergenceError(f"Q recursion did not settle by depth {depth}", module="gutzwiller")


def q_plus_tau(lam, s, trunc=DEFAULT_TRUNC):
    return np.exp(log_q_tau(lam, s, +1, trunc))


def q_minus_tau(lam, s, trunc=DEFAULT_TRUNC):
    return np.exp(log_q_tau(lam, s, -1, trunc))


##############################
# Wronskian and Hill Determinant
##############################

def _wronskian_logs(lam, s):
    lam = np.asarray(lam, dtype=complex)
    both = np.stack([lam, lam + 1j * s.hbar])
    lp = log_q_tau(both, s, +1)
    lm = log_q_tau(both, s, -1)
    return lp[0] + lm[1], lm[0] + lp[1]


def quantum_wronskian(lam, s):
    a, b = _wronskian_logs(lam, s)
    return np.exp(a) - np.exp(b)


def _hill_offset(lam, s):
    return s.N * np.log(1j * math.pi * s.Lambda / s.hbar) + 2.0 * math.pi * s.N * np.asarray(lam) / s.hbar


def hill_product(lam, s):
    """W(lam) (i pi Lambda/hbar)^N e^{2 pi N lam/hbar}, entire, equal to prod sinh(pi(lam-delta_k)/hbar)."""
    lam = np.asarray(lam, dtype=complex)
    if s.Lambda == 0:
        return np.exp(np.sum(log_sinh(math.pi * (lam[..., None] - np.asarray(s.tau)) / s.hbar), axis=-1))
    a, b = _wronskian_logs(lam, s)
    c = _hill_offset(lam, s)
    return np.exp(a + c) - np.exp(b + c)


def hill_determinant(lam, s):
    """H(lam), iħ-periodic, through the Wronskian factorization."""
    lam = np.asarray(lam, dtype=complex)
    if s.Lambda == 0:
        out = np.ones(lam.shape, dtype=complex)
        return complex(out) if out.ndim == 0 else out
    a, b = _wronskian_logs(lam, s)
    c = _hill_offset(lam, s) - np.sum(log_sinh(math.pi * (lam[..., None] - np.asarray(s.tau)) / s.hbar), axis=-1)
    out = np.exp(a + c) - np.exp(b + c)
    return complex(out) if np.ndim(out) == 0 else out


def hill_determinant_direct(lam, s, K=2000):
    """
    The (2K+1)x(2K+1) tridiagonal determinant with rows
    (Lambda^{2N}/t(lam+i n hbar), 1, 1/t(lam+i n hbar)), n = -K..K.
    """
    lam = np.asarray(lam, dtype=complex)
    L2N = s.Lambda ** (2 * s.N)
    f_prev2 = np.zeros(lam.shape, dtype=complex)
    f_prev = np.ones(lam.shape, dtype=complex)
    t_prev = None
    for n in range(-K, K + 1):
        t_n = s.t(lam + 1j * n * s.hbar)
        if t_prev is None:
            f_new = f_prev
        else:
            f_new = f_prev - L2N / (t_prev * t_n) * f_prev2
        f_prev2, f_prev = f_prev, f_new
        t_prev = t_n
    return complex(f_prev) if f_prev.ndim == 0 else f_prev


##############################
# Hill Zeros
##############################

@dataclass(frozen=True)
class HillZeros:
    delta: tuple
    zeta: tuple
    source: str

    def __post_init__(self):
        object.__setattr__(self, "delta", tuple(complex(d) for d in self.delta))
        object.__setattr__(self, "zeta", tuple(complex(z) for z in self.zeta))
        if self.source not in ("from-tau", "from-delta-input"):
            raise ValueError(f"Unknown HillZeros source {self.source}")


def _zero_scale(s, j):
    tau = np.asarray(s.tau)
    others = np.delete(tau, j)
    prod = np.exp(np.sum(log_sinh(math.pi * (tau[j] - others) / s.hbar)))
    return max(abs(prod) * math.pi / s.hbar, 1e-300)


def _newton_zeros(s, seeds, tol):
    found = []
    for j, seed in enumerate(seeds):
        scale = _zero_scale(s, j)

        def F(x, scale=scale):
            return np.atleast_1d(hill_product(x[0], s)) / scale

        found.append(newton_system(F, [seed], tol=tol, max_iter=40)[0])
    return np.asarray(found)


def _check_collisions(values, what):
    values = np.asarray(values)
    for j in range(len(values)):
        for k in range(j + 1, len(values)):
            if abs(values[j] - values[k]) < COLLISION_DISTANCE:
                raise CollisionError(
                    f"Degenerate {what}: entries {j} and {k} coincide ({values[j]})", module="gutzwiller"
                )


def hill_zeros(s, tol=1e-12):
    """Zeros delta_j of the Hill determinant seeded at tau_j, with xi_j = Q+(delta_j)/Q-(delta_j)."""
    tau = np.asarray(s.tau)
    if s.Lambda == 0:
        return HillZeros(delta=tuple(tau), zeta=tuple(np.full(s.N, np.nan + 0j)), source="from-tau")
    try:
        delta = _newton_zeros(s, tau, tol)
    except NumericalError as e:
        gutzwiller_logger.warning(f"Direct Hill-zero Newton failed at Lambda={s.Lambda}: {e}; continuing in Lambda")
        delta = tau.copy()
        steps = int(math.ceil(s.Lambda / CONTINUATION_STEP))
        for k in range(1, steps + 1):
            delta = _newton_zeros(s.at_lambda(min(k * CONTINUATION_STEP, s.Lambda)), delta, tol)
    _check_collisions(delta, "Hill zeros")
    if abs(np.sum(delta) - np.sum(tau)) > 1e-10 * max(1.0, np.max(np.abs(tau))):
        gutzwiller_logger.warning(f"Hill zeros do not conserve total momentum: sum={np.sum(delta)}")
    xi = np.exp(log_q_tau(delta, s, +1) - log_q_tau(delta, s, -1))
    gutzwiller_logger.info(f"Hill zeros N={s.N} Lambda={s.Lambda}: delta={np.round(delta, 12).tolist()}")
    return HillZeros(delta=tuple(delta), zeta=tuple(xi), source="from-tau")


##############################
# Floquet Coefficient Tables
##############################

def floquet_coefficients(s, zeros, side, n_max):
    """
    log c_{j,n} for n = -n_max..n_max. Each half of the lattice uses the
    solution that decays in that direction, tied together by xi_j.
    """
    if side not in ("zero", "infinity"):
        raise ValueError(f"side must be 'zero' or 'infinity', got {side}")
    n = np.arange(-n_max, n_max + 1)
    delta = np.asarray(zeros.delta)
    log_xi = np.log(np.asarray(zeros.zeta))
    lam = delta[:, None] - 1j * s.hbar * n[None, :]
    up = n <= 0 if side == "zero" else n < 0
    logs = np.empty(lam.shape, dtype=complex)
    logs[:, up] = log_q_tau(lam[:, up], s, +1)
    logs[:, ~up] = log_q_tau(lam[:, ~up], s, -1)
    if side == "zero":
        logs[:, ~up] += log_xi[:, None]
    else:
        logs[:, up] -= log_xi[:, None]
    return n, logs
