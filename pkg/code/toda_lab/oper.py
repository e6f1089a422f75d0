"""
Oper solutions on the twice-punctured sphere.

Floquet solutions are Laurent series whose coefficients are Baxter
Q-function values on the lattice delta_j - i hbar n. The maximally decaying
solutions chi are fixed combinations of them. The module also has an
independent ODE transport of the companion system around |z| = 1 and the
special functions of the decoupling limit, where Lambda -> 0 at fixed w.

Scalings: w = (Lambda/hbar)^N z near z = infinity and
w' = (hbar/Lambda)^N z near z = 0.
"""

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import special
from scipy.integrate import solve_ivp

from .errors import CollisionError, ConfigError, ConvergenceError, SectorError, WindowError
from .gutzwiller import floquet_coefficients, hill_zeros
from .logs import get_logger
from .nlie import log_q_minus_delta, log_q_plus_delta, log_zeta, t_delta_polynomial
from .numerics import Polynomial, multiset_distance
from .quantize import q_values

oper_logger = get_logger("oper")

WINDOW_START = 16
WINDOW_MAX = 1024
WINDOW_CUTOFF = math.log(1e-16)
SIN_FLOOR = 1e-8
ODE_RTOL = 1e-11
ODE_STABILITY = 1e-9
SERIES_MAX_TERMS = 4000
FOURIER_CUTOFF = 14.0
FOURIER_STEP = 0.05


##############################
# Oper Instance
##############################

@dataclass(frozen=True)
class OperInstance:
    """t(D) chi = Lambda^N (i^N z + i^-N / z) chi with D = -i hbar z d/dz."""

    N: int
    hbar: float
    Lambda: float
    charges: tuple

    def __post_init__(self):
        charges = tuple(complex(E) for E in self.charges)
        object.__setattr__(self, "charges", charges)
        if self.N < 2 or len(charges) != self.N - 1:
            raise ConfigError(f"Need N >= 2 and charges E_2..E_N, got N={self.N}, {charges}", module="oper")
        if self.hbar <= 0 or self.Lambda <= 0:
            raise ConfigError(f"hbar and Lambda must be positive ({self.hbar}, {self.Lambda})", module="oper")

    @classmethod
    def from_spectral(cls, s):
        return cls(N=s.N, hbar=s.hbar, Lambda=s.Lambda, charges=s.charges)

    @property
    def beta(self):
        return -(self.N - 1) / 2

    @property
    def polynomial(self):
        coeffs = np.zeros(self.N + 1, dtype=complex)
        coeffs[self.N] = 1.0
        for k, E in enumerate(self.charges, start=2):
            coeffs[self.N - k] = E
        return Polynomial(tuple(coeffs))

    def w(self, z):
        return (self.Lambda / self.hbar) ** self.N * z

    def w_prime(self, z):
        return (self.hbar / self.Lambda) ** self.N * z

    def potential(self, z):
        return self.Lambda ** self.N * (1j ** self.N * z + 1j ** (-self.N) / z)

    def companion(self, z):
        """First row (0, -E_2, ..., -E_{N-1}, -E_N + potential), ones below the diagonal."""
        N = self.N
        A = np.diag(np.ones(N - 1, dtype=complex), k=-1)
        for k, E in enumerate(self.charges[:-1], start=1):
            A[0, k] = -E
        A[0, N - 1] += -self.charges[-1] + self.potential(z)
        return A


##############################
# Floquet Bases
##############################

@dataclass
class FloquetBasis:
    """
    Laurent coefficients log c_{j,n} of the Floquet solutions, produced on
    demand for a window n = -n_max..n_max. `side` picks the normalization:
    'infinity' uses Q- on n >= 0, 'zero' uses Q+ on n <= 0.
    """

    N: int
    hbar: float
    Lambda: float
    sigma: tuple
    side: str
    t: Polynomial
    source: object = field(repr=False, compare=False)
    _tables: dict = field(default_factory=dict, repr=False, compare=False)

    @classmethod
    def from_gutzwiller(cls, s, zeros=None, side="infinity"):
        zeros = zeros if zeros is not None else hill_zeros(s)
        sigma = tuple(1j * np.asarray(zeros.delta) / s.hbar)

        def source(n_max):
            return floquet_coefficients(s, zeros, side, n_max)

        return cls(N=s.N, hbar=s.hbar, Lambda=s.Lambda, sigma=sigma, side=side, t=s.polynomial, source=source)

    @classmethod
    def from_nlie(cls, sol, side="infinity"):
        if side not in ("zero", "infinity"):
            raise ValueError(f"side must be 'zero' or 'infinity', got {side}")
        p = sol.params
        delta = np.asarray(p.delta)
        log_xi = log_zeta(sol)

        def source(n_max):
            n = np.arange(-n_max, n_max + 1)
            lam = delta[:, None] - 1j * p.hbar * n[None, :]
            up = n <= 0 if side == "zero" else n < 0
            logs = np.empty(lam.shape, dtype=complex)
            logs[:, up] = log_q_plus_delta(lam[:, up], sol)
            logs[:, ~up] = log_q_minus_delta(lam[:, ~up], sol)
            if side == "zero":
                logs[:, ~up] += log_xi[:, None]
            else:
                logs[:, up] -= log_xi[:, None]
            return n, logs

        sigma = tuple(1j * delta / p.hbar)
        return cls(
            N=p.N, hbar=p.hbar, Lambda=p.Lambda, sigma=sigma, side=side, t=t_delta_polynomial(sol), source=source
        )

    def table(self, n_max):
        if n_max not in self._tables:
            self._tables[n_max] = self.source(n_max)
        return self._tables[n_max]

    def lattice(self, j, n):
        """lambda_n = -i hbar (sigma_j + n), the eigenvalue of D on z^(sigma_j + n)."""
        return -1j * self.hbar * (self.sigma[j] + np.asarray(n))


def _log_terms(j, log_z, basis, order):
    n_max = WINDOW_START
    while n_max <= WINDOW_MAX:
        n, logs = basis.table(n_max)
        terms = logs[j] + (basis.sigma[j] + n) * log_z
        if order:
            with np.errstate(divide="ignore"):
                terms = terms + order * np.log(basis.lattice(j, n))
        mag = terms.real
        peak = float(np.max(mag))
        if mag[0] - peak < WINDOW_CUTOFF and mag[-1] - peak < WINDOW_CUTOFF:
            return terms, peak
        n_max *= 2
    raise WindowError(
        f"Floquet window n_max={WINDOW_MAX} does not reach 1e-16 decay at log z = {log_z}",
        module="oper",
        j=j,
    )


def log_floquet_eval(j, z, basis, order=0, log_z=None):
    """log D^order F_j(z); `log_z` overrides the principal branch for sheet tracking."""
    if log_z is None:
        z = complex(z)
        if z == 0:
            raise ValueError("Floquet solutions are evaluated at z != 0")
        log_z = np.log(z)
    terms, peak = _log_terms(j, log_z, basis, order)
    return peak + np.log(np.sum(np.exp(terms - peak)))


def floquet_eval(j, z, basis, order=0, log_z=None):
    """F_j(z) = sum_n c_{j,n} z^(sigma_j + n)."""
    return complex(np.exp(log_floquet_eval(j, z, basis, order, log_z)))


def recurrence_residual(basis, j, n_values):
    """Relative residual of t(lambda_n) c_n = Lambda^N (i^N c_{n-1} + i^-N c_{n+1})."""
    n_all, logs = basis.table(max(WINDOW_START, int(np.max(np.abs(n_values))) + 2))
    offset = len(n_all) // 2
    N = basis.N
    out = []
    for n in n_values:
        k = offset + n
        a = np.log(basis.t(basis.lattice(j, n))) + logs[j, k]
        b = N * math.log(basis.Lambda) + 0.5j * math.pi * N + logs[j, k - 1]
        c = N * math.log(basis.Lambda) - 0.5j * math.pi * N + logs[j, k + 1]
        top = max(a.real, b.real, c.real)
        residual = np.exp(a - top) - np.exp(b - top) - np.exp(c - top)
        out.append(float(abs(residual)))
    return np.asarray(out)


def oper_residual(j, z, basis, log_z=None):
    """Relative residual of [t(D) - Lambda^N (i^N z + i^-N / z)] F_j at z."""
    coeffs = basis.t.coefficients
    pieces = [coeffs[k] * floquet_eval(j, z, basis, order=k, log_z=log_z) for k in range(basis.N + 1)]
    F = floquet_eval(j, z, basis, log_z=log_z)
    N, L = basis.N, basis.Lambda
    pieces.append(-(L ** N) * 1j ** N * z * F)
    pieces.append(-(L ** N) * 1j ** (-N) / z * F)
    return abs(sum(pieces)) / max(abs(x) for x in pieces)


def floquet_monodromy_check(basis, j, z, steps=64):
    """Continue F_j once around z = 0 along |z| = const; compare with e^{2 pi i sigma_j}."""
    z = complex(z)
    start = np.log(z)
    values = [floquet_eval(j, z, basis, log_z=start + 1j * phi) for phi in np.linspace(0.0, 2 * math.pi, steps + 1)]
    ratio = values[-1] / values[0]
    return float(abs(ratio - np.exp(2j * math.pi * basis.sigma[j])))


def floquet_wronskian(basis, z):
    """det [D^k F_l(z)] with k = 0..N-1, and the product of column scales."""
    W = np.array([[floquet_eval(l, z, basis, order=k) for l in range(basis.N)] for k in range(basis.N)])
    scale = float(np.prod(np.max(np.abs(W), axis=0)))
    return complex(np.linalg.det(W)), scale


def truncation_certificate(basis, j, z):
    """Edge term of the accepted window relative to its peak, and the change in F_j when the window doubles."""
    log_z = np.log(complex(z))
    terms, peak = _log_terms(j, log_z, basis, 0)
    n_max = (len(terms) - 1) // 2
    value = np.sum(np.exp(terms - peak))
    n, logs = basis.table(2 * n_max)
    wider = np.sum(np.exp(logs[j] + (basis.sigma[j] + n) * log_z - peak))
    return {
        "n_max": n_max,
        "last_term": float(np.exp(max(terms[0].real, terms[-1].real) - peak)),
        "doubling_change": float(abs(wider - value) / max(abs(value), 1.0)),
    }


##############################
# ODE Monodromy
##############################

def _transport(inst, rtol, base_angle):
    N = inst.N

    def rhs(theta, y):
        A = inst.companion(np.exp(1j * theta))
        return (-(A @ y.reshape(N, N)) / inst.hbar).ravel()

    y0 = np.eye(N, dtype=complex).ravel()
    result = solve_ivp(
        rhs, (base_angle, base_angle + 2 * math.pi), y0, method="DOP853", rtol=rtol, atol=rtol * 1e-3
    )
    if not result.success:
        raise ConvergenceError(f"Monodromy transport failed: {result.message}", module="oper")
    return result.y[:, -1].reshape(N, N)


def ode_monodromy_matrix(inst, rtol=ODE_RTOL, base_angle=0.0):
    return _transport(inst, rtol, base_angle)


def ode_monodromy(inst, rtol=ODE_RTOL, base_angle=0.0):
    """Eigenvalues of the monodromy around |z| = 1, certified against a 100x tighter run."""
    coarse = np.linalg.eigvals(_transport(inst, rtol, base_angle))
    fine = np.linalg.eigvals(_transport(inst, rtol / 100.0, base_angle))
    change = multiset_distance(coarse, fine)
    if change > ODE_STABILITY * max(1.0, float(np.max(np.abs(fine)))):
        raise ConvergenceError(
            f"Monodromy eigenvalues moved by {change:.3e} under step refinement", module="oper", change=change
        )
    oper_logger.info(f"ode_monodromy N={inst.N} Lambda={inst.Lambda}: eigenvalues {np.round(fine, 10).tolist()}")
    return fine


##############################
# Maximally Decaying Solutions
##############################

def _chi_weights(sigma, side):
    N = len(sigma)
    sigma = np.asarray(sigma)
    weights = np.empty(N, dtype=complex)
    for l in range(N):
        others = np.delete(sigma, l)
        diff = sigma[l] - others if side == "infinity" else others - sigma[l]
        sines = np.sin(math.pi * diff)
        if np.min(np.abs(sines)) < SIN_FLOOR:
            raise CollisionError(f"sigma_{l} collides with another exponent mod 1", module="oper")
        weights[l] = 1.0 / (np.exp(N * math.pi * 1j * sigma[l]) * np.prod(sines))
    return -(1j ** N) / math.pi * weights


def chi_max_decay(side, z, basis):
    """chi^(0) or chi^(inf) as a fixed combination of the Floquet solutions of that side."""
    if side != basis.side:
        raise ValueError(f"chi^({side}) needs a Floquet basis normalized at {side}, got {basis.side}")
    weights = _chi_weights(basis.sigma, side)
    return complex(sum(weights[l] * floquet_eval(l, z, basis) for l in range(basis.N)))


def chi_leading_form(N, w):
    """(pi i)^-N sqrt((2 pi)^(N-1)/N) e^(-N w^(1/N)) w^(-(N-1)/(2N))."""
    w = np.asarray(w, dtype=complex)
    return (math.pi * 1j) ** (-N) * math.sqrt((2 * math.pi) ** (N - 1) / N) * np.exp(
        -N * w ** (1.0 / N)
    ) * w ** (-(N - 1) / (2.0 * N))


def asymptotic_series(kind, basis, w_values):
    """
    (w, ratio) data for the leading maximal-decay form: 'chi-infinity' in w,
    'chi-zero' in w' (leading form taken at 1/w').
    """
    N, scale = basis.N, (basis.hbar / basis.Lambda) ** basis.N
    ratios = []
    for w in w_values:
        if kind == "chi-infinity":
            value = chi_max_decay("infinity", scale * w, basis) / chi_leading_form(N, w)
        elif kind == "chi-zero":
            value = chi_max_decay("zero", w / scale, basis) / chi_leading_form(N, 1.0 / w)
        else:
            raise ValueError(f"Unknown asymptotic series {kind}")
        ratios.append(complex(value))
    lost = 2 * N * max(abs(w) for w in w_values) ** (1.0 / N) / math.log(10)
    if lost > 11:
        oper_logger.warning(f"{kind}: about {lost:.0f} digits cancel in double precision at the largest w")
    ratios = np.asarray(ratios)
    return {"w": list(w_values), "ratio": ratios.tolist(), "deviation": np.abs(ratios - 1.0).tolist()}


##############################
# Decoupling-limit Special Functions
##############################

def hypergeometric_series_terms(params, w):
    """Terms w^n / (n! prod Gamma(beta_k + n)) of the regularized 0F(N-1) series."""
    params = np.asarray(params, dtype=complex)
    w = complex(w)
    order = len(params) + 1
    if order * abs(w) ** (1.0 / order) > 690.0:
        raise ConvergenceError(f"0F{order - 1} series overflows in double precision at |w|={abs(w):.3g}", module="oper")
    if w == 0:
        return np.array([np.prod(special.rgamma(params))], dtype=complex)
    log_w = np.log(w)
    terms = []
    largest = 0.0
    peak = abs(w) ** (1.0 / order)
    for n in range(SERIES_MAX_TERMS):
        shifted = params + n
        at_pole = (shifted.real <= 0) & (np.abs(shifted - np.round(shifted.real)) < 1e-14)
        if np.any(at_pole):
            term = 0j
        else:
            term = np.exp(n * log_w - special.gammaln(n + 1) - np.sum(special.loggamma(shifted)))
        terms.append(term)
        largest = max(largest, abs(term))
        if n > peak + 2 and abs(term) < 1e-17 * largest:
            return np.asarray(terms)
    raise ConvergenceError(f"0F{order - 1} series did not converge in {SERIES_MAX_TERMS} terms", module="oper")


def hypergeometric_0FN(params, w):
    """Regularized 0F(N-1)(; beta_1..beta_{N-1}; w) by direct summation."""
    return complex(np.sum(hypergeometric_series_terms(params, w)))


def hypergeometric_ode_residual(params, w):
    """Relative residual of [theta prod(theta + beta_k - 1) - w] F = 0, theta = w d/dw, termwise."""
    params = np.asarray(params, dtype=complex)
    terms = hypergeometric_series_terms(params, w)
    n = np.arange(len(terms))
    theta_part = terms * n * np.prod(n[:, None] + params[None, :] - 1.0, axis=1)
    lhs = np.sum(theta_part)
    rhs = complex(w) * np.sum(terms)
    return abs(lhs - rhs) / max(np.max(np.abs(theta_part)), abs(rhs), 1e-300)


def _decoupled_params(sigma, l, sign):
    sigma = np.asarray(sigma, dtype=complex)
    return 1.0 + sign * (sigma[l] - np.delete(sigma, l))


def decoupled_floquet(N, sigma, w, side="infinity"):
    """
    Lambda -> 0 limit of F_l at fixed scaled variable:
    infinity: e^{N pi i sigma_l} w^sigma_l 0F~(; 1 + sigma_l - sigma_k; (-1)^N w);
    zero:     e^{N pi i sigma_l} w'^sigma_l 0F~(; 1 - sigma_l + sigma_k; (-1)^N / w').
    """
    sigma = np.asarray(sigma, dtype=complex)
    if len(sigma) != N:
        raise ConfigError(f"Expected {N} exponents, got {len(sigma)}", module="oper")
    w = complex(w)
    out = np.empty(N, dtype=complex)
    for l in range(N):
        phase = np.exp(N * math.pi * 1j * sigma[l]) * w ** sigma[l]
        if side == "infinity":
            out[l] = phase * hypergeometric_0FN(_decoupled_params(sigma, l, +1), (-1) ** N * w)
        elif side == "zero":
            out[l] = phase * hypergeometric_0FN(_decoupled_params(sigma, l, -1), (-1) ** N / w)
        else:
            raise ValueError(f"side must be 'zero' or 'infinity', got {side}")
    return out


def bessel_floquet_n2(sigma_l, w):
    """N = 2 decoupled F_l = e^{2 pi i sigma_l} I_{2 sigma_l}(2 sqrt w)."""
    sigma_l = complex(sigma_l)
    x = 2.0 * np.sqrt(complex(w))
    if sigma_l.imag == 0.0:
        bessel = complex(special.iv(2.0 * sigma_l.real, x))
    else:
        bessel = complex(mpmath.besseli(2.0 * sigma_l, x))
    return np.exp(2j * math.pi * sigma_l) * bessel


def open_chain_residual(N, sigma, w, l):
    """Residual of prod_k(theta - sigma_k) F = (-1)^N w F for the decoupled F_l, termwise."""
    sigma = np.asarray(sigma, dtype=complex)
    terms = hypergeometric_series_terms(_decoupled_params(sigma, l, +1), (-1) ** N * w)
    n = np.arange(len(terms))
    exponents = sigma[l] + n
    lhs_terms = terms * np.prod(exponents[:, None] - sigma[None, :], axis=1)
    lhs = np.sum(lhs_terms)
    rhs = (-1) ** N * complex(w) * np.sum(terms)
    return abs(lhs - rhs) / max(np.max(np.abs(lhs_terms)), abs(rhs))


def _meijer_dps(N, w):
    return 15 + int(math.ceil(2 * N * abs(w) ** (1.0 / N) / math.log(10)))


def meijer_maximal(b, w):
    """
    G^{N,0}_{0,N}(b | w) as the sin-weighted sum of 0F~ terms, in mpmath at
    a working precision that covers the cancellation between them.
    """
    b = [complex(x) for x in b]
    N = len(b)
    w = complex(w)
    if N == 1:
        return complex(np.exp(-w) * w ** b[0])
    with mpmath.workdps(_meijer_dps(N, w)):
        wm = mpmath.mpc(w)
        bm = [mpmath.mpc(x) for x in b]
        total = mpmath.mpc(0)
        for l in range(N):
            sines = mpmath.mpf(1)
            params = []
            for j in range(N):
                if j == l:
                    continue
                s = mpmath.sin(mpmath.pi * (bm[j] - bm[l]))
                if abs(s) < SIN_FLOOR:
                    raise CollisionError(f"Meijer parameters b_{j} and b_{l} collide mod 1", module="oper")
                sines *= s
                params.append(1 + bm[l] - bm[j])
            regularizer = mpmath.fprod(mpmath.rgamma(a) for a in params)
            series = mpmath.hyper([], params, (-1) ** N * wm) * regularizer
            total += mpmath.power(mpmath.pi, N - 1) / sines * mpmath.power(wm, bm[l]) * series
        return complex(total)


def meijer_leading_form(N, w):
    w = np.asarray(w, dtype=complex)
    return math.sqrt((2 * math.pi) ** (N - 1) / N) * np.exp(-N * w ** (1.0 / N)) * w ** (-(N - 1) / (2.0 * N))


##############################
# Floquet Asymptotics in Sectors
##############################

def _log_floquet_leading(N, sigma_j, w, branch):
    base = N * math.pi * 1j * sigma_j + 0.5 * math.log((2 * math.pi) ** (1 - N) / N) - (N - 1) / (2.0 * N) * np.log(w)
    if branch == 0:
        return base + N * w ** (1.0 / N)
    rot = np.exp(branch * 1j * math.pi / N)
    return base - branch * 1j * math.pi * (sigma_j + (N - 1) / (2.0 * N)) + N * w ** (1.0 / N) * rot


def floquet_asymptotics_check(basis, ray=0.0, w_values=None):
    """
    Compare F^(inf)_j along arg w = ray with its leading form: one exponential
    for even N, two for odd N.
    """
    N = basis.N
    if abs(ray) >= math.pi / N:
        raise SectorError(f"Ray arg w = {ray:.4f} is outside the sector |arg w| < pi/{N}", module="oper", ray=ray)
    if basis.side != "infinity":
        raise ValueError("floquet_asymptotics_check needs a basis normalized at infinity")
    if w_values is None:
        w_values = np.geomspace(20.0, 120.0, 6) if N % 2 == 0 else np.geomspace(200.0, 1000.0, 5)
    scale = (basis.hbar / basis.Lambda) ** N
    report = {"N": N, "ray": ray, "w": [abs(w) for w in w_values], "ratio": [], "deviation": []}
    one_term, two_term = [], []
    for r in w_values:
        w = abs(r) * np.exp(1j * ray)
        ratios = []
        for j in range(N):
            log_F = log_floquet_eval(j, scale * w, basis)
            if N % 2 == 0:
                ratios.append(np.exp(log_F - _log_floquet_leading(N, basis.sigma[j], w, 0)))
            else:
                plus = _log_floquet_leading(N, basis.sigma[j], w, +1)
                minus = _log_floquet_leading(N, basis.sigma[j], w, -1)
                F = np.exp(log_F - log_F.real)
                lead_plus = np.exp(plus - log_F.real)
                lead_minus = np.exp(minus - log_F.real)
                ratios.append(F / (lead_plus + lead_minus))
                one_term.append(abs(F - lead_plus) / abs(F))
                two_term.append(abs(F - lead_plus - lead_minus) / abs(F))
        report["ratio"].append([complex(x) for x in ratios])
        report["deviation"].append(float(max(abs(x - 1.0) for x in ratios)))
    if N % 2 == 1:
        report["one_term_residual"] = float(max(one_term[-N:]))
        report["two_term_residual"] = float(max(two_term[-N:]))
        report["fit_ratio"] = report["one_term_residual"] / max(report["two_term_residual"], 1e-300)
    oper_logger.info(f"floquet asymptotics N={N} ray={ray:.3f}: deviations {np.round(report['deviation'], 6).tolist()}")
    return report


##############################
# Checks at Quantized Points
##############################

def antiholomorphic_symmetry_check(rec, z_values=None):
    """Spread of conj(chi(1/conj z)) / chi(z) over positive real z."""
    if z_values is None:
        z_values = np.geomspace(0.3, 3.0, 10)
    basis = FloquetBasis.from_nlie(rec.solution, side="infinity")
    ratios = np.array(
        [np.conj(chi_max_decay("infinity", 1.0 / np.conj(z), basis)) / chi_max_decay("infinity", z, basis)
         for z in z_values]
    )
    mean = np.mean(ratios)
    spread = float(np.max(np.abs(ratios - mean)) / abs(mean))
    oper_logger.info(f"antiholomorphic check modes={rec.modes}: spread {spread:.3e}")
    return {"z": list(z_values), "ratio": ratios.tolist(), "spread": spread, "fixed_point_ratio": complex(ratios[
        int(np.argmin(np.abs(np.asarray(z_values) - 1.0)))])}


def max_decay_ratio_check(rec, z_values=None):
    """chi^(0)/chi^(inf) across z; constant exactly when both decay maximally."""
    if z_values is None:
        z_values = np.geomspace(0.3, 3.0, 10)
    zero = FloquetBasis.from_nlie(rec.solution, side="zero")
    infinity = FloquetBasis.from_nlie(rec.solution, side="infinity")
    ratios = np.array([chi_max_decay("zero", z, zero) / chi_max_decay("infinity", z, infinity) for z in z_values])
    mean = np.mean(ratios)
    return {"z": list(z_values), "ratio": ratios.tolist(), "spread": float(np.max(np.abs(ratios - mean)) / abs(mean))}


def fourier_transform_q(rec, sol, x, cutoff=FOURIER_CUTOFF, step=FOURIER_STEP):
    """-(1/(2 pi hbar)) int q(lambda) e^{i x lambda/hbar} d lambda over |lambda| <= cutoff, trapezoid rule."""
    lam = np.arange(-cutoff, cutoff + 0.5 * step, step)
    q = q_values(lam, rec, sol)
    weights = np.full(len(lam), step)
    weights[0] = weights[-1] = 0.5 * step
    x = np.atleast_1d(np.asarray(x, dtype=float))
    phase = np.exp(1j * x[:, None] * lam[None, :] / rec.hbar)
    return -(phase * (q * weights)[None, :]).sum(axis=1) / (2 * math.pi * rec.hbar)


def fourier_duality_check(rec, sol, x_values=None):
    """Fourier transform of q against -chi^(0)(e^x), both normalized at x = 0."""
    if x_values is None:
        x_values = np.linspace(-1.0, 1.0, 8)
    x_values = np.asarray(x_values, dtype=float)
    transform = fourier_transform_q(rec, sol, np.r_[0.0, x_values])
    basis = FloquetBasis.from_nlie(sol, side="zero")
    chi = np.array([-chi_max_decay("zero", math.exp(x), basis) for x in np.r_[0.0, x_values]])
    a = transform[1:] / transform[0]
    b = chi[1:] / chi[0]
    deviation = float(np.max(np.abs(a - b) / np.abs(b)))
    oper_logger.info(f"fourier duality modes={rec.modes}: deviation {deviation:.3e}")
    return {"x": x_values.tolist(), "transform": a.tolist(), "chi": b.tolist(), "deviation": deviation}


def rh_round_trip(spectral, sigma):
    """Monodromy eigenvalues of the oper with these charges against e^{2 pi i sigma}."""
    inst = OperInstance.from_spectral(spectral)
    eigenvalues = ode_monodromy(inst)
    expected = np.exp(2j * math.pi * np.asarray(sigma))
    return {"eigenvalues": eigenvalues.tolist(), "expected": expected.tolist(),
            "mismatch": multiset_distance(eigenvalues, expected)}

