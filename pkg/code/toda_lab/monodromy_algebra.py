"""
Exact finite-dimensional monodromy algebra: Stokes matrices placed by their
combinatorial rule, the canonical monodromy M_0 = S_0 S_1 P_N, the
Vandermonde and Krylov matrices built from it, and the connection matrix E
whose proportionality to the identity is the quantization criterion.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import CollisionError, ConfigError, NumericalError
from .logs import get_logger
from .numerics import elementary_symmetric

monodromy_logger = get_logger("monodromy_algebra")

SIGMA_SUM_TOL = 1e-10
COLLISION_DISTANCE = 1e-8


@dataclass(frozen=True)
class MonodromyData:
    """
    Monodromy exponents sigma_j (sum zero), optional eta_j, and a debug
    switch that flips the sign of s_1 for mutation checks.
    """

    N: int
    sigma: tuple
    eta: tuple = None
    flip_sign: bool = False

    def __post_init__(self):
        sigma = tuple(complex(x) for x in self.sigma)
        object.__setattr__(self, "sigma", sigma)
        if self.N < 2:
            raise ConfigError(f"N must be >= 2, got {self.N}", module="monodromy_algebra")
        if len(sigma) != self.N:
            raise ConfigError(f"Expected {self.N} exponents sigma, got {len(sigma)}", module="monodromy_algebra")
        if abs(sum(sigma)) > SIGMA_SUM_TOL * max(1.0, max(abs(x) for x in sigma)):
            raise ConfigError(f"sum(sigma) = {sum(sigma)} must vanish", module="monodromy_algebra")
        if self.eta is not None:
            eta = tuple(complex(x) for x in self.eta)
            if len(eta) != self.N:
                raise ConfigError(f"Expected {self.N} values eta, got {len(eta)}", module="monodromy_algebra")
            object.__setattr__(self, "eta", eta)

    @property
    def Sigma(self):
        return np.exp(2j * math.pi * np.asarray(self.sigma))

    @property
    def s(self):
        """Stokes constants s_1..s_{N-1}."""
        Sigma = self.Sigma
        s = np.array([(-1) ** (i + 1) * elementary_symmetric(Sigma, i) for i in range(1, self.N)])
        if self.flip_sign:
            s[0] = -s[0]
        return s

    @property
    def eta_branch(self):
        """Integer parts of Re eta_j; the fractional parts are what E sees."""
        if self.eta is None:
            return None
        return tuple(int(math.floor(x.real)) for x in self.eta)


##############################
# Stokes and Monodromy Matrices
##############################

def _stokes_constant(d, j, s):
    # s_{j-N} = (-1)^{N-1} s_j
    if j < 0:
        return (-1) ** (d.N - 1) * s[j + d.N - 1]
    return s[j - 1]


def stokes_matrix(k, d):
    N = d.N
    if not 0 <= k < 2 * N:
        raise ValueError(f"Stokes index k must be in 0..{2 * N - 1}, got {k}")
    s = d.s
    S = np.eye(N, dtype=complex)
    for n in range(N):
        if 1 <= (k - 2 * n) % (2 * N) <= N - 1:
            m = (k - n) % N
            S[m, n] = _stokes_constant(d, n - m, s)
    return S


def stokes_nonzero_count(N, k):
    """Number of off-diagonal entries the placement rule allows in S_k."""
    return sum(1 for n in range(N) if 1 <= (k - 2 * n) % (2 * N) <= N - 1)


def permutation_PN(N):
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    P = np.diag(np.ones(N - 1, dtype=complex), k=-1)
    P[0, N - 1] = (-1) ** (N - 1)
    return P


def monodromy_M0(d):
    return stokes_matrix(0, d) @ stokes_matrix(1, d) @ permutation_PN(d.N)


def characteristic_polynomial(A):
    """
    Coefficients of det(x - A), descending, by the Berkowitz recursion
    (no divisions).
    """
    A = np.asarray(A, dtype=complex)
    n = A.shape[0]
    if A.shape != (n, n) or n == 0:
        raise ValueError(f"Expected a non-empty square matrix, got shape {A.shape}")
    v = np.array([1.0, -A[0, 0]], dtype=complex)
    for r in range(1, n):
        row = A[r, :r]
        x = A[:r, r]
        column = [1.0, -A[r, r]]
        for _ in range(r):
            column.append(-(row @ x))
            x = A[:r, :r] @ x
        T = linalg.toeplitz(np.asarray(column, dtype=complex), np.r_[1.0, np.zeros(r)].astype(complex))
        v = T @ v
    return v


def expected_characteristic_polynomial(d):
    """x^N - sum_i s_i x^(N-i) + (-1)^N, descending."""
    coeffs = np.zeros(d.N + 1, dtype=complex)
    coeffs[0] = 1.0
    coeffs[1:d.N] = -d.s
    coeffs[d.N] = (-1) ** d.N
    return coeffs


##############################
# Vandermonde and Connection Matrices
##############################

def check_sigma_collisions(d):
    Sigma = d.Sigma
    for j in range(d.N):
        for k in range(j + 1, d.N):
            if abs(Sigma[j] - Sigma[k]) < COLLISION_DISTANCE:
                raise CollisionError(
                    f"Monodromy eigenvalues {j} and {k} coincide ({Sigma[j]})", module="monodromy_algebra"
                )


def vandermonde_V(d):
    """Rows Sigma_j^(N-1), ..., Sigma_j^0."""
    check_sigma_collisions(d)
    return np.vander(d.Sigma, d.N).T


def msf_matrix(d):
    """Entry (n, k) = [M_0^(ceil(N/2) - k)]_(n, 0)."""
    M0 = monodromy_M0(d)
    top = math.ceil(d.N / 2)
    columns = [np.linalg.matrix_power(M0, top - k)[:, 0] for k in range(d.N)]
    return np.column_stack(columns)


def connection_E(d):
    if d.eta is None:
        raise ConfigError("connection_E needs eta", module="monodromy_algebra")
    V = vandermonde_V(d)
    Msf = msf_matrix(d)
    T = np.diag(np.exp(2j * math.pi * np.asarray(d.eta)))
    try:
        inner = linalg.solve(V, T @ V)
        E = linalg.solve(Msf.T, (Msf @ inner).T).T
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalError(f"Connection matrix is singular: {e}", module="monodromy_algebra") from e
    monodromy_logger.info(f"connection_E N={d.N}: trace {np.trace(E):.6g}")
    return E


def is_quantized_E(E, tol):
    E = np.asarray(E, dtype=complex)
    N = E.shape[0]
    mean = np.trace(E) / N
    if abs(mean) == 0.0:
        raise ValueError("is_quantized_E needs a matrix with nonzero trace")
    score = float(np.linalg.norm(E - mean * np.eye(N), "fro") / abs(mean))
    return score < tol, score
