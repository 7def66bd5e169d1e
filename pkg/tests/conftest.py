"""Shared fixtures and independent oracles for the test suite.

The oracles deliberately avoid the library's own solution paths: Lyapunov
and Sylvester equations are checked against dense Kronecker linear
systems, matrix functions against eigendecompositions, and H2 norms
against time-domain quadrature of the impulse response.
"""

import numpy as np
import pytest
import scipy.linalg as sla

from icmor import StateSpaceModel


def make_stable(rng, n, margin=0.3):
    """Random dense stable state matrix with spectral abscissa <= -margin."""
    A = rng.standard_normal((n, n))
    shift = np.max(np.linalg.eigvals(A).real)
    return A - (shift + margin) * np.eye(n)


def random_system(rng, n, m=1, p=1, margin=0.3):
    A = make_stable(rng, n, margin)
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((p, n))
    return StateSpaceModel(A, B, C)


def kron_lyapunov(A, G):
    """Solve A P + P A^T + G = 0 as a dense Kronecker linear system."""
    n = A.shape[0]
    I = np.eye(n)
    K = np.kron(I, A) + np.kron(A, I)
    vec = np.linalg.solve(K, -np.asarray(G, dtype=float).ravel(order="F"))
    return vec.reshape((n, n), order="F")


def kron_sylvester(A, M, K):
    """Solve A^T Y + Y M + K = 0 via Kronecker vectorization."""
    n, r = A.shape[0], M.shape[0]
    Kop = np.kron(np.eye(r), A.T) + np.kron(M.T, np.eye(n))
    vec = np.linalg.solve(Kop, -np.asarray(K, dtype=float).ravel(order="F"))
    return vec.reshape((n, r), order="F")


def h2_quadrature(A, B, C, t_f=60.0, samples=60001):
    """H2 norm by trapezoidal quadrature of ||C e^{At} B||_F^2."""
    t = np.linspace(0.0, t_f, samples)
    h = t[1] - t[0]
    E = sla.expm(A * h)
    X = B.copy()
    acc = np.zeros(samples)
    for k in range(samples):
        H = C @ X
        acc[k] = np.sum(H * H)
        X = E @ X
    return float(np.sqrt(np.trapezoid(acc, t)))


@pytest.fixture()
def rng():
    # function-scoped so each test sees the same stream no matter which
    # subset of the suite runs
    return np.random.default_rng(12345)
