"""Independent reference computations used by the tests.

Nothing here imports the package's numerical kernels; each oracle is a
different discretisation or a closed form.
"""

import math

import numpy as np
from scipy import integrate, linalg

OMEGA3 = 4.0 * math.pi / 3.0


def reference_lambda(k: int, R: float) -> float:
    """k-th eigenvalue of -(r^2 u')' = lam r^-4 r^2 u, u'(1) = 0, u(R) = 0.

    With s = 1/r the problem becomes -psi'' = lam psi on (1/R, 1), Neumann at
    s = 1 and Dirichlet at s = 1/R.
    """
    return ((2 * k - 1) * math.pi / (2.0 * (1.0 - 1.0 / R))) ** 2


def dense_fd_eigs(R: float, m: int, k: int, N: int = 3, q: float = 4.0) -> np.ndarray:
    """First k eigenvalues of the radial problem by a finite-volume second difference.

    Vertex-centred scheme on a uniform mesh: fluxes r_{i+1/2}^(N-1) (u_{i+1}-u_i)/h,
    a half control volume at the Neumann end, Dirichlet node at R removed.
    Solved as a dense symmetric generalized eigenproblem.
    """
    r = np.linspace(1.0, R, m + 1)
    h = r[1] - r[0]
    rm = 0.5 * (r[1:] + r[:-1])
    c = rm ** (N - 1) / h
    A = np.zeros((m + 1, m + 1))
    for i in range(m):
        A[i, i] += c[i]
        A[i + 1, i + 1] += c[i]
        A[i, i + 1] -= c[i]
        A[i + 1, i] -= c[i]
    vol = np.full(m + 1, h)
    vol[0] = vol[-1] = h / 2
    B = np.diag(r ** (-q) * r ** (N - 1) * vol)
    A, B = A[:-1, :-1], B[:-1, :-1]
    return linalg.eigh(A, B, eigvals_only=True, subset_by_index=[0, k - 1])


def central_difference_gradient(fun, x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    g = np.empty_like(x)
    for i in range(len(x)):
        e = np.zeros_like(x)
        e[i] = step * max(1.0, abs(x[i]))
        g[i] = (fun(x + e) - fun(x - e)) / (2 * e[i])
    return g


# ---------------------------------------------------------------------------
# rearrangement by brute force


def brute_distribution(values, measures, s: float) -> float:
    return float(sum(m for v, m in zip(values, measures) if abs(v) > s))


def brute_fstar(values, measures, t: float) -> float:
    """inf{s >= 0 : alpha(s) <= t}, searched over the finitely many levels."""
    levels = sorted({0.0} | {abs(v) for v in values})
    for s in levels:
        if brute_distribution(values, measures, s) <= t:
            return s
    return levels[-1]


def brute_fstarstar(values, measures, t: float) -> float:
    """Running average of f*: sorted cells laid out along (0, t)."""
    order = np.argsort(-np.abs(values), kind="stable")
    v = np.abs(np.asarray(values, dtype=float))[order]
    m = np.asarray(measures, dtype=float)[order]
    edges = np.concatenate([[0.0], np.cumsum(m)])
    total = 0.0
    for a, b, val in zip(edges[:-1], edges[1:], v):
        lo, hi = a, min(b, t)
        if hi > lo:
            total += val * (hi - lo)
    return total / t


def power_tail_weak_norm(N: int, p: float, q: float, r0: float = 1.0) -> float:
    """sup_t t^(p/N) g**(t) for g = |x|^-q on {|x| > r0}, by quadrature on a dense t grid."""
    om = math.pi ** (N / 2) / math.gamma(N / 2 + 1)

    def gstar(t):
        return (r0**N + t / om) ** (-q / N)

    ts = np.geomspace(1e-8, 1e12, 4001)
    best = 0.0
    prev_t, acc = 0.0, 0.0
    for t in ts:
        acc += integrate.quad(gstar, prev_t, t, limit=200)[0]
        prev_t = t
        best = max(best, t ** (p / N) * acc / t)
    return best


def truncated_power_ratio(R: float) -> float:
    """Ratio int r^-2 phi^2 r^2 / int phi'^2 r^2 for phi = r^-1/2 - R^-1/2 (N = 3, p = 2)."""
    L = math.log(R)
    return 4.0 * (L - 3.0 + 4.0 / math.sqrt(R) - 1.0 / R) / L


def muckenhoupt_bruteforce(N: int, p: float, pts: int = 2001) -> float:
    """A for u = g* (g = |x|^-p on R^N), v = s^(p - p/N), by direct quadrature."""
    om = math.pi ** (N / 2) / math.gamma(N / 2 + 1)
    pc = p / (p - 1)
    best = 0.0
    for t in np.geomspace(1e-3, 1e3, pts):
        U = integrate.quad(lambda s: (om / s) ** (p / N), 0.0, t, limit=200)[0]
        V = integrate.quad(lambda s: s ** ((p - p / N) * (1 - pc)), t, math.inf, limit=200)[0]
        best = max(best, U ** (1 / p) * V ** (1 / pc))
    return best



def shooting_principal(N: int, p: float, q: float, R: float) -> float:
    """Principal eigenvalue of the radial p-Laplacian with weight r^-q by shooting.

    Integrates phi' = -|u / r^(N-1)|^(1/(p-1)) sgn u, u' = -lam r^(N-1-q) |phi|^(p-1) sgn phi
    from phi(1) = 1, u(1) = 0; phi(R; lam) changes sign at the principal eigenvalue.
    """
    from scipy import optimize

    def phi_R(lam):
        def rhs(r, y):
            phi, u = y
            a = (abs(u) / r ** (N - 1)) ** (1.0 / (p - 1))
            return [math.copysign(a, u), -lam * r ** (N - 1 - q) * abs(phi) ** (p - 1) * math.copysign(1.0, phi)]

        sol = integrate.solve_ivp(rhs, (1.0, R), [1.0, 0.0], method="LSODA", rtol=1e-11, atol=1e-13)
        return sol.y[0, -1]

    lo = 1e-3
    hi = 2 * lo
    while phi_R(hi) > 0:
        lo, hi = hi, hi * 1.5
    return optimize.brentq(phi_R, lo, hi, xtol=1e-12, rtol=1e-11)
