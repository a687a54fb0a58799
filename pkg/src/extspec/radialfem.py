"""Piecewise-linear radial finite elements on a truncated exterior domain.

All integrals are radial reductions: the surface factor N*omega_N of the unit
sphere is dropped consistently from J, G and the norms, so quotients such as
J/G are unaffected.  Weights are any object with ``evaluate(r, p)`` (the
WeightSpec family) or a plain callable ``w(r)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy import optimize

GAUSS_XI = np.array([0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0)])


def weight_values(w, r, p: float) -> np.ndarray:
    ev = getattr(w, "evaluate", None)
    if ev is not None:
        return np.asarray(ev(r, p), dtype=float)
    return np.asarray(w(r), dtype=float)


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Nodes r_0 < ... < r_n of a 1-d mesh; N is the ambient dimension."""

    nodes: np.ndarray
    N: int
    gamma: float = 1.0

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 2:
            raise ValueError("a grid needs at least two nodes")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        if nodes[0] < 0:
            raise ValueError("radii must be nonnegative")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def n(self) -> int:
        """Number of elements."""
        return len(self.nodes) - 1

    @property
    def R(self) -> float:
        return float(self.nodes[-1])

    @cached_property
    def h(self) -> np.ndarray:
        return np.diff(self.nodes)

    @cached_property
    def shell(self) -> np.ndarray:
        """Exact integral of r^(N-1) over each element."""
        a, b = self.nodes[:-1], self.nodes[1:]
        return (b**self.N - a**self.N) / self.N

    @cached_property
    def gauss_points(self) -> np.ndarray:
        return self.nodes[:-1, None] + self.h[:, None] * GAUSS_XI[None, :]

    @cached_property
    def gauss_weights(self) -> np.ndarray:
        return np.repeat(0.5 * self.h[:, None], 2, axis=1)

    def segment(self, i0: int, i1: int) -> "RadialGrid":
        """Sub-mesh on nodes[i0..i1] (internal solves on sub-intervals)."""
        return RadialGrid(self.nodes[i0 : i1 + 1], self.N, self.gamma)

    def to_dict(self) -> dict:
        return {"n": self.n, "R": self.R, "gamma": self.gamma, "N": self.N,
                "nodes": self.nodes.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "RadialGrid":
        return cls(np.asarray(d["nodes"], dtype=float), int(d["N"]), float(d["gamma"]))


def build_grid(n: int, R: float, gamma: float = 1.0, N: int = 3) -> RadialGrid:
    """Geometrically graded mesh of n elements on [1, R]; gamma = 1 is uniform."""
    if n < 2:
        raise ValueError("need at least 2 elements")
    if not R > 1:
        raise ValueError("truncation radius must exceed 1")
    if gamma < 1:
        raise ValueError("grading ratio must be >= 1")
    k = np.arange(n)
    if gamma == 1.0:
        lengths = np.full(n, (R - 1.0) / n)
    else:
        h0 = (R - 1.0) * (gamma - 1.0) / math.expm1(n * math.log(gamma))
        lengths = h0 * gamma**k
    nodes = 1.0 + np.concatenate([[0.0], np.cumsum(lengths)])
    nodes[0], nodes[-1] = 1.0, R
    return RadialGrid(nodes, N, gamma)


def grading_for_first_element(n: int, R: float, h0: float) -> float:
    """Ratio gamma so that n geometric elements starting with h0 span [1, R]."""
    if h0 * n >= R - 1:
        return 1.0

    def total(g):
        return h0 * math.expm1(n * math.log(g)) / (g - 1.0) - (R - 1.0)

    return optimize.brentq(total, 1.0 + 1e-15, 2.0 ** (60.0 / n), xtol=1e-15)


def log_grid(n: int, r0: float, R: float, N: int) -> RadialGrid:
    """Mesh that is uniform in log r."""
    gamma = (R / r0) ** (1.0 / n)
    return RadialGrid(np.geomspace(r0, R, n + 1), N, gamma)


@dataclass(frozen=True, eq=False)
class DiscreteField:
    values: np.ndarray
    grid: RadialGrid
    dirichlet_at_R: bool = True

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.nodes.shape:
            raise ValueError("field does not match the grid")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        if self.dirichlet_at_R and v[-1] != 0.0:
            raise ValueError("Dirichlet field must vanish at the outer radius")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, func, grid: RadialGrid, dirichlet_at_R: bool = True):
        v = np.asarray(func(grid.nodes), dtype=float).copy()
        if dirichlet_at_R:
            v[-1] = 0.0
        return cls(v, grid, dirichlet_at_R)

    def __mul__(self, c):
        return DiscreteField(self.values * float(c), self.grid, self.dirichlet_at_R)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["r", "phi"])
            for r, v in zip(self.grid.nodes, self.values):
                wr.writerow([f"{r:.17g}", f"{v:.17g}"])

    @classmethod
    def from_csv(cls, path, N: int, dirichlet_at_R: bool = True) -> "DiscreteField":
        rs, vs = [], []
        with open(path, newline="") as fh:
            rd = csv.DictReader(fh)
            for row in rd:
                rs.append(float(row["r"]))
                vs.append(float(row["phi"]))
        return cls(np.array(vs), RadialGrid(np.array(rs), N), dirichlet_at_R)


def _values(phi) -> np.ndarray:
    return phi.values if isinstance(phi, DiscreteField) else np.asarray(phi, dtype=float)


def _smoothed_power(s, p: float, eps: float):
    """(|s|^p, p |s|^{p-2} s) with optional smoothing s^2 -> s^2 + eps^2."""
    if eps > 0:
        q = s * s + eps * eps
        return q ** (p / 2), p * q ** ((p - 2) / 2) * s
    a = np.abs(s)
    return a**p, p * a ** (p - 1) * np.sign(s)


def energy_J(phi, grid: RadialGrid, p: float, eps: float = 0.0) -> float:
    """Integral of |phi'|^p r^(N-1) over [r_0, R]; exact per element."""
    s = np.diff(_values(phi)) / grid.h
    e, _ = _smoothed_power(s, p, eps)
    return float(np.dot(e, grid.shell))


def grad_J(phi, grid: RadialGrid, p: float, eps: float = 0.0) -> np.ndarray:
    s = np.diff(_values(phi)) / grid.h
    _, de = _smoothed_power(s, p, eps)
    flux = de * grid.shell / grid.h
    g = np.zeros(grid.n + 1)
    g[:-1] -= flux
    g[1:] += flux
    return g


def _gauss_values(v: np.ndarray) -> np.ndarray:
    return v[:-1, None] * (1.0 - GAUSS_XI)[None, :] + v[1:, None] * GAUSS_XI[None, :]


def weighted_gauss(grid: RadialGrid, w, p: float) -> np.ndarray:
    """w(x) x^(N-1) times the Gauss weight at every quadrature point."""
    x = grid.gauss_points
    return weight_values(w, x, p) * x ** (grid.N - 1) * grid.gauss_weights


def _power_form(v, wq, p):
    u = _gauss_values(v)
    return float(np.sum(wq * np.abs(u) ** p))


def _power_form_grad(v, wq, p):
    u = _gauss_values(v)
    t = p * wq * np.abs(u) ** (p - 1) * np.sign(u)
    g = np.zeros(len(v))
    g[:-1] += t @ (1.0 - GAUSS_XI)
    g[1:] += t @ GAUSS_XI
    return g


def energy_G(phi, grid: RadialGrid, w, p: float) -> float:
    """Integral of w |phi|^p r^(N-1), two-point Gauss per element."""
    return _power_form(_values(phi), weighted_gauss(grid, w, p), p)


def grad_G(phi, grid: RadialGrid, w, p: float) -> np.ndarray:
    return _power_form_grad(_values(phi), weighted_gauss(grid, w, p), p)


def lp_norm_p(phi, grid: RadialGrid, p: float) -> float:
    """Integral of |phi|^p r^(N-1)."""
    x = grid.gauss_points
    return _power_form(_values(phi), x ** (grid.N - 1) * grid.gauss_weights, p)


@dataclass(frozen=True)
class EnergyReport:
    J: float
    G: float
    lp_norm_p: float

    @property
    def w1p_norm_p(self) -> float:
        return self.J + self.lp_norm_p


def energies(phi, grid: RadialGrid, w, p: float) -> EnergyReport:
    return EnergyReport(energy_J(phi, grid, p), energy_G(phi, grid, w, p), lp_norm_p(phi, grid, p))


# ---------------------------------------------------------------------------
# p = 2 assembly


@dataclass(frozen=True, eq=False)
class Tridiag:
    """Symmetric tridiagonal matrix (main diagonal, first off-diagonal)."""

    diag: np.ndarray
    off: np.ndarray

    @property
    def size(self) -> int:
        return len(self.diag)

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        y = self.diag * x
        y[:-1] += self.off * x[1:]
        y[1:] += self.off * x[:-1]
        return y

    def quad(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.dot(self.diag, x * x) + 2.0 * np.dot(self.off, x[:-1] * x[1:]))

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def upper_banded(self) -> np.ndarray:
        """Layout used by scipy.linalg.solveh_banded / solve_banded (upper)."""
        ab = np.zeros((2, self.size))
        ab[0, 1:] = self.off
        ab[1] = self.diag
        return ab

    def restrict(self, i0: int, i1: int) -> "Tridiag":
        """Principal submatrix on indices i0 .. i1-1."""
        return Tridiag(self.diag[i0:i1], self.off[i0 : i1 - 1])

    def __add__(self, other):
        return Tridiag(self.diag + other.diag, self.off + other.off)

    def scaled(self, c: float) -> "Tridiag":
        return Tridiag(c * self.diag, c * self.off)


def _assemble(elem_diag0, elem_diag1, elem_off, n_nodes) -> Tridiag:
    d = np.zeros(n_nodes)
    d[:-1] += elem_diag0
    d[1:] += elem_diag1
    return Tridiag(d, np.array(elem_off, dtype=float))


def stiffness(grid: RadialGrid, elem_weight=None) -> Tridiag:
    k = grid.shell / grid.h**2
    if elem_weight is not None:
        k = k * elem_weight
    return _assemble(k, k, -k, grid.n + 1)


def mass(grid: RadialGrid, wq: np.ndarray) -> Tridiag:
    """Mass matrix for quadrature weights wq (shape (n, 2)) at the Gauss points."""
    b0, b1 = 1.0 - GAUSS_XI, GAUSS_XI
    return _assemble(wq @ (b0 * b0), wq @ (b1 * b1), wq @ (b0 * b1), grid.n + 1)


@dataclass(frozen=True, eq=False)
class P2System:
    K: Tridiag
    Mg: Tridiag
    M: Tridiag
    l: int
    dirichlet_at_R: bool


def assemble_p2(grid: RadialGrid, w, l: int = 0, dirichlet_at_R: bool = True) -> P2System:
    """Stiffness (with angular term), weighted mass and plain mass at p = 2."""
    if l < 0:
        raise ValueError("angular index must be >= 0")
    x = grid.gauss_points
    N = grid.N
    K = stiffness(grid)
    ang = l * (l + N - 2)
    if ang:
        K = K + mass(grid, ang * x ** (N - 3) * grid.gauss_weights)
    Mg = mass(grid, weighted_gauss(grid, w, 2.0))
    M = mass(grid, x ** (N - 1) * grid.gauss_weights)
    if dirichlet_at_R:
        K, Mg, M = (A.restrict(0, grid.n) for A in (K, Mg, M))
    return P2System(K, Mg, M, l, dirichlet_at_R)


def poincare_diagnostic(fields: Sequence[DiscreteField], w, p: float, tol: float = 1e-6) -> float:
    """Smallest J(phi) / ||phi||_p^p over fields normalised to G = 1."""
    if not fields:
        raise ValueError("no fields given")
    best = math.inf
    for f in fields:
        G = energy_G(f, f.grid, w, p)
        if abs(G - 1.0) > tol:
            raise ValueError(f"field is not on the constraint set (G = {G:.6g})")
        best = min(best, energy_J(f, f.grid, p) / lp_norm_p(f, f.grid, p))
    return best
