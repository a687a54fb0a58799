"""Principal and higher eigenvalues of the truncated radial problem.

The general-p principal eigenvalue is the minimum of J on {G = 1, phi(R) = 0}.
It is computed by a projected gradient method: the descent direction is the
constraint-corrected gradient ``grad_J - lam * grad_G`` mapped through a
tridiagonal Sobolev-type preconditioner, iterates are pulled back onto the
constraint set by exact rescaling (J and G are p-homogeneous), and the step
length comes from Armijo backtracking.  At p = 2 a unit step is exactly one
sweep of inverse iteration.

At p = 2 the full radial-and-angular spectrum is computed by Sturm-count
bisection on the tridiagonal pencil (K_l, M_g) followed by shifted inverse
iteration.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import linalg, optimize

from .radialfem import (
    DiscreteField,
    RadialGrid,
    Tridiag,
    _power_form,
    _power_form_grad,
    _smoothed_power,
    assemble_p2,
    weight_values,
    weighted_gauss,
)
from .rearrange import ExponentContext

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    """The requested eigenvalue cannot be computed on this grid."""


class ConstraintUnreachable(SolverError):
    def __init__(self, detail: str = ""):
        msg = "constraint unreachable"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class NotConverged(UserWarning):
    pass


class IsolationError(AssertionError):
    pass


@dataclass(frozen=True)
class SolveConfig:
    residual_tol: float = 1e-8
    max_iters: int = 100_000
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    eps_schedule: tuple = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10)
    seed: int = 0
    restarts: int = 5
    stall_iters: int = 200

    def __post_init__(self):
        if not (self.residual_tol > 0 and self.armijo_c1 > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        if self.max_iters < 1 or self.restarts < 1:
            raise ValueError("max_iters and restarts must be >= 1")
        if any(e <= 0 for e in self.eps_schedule):
            raise ValueError("regularisation parameters must be positive")


@dataclass
class EigenResult:
    eigenvalue: float
    field: DiscreteField
    residual: float
    iterations: int
    N: int
    p: float
    diagnostics: dict = field(default_factory=dict)
    history: list = field(default_factory=list)
    weight: Optional[dict] = None

    @property
    def grid(self) -> RadialGrid:
        return self.field.grid

    @property
    def R(self) -> float:
        return self.grid.R

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def gamma(self) -> float:
        return self.grid.gamma

    @property
    def converged(self) -> bool:
        return bool(self.diagnostics.get("converged", False))

    def to_dict(self) -> dict:
        return {
            "lambda": self.eigenvalue,
            "residual": self.residual,
            "iterations": self.iterations,
            "R": self.R,
            "n": self.n,
            "gamma": self.gamma,
            "N": self.N,
            "p": self.p,
            "weight": self.weight,
            "diagnostics": dict(self.diagnostics),
        }


# ---------------------------------------------------------------------------
# discrete problem on an interval of the mesh


class _Problem:
    """Energies on nodes of ``grid`` with optional Dirichlet ends."""

    def __init__(self, grid: RadialGrid, w, p: float, left_fixed=False, right_fixed=True):
        self.grid, self.p = grid, p
        self.h = grid.h
        self.shell = grid.shell
        self.wq = weighted_gauss(grid, w, p)
        self.free = np.ones(grid.n + 1, dtype=bool)
        self.free[0] = not left_fixed
        self.free[-1] = not right_fixed
        self.i0 = 1 if left_fixed else 0
        self.i1 = grid.n if right_fixed else grid.n + 1

    def slopes(self, v):
        return np.diff(v) / self.h

    def J(self, v, eps=0.0):
        e, _ = _smoothed_power(self.slopes(v), self.p, eps)
        return float(np.dot(e, self.shell))

    def gJ(self, v, eps=0.0):
        _, de = _smoothed_power(self.slopes(v), self.p, eps)
        flux = de * self.shell / self.h
        g = np.zeros(len(v))
        g[:-1] -= flux
        g[1:] += flux
        return g * self.free

    def G(self, v):
        return _power_form(v, self.wq, self.p)

    def gG(self, v):
        return _power_form_grad(v, self.wq, self.p) * self.free

    def preconditioner(self, v, eps):
        """Tridiagonal p(p-1) |s|^(p-2)-weighted stiffness on the free nodes."""
        p = self.p
        s = self.slopes(v)
        if p == 2:
            wt = np.full_like(s, 2.0)
        else:
            floor = max(eps, 1e-8 * float(np.max(np.abs(s))), 1e-300)
            wt = p * (p - 1) * (s * s + floor * floor) ** ((p - 2) / 2)
        k = wt * self.shell / self.h**2
        d = np.zeros(len(v))
        d[:-1] += k
        d[1:] += k
        T = Tridiag(d, -k).restrict(self.i0, self.i1)
        return T.upper_banded()

    def initial_bump(self, width: int = 5):
        """Hat of half-width ``width`` elements at the peak of w r^(N-1)."""
        dens = self.wq.sum(axis=1) / (2 * self.h)
        node_dens = np.zeros(len(self.free))
        node_dens[:-1] += dens
        node_dens[1:] += dens
        node_dens[~self.free] = -np.inf
        k = int(np.argmax(node_dens))
        idx = np.arange(len(self.free))
        v = np.maximum(0.0, 1.0 - np.abs(idx - k) / width)
        return v * self.free


def _normalise(prob: _Problem, v):
    G = prob.G(v)
    if not G > 0:
        return None
    return v / G ** (1.0 / prob.p)


def _descend(prob: _Problem, v, cfg: SolveConfig, eps: float, tol: float, max_iters: int, history):
    """Preconditioned projected gradient on {G = 1}; returns (v, residual, iters)."""
    p = prob.p
    c1, beta = cfg.armijo_c1, cfg.backtrack
    Jv = prob.J(v, eps)
    res = math.inf
    best_res, stall = math.inf, 0
    it = 0
    for it in range(1, max_iters + 1):
        gJ = prob.gJ(v, eps)
        gG = prob.gG(v)
        lam = float(np.dot(gJ, v)) / p
        r = gJ - lam * gG
        nrm = float(np.linalg.norm(gJ))
        res = float(np.linalg.norm(r)) / nrm if nrm > 0 else 0.0
        if res <= tol:
            return v, res, it - 1
        if res < 0.9 * best_res:
            best_res, stall = res, 0
        else:
            stall += 1
            if stall >= cfg.stall_iters:
                break
        ab = prob.preconditioner(v, eps)
        d = np.zeros_like(v)
        d[prob.i0 : prob.i1] = linalg.solveh_banded(ab, r[prob.i0 : prob.i1], check_finite=False)
        slope = float(np.dot(r, d))
        if not slope > 0:
            d, slope = r, float(np.dot(r, r))
        tau = 1.0
        accepted = False
        while tau > 1e-14:
            w = _normalise(prob, v - tau * d)
            if w is not None:
                Jw = prob.J(w, eps)
                if Jw <= Jv - c1 * tau * slope:
                    accepted = True
                    break
            tau *= beta
        if not accepted:
            # near the minimiser the decrease in J drops below roundoff; fall back to
            # the unit step when it still reduces the residual
            w = _normalise(prob, v - d)
            if w is None or not _residual(prob, w, eps) < res:
                break
            Jw = prob.J(w, eps)
        v, Jv = w, Jw
        history.append(prob.J(v))
    return v, res, it


def _residual(prob: _Problem, v, eps=0.0) -> float:
    gJ = prob.gJ(v, eps)
    lam = float(np.dot(gJ, v)) / prob.p
    nrm = float(np.linalg.norm(gJ))
    return float(np.linalg.norm(gJ - lam * prob.gG(v))) / nrm if nrm > 0 else 0.0


def _minimise(prob: _Problem, v0, cfg: SolveConfig):
    v = _normalise(prob, v0)
    if v is None:
        raise ConstraintUnreachable("initial guess has G <= 0")
    history = [prob.J(v)]
    iters = 0
    eps_final = 0.0
    if prob.p < 2:
        for eps in cfg.eps_schedule[:-1]:
            v, _, k = _descend(prob, v, cfg, eps, cfg.residual_tol, 2000, history)
            iters += k
        eps_final = cfg.eps_schedule[-1]
    v, res, k = _descend(prob, v, cfg, eps_final, cfg.residual_tol, cfg.max_iters - iters, history)
    iters += k
    return v, res, iters, history, eps_final


def _weight_echo(w):
    to_dict = getattr(w, "to_dict", None)
    return to_dict() if to_dict is not None else None


def _solve_principal(prob: _Problem, cfg: SolveConfig):
    base = prob.initial_bump()
    if _normalise(prob, base) is None:
        raise ConstraintUnreachable("weight has no positive part on the grid")
    rng = np.random.default_rng(cfg.seed)
    best = None
    for k in range(cfg.restarts):
        v0 = base if k == 0 else base + 0.1 * rng.random(len(base)) * prob.free
        if _normalise(prob, v0) is None:
            continue
        out = _minimise(prob, v0, cfg)
        lam = prob.J(out[0])
        cand = (lam, out[1], out)
        if best is None:
            best = cand
            continue
        if lam < best[0] - cfg.residual_tol * abs(best[0]):
            best = cand
        elif abs(lam - best[0]) <= cfg.residual_tol * abs(best[0]) and out[1] < best[1]:
            best = cand
    return best[2]


def _finish(prob: _Problem, v, res, iters, history, cfg, ctx, w, extra=None) -> EigenResult:
    if np.mean(v) < 0:
        v = -v
    lam = prob.J(v)
    G = prob.G(v)
    interior = v[prob.free] if prob.free.any() else v
    converged = bool(res <= cfg.residual_tol)
    diag = {
        "G_value": G,
        "J_value": lam,
        "positive": bool(np.all(interior > 0)),
        "gap_to_next": None,
        "converged": converged,
        "surface_factor_dropped": True,
    }
    if extra:
        diag.update(extra)
    if not converged:
        warnings.warn(f"not converged: residual {res:.3e} after {iters} iterations", NotConverged)
    field_ = DiscreteField(v, prob.grid, dirichlet_at_R=not prob.free[-1])
    return EigenResult(lam, field_, res, iters, ctx.N, ctx.p, diag, history, _weight_echo(w))


def principal(w, ctx: ExponentContext, grid: RadialGrid, cfg: SolveConfig = SolveConfig()) -> EigenResult:
    """Smallest eigenvalue with Neumann condition at r = 1 and phi(R) = 0."""
    if grid.N != ctx.N:
        raise ValueError("grid dimension differs from the context")
    prob = _Problem(grid, w, ctx.p)
    v, res, iters, history, eps = _solve_principal(prob, cfg)
    extra = {"regularisation": eps} if eps else None
    return _finish(prob, v, _residual(prob, v, eps), iters, history, cfg, ctx, w, extra)


# ---------------------------------------------------------------------------
# p = 2 spectrum


def sturm_count(A: Tridiag, B: Tridiag, sigma) -> np.ndarray:
    """Number of eigenvalues of the pencil (A, B) below each sigma (B >= 0).

    Counts the negative pivots of the LDL^T factorisation of A - sigma B
    (Sylvester inertia); eigenvalues at infinity from a singular B never count.
    """
    sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
    d = A.diag[:, None] - sigma[None, :] * B.diag[:, None]
    e2 = (A.off[:, None] - sigma[None, :] * B.off[:, None]) ** 2
    tiny = np.finfo(float).tiny
    count = np.zeros(len(sigma), dtype=int)
    q = d[0].copy()
    for i in range(len(d)):
        if i:
            q = d[i] - e2[i - 1] / q
        q[q == 0.0] = -tiny
        count += q < 0
    return count


def _inverse_iteration(A: Tridiag, B: Tridiag, shift: float, rng, iters: int = 6):
    n = A.size
    ab = np.zeros((3, n))
    ab[0, 1:] = A.off - shift * B.off
    ab[1] = A.diag - shift * B.diag
    ab[2, :-1] = A.off - shift * B.off
    x = 1.0 + 0.01 * rng.random(n)
    lam = shift
    for _ in range(iters):
        y = linalg.solve_banded((1, 1), ab, B.matvec(x), check_finite=False)
        nrm = math.sqrt(B.quad(y))
        if not np.isfinite(nrm) or nrm == 0:
            break
        x = y / nrm
        lam_new = A.quad(x)
        if abs(lam_new - lam) <= 1e-15 * abs(lam_new):
            lam = lam_new
            break
        lam = lam_new
    return lam, x


def _pencil_eigs(A: Tridiag, B: Tridiag, k: int, rng, isolate_rtol: float = 1e-6):
    """First k eigenpairs of A x = lam B x by bisection + inverse iteration."""
    hi = 1.0
    for _ in range(2100):
        if sturm_count(A, B, hi)[0] >= k:
            break
        hi *= 2.0
    else:
        raise SolverError("weighted mass matrix is numerically singular")
    j = np.arange(k)
    lo_b = np.zeros(k)
    hi_b = np.full(k, hi)
    for _ in range(400):
        pos = lo_b > 0
        if np.all(pos & (hi_b <= lo_b * (1 + isolate_rtol))):
            break
        mid = np.where(pos, np.sqrt(lo_b * hi_b), 0.5 * (lo_b + hi_b))
        c = sturm_count(A, B, mid)
        below = c > j
        hi_b = np.where(below, mid, hi_b)
        lo_b = np.where(below, lo_b, mid)
    out = []
    for i in range(k):
        shift = 0.5 * (lo_b[i] + hi_b[i])
        lam, x = _inverse_iteration(A, B, shift, rng)
        if not lo_b[i] * (1 - 1e-9) <= lam <= hi_b[i] * (1 + 1e-9):
            raise SolverError(f"inverse iteration left the isolating interval for eigenvalue {i + 1}")
        out.append((lam, x))
    return out


def spectrum_p2(w, ctx: ExponentContext, grid: RadialGrid, k: int, l_max: int = 0,
                seed: int = 0) -> list:
    """First k eigenvalues over angular modes l = 0..l_max, sorted."""
    if ctx.p != 2:
        raise ValueError("spectrum_p2 requires p = 2")
    if grid.N != ctx.N:
        raise ValueError("grid dimension differs from the context")
    if k < 1 or l_max < 0:
        raise ValueError("need k >= 1 and l_max >= 0")
    wv = weight_values(w, grid.gauss_points, 2.0)
    if np.any(wv < 0):
        raise ValueError("sign-changing weight rejected for the full spectrum")
    rng = np.random.default_rng(seed)
    found = []
    for l in range(l_max + 1):
        sysl = assemble_p2(grid, w, l)
        for idx, (lam, x) in enumerate(_pencil_eigs(sysl.K, sysl.Mg, k, rng)):
            found.append((lam, l, idx, x, sysl))
    found.sort(key=lambda t: (t[0], t[1]))
    results = []
    for lam, l, idx, x, sysl in found[:k]:
        v = np.append(x, 0.0)
        if np.mean(v) < 0:
            v = -v
        Kx = sysl.K.matvec(x)
        res = float(np.linalg.norm(Kx - lam * sysl.Mg.matvec(x)) / np.linalg.norm(Kx))
        diag = {
            "G_value": sysl.Mg.quad(x),
            "J_value": sysl.K.quad(x),
            "positive": bool(np.all(v[:-1] > 0)),
            "gap_to_next": None,
            "converged": True,
            "surface_factor_dropped": True,
            "l": l,
            "radial_index": idx + 1,
        }
        results.append(EigenResult(lam, DiscreteField(v, grid), res, 0, ctx.N, 2.0, diag,
                                   [], _weight_echo(w)))
    return results


# ---------------------------------------------------------------------------
# second radial eigenvalue for general p


def second_radial_general_p(w, ctx: ExponentContext, grid: RadialGrid,
                            cfg: SolveConfig = SolveConfig()) -> EigenResult:
    """Approximate second radial eigenvalue by optimising a single nodal point.

    For a node r* the two nodal domains [1, r*] and [r*, R] get their own
    principal eigenvalues; the value is the minimum over r* of the larger one.
    Exact at p = 2 up to discretisation; an approximation otherwise.
    """
    if grid.N != ctx.N:
        raise ValueError("grid dimension differs from the context")
    p = ctx.p
    inner_cfg = SolveConfig(**{**cfg.__dict__, "restarts": 1})
    min_elems = 3
    cache = {}

    def pieces(i):
        if i not in cache:
            out = []
            for sub, left in ((grid.segment(0, i), False), (grid.segment(i, grid.n), True)):
                prob = _Problem(sub, w, p, left_fixed=left)
                if _normalise(prob, prob.initial_bump(min(5, max(1, sub.n // 3)))) is None:
                    out = None
                    break
                v, res, iters, _, eps = _solve_principal(prob, inner_cfg)
                if np.mean(v) < 0:
                    v = -v
                out.append((prob.J(v), v, _residual(prob, v, eps), iters))
            cache[i] = out
        return cache[i]

    def value(i):
        pc = pieces(i)
        return math.inf if pc is None else max(pc[0][0], pc[1][0])

    lo, hi = min_elems, grid.n - min_elems
    if hi < lo:
        raise ValueError("grid too coarse for a nodal point")
    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    while hi - lo > 3:
        a = int(round(hi - ratio * (hi - lo)))
        b = int(round(lo + ratio * (hi - lo)))
        if a == b:
            b = a + 1
        if value(a) <= value(b):
            hi = b
        else:
            lo = a
    best = min(range(lo, hi + 1), key=lambda i: (value(i), i))
    if not math.isfinite(value(best)):
        raise ConstraintUnreachable("no interior node admits G > 0 on both sides")
    (lamL, vL, resL, itL), (lamR, vR, resR, itR) = pieces(best)
    glued = np.concatenate([vL[:-1], -vR]) * 2.0 ** (-1.0 / p)
    full = _Problem(grid, w, p)
    res = max(resL, resR)
    converged = bool(res <= cfg.residual_tol)
    diag = {
        "G_value": full.G(glued),
        "J_value": full.J(glued),
        "positive": False,
        "gap_to_next": None,
        "converged": converged,
        "surface_factor_dropped": True,
        "nodal_radius": float(grid.nodes[best]),
        "nodal_index": best,
        "pieces": [lamL, lamR],
        "glued_residual": _residual(full, glued),
        "approximation": p != 2,
    }
    if not converged:
        warnings.warn(f"not converged: residual {res:.3e}", NotConverged)
    return EigenResult(max(lamL, lamR), DiscreteField(glued, grid), res, itL + itR, ctx.N, p,
                       diag, [], _weight_echo(w))


# ---------------------------------------------------------------------------
# ladders, gaps and closedness


@dataclass(frozen=True)
class Extrapolation:
    limit: float
    R_rate: float
    h_rate: Optional[float]
    R_values: tuple = ()
    n_values: tuple = ()
    h_correction: float = 0.0

    def __iter__(self):
        return iter((self.limit, self.R_rate, self.h_rate))

    def to_dict(self) -> dict:
        return {"limit": self.limit, "R_rate": self.R_rate, "h_rate": self.h_rate,
                "R_values": list(self.R_values), "n_values": list(self.n_values),
                "h_correction": self.h_correction}


def _three_point_rate(x, y):
    """Exponent a with y = y_inf + c x^(-a) through three points (x increasing)."""
    d1, d2 = y[0] - y[1], y[1] - y[2]
    if d1 == 0 or d2 == 0 or (d1 > 0) != (d2 > 0):
        return None
    target = d1 / d2

    def f(a):
        u = x ** (-a)
        return (u[0] - u[1]) / (u[1] - u[2]) - target

    lo, hi = 1e-6, 50.0
    if f(lo) * f(hi) > 0:
        return None
    return optimize.brentq(f, lo, hi, xtol=1e-14)


def _three_point_limit(x, y, a):
    u = x ** (-a)
    c = (y[1] - y[2]) / (u[1] - u[2])
    return y[2] - c * u[2]


def refine_and_extrapolate(results: Sequence[EigenResult]) -> Extrapolation:
    """Fit lam(R) = lam_inf + c R^-a on the finest-n R ladder, Richardson in h."""
    pts = {}
    for r in results:
        pts[(float(r.R), int(r.n))] = float(r.eigenvalue)
    n_fine = max(n for _, n in pts)
    R_lad = sorted((R, lam) for (R, n), lam in pts.items() if n == n_fine)
    if len(R_lad) < 3:
        raise ValueError("need at least 3 truncation radii at the finest resolution")
    lams = [lam for _, lam in R_lad]
    if any(b > a * (1 + 1e-12) for a, b in zip(lams, lams[1:])):
        raise ValueError("non-monotone R ladder: eigenvalues must not increase with R")
    x = np.array([R for R, _ in R_lad[-3:]])
    y = np.array(lams[-3:])
    a = _three_point_rate(x, y)
    if a is None:
        if np.ptp(y) <= 1e-12 * abs(y[-1]):
            limit, a = float(y[-1]), math.inf
        else:
            raise ValueError("R ladder does not contract; cannot extrapolate")
    else:
        limit = float(_three_point_limit(x, y, a))

    R_max = R_lad[-1][0]
    h_lad = sorted((n, lam) for (R, n), lam in pts.items() if R == R_max)
    h_rate, corr = None, 0.0
    if len(h_lad) >= 3:
        ns = np.array([n for n, _ in h_lad[-3:]], dtype=float)
        ys = np.array([lam for _, lam in h_lad[-3:]])
        b = _three_point_rate(ns, ys)
        if b is not None:
            h_rate = float(b)
            corr = float(_three_point_limit(ns, ys, b) - ys[-1])
    return Extrapolation(limit + corr, float(a), h_rate, tuple(R for R, _ in R_lad),
                         tuple(n for n, _ in h_lad), corr)


@dataclass(frozen=True)
class GapReport:
    lambda1: float
    lambda2: float
    gap: float
    min_interior: float
    threshold: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def isolation_gap(results: Sequence[EigenResult], threshold: float = 1e-6) -> GapReport:
    """Gap between the two smallest eigenvalues and positivity of the first field."""
    if len(results) < 2:
        raise ValueError("need at least two results")
    if not all(r.converged for r in results):
        raise ValueError("unconverged result passed to isolation_gap")
    g0 = results[0].grid
    if any(r.n != g0.n or r.R != g0.R for r in results):
        raise ValueError("results come from different grids")
    rs = sorted(results, key=lambda r: r.eigenvalue)
    first = rs[0]
    v = first.field.values
    interior = v[:-1] if first.field.dirichlet_at_R else v
    if np.mean(interior) < 0:
        interior = -interior
    gap = rs[1].eigenvalue - first.eigenvalue
    report = GapReport(first.eigenvalue, rs[1].eigenvalue, gap, float(np.min(interior)), threshold)
    first.diagnostics["gap_to_next"] = gap
    if not gap > threshold:
        raise IsolationError(f"eigenvalue gap {gap:.6g} does not exceed {threshold:.3g}")
    if not report.min_interior > 0:
        raise IsolationError("principal eigenfunction changes sign")
    return report


@dataclass(frozen=True)
class Branch:
    index: int
    values: tuple
    ratios: tuple
    limit: float
    closed: bool
    reason: str = ""


@dataclass(frozen=True)
class ClosednessVerdict:
    closed: bool
    branches: tuple

    @property
    def failing(self) -> list:
        return [b.index for b in self.branches if not b.closed]

    def to_dict(self) -> dict:
        return {"closed": self.closed,
                "branches": [dict(b.__dict__, values=list(b.values), ratios=list(b.ratios))
                             for b in self.branches]}


def _branch(index, vals, min_ratio, rtol):
    vals = np.asarray(vals, dtype=float)
    d = np.diff(vals)
    scale = max(abs(vals[-1]), 1e-300)
    if np.all(np.abs(d) <= 1e-12 * scale):
        return Branch(index, tuple(vals), (), float(vals[-1]), True, "constant")
    if np.any(d == 0) or not (np.all(d > 0) or np.all(d < 0)):
        return Branch(index, tuple(vals), (), math.nan, False, "differences change sign")
    ratios = d[:-1] / d[1:]
    if np.any(ratios < min_ratio):
        return Branch(index, tuple(vals), tuple(ratios), math.nan, False, "no geometric contraction")
    rho = ratios[-1]
    limit = float(vals[-1] + d[-1] / (rho - 1.0))
    if abs(limit - vals[-1]) > rtol * abs(limit):
        return Branch(index, tuple(vals), tuple(ratios), limit, False,
                      "limit not reproduced on the finest grid")
    return Branch(index, tuple(vals), tuple(ratios), limit, True)


def closedness_check(family: Sequence[Sequence], min_ratio: float = 1.5,
                     rtol: float = 1e-2) -> ClosednessVerdict:
    """Each eigenvalue branch must contract geometrically under refinement.

    ``family[j][k]`` is the k-th eigenvalue (float or EigenResult) on the j-th
    refinement level.
    """
    if len(family) < 3:
        raise ValueError("need at least 3 refinement levels")
    k = min(len(level) for level in family)
    if k == 0:
        raise ValueError("empty refinement level")
    table = [[float(getattr(x, "eigenvalue", x)) for x in level[:k]] for level in family]
    branches = tuple(_branch(i, [row[i] for row in table], min_ratio, rtol) for i in range(k))
    return ClosednessVerdict(all(b.closed for b in branches), branches)
