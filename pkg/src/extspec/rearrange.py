"""Distribution functions, decreasing rearrangements and Lorentz norms.

Functions are represented by a finite list of level cells ``(value, measure)``
plus an optional radial tail ``r -> h(r)`` that is non-increasing on
``[r_start, inf)``.  Cells are handled by exact arithmetic (sort and
accumulate); the tail is inverted on the radius and integrated either in
closed form (pure power tails) or by adaptive quadrature.  Quantities that
diverge are returned as ``math.inf`` rather than truncated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

__all__ = [
    "DivergenceError",
    "ExponentContext",
    "LorentzIndex",
    "RadialTail",
    "SampledFunction",
    "RearrangedFunction",
    "ball_volume",
    "power_tail",
    "distribution",
    "decreasing_rearrangement",
    "maximal_function",
    "schwarz_symmetrization",
    "lorentz_quasinorm",
    "lorentz_norm",
    "check_hardy_littlewood",
    "check_polya_szego",
]

EXACT_RTOL = 1e-8
QUAD_RTOL = 1e-3


class DivergenceError(ArithmeticError):
    """An integral of the rearrangement is infinite."""


def ball_volume(N: int) -> float:
    """Lebesgue measure of the unit ball in R^N."""
    if N < 1:
        raise ValueError("dimension must be >= 1")
    # math.gamma is a Lanczos approximation, accurate to ~1e-15
    return math.pi ** (N / 2) / math.gamma(N / 2 + 1)


@dataclass(frozen=True)
class ExponentContext:
    N: int
    p: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        if not (1 < self.p < math.inf):
            raise ValueError(f"p must lie in (1, inf), got {self.p}")

    @property
    def p_star(self) -> Optional[float]:
        """Sobolev exponent Np/(N-p); None unless N > p."""
        if self.N <= self.p:
            return None
        return self.N * self.p / (self.N - self.p)

    @property
    def p_conj(self) -> float:
        return self.p / (self.p - 1)

    @property
    def N_conj(self) -> float:
        return self.N / (self.N - 1)

    @property
    def omega(self) -> float:
        return ball_volume(self.N)

    @property
    def regime(self) -> str:
        if self.N > self.p:
            return "subcritical"
        if self.N == self.p:
            return "critical"
        return "supercritical"


@dataclass(frozen=True)
class LorentzIndex:
    p: float
    q: float = math.inf

    def __post_init__(self):
        if not (1 < self.p < math.inf):
            raise ValueError(f"Lorentz p must lie in (1, inf), got {self.p}")
        if not self.q >= 1:
            raise ValueError(f"Lorentz q must be >= 1 or inf, got {self.q}")


@dataclass(frozen=True)
class RadialTail:
    """Radially non-increasing profile ``h`` on ``{|x| > r_start}`` in R^N.

    ``decay`` and ``log_decay`` describe the asymptotics
    ``h(r) ~ C r**-decay * log(r)**-log_decay``; they decide divergence.
    When ``coef`` is given the profile is exactly ``coef * r**-decay`` and
    every integral is done in closed form.
    """

    profile: Callable[[np.ndarray], np.ndarray]
    N: int
    r_start: float
    decay: float
    log_decay: float = 0.0
    coef: Optional[float] = None

    def __post_init__(self):
        if self.r_start < 0:
            raise ValueError("r_start must be >= 0")
        if self.decay <= 0 and not (self.coef is not None and self.coef == 0):
            raise ValueError("tail must decay (decay > 0)")
        if self.r_start == 0 and self.coef is None:
            raise ValueError("a tail starting at the origin must be an exact power")

    @property
    def exact(self) -> bool:
        return self.coef is not None and self.log_decay == 0

    @property
    def omega(self) -> float:
        return ball_volume(self.N)

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.exact:
            with np.errstate(divide="ignore"):
                return self.coef * r ** (-self.decay)
        return np.asarray(self.profile(r), dtype=float)

    @cached_property
    def top(self) -> float:
        if self.r_start == 0:
            return math.inf
        return float(self(self.r_start))

    def radius_for_level(self, s) -> np.ndarray:
        """Largest radius with h(r) > s (``r_start`` if none)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if self.exact:
            if self.coef == 0:
                return np.full_like(s, self.r_start)
            rho = (self.coef / s) ** (1.0 / self.decay)
            return np.maximum(rho, self.r_start)
        lo = np.full_like(s, self.r_start)
        hi = np.full_like(s, max(2.0 * self.r_start, 1.0))
        active = self(hi) > s
        for _ in range(2000):
            if not active.any():
                break
            hi[active] *= 2.0
            active = self(hi) > s
        else:
            raise DivergenceError("tail does not fall below the requested level")
        below = s >= self.top
        lo_l, hi_l = np.log(lo), np.log(hi)
        for _ in range(80):
            mid = 0.5 * (lo_l + hi_l)
            above = self(np.exp(mid)) > s
            lo_l = np.where(above, mid, lo_l)
            hi_l = np.where(above, hi_l, mid)
        rho = np.exp(0.5 * (lo_l + hi_l))
        rho[below] = self.r_start
        return rho

    def measure_between(self, ra, rb):
        return self.omega * (rb**self.N - ra**self.N)

    def mass(self, ra: float, rb: float) -> float:
        """Integral of h over the shell ra < |x| < rb."""
        if rb <= ra:
            return 0.0
        N, om = self.N, self.omega
        if self.exact:
            k = N - self.decay
            if k == 0:
                if ra == 0 or rb == math.inf:
                    return math.inf
                return N * om * self.coef * math.log(rb / ra)
            if (ra == 0 and k < 0) or (rb == math.inf and k > 0):
                return math.inf
            hi = 0.0 if rb == math.inf else rb**k
            lo = 0.0 if ra == 0 else ra**k
            return N * om * self.coef * (hi - lo) / k
        if rb == math.inf:
            k = N - self.decay
            if k > 0 or (k == 0 and self.log_decay <= 1):
                return math.inf
        val, _ = integrate.quad(
            lambda r: float(self(r)) * r ** (N - 1), ra, rb, limit=200
        )
        return N * om * val


def power_tail(coef: float, decay: float, N: int, r_start: float = 0.0) -> RadialTail:
    """Tail ``coef * r**-decay`` on ``|x| > r_start``."""
    if coef < 0:
        raise ValueError("tail values are absolute values; coef must be >= 0")

    def h(r, c=coef, q=decay):
        return c * np.asarray(r, dtype=float) ** (-q)

    return RadialTail(h, N, r_start, decay, 0.0, coef)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Level cells plus an optional decaying radial tail."""

    values: np.ndarray
    measures: np.ndarray
    tail: Optional[RadialTail] = None

    def __post_init__(self):
        v, m = _frozen(self.values), _frozen(self.measures)
        if v.shape != m.shape or v.ndim != 1:
            raise ValueError("values and measures must be 1-d arrays of equal length")
        if not np.all(np.isfinite(v)):
            raise ValueError("cell values must be finite")
        if np.any(~(m > 0)) or not np.all(np.isfinite(m)):
            raise ValueError("cell measures must be finite and positive")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "measures", m)

    @classmethod
    def from_cells(cls, cells: Sequence[tuple[float, float]], tail=None):
        cells = list(cells)
        v = [c[0] for c in cells]
        m = [c[1] for c in cells]
        return cls(np.array(v, dtype=float), np.array(m, dtype=float), tail)

    @classmethod
    def indicator(cls, measure: float, value: float = 1.0):
        return cls(np.array([value]), np.array([measure]))

    @classmethod
    def from_radial(cls, func, edges, N: int, tail=None):
        """Shell cells ``edges[i] < |x| < edges[i+1]`` valued at shell midpoints."""
        e = np.asarray(edges, dtype=float)
        mid = 0.5 * (e[1:] + e[:-1])
        meas = ball_volume(N) * (e[1:] ** N - e[:-1] ** N)
        vals = np.asarray(func(mid), dtype=float)
        return cls(vals, meas, tail)

    @property
    def total_measure(self) -> float:
        if self.tail is not None:
            return math.inf
        return float(self.measures.sum())

    def same_cells(self, other: "SampledFunction") -> bool:
        return self.measures.shape == other.measures.shape and np.array_equal(
            self.measures, other.measures
        )

    def __add__(self, other):
        if not isinstance(other, SampledFunction):
            return NotImplemented
        if self.tail is not None or other.tail is not None:
            raise ValueError("addition is defined for cell data only")
        if not self.same_cells(other):
            raise ValueError("addition needs a shared cell decomposition")
        return SampledFunction(self.values + other.values, self.measures)

    def __mul__(self, c):
        c = float(c)
        tail = self.tail
        if tail is not None:
            tail = _scaled_tail(tail, abs(c))
        return SampledFunction(self.values * c, self.measures, tail)

    __rmul__ = __mul__

    def lp_norm(self, p: float) -> float:
        if self.tail is not None:
            raise ValueError("use lorentz_quasinorm with q = p for tailed functions")
        return float((np.abs(self.values) ** p * self.measures).sum() ** (1 / p))


def _scaled_tail(tail: RadialTail, c: float) -> RadialTail:
    prof = tail.profile
    return RadialTail(
        lambda r: c * np.asarray(prof(r)),
        tail.N,
        tail.r_start,
        tail.decay,
        tail.log_decay,
        None if tail.coef is None else c * tail.coef,
    )


# ---------------------------------------------------------------------------
# distribution and rearrangement


def distribution(f: SampledFunction, s: float) -> float:
    """Measure of {|f| > s}."""
    if not s > 0:
        raise ValueError("distribution level must be positive")
    a = float(f.measures[np.abs(f.values) > s].sum())
    if f.tail is not None:
        rho = f.tail.radius_for_level(s)[0]
        a += float(f.tail.measure_between(f.tail.r_start, rho))
    return a


@dataclass(frozen=True, eq=False)
class RearrangedFunction:
    """Piecewise description of f* on (0, inf).

    Segment ``i`` covers ``[t0[i], t1[i])``.  Constant segments carry
    ``value[i]``; tail segments follow the tail profile at radius
    ``(r_start**N + (t - offset[i]) / omega)**(1/N)``.
    """

    t0: np.ndarray
    t1: np.ndarray
    is_tail: np.ndarray
    value: np.ndarray
    offset: np.ndarray
    tail: Optional[RadialTail] = None

    @classmethod
    def power(cls, coef: float, exponent: float) -> "RearrangedFunction":
        """f*(t) = coef * t**-exponent on (0, inf), exponent in (0, 1)."""
        # on R^1 the measure coordinate is t = 2r
        tail = power_tail(coef * 2.0 ** (-exponent), exponent, 1, 0.0)
        return cls(
            np.array([0.0]), np.array([math.inf]), np.array([True]),
            np.array([math.nan]), np.array([0.0]), tail,
        )

    @classmethod
    def constant(cls, c: float, length: float = math.inf):
        return cls(
            np.array([0.0]), np.array([float(length)]), np.array([False]),
            np.array([float(c)]), np.array([0.0]), None,
        )

    @property
    def breakpoints(self) -> np.ndarray:
        return np.append(self.t0, self.t1[-1]) if len(self.t0) else np.array([0.0])

    @property
    def values(self) -> np.ndarray:
        """Value at the start of each segment."""
        return np.array([self._seg_eval(i, t) for i, t in enumerate(self.t0)])

    @property
    def support_measure(self) -> float:
        return float(self.t1[-1]) if len(self.t1) else 0.0

    def _radius(self, i: int, t):
        tl = self.tail
        return (tl.r_start**tl.N + (np.asarray(t) - self.offset[i]) / tl.omega) ** (1.0 / tl.N)

    def _seg_eval(self, i: int, t):
        if self.is_tail[i]:
            return self.tail(self._radius(i, t))
        return np.full(np.shape(t), self.value[i]) if np.ndim(t) else self.value[i]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        idx = np.searchsorted(self.t0, t, side="right") - 1
        for i in np.unique(idx):
            if i < 0:
                continue
            sel = (idx == i) & (t < self.t1[i])
            if sel.any():
                out[sel] = self._seg_eval(int(i), t[sel])
        return out if out.ndim else float(out)

    def _seg_integral(self, i: int, a: float, b: float) -> float:
        if b <= a:
            return 0.0
        if not self.is_tail[i]:
            if b == math.inf:
                return 0.0 if self.value[i] == 0 else math.inf
            return float(self.value[i] * (b - a))
        ra = float(self._radius(i, a))
        rb = math.inf if b == math.inf else float(self._radius(i, b))
        return self.tail.mass(ra, rb)

    @cached_property
    def _cumulative(self) -> np.ndarray:
        seg = [self._seg_integral(i, self.t0[i], self.t1[i]) for i in range(len(self.t0))]
        return np.concatenate([[0.0], np.cumsum(seg)])

    def integral(self, t: float) -> float:
        """Integral of f* over (0, t)."""
        if t <= 0:
            return 0.0
        i = int(np.searchsorted(self.t0, t, side="right") - 1)
        if i < 0:
            return 0.0
        base = self._cumulative[i]
        return float(base + self._seg_integral(i, self.t0[i], min(t, self.t1[i])))


def decreasing_rearrangement(f: SampledFunction) -> RearrangedFunction:
    v = np.abs(f.values)
    keep = v > 0
    v, m = v[keep], f.measures[keep]
    order = np.argsort(-v, kind="stable")
    v, m = v[order], m[order]
    M = np.concatenate([[0.0], np.cumsum(m)])
    tail = f.tail
    if tail is not None and tail.exact and tail.coef == 0:
        tail = None
    t0, t1, kind, val, off = [], [], [], [], []

    if tail is None:
        for k in range(len(v)):
            t0.append(M[k]), t1.append(M[k + 1]), kind.append(False)
            val.append(v[k]), off.append(0.0)
        return RearrangedFunction(
            np.array(t0), np.array(t1), np.array(kind, dtype=bool),
            np.array(val), np.array(off), None,
        )

    rho = tail.radius_for_level(v) if len(v) else np.array([])
    r_prev = tail.r_start
    t = 0.0
    for k in range(len(v)):
        rk = float(rho[k])
        if rk > r_prev:
            dt = float(tail.measure_between(r_prev, rk))
            t0.append(t), t1.append(t + dt), kind.append(True)
            val.append(math.nan), off.append(M[k])
            t += dt
            r_prev = rk
        t0.append(t), t1.append(t + m[k]), kind.append(False)
        val.append(v[k]), off.append(0.0)
        t += m[k]
    t0.append(t), t1.append(math.inf), kind.append(True)
    val.append(math.nan), off.append(M[len(v)])
    return RearrangedFunction(
        np.array(t0), np.array(t1), np.array(kind, dtype=bool),
        np.array(val), np.array(off), tail,
    )


def _as_rearranged(f) -> RearrangedFunction:
    if isinstance(f, RearrangedFunction):
        return f
    return decreasing_rearrangement(f)


def maximal_function(fstar: RearrangedFunction, t: float) -> float:
    """Running average (1/t) * integral of f* over (0, t)."""
    if not t > 0:
        raise ValueError("t must be positive")
    val = fstar.integral(t)
    if not math.isfinite(val):
        raise DivergenceError(f"integral of f* over (0, {t}) diverges")
    return val / t


@dataclass(frozen=True)
class SymmetrizedProfile:
    """Radial decreasing profile x -> f*(omega_N |x|^N)."""

    fstar: RearrangedFunction
    N: int

    @property
    def radius(self) -> float:
        """Radius of the ball with the measure of the support."""
        return (self.fstar.support_measure / ball_volume(self.N)) ** (1.0 / self.N)

    def __call__(self, r):
        return self.fstar(ball_volume(self.N) * np.asarray(r, dtype=float) ** self.N)


def schwarz_symmetrization(f, ctx: ExponentContext) -> SymmetrizedProfile:
    return SymmetrizedProfile(_as_rearranged(f), ctx.N)


# ---------------------------------------------------------------------------
# Lorentz quasi-norms and norms


def _tail_limit(fs: RearrangedFunction, i: int, p: float, averaged: bool) -> float:
    """lim_{t->inf} t^{1/p} f*(t) (or f**(t)) on the last tail segment."""
    tl = fs.tail
    kappa = tl.decay / tl.N
    if averaged and kappa >= 1:
        return 0.0
    e = 1.0 / p - kappa
    if e > 0:
        return math.inf
    if e < 0 or tl.log_decay > 0:
        return 0.0
    if tl.log_decay < 0:
        return math.inf
    if tl.coef is not None:
        C = tl.coef
    else:
        rb = 1e12 * max(tl.r_start, 1.0)
        C = float(tl(rb)) * rb**tl.decay
    lim = C * tl.omega**kappa
    return lim / (1 - kappa) if averaged else lim


def _numeric_sup(fun, a: float, b: float, npts: int = 400) -> float:
    """Max of a scalar function on [a, b] (log grid + bounded Brent refinement)."""
    if a > 0:
        lo = a
    else:
        lo = 1e-14 if b == math.inf else b * 1e-14
    if b == math.inf:
        b = max(lo, 1.0) * 1e14
    if b <= lo:
        return float(fun(lo))
    ts = np.geomspace(lo, b, npts)
    with np.errstate(invalid="ignore", over="ignore"):
        vals = np.array([fun(t) for t in ts], dtype=float)
    if np.any(np.isinf(vals)):
        return math.inf
    k = int(np.nanargmax(vals))
    best = float(vals[k])
    la, lb = math.log(ts[max(k - 1, 0)]), math.log(ts[min(k + 1, npts - 1)])
    if lb > la:
        with np.errstate(invalid="ignore", over="ignore"):
            res = optimize.minimize_scalar(
                lambda u: -fun(math.exp(u)), bounds=(la, lb), method="bounded",
                options={"xatol": 1e-12},
            )
        if math.isfinite(res.fun):
            best = max(best, -float(res.fun))
    return best


def _origin_exponent(fs: RearrangedFunction) -> Optional[float]:
    """kappa with f*(t) ~ t^-kappa near 0 when the first segment is singular."""
    if len(fs.t0) and fs.is_tail[0] and fs.tail.r_start == 0:
        return fs.tail.decay / fs.tail.N
    return None


def _sup_quasi(fs: RearrangedFunction, p: float) -> float:
    k0 = _origin_exponent(fs)
    if k0 is not None and k0 > 1.0 / p:
        return math.inf
    best = 0.0
    for i in range(len(fs.t0)):
        a, b = fs.t0[i], fs.t1[i]
        if not fs.is_tail[i]:
            if fs.value[i] == 0:
                continue
            if b == math.inf:
                return math.inf
            best = max(best, fs.value[i] * b ** (1.0 / p))
            continue
        best = max(best, _numeric_sup(lambda t, i=i: t ** (1.0 / p) * fs._seg_eval(i, t), a, b))
        if b == math.inf:
            best = max(best, _tail_limit(fs, i, p, averaged=False))
    return float(best)


def _sup_norm(fs: RearrangedFunction, p: float) -> float:
    k0 = _origin_exponent(fs)
    if k0 is not None and (k0 >= 1 or k0 > 1.0 / p):
        return math.inf
    e = 1.0 / p - 1.0
    best = 0.0
    for i in range(len(fs.t0)):
        a, b = float(fs.t0[i]), float(fs.t1[i])
        F0 = fs._cumulative[i]
        if not fs.is_tail[i]:
            v = fs.value[i]
            if b == math.inf and v > 0:
                return math.inf
            cands = [b] if b < math.inf else []
            if a > 0:
                cands.append(a)
            if v > 0:
                tc = (p - 1) * (F0 - v * a) / v
                if a < tc < b:
                    cands.append(tc)
            for t in cands:
                F = F0 + v * (t - a)
                best = max(best, t**e * F)
            if b == math.inf and v == 0 and a > 0:
                best = max(best, a**e * F0)
            continue
        fun = lambda t, i=i, a=a, F0=F0: t**e * (F0 + fs._seg_integral(i, a, t))
        best = max(best, _numeric_sup(fun, a, b))
        if b == math.inf:
            best = max(best, _tail_limit(fs, i, p, averaged=True))
    return float(best)


def _quad(fun, a, b) -> float:
    val, _ = integrate.quad(fun, a, b, limit=400, epsrel=1e-10)
    return float(val)


def _tail_segment_converges(fs: RearrangedFunction, p: float, q: float, averaged: bool) -> bool:
    tl = fs.tail
    kappa = tl.decay / tl.N
    if averaged and kappa > 1:
        return True
    if kappa > 1.0 / p:
        return True
    return kappa == 1.0 / p and tl.log_decay * q > 1


def _integral_quasi(fs: RearrangedFunction, p: float, q: float) -> float:
    k0 = _origin_exponent(fs)
    if k0 is not None and k0 >= 1.0 / p:
        return math.inf
    total = 0.0
    for i in range(len(fs.t0)):
        a, b = float(fs.t0[i]), float(fs.t1[i])
        if not fs.is_tail[i]:
            v = fs.value[i]
            if v == 0:
                continue
            if b == math.inf:
                return math.inf
            total += v**q * (p / q) * (b ** (q / p) - a ** (q / p))
            continue
        if b == math.inf and not _tail_segment_converges(fs, p, q, averaged=False):
            return math.inf
        tl = fs.tail
        N, om, off = tl.N, tl.omega, fs.offset[i]
        ra = float(fs._radius(i, a))
        rb = math.inf if b == math.inf else float(fs._radius(i, b))

        def integrand(r):
            t = off + om * (r**N - tl.r_start**N)
            return t ** (q / p - 1) * float(tl(r)) ** q * N * om * r ** (N - 1)

        total += _quad(integrand, ra, rb)
    return total ** (1.0 / q)


def _integral_norm(fs: RearrangedFunction, p: float, q: float) -> float:
    k0 = _origin_exponent(fs)
    if k0 is not None and (k0 >= 1 or k0 >= 1.0 / p):
        return math.inf
    total = 0.0
    e = q / p - 1 - q
    for i in range(len(fs.t0)):
        a, b = float(fs.t0[i]), float(fs.t1[i])
        F0 = fs._cumulative[i]
        if not fs.is_tail[i]:
            v = fs.value[i]
            if v == 0:
                if b == math.inf and F0 > 0:
                    total += F0**q * a**(e + 1) / -(e + 1)
                continue
            if b == math.inf:
                return math.inf
            if a == 0:
                total += v**q * (p / q) * b ** (q / p)
            else:
                total += _quad(lambda t: t**e * (F0 + v * (t - a)) ** q, a, b)
            continue
        if b == math.inf and not _tail_segment_converges(fs, p, q, averaged=True):
            return math.inf
        fun = lambda t, i=i, a=a, F0=F0: t**e * (F0 + fs._seg_integral(i, a, t)) ** q
        if a == 0 and k0 is not None:
            # pure power near the origin: f** = f*/(1-kappa)
            kappa = fs.tail.decay / fs.tail.N
            fun0 = lambda t, i=i: t ** (q / p - 1) * (fs._seg_eval(i, t) / (1 - kappa)) ** q
            total += _quad(fun0, 0, b)
        else:
            total += _quad(fun, a, b)
    T = float(fs.t1[-1])
    if T < math.inf:
        # beyond the support f** = F(T)/t
        total += fs._cumulative[-1] ** q * T ** (e + 1) / -(e + 1)
    return total ** (1.0 / q)


def lorentz_quasinorm(f, idx: LorentzIndex) -> float:
    """|f|_(p,q): L^q norm of t^(1/p - 1/q) f*(t) on (0, inf)."""
    fs = _as_rearranged(f)
    if len(fs.t0) == 0:
        return 0.0
    if idx.q == math.inf:
        return _sup_quasi(fs, idx.p)
    return _integral_quasi(fs, idx.p, idx.q)


def lorentz_norm(f, idx: LorentzIndex) -> float:
    """||f||_(p,q): same construction with the maximal function f**."""
    fs = _as_rearranged(f)
    if len(fs.t0) == 0:
        return 0.0
    if idx.q == math.inf:
        return _sup_norm(fs, idx.p)
    return _integral_norm(fs, idx.p, idx.q)


# ---------------------------------------------------------------------------
# rearrangement inequalities


@dataclass(frozen=True)
class InequalityCheck:
    lhs: float
    rhs: float
    holds: bool

    def __iter__(self):
        return iter((self.lhs, self.rhs, self.holds))


def _product_integral(fs: RearrangedFunction, gs: RearrangedFunction) -> float:
    """Integral of f* g* for two cell-only rearrangements."""
    bps = np.union1d(fs.breakpoints, gs.breakpoints)
    bps = bps[np.isfinite(bps)]
    if len(bps) < 2:
        return 0.0
    mid = 0.5 * (bps[1:] + bps[:-1])
    return float(np.sum(fs(mid) * gs(mid) * np.diff(bps)))


def check_hardy_littlewood(f: SampledFunction, g: SampledFunction, rtol: float = EXACT_RTOL):
    """Integral of fg against the integral of f* g*."""
    if f.tail is not None or g.tail is not None:
        raise ValueError("Hardy-Littlewood check works on cell data")
    if not f.same_cells(g):
        raise ValueError("f and g must share the cell decomposition")
    if np.any(f.values < 0) or np.any(g.values < 0):
        raise ValueError("Hardy-Littlewood check needs nonnegative functions")
    lhs = float(np.sum(f.values * g.values * f.measures))
    rhs = _product_integral(decreasing_rearrangement(f), decreasing_rearrangement(g))
    return InequalityCheck(lhs, rhs, lhs <= rhs * (1 + rtol) + 1e-300)


def _radial_rearrangement_points(nodes, vals, N: int, sublevels: int):
    """Points (t_j, s_j) on the graph of phi* for a piecewise-linear radial |phi|.

    The field is extended by the constant vals[0] on the ball |x| < nodes[0].
    """
    om = ball_volume(N)
    a = np.abs(vals)
    levels = np.unique(a)
    fine = [levels]
    for k in range(1, sublevels):
        fine.append(levels[:-1] + (levels[1:] - levels[:-1]) * k / sublevels)
    levels = np.unique(np.concatenate(fine))
    r0, r1 = nodes[:-1], nodes[1:]
    v0, v1 = vals[:-1], vals[1:]
    t = np.empty_like(levels)
    for j, s in enumerate(levels):
        # each element: |linear| > s is the union of at most two sub-intervals
        meas = 0.0
        for sign in (1.0, -1.0):
            u0, u1 = sign * v0 - s, sign * v1 - s
            both = (u0 > 0) & (u1 > 0)
            meas += np.sum(r1[both] ** N - r0[both] ** N)
            cross = (u0 > 0) != (u1 > 0)
            if cross.any():
                lam = u0[cross] / (u0[cross] - u1[cross])
                rc = r0[cross] + lam * (r1[cross] - r0[cross])
                left = u0[cross] > 0
                meas += np.sum(np.where(left, rc**N - r0[cross] ** N, r1[cross] ** N - rc**N))
        if a[0] > s:
            meas += nodes[0] ** N
        t[j] = om * meas
    return t, levels


def check_polya_szego(phi, ctx: ExponentContext, sublevels: int = 16, rtol: float = QUAD_RTOL):
    """Gradient energy of the Schwarz symmetrization against that of phi.

    ``phi`` is a DiscreteField (or ``(nodes, values)``) of a radial
    piecewise-linear function on ``[r_0, R]`` vanishing at ``R``; inside
    ``|x| < r_0`` it is extended by the constant ``phi(r_0)``.  Both sides are
    true R^N integrals (surface factor included).
    """
    if hasattr(phi, "grid"):
        nodes, vals = phi.grid.nodes, phi.values
    else:
        nodes, vals = phi
    nodes = np.asarray(nodes, dtype=float)
    vals = np.asarray(vals, dtype=float)
    if vals[-1] != 0:
        raise ValueError("field must vanish at the outer radius (compact support)")
    N, p, om = ctx.N, ctx.p, ctx.omega
    h = np.diff(nodes)
    slope = np.diff(vals) / h
    rhs = float(N * om * np.sum(np.abs(slope) ** p * (nodes[1:] ** N - nodes[:-1] ** N) / N))
    if not np.any(vals):
        return InequalityCheck(0.0, rhs, True)
    t, s = _radial_rearrangement_points(nodes, vals, N, sublevels)
    # t decreases as s increases; walk in t-order
    order = np.argsort(t)
    t, s = t[order], s[order]
    dt = np.diff(t)
    ok = dt > 0
    d = (s[1:] - s[:-1])[ok] / dt[ok]
    ta, tb = t[:-1][ok], t[1:][ok]
    k = p - p / N + 1
    lhs = float(N**p * om ** (p / N) * np.sum(np.abs(d) ** p * (tb**k - ta**k) / k))
    return InequalityCheck(lhs, rhs, lhs <= rhs * (1 + rtol) + 1e-14)
