"""Radial weights: evaluation, admissibility and weighted inequalities.

A weight is a radial function g on {|x| > 1}.  Every spec knows its own
behaviour at infinity, ``|g(r)| ~ coef * r**-q * log(r)**-m``, so divergence
of the integrals below is decided analytically and only the convergent part
is done by quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from .radialfem import (
    DiscreteField,
    energy_G,
    energy_J,
    log_grid,
    lp_norm_p,
)
from .rearrange import (
    DivergenceError,
    ExponentContext,
    LorentzIndex,
    RadialTail,
    RearrangedFunction,
    SampledFunction,
    ball_volume,
    lorentz_norm,
    power_tail,
)


class Asymptotics(NamedTuple):
    """|g(r)| ~ coef * r**-q * log(r)**-m as r -> inf; coef = 0 for compact support."""

    coef: float
    q: float
    m: float = 0.0


COMPACT = Asymptotics(0.0, math.inf, 0.0)


class WeightSpec:
    kind = "abstract"

    def evaluate(self, r, p: float) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, r, p: Optional[float] = None):
        return self.evaluate(r, p)

    def breakpoints(self) -> list:
        """Radii where the weight is not smooth."""
        return []

    def asymptotics(self, p: float) -> Asymptotics:
        raise NotImplementedError

    def scaled(self, c: float) -> "WeightSpec":
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __mul__(self, c):
        return self.scaled(float(c))

    __rmul__ = __mul__


@dataclass(frozen=True)
class PowerLaw(WeightSpec):
    """c * r**-q for r > r0, zero otherwise."""

    c: float
    q: float
    r0: float = 1.0
    kind = "power"

    def __post_init__(self):
        if self.r0 < 1:
            raise ValueError("r0 must be >= 1")

    def evaluate(self, r, p=None):
        r = np.asarray(r, dtype=float)
        return np.where(r > self.r0, self.c * r ** (-self.q), 0.0) if self.r0 > 1 else self.c * r ** (-self.q)

    def breakpoints(self):
        return [self.r0] if self.r0 > 1 else []

    def asymptotics(self, p):
        return Asymptotics(abs(self.c), self.q) if self.c else COMPACT

    def scaled(self, c):
        return PowerLaw(self.c * c, self.q, self.r0)

    def to_dict(self):
        return {"kind": self.kind, "c": self.c, "q": self.q, "r0": self.r0}


@dataclass(frozen=True)
class PowerLog(WeightSpec):
    """c * r**-p / log(r) for r > r0 > 1; p comes from the context."""

    c: float = 1.0
    r0: float = 2.0
    kind = "powerlog"

    def __post_init__(self):
        if not self.r0 > 1:
            raise ValueError("r0 must exceed 1 (log r vanishes at 1)")

    def evaluate(self, r, p=None):
        if p is None:
            raise ValueError("PowerLog needs the exponent p")
        r = np.asarray(r, dtype=float)
        safe = np.maximum(r, self.r0)
        return np.where(r > self.r0, self.c * safe ** (-p) / np.log(safe), 0.0)

    def breakpoints(self):
        return [self.r0]

    def asymptotics(self, p):
        return Asymptotics(abs(self.c), p, 1.0) if self.c else COMPACT

    def scaled(self, c):
        return PowerLog(self.c * c, self.r0)

    def to_dict(self):
        return {"kind": self.kind, "c": self.c, "r0": self.r0}


@dataclass(frozen=True)
class Piecewise(WeightSpec):
    """Constant values on intervals (a, b); b may be inf."""

    pieces: tuple

    kind = "piecewise"

    def __post_init__(self):
        pcs = tuple((float(a), float(b), float(v)) for a, b, v in self.pieces)
        for a, b, _ in pcs:
            if not b > a:
                raise ValueError("piece intervals must have b > a")
        object.__setattr__(self, "pieces", pcs)

    def evaluate(self, r, p=None):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for a, b, v in self.pieces:
            out = out + np.where((r > a) & (r <= b), v, 0.0)
        return out

    def breakpoints(self):
        return sorted({x for a, b, _ in self.pieces for x in (a, b) if math.isfinite(x) and x > 1})

    def asymptotics(self, p):
        far = sum(v for _, b, v in self.pieces if b == math.inf)
        return Asymptotics(abs(far), 0.0) if far else COMPACT

    def scaled(self, c):
        return Piecewise(tuple((a, b, c * v) for a, b, v in self.pieces))

    def to_dict(self):
        return {"kind": self.kind, "pieces": [list(pc) for pc in self.pieces]}


@dataclass(frozen=True, eq=False)
class Sampled(WeightSpec):
    """Linear interpolation of a radial table, power tail r**-tail_decay beyond it."""

    radii: np.ndarray
    values: np.ndarray
    tail_decay: float

    kind = "sampled"

    def __post_init__(self):
        r = np.array(self.radii, dtype=float)
        v = np.array(self.values, dtype=float)
        if r.shape != v.shape or r.ndim != 1 or len(r) < 2:
            raise ValueError("radii and values must be 1-d of equal length >= 2")
        if np.any(np.diff(r) <= 0):
            raise ValueError("radii must be strictly increasing")
        if r[0] > 1:
            raise ValueError("table must start at r <= 1")
        r.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "values", v)

    def evaluate(self, r, p=None):
        r = np.asarray(r, dtype=float)
        inside = np.interp(r, self.radii, self.values)
        rl = self.radii[-1]
        with np.errstate(divide="ignore"):
            tail = self.values[-1] * (np.maximum(r, rl) / rl) ** (-self.tail_decay)
        return np.where(r <= rl, inside, tail)

    def breakpoints(self):
        return [float(x) for x in self.radii if x > 1]

    def asymptotics(self, p):
        v = self.values[-1]
        if v == 0:
            return COMPACT
        return Asymptotics(abs(v) * self.radii[-1] ** self.tail_decay, self.tail_decay)

    def scaled(self, c):
        return Sampled(self.radii, c * self.values, self.tail_decay)

    def to_dict(self):
        return {"kind": self.kind, "radii": self.radii.tolist(), "values": self.values.tolist(),
                "tail_decay": self.tail_decay}


@dataclass(frozen=True)
class SignedSum(WeightSpec):
    terms: tuple

    kind = "sum"

    def __post_init__(self):
        if not self.terms:
            raise ValueError("empty sum")
        object.__setattr__(self, "terms", tuple(self.terms))

    def evaluate(self, r, p=None):
        return sum(t.evaluate(r, p) for t in self.terms)

    def breakpoints(self):
        return sorted({b for t in self.terms for b in t.breakpoints()})

    def asymptotics(self, p):
        # the slowest-decaying terms dominate; signed coefficients may cancel
        groups = {}
        for t in self.terms:
            a = t.asymptotics(p)
            if a.coef == 0:
                continue
            sign = 1.0 if _far_sign(t, p) > 0 else -1.0
            groups[(a.q, a.m)] = groups.get((a.q, a.m), 0.0) + sign * a.coef
        for key in sorted(groups):
            if groups[key] != 0:
                return Asymptotics(abs(groups[key]), key[0], key[1])
        return COMPACT

    def scaled(self, c):
        return SignedSum(tuple(t.scaled(c) for t in self.terms))

    def to_dict(self):
        return {"kind": self.kind, "terms": [t.to_dict() for t in self.terms]}


def _far_sign(w: WeightSpec, p: float) -> float:
    r = 1e6 * max([1.0] + w.breakpoints())
    return float(np.sign(w.evaluate(np.array([r]), p)[0]))


def weight_from_dict(d: dict) -> WeightSpec:
    kind = d.get("kind")
    if kind == "power":
        return PowerLaw(float(d["c"]), float(d["q"]), float(d.get("r0", 1.0)))
    if kind == "powerlog":
        return PowerLog(float(d.get("c", 1.0)), float(d.get("r0", 2.0)))
    if kind == "piecewise":
        return Piecewise(tuple(tuple(pc) for pc in d["pieces"]))
    if kind == "sampled":
        return Sampled(np.asarray(d["radii"]), np.asarray(d["values"]), float(d["tail_decay"]))
    if kind == "sum":
        return SignedSum(tuple(weight_from_dict(t) for t in d["terms"]))
    raise ValueError(f"unknown weight kind: {kind!r}")


# ---------------------------------------------------------------------------
# g-tilde and integrals


@dataclass(frozen=True)
class AbsProfile:
    """r -> |g(r)|, the radial majorant of a radial weight."""

    weight: WeightSpec

    def evaluate(self, r, p=None):
        return np.abs(self.weight.evaluate(r, p))

    def __call__(self, r, p=None):
        return self.evaluate(r, p)

    def breakpoints(self):
        return self.weight.breakpoints()

    def asymptotics(self, p):
        return self.weight.asymptotics(p)


def g_tilde(w: WeightSpec) -> AbsProfile:
    return AbsProfile(w)


def _tail_converges(a: Asymptotics, k: float, log_power: float = 0.0) -> bool:
    """Does the integral of r**k * log(r)**log_power * |g| converge at infinity?"""
    if a.coef == 0:
        return True
    e = k - a.q
    if e != -1:
        return e < -1
    return a.m - log_power > 1


FAR_LOG = 40.0


def _integrate_profile(fun, breaks: Sequence[float], far=None, start: float = 1.0) -> float:
    """Integral of fun over (start, inf), split at the breakpoints.

    ``far(u)`` is the asymptotic integrand in u = log r (Jacobian included);
    it replaces fun beyond r = e^FAR_LOG times the last breakpoint, where
    slowly decaying r^-1 log^-m tails would otherwise defeat quadrature.
    """
    pts = sorted({start, *[b for b in breaks if b > start]})
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        total += integrate.quad(fun, a, b, limit=400, epsrel=1e-12, epsabs=0)[0]
    u0 = math.log(pts[-1])
    u1 = u0 + FAR_LOG
    g = lambda u: fun(math.exp(u)) * math.exp(u)
    for lo in np.arange(u0, u1, 5.0):
        total += integrate.quad(g, lo, min(lo + 5.0, u1), limit=400, epsrel=1e-12, epsabs=0)[0]
    if far is not None:
        total += integrate.quad(far, u1, math.inf, limit=400, epsrel=1e-12, epsabs=0)[0]
    if not math.isfinite(total):
        raise ValueError("non-integrable local singularity")
    return total


def _far(a: Asymptotics, k: float, log_power: float = 0.0, shift: float = 0.0):
    """u -> coef e^((k+1-q)u) u^(-m) (shift + u)^log_power: asymptotic integrand in u = log r."""
    if a.coef == 0:
        return None
    e = k + 1 - a.q
    return lambda u: a.coef * math.exp(e * u) * u ** (-a.m) * (shift + u) ** log_power


def x_norm(w: WeightSpec, ctx: ExponentContext) -> float:
    """Norm of g-tilde in the weighted L^1 space X; +inf when it diverges."""
    N, p = ctx.N, ctx.p
    a = w.asymptotics(p)
    if N != p:
        if not _tail_converges(a, p - 1):
            return math.inf
        if isinstance(w, PowerLaw):
            # closed form of the integral of c r^(p-1-q) over (r0, inf)
            return abs(w.c) * w.r0 ** (p - w.q) / (w.q - p) if w.c else 0.0
        fun = lambda r: float(abs(w.evaluate(r, p))) * r ** (p - 1)
        far = _far(a, p - 1)
    else:
        if not _tail_converges(a, N - 1, N - 1):
            return math.inf
        fun = lambda r: float(abs(w.evaluate(r, p))) * (r * (1 + math.log(r))) ** (N - 1)
        far = _far(a, N - 1, N - 1, 1.0)
    return _integrate_profile(fun, w.breakpoints(), far)


def lebesgue_norm(w: WeightSpec, ctx: ExponentContext) -> float:
    """||g||_{L^{N/p}} over {|x| > 1} (surface factor included); +inf if divergent."""
    N, p = ctx.N, ctx.p
    s = N / p
    a = w.asymptotics(p)
    scaled = Asymptotics(a.coef**s, a.q * s, a.m * s)
    if not _tail_converges(scaled, N - 1):
        return math.inf
    fun = lambda r: float(abs(w.evaluate(r, p))) ** s * r ** (N - 1)
    val = N * ball_volume(N) * _integrate_profile(fun, w.breakpoints(), _far(scaled, N - 1))
    return val ** (1.0 / s)


# ---------------------------------------------------------------------------
# weak Lorentz norm


GENERIC_CELLS = 4000


def _lorentz_representation(w: WeightSpec, ctx: ExponentContext, r_min: float = 1.0) -> SampledFunction:
    """|g| restricted to {|x| > r_min} as cells plus an analytic tail."""
    N, p = ctx.N, ctx.p
    empty = np.array([]), np.array([])
    if isinstance(w, PowerLaw):
        if w.c == 0:
            return SampledFunction(*empty)
        return SampledFunction(*empty, power_tail(abs(w.c), w.q, N, max(w.r0, r_min)))
    if isinstance(w, PowerLog):
        c, r0 = abs(w.c), max(w.r0, r_min)

        def prof(r, c=c, p=p):
            r = np.asarray(r, dtype=float)
            return c * r ** (-p) / np.log(r)

        return SampledFunction(*empty, RadialTail(prof, N, r0, p, 1.0))
    a = w.asymptotics(p)
    brk = [b for b in w.breakpoints() if b > r_min]
    r_cut = max([r_min * 2.0] + brk) * 1e3
    edges = np.geomspace(r_min, r_cut, GENERIC_CELLS + 1)
    edges = np.unique(np.concatenate([edges, brk]))
    cells = SampledFunction.from_radial(lambda r: np.abs(w.evaluate(r, p)), edges, N)
    keep = cells.values != 0
    tail = None
    if a.coef != 0:
        if a.q <= 0:
            raise DivergenceError("weight does not decay at infinity")
        prof = lambda r, w=w, p=p: np.abs(w.evaluate(np.asarray(r, dtype=float), p))
        coef = a.coef if a.m == 0 else None
        tail = RadialTail(prof, N, r_cut, a.q, a.m, coef)
    return SampledFunction(cells.values[keep], cells.measures[keep], tail)


def weak_norm(w: WeightSpec, ctx: ExponentContext) -> float:
    """||g||_{(N/p, inf)} over {|x| > 1}, built from the maximal function g**."""
    if not ctx.N > ctx.p:
        raise ValueError("the weak Lorentz norm is used only for N > p")
    a = w.asymptotics(ctx.p)
    if a.coef != 0 and (a.q < ctx.p or (a.q == ctx.p and a.m < 0)):
        return math.inf
    try:
        f = _lorentz_representation(w, ctx)
    except DivergenceError:
        return math.inf
    return lorentz_norm(f, LorentzIndex(ctx.N / ctx.p))


def f_space_truncation_test(w: WeightSpec, ctx: ExponentContext, R_list: Sequence[float]) -> list:
    """[(R, ||g 1_{|x|>R}||_{(N/p,inf)})]: decay toward 0 is necessary for F membership."""
    if not ctx.N > ctx.p:
        raise ValueError("the truncation test is used only for N > p")
    out = []
    for R in R_list:
        if R < 1:
            raise ValueError("truncation radii must be >= 1")
        f = _lorentz_representation(w, ctx, float(R))
        val = lorentz_norm(f, LorentzIndex(ctx.N / ctx.p)) if (len(f.values) or f.tail) else 0.0
        out.append((float(R), float(val)))
    return out


# ---------------------------------------------------------------------------
# admissibility


DEFAULT_TRUNCATION_RADII = tuple(float(2**k) for k in range(1, 21, 2))


def gplus_nontrivial(w: WeightSpec, p: float, samples: int = 20000) -> bool:
    """Does g take positive values on a set of positive measure?  Decided by sampling."""
    r = np.geomspace(1.0, 1e8, samples)
    brk = np.asarray(w.breakpoints() or [1.0])
    extra = np.concatenate([brk * (1 + 1e-9), brk * (1 - 1e-9)])
    r = np.concatenate([r, extra[extra > 1]])
    return bool(np.any(w.evaluate(r, p) > 0))


@dataclass
class AdmissibilityReport:
    x_norm: float
    x_space_label: str
    weak_norm: Optional[float]
    truncation_curve: list
    class_A: bool
    reason: str
    route: Optional[str]
    gplus_nontrivial: bool
    lebesgue_norm: Optional[float] = None
    threshold: float = 1e-3
    weight: dict = field(default_factory=dict)
    N: int = 0
    p: float = 0.0

    @property
    def x_divergent(self) -> bool:
        return not math.isfinite(self.x_norm)

    def to_dict(self) -> dict:
        return {
            "weight": self.weight,
            "N": self.N,
            "p": self.p,
            "x_norm": self.x_norm,
            "x_divergent": self.x_divergent,
            "x_space_label": self.x_space_label,
            "weak_norm": self.weak_norm,
            "lebesgue_norm": self.lebesgue_norm,
            "truncation_curve": [list(pt) for pt in self.truncation_curve],
            "threshold": self.threshold,
            "class_A": self.class_A,
            "route": self.route,
            "reason": self.reason,
            "gplus_nontrivial": self.gplus_nontrivial,
        }


def class_A_verdict(w: WeightSpec, ctx: ExponentContext,
                    R_list: Sequence[float] = DEFAULT_TRUNCATION_RADII,
                    threshold: float = 1e-3) -> AdmissibilityReport:
    """Admissibility through X, through L^{N/p} (contained in F), or the truncation heuristic."""
    N, p = ctx.N, ctx.p
    gp = gplus_nontrivial(w, p)
    xn = x_norm(w, ctx)
    wn = leb = None
    curve = []
    if N > p:
        wn = weak_norm(w, ctx)
        leb = lebesgue_norm(w, ctx)
        if math.isfinite(wn):
            curve = f_space_truncation_test(w, ctx, R_list)
    route, reason = None, ""
    if not gp:
        reason = "positive part of g vanishes (g+ = 0)"
    elif math.isfinite(xn):
        route, reason = "X", f"g-tilde has finite X norm {xn:.6g}"
    elif N > p and leb is not None and math.isfinite(leb):
        route, reason = "L^{N/p}", f"g lies in L^(N/p) (norm {leb:.6g}), a subspace of F_(N/p)"
    elif N > p and curve and curve[-1][1] < threshold * wn:
        route, reason = "F-truncation", "truncated weak norms decay below threshold (heuristic)"
    elif N > p and wn is not None and not math.isfinite(wn):
        reason = "X norm and weak Lorentz norm both diverge"
    else:
        reason = "X norm diverges and no F_(N/p) route applies"
    return AdmissibilityReport(
        xn, ctx.regime, wn, curve, route is not None, reason, route, gp, leb, threshold,
        w.to_dict(), N, p,
    )


# ---------------------------------------------------------------------------
# Muckenhoupt constant


@dataclass(frozen=True)
class PowerProfile:
    """v(s) = coef * s**exponent on (0, inf)."""

    coef: float
    exponent: float

    def __post_init__(self):
        if not self.coef > 0:
            raise ValueError("v must be positive")

    def __call__(self, s):
        return self.coef * np.asarray(s, dtype=float) ** self.exponent

    def upper_integral(self, t: float, power: float) -> float:
        """Integral of v**power over (t, inf)."""
        k = self.exponent * power
        if k >= -1:
            return math.inf
        return self.coef**power * t ** (k + 1) / -(k + 1)


class MuckenhouptResult(NamedTuple):
    A: float
    hardy_constant: float
    t_star: float


def _lower_integral(u, t: float) -> float:
    if hasattr(u, "integral"):
        return float(u.integral(t))
    return float(integrate.quad(u, 0.0, t, limit=400)[0])


def _upper_integral(v, t: float, power: float) -> float:
    if hasattr(v, "upper_integral"):
        return v.upper_integral(t, power)
    val, _ = integrate.quad(lambda s: float(v(s)) ** power, t, math.inf, limit=400)
    return float(val)


def muckenhoupt_A(u, v, p: float, t_range=(1e-6, 1e6), npts: int = 10_000) -> MuckenhouptResult:
    """A = sup_t (int_0^t u)^(1/p) (int_t^inf v^(1-p'))^(1/p') and the Hardy constant."""
    if not p > 1:
        raise ValueError("p must exceed 1")
    pc = p / (p - 1)

    def F(t):
        U = _lower_integral(u, t)
        if U == 0:
            return 0.0
        V = _upper_integral(v, t, 1.0 - pc)
        if not (math.isfinite(U) and math.isfinite(V)):
            return math.inf
        return U ** (1.0 / p) * V ** (1.0 / pc)

    ts = np.geomspace(t_range[0], t_range[1], npts)
    vals = np.array([F(t) for t in ts])
    if np.all(np.isinf(vals)):
        return MuckenhouptResult(math.inf, math.inf, math.nan)
    if np.all(vals == 0):
        return MuckenhouptResult(0.0, 0.0, math.nan)
    if np.any(np.isinf(vals)):
        return MuckenhouptResult(math.inf, math.inf, float(ts[np.argmax(np.isinf(vals))]))
    k = int(np.argmax(vals))
    best, t_star = float(vals[k]), float(ts[k])
    la, lb = math.log(ts[max(k - 1, 0)]), math.log(ts[min(k + 1, npts - 1)])
    if lb > la:
        res = optimize.minimize_scalar(lambda x: -F(math.exp(x)), bounds=(la, lb),
                                       method="bounded", options={"xatol": 1e-12})
        if -res.fun > best:
            best, t_star = float(-res.fun), float(math.exp(res.x))
    hc = p ** (1.0 / p) * pc ** (1.0 / pc) * best
    return MuckenhouptResult(best, hc, t_star)


def muckenhoupt_closed_form(ctx: ExponentContext, g_weak_norm: float) -> float:
    """A for u = g*, v(s) = s^(p - p/N): (N(p-1)/(N-p))^(1/p') ||g||^(1/p)."""
    N, p = ctx.N, ctx.p
    pc = ctx.p_conj
    return (N * (p - 1) / (N - p)) ** (1.0 / pc) * g_weak_norm ** (1.0 / p)


def hardy_weight_rearrangement(ctx: ExponentContext) -> RearrangedFunction:
    """g* for g = |x|^-p on R^N: (omega / s)^(p/N)."""
    return RearrangedFunction.power(ctx.omega ** (ctx.p / ctx.N), ctx.p / ctx.N)


def hardy_weight_norm(ctx: ExponentContext) -> float:
    """||  |x|^-p  ||_{(N/p, inf)} on R^N = N omega^(p/N) / (N - p)."""
    return ctx.N * ctx.omega ** (ctx.p / ctx.N) / (ctx.N - ctx.p)


# ---------------------------------------------------------------------------
# inequality verification


@dataclass
class RatioReport:
    ratios: list
    sup: float
    constant: float
    holds: bool
    worst_index: int
    rtol: float
    suite: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"suite": self.suite, "ratios": list(self.ratios), "sup": self.sup,
                "constant": self.constant, "holds": self.holds, "worst_index": self.worst_index,
                "rtol": self.rtol, **self.extra}


def hardy_sobolev_constant(w: WeightSpec, ctx: ExponentContext) -> float:
    """Best-known constant C with int g|phi|^p <= C int |grad phi|^p."""
    N, p = ctx.N, ctx.p
    if not N > p:
        raise ValueError("Hardy-Sobolev needs N > p")
    if isinstance(w, PowerLaw) and w.q == p and w.r0 == 1.0:
        return abs(w.c) * (p / (N - p)) ** p
    ps = ctx.p_star
    return p * ps ** (p - 1) / (N**p * ctx.omega ** (p / N)) * weak_norm(w, ctx)


def verify_hardy_sobolev(family: Sequence[DiscreteField], w: WeightSpec, ctx: ExponentContext,
                         rtol: float = 1e-3, constant_override: Optional[float] = None) -> RatioReport:
    """int g|phi|^p / int |phi'|^p for each field against the Hardy-Sobolev constant."""
    if not ctx.N > ctx.p:
        raise ValueError("Hardy-Sobolev needs N > p")
    p = ctx.p
    C = hardy_sobolev_constant(w, ctx) if constant_override is None else float(constant_override)
    ratios = []
    for f in family:
        if f.values[-1] != 0:
            raise ValueError("fields must vanish at the outer radius")
        J = energy_J(f, f.grid, p)
        if not J > 0:
            raise ValueError("field with zero gradient energy")
        ratios.append(energy_G(f, f.grid, w, p) / J)
    if not ratios:
        raise ValueError("empty family")
    k = int(np.argmax(ratios))
    sup = float(ratios[k])
    return RatioReport(ratios, sup, C, sup <= C * (1 + rtol), k, rtol, "hardy-sobolev")


def truncated_power_family(ctx: ExponentContext, count: int = 50, log_R=(2.0, 40.0),
                           n: int = 4000) -> list:
    """phi = r^-a - R^-a with a = (N-p)/p on log-uniform R; near-extremals for Hardy-Sobolev."""
    a = (ctx.N - ctx.p) / ctx.p
    out = []
    for lr in np.linspace(log_R[0], log_R[1], count):
        R = math.exp(lr)
        g = log_grid(n, 1.0, R, ctx.N)
        v = g.nodes ** (-a) - R ** (-a)
        v[-1] = 0.0
        out.append(DiscreteField(v, g))
    return out


def _radial_mass(w, ctx: ExponentContext) -> float:
    """Integral of r^(N-1) g-tilde over (1, inf)."""
    N, p = ctx.N, ctx.p
    a = w.asymptotics(p)
    if not _tail_converges(a, N - 1):
        return math.inf
    fun = lambda r: float(abs(w.evaluate(r, p))) * r ** (N - 1)
    return _integrate_profile(fun, w.breakpoints(), _far(a, N - 1))


def verify_weighted_embedding(w: WeightSpec, ctx: ExponentContext, family: Sequence[DiscreteField],
                              rtol: float = 1e-6, constant_override: Optional[float] = None) -> RatioReport:
    """int g-tilde |phi|^p against the X-norm bound of the matching regime.

    N > p:  lhs <= ((p-1)/(N-p))^(p-1) x_norm ||phi||^p_{W^{1,p}}.
    N <= p: the pointwise bound 2^(p-1) (|phi(1)|^p m + C x_norm J) is checked per field,
            with m = int r^(N-1) g-tilde; the trace constant C1 with
            |phi(1)|^p <= C1 ||phi||^p_{W^{1,p}} is calibrated on the family and reported.
    """
    N, p = ctx.N, ctx.p
    xn = x_norm(w, ctx)
    if not math.isfinite(xn):
        raise ValueError("divergent X norm: the embedding bound does not apply")
    gt = g_tilde(w)
    ratios, extra = [], {"x_norm": xn}
    if N > p:
        C = ((p - 1) / (N - p)) ** (p - 1) if constant_override is None else float(constant_override)
        for f in family:
            lhs = energy_G(f, f.grid, gt, p)
            rhs = C * xn * (energy_J(f, f.grid, p) + lp_norm_p(f, f.grid, p))
            ratios.append(lhs / rhs if rhs > 0 else 0.0)
        extra["constant"] = C
    else:
        m = _radial_mass(w, ctx)
        if N < p:
            Cs = ((p - 1) / (p - N)) ** (p - 1)
        else:
            Cs = 1.0
        if constant_override is not None:
            Cs = float(constant_override)
        c1 = 0.0
        for f in family:
            J = energy_J(f, f.grid, p)
            L = lp_norm_p(f, f.grid, p)
            trace = abs(f.values[0]) ** p
            lhs = energy_G(f, f.grid, gt, p)
            rhs = 2 ** (p - 1) * (trace * m + Cs * xn * J)
            ratios.append(lhs / rhs if rhs > 0 else 0.0)
            if J + L > 0:
                c1 = max(c1, trace / (J + L))
        extra.update({"constant": Cs, "radial_mass": m, "trace_constant_calibrated": c1})
    k = int(np.argmax(ratios))
    sup = float(ratios[k])
    return RatioReport(ratios, sup, 1.0, sup <= 1.0 + rtol, k, rtol, "weighted-embedding", extra)
