"""Stable and unstable curves, periodic points and attractor points of T_c.

Points of the plane are located by their height sequences: along a
transversal the rotation number is monotone, so bisection with the
continued-fraction order finds the point whose expansion follows a target
word.  Finite words are extended periodically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import kernels as K
from ._pool import pmap
from .errors import (
    CombinatoricsMismatch,
    DomainViolation,
    NoConvergence,
    NoIntersection,
    PrefixUnreachable,
    RenormError,
    ToleranceStall,
    UnsupportedBreak,
)
from .hyperbolicity import jet_T
from .mobius import Params, TangentVector, in_cone
from .renorm import (
    A_MIN,
    B_MIN,
    DEFAULT_R_CAP,
    INF,
    involution_I,
    renormalize_T,
    rotation_number,
)

MAX_DEPTH = 120


# -- symbols --------------------------------------------------------------------

@dataclass(frozen=True)
class SymbolWindow:
    """Finite view (..., r_-2, r_-1 | r_0, r_1, ...) of a bi-infinite height sequence.

    Outside the stored entries each side repeats periodically.
    """
    backward: tuple
    forward: tuple
    bound: Optional[int] = None

    def __post_init__(self):
        b, f = tuple(int(x) for x in self.backward), tuple(int(x) for x in self.forward)
        if not f or not b:
            raise ValueError("both sides of a window need at least one entry")
        if min(b + f) < 1:
            raise ValueError("window entries must be >= 1")
        if self.bound is not None and max(b + f) > self.bound:
            raise ValueError(f"entry above bound {self.bound}")
        object.__setattr__(self, "backward", b)
        object.__setattr__(self, "forward", f)

    def entry(self, i: int) -> int:
        if i >= 0:
            return self.forward[i % len(self.forward)]
        k = (-i - 1) % len(self.backward)
        return self.backward[len(self.backward) - 1 - k]

    def shift(self, k: int) -> "SymbolWindow":
        """sigma^k, keeping the stored lengths."""
        lb, lf = len(self.backward), len(self.forward)
        return SymbolWindow(tuple(self.entry(i + k) for i in range(-lb, 0)),
                            tuple(self.entry(i + k) for i in range(lf)), self.bound)

    def dual(self) -> "SymbolWindow":
        """Window read in reverse time (forward <-> reversed backward)."""
        return SymbolWindow(tuple(reversed(self.forward)), tuple(reversed(self.backward)), self.bound)

    @property
    def backward_word(self):
        """(r_-1, r_-2, ...)."""
        return tuple(reversed(self.backward))

    @classmethod
    def periodic(cls, word, length: int = 24, bound=None):
        word = tuple(int(x) for x in word)
        n = max(length, len(word))
        fwd = tuple(word[i % len(word)] for i in range(n))
        bwd = tuple(word[i % len(word)] for i in range(-n, 0))
        return cls(bwd, fwd, bound)

    @classmethod
    def parse(cls, text: str, bound=None):
        """'fwd:2,1,2;bwd:1,2'."""
        parts = {}
        for chunk in text.split(";"):
            key, _, vals = chunk.partition(":")
            parts[key.strip()] = tuple(int(x) for x in vals.split(",") if x.strip())
        return cls(parts.get("bwd", ()), parts.get("fwd", ()), bound)

    def __str__(self):
        return "fwd:%s;bwd:%s" % (",".join(map(str, self.forward)), ",".join(map(str, self.backward)))


def random_window(rng, bound: int, length: int = 24) -> SymbolWindow:
    b = rng.integers(1, bound + 1, size=length)
    f = rng.integers(1, bound + 1, size=length)
    return SymbolWindow(tuple(b), tuple(f), bound)


def symbol_distance(s: SymbolWindow, t: SymbolWindow) -> float:
    """sum over shared indices of |1/s_i - 1/t_i| 2^-|i|."""
    nf = min(len(s.forward), len(t.forward))
    nb = min(len(s.backward), len(t.backward))
    return float(sum(abs(1.0 / s.entry(i) - 1.0 / t.entry(i)) * 2.0 ** (-abs(i))
                     for i in range(-nb, nf)))


def symbol_distance_bound(s: SymbolWindow, t: SymbolWindow) -> float:
    """Upper bound for the contribution of the indices outside both windows."""
    nf = min(len(s.forward), len(t.forward))
    nb = min(len(s.backward), len(t.backward))
    return 2.0 ** (1 - nf) + 2.0 ** (-nb)


# -- transversals ---------------------------------------------------------------

def _check_c(c):
    if c == 1.0:
        raise UnsupportedBreak("c = 1")
    if not 0.5 < c < 2.0:
        raise UnsupportedBreak(f"c = {c} outside (0.5, 2)")


@dataclass(frozen=True)
class Transversal:
    """t -> (a(t), v(t)); the rotation number is non-decreasing in t.

    ``vertical``: v = const, t = a (c > 1).  ``exponential``: a = a0 exp(v/c),
    t = v (c < 1).
    """
    c: float
    kind: str
    level: float
    t_lo: float
    t_hi: float

    def point(self, t):
        if self.kind == "vertical":
            return (t, self.level)
        return (self.level * math.exp(t / self.c), t)

    def tangent(self, t):
        if self.kind == "vertical":
            return TangentVector(1.0, 0.0)
        a, _ = self.point(t)
        return TangentVector(a, self.c)

    def params(self, t):
        return Params.unchecked(*self.point(t), self.c)

    def check_tangents(self, n: int = 50, margin: float = 1e-10) -> bool:
        ts = np.linspace(self.t_lo, self.t_hi, n + 2)[1:-1]
        return all(in_cone(self.params(t), self.tangent(t), 401, margin).inside for t in ts)


EDGE = 1e-12


def transversal_family(c, anchor) -> Transversal:
    _check_c(c)
    a, v = float(anchor[0]), float(anchor[1])
    if c > 1.0:
        if not 0.0 <= v <= c - 1.0:
            raise DomainViolation(f"anchor v = {v} outside Delta_c", anchor)
        lo = max(0.0, c - 1.0 - v)
        return Transversal(c, "vertical", v, lo + max(EDGE, 4e-16 * c), c)
    a0 = a * math.exp(-v / c)
    hi = min(0.0, c * math.log(c / a0))
    lo = c - 1.0
    if not hi > lo:
        raise DomainViolation("transversal misses Delta_c", anchor)
    return Transversal(c, "exponential", a0, lo + EDGE, hi)


# -- bisection on a transversal -------------------------------------------------

def _target_array(target):
    if hasattr(target, "entries"):
        target = target.entries
    ent = [K.HEIGHT_INF if r == INF else int(r) for r in target]
    if not ent:
        raise ValueError("empty target")
    if any(r == K.HEIGHT_INF for r in ent[:-1]):
        raise ValueError("infinite entry before the end of the target")
    if any(r < 1 for r in ent if r != K.HEIGHT_INF):
        raise ValueError("target entries must be >= 1")
    return np.array(ent, dtype=np.int64), ent[-1] == K.HEIGHT_INF


def _bisect(cmp, lo, hi, terminated, tol):
    """Bisection for the monotone order function ``cmp`` (sign of rho - target)."""
    s_lo, s_hi = cmp(lo), cmp(hi)
    if s_lo == 2 or s_hi == 2:
        raise ToleranceStall("degenerate renormalisation at a transversal end")
    if s_lo > 0 or s_hi < 0:
        e = PrefixUnreachable("target outside the rotation range of the transversal")
        e.beyond = "lo" if s_lo > 0 else "hi"
        raise e
    lo_match, hi_match = s_lo == 0, s_hi == 0
    if not terminated and (lo_match or hi_match):
        return lo if lo_match else hi
    if terminated and lo_match and hi_match:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        s = cmp(mid)
        if s == 2:
            raise ToleranceStall(f"degenerate renormalisation at t = {mid!r}")
        if s < 0:
            lo = mid
        elif s > 0:
            hi = mid
        elif terminated:
            if lo_match:
                lo = mid
            elif hi_match:
                hi = mid
            else:
                return mid
        else:
            return mid
    if terminated:
        return lo if lo_match else hi if hi_match else 0.5 * (lo + hi)
    return 0.5 * (lo + hi)


def _verify_prefix(p: Params, tgt, terminated, depth, r_cap):
    cf = rotation_number(p, depth if not terminated else len(tgt), r_cap, strict=False)
    want = [INF if r == K.HEIGHT_INF else int(r) for r in tgt]
    if terminated:
        return list(cf.entries) == want
    need = [want[i % len(want)] for i in range(depth)]
    got = list(cf.entries[:depth])
    return got == need[: len(got)] and (len(got) == depth or cf.halted == "degenerate")


def solve_param(c, tr: Transversal, target, depth: int = 20, tol: float = 1e-12,
                r_cap: int = DEFAULT_R_CAP, maxdepth: int = MAX_DEPTH):
    """Transversal parameter of the point whose expansion follows ``target``."""
    tgt, terminated = _target_array(target)

    def cmp(t):
        a, v = tr.point(t)
        s, _ = K.cf_compare(a, v, c, tgt, not terminated, maxdepth, r_cap, A_MIN, B_MIN)
        return int(s)

    t = _bisect(cmp, tr.t_lo, tr.t_hi, terminated, tol)
    d = resolvable_depth(tgt, terminated, depth, tol)
    if not _verify_prefix(tr.params(t), tgt, terminated, d, r_cap):
        # keep halving down to machine resolution before giving up
        t = _bisect(cmp, tr.t_lo, tr.t_hi, terminated, 0.0)
        if not _verify_prefix(tr.params(t), tgt, terminated, d, r_cap):
            raise ToleranceStall(f"prefix check failed at t = {t!r}")
    return t


def resolvable_depth(tgt, terminated, depth, tol):
    """Number of target entries whose cylinder is wider than 1e3 * tol.

    The cylinder of [r_0, ..., r_{n-1}] has width 1/(q_n (q_n + q_{n-1}))
    in rotation number, with q_n the convergent denominators.
    """
    if terminated:
        return len(tgt)
    q0, q1 = 0, 1
    n = 0
    while n < depth:
        r = int(tgt[n % len(tgt)])
        q0, q1 = q1, r * q1 + q0
        if 1.0 / (q1 * (q1 + q0)) < 1e3 * tol:
            break
        n += 1
    return max(n, 1)


def solve_on_transversal(c, transversal: Transversal, target, depth: int = 20,
                         tol: float = 1e-12, r_cap: int = DEFAULT_R_CAP):
    """(a, v) on the transversal whose continued fraction starts with ``target``.

    Finite targets without an infinite entry are repeated periodically;
    the returned point is the bracket midpoint once the bracket is below
    ``tol`` and its first ``depth`` entries agree with the target.
    """
    t = solve_param(c, transversal, target, depth, tol, r_cap)
    return transversal.point(t)


# -- curves ---------------------------------------------------------------------

@dataclass
class ParamCurve:
    c: float
    word: tuple
    kind: str
    anchors: np.ndarray
    vertices: np.ndarray
    tolerance: np.ndarray
    gaps: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    @property
    def valid(self):
        return ~np.isnan(self.vertices[:, 0])

    def points(self):
        return self.vertices[self.valid]


def _default_anchors(c, n):
    if c > 1.0:
        return np.linspace(0.0, c - 1.0, n + 2)[1:-1]
    return np.linspace(0.0, c, n + 2)[1:-1]


def _anchor_transversal(c, s):
    if c > 1.0:
        return transversal_family(c, (c, s))
    return transversal_family(c, (s, 0.0))


def _solve_anchor(c, word, depth, tol, r_cap):
    def run(s):
        try:
            tr = _anchor_transversal(c, s)
            return tr.point(solve_param(c, tr, word, depth, tol, r_cap)), None
        except RenormError as e:
            return (math.nan, math.nan), f"{type(e).__name__}: {e}"
    return run


def trace_stable_curve(c, word, depth: int = 20, n_samples: int = 16, tol: float = 1e-12,
                       refine: bool = True, curvature_tol: float = 1e-2,
                       r_cap: int = DEFAULT_R_CAP) -> ParamCurve:
    """Points of L_{c, word} on ``n_samples`` transversals spanning Delta_c.

    Transversals are vertical lines (c > 1) or exponential curves through
    (a0, 0) (c < 1); where the second differences of the vertices exceed
    ``curvature_tol`` a midpoint transversal is inserted (one pass).
    """
    _check_c(c)
    run = _solve_anchor(c, word, depth, tol, r_cap)
    anchors = list(_default_anchors(c, n_samples))
    res = pmap(run, anchors)
    if refine and len(anchors) >= 3:
        extra = []
        for i in range(1, len(anchors) - 1):
            p0, p1, p2 = (np.array(res[j][0]) for j in (i - 1, i, i + 1))
            if np.all(np.isfinite([p0, p1, p2])) and np.abs(p0 - 2 * p1 + p2).max() > curvature_tol:
                extra += [0.5 * (anchors[i - 1] + anchors[i]), 0.5 * (anchors[i] + anchors[i + 1])]
        extra = sorted(set(extra) - set(anchors))
        if extra:
            res += pmap(run, extra)
            anchors += extra
    order = np.argsort(anchors)
    anchors = np.array(anchors)[order]
    res = [res[i] for i in order]
    verts = np.array([r[0] for r in res], dtype=float)
    gaps = [(i, r[1]) for i, r in enumerate(res) if r[1] is not None]
    tolv = np.full(len(anchors), tol)
    kind = "vertical" if c > 1.0 else "exponential"
    return ParamCurve(c, tuple(word), kind, anchors, verts, tolv, gaps, [None] * len(anchors))


def map_curve(curve: ParamCurve) -> ParamCurve:
    """Image of a curve under I (into the 1/c plane), with domain flags."""
    out = np.full_like(curve.vertices, math.nan)
    flags = []
    for i, (a, v) in enumerate(curve.vertices):
        if not np.isfinite(a):
            flags.append(None)
            continue
        q = involution_I(Params.unchecked(a, v, curve.c), check=False)
        try:
            involution_I(Params.unchecked(a, v, curve.c), check=True)
            flags.append(None)
        except DomainViolation as e:
            flags.append(str(e))
        out[i] = (q.a, q.v)
    return ParamCurve(1.0 / curve.c, curve.word, "image", curve.anchors.copy(), out,
                      curve.tolerance.copy(), list(curve.gaps), flags)


def trace_unstable_curve(c, backward_word, depth: int = 20, n_samples: int = 16,
                         tol: float = 1e-12, r_cap: int = DEFAULT_R_CAP) -> ParamCurve:
    """Points whose backward heights are (..., r_-2, r_-1) = ``backward_word``.

    Traced as the stable curve at 1/c of the reversed word (r_-1, r_-2, ...)
    mapped through the involution.
    """
    rev = tuple(reversed(tuple(backward_word)))
    st = trace_stable_curve(1.0 / c, rev, depth, n_samples, tol, r_cap=r_cap)
    out = map_curve(st)
    out.word = tuple(backward_word)
    return out


# -- exact solves on vertical lines (c > 1) --------------------------------------

def stable_a(c, v, word, tol=1e-13, depth=20, r_cap=DEFAULT_R_CAP):
    tr = transversal_family(c, (c, v))
    return solve_param(c, tr, word, depth, tol, r_cap)


def unstable_a(c, v, backward_word, tol=1e-13, depth=20, r_cap=DEFAULT_R_CAP, maxdepth=MAX_DEPTH):
    """a on the vertical line through v where the backward heights are ``backward_word``.

    The vertical line is carried by I_c to a horizontal line of the 1/c
    plane, along which the rotation number decreases as a increases.
    """
    if not 0.0 < v < c - 1.0:
        raise PrefixUnreachable("vertical line outside the interior of Delta_c")
    tgt, terminated = _target_array(tuple(reversed(tuple(backward_word))))
    ci = 1.0 / c
    a_lo = max(c * (c - 1.0 - v) / v, c - 1.0 - v, 0.0) * (1.0 + 1e-15) + 1e-300
    a_hi = c
    if not a_lo < a_hi:
        raise PrefixUnreachable("image of the vertical line leaves D_{1/c}")

    def cmp(a):
        ap, vp = (c - 1.0 - v) / (a * v), -v / c
        s, _ = K.cf_compare(ap, vp, ci, tgt, not terminated, maxdepth, r_cap, A_MIN, B_MIN)
        s = int(s)
        return s if s == 2 else -s

    return _bisect(cmp, a_lo, a_hi, terminated, tol)


# -- periodic points ------------------------------------------------------------

@dataclass
class PeriodicPoint:
    params: Params
    period: int
    residual: float
    heights_verified: bool
    jacobian: np.ndarray
    iterations: int
    newton_steps: int

    @property
    def point(self):
        return (self.params.a, self.params.v)


def _seed_transversals(c):
    if c > 1.0:
        return [transversal_family(c, (c, v)) for v in
                np.array([0.5, 0.3, 0.7, 0.15, 0.85, 0.05, 0.95]) * (c - 1.0)]
    return [transversal_family(c, (s * c, 0.0)) for s in (0.5, 0.3, 0.7, 0.85, 0.15)]


def _reproject(c, p: Params, word, r_cap):
    tr = transversal_family(c, (p.a, p.v))
    return tr.params(solve_param(c, tr, word, 10, 1e-14, r_cap))


def _Tp(p, word, r_cap, forced=True):
    J = np.eye(2)
    q = p
    used = []
    for j in range(len(word) // 2):
        hs = tuple(word[2 * j: 2 * j + 2]) if forced else None
        s = renormalize_T(q, r_cap, hs)
        _, Jj = jet_T(q, False, hs, r_cap)
        used.extend(s.heights)
        q = s.new_params
        J = Jj @ J
    return q, J, tuple(used)


def find_periodic_point(c, word, tol: float = 1e-10, seed_transversal: Optional[Transversal] = None,
                        max_iter: int = 200, r_cap: int = DEFAULT_R_CAP) -> PeriodicPoint:
    """Periodic point of T_c whose cycle has heights ``word`` (even length 2p).

    Seed on the stable curve of the periodised word, iterate T_c^p with
    re-projection onto that curve to Cauchy tolerance 1e-8, then Newton on
    T_c^p(x) = x with the exact Jacobian.
    """
    word = tuple(int(r) for r in word)
    if len(word) % 2 or not word or min(word) < 1:
        raise ValueError("word must have even length and entries >= 1")
    _check_c(c)
    p = None
    seeds = [seed_transversal] if seed_transversal is not None else _seed_transversals(c)
    err = None
    for tr in seeds:
        try:
            p = tr.params(solve_param(c, tr, word, 20, 1e-13, r_cap))
            break
        except RenormError as e:
            err = e
    if p is None:
        raise NoConvergence(f"no seed on the stable curve: {err}")
    it = 0
    while True:
        it += 1
        q, _, used = _Tp(p, word, r_cap, forced=False)
        if used != word:
            raise CombinatoricsMismatch(f"heights {used} differ from {word}")
        q = _reproject(c, q, word, r_cap)
        step = math.hypot(q.a - p.a, q.v - p.v)
        p = q
        if step < 1e-8:
            break
        if it >= max_iter:
            raise NoConvergence(f"T^p iteration stalled at step {step:.2e}")
    x = np.array([p.a, p.v])
    nsteps = 0
    for nsteps in range(1, 31):
        q, J, _ = _Tp(Params.unchecked(x[0], x[1], c), word, r_cap)
        f = np.array([q.a, q.v]) - x
        dx = np.linalg.solve(J - np.eye(2), -f)
        x = x + dx
        if np.abs(dx).max() < 1e-14 * max(1.0, np.abs(x).max()):
            break
    p = Params.unchecked(x[0], x[1], c)
    q, J, used = _Tp(p, word, r_cap, forced=False)
    verified = used == word
    if not verified:
        raise CombinatoricsMismatch(f"heights {used} along the cycle differ from {word}")
    res = math.hypot(q.a - p.a, q.v - p.v)
    if res > tol:
        raise NoConvergence(f"residual {res:.2e} above {tol:g}")
    return PeriodicPoint(p, len(word) // 2, res, verified, J, it, nsteps)


def fixed_point_residual(p: Params, word, r_cap=DEFAULT_R_CAP):
    q, _, used = _Tp(p, tuple(word), r_cap, forced=False)
    return math.hypot(q.a - p.a, q.v - p.v), used


# -- attractor points -----------------------------------------------------------

@dataclass
class AttractorPoint:
    params: Params
    window: SymbolWindow
    residual: float
    method: str
    error: float = 0.0

    @property
    def point(self):
        return (self.params.a, self.params.v)


def _offset(c, window, tol):
    fw, bw = window.forward, window.backward

    def g(v):
        s = stable_a(c, v, fw, tol)
        try:
            u = unstable_a(c, v, bw, tol)
        except PrefixUnreachable as e:
            # the unstable curve has left the line through the top (a = c)
            # or bottom edge; clamp so the sign of the offset stays meaningful
            if getattr(e, "beyond", None) == "hi":
                u = c
            elif getattr(e, "beyond", None) == "lo":
                u = max(c * (c - 1.0 - v) / v, c - 1.0 - v, 0.0)
            else:
                raise
        return u - s
    return g


def _attractor_gt1(c, window, n_grid, tol):
    g = _offset(c, window, tol)
    vs = np.linspace(0.0, c - 1.0, n_grid + 2)[1:-1]
    vals = []
    for v in vs:
        try:
            vals.append(g(v))
        except RenormError:
            vals.append(math.nan)
    ok = [i for i in range(len(vs)) if np.isfinite(vals[i])]
    for i, j in zip(ok[:-1], ok[1:]):
        g0, g1 = vals[i], vals[j]
        if g0 == 0.0 or g0 * g1 < 0.0:
            if g0 == 0.0:
                vstar = vs[i]
            else:
                vstar = brentq(g, vs[i], vs[j], xtol=1e-14, rtol=1e-15, maxiter=200)
            a = stable_a(c, vstar, window.forward, tol)
            res = abs(unstable_a(c, vstar, window.backward, tol) - a)
            return Params.unchecked(a, vstar, c), res
    raise NoIntersection(f"stable and unstable offsets never change sign for {window}")


def attractor_point(c, window: SymbolWindow, n_grid: int = 24, tol: float = 1e-13,
                    fallback: bool = True) -> AttractorPoint:
    """Point of the horseshoe coded by ``window``.

    Primary method: intersection of the stable curve of the forward word
    with the unstable curve of the backward word, located by the sign
    change of their offset along vertical transversals.  For c < 1 the
    dual window is solved at 1/c and mapped back by the involution.
    """
    _check_c(c)
    try:
        if c > 1.0:
            p, res = _attractor_gt1(c, window, n_grid, tol)
        else:
            p1, res = _attractor_gt1(1.0 / c, window.dual(), n_grid, tol)
            p = involution_I(p1, check=False)
        return AttractorPoint(p, window, res, "CurveIntersection", max(res, 1e-12))
    except NoIntersection:
        if not fallback:
            raise
    word = tuple(window.forward[:2])
    pp = find_periodic_point(c, word)
    shadow = symbol_distance(window, SymbolWindow.periodic(word, len(window.forward)))
    return AttractorPoint(pp.params, window, pp.residual, "PeriodicShadow", shadow)


def stable_tangent(c, v, word, h=1e-3, tol=1e-13):
    return (stable_a(c, v + h, word, tol) - stable_a(c, v - h, word, tol)) / (2 * h)


def unstable_tangent(c, v, backward, h=1e-3, tol=1e-13):
    return (unstable_a(c, v + h, backward, tol) - unstable_a(c, v - h, backward, tol)) / (2 * h)


def _angle(u, w):
    u = u / np.linalg.norm(u)
    w = w / np.linalg.norm(w)
    return math.acos(min(1.0, abs(float(u @ w))))


@dataclass
class AngleReport:
    angle: float
    error: float
    point: tuple


def transversality_angle(c, window: SymbolWindow, h: float = 1e-3, ap: Optional[AttractorPoint] = None) -> AngleReport:
    """Angle between the stable and unstable curves at the attractor point.

    Tangents are symmetric differences over vertices at v* +- h; the error
    estimate is the change against spacing 2h plus the solver tolerance
    propagated through the differences.
    """
    if c < 1.0:
        # solve in the dual plane and push both tangents through DI
        y = attractor_point(1.0 / c, window.dual(), fallback=False).params
        D = involution_jacobian(y)
        x = involution_I(y, check=False)
        angs = []
        for hh in (h, 2 * h):
            su = D @ np.array([unstable_tangent(y.c, y.v, window.forward, hh), 1.0])
            ss = D @ np.array([stable_tangent(y.c, y.v, window.backward_word, hh), 1.0])
            angs.append(_angle(su, ss))
        return AngleReport(angs[0], abs(angs[0] - angs[1]) + 4e-13 / h, (x.a, x.v))
    ap = ap or attractor_point(c, window, fallback=False)
    v = ap.params.v
    angs = []
    for hh in (h, 2 * h):
        angs.append(_angle(np.array([stable_tangent(c, v, window.forward, hh), 1.0]),
                           np.array([unstable_tangent(c, v, window.backward, hh), 1.0])))
    return AngleReport(angs[0], abs(angs[0] - angs[1]) + 4e-13 / h, ap.point)


def involution_jacobian(p: Params):
    """Derivative of I_c at (a, v)."""
    a, v, c = p.astuple()
    return np.array([[-(c - 1.0 - v) / (a * a * v), -(c - 1.0) / (a * v * v)],
                     [0.0, -1.0 / c]])
