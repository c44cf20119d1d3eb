"""Moebius pairs (F, G), their circle map, parameter partials and the cone field.

The pair for parameters (a, v, c) is

    F(z) = (a + c z) / (1 - v z)            on [-1, 0]
    G(z) = a (z - c) / (a c + z (1 + v - c)) on [0, a]

and every map in the package is carried as a 2x2 matrix acting projectively.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import kernels as K
from .errors import ConstraintViolation, PoleOnDomain, Undecided, UnsupportedBreak

SUPPORTED_C = (0.5, 2.0)


@dataclass(frozen=True)
class Params:
    a: float
    v: float
    c: float

    @property
    def b(self) -> float:
        return (self.c - self.a) / (1.0 + self.v)

    @property
    def z_star(self) -> float:
        return -self.a / self.c

    @property
    def supported(self) -> bool:
        return SUPPORTED_C[0] < self.c < SUPPORTED_C[1]

    def in_D(self, tol=0.0) -> bool:
        return (self.a > -tol and self.a <= self.c + tol
                and self.a + self.v > self.c - 1.0 - tol)

    def in_Delta(self, tol=0.0) -> bool:
        return in_delta(self.v, self.c, tol)

    def astuple(self):
        return (self.a, self.v, self.c)

    @classmethod
    def unchecked(cls, a, v, c):
        """Build without validation (boundary images such as a' = 0)."""
        return cls(float(a), float(v), float(c))


def in_delta(v, c, tol=0.0):
    if c > 1.0:
        return -tol <= v <= c - 1.0 + tol
    return c - 1.0 - tol <= v <= tol


def constraint_violations(a, v, c):
    out = []
    for name, x in (("a", a), ("v", v), ("c", c)):
        if not math.isfinite(x):
            out.append(f"{name} is not finite")
    if out:
        return out
    if c <= 0.0:
        out.append("c > 0 fails")
    if a <= 0.0:
        out.append("a > 0 fails")
    if a > c:
        out.append(f"a <= c fails ({a!r} > {c!r})")
    if not a + v > c - 1.0:
        out.append(f"a + v > c - 1 fails ({a + v!r} <= {c - 1.0!r})")
    if 1.0 + v > 0.0:
        b = (c - a) / (1.0 + v)
        if not 0.0 <= b < 1.0:
            out.append(f"b = (c - a)/(1 + v) in [0, 1) fails (b = {b!r})")
    else:
        out.append("1 + v > 0 fails")
    return out


def validate_params(a, v, c) -> Params:
    a, v, c = float(a), float(v), float(c)
    if c == 1.0:
        raise UnsupportedBreak("c = 1 means no break")
    bad = constraint_violations(a, v, c)
    if bad:
        raise ConstraintViolation(bad)
    return Params(a, v, c)


def as_params(p) -> Params:
    if isinstance(p, Params):
        return p
    return validate_params(*p)


class MoebiusMap:
    """Projective 2x2 matrix with an optional domain interval free of poles."""

    __slots__ = ("m", "domain")

    def __init__(self, m, domain=None, normalize=True):
        m = np.array(m, dtype=float).reshape(2, 2)
        if normalize:
            s = np.abs(m).max()
            if s == 0.0 or not math.isfinite(s):
                raise PoleOnDomain("degenerate matrix")
            m = m / s
        m.flags.writeable = False
        self.m = m
        self.domain = None
        if domain is not None:
            lo, hi = float(min(domain)), float(max(domain))
            d_lo = m[1, 0] * lo + m[1, 1]
            d_hi = m[1, 0] * hi + m[1, 1]
            if d_lo == 0.0 or d_hi == 0.0 or (d_lo > 0) != (d_hi > 0):
                raise PoleOnDomain(f"pole of the map lies in [{lo}, {hi}]")
            self.domain = (lo, hi)

    def __repr__(self):
        return f"MoebiusMap({self.m.tolist()}, domain={self.domain})"

    @property
    def det(self):
        m = self.m
        return m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]

    @property
    def pole(self):
        m = self.m
        return math.inf if m[1, 0] == 0.0 else -m[1, 1] / m[1, 0]

    def __call__(self, x):
        return moebius_eval(self, x)

    def deriv(self, x):
        return moebius_deriv(self, x)

    def __matmul__(self, other):
        return moebius_compose(self, other)

    def with_domain(self, lo, hi):
        return MoebiusMap(self.m, (lo, hi), normalize=False)

    def projective_distance(self, other) -> float:
        """Sup-entry distance between the classes, after Frobenius scaling."""
        A = self.m / np.linalg.norm(self.m)
        B = np.asarray(other.m if isinstance(other, MoebiusMap) else other, dtype=float)
        B = B / np.linalg.norm(B)
        return float(min(np.abs(A - B).max(), np.abs(A + B).max()))


IDENTITY = MoebiusMap(np.eye(2))


def moebius_eval(m: MoebiusMap, x):
    M = m.m
    x = np.asarray(x, dtype=float)
    den = M[1, 0] * x + M[1, 1]
    if np.any(den == 0.0):
        raise PoleOnDomain("evaluation at the pole")
    out = (M[0, 0] * x + M[0, 1]) / den
    return float(out) if out.ndim == 0 else out


def moebius_deriv(m: MoebiusMap, x):
    M = m.m
    x = np.asarray(x, dtype=float)
    den = M[1, 0] * x + M[1, 1]
    if np.any(den == 0.0):
        raise PoleOnDomain("derivative at the pole")
    out = m.det / (den * den)
    return float(out) if out.ndim == 0 else out


def moebius_compose(m1: MoebiusMap, m2: MoebiusMap) -> MoebiusMap:
    """m1 o m2."""
    return MoebiusMap(m1.m @ m2.m)


def moebius_power(m: MoebiusMap, k: int) -> MoebiusMap:
    if k < 0:
        raise ValueError("negative power; invert first")
    out = np.eye(2)
    base = m.m.copy()
    while k:
        if k & 1:
            out = out @ base
            out /= np.abs(out).max()
        k >>= 1
        if k:
            base = base @ base
            base /= np.abs(base).max()
    return MoebiusMap(out)


def moebius_invert(m: MoebiusMap) -> MoebiusMap:
    M = m.m
    return MoebiusMap([[M[1, 1], -M[0, 1]], [-M[1, 0], M[0, 0]]])


def f_matrix(a, v, c):
    return np.array([[c, a], [-v, 1.0]])


def g_matrix(a, v, c):
    return np.array([[a, -a * c], [1.0 + v - c, a * c]])


@dataclass(frozen=True)
class BreakPair:
    params: Params
    F: MoebiusMap
    G: MoebiusMap
    b: float
    z_star: float

    def endpoint_residual(self) -> float:
        a, b = self.params.a, self.b
        return max(abs(self.F(0.0) - a), abs(self.G(0.0) + 1.0),
                   abs(self.F(-1.0) + b), abs(self.G(a) + b))

    def break_ratio(self) -> float:
        F, G = self.F, self.G
        return F.deriv(0.0) * G.deriv(F(0.0)) / (G.deriv(0.0) * F.deriv(-1.0))


def make_pair(p) -> BreakPair:
    p = as_params(p)
    a, v, c = p.astuple()
    F = MoebiusMap(f_matrix(a, v, c), (-1.0, 0.0))
    G = MoebiusMap(g_matrix(a, v, c), (0.0, max(a, 0.0)))
    return BreakPair(p, F, G, p.b, p.z_star)


def check_commutation(pair: BreakPair, grid_n: int = 200) -> float:
    """sup over z in [z*, 0] of |G(F(z)) - F(G(c^2 z))|.

    Both sides are rational in z; grid points where either side sits within
    1e-6 of a pole are skipped and the residual is measured relative to
    max(1, |value|).
    """
    a, v, c = pair.params.astuple()
    z = np.linspace(pair.z_star, 0.0, grid_n)
    FM, GM = pair.F.m, pair.G.m
    fz = (FM[0, 0] * z + FM[0, 1]) / (FM[1, 0] * z + FM[1, 1])
    d1 = GM[1, 0] * fz + GM[1, 1]
    w = c * c * z
    d2 = GM[1, 0] * w + GM[1, 1]
    gw = (GM[0, 0] * w + GM[0, 1]) / np.where(d2 == 0.0, 1.0, d2)
    d3 = FM[1, 0] * gw + FM[1, 1]
    ok = (np.abs(d1) > 1e-6) & (np.abs(d2) > 1e-6) & (np.abs(d3) > 1e-6)
    if not ok.any():
        return 0.0
    lhs = (GM[0, 0] * fz[ok] + GM[0, 1]) / d1[ok]
    rhs = (FM[0, 0] * gw[ok] + FM[0, 1]) / d3[ok]
    return float(np.max(np.abs(lhs - rhs) / np.maximum(1.0, np.abs(lhs))))


class CircleLift:
    """Lift of the circle map built from F on [-1, z*] and G o F on [z*, 0].

    A real x corresponds to the point z = x - floor(x) - 1 of [-1, 0); the
    lift satisfies L(x + 1) = L(x) + 1.
    """

    def __init__(self, pair: BreakPair):
        self.pair = pair
        self.a, self.v, self.c = pair.params.astuple()

    def __call__(self, x, iterations=1):
        return circle_lift_eval(self, x, iterations)

    def turns(self, z, n):
        """(w, z_n) with lift^n(x) - x = w + z_n - z for z in [-1, 0)."""
        w, zn = K.lift_orbit(self.a, self.v, self.c, float(z), int(n))
        return int(w), float(zn)


def circle_map(pair: BreakPair) -> CircleLift:
    return CircleLift(pair)


def circle_lift_eval(lift: CircleLift, x, iterations: int = 1):
    xs = np.asarray(x, dtype=float)
    if iterations == 1:
        a, v, c = lift.a, lift.v, lift.c
        fl = np.floor(xs)
        z = xs - fl - 1.0
        fz = (a + c * z) / (1.0 - v * z)
        left = z <= -a / c
        with np.errstate(divide="ignore", invalid="ignore"):
            gfz = a * (fz - c) / (a * c + fz * (1.0 + v - c))
        out = np.where(left, fl + 1.0 + fz, fl + 2.0 + gfz)
        return float(out) if out.ndim == 0 else out
    flat = xs.ravel()
    res = np.empty_like(flat)
    for i, xi in enumerate(flat):
        fl = math.floor(xi)
        w, zn = lift.turns(xi - fl - 1.0, iterations)
        res[i] = fl + w + zn + 1.0
    return float(res[0]) if xs.ndim == 0 else res.reshape(xs.shape)


def first_return(pair: BreakPair):
    """(F on [-1, z*], G o F on [z*, 0])."""
    zs = pair.z_star
    Fh = pair.F.with_domain(-1.0, zs)
    Gh = MoebiusMap(pair.G.m @ pair.F.m, (zs, 0.0))
    return Fh, Gh


# -- parameter partials ---------------------------------------------------------

def F_partials(p: Params, z):
    """(F_z, F_a, F_v) at z."""
    a, v, c = p.astuple()
    z = np.asarray(z, dtype=float)
    q = 1.0 - v * z
    return (c + a * v) / q**2, 1.0 / q, z * (a + c * z) / q**2


def G_partials(p: Params, z):
    """(G_z, G_a, G_v) at z."""
    a, v, c = p.astuple()
    z = np.asarray(z, dtype=float)
    D = a * c + z * (1.0 + v - c)
    D2 = D * D
    return (a * c * (a + 1.0 + v - c) / D2,
            (z - c) * z * (1.0 + v - c) / D2,
            -a * (z - c) * z / D2)


@dataclass(frozen=True)
class TangentVector:
    alpha: float
    nu: float

    def __add__(self, other):
        return TangentVector(self.alpha + other.alpha, self.nu + other.nu)

    def __neg__(self):
        return TangentVector(-self.alpha, -self.nu)

    def scaled(self, s):
        return TangentVector(s * self.alpha, s * self.nu)

    @property
    def norm(self):
        return math.hypot(self.alpha, self.nu)

    def asarray(self):
        return np.array([self.alpha, self.nu])


def _tv(t):
    return t if isinstance(t, TangentVector) else TangentVector(*t)


def dir_deriv_F(p, vbar, x):
    p, vbar = as_params(p), _tv(vbar)
    _, Fa, Fv = F_partials(p, x)
    out = vbar.alpha * Fa + vbar.nu * Fv
    return float(out) if np.ndim(out) == 0 else out


def dir_deriv_GF(p, vbar, x):
    p, vbar = as_params(p), _tv(vbar)
    a, v, c = p.astuple()
    x = np.asarray(x, dtype=float)
    y = (a + c * x) / (1.0 - v * x)
    _, Fa, Fv = F_partials(p, x)
    Gz, Ga, Gv = G_partials(p, y)
    out = Gz * (vbar.alpha * Fa + vbar.nu * Fv) + vbar.alpha * Ga + vbar.nu * Gv
    return float(out) if np.ndim(out) == 0 else out


class ConeStatus(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class ConeVerdict:
    status: ConeStatus
    infimum: float
    argmin: float
    supported: bool = True

    @property
    def inside(self):
        return self.status is ConeStatus.INSIDE


def _refined_min(fun, lo, hi, grid_n):
    xs = np.linspace(lo, hi, grid_n)
    ys = fun(xs)
    i = int(np.argmin(ys))
    best_x, best_y = float(xs[i]), float(ys[i])
    if 0 < i < grid_n - 1:
        # interior grid minimum: polish inside the neighbouring cells
        res = minimize_scalar(lambda t: float(fun(np.array(t))),
                              bounds=(xs[i - 1], xs[i + 1]), method="bounded",
                              options={"xatol": 1e-14})
        if res.success and res.fun < best_y:
            best_x, best_y = float(res.x), float(res.fun)
    return best_y, best_x


def cone_infimum(p, vbar, grid_n=2001):
    """inf of both directional derivatives over their branch domains."""
    p, vbar = as_params(p), _tv(vbar)
    zs = p.z_star
    yF, xF = _refined_min(lambda x: dir_deriv_F(p, vbar, x), -1.0, zs, grid_n)
    yG, xG = _refined_min(lambda x: dir_deriv_GF(p, vbar, x), zs, 0.0, grid_n)
    return (yF, xF) if yF <= yG else (yG, xG)


def in_cone(p, vbar, grid_n=2001, margin=1e-10) -> ConeVerdict:
    p = as_params(p)
    inf, at = cone_infimum(p, vbar, grid_n)
    if abs(inf) <= margin:
        raise Undecided(f"cone infimum {inf:.3e} within margin {margin:g}", inf)
    st = ConeStatus.INSIDE if inf > margin else ConeStatus.OUTSIDE
    return ConeVerdict(st, inf, at, p.supported)


def cone_lipschitz(p, grid_n=2001) -> float:
    """Sup over both branches of the Euclidean norm of the parameter gradient.

    A perturbation w changes either directional derivative by at most
    K * |w|, so an inside verdict with infimum i survives |w| < i / K.
    """
    p = as_params(p)
    zs = p.z_star
    x1 = np.linspace(-1.0, zs, grid_n)
    x2 = np.linspace(zs, 0.0, grid_n)
    k1 = np.hypot(dir_deriv_F(p, (1, 0), x1), dir_deriv_F(p, (0, 1), x1)).max()
    k2 = np.hypot(dir_deriv_GF(p, (1, 0), x2), dir_deriv_GF(p, (0, 1), x2)).max()
    return float(max(k1, k2))


def canonical_cone_vector(p) -> TangentVector:
    p = as_params(p)
    if not p.supported:
        raise UnsupportedBreak(f"c = {p.c} outside {SUPPORTED_C}")
    if p.c > 1.0:
        return TangentVector(1.0, 0.0)
    return TangentVector(p.a, p.c)
