"""Renormalisation of smooth break maps outside the Moebius family.

The test family is f = h o f_base o h^-1 with h(x) = x + eps/(2 pi) sin(2 pi x),
a real-analytic circle diffeomorphism fixing 0.  The renormalised pairs of f
are kept as words in the two conjugated branches together with a scale
factor, and are only ever sampled pointwise.
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import kernels as K
from .errors import (DegenerateExtraction, DomainViolation, HeightCapExceeded,
                     IterateBudgetExceeded, NotRenormalizable)
from .mobius import Params, as_params
from .renorm import DEFAULT_R_CAP, T_orbit, renormalize_T

GRID_N = 256
FD_STEP = 1e-3
ITERATE_BUDGET = 10_000_000
A_FLOOR = 1e-9


@dataclass(frozen=True)
class GeneralBreakMap:
    base: Params
    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise DomainViolation(f"epsilon = {self.epsilon} outside [0, 1)", self.epsilon)

    @property
    def _abc(self):
        return self.base.a, self.base.v, self.base.c

    def h(self, x):
        return K._h_np(np.asarray(x, dtype=float), self.epsilon)

    def h_inv(self, y):
        return K._h_inv_np(np.asarray(y, dtype=float), self.epsilon)

    def eta(self, x):
        """h F h^-1 on [-1, 0]."""
        return K.word_eval(np.zeros(1, dtype=np.int64), np.atleast_1d(np.asarray(x, float)),
                           1.0, *self._abc, self.epsilon)

    def xi(self, x):
        """h G h^-1 on [0, h(a)]."""
        return K.word_eval(np.ones(1, dtype=np.int64), np.atleast_1d(np.asarray(x, float)),
                           1.0, *self._abc, self.epsilon)

    def lift(self, x):
        """Lift of the circle map, x real."""
        x = float(x)
        z = x - math.floor(x) - 1.0
        w, z2 = K.conj_lift_orbit(*self._abc, self.epsilon, z, 1)
        return (x - z) + w + z2

    def orbit(self, x0, n):
        """Integer turns and final point of n steps from x0 in [-1, 0)."""
        return K.conj_lift_orbit(*self._abc, self.epsilon, float(x0), int(n))

    def birkhoff_rotation_number(self, iterations: int = 1_000_000, x0: float = -0.5) -> float:
        w, z = self.orbit(x0, iterations)
        return (w + z - x0) / iterations

    def break_points(self):
        """The two points where f' jumps: 0 and h(z*)."""
        return 0.0, float(self.h(self.base.z_star))

    def derivative_jump(self, x, step: float = 1e-5) -> float:
        """f'(x-)/f'(x+) from second-order one-sided differences."""
        L = self.lift
        f0 = L(x)
        left = (3 * f0 - 4 * L(x - step) + L(x - 2 * step)) / (2 * step)
        right = (-3 * f0 + 4 * L(x + step) - L(x + 2 * step)) / (2 * step)
        return left / right

    def break_ratios(self, step: float = 1e-5):
        return tuple(self.derivative_jump(x, step) for x in self.break_points())


def make_conjugated_map(p, epsilon: float) -> GeneralBreakMap:
    return GeneralBreakMap(as_params(p), float(epsilon))


@dataclass
class GeneralRenorm:
    level: int
    c: float
    a: float
    b: float
    scale: float
    H: np.ndarray = field(repr=False)
    Kw: np.ndarray = field(repr=False)
    eta_grid: np.ndarray = field(repr=False)
    eta_vals: np.ndarray = field(repr=False)
    xi_grid: np.ndarray = field(repr=False)
    xi_vals: np.ndarray = field(repr=False)
    heights: tuple
    height: Optional[int]
    cost: int
    f: GeneralBreakMap = field(repr=False)

    def _ev(self, word, x):
        f = self.f
        return K.word_eval(word, np.atleast_1d(np.asarray(x, float)), self.scale,
                           f.base.a, f.base.v, f.base.c, f.epsilon)

    def eta(self, x):
        return self._ev(self.H, x)

    def xi(self, x):
        return self._ev(self.Kw, x)

    @property
    def word_lengths(self):
        return len(self.H), len(self.Kw)

    @property
    def xi_at_zero(self):
        return float(self.xi(0.0)[0])

    def endpoint_residual(self) -> float:
        return max(abs(self.eta_vals[-1] - self.a), abs(self.eta_vals[0] + self.b),
                   abs(self.xi_vals[0] + 1.0))


def _height(level: GeneralRenorm, r_cap):
    x = -1.0
    r = 0
    cost = 0
    while True:
        y = float(level.eta(x)[0])
        cost += len(level.H)
        r += 1
        if r > 1 and x <= 0.0 < y:
            return r - 1, x, y, cost
        if r > 1 and y <= x:
            raise NotRenormalizable(f"orbit of -1 stalls at level {level.level}")
        if r - 1 > r_cap:
            raise HeightCapExceeded(r_cap, r - 1)
        x = y


def general_renormalize(f: GeneralBreakMap, n: int, grid_n: int = GRID_N,
                        r_cap: int = DEFAULT_R_CAP, budget: int = ITERATE_BUDGET) -> List[GeneralRenorm]:
    """Levels 0..n of the renormalisation of ``f`` (fewer if a_n drops below 1e-9).

    Level k is eta_k(x) = s_k H_k(x / s_k), xi_k(x) = s_k K_k(x / s_k) with
    H_{k+1} = H_k^{r_k} K_k, K_{k+1} = H_k and s_{k+1} = -s_k / a_k.
    """
    a0, v0, c0 = f.base.a, f.base.v, f.base.c
    H = np.zeros(1, dtype=np.int64)
    Kw = np.ones(1, dtype=np.int64)
    s = 1.0
    c = c0
    spent = 0
    heights = []
    out = []
    xs_eta = np.linspace(-1.0, 0.0, grid_n)
    for k in range(n + 1):
        need = grid_n * (len(H) + len(Kw))
        if spent + need > budget:
            raise IterateBudgetExceeded(f"level {k} needs {need} evaluations, "
                                        f"{budget - spent} left")
        eta_vals = K.word_eval(H, xs_eta, s, a0, v0, c0, f.epsilon)
        a = float(eta_vals[-1])
        b = -float(eta_vals[0])
        xs_xi = np.linspace(0.0, a, grid_n)
        xi_vals = K.word_eval(Kw, xs_xi, s, a0, v0, c0, f.epsilon)
        spent += need
        lev = GeneralRenorm(k, c, a, b, s, H, Kw, xs_eta, eta_vals, xs_xi, xi_vals,
                            tuple(heights), None, spent, f)
        out.append(lev)
        if k == n or a < A_FLOOR:
            break
        r, _, _, cost = _height(lev, r_cap)
        spent += cost
        lev.height = r
        heights.append(r)
        H, Kw = np.concatenate([Kw, np.tile(H, r)]), H
        s = -s / a
        c = 1.0 / c
    return out


@dataclass
class ModelFit:
    level: int
    a: float
    b: float
    v: float
    c: float
    eta_C0: float
    xi_C0: float
    dist_C0: float
    dist_C2approx: float
    xi_scaled: float


def _fd(fun, x, h):
    fp, f0, fm = fun(x + h), fun(x), fun(x - h)
    return (fp - fm) / (2 * h), (fp - 2 * f0 + fm) / (h * h)


def fit_model(level: GeneralRenorm, c_n: Optional[float] = None, h: float = FD_STEP) -> ModelFit:
    """Distance of the sampled pair to the Moebius pair with the same endpoints.

    The xi side lives on [0, a_n]; its distances are multiplied by a_n.
    Derivatives are central differences with spacing ``h`` times the
    interval length, applied identically to the pair and the model.
    """
    c = level.c if c_n is None else float(c_n)
    a, b = level.a, level.b
    if b < 1e-12:
        raise DegenerateExtraction(f"b_n = {b:.3e} at level {level.level}")
    v = (c - a - b) / b
    F = lambda x: K._word_eval_np(np.zeros(1, np.int64), x, 1.0, a, v, c, 0.0)
    G = lambda x: K._word_eval_np(np.ones(1, np.int64), x, 1.0, a, v, c, 0.0)
    e0 = float(np.max(np.abs(level.eta_vals - F(level.eta_grid))))
    x0 = float(np.max(np.abs(level.xi_vals - G(level.xi_grid))))
    xe = level.eta_grid[1:-1]
    xx = level.xi_grid[1:-1]
    he, hx = h, h * a
    d1e, d2e = _fd(level.eta, xe, he)
    m1e, m2e = _fd(F, xe, he)
    d1x, d2x = _fd(level.xi, xx, hx)
    m1x, m2x = _fd(G, xx, hx)
    e2 = e0 + np.max(np.abs(d1e - m1e)) + np.max(np.abs(d2e - m2e))
    x2 = x0 + np.max(np.abs(d1x - m1x)) + np.max(np.abs(d2x - m2x))
    return ModelFit(level.level, a, b, v, c, e0, x0, e0 + a * x0, float(e2 + a * x2), a * x0)


def commutation_defect(level: GeneralRenorm, grid_n: int = GRID_N) -> float:
    """sup over [z*_n, 0] of |xi(eta(z)) - eta(xi(c_n^2 z))|.

    Zero for Moebius pairs; for general pairs it shrinks with the distance
    to the family.
    """
    c = level.c
    z = np.linspace(-level.a / c, 0.0, grid_n)
    lhs = level.xi(level.eta(z))
    rhs = level.eta(level.xi(c * c * z))
    return float(np.max(np.abs(lhs - rhs)))


def measured_break(level: GeneralRenorm, step: float = 1e-4) -> float:
    """xi'(a) eta'(0) / (eta'(-1) xi'(0)) from one-sided differences; c_n^2 in the limit."""
    def d(fun, x, sgn):
        hh = sgn * step
        return float((-3 * fun(x)[0] + 4 * fun(x + hh)[0] - fun(x + 2 * hh)[0]) / (2 * hh))
    a = level.a
    return d(level.xi, a, -1) * d(level.eta, 0.0, -1) / (d(level.eta, -1.0, 1) * d(level.xi, 0.0, 1))


@dataclass
class GeometricFit:
    rate: float
    const: float
    stderr: float
    r2: float

    @property
    def rate_interval(self):
        """Two-sigma band on the fitted rate."""
        return (self.rate * math.exp(-2 * self.stderr), self.rate * math.exp(2 * self.stderr))


def geometric_fit(ns, ds) -> GeometricFit:
    """Least squares log d = log C + n log lambda."""
    ns = np.asarray(ns, float)
    y = np.log(np.asarray(ds, float))
    A = np.vstack([np.ones_like(ns), ns]).T
    coef, res, _, _ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    dof = max(len(ns) - 2, 1)
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(A.T @ A)
    ss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / ss if ss > 0 else 1.0
    return GeometricFit(math.exp(coef[1]), math.exp(coef[0]), math.sqrt(cov[1, 1]), r2)


@dataclass
class ConvergenceReport:
    epsilon: float
    levels: list
    fits: list
    dist_C0: list
    dist_C2approx: list
    fit: GeometricFit
    monotone_violations: list
    c_alternation: list
    alternation_ok: bool
    commutation: list

    @property
    def lambda_hat(self):
        return self.fit.rate

    @property
    def monotone(self):
        return not self.monotone_violations


def convergence_report(f: GeneralBreakMap, N: int = 8, grid_n: int = GRID_N,
                       r_cap: int = DEFAULT_R_CAP, first: int = 1) -> ConvergenceReport:
    levels = general_renormalize(f, N, grid_n, r_cap)
    c = f.base.c
    fits, alt, comm = [], [], []
    for lev in levels[first:]:
        want = c if lev.level % 2 == 0 else 1.0 / c
        fits.append(fit_model(lev, want))
        got = measured_break(lev)
        alt.append((lev.level, lev.c, got))
        comm.append(commutation_defect(lev, grid_n))
    alt_ok = all(abs(got / (cn * cn) - 1.0) < 1e-4 and
                 abs(cn - (c if k % 2 == 0 else 1 / c)) == 0.0 for k, cn, got in alt)
    d0 = [m.dist_C0 for m in fits]
    d2 = [m.dist_C2approx for m in fits]
    ns = [m.level for m in fits]
    bad = [ns[i + 1] for i in range(len(d0) - 1) if d0[i + 1] > d0[i]]
    pos = [(n, d) for n, d in zip(ns, d0) if d > 0]
    fit = geometric_fit(*zip(*pos)) if len(pos) >= 2 else GeometricFit(float("nan"), 0.0, float("inf"), 0.0)
    return ConvergenceReport(f.epsilon, levels, fits, d0, d2, fit, bad, alt, alt_ok, comm)


@dataclass
class ContractionReport:
    distances: list
    fit: GeometricFit
    orbit1: list
    orbit2: list
    heights: tuple


def same_rho_contraction(p1, p2, n: int = 8, word=None, r_cap: int = DEFAULT_R_CAP) -> ContractionReport:
    """||T^j p1 - T^j p2|| for j = 0..n.

    With a periodic height ``word`` both orbits are pulled back onto the
    level curve of that word after every step (along their transversals);
    this removes the rounding drift that the unstable direction would
    otherwise amplify.  Heights along both orbits must agree.
    """
    from .horseshoe import _reproject
    p1, p2 = as_params(p1), as_params(p2)
    if word is None:
        o1, h1 = T_orbit(p1, n, r_cap)
        o2, h2 = T_orbit(p2, n, r_cap)
        if h1 != h2:
            raise NotRenormalizable(f"orbits have different heights {h1} and {h2}")
    else:
        word = tuple(int(r) for r in word)
        L = len(word)
        o1, o2, h1 = [p1], [p2], []
        for j in range(n):
            tgt = tuple(word[(2 * (j + 1) + i) % L] for i in range(L))
            s1 = renormalize_T(o1[-1], r_cap)
            s2 = renormalize_T(o2[-1], r_cap)
            if s1.heights != s2.heights:
                raise NotRenormalizable(f"heights {s1.heights} and {s2.heights} differ at step {j}")
            h1.extend(s1.heights)
            c = s1.new_params.c
            o1.append(_reproject(c, s1.new_params, tgt, r_cap))
            o2.append(_reproject(c, s2.new_params, tgt, r_cap))
    ds = [math.hypot(x.a - y.a, x.v - y.v) for x, y in zip(o1, o2)]
    fit = geometric_fit(range(len(ds)), ds)
    return ContractionReport(ds, fit, o1, o2, tuple(h1))
