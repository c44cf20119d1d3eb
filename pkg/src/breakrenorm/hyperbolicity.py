"""Exact Jacobians of T_c by jet propagation, eigen-splittings and expansion data.

A jet matrix is an array of shape (3, 2, 2): the value and its partials in
a and v.  Every product is divided by the sup-entry of its value, which is
a constant rescaling and leaves the projective quantities we extract
(fixed-point values, evaluations) untouched.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels as K
from .errors import (
    DegenerateAlignment,
    IllConditioned,
    NotHyperbolic,
    NotRenormalizable,
    RenormError,
    Undecided,
)
from .mobius import Params, TangentVector, canonical_cone_vector, in_cone
from .renorm import DEFAULT_R_CAP, INF, _soft_params, height, renormalize_T


class Jet2:
    """value + d_a * da + d_v * dv."""

    __slots__ = ("value", "d_a", "d_v")

    def __init__(self, value, d_a=0.0, d_v=0.0):
        self.value = float(value)
        self.d_a = float(d_a)
        self.d_v = float(d_v)

    @classmethod
    def const(cls, x):
        return cls(x)

    @property
    def grad(self):
        return np.array([self.d_a, self.d_v])

    def __repr__(self):
        return f"Jet2({self.value!r}, {self.d_a!r}, {self.d_v!r})"

    @staticmethod
    def _lift(x):
        return x if isinstance(x, Jet2) else Jet2(x)

    def __add__(self, o):
        o = self._lift(o)
        return Jet2(self.value + o.value, self.d_a + o.d_a, self.d_v + o.d_v)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.value, -self.d_a, -self.d_v)

    def __sub__(self, o):
        return self + (-self._lift(o))

    def __rsub__(self, o):
        return self._lift(o) - self

    def __mul__(self, o):
        o = self._lift(o)
        return Jet2(self.value * o.value,
                    self.d_a * o.value + self.value * o.d_a,
                    self.d_v * o.value + self.value * o.d_v)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = self._lift(o)
        q = self.value / o.value
        return Jet2(q, (self.d_a - q * o.d_a) / o.value, (self.d_v - q * o.d_v) / o.value)

    def __rtruediv__(self, o):
        return self._lift(o) / self


def _norm(J):
    s = np.abs(J[0]).max()
    return J / s


def jmul(A, B):
    out = np.empty((3, 2, 2))
    out[0] = A[0] @ B[0]
    out[1] = A[1] @ B[0] + A[0] @ B[1]
    out[2] = A[2] @ B[0] + A[0] @ B[2]
    return _norm(out)


def jpow(A, k):
    out = np.zeros((3, 2, 2))
    out[0] = np.eye(2)
    base = A.copy()
    while k:
        if k & 1:
            out = jmul(out, base)
        k >>= 1
        if k:
            base = jmul(base, base)
    return out


def jeval(M, x):
    """Jet of M(x) for a jet matrix M and a jet (or constant) point x."""
    x = Jet2._lift(x)
    e = [[Jet2(M[0, i, j], M[1, i, j], M[2, i, j]) for j in range(2)] for i in range(2)]
    return (e[0][0] * x + e[0][1]) / (e[1][0] * x + e[1][1])


def jet_F(a: Jet2, v: Jet2, c):
    out = np.zeros((3, 2, 2))
    for k, (aa, vv) in enumerate(((a.value, v.value), (a.d_a, v.d_a), (a.d_v, v.d_v))):
        out[k] = [[c if k == 0 else 0.0, aa], [-vv, 1.0 if k == 0 else 0.0]]
    return out


def jet_G(a: Jet2, v: Jet2, c):
    out = np.zeros((3, 2, 2))
    out[0] = [[a.value, -a.value * c], [1.0 + v.value - c, a.value * c]]
    for k, (aa, vv) in enumerate(((a.d_a, v.d_a), (a.d_v, v.d_v)), start=1):
        out[k] = [[aa, -aa * c], [vv, aa * c]]
    return out


def jet_prerenormalize(p: Params, n: int, heights=None, r_cap: int = DEFAULT_R_CAP,
                       seed=None):
    """(a_n, v_n) as jets in the base parameters, through the n-level words.

    Level k carries H_k, K_k and the scale s_k = prod(-1/a_j), so that
    a_k = s_k H_k(0) and b_k = -s_k H_k(-1/s_k).  ``seed`` gives the jets of
    (a, v) (default: the coordinate jets).
    """
    a0, v0, c = p.astuple()
    aj, vj = seed if seed is not None else (Jet2(a0, 1.0, 0.0), Jet2(v0, 0.0, 1.0))
    H, Kk = jet_F(aj, vj, c), jet_G(aj, vj, c)
    s = Jet2(1.0)
    ck = c
    used = []
    ak, vk = aj, vj
    for k in range(n):
        if heights is not None:
            r = int(heights[k])
        else:
            r, _, _ = K.height_orbit(ak.value, vk.value, ck, r_cap)
            if r == K.HEIGHT_INF:
                raise NotRenormalizable(f"height infinite at level {k}")
            if r == K.HEIGHT_CAP:
                raise NotRenormalizable(f"height above cap at level {k}")
        used.append(int(r))
        H, Kk = jmul(jpow(H, r), Kk), H
        s = s * (-1.0 / ak)
        ck = 1.0 / ck
        ak = s * jeval(H, 0.0)
        bk = -(s * jeval(H, -1.0 / s))
        vk = (ck - ak - bk) / bk
    return ak, vk, ck, used


def _jac(aj, vj):
    return np.array([[aj.d_a, aj.d_v], [vj.d_a, vj.d_v]])


def _check_mode():
    return os.environ.get("RENORM_JET_CHECK", "0") not in ("", "0", "false", "no")


def fd_jacobian_T(p: Params, heights, h=1e-6, r_cap: int = DEFAULT_R_CAP):
    a, v, c = p.astuple()
    cols = []
    for da, dv in ((h, 0.0), (0.0, h)):
        hi = renormalize_T(Params.unchecked(a + da, v + dv, c), r_cap, heights).new_params
        lo = renormalize_T(Params.unchecked(a - da, v - dv, c), r_cap, heights).new_params
        cols.append([(hi.a - lo.a) / (2 * h), (hi.v - lo.v) / (2 * h)])
    return np.array(cols).T


def jet_T(p, check: Optional[bool] = None, branch_heights=None, r_cap: int = DEFAULT_R_CAP):
    """(T_c(p), DT_c(p)) with the derivative propagated exactly.

    With ``check`` (default: the ``RENORM_JET_CHECK`` environment flag) the
    Jacobian is compared against central differences with step 1e-6 and
    :class:`IllConditioned` is raised above 1e-6 relative disagreement.
    """
    p = p if isinstance(p, Params) else Params.unchecked(*p)
    aj, vj, c2, used = jet_prerenormalize(p, 2, branch_heights, r_cap)
    J = _jac(aj, vj)
    if check is None:
        check = _check_mode()
    if check:
        Jfd = fd_jacobian_T(p, tuple(used), r_cap=r_cap)
        rel = np.abs(J - Jfd).max() / max(np.abs(J).max(), 1.0)
        if rel > 1e-6:
            raise IllConditioned(f"jet and finite-difference Jacobians differ by {rel:.2e}")
    return _soft_params(aj.value, vj.value, c2), J


def jet_T_power(p, k: int, r_cap: int = DEFAULT_R_CAP):
    """T_c^k and its Jacobian through one 2k-level composition."""
    p = p if isinstance(p, Params) else Params.unchecked(*p)
    aj, vj, c2, _ = jet_prerenormalize(p, 2 * k, None, r_cap)
    return _soft_params(aj.value, vj.value, c2), _jac(aj, vj)


def jacobian_chain(p, k: int, heights=None, r_cap: int = DEFAULT_R_CAP):
    """Points x_0..x_k of the T_c orbit and the per-step Jacobians."""
    pts = [p if isinstance(p, Params) else Params.unchecked(*p)]
    Js = []
    for j in range(k):
        hs = None if heights is None else heights[2 * j: 2 * j + 2]
        q, J = jet_T(pts[-1], False, hs, r_cap)
        pts.append(q)
        Js.append(J)
    return pts, Js


# -- eigen-splitting ------------------------------------------------------------

@dataclass(frozen=True)
class JacobianRecord:
    J: np.ndarray
    lambda_u: float
    lambda_s: float
    e_u: np.ndarray
    e_s: np.ndarray
    margin: float
    hyperbolic: bool
    eig_residual: float
    cone_ok: Optional[bool] = None


def _eigvec(J, mu):
    v1 = np.array([J[0, 1], mu - J[0, 0]])
    v2 = np.array([mu - J[1, 1], J[1, 0]])
    v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
    n = np.linalg.norm(v)
    if n == 0.0:
        v = np.array([1.0, 0.0]) if abs(J[0, 0] - mu) <= abs(J[1, 1] - mu) else np.array([0.0, 1.0])
        n = 1.0
    v = v / n
    return v if v[0] > 0 or (v[0] == 0 and v[1] > 0) else -v


def eigensplit(J, margin: float = 1e-3, base: Optional[Params] = None) -> JacobianRecord:
    """Closed-form eigen-decomposition; raises NotHyperbolic unless |l_s| < 1 - m < 1 + m < |l_u|.

    With ``base`` the unstable vector is also tested against the cone there
    (orientation chosen so the test can pass).
    """
    J = np.asarray(J, dtype=float)
    tr = J[0, 0] + J[1, 1]
    det = J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0]
    disc = tr * tr / 4.0 - det
    if disc < 0.0:
        raise NotHyperbolic(f"complex eigenvalues (trace {tr:.6g}, det {det:.6g})")
    sq = math.sqrt(disc)
    # stable root formula for the smaller-modulus eigenvalue
    big = tr / 2.0 + math.copysign(sq, tr) if tr != 0.0 else sq
    small = det / big if big != 0.0 else tr / 2.0 - sq
    lu, ls = (big, small) if abs(big) >= abs(small) else (small, big)
    eu, es = _eigvec(J, lu), _eigvec(J, ls)
    res = max(np.linalg.norm(J @ eu - lu * eu), np.linalg.norm(J @ es - ls * es))
    res /= max(1.0, abs(lu))
    hyp = abs(lu) > 1.0 + margin and abs(ls) < 1.0 - margin
    if not hyp:
        raise NotHyperbolic(f"eigenvalues {lu:.6g}, {ls:.6g} do not straddle 1 with margin {margin:g}")
    cone_ok = None
    if base is not None:
        cone_ok = False
        for sgn in (1.0, -1.0):
            try:
                if in_cone(base, TangentVector(*(sgn * eu)), 1001).inside:
                    eu = sgn * eu
                    cone_ok = True
                    break
            except Undecided:
                pass
    return JacobianRecord(J, lu, ls, eu, es, margin, hyp, res, cone_ok)


# -- orbits ---------------------------------------------------------------------

def _angle(u, w):
    u = u / np.linalg.norm(u)
    w = w / np.linalg.norm(w)
    return math.acos(min(1.0, abs(float(u @ w))))


@dataclass
class OrbitSplitting:
    points: list
    e_u: list
    e_s: list
    expansion: list
    contraction: list
    invariance_u: float
    invariance_s: float
    min_angle: float
    k0: Optional[int]
    lam: Optional[float]


def splitting_from_jacobians(Js, v0, burn: int):
    """Unstable/stable fields along a chain of Jacobians J_0, ..., J_{N-1}.

    The unstable field starts from ``v0`` at index 0 and is pushed forward;
    the stable field is pulled back from the last index by inverse
    Jacobians.  Indices [burn, N - burn] are returned.
    """
    N = len(Js)
    eu = [None] * (N + 1)
    w = np.asarray(v0, dtype=float)
    eu[0] = w / np.linalg.norm(w)
    for j, J in enumerate(Js):
        w = J @ eu[j]
        eu[j + 1] = w / np.linalg.norm(w)
    es = [None] * (N + 1)
    w = np.array([-eu[N][1], eu[N][0]])
    es[N] = w
    for j in range(N - 1, -1, -1):
        w = np.linalg.solve(Js[j], es[j + 1])
        es[j] = w / np.linalg.norm(w)
    return eu[burn: N - burn + 1], es[burn: N - burn + 1]


def uniform_factor(Js, eu, es, k0):
    """min over windows of length k0 of min(|DT^k0 e_u|, 1/|DT^k0 e_s|)."""
    best = math.inf
    for j in range(len(Js) - k0 + 1):
        M = np.eye(2)
        for J in Js[j:j + k0]:
            M = J @ M
        best = min(best, np.linalg.norm(M @ eu[j]), 1.0 / np.linalg.norm(M @ es[j]))
    return best


def orbit_splitting(c, window, k: int = 10, burn: int = 6, k0_max: int = 6):
    """Splitting fields along the attractor orbit of a window.

    Points x_j = attractor_point(sigma^{2j} w) for j = -burn .. k + burn;
    the unstable field is pushed forward from the canonical cone vector at
    x_{-burn}, the stable field pulled back from x_{k+burn}.  Reports the
    invariance defects (angle between DT e(x_j) and e(x_{j+1})), the
    smallest field angle, and the smallest k0 with a uniform factor > 1.
    """
    from .horseshoe import attractor_point

    w = window.shift(-2 * burn)
    pts = []
    for j in range(k + 2 * burn + 1):
        pts.append(attractor_point(c, w).params)
        w = w.shift(2)
    Js = [jet_T(q, False, w_heights)[1] for q, w_heights in
          zip(pts[:-1], _pair_heights(window, burn, k))]
    v0 = canonical_cone_vector(pts[0]).asarray()
    eu, es = splitting_from_jacobians(Js, v0, burn)
    Jin = Js[burn: burn + k]
    inv_u = max((_angle(J @ eu[i], eu[i + 1]) for i, J in enumerate(Jin)), default=0.0)
    inv_s = max((_angle(J @ es[i], es[i + 1]) for i, J in enumerate(Jin)), default=0.0)
    ang = min(_angle(u, s) for u, s in zip(eu, es))
    if ang < 1e-6:
        raise DegenerateAlignment(f"stable and unstable directions within {ang:.2e} rad")
    exp_ = [float(np.linalg.norm(J @ eu[i])) for i, J in enumerate(Jin)]
    con = [float(np.linalg.norm(J @ es[i])) for i, J in enumerate(Jin)]
    k0, lam = None, None
    for kk in range(1, min(k0_max, k) + 1):
        f = uniform_factor(Jin, eu, es, kk)
        if f > 1.0:
            k0, lam = kk, f
            break
    return OrbitSplitting(pts[burn: burn + k + 1], eu, es, exp_, con, inv_u, inv_s, ang, k0, lam)


def _pair_heights(window, burn, k):
    out = []
    for j in range(-burn, k + burn):
        out.append((window.entry(2 * j), window.entry(2 * j + 1)))
    return out


# -- expansion and a priori data ------------------------------------------------

@dataclass
class ExpansionReport:
    values: list
    delta: float
    fit_from: int
    slope_stderr: float


def expansion_report(p, vbar, k: int, burn_in: Optional[int] = None, r_cap: int = DEFAULT_R_CAP):
    """a-components of D(T_c^j) vbar for j = 0..k with a log-linear growth fit.

    The fit uses j >= ``burn_in`` (default k // 2) so the transient from the
    stable component of vbar does not bias the rate.
    """
    p = p if isinstance(p, Params) else Params.unchecked(*p)
    vb = vbar.asarray() if isinstance(vbar, TangentVector) else np.asarray(vbar, dtype=float)
    _, Js = jacobian_chain(p, k, None, r_cap)
    vals = [float(vb[0])]
    w = vb.copy()
    for J in Js:
        w = J @ w
        vals.append(float(w[0]))
    j0 = k // 2 if burn_in is None else burn_in
    js = np.arange(j0, k + 1)
    y = np.log(np.abs(vals[j0:]))
    A = np.vstack([js, np.ones_like(js)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    dof = max(len(js) - 2, 1)
    s2 = float(res[0]) / dof if len(res) else 0.0
    se = math.sqrt(s2 / max(((js - js.mean()) ** 2).sum(), 1e-300))
    return ExpansionReport(vals, math.exp(coef[0]) - 1.0, j0, se)


@dataclass
class AprioriScan:
    min_lambda: float
    delta: float
    accepted: int
    rejected: int
    lambdas: np.ndarray


def sample_delta(c, n, rng):
    """Uniform samples of (a, v) in the part of D_c over Delta_c."""
    lo_v, hi_v = (0.0, c - 1.0) if c > 1.0 else (c - 1.0, 0.0)
    v = rng.uniform(lo_v, hi_v, n)
    a_lo = np.maximum(0.0, c - 1.0 - v)
    a = a_lo + (c - a_lo) * (1.0 - rng.uniform(0.0, 1.0, n))
    return a, v


def apriori_scan(c, n_samples: int, seed: int = 0, r_cap: int = DEFAULT_R_CAP) -> AprioriScan:
    """lambda = F^{r0}(-1) over Delta_c samples with two finite heights."""
    rng = np.random.default_rng(seed)
    lams = []
    rejected = 0
    while len(lams) < n_samples:
        A, V = sample_delta(c, 2 * (n_samples - len(lams)) + 16, rng)
        for a, v in zip(A, V):
            if len(lams) >= n_samples:
                break
            p = Params.unchecked(a, v, c)
            try:
                if a <= 0.0 or height(p, r_cap) == INF:
                    rejected += 1
                    continue
                s = renormalize_T(p, r_cap)
            except RenormError:
                rejected += 1
                continue
            lams.append(s.lam)
    lams = np.array(lams)
    mn = float(lams.min())
    return AprioriScan(mn, -1.0 / mn - 1.0, len(lams), rejected, lams)
