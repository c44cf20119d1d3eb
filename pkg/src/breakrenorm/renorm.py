"""Heights, continued fractions and the renormalisation operators R_c, T_c.

One R step of the pair (F, G) with height r is

    eta' = alpha o F^r o G o alpha^-1,   xi' = alpha o F o alpha^-1,
    alpha(x) = -x / a,

and the result is again a Moebius pair, now with break parameter 1/c.
T_c is two R steps; it keeps c.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels as K
from .errors import (
    DegenerateExtraction,
    DomainViolation,
    HeightCapExceeded,
    NotRenormalizable,
)
from .mobius import (
    BreakPair,
    MoebiusMap,
    Params,
    circle_map,
    constraint_violations,
    f_matrix,
    g_matrix,
    in_delta,
    make_pair,
    moebius_power,
    validate_params,
)

INF = math.inf
DEFAULT_R_CAP = 10_000
A_MIN = 1e-12
B_MIN = 1e-14


def _params_of(p) -> Params:
    if isinstance(p, BreakPair):
        return p.params
    if isinstance(p, Params):
        return p
    return validate_params(*p)


def _soft_params(a, v, c) -> Params:
    """Validated when possible; boundary images (a = 0 and the like) pass through."""
    if not constraint_violations(a, v, c) and c != 1.0:
        return Params(float(a), float(v), float(c))
    return Params.unchecked(a, v, c)


def height(p, r_cap: int = DEFAULT_R_CAP):
    """Smallest r >= 1 with F^r(-1) <= 0 < F^{r+1}(-1), or ``math.inf``."""
    a, v, c = _params_of(p).astuple()
    r, _, _ = K.height_orbit(a, v, c, r_cap)
    if r == K.HEIGHT_INF:
        return INF
    if r == K.HEIGHT_CAP:
        raise HeightCapExceeded(r_cap)
    return int(r)


# -- continued fractions --------------------------------------------------------

@dataclass(frozen=True)
class ContinuedFraction:
    """[r0, r1, ...]; ``math.inf`` may only appear last.

    ``cap_exceeded`` marks an expansion whose next entry is known to exceed
    ``r_cap``; ``halted`` names the reason the expansion stopped.
    """
    entries: tuple
    cap_exceeded: bool = False
    r_cap: int = DEFAULT_R_CAP
    halted: str = "depth"

    def __post_init__(self):
        ent = tuple(self.entries)
        for i, r in enumerate(ent):
            if r == INF:
                if i != len(ent) - 1:
                    raise ValueError("entries after an infinite height")
            elif int(r) != r or r < 1:
                raise ValueError(f"height {r!r} is not a positive integer")
        object.__setattr__(self, "entries", tuple(INF if r == INF else int(r) for r in ent))

    def __len__(self):
        return len(self.entries)

    @property
    def depth(self):
        return len(self.entries)

    @property
    def terminated(self):
        return bool(self.entries) and self.entries[-1] == INF

    def _eval(self, tail):
        x = tail
        for r in reversed(self.entries):
            if r == INF:
                x = 0.0
            else:
                x = 1.0 / (r + x)
        return x

    @property
    def value(self) -> float:
        return self.interval()[0] if self.terminated else self._eval(0.0)

    def interval(self):
        """Closed interval containing every value consistent with the entries."""
        if self.terminated:
            x = self._eval(0.0)
            return (x, x)
        t_hi = 1.0 / (self.r_cap + 1.0) if self.cap_exceeded else 1.0
        lo, hi = self._eval(0.0), self._eval(t_hi)
        return (min(lo, hi), max(lo, hi))

    def compare(self, other) -> Optional[int]:
        """Sign of value(self) - value(other), or None when the prefixes cannot decide."""
        x, y = self.entries, other.entries
        n = min(len(x), len(y))
        for i in range(n):
            if x[i] != y[i]:
                s = 1 if x[i] > y[i] else -1
                return s * (-1) ** (i + 1)
        if len(x) == len(y):
            return 0 if self.terminated and other.terminated else None
        # the longer one has an extra entry where the shorter one has a bound
        longer, shorter, sgn = (self, other, 1) if len(x) > len(y) else (other, self, -1)
        nxt = longer.entries[n]
        if shorter.cap_exceeded and nxt != INF and nxt <= shorter.r_cap:
            # shorter's next entry exceeds r_cap, so it is larger
            return sgn * (-1) * (-1) ** (n + 1)
        return None

    def prefix(self, n):
        return tuple(self.entries[:n])

    def __str__(self):
        body = ", ".join("inf" if r == INF else str(r) for r in self.entries)
        tail = ", >%d" % self.r_cap if self.cap_exceeded else ""
        return f"[{body}{tail}]"


def rotation_number(p, depth: int = 30, r_cap: int = DEFAULT_R_CAP,
                    strict: bool = True) -> ContinuedFraction:
    """Continued fraction of the rotation number from successive heights.

    Expansion stops at ``depth`` entries, at an infinite height, or when the
    renormalised pair degenerates (a_n < 1e-12).  With ``strict`` a height
    above ``r_cap`` raises :class:`HeightCapExceeded` carrying the partial
    expansion; otherwise the partial expansion is returned flagged.
    """
    a, v, c = _params_of(p).astuple()
    out = np.zeros(max(depth, 1), dtype=np.int64)
    n, status, _, _, _ = K.cf_kernel(a, v, c, depth, r_cap, A_MIN, B_MIN, out)
    entries = [INF if r == K.HEIGHT_INF else int(r) for r in out[:n]]
    halted = {K.CF_DEPTH: "depth", K.CF_INF: "infinite", K.CF_CAP: "cap",
              K.CF_DEGEN: "degenerate"}[int(status)]
    cf = ContinuedFraction(tuple(entries), status == K.CF_CAP, r_cap, halted)
    if strict and status == K.CF_CAP:
        raise HeightCapExceeded(r_cap, partial=cf)
    return cf


def birkhoff_rotation_number(p, iterations: int = 1_000_000) -> float:
    """(L^N(0) - 0) / N for the lift L; error below 1/N."""
    pair = p if isinstance(p, BreakPair) else make_pair(_params_of(p))
    w, zn = circle_map(pair).turns(-1.0, iterations)
    return (w + zn + 1.0) / iterations


# -- R and T --------------------------------------------------------------------

@dataclass(frozen=True)
class StepResult:
    new_params: Params
    heights: tuple
    lam: float
    residual: float
    eta: Optional[MoebiusMap] = None
    xi: Optional[MoebiusMap] = None
    path_gap: float = 0.0
    boundary: bool = False


def _rescale(a):
    """alpha(x) = -x/a and its inverse as matrices."""
    return np.array([[-1.0, 0.0], [0.0, a]]), np.array([[-a, 0.0], [0.0, 1.0]])


def _family_residual(eta, xi, q: Params):
    return max(eta.projective_distance(f_matrix(*q.astuple())),
               xi.projective_distance(g_matrix(*q.astuple())))


def _extract(eta: MoebiusMap, c_new):
    a2 = eta(0.0)
    b2 = -eta(-1.0)
    if not b2 > B_MIN:
        raise DegenerateExtraction(f"b' = {b2!r} too small to extract v'")
    v2 = (c_new - a2 - b2) / b2
    return a2, v2


def renormalize_R(p, r_cap: int = DEFAULT_R_CAP, branch_height: Optional[int] = None) -> StepResult:
    """One renormalisation step; ``branch_height`` forces the height used.

    A forced height evaluates the same Moebius algebra on another branch,
    which is how the dual inverse is realised.
    """
    p = _params_of(p)
    a, v, c = p.astuple()
    if branch_height is None:
        r = height(p, r_cap)
        if r == INF:
            raise NotRenormalizable(f"F fixes a point of [-1, 0] at {p}")
    else:
        r = int(branch_height)
        if r < 1:
            raise ValueError("branch height must be >= 1")
    Fm, Gm = f_matrix(a, v, c), g_matrix(a, v, c)
    H = moebius_power(MoebiusMap(Fm), r).m @ Gm
    al, al_inv = _rescale(a)
    eta = MoebiusMap(al @ H @ al_inv)
    xi = MoebiusMap(al @ Fm @ al_inv)
    c2 = 1.0 / c
    a2, v2 = _extract(eta, c2)
    q = _soft_params(a2, v2, c2)
    lam = -a * a2
    return StepResult(q, (r,), lam, _family_residual(eta, xi, q), eta, xi,
                      boundary=q.a <= A_MIN)


def renormalize_T(p, r_cap: int = DEFAULT_R_CAP, branch_heights=None) -> StepResult:
    """T_c = R_{1/c} o R_c, cross-checked against the single composite formula.

    The composite route rescales (F^{r0} G)^{r1} F and F^{r0} G by
    x -> -x/lambda with lambda = F^{r0}(-1); ``path_gap`` is the larger
    coordinate difference between the two routes.
    """
    p = _params_of(p)
    h0, h1 = (None, None) if branch_heights is None else branch_heights
    s1 = renormalize_R(p, r_cap, h0)
    s2 = renormalize_R(s1.new_params, r_cap, h1)
    r0, r1 = s1.heights[0], s2.heights[0]
    a, v, c = p.astuple()
    Fm, Gm = f_matrix(a, v, c), g_matrix(a, v, c)
    H2 = moebius_power(MoebiusMap(Fm), r0).m @ Gm
    H2 /= np.abs(H2).max()
    H1 = moebius_power(MoebiusMap(H2), r1).m @ Fm
    lam = MoebiusMap(moebius_power(MoebiusMap(Fm), r0).m)(-1.0)
    be, be_inv = _rescale(lam)
    eta = MoebiusMap(be @ H1 @ be_inv)
    xi = MoebiusMap(be @ H2 @ be_inv)
    a2, v2 = _extract(eta, c)
    q2 = s2.new_params
    gap = max(abs(a2 - q2.a), abs(v2 - q2.v))
    q = _soft_params(q2.a, q2.v, c)
    res = max(s1.residual, s2.residual, _family_residual(eta, xi, q))
    return StepResult(q, (r0, r1), lam, res, eta, xi, gap, boundary=s2.boundary)


def T_orbit(p, steps: int, r_cap: int = DEFAULT_R_CAP):
    """[p, T p, T^2 p, ...] together with the heights consumed."""
    pts = [_params_of(p)]
    hs = []
    for _ in range(steps):
        s = renormalize_T(pts[-1], r_cap)
        pts.append(s.new_params)
        hs.extend(s.heights)
    return pts, hs


def prerenormalize(p, n: int, r_cap: int = DEFAULT_R_CAP):
    """(H_n, K_n, gamma_n) with H_{k+1} = H_k^{r_k} K_k, K_{k+1} = H_k.

    gamma_n = alpha_n o ... o alpha_1 is the accumulated rescaling, so that
    gamma_n H_n gamma_n^-1 and gamma_n K_n gamma_n^-1 are the n-th
    renormalised maps.  Also returns the level parameters and heights.
    """
    p = _params_of(p)
    a, v, c = p.astuple()
    H, Kk, gam = MoebiusMap(f_matrix(a, v, c)), MoebiusMap(g_matrix(a, v, c)), np.eye(2)
    levels, hs = [p], []
    q = p
    for k in range(n):
        r = height(q, r_cap)
        if r == INF:
            raise NotRenormalizable(f"height infinite at depth {k}")
        H, Kk = MoebiusMap(moebius_power(H, r).m @ Kk.m), H
        al, _ = _rescale(q.a)
        gam = al @ gam
        gam /= np.abs(gam).max()
        q = renormalize_R(q, r_cap).new_params
        levels.append(q)
        hs.append(r)
    return H, Kk, MoebiusMap(gam), levels, hs


def prerenormalize_residual(p, n: int, r_cap: int = DEFAULT_R_CAP) -> float:
    """Projective distance between (H_n, K_n) and gamma_n^-1 (F_n, G_n) gamma_n."""
    H, Kk, gam, levels, _ = prerenormalize(p, n, r_cap)
    g, gi = gam.m, np.linalg.inv(gam.m)
    q = levels[-1]
    return max(H.projective_distance(gi @ f_matrix(*q.astuple()) @ g),
               Kk.projective_distance(gi @ g_matrix(*q.astuple()) @ g))


# -- regions --------------------------------------------------------------------

class Status(enum.Enum):
    NONRENORMALIZABLE = "nonrenormalizable"
    RENORMALIZABLE = "renormalizable"
    UNDECIDED = "undecided"
    OUTSIDE = "outside"


@dataclass(frozen=True)
class RegionClass:
    in_D: bool
    in_Delta: bool
    status: Status
    k: object = None
    closed_form: Optional[bool] = None
    dynamic: Optional[bool] = None
    note: str = ""


BAND = 1e-3


def nonrenormalizable_closed_form(a, v, c) -> bool:
    if c <= 1.0 or v <= (c - 1.0) / 2.0:
        return False
    return max(0.0, c - v - 1.0) < a <= (c - 1.0) ** 2 / (4.0 * v)


def _band_slack(a, v, c):
    """Smallest |slack| among the region inequalities, when all are nearly met."""
    if c <= 1.0 or v <= 0.0:
        return INF
    s = (v - (c - 1.0) / 2.0, a - max(0.0, c - v - 1.0), (c - 1.0) ** 2 / (4.0 * v) - a)
    if min(s) < -BAND:
        return INF
    return min(abs(x) for x in s)


def classify(a, v, c, r_cap: int = DEFAULT_R_CAP) -> RegionClass:
    """Region of (a, v) in the c-plane.

    Non-renormalisability is decided twice, by the closed-form inequalities
    and by running the orbit of -1; inside the 1e-3 band around the region
    boundary, or if the two disagree, the status is UNDECIDED.
    """
    a, v, c = float(a), float(v), float(c)
    inD = a > 0.0 and a <= c and a + v > c - 1.0
    inDelta = in_delta(v, c)
    if not inD or c == 1.0:
        return RegionClass(inD, inDelta, Status.OUTSIDE)
    closed = nonrenormalizable_closed_form(a, v, c)
    dyn = K.dynamic_height(a, v, c, r_cap) == K.HEIGHT_INF
    if _band_slack(a, v, c) <= BAND:
        return RegionClass(inD, inDelta, Status.UNDECIDED, None, closed, dyn, "boundary band")
    if closed != dyn:
        return RegionClass(inD, inDelta, Status.UNDECIDED, None, closed, dyn, "verdicts disagree")
    if closed:
        return RegionClass(inD, inDelta, Status.NONRENORMALIZABLE, INF, closed, dyn)
    r, _, _ = K.height_orbit(a, v, c, r_cap)
    if r < 1:
        return RegionClass(inD, inDelta, Status.UNDECIDED, None, closed, dyn, "height cap")
    return RegionClass(inD, inDelta, Status.RENORMALIZABLE, int(r), closed, dyn)


# -- duality --------------------------------------------------------------------

def involution_I(p, check: bool = True) -> Params:
    """I_c(a, v) = ((c - 1 - v)/(a v), -v/c), landing in the 1/c plane.

    With ``check`` an image outside D_{1/c} raises :class:`DomainViolation`.
    """
    a, v, c = (p.astuple() if isinstance(p, Params) else tuple(map(float, p)))
    if a * v == 0.0:
        raise DomainViolation("involution needs a v != 0", (a, v, c))
    q = Params.unchecked((c - 1.0 - v) / (a * v), -v / c, 1.0 / c)
    if check:
        bad = constraint_violations(*q.astuple())
        if bad:
            raise DomainViolation("image outside D_{1/c}: " + "; ".join(bad), q)
    return q


def involution_jacobian_det(p) -> float:
    a, v, c = p.astuple() if isinstance(p, Params) else p
    return (c - 1.0 - v) / (a * a * c * v)


def dual_inverse_R(q, branch_height: Optional[int] = None, r_cap: int = DEFAULT_R_CAP) -> Params:
    """R^-1 through duality: I(R(I(q))) in the plane of q.

    The branch defaults to the natural height of I(q), which equals the
    height of the pre-image whenever q lies on a backward-extendable orbit;
    pass ``branch_height`` to invert on a prescribed branch.
    """
    q = q if isinstance(q, Params) else Params.unchecked(*q)
    s = renormalize_R(involution_I(q, check=False), r_cap, branch_height)
    return involution_I(s.new_params, check=False)


def dual_inverse_T(p, branch_heights=None, r_cap: int = DEFAULT_R_CAP) -> Params:
    """T_c^-1 = I_{1/c} o T_{1/c} o I_c; ``branch_heights`` as in renormalize_T."""
    p = p if isinstance(p, Params) else Params.unchecked(*p)
    s = renormalize_T(involution_I(p, check=False), r_cap, branch_heights)
    return involution_I(s.new_params, check=False)


def duality_heights(p, r_cap: int = DEFAULT_R_CAP):
    """(height(p), height(I_{1/c}(R_c p))); equal on backward-extendable points."""
    p = _params_of(p)
    q = renormalize_R(p, r_cap).new_params
    return height(p, r_cap), height(involution_I(q, check=False), r_cap)
