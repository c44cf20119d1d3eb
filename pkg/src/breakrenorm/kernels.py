"""Hot scalar kernels.

Every kernel here is written once as plain Python on floats and compiled with
``numba.njit`` unless ``RENORM_NUMBA=0``.  The batched kernels additionally
carry a vectorised NumPy implementation (``*_np``) which is what the
fallback path dispatches to; the scalar loop versions (``*_loop``) are what
numba compiles.  Both are importable regardless of the flag so the test
suite and ``benchmarks/`` can compare them.

Conventions shared by all kernels:

* the Moebius pair is passed as three floats ``(a, v, c)``;
* heights are ``int64`` with ``HEIGHT_INF`` for "no crossing, fixed point"
  and ``HEIGHT_CAP`` for "cap exceeded";
* the continued-fraction kernel reports a status code (``CF_*``).
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit

HEIGHT_INF = -1
HEIGHT_CAP = -2

CF_DEPTH = 0
CF_INF = 1
CF_CAP = 2
CF_DEGEN = 3

TWO_PI = 2.0 * math.pi


@njit
def f_eval(a, v, c, x):
    return (a + c * x) / (1.0 - v * x)


@njit
def g_eval(a, v, c, x):
    return a * (x - c) / (a * c + x * (1.0 + v - c))


@njit
def has_fixed_point(a, v, c):
    """True when F_{a,v,c} fixes a point of [-1, 0] (roots of v z^2 + (c-1) z + a)."""
    if a <= 0.0:
        return True
    if v - (c - 1.0) + a <= 0.0:
        return True
    if v <= 0.0:
        return False
    vertex = -(c - 1.0) / (2.0 * v)
    if vertex <= -1.0 or vertex >= 0.0:
        return False
    return (c - 1.0) * (c - 1.0) - 4.0 * a * v >= 0.0


@njit
def height_orbit(a, v, c, r_cap):
    """Height of the pair and the two orbit points straddling zero.

    Returns ``(r, F^r(-1), F^{r+1}(-1))``.  A stalled orbit with no closed-form
    fixed point is reported as ``HEIGHT_CAP``: that only happens within
    rounding of a parabolic parameter.
    """
    if has_fixed_point(a, v, c):
        return HEIGHT_INF, 0.0, 0.0
    x = f_eval(a, v, c, -1.0)
    r = 1
    while r <= r_cap:
        y = f_eval(a, v, c, x)
        if x <= 0.0 and y > 0.0:
            return r, x, y
        if y <= x:
            return HEIGHT_CAP, x, y
        x = y
        r += 1
    return HEIGHT_CAP, x, x


@njit
def dynamic_height(a, v, c, r_cap):
    """Height from the orbit of -1 alone, with no closed-form shortcut.

    ``HEIGHT_INF`` is returned when the orbit stops increasing (it has
    converged onto a fixed point) or never reaches zero within the cap.
    """
    x = f_eval(a, v, c, -1.0)
    r = 1
    while r <= r_cap:
        y = f_eval(a, v, c, x)
        if x <= 0.0 and y > 0.0:
            return r
        if y - x <= 1e-15:
            return HEIGHT_INF
        x = y
        r += 1
    return HEIGHT_INF


@njit
def renorm_step(a, v, c, lam, nxt):
    """Parameters of the renormalised pair from the straddling orbit points."""
    a2 = -lam / a
    b2 = nxt / a
    c2 = 1.0 / c
    v2 = (c2 - a2 - b2) / b2
    return a2, v2, c2, b2


@njit
def cf_kernel(a, v, c, depth, r_cap, a_min, b_min, out):
    """Heights r_0, r_1, ... of successive renormalisations written to ``out``.

    Returns ``(n, status, a_n, v_n, c_n)`` where ``n`` entries were written.
    """
    n = 0
    while n < depth:
        r, lam, nxt = height_orbit(a, v, c, r_cap)
        if r == HEIGHT_INF:
            out[n] = HEIGHT_INF
            return n + 1, CF_INF, a, v, c
        if r == HEIGHT_CAP:
            return n, CF_CAP, a, v, c
        out[n] = r
        n += 1
        a2 = -lam / a
        b2 = nxt / a
        if a2 > 0.0 and a2 < a_min:
            return n, CF_DEGEN, a, v, c
        if b2 < b_min:
            return n, CF_DEGEN, a, v, c
        a, v, c, b2 = renorm_step(a, v, c, lam, nxt)
    return n, CF_DEPTH, a, v, c


@njit
def _lift_orbit_loop(a, v, c, z, n):
    """Advance ``z`` in [-1, 0) by ``n`` steps of the circle map.

    Returns ``(w, z_n)`` with ``w`` the number of turns, so that the lift
    satisfies ``lift^n(x) - x = w + z_n - z``.  Keeping the integer part
    separate avoids losing the fractional digits at large ``n``.
    """
    zs = -a / c
    w = 0
    for _ in range(n):
        if z <= zs:
            z = f_eval(a, v, c, z)
            if z >= 0.0:
                z -= 1.0
                w += 1
        else:
            z = g_eval(a, v, c, f_eval(a, v, c, z))
            w += 1
    return w, z


# -- batched kernels -----------------------------------------------------------

@njit
def _orbit_batch_loop(A, V, c, r_cap):
    n = A.shape[0]
    R = np.empty(n, dtype=np.int64)
    L = np.empty(n)
    N = np.empty(n)
    for i in range(n):
        r, lam, nxt = height_orbit(A[i], V[i], c, r_cap)
        R[i] = r
        L[i] = lam
        N[i] = nxt
    return R, L, N


def _fixed_point_np(A, V, c):
    A = np.asarray(A, dtype=float)
    V = np.asarray(V, dtype=float)
    out = (A <= 0.0) | (V - (c - 1.0) + A <= 0.0)
    pos = V > 0.0
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        vertex = np.where(pos, -(c - 1.0) / (2.0 * np.where(pos, V, 1.0)), 0.0)
    inside = pos & (vertex > -1.0) & (vertex < 0.0)
    disc = (c - 1.0) ** 2 - 4.0 * A * V >= 0.0
    return out | (inside & disc)


def _orbit_batch_np(A, V, c, r_cap):
    A = np.asarray(A, dtype=float).ravel()
    V = np.asarray(V, dtype=float).ravel()
    R = np.full(A.shape, HEIGHT_CAP, dtype=np.int64)
    L = np.zeros(A.shape)
    N = np.zeros(A.shape)
    fp = _fixed_point_np(A, V, c)
    R[fp] = HEIGHT_INF
    active = ~fp
    with np.errstate(divide="ignore", invalid="ignore"):
        x = (A - c) / (1.0 + V)
        r = 1
        while active.any() and r <= r_cap:
            y = (A + c * x) / (1.0 - V * x)
            hit = active & (x <= 0.0) & (y > 0.0)
            R[hit] = r
            L[hit] = x[hit]
            N[hit] = y[hit]
            stall = active & ~hit & (y <= x)
            L[stall] = x[stall]
            N[stall] = y[stall]
            active &= ~(hit | stall)
            x = np.where(active, y, x)
            r += 1
    L[active] = x[active]
    N[active] = x[active]
    return R, L, N


@njit
def _dynamic_batch_loop(A, V, c, r_cap):
    n = A.shape[0]
    R = np.empty(n, dtype=np.int64)
    for i in range(n):
        R[i] = dynamic_height(A[i], V[i], c, r_cap)
    return R


def _dynamic_batch_np(A, V, c, r_cap):
    A = np.asarray(A, dtype=float).ravel()
    V = np.asarray(V, dtype=float).ravel()
    R = np.full(A.shape, HEIGHT_INF, dtype=np.int64)
    active = np.ones(A.shape, dtype=bool)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = (A - c) / (1.0 + V)
        r = 1
        while active.any() and r <= r_cap:
            y = (A + c * x) / (1.0 - V * x)
            hit = active & (x <= 0.0) & (y > 0.0)
            R[hit] = r
            stall = active & ~hit & (y - x <= 1e-15)
            active &= ~(hit | stall)
            x = np.where(active, y, x)
            r += 1
    return R


@njit
def _cf_batch_loop(A, V, c, depth, r_cap, a_min, b_min):
    n = A.shape[0]
    E = np.zeros((n, depth), dtype=np.int64)
    cnt = np.empty(n, dtype=np.int64)
    st = np.empty(n, dtype=np.int64)
    buf = np.zeros(depth, dtype=np.int64)
    for i in range(n):
        k, s, _, _, _ = cf_kernel(A[i], V[i], c, depth, r_cap, a_min, b_min, buf)
        for j in range(k):
            E[i, j] = buf[j]
        cnt[i] = k
        st[i] = s
    return E, cnt, st


def _cf_batch_np(A, V, c, depth, r_cap, a_min, b_min):
    A = np.asarray(A, dtype=float).ravel().copy()
    V = np.asarray(V, dtype=float).ravel().copy()
    n = A.shape[0]
    C = np.full(n, float(c))
    E = np.zeros((n, depth), dtype=np.int64)
    cnt = np.zeros(n, dtype=np.int64)
    st = np.full(n, CF_DEPTH, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    for j in range(depth):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        # c alternates level by level, and every active cell shares it
        R, L, N = _orbit_batch_np(A[idx], V[idx], C[idx[0]], r_cap)
        inf = R == HEIGHT_INF
        cap = R == HEIGHT_CAP
        E[idx[inf], j] = HEIGHT_INF
        cnt[idx[inf]] = j + 1
        st[idx[inf]] = CF_INF
        st[idx[cap]] = CF_CAP
        ok = ~(inf | cap)
        E[idx[ok], j] = R[ok]
        cnt[idx[ok]] = j + 1
        active[idx[~ok]] = False
        io = idx[ok]
        with np.errstate(divide="ignore", invalid="ignore"):
            a2 = -L[ok] / A[io]
            b2 = N[ok] / A[io]
            degen = ((a2 > 0.0) & (a2 < a_min)) | (b2 < b_min)
            c2 = 1.0 / C[io]
            v2 = (c2 - a2 - b2) / b2
        st[io[degen]] = CF_DEGEN
        active[io[degen]] = False
        A[io], V[io], C[io] = a2, v2, c2
    return E, cnt, st


# -- conjugated (non-Moebius) pairs ---------------------------------------------

@njit
def h_eval(x, eps):
    return x + eps / TWO_PI * math.sin(TWO_PI * x)


@njit
def h_inv(y, eps):
    """Inverse of h by safeguarded Newton on the bracket y +- eps/2pi."""
    if eps == 0.0:
        return y
    lo = y - eps / TWO_PI
    hi = y + eps / TWO_PI
    x = y
    for _ in range(60):
        fx = h_eval(x, eps) - y
        if fx > 0.0:
            hi = x
        else:
            lo = x
        step = fx / (1.0 + eps * math.cos(TWO_PI * x))
        xn = x - step
        if xn <= lo or xn >= hi:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 1e-17 * max(1.0, abs(x)):
            return xn
        x = xn
    return x


@njit
def conj_eval(sym, x, a, v, c, eps):
    """h o F o h^-1 (sym 0) or h o G o h^-1 (sym 1) at x."""
    y = h_inv(x, eps)
    if sym == 0:
        y = f_eval(a, v, c, y)
    else:
        y = g_eval(a, v, c, y)
    return h_eval(y, eps)


@njit
def _word_eval_loop(word, xs, scale, a, v, c, eps):
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        y = xs[i] / scale
        for k in range(word.shape[0]):
            y = conj_eval(word[k], y, a, v, c, eps)
        out[i] = scale * y
    return out


def _h_np(x, eps):
    return x + eps / TWO_PI * np.sin(TWO_PI * x)


def _h_inv_np(y, eps):
    if eps == 0.0:
        return np.array(y, dtype=float, copy=True)
    x = np.array(y, dtype=float, copy=True)
    for _ in range(60):
        step = (_h_np(x, eps) - y) / (1.0 + eps * np.cos(TWO_PI * x))
        x = x - step
        if np.all(np.abs(step) <= 1e-17 * np.maximum(1.0, np.abs(x))):
            break
    return x


def _word_eval_np(word, xs, scale, a, v, c, eps):
    y = np.asarray(xs, dtype=float) / scale
    for sym in np.asarray(word):
        y = _h_inv_np(y, eps)
        if sym == 0:
            y = (a + c * y) / (1.0 - v * y)
        else:
            y = a * (y - c) / (a * c + y * (1.0 + v - c))
        y = _h_np(y, eps)
    return scale * y


def _conj_lift_orbit_py(a, v, c, eps, z, n):
    zs = -a / c
    w = 0
    for _ in range(n):
        y = float(_h_inv_np(z, eps))
        if y <= zs:
            y = (a + c * y) / (1.0 - v * y)
            if y >= 0.0:
                y -= 1.0
                w += 1
        else:
            y = (a + c * y) / (1.0 - v * y)
            y = a * (y - c) / (a * c + y * (1.0 + v - c))
            w += 1
        z = float(_h_np(y, eps))
        if z >= 0.0:
            z -= 1.0
            w += 1
        elif z < -1.0:
            z += 1.0
            w -= 1
    return w, z


def _lift_orbit_py(a, v, c, z, n):
    zs = -a / c
    w = 0
    for _ in range(int(n)):
        if z <= zs:
            z = (a + c * z) / (1.0 - v * z)
            if z >= 0.0:
                z -= 1.0
                w += 1
        else:
            z = (a + c * z) / (1.0 - v * z)
            z = a * (z - c) / (a * c + z * (1.0 + v - c))
            w += 1
    return w, z


if USE_NUMBA:
    orbit_batch = _orbit_batch_loop
    dynamic_batch = _dynamic_batch_loop
    cf_batch = _cf_batch_loop
    word_eval = _word_eval_loop
    lift_orbit = _lift_orbit_loop
else:
    orbit_batch = _orbit_batch_np
    dynamic_batch = _dynamic_batch_np
    cf_batch = _cf_batch_np
    word_eval = _word_eval_np
    lift_orbit = _lift_orbit_py


def as_batch(A, V):
    A = np.ascontiguousarray(np.asarray(A, dtype=float).ravel())
    V = np.ascontiguousarray(np.asarray(V, dtype=float).ravel())
    return A, V


@njit
def cf_compare(a, v, c, target, periodic, maxdepth, r_cap, a_min, b_min):
    """Order of the rotation number of (a, v, c) against a target expansion.

    ``target`` holds heights with ``HEIGHT_INF`` for an infinite entry; a
    periodic target repeats forever.  Returns ``(sign, n)`` where sign is
    -1, 0 or +1 for value(point) - value(target) decided at entry ``n``; 0
    means the first ``n`` entries agree (or both terminate), and 2 signals a
    degenerate renormalisation before a decision.
    """
    tl = target.shape[0]
    n = 0
    while n < maxdepth:
        if (not periodic) and n >= tl:
            return 0, n
        t = target[n % tl]
        r, lam, nxt = height_orbit(a, v, c, r_cap)
        par = 1 if n % 2 == 1 else -1
        if r == HEIGHT_CAP:
            # the true entry exceeds r_cap
            if t == HEIGHT_INF or t > r_cap:
                if t != HEIGHT_INF:
                    return 2, n
                return -par, n
            return par, n
        if r == HEIGHT_INF:
            if t == HEIGHT_INF:
                return 0, n + 1
            return par, n
        if t == HEIGHT_INF:
            return -par, n
        if r != t:
            return (par if r > t else -par), n
        n += 1
        a2 = -lam / a
        b2 = nxt / a
        if b2 < b_min:
            # next pair has F(-1) ~ 0: its height is 1 and the one after is huge
            if n >= maxdepth or ((not periodic) and n >= tl):
                return 0, n
            t = target[n % tl]
            if t != 1:
                par = 1 if n % 2 == 1 else -1
                return (-par if t == HEIGHT_INF or t > 1 else par), n
            n += 1
            a2 = 0.5 * a_min
        if a2 > 0.0 and a2 < a_min:
            # the next height exceeds anything resolvable in double precision
            if n >= maxdepth or ((not periodic) and n >= tl):
                return 0, n
            t = target[n % tl]
            if t == HEIGHT_INF:
                return 2, n
            par = 1 if n % 2 == 1 else -1
            return par, n
        a, v, c, b2 = renorm_step(a, v, c, lam, nxt)
    return 0, n


@njit
def _conj_lift_orbit_loop(a, v, c, eps, z, n):
    """``lift_orbit`` for h o f o h^-1, conjugating at every step."""
    zs = -a / c
    w = 0
    for _ in range(n):
        y = h_inv(z, eps)
        if y <= zs:
            y = f_eval(a, v, c, y)
            if y >= 0.0:
                y -= 1.0
                w += 1
        else:
            y = g_eval(a, v, c, f_eval(a, v, c, y))
            w += 1
        z = h_eval(y, eps)
        if z >= 0.0:
            z -= 1.0
            w += 1
        elif z < -1.0:
            z += 1.0
            w -= 1
    return w, z



conj_lift_orbit = _conj_lift_orbit_loop if USE_NUMBA else _conj_lift_orbit_py
