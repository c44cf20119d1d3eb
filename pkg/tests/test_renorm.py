import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from breakrenorm.errors import HeightCapExceeded, NotRenormalizable, RenormError
from breakrenorm.mobius import Params
from breakrenorm.renorm import (INF, ContinuedFraction, Status, T_orbit, birkhoff_rotation_number,
                                classify, dual_inverse_R, dual_inverse_T, duality_heights, height,
                                involution_I, involution_jacobian_det,
                                nonrenormalizable_closed_form, prerenormalize_residual,
                                renormalize_R, renormalize_T, rotation_number)
from conftest import d_points, delta_points
import oracles


def _rational_points(rng, n, c):
    for _ in range(n):
        a = Fraction(int(rng.integers(1, 100)), 100) * c
        lo = max(c - 1 - a, Fraction(-1))
        v = lo + Fraction(int(rng.integers(1, 100)), 100) * (c + 1 - lo)
        yield a, v, c


def test_reference_T_step_is_exact():
    s = renormalize_T(Params(1.0, 0.5, 2.0))
    assert s.heights == (2, 1)
    assert abs(s.new_params.a - 16 / 9) < 1e-14
    assert abs(s.new_params.v - 11 / 18) < 1e-14
    assert s.new_params.c == 2.0
    assert s.path_gap < 1e-13


def test_R_against_exact_rational_step(rng):
    for c in (Fraction(3, 5), Fraction(3, 2), Fraction(19, 10)):
        for a, v, cc in _rational_points(rng, 30, c):
            if oracles.exact_height(a, v, cc, cap=60) is None:
                continue
            ex = oracles.exact_R(a, v, cc, cap=60)
            p = Params(float(a), float(v), float(cc))
            a2, v2, c2, r, eta, xi = ex
            # the exact maps are exactly the model pair of the new parameters
            assert oracles.proportional(eta, oracles.F_mat(a2, v2, c2))
            assert oracles.proportional(xi, oracles.G_mat(a2, v2, c2))
            if a2 <= 0 or abs(float(v2)) > 1e6:
                continue
            try:
                s = renormalize_R(p)
            except RenormError:
                continue
            assert s.heights == (r,)
            assert abs(s.new_params.a - float(a2)) < 1e-10 * max(1.0, float(a2))
            assert abs(s.new_params.v - float(v2)) < 1e-10 * max(1.0, abs(float(v2)))


@given(d_points())
def test_R_swaps_c_and_stays_in_family(p):
    try:
        s = renormalize_R(Params(*p))
    except RenormError:
        assume(False)
    # a = c maps to a' = 0, where G degenerates
    assume(not s.boundary)
    assert s.new_params.c == 1.0 / p[2]
    assert s.residual < 1e-9


@given(d_points())
def test_T_is_R_twice(p):
    try:
        s = renormalize_T(Params(*p))
        q = renormalize_R(renormalize_R(Params(*p)).new_params).new_params
    except RenormError:
        assume(False)
    assert abs(s.new_params.a - q.a) <= 1e-9 * max(1.0, abs(q.a))
    assert abs(s.new_params.v - q.v) <= 1e-9 * max(1.0, abs(q.v))


def test_nonrenormalizable_raises():
    p = Params(0.6, 1.5, 3.0)
    assert nonrenormalizable_closed_form(0.6, 1.5, 3.0)
    assert height(p) == INF
    with pytest.raises(NotRenormalizable):
        renormalize_R(p)


def test_height_cap():
    p = Params(1.0, 0.5, 2.0)
    with pytest.raises(HeightCapExceeded):
        rotation_number(p, 10, r_cap=3)
    cf = rotation_number(p, 10, r_cap=3, strict=False)
    assert cf.cap_exceeded and cf.entries == (2, 1, 1)
    assert cf.interval()[0] <= rotation_number(p, 10).value <= cf.interval()[1]


def test_reference_expansion():
    cf = rotation_number(Params(1.0, 0.5, 2.0), 15)
    assert cf.entries[:4] == (2, 1, 1, 4)
    lo, hi = cf.interval()
    assert lo <= cf.value <= hi and hi - lo < 1e-12


@pytest.mark.parametrize("p", [(1.0, 0.5, 2.0), (0.9, 0.3, 1.5), (0.4, -0.1, 0.8), (0.35, -0.3, 0.6)])
def test_expansion_agrees_with_birkhoff_oracle(p):
    cf = rotation_number(Params(*p), 12, strict=False)
    lo, hi = cf.interval()
    n = 200_000
    rho = oracles.birkhoff(*p, n)
    assert lo - 2.0 / n <= rho <= hi + 2.0 / n
    assert abs(birkhoff_rotation_number(Params(*p), n) - rho) < 2.0 / n
    k = min(len(cf.entries), 4)
    if not cf.terminated:
        assert tuple(oracles.gauss_cf(cf.value, k)) == cf.entries[:k]


entries = st.lists(st.integers(1, 9), min_size=1, max_size=12)


@given(entries, entries)
def test_cf_order_matches_values(x, y):
    X = ContinuedFraction(tuple(x) + (INF,))
    Y = ContinuedFraction(tuple(y) + (INF,))
    s = X.compare(Y)
    vx, vy = X.value, Y.value
    if s is None:
        return
    if s > 0:
        assert vx >= vy
    elif s < 0:
        assert vx <= vy
    else:
        assert x == y


@given(entries, st.lists(st.integers(1, 50), min_size=1, max_size=6))
def test_cf_interval_contains_extensions(x, tail):
    P = ContinuedFraction(tuple(x))
    lo, hi = P.interval()
    v = ContinuedFraction(tuple(x) + tuple(tail)).value
    assert lo - 1e-15 <= v <= hi + 1e-15


def test_cf_rejects_inner_infinity():
    with pytest.raises(ValueError):
        ContinuedFraction((1, INF, 2))


@given(st.sampled_from([0.6, 0.8, 1.5, 1.9]), st.floats(0.02, 0.98))
def test_rotation_number_monotone_on_transversal(c, s):
    from breakrenorm.horseshoe import transversal_family
    tr = transversal_family(c, (c, s * (c - 1.0)) if c > 1 else (s * c, 0.0))
    ts = np.linspace(tr.t_lo, tr.t_hi, 25)
    cfs = [rotation_number(tr.params(t), 12, strict=False) for t in ts]
    for x, y in zip(cfs, cfs[1:]):
        cmp = x.compare(y)
        assert cmp is None or cmp <= 0


@given(st.sampled_from([1.5, 1.9]), st.floats(0.01, 0.99))
def test_height_non_increasing_in_a_on_verticals(c, s):
    v = s * (c - 1.0)
    prev = math.inf
    for a in np.linspace(max(c - 1 - v, 0) + 1e-3, c, 60):
        h = height(Params.unchecked(a, v, c))
        assert h <= prev
        prev = h


@given(d_points())
def test_classify_agrees_off_band(p):
    a, v, c = p
    rc = classify(a, v, c)
    if rc.status in (Status.NONRENORMALIZABLE, Status.RENORMALIZABLE):
        assert rc.closed_form == rc.dynamic
    if c < 1:
        assert rc.status is not Status.NONRENORMALIZABLE
    assert rc.status is not Status.OUTSIDE


def test_classify_outside():
    assert classify(0.1, 0.2, 2.0).status is Status.OUTSIDE


@given(d_points())
def test_involution_is_an_involution(p):
    assume(abs(p[1]) > 1e-3 and abs(p[2] - 1.0 - p[1]) > 1e-3)
    P = Params(*p)
    q = involution_I(P, check=False)
    r = involution_I(q, check=False)
    assert q.c == 1.0 / P.c
    assert abs(r.a - P.a) < 1e-12 * max(1.0, P.a) and abs(r.v - P.v) < 1e-12 * max(1.0, abs(P.v))


@given(delta_points())
def test_involution_jacobian_det(p):
    assume(abs(p[1]) > 1e-2)
    P = Params(*p)
    J = oracles.central_jacobian(lambda x: involution_I(Params.unchecked(x[0], x[1], P.c), False).astuple()[:2],
                                 (P.a, P.v), h=1e-7)
    det = J[0][0] * J[1][1] - J[0][1] * J[1][0]
    assert abs(det - involution_jacobian_det(P)) < 1e-5 * max(1.0, abs(det))


def test_dual_inverse_on_T_images(rng):
    from breakrenorm.hyperbolicity import sample_delta
    done = 0
    for c in (0.8, 1.5):
        A, V = sample_delta(c, 200, rng)
        for a, v in zip(A, V):
            try:
                x = renormalize_T(Params.unchecked(a, v, c), r_cap=100).new_params
                s = renormalize_R(x, r_cap=100)
                back = dual_inverse_R(s.new_params)
                hx, hdual = duality_heights(x)
            except RenormError:
                continue
            assert math.hypot(back.a - x.a, back.v - x.v) < 1e-8
            assert hx == hdual
            done += 1
    assert done > 300


def test_dual_inverse_T():
    x = renormalize_T(renormalize_T(Params(0.9, 0.3, 1.5)).new_params).new_params
    y = renormalize_T(x).new_params
    back = dual_inverse_T(y)
    assert math.hypot(back.a - x.a, back.v - x.v) < 1e-8


@pytest.mark.parametrize("n", [1, 2, 4, 6])
def test_prerenormalisation_conjugates_to_renormalisation(n):
    assert prerenormalize_residual(Params(1.0, 0.5, 2.0), n) < 1e-9


def test_orbit_heights_follow_expansion():
    p = Params(1.0, 0.5, 2.0)
    pts, hs = T_orbit(p, 4)
    assert tuple(hs) == rotation_number(p, 8).entries
    assert all(q.c == 2.0 for q in pts)
