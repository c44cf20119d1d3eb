import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from breakrenorm import (GeneralBreakMap, Params, T_orbit, convergence_report, fit_model,
                         general_renormalize, make_conjugated_map, renormalize_R,
                         same_rho_contraction)
from breakrenorm.errors import DegenerateExtraction, DomainViolation, IterateBudgetExceeded
from breakrenorm.horseshoe import stable_a
from breakrenorm.smooth import commutation_defect, geometric_fit, measured_break

BASE = Params(1.0, 0.5, 2.0)


@given(st.floats(0.0, 0.95), st.floats(-1.0, 2.0))
def test_conjugacy_round_trip(eps, x):
    f = make_conjugated_map(BASE, eps)
    assert f.h_inv(f.h(x)) == pytest.approx(x, abs=1e-12)
    assert f.h(x + 1.0) == pytest.approx(f.h(x) + 1.0, abs=1e-12)


def test_epsilon_range():
    with pytest.raises(DomainViolation):
        GeneralBreakMap(BASE, 1.0)
    with pytest.raises(DomainViolation):
        GeneralBreakMap(BASE, -0.1)


def test_unperturbed_map_is_the_pair():
    f = make_conjugated_map(BASE, 0.0)
    xs = np.linspace(-1.0, -0.01, 40)
    want = [oracles.circle_step(1.0, 0.5, 2.0, x) for x in xs]
    got = [float(np.atleast_1d(f.lift(x))[0]) for x in xs]
    assert np.allclose(got, want, atol=1e-13)


@pytest.mark.parametrize("eps", [0.1, 0.3])
def test_rotation_number_is_a_conjugacy_invariant(eps):
    f = make_conjugated_map(BASE, eps)
    r0 = oracles.birkhoff(1.0, 0.5, 2.0, 200_000)
    assert f.birkhoff_rotation_number(200_000) == pytest.approx(r0, abs=2e-5)


@pytest.mark.parametrize("eps", [0.0, 0.3])
def test_break_ratios_multiply_to_c_squared(eps):
    f = make_conjugated_map(BASE, eps)
    r = f.break_ratios()
    assert r[0] * r[1] == pytest.approx(4.0, rel=1e-6)


def test_levels_match_moebius_renormalisation():
    levels = general_renormalize(make_conjugated_map(BASE, 0.0), 6)
    p = BASE
    for lev in levels[1:]:
        s = renormalize_R(p)
        p = s.new_params
        assert lev.c == p.c
        assert lev.a == pytest.approx(p.a, rel=1e-10, abs=1e-12)
        assert lev.endpoint_residual() < 1e-14
        assert lev.xi_at_zero == pytest.approx(-1.0, abs=1e-13)
    _, hs = T_orbit(BASE, 4)
    assert tuple(lev.height for lev in levels[:-1]) == tuple(hs[:6])


def test_word_lengths_follow_denominators():
    levels = general_renormalize(make_conjugated_map(BASE, 0.2), 5)
    q_prev, q = 1, 1
    for lev in levels[1:]:
        nH, nK = lev.word_lengths
        assert nK == q
        r = lev.heights[-1]
        q_prev, q = q, q * r + q_prev
        assert nH == q


def test_budget_is_enforced():
    with pytest.raises(IterateBudgetExceeded):
        general_renormalize(make_conjugated_map(BASE, 0.3), 8, budget=5_000)


def test_model_fit_is_exact_for_moebius_levels():
    levels = general_renormalize(make_conjugated_map(BASE, 0.0), 5)
    for lev in levels[1:]:
        m = fit_model(lev)
        assert m.dist_C0 < 1e-12
        assert commutation_defect(lev) < 1e-11
        assert measured_break(lev) == pytest.approx(lev.c ** 2, rel=1e-5)


def test_degenerate_level_is_reported():
    levels = general_renormalize(make_conjugated_map(BASE, 0.3), 3)
    lev = levels[2]
    lev.b = 0.0
    with pytest.raises(DegenerateExtraction):
        fit_model(lev)


def test_geometric_fit_recovers_rate():
    ns = np.arange(8)
    g = geometric_fit(ns, 3.0 * 0.4 ** ns)
    assert g.rate == pytest.approx(0.4, rel=1e-12)
    assert g.const == pytest.approx(3.0, rel=1e-12)
    assert g.r2 == pytest.approx(1.0)


def test_perturbed_levels_approach_the_family():
    rep = convergence_report(make_conjugated_map(BASE, 0.3), N=8)
    assert rep.alternation_ok
    assert rep.lambda_hat < 1.0
    assert rep.dist_C0[-1] < 1e-3 * rep.dist_C0[0]
    assert rep.commutation[-1] < rep.commutation[0]


def test_same_rho_points_contract():
    c = 1.5
    p1 = Params.unchecked(stable_a(c, 0.15, (1, 1)), 0.15, c)
    p2 = Params.unchecked(stable_a(c, 0.35, (1, 1)), 0.35, c)
    rep = same_rho_contraction(p1, p2, 8, word=(1, 1))
    assert set(rep.heights) == {1}
    assert rep.fit.rate < 1.0
    assert rep.distances[-1] < 1e-5 * rep.distances[0]
