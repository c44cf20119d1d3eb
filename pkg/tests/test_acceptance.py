"""Acceptance criteria 1-13, one test each.

Every test records a PASS/FAIL line; the lines are printed as the test
runs (visible with ``-s``) and again in the terminal summary.  Run
directly with ``python3 tests/test_acceptance.py`` for the lines alone.
"""
import math
import sys
from fractions import Fraction

import numpy as np
import pytest

import oracles
from conftest import C_VALUES, random_d_points
from breakrenorm import (Params, TangentVector, attractor_point, canonical_cone_vector,
                         check_commutation, convergence_report, eigensplit, expansion_report,
                         find_periodic_point, general_renormalize, in_cone, involution_I, jet_T,
                         jet_T_power, make_conjugated_map, make_pair, random_window, renormalize_R,
                         renormalize_T, rotation_number, same_rho_contraction, transversality_angle,
                         apriori_scan, dual_inverse_R)
from breakrenorm.cli import raster_regions
from breakrenorm.errors import RenormError, Undecided
from breakrenorm.horseshoe import stable_a, transversal_family
from breakrenorm.hyperbolicity import sample_delta
from breakrenorm.renorm import classify, duality_heights, f_matrix, g_matrix

RESULTS = {}
SEED = 20240601


def report(n, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {title} | {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def proj_dist(A, B):
    A = np.asarray(A, float) / np.linalg.norm(A)
    B = np.asarray(B, float) / np.linalg.norm(B)
    return min(np.abs(A - B).max(), np.abs(A + B).max())


_sample = {}


def renormalizable_sample(n_per_c=250):
    """1000 renormalisable parameter points, shared by criteria 1 and 2."""
    if "pts" not in _sample:
        rng = np.random.default_rng(SEED)
        pts = []
        for c in C_VALUES:
            got = []
            while len(got) < n_per_c:
                A, V = random_d_points(rng, 4 * n_per_c, c)
                for a, v in zip(A, V):
                    if len(got) == n_per_c:
                        break
                    p = Params(a, v, c)
                    try:
                        s = renormalize_R(p)
                    except RenormError:
                        continue
                    if not s.boundary:
                        got.append((p, s))
            pts += got
        _sample["pts"] = pts
    return _sample["pts"]


def delta_O2_sample(c, n, rng):
    out = []
    while len(out) < n:
        A, V = sample_delta(c, 2 * n, rng)
        for a, v in zip(A, V):
            if len(out) == n:
                break
            p = Params.unchecked(a, v, c)
            try:
                out.append((p, renormalize_T(p)))
            except RenormError:
                pass
    return out


def test_c01_family_invariance():
    worst = 0.0
    for p, s in renormalizable_sample():
        q = s.new_params
        d = max(proj_dist(s.eta.m, f_matrix(*q.astuple())), proj_dist(s.xi.m, g_matrix(*q.astuple())))
        worst = max(worst, d)
    n = len(renormalizable_sample())
    report(1, "family invariance", n == 1000 and worst <= 1e-9,
           f"{n} points, max projective distance {worst:.2e} (tol 1e-9)")


def test_c02_identities():
    ep = br = cm = 0.0
    for p, _ in renormalizable_sample():
        pair = make_pair(p)
        ep = max(ep, pair.endpoint_residual())
        br = max(br, abs(pair.break_ratio() / p.c ** 2 - 1.0))
        cm = max(cm, check_commutation(pair, 200))
    report(2, "pair identities", ep <= 1e-12 and br <= 1e-10 and cm <= 1e-11,
           f"endpoints {ep:.2e} (1e-12), break ratio rel {br:.2e} (1e-10), commutation {cm:.2e} (1e-11)")


def test_c03_duality():
    rng = np.random.default_rng(SEED + 3)
    inv = 0.0
    for p, _ in renormalizable_sample():
        if p.v == 0.0 or p.c - 1.0 - p.v == 0.0:
            continue
        back = involution_I(involution_I(p, check=False), check=False)
        inv = max(inv, abs(back.a - p.a) / max(1.0, abs(p.a)), abs(back.v - p.v) / max(1.0, abs(p.v)))
    worst, n, heights_ok = 0.0, 0, True
    per_c = 50
    for c in C_VALUES:
        got = 0
        # x = T(y) needs a finite height of its own for R(x) to exist
        for y, t in delta_O2_sample(c, 2 * per_c, rng):
            if got == per_c:
                break
            x = t.new_params
            try:
                s = renormalize_R(x)
                hx, hd = duality_heights(x)
            except RenormError:
                continue
            back = dual_inverse_R(s.new_params)
            worst = max(worst, math.hypot(back.a - x.a, back.v - x.v))
            heights_ok &= hx == hd
            n += 1
            got += 1
    report(3, "duality", inv <= 1e-12 and worst <= 1e-8 and heights_ok and n >= 200,
           f"I o I residual {inv:.2e} (1e-12); dual_inverse_R error {worst:.2e} on {n} T-images (1e-8); "
           f"heights preserved: {heights_ok}")


def test_c04_region_formula():
    rows = raster_regions(2.0, 200, (0.0, 2.0, -1.0, 3.0))
    disagree = band = nonren = 0
    for r in rows:
        if r["class"] == "undecided":
            if r["note"] == "boundary band":
                band += 1
            else:
                disagree += 1
        elif r["class"] != "outside":
            rc = classify(r["a"], r["v"], 2.0)
            disagree += rc.closed_form != rc.dynamic
            nonren += r["class"] == "nonrenormalizable"
    rows08 = raster_regions(0.8, 200)
    n08 = sum(r["class"] == "nonrenormalizable" for r in rows08)
    report(4, "region formula", disagree == 0 and nonren > 0 and n08 == 0,
           f"c=2: {len(rows)} cells, {nonren} nonrenormalizable, {band} in band, {disagree} disagreements; "
           f"c=0.8: {n08} nonrenormalizable")


def test_c05_invariant_domain():
    rng = np.random.default_rng(SEED + 5)
    out = 0
    total = 0
    for c in C_VALUES:
        for _, t in delta_O2_sample(c, 125, rng):
            q = t.new_params
            out += not (q.in_D(1e-10) and q.in_Delta(1e-10))
            total += 1
    report(5, "invariant domain", out == 0 and total == 500, f"{out} of {total} images leave Delta_c")


def test_c06_golden_horseshoe():
    c = 1.5
    lines, ok = [], True
    for word in ((1, 1), (2, 1), (1, 2)):
        pp = find_periodic_point(c, word)
        cf = rotation_number(pp.params, 20).entries
        want = tuple(word[i % 2] for i in range(20))
        rec = eigensplit(pp.jacobian)
        hyp = abs(rec.lambda_u) > 1 + 1e-3 > 1 - 1e-3 > abs(rec.lambda_s)
        y = involution_I(pp.params)
        sy = renormalize_T(y)
        dres = math.hypot(sy.new_params.a - y.a, sy.new_params.v - y.v)
        ry = eigensplit(jet_T(y, False)[1])
        recip = max(abs(ry.lambda_u * rec.lambda_s - 1.0), abs(ry.lambda_s * rec.lambda_u - 1.0))
        good = pp.residual <= 1e-10 and cf == want and hyp and dres <= 1e-10 and recip <= 1e-6
        ok &= good
        lines.append(f"{word}: res {pp.residual:.1e}, lu {rec.lambda_u:.5f}, ls {rec.lambda_s:.5f}, "
                     f"dual res {dres:.1e}, recip {recip:.1e}")
    report(6, "golden-mean horseshoe", ok, "; ".join(lines))


def test_c07_jacobian_integrity():
    rng = np.random.default_rng(SEED + 7)
    worst, n = 0.0, 0
    chain = 0.0
    for c in C_VALUES:
        got = 0
        for p, t in delta_O2_sample(c, 80, rng):
            if got == 50:
                break
            Je = oracles.exact_central_jacobian_T(p.a, p.v, c, t.heights)
            if Je is None:
                continue
            q, J = jet_T(p, False)
            worst = max(worst, np.abs(J - np.array(Je)).max() / max(np.abs(J).max(), 1.0))
            try:
                _, J1 = jet_T(q, False)
                _, J2 = jet_T_power(p, 2)
                chain = max(chain, np.abs(J2 - J1 @ J).max() / np.abs(J2).max())
            except RenormError:
                pass
            got += 1
            n += 1
    report(7, "Jacobian integrity", n == 200 and worst <= 1e-6 and chain <= 1e-9,
           f"jet vs central differences {worst:.2e} rel on {n} samples (1e-6); chain rule {chain:.2e} (1e-9)")


def _scan_violations(c, anchor):
    tr = transversal_family(c, anchor)
    ts = np.linspace(tr.t_lo, tr.t_hi, 100)
    cfs = [rotation_number(tr.params(t), 30, strict=False) for t in ts]
    bad = sum(1 for x, y in zip(cfs, cfs[1:]) if (x.compare(y) or 0) > 0)
    return bad


def test_c08_cone_and_monotonicity():
    cone_bad, cone_n = 0, 0
    for c, vec in ((1.5, lambda a: (1.0, 0.0)), (0.8, lambda a: (a, 0.8))):
        vs = np.linspace(0.0, c - 1.0, 12)[1:-1]
        for v in vs:
            for a in np.linspace(max(c - 1.0 - v, 0.0), c, 12)[1:-1]:
                try:
                    inside = in_cone(Params(a, v, c), TangentVector(*vec(a))).inside
                except Undecided:
                    inside = False
                cone_bad += not inside
                cone_n += 1
    viol = 0
    for c in (1.5, 0.8):
        for s in (0.2, 0.5, 0.8):
            viol += _scan_violations(c, (c, s * (c - 1.0)) if c > 1 else (s * c, 0.0))
    pp = find_periodic_point(1.5, (1, 1))
    vb = canonical_cone_vector(pp.params)
    d6 = expansion_report(pp.params, vb, 6).delta
    d8 = expansion_report(pp.params, vb, 8).delta
    ok = cone_bad == 0 and viol == 0 and d6 > 0 and d8 > 0 and round(d6, 3) == round(d8, 3)
    report(8, "cone and monotonicity", ok,
           f"cone failures {cone_bad}/{cone_n}; rho decreases on 6x100-point scans: {viol}; "
           f"delta k=6 {d6:.6f}, k=8 {d8:.6f}")


def test_c09_apriori_bound():
    sc = apriori_scan(1.5, 10_000, seed=SEED)
    report(9, "a priori bound", sc.accepted == 10_000 and sc.min_lambda > -1.0 and sc.delta > 0,
           f"min lambda {sc.min_lambda:.6f} over {sc.accepted} samples, delta {sc.delta:.6f}")


def test_c10_double_shift_conjugacy():
    rng = np.random.default_rng(SEED + 10)
    bad_h, n = 0, 0
    for c in C_VALUES:
        for p, t in delta_O2_sample(c, 13, rng)[: 13 if c < 1.8 else 11]:
            try:
                cf = rotation_number(p, 12).entries
                tail = rotation_number(t.new_params, 10).entries
            except RenormError:
                continue
            bad_h += tuple(cf[2:12]) != tuple(tail)
            n += 1
    worst = 0.0
    for _ in range(20):
        w = random_window(rng, 3, 24)
        x = attractor_point(1.5, w)
        y = attractor_point(1.5, w.shift(2))
        Tx, J = jet_T(x.params, False)
        tol = np.linalg.norm(J, 2) * x.error + y.error
        worst = max(worst, math.hypot(Tx.a - y.params.a, Tx.v - y.params.v) / tol)
    report(10, "conjugacy to sigma^2", bad_h == 0 and n == 50 and worst <= 1.0,
           f"height shifts wrong on {bad_h}/{n} samples; max attractor gap / tolerance {worst:.3f} over 20 windows")


def _exact_levels(n):
    x = (Fraction(1), Fraction(1, 2), Fraction(2))
    out = []
    for _ in range(n):
        e = oracles.exact_R(*x, cap=200)
        x = e[:3]
        out.append((float(x[0]), float(x[1]), e[3]))
    return out


def test_c11_convergence():
    base = Params(1.0, 0.5, 2.0)
    rep = convergence_report(make_conjugated_map(base, 0.3), N=8)
    levels0 = general_renormalize(make_conjugated_map(base, 0.0), 8)
    exact = _exact_levels(8)
    agree = 0.0
    p, drift = base, 0.0
    from breakrenorm.smooth import fit_model
    for lev, (ea, ev, er) in zip(levels0[1:], exact):
        m = fit_model(lev)
        agree = max(agree, abs(m.a - ea), abs(m.v - ev))
        p = renormalize_R(p).new_params
        drift = max(drift, abs(p.a - m.a), abs(p.v - m.v))
    d = ", ".join(f"{x:.2e}" for x in rep.dist_C0)
    ok = rep.monotone and rep.lambda_hat < 1.0 and agree <= 1e-10
    report(11, "convergence", ok,
           f"dist_C0 n=1..8: {d}; monotone: {rep.monotone} (rises at n={rep.monotone_violations}); "
           f"lambda_hat {rep.lambda_hat:.4f}; eps=0 vs exact Moebius levels {agree:.2e} (1e-10), "
           f"vs float R iteration {drift:.2e}")


def test_c12_level_set_contraction():
    c = 1.5
    p1 = Params.unchecked(stable_a(c, 0.15, (1, 1)), 0.15, c)
    p2 = Params.unchecked(stable_a(c, 0.35, (1, 1)), 0.35, c)
    rep = same_rho_contraction(p1, p2, 8, word=(1, 1))
    report(12, "contraction on level sets", rep.fit.rate < 1.0,
           f"fitted rate {rep.fit.rate:.4f} (r2 {rep.fit.r2:.5f}); distances {rep.distances[0]:.2e} -> "
           f"{rep.distances[-1]:.2e}")


def test_c13_transversality():
    rng = np.random.default_rng(SEED + 13)
    worst_margin = math.inf
    amin, emax = math.inf, 0.0
    for _ in range(30):
        r = transversality_angle(1.5, random_window(rng, 3, 24))
        amin = min(amin, r.angle)
        emax = max(emax, r.error)
        worst_margin = min(worst_margin, r.angle - r.error)
    report(13, "transversality", amin > emax and worst_margin > 0,
           f"min angle {amin:.4f} rad, max error estimate {emax:.2e} over 30 windows")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
