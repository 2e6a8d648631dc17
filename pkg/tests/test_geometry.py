import math

import mpmath as mp
import numpy as np
import pytest

import oracles
from discproof.constants import CASES, case_params
from discproof.geometry import (
    TAYLOR_BOUND,
    TriangleBox,
    _conjugate_root,
    _discriminant_root,
    _quotient_root,
    _support_coefficients,
    _taylor_root,
    angle,
    angles,
    area,
    excess,
    min_altitude,
    parse_classes,
    signed_edge_distance,
    signed_edge_distances,
    support_center,
    support_radius,
    tight_box,
    tight_edges,
)
from discproof.interval import PI, Interval, contains_zero

LABELS = ("111", "11r", "1rr", "rrr")


def point_box(label, edges, r):
    return TriangleBox(parse_classes(label), tuple(Interval(float(e)) for e in edges), r)


def batch_box(label, E, r):
    return TriangleBox(parse_classes(label), tuple(Interval(E[:, k], E[:, k]) for k in range(3)), r)


def random_case_triangles(rng, case_id, n, feasible=True):
    p = case_params(case_id)
    r = p.r.mid
    out = []
    for _ in range(n):
        label = LABELS[rng.integers(4)]
        radii = [1.0 if ch == "1" else r for ch in label]
        if feasible:
            e = oracles.random_feasible_edges(rng, radii, r)
        else:
            lo = np.array([radii[1] + radii[2], radii[0] + radii[2], radii[0] + radii[1]])
            while True:
                e = lo + rng.random(3) * 2 * r
                a, b, c = e
                if a < b + c and b < a + c and c < a + b:
                    break
        out.append((label, radii, e))
    return p, out


# -- examples -------------------------------------------------------------------


def test_angle_examples():
    two = Interval(2.0)
    assert angle(two, two, two).contains(math.pi / 3)
    hyp = Interval(2.0) * Interval(2.0).sqrt()
    a = angle(hyp, two, two)
    assert a.lo <= (PI * 0.5).hi and (PI * 0.5).lo <= a.hi
    p4 = case_params(4)
    T = tight_box(parse_classes("11r"), p4.r)
    th = angles(T)[2]
    assert th.lo <= (PI * 0.5).hi and (PI * 0.5).lo <= th.hi


def test_area_examples():
    two = Interval(2.0)
    assert area(two, two, two).contains(math.sqrt(3))
    assert contains_zero(area(two, Interval(1.0), Interval(1.0)))
    A = area(Interval(3.0, 4.0), Interval(4.0, 5.0), Interval(5.0, 6.0))
    rng = np.random.default_rng(1)
    for _ in range(100):
        a, b, c = 3 + rng.random(), 4 + rng.random(), 5 + rng.random()
        v = oracles.area(a, b, c)
        assert mp.mpf(A.lo) <= v <= mp.mpf(A.hi)


@pytest.mark.parametrize("case_id", (4, 8))
def test_excess_vanishes_on_tiling_triangle(case_id):
    p = case_params(case_id)
    assert contains_zero(excess(tight_box(parse_classes("11r"), p.r), p))


@pytest.mark.parametrize("case_id", CASES)
def test_excess_of_unit_equilateral(case_id):
    p = case_params(case_id)
    E = excess(tight_box(parse_classes("111"), p.r), p)
    closed = p.delta * Interval(3.0).sqrt() - PI * 0.5
    assert E.lo <= closed.hi and closed.lo <= E.hi
    assert E.lo > 0


def test_support_radius_tight_examples():
    p9 = case_params(9)
    R = support_radius(tight_box(parse_classes("111"), p9.r))
    exact = 2 / mp.sqrt(3) - 1
    assert mp.mpf(R.lo) <= exact <= mp.mpf(R.hi)
    Rs = support_radius(tight_box(parse_classes("rrr"), p9.r))
    scaled = p9.r * (2 / Interval(3.0).sqrt() - 1)
    assert Rs.lo <= scaled.hi and scaled.lo <= Rs.hi
    assert abs(Rs.mid - 0.01563) < 1e-4


def test_tight_edges_examples():
    p4 = case_params(4)
    e = tight_edges(parse_classes("111"), p4.r)
    assert all(x.contains(2.0) for x in e)
    a, b, c = tight_edges(parse_classes("11r"), p4.r)
    assert a.contains(1 + p4.r.mid) and b.contains(1 + p4.r.mid) and c.contains(2.0)
    assert mp.mpf(p4.r.lo) <= mp.sqrt(2) - 1 <= mp.mpf(p4.r.hi)
    rrr = tight_edges(parse_classes("rrr"), p4.r)
    assert all(x.lo <= 2 * p4.r.lo and 2 * p4.r.hi <= x.hi for x in rrr)


def test_min_altitude_examples():
    two = Interval(2.0)
    assert min_altitude(TriangleBox(parse_classes("111"), (two, two, two), Interval(0.5))).contains(math.sqrt(3))
    T = TriangleBox(parse_classes("111"), (two, two, Interval(3.9, 3.99)), Interval(0.5))
    assert min_altitude(T).hi < 0.5
    p = case_params(7)
    h = min_altitude(tight_box(parse_classes("rrr"), p.r))
    assert h.lo <= (p.r * Interval(3.0).sqrt()).hi and (p.r * Interval(3.0).sqrt()).lo <= h.hi


@pytest.mark.parametrize("case_id", CASES)
def test_tight_triangles_have_interior_support_center(case_id):
    p = case_params(case_id)
    for label in LABELS:
        T = tight_box(parse_classes(label), p.r)
        for d in signed_edge_distances(T):
            assert d.lo > 0


def test_signed_edge_distance_indexing():
    p = case_params(3)
    T = tight_box(parse_classes("11r"), p.r)
    assert signed_edge_distance(T, 3) == signed_edge_distances(T)[2]
    with pytest.raises(ValueError):
        signed_edge_distance(T, 0)


@pytest.mark.parametrize("case_id", CASES)
def test_stretched_triangle_has_negative_distance(case_id):
    # small disc touching both large discs and the segment between their centres
    p = case_params(case_id)
    r = p.r.mid
    c = 2 * math.sqrt(1 + 2 * r)
    T = point_box("11r", (1 + r, 1 + r, c), p.r)
    d = signed_edge_distance(T, 3)
    assert d.lo < 0
    mp_d = oracles.signed_distances((1 + r, 1 + r, c), (1.0, 1.0, r))[2]
    assert mp_d < 0 and mp.mpf(d.lo) - 1e-9 <= mp_d <= mp.mpf(d.hi) + 1e-9


# -- properties -------------------------------------------------------------------


def test_support_radius_tangency_residuals():
    rng = np.random.default_rng(7)
    done = 0
    while done < 500:
        case_id = int(rng.integers(1, 10))
        _, [(label, radii, e)] = random_case_triangles(rng, case_id, 1, feasible=False)
        p = case_params(case_id)
        T = point_box(label, e, p.r)
        A, B, C = _support_coefficients(T)
        if contains_zero(A * C):
            continue
        R = support_radius(T)
        x, y, u, v = support_center(T, R)
        X = (x.mid, y.mid)
        verts = ((0.0, 0.0), (float(e[2]), 0.0), (u.mid, v.mid))
        for P, rv in zip(verts, radii):
            dist = math.hypot(X[0] - P[0], X[1] - P[1])
            assert abs(dist - (rv + R.mid)) < 1e-9
        ref = oracles.support(e, radii)
        assert ref is not None and abs(float(ref[0]) - R.mid) < 1e-9
        done += 1


def test_degenerate_branch_consistency():
    rng = np.random.default_rng(11)
    checked = 0
    for case_id in CASES:
        p = case_params(case_id)
        r = p.r.mid
        for label in LABELS:
            radii = [1.0 if ch == "1" else r for ch in label]
            lo = np.array([radii[1] + radii[2], radii[0] + radii[2], radii[0] + radii[1]])
            base = lo + rng.random((4000, 3)) * 2 * r
            width = 10.0 ** rng.uniform(-6, -2, (4000, 1))
            E_lo, E_hi = base, base + width
            T = TriangleBox(parse_classes(label), tuple(Interval(E_lo[:, k], E_hi[:, k]) for k in range(3)), p.r)
            with np.errstate(all="ignore"):
                A, B, C = _support_coefficients(T)
                AC = A * C
                b_ok = (B.lo > 0) | (B.hi < 0)
                x = AC * 4 / B.square()
                both = b_ok & ((AC.lo > 0) | (AC.hi < 0)) & (x.hi <= TAYLOR_BOUND) & ((C.lo > 0) | (C.hi < 0))
                idx = np.flatnonzero(both)
                if idx.size == 0:
                    continue
                take = lambda z: Interval(z.lo[idx], z.hi[idx])  # noqa: E731
                A_, B_, C_, x_ = take(A), take(B), take(C), take(x)
                disc = _discriminant_root(A_, B_, C_)
                quot = _quotient_root(A_, B_, C_, disc)
                tay = _taylor_root(B_, C_, x_)
                assert np.all(np.maximum(quot.lo, tay.lo) <= np.minimum(quot.hi, tay.hi))
                opp = (B_.lo > 0) != (C_.lo > 0)
                if opp.any():
                    conj = _conjugate_root(B_, C_, disc)
                    assert np.all(np.maximum(conj.lo, tay.lo)[opp] <= np.minimum(conj.hi, tay.hi)[opp])
            checked += idx.size
    assert checked > 100


def test_taylor_constant_below_one():
    def fprime(x):
        s = mp.sqrt(1 - x)
        return -2 / x**2 * (1 - s) + 1 / (x * s)

    assert abs(fprime(mp.mpf("0.78")) - mp.mpf("0.9879")) < 1e-4
    assert fprime(mp.mpf("0.78")) < 1
    grid = [mp.mpf(t) for t in np.linspace(-50, 0.78, 400) if abs(t) > 1e-9]
    vals = [fprime(t) for t in grid]
    assert all(0 <= v <= 1 for v in vals)
    assert all(a <= b for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("case_id", CASES)
def test_sector_coverage_is_conservative(case_id):
    rng = np.random.default_rng(100 + case_id)
    p, tris = random_case_triangles(rng, case_id, 1000, feasible=True)
    for label in LABELS:
        rows = [(radii, e) for lab, radii, e in tris if lab == label]
        if not rows:
            continue
        E = np.array([e for _, e in rows])
        T = batch_box(label, E, p.r)
        angs = angles(T)
        cov = None
        for rv, th in zip(T.radii, angs):
            term = rv.square() * th
            cov = term if cov is None else cov + term
        cov = cov * 0.5
        for i, (radii, e) in enumerate(rows):
            exact = oracles.covered_area(e, radii)
            assert cov.hi[i] >= exact - 1e-12
            # vertex discs never cross the opposite edge here, so equality
            assert abs(cov.mid[i] - exact) < 1e-9


def _support_disc(edges, radii):
    R, X, verts = oracles.support(edges, radii)
    return float(R), (float(X[0]), float(X[1])), [(float(P[0]), float(P[1])) for P in verts]


def test_adjacent_signed_distances_sum_nonnegative():
    rng = np.random.default_rng(23)
    pairs = negative = 0
    while pairs < 500:
        case_id = int(rng.integers(1, 10))
        p = case_params(case_id)
        r = p.r.mid
        cls = [("1", 1.0) if rng.random() < 0.5 else ("r", r) for _ in range(4)]
        (la, ra), (lb, rb), (lc, rc), (ld, rd) = cls
        # shared edge AB (edge c of T = ABC and of T* = ABD)
        c = ra + rb + rng.random() * 2 * r
        a = rb + rc + rng.random() * 2 * r  # BC
        b = ra + rc + rng.random() * 2 * r  # AC
        a2 = rb + rd + rng.random() * 2 * r  # BD
        b2 = ra + rd + rng.random() * 2 * r  # AD
        if not (a < b + c and b < a + c and c < a + b and a2 < b2 + c and b2 < a2 + c and c < a2 + b2):
            continue
        t1, t2 = (a, b, c), (a2, b2, c)
        s1 = oracles.support(t1, (ra, rb, rc))
        s2 = oracles.support(t2, (ra, rb, rd))
        if s1 is None or s2 is None:
            continue
        R1, X1, (A, B, C) = _support_disc(t1, (ra, rb, rc))
        R2, X2, (_, _, D) = _support_disc(t2, (ra, rb, rd))
        D = (D[0], -D[1])  # reflect: T* lies on the other side of AB
        X2 = (X2[0], -X2[1])
        # empty support discs and disjoint vertex discs
        if math.dist(X1, D) < R1 + rd or math.dist(X2, C) < R2 + rc or math.dist(C, D) < rc + rd:
            continue
        d1 = signed_edge_distance(point_box(la + lb + lc, t1, p.r), 3)
        d2 = signed_edge_distance(point_box(la + lb + ld, t2, p.r), 3)
        assert d1.mid + d2.mid >= -1e-9
        negative += min(d1.mid, d2.mid) < 0
        pairs += 1
    assert negative > 0


@pytest.mark.parametrize("case_id", CASES)
def test_minimum_angle_sine_bound(case_id):
    rng = np.random.default_rng(200 + case_id)
    p = case_params(case_id)
    r = p.r.mid
    n = 0
    while n < 500:
        _, [(label, radii, e)] = random_case_triangles(rng, case_id, 1)
        sup = oracles.support(e, radii)
        if sup is None or sup[0] >= r:
            continue
        angs = angles(point_box(label, e, p.r))
        for k in range(3):
            x = radii[k]
            y, z = [radii[j] for j in range(3) if j != k]
            bound = min(y / (x + 2 * r + y), z / (x + 2 * r + z))
            sine = min(math.sin(angs[k].lo), math.sin(angs[k].hi))
            assert sine + 1e-9 >= bound
        n += 1
