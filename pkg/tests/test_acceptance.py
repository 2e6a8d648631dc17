"""End-to-end acceptance checks, one group per criterion.

A per-criterion PASS/FAIL line is printed in the terminal summary.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

import spotcheck
from discproof.constants import CASES, case_params, polynomial_residuals
from discproof.corona import corona_search
from discproof.geometry import RadiusClass, excess, parse_classes, tight_box
from discproof.interval import Interval, contains_zero, sure_le
from discproof.potentials import (
    SINGULAR_CASE,
    VertexRole,
    capping_condition,
    capping_threshold,
    solve_v_table,
    target_corona_sums,
    total_potential,
)
from discproof.tightcheck import TRIPLES, check_epsilon
from discproof.verifier import Budget, LeafOutcome, Status, TripleContext, verify_case

L, S = RadiusClass.LARGE, RadiusClass.SMALL
TESTS = Path(__file__).parent

FIGURE_VALUES = {
    1: ("0.63", "0.9106"), 2: ("0.54", "0.9116"), 3: ("0.53", "0.9141"),
    4: ("0.41", "0.9201"), 5: ("0.38", "0.9200"), 6: ("0.34", "0.9246"),
    7: ("0.28", "0.9319"), 8: ("0.15", "0.9503"), 9: ("0.10", "0.9624"),
}
TABLE_EPS = ("0.079", "0.020", "0.061", "0.039", "0.012", "0.027", "0.018", "0.0049", "0.001718")
REFERENCE_COUNTS = {
    1: (1940, 5587, 7477, 6000), 2: (5398, 14757, 20028, 13336),
    3: (1709, 6574, 5804, 4880), 4: (1289, 9738, 15450, 5041),
    5: (1177, 26741, 65367, 36758), 6: (1282, 13644, 27707, 8891),
    7: (785, 24270, 66760, 5146), 8: (232, 177542, 1919744, 14701),
    9: (92, 535837, 19069730, 19622),
}
TIME_LIMIT = {**{i: 120.0 for i in range(1, 8)}, 8: 900.0, 9: 5400.0}


def _truncate(x: float, digits: int) -> str:
    return f"{math.floor(x * 10**digits) / 10**digits:.{digits}f}"


# -- 1. constants -------------------------------------------------------------


@pytest.mark.criterion(1, "constants fidelity")
def test_constants_fidelity():
    t0 = time.perf_counter()
    for case_id in CASES:
        p = case_params(case_id)
        res_r, res_d = polynomial_residuals(p)
        assert contains_zero(res_r) and contains_zero(res_d)
        assert p.r.hi - p.r.lo <= 1e-12
        assert p.delta_over_pi.hi - p.delta_over_pi.lo <= 1e-12
        r_text, d_text = FIGURE_VALUES[case_id]
        assert _truncate(p.r.mid, 2) == r_text
        assert _truncate(p.delta.mid, 4) == d_text
    assert time.perf_counter() - t0 < 1.0


# -- 2. V-table ---------------------------------------------------------------


@pytest.mark.criterion(2, "V-table identities")
def test_vtable_identities():
    t0 = time.perf_counter()
    for case_id in CASES:
        p = case_params(case_id)
        vt = solve_v_table(p)
        for label in TRIPLES:
            T = tight_box(parse_classes(label), p.r)
            roles = (VertexRole.REGULAR if case_id == SINGULAR_CASE and label == "rrr"
                     else VertexRole.PLAIN,) * 3
            diff = total_potential(T, roles, vt, p, capped=False) - excess(T, p)
            assert contains_zero(diff) and diff.hi - diff.lo < 1e-10
        for s in target_corona_sums(vt):
            assert contains_zero(s)
    assert time.perf_counter() - t0 < 1.0


# -- 3. coronas ---------------------------------------------------------------

EXAMPLE_BOUNDS = [(2, L, "0.16"), (2, S, "0.087"), (5, S, "0.048"), (9, S, "0.002058")]


@pytest.mark.criterion(3, "corona certification")
def test_corona_certification():
    t0 = time.perf_counter()
    bounds = {}
    for case_id in CASES:
        p = case_params(case_id)
        vt = solve_v_table(p)
        for center in (L, S):
            search = corona_search(p, vt, center)
            bounds[case_id, center] = search.bound
            assert sure_le(search.bound, p.m(center))
            assert capping_condition(vt, p, center)
            assert sure_le(capping_threshold(vt, p, center), p.Z(center))
    for case_id, center, text in EXAMPLE_BOUNDS:
        assert sure_le(bounds[case_id, center], Interval.from_decimal(text))
    p9 = case_params(9)
    assert sure_le(capping_threshold(solve_v_table(p9), p9, S), Interval.from_decimal("0.0008033"))
    assert time.perf_counter() - t0 < 300.0


# -- 4. epsilon-tight ---------------------------------------------------------


@pytest.mark.criterion(4, "epsilon-tight certification")
def test_epsilon_certification():
    t0 = time.perf_counter()
    for case_id, text in zip(CASES, TABLE_EPS):
        p = case_params(case_id)
        assert float(p.epsilon.mid) == pytest.approx(float(text))
        verdicts = check_epsilon(p, solve_v_table(p))
        assert sorted(verdicts) == sorted(TRIPLES)
        assert all(v.passed for v in verdicts.values())
    p9 = case_params(9)
    assert not all(v.passed for v in check_epsilon(p9, solve_v_table(p9), "0.1").values())
    assert time.perf_counter() - t0 < 10.0


# -- 5. full verification -----------------------------------------------------

_REPORTS: dict[int, tuple] = {}


def _verified(case_id):
    if case_id not in _REPORTS:
        p = case_params(case_id)
        vt = solve_v_table(p)
        t0 = time.perf_counter()
        rep = verify_case(p, vt, Budget(samples=100))
        _REPORTS[case_id] = (p, vt, rep, time.perf_counter() - t0)
    return _REPORTS[case_id]


@pytest.mark.slow
@pytest.mark.criterion(5, "full verification")
@pytest.mark.parametrize("case_id", CASES)
def test_full_verification(case_id, record_property):
    _, _, rep, elapsed = _verified(case_id)
    ours = tuple(rep.counts[label].checked for label in TRIPLES)
    ref = REFERENCE_COUNTS[case_id]
    ratios = " ".join(f"{label}={a / b:.2f}" for label, a, b in zip(TRIPLES, ours, ref))
    record_property("log", f"case {case_id}: {rep.status.value} in {elapsed:.1f} s, counts {ours}, ratio to reference {ratios}")
    assert rep.status is Status.VERIFIED
    assert rep.frontier == 0
    assert elapsed < TIME_LIMIT[case_id]


# -- 6. property suites -------------------------------------------------------

PROPERTY_TESTS = [
    "test_interval.py::test_containment_sampling",
    "test_interval.py::test_point_images_are_contained",
    "test_geometry.py::test_support_radius_tangency_residuals",
    "test_geometry.py::test_degenerate_branch_consistency",
    "test_geometry.py::test_adjacent_signed_distances_sum_nonnegative",
    "test_geometry.py::test_minimum_angle_sine_bound",
    "test_tightcheck.py::test_derivatives_contain_finite_differences",
    "test_verifier.py::test_determinism_across_thread_counts",
]


@pytest.mark.criterion(6, "property suites")
def test_property_suites():
    t0 = time.perf_counter()
    cmd = [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", "-m", "not slow"]
    cmd += [str(TESTS / node) for node in PROPERTY_TESTS]
    proc = subprocess.run(cmd, cwd=TESTS.parent, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stdout[-3000:]
    assert time.perf_counter() - t0 < 120.0


# -- 7. soundness spot-check --------------------------------------------------


@pytest.mark.criterion(7, "soundness spot-check")
def test_soundness_spot_check():
    p, vt, rep, _ = _verified(4)
    t0 = time.perf_counter()
    proved = rep.samples[LeafOutcome.PROVED_LE.tag]
    pruned = rep.samples[LeafOutcome.PRUNED_INFEASIBLE.tag]
    assert len(proved) == 100 and len(pruned) == 100
    rng = np.random.default_rng(7)
    contexts = {label: TripleContext.build(label, p, vt) for label in TRIPLES}
    for row in proved:
        assert spotcheck.proved_leaf_holds(row, p, contexts[row[0]], rng, n_points=20)
    for row in pruned:
        assert spotcheck.pruned_leaf_holds(row, p, rng, n_points=20)
    assert time.perf_counter() - t0 < 60.0
