"""Acceptance criteria 1-8.  Each test records one PASS/FAIL line; conftest prints them all.

Run directly (python tests/test_acceptance.py) to print the lines without pytest.
"""
import time

import mpmath as mp
import pytest

import goldens
from isingcorr.ellring import duality_map, isotropic_reduce
from isingcorr.engine import (
    audit,
    boundary_relations,
    build_table,
    evaluate_relation,
    low_temp,
    relation_instances,
    simple_identity,
)
from isingcorr.numerics import (
    ParamPoint,
    eval_value,
    small_k_ratio,
    verify_c01_forms,
    verify_pi_identity,
    verify_thirdident,
)
from isingcorr.ode import (
    annihilator,
    expected_order,
    minimality_rank,
    staged_factorization,
    verify_appendix_c1,
)
from isingcorr.oracles import toeplitz_diag, toeplitz_row
from isingcorr.series import lambda_limit_check, pi_lambda_series

RESULTS: dict[int, str] = {}

HIGH_POINTS = (("0.6", "0.8"), ("0.3", "0.5"), ("0.9", "0.7"))
LOW_POINTS = (("1.3", "1.7"), ("2.0", "0.8"), ("1.5", "1.5"))


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(RESULTS[n])
    assert ok, RESULTS[n]


@pytest.fixture(scope="module")
def box():
    t0 = time.perf_counter()
    t = build_table(4)
    return t, time.perf_counter() - t0


@pytest.fixture(scope="module")
def triangle(table):
    """The shared table with every point M + N <= 5, with its recorded build time."""
    return table, table.timings["total"]


def test_criterion_1_golden_formulas():
    t0 = time.perf_counter()
    t = build_table(2)
    g_high, g_low = goldens.high(), goldens.low()
    bad = []
    for name, want in g_high.items():
        M, N = int(name[-2]), int(name[-1])
        got = t.C_d(M, N) if name.startswith("Cd") else t.C(M, N)
        if got != want:
            bad.append(name)
    for name, want in g_low.items():
        M, N = int(name[-2]), int(name[-1])
        if low_temp(M, N, t) != want:
            bad.append("low " + name)
    secs = time.perf_counter() - t0
    total = len(g_high) + len(g_low)
    detail = f"{total - len(bad)}/{total} closed forms equal, {secs:.1f} s"
    if bad:
        detail += f"; mismatched: {', '.join(bad)} (low C(0,2): printed K^2 coefficient disagrees with the Toeplitz oracle)"
    record(1, not bad and secs < 30, detail)


def test_criterion_2_overdetermination(box):
    t, build_secs = box
    t0 = time.perf_counter()
    rep = audit(t, check_duality=False)
    bnd = boundary_relations(t)
    # the printed labelling with C and C_d interchanged, for the record
    def swapped(key):
        return t.get(("D" if key[0] == "C" else "C", key[1], key[2]))

    printed_ok = all(evaluate_relation(*i, swapped).is_zero() for i in relation_instances(set(t.entries)))
    secs = build_secs + time.perf_counter() - t0
    n_rel = len(relation_instances(set(t.entries)))
    ok = rep["ok"] and all(bnd.values()) and secs < 120
    record(
        2,
        ok,
        f"{n_rel} relation instances and 2 boundary relations exactly zero with C and C_d interchanged "
        f"relative to the printed labelling (printed labelling holds: {printed_ok}), {secs:.1f} s",
    )


def test_criterion_3_duality(box):
    t, _ = box
    bad = []
    for M in range(5):
        for N in range(5):
            d = duality_map(t.C(M, N))
            if d != t.C_d(M, N) or duality_map(d) != t.C(M, N):
                bad.append((M, N))
    record(3, not bad, "duality map sends C to C_d and is an involution on all 25 entries" if not bad else f"failures at {bad}")


def test_criterion_4_numeric_cross_validation(triangle):
    t, build_secs = triangle
    t0 = time.perf_counter()
    worst = mp.mpf(0)
    count = 0
    with mp.workdps(50):
        for pts, low in ((HIGH_POINTS, False), (LOW_POINTS, True)):
            for sh, sv in pts:
                p = ParamPoint(sh, sv)
                cache = {}
                for N in range(1, 6):
                    row = low_temp(0, N, t) if low else t.C(0, N)
                    diag = low_temp(N, N, t) if low else t.C(N, N)
                    worst = max(worst, abs(eval_value(row, p, cache) - toeplitz_row(N, p.s_h, p.s_v)))
                    worst = max(worst, abs(eval_value(diag, p, cache) - toeplitz_diag(N, p.s_h, p.s_v)))
                    count += 2
    secs = build_secs + time.perf_counter() - t0
    record(4, worst < 1e-12 and secs < 120, f"{count} values, max |engine - Toeplitz| = {mp.nstr(worst, 3)}, {secs:.1f} s")


def test_criterion_5_identities():
    from isingcorr.cli import four_over_three

    pi = verify_pi_identity(100, seed=0)
    third = verify_thirdident(100)
    x0 = four_over_three()
    forms = verify_c01_forms(10)
    ok = pi["max_residual"] < 1e-25 and third["max_residual"] < 1e-25 and x0 and forms["max_residual"] < 1e-20
    record(
        5,
        ok,
        f"quadratic transformation max {pi['max_residual']:.1e} ({pi['samples']} samples), "
        f"two-characteristic identity max {third['max_residual']:.1e}, x=0 coefficients exact: {x0}, "
        f"row forms max {forms['max_residual']:.1e}",
    )


def test_criterion_6_isotropic(box):
    t, _ = box
    g = goldens.iso()
    bad = []
    for name, want in g.items():
        M, N = int(name[-2]), int(name[-1])
        got = isotropic_reduce(t.C_d(M, N) if name.startswith("Cd") else t.C(M, N))
        if got != want:
            bad.append(name)
    simple = all(simple_identity(t, *pt) for pt in ((0, 1), (1, 2)))
    ratio = small_k_ratio(t.C(0, 1))
    small = abs(ratio - 1) < 1e-3
    detail = f"{len(g) - len(bad)}/{len(g)} isotropic forms equal, C_d/C relation at (0,1),(1,2): {simple}, small-k ratio {mp.nstr(ratio, 8)}"
    if bad:
        detail += f"; mismatched: {', '.join(bad)} (printed E coefficient is twice the engine value)"
    record(6, not bad and simple and small, detail)


def test_criterion_7_lambda_limit(box):
    t, _ = box
    bad = [pt for pt in ((0, 1), (0, 2), (1, 2), (0, 3)) if not lambda_limit_check(*pt, t)["ok"]]
    ser = pi_lambda_series(6)
    series_ok = all(ser.coeff(e) == want for e, want in goldens.pi_lambda().items())
    record(7, not bad and series_ok, f"rows reduce to diagonals with no negative powers (failures {bad}); third-kind expansion through lambda^6 equal: {series_ok}")


def test_criterion_8_ode(box):
    t, _ = box
    t0 = time.perf_counter()
    notes = []
    ok = True
    for M, N in ((0, 1), (0, 2), (1, 2), (0, 3)):
        a = t.C(M, N)
        d = expected_order(M, N)
        op = annihilator(a, M, N)
        exact = op.apply(a).is_zero()
        rank = minimality_rank(a, d)
        orders = staged_factorization(a).orders()
        want = list(range(M + 1, N + 2))
        ok &= op.order == d and exact and rank == d and sorted(orders) == want
        notes.append(f"({M},{N}) order {op.order} rank {rank} stages {orders}")
    app = verify_appendix_c1(low_temp(0, 1, t))
    secs = time.perf_counter() - t0
    ok &= app["max_relative"] < 1e-18 and secs < 300
    record(8, ok, "; ".join(notes) + f"; printed low-temperature operator relative residual {app['max_relative']:.1e}; {secs:.1f} s")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
