from fractions import Fraction

import mpmath as mp
import pytest

from isingcorr.ellring import EllValue
from isingcorr.engine import low_temp
from isingcorr.ode import (
    RankDefect,
    annihilate,
    annihilator,
    central_derivatives,
    conjugated_apply,
    expected_order,
    fornberg_weights,
    kernel_check,
    minimality_rank,
    staged_factorization,
    top_coefficient,
    verify_appendix_c1,
)

PAIRS = [(0, 1), (1, 2), (0, 2)]


def test_order_formula():
    assert [expected_order(*p) for p in [(0, 1), (0, 2), (1, 2), (0, 3), (1, 1)]] == [3, 6, 5, 10, 2]
    assert expected_order(2, 0) == expected_order(0, 2)


def test_K_satisfies_a_second_order_equation():
    op = annihilate(EllValue.K())
    assert op.order == 2
    assert op.apply(EllValue.K()).is_zero()
    assert kernel_check(op, EllValue.K(), "0.4", "0.8")["max_relative"] < 1e-30


@pytest.mark.parametrize("pt", PAIRS)
def test_annihilator_order_and_exactness(small_table, pt):
    a = small_table.C(*pt)
    op = annihilator(a, *pt)
    assert op.order == expected_order(*pt)
    assert op.apply(a).is_zero()


@pytest.mark.parametrize("pt", PAIRS)
def test_no_shorter_operator(small_table, pt):
    d = expected_order(*pt)
    assert minimality_rank(small_table.C(*pt), d) == d


def test_forcing_a_lower_order_fails(small_table):
    with pytest.raises(RankDefect):
        annihilate(small_table.C(0, 1), order=2)


@pytest.mark.parametrize("pt, orders, conj", [((0, 1), [1, 2], [1, 0]), ((1, 2), [2, 3], [1, 0]), ((0, 2), [1, 2, 3], [2, 1, 0])])
def test_staged_factorization(small_table, pt, orders, conj):
    a = small_table.C(*pt)
    ch = staged_factorization(a)
    assert ch.orders() == orders
    assert ch.conjugators == conj
    assert ch.apply(a).is_zero()


def test_final_stage_kernel_contains_second_solution(small_table):
    a = small_table.C(0, 2)
    ch = staged_factorization(a)
    cur = a
    for op, m in zip(ch.factors[:-1], ch.conjugators[:-1]):
        cur = conjugated_apply(op, m, cur)
    last = top_coefficient(cur)
    assert last.pi_degree() == 0
    assert kernel_check(ch.factors[-1], last, "0.4", "0.8")["max_relative"] < 1e-30


def test_fornberg_weights():
    assert fornberg_weights(1, [-1, 0, 1]) == [Fraction(-1, 2), 0, Fraction(1, 2)]
    assert fornberg_weights(2, [-1, 0, 1]) == [1, -2, 1]


def test_central_derivatives_of_exp():
    with mp.workdps(50):
        d = central_derivatives(mp.exp, mp.mpf(1), 3, mp.mpf("1e-8"))
        # rounding at 50 digits limits the third derivative to about 1e-50 / h^3
        assert all(abs(v - mp.e) < mp.mpf("1e-20") for v in d)


def test_printed_low_temperature_operator(small_table):
    rep = verify_appendix_c1(low_temp(0, 1, small_table))
    assert len(rep["points"]) == 5
    assert rep["max_relative"] < 1e-18


def test_operator_rendering(small_table):
    op = annihilate(EllValue.K())
    assert op.to_json()["order"] == 2
    assert "\\partial_k" in op.to_latex()
