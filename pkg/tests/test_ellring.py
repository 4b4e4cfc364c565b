import mpmath as mp
import pytest

from isingcorr.coeffield import ONE, SH, SV, U_H, U_V
from isingcorr.ellring import (
    PI,
    PI_P,
    BasisMismatch,
    EllValue,
    NotDivisible,
    change_basis,
    derivative_k,
    duality_map,
    exact_divide,
    isotropic_reduce,
    negate_integrals,
    swap_hv,
)
from isingcorr.numerics import ParamPoint, eval_value

E, K, P = EllValue.E(), EllValue.K(), EllValue.P()


def sample():
    return E * E * (SH / SV) + K * P * U_V - P * P * (ONE + SH) + EllValue.const(U_H)


def test_ring_axioms():
    a, b, c = sample(), E - K * SV, P + E * U_H
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)
    assert a - a == EllValue({}, PI)


def test_exact_divide_recovers_factor():
    a, b = sample(), E * SH - P * U_V
    assert exact_divide(a * b, b) == a
    assert (a * b) / b == a


def test_exact_divide_rejects_inexact():
    with pytest.raises(NotDivisible):
        exact_divide(E * E + K, E)


def test_basis_tags_must_match():
    with pytest.raises(BasisMismatch):
        E + EllValue.P(PI_P)


def test_change_basis_round_trip():
    a = sample()
    b = change_basis(a, PI_P)
    assert b.basis == PI_P
    assert change_basis(b, PI) == a


def test_change_basis_numerically():
    a = sample()
    with mp.workdps(40):
        pt = ParamPoint("0.6", "0.8")
        assert abs(eval_value(a, pt) - eval_value(change_basis(a, PI_P), pt)) < mp.mpf(10) ** -35


def test_swap_is_involution():
    a = sample()
    assert swap_hv(swap_hv(a)) == a


def test_swap_numerically():
    a = sample()
    with mp.workdps(40):
        pt, q = ParamPoint("0.6", "0.8"), ParamPoint("0.8", "0.6")
        assert abs(eval_value(swap_hv(a), q) - eval_value(a, pt)) < mp.mpf(10) ** -35


def test_duality_on_generators():
    k = SH * SV
    assert duality_map(K) == K * k
    assert duality_map(E) == E * (ONE / k) + K * ((k * k - 1) / k)
    for g in (E, K, P, sample()):
        assert duality_map(duality_map(g)) == g


def test_isotropic_reduction_numerically():
    a = sample()
    with mp.workdps(40):
        p = ParamPoint("0.7", "0.7")
        assert abs(eval_value(isotropic_reduce(a), p) - eval_value(a, p)) < mp.mpf(10) ** -35


def test_negate_integrals_is_involution():
    a = sample()
    assert negate_integrals(negate_integrals(a)) == a
    assert negate_integrals(E * K) == E * K
    assert negate_integrals(E) == -E


@pytest.mark.parametrize("gen", ["E", "K", "P", "mix"])
def test_derivative_in_k_at_fixed_nu(gen):
    a = {"E": E, "K": K, "P": P, "mix": sample()}[gen]
    d = derivative_k(a)
    with mp.workdps(40):
        k0, nu = mp.mpf("0.45"), mp.mpf("0.8")

        def f(k):
            return eval_value(a, ParamPoint.from_k_nu(k, nu))

        fd = mp.diff(f, k0)
        assert abs(eval_value(d, ParamPoint.from_k_nu(k0, nu)) - fd) < mp.mpf(10) ** -25


def test_str_mentions_generators():
    assert "E" in str(E * E)
