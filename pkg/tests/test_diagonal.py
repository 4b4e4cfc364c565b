import mpmath as mp
import pytest

from isingcorr.diagonal import (
    A1_FROZEN,
    bareiss_det,
    diag_correlation,
    diag_entry,
    fit_a1,
    same_rational,
)
from isingcorr.ellring import EllValue, duality_map, swap_hv, change_basis, PI
from isingcorr.numerics import ParamPoint, eval_value
from isingcorr.oracles import diag_symbol_coefficients, toeplitz_diag


@pytest.mark.parametrize("regime", ["high", "low"])
def test_frozen_first_entry_is_rederived(regime):
    fit = fit_a1(regime)
    for key in ("E", "K"):
        assert same_rational(fit[key], A1_FROZEN[regime][key])


@pytest.mark.parametrize("n", [-3, -1, 0, 1, 2, 5])
def test_entries_are_linear_in_E_and_K(n):
    a = diag_entry(n)
    assert a.pi_degree() == 0
    assert a.total_degrees() <= {1}
    # depends on s_h, s_v only through their product
    assert change_basis(swap_hv(a), PI) == a


@pytest.mark.parametrize("n", [-2, 0, 1, 3])
def test_entries_match_quadrature(n):
    with mp.workdps(50):
        p = ParamPoint("0.6", "0.8")
        ref = diag_symbol_coefficients(1 / p.k, abs(n), 50)[n]
        assert abs(eval_value(diag_entry(n), p) - ref) < mp.mpf("1e-40")


def test_bareiss_matches_cofactor_expansion():
    E, K = EllValue.E(), EllValue.K()
    m = [[E, K, E + K], [K * 2, E, K], [E, E - K, K]]
    direct = (
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    )
    assert bareiss_det(m) == direct


def test_first_diagonal_correlations():
    assert diag_correlation(0) == EllValue.const(1)
    assert diag_correlation(1, "dual") == EllValue.E()


@pytest.mark.parametrize("N", [1, 2, 3])
def test_dual_diagonal_agrees_with_duality_map(N):
    assert duality_map(diag_correlation(N, "high")) == diag_correlation(N, "dual")


@pytest.mark.parametrize("N", [2, 4])
def test_diagonal_against_oracle(N):
    with mp.workdps(50):
        for pt in (("0.6", "0.8"), ("1.3", "1.7")):
            p = ParamPoint(*pt)
            v = diag_correlation(N, "high" if p.regime == "high" else "low")
            assert abs(eval_value(v, p) - toeplitz_diag(N, p.s_h, p.s_v)) < mp.mpf("1e-40")


def test_entry_bound():
    with pytest.raises(ValueError):
        diag_entry(17)
