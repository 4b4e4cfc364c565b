import mpmath as mp
import pytest

from isingcorr.numerics import ParamPoint, c01_onsager, ell_tilde
from isingcorr.oracles import (
    QuadratureError,
    toeplitz_coefficients,
    toeplitz_diag,
    toeplitz_row,
    transfer_matrix_row,
)


@pytest.fixture(autouse=True)
def fifty_digits():
    with mp.workdps(50):
        yield


def test_row_one_matches_closed_form():
    assert abs(toeplitz_row(1, "0.6", "0.8") - c01_onsager(ParamPoint("0.6", "0.8"))) < mp.mpf("1e-40")


def test_row_one_low_side():
    assert abs(toeplitz_row(1, "1.3", "1.7") - c01_onsager(ParamPoint("1.3", "1.7"))) < mp.mpf("1e-40")


def test_diag_one_low_side_is_E():
    p = ParamPoint("1.3", "1.7")
    assert abs(toeplitz_diag(1, p.s_h, p.s_v) - ell_tilde("E", p.k_low)) < mp.mpf("1e-40")


def test_empty_determinant():
    assert toeplitz_row(0, "0.6", "0.8") == 1


def test_size_limit():
    with pytest.raises(ValueError):
        toeplitz_row(13, "0.6", "0.8")


def test_non_convergence_is_reported():
    with pytest.raises(QuadratureError, match="last change"):
        toeplitz_coefficients(0, mp.mpf("0.999"), 2, digits=50, max_nodes=128)


def test_transfer_matrix_converges_with_width():
    exact = toeplitz_row(2, "0.6", "0.8")
    w10 = transfer_matrix_row(2, 0.6, 0.8, width=10)
    w12 = transfer_matrix_row(2, 0.6, 0.8, width=12)
    assert abs(w12 - exact) < abs(w10 - exact) < 0.01
