"""First-principles numeric correlations, independent of the symbolic engine.

Row and diagonal correlations are Toeplitz determinants of the Fourier
coefficients of an explicit symbol on the unit circle.  The symbol is analytic
in an annulus, so the periodic trapezoid rule converges geometrically; the
node count is doubled until the coefficients stop moving.
"""
from __future__ import annotations

import mpmath as mp
import numpy as np

from .numerics import ParamPoint


class QuadratureError(RuntimeError):
    pass


def _symbol_values(a1, a2, M: int):
    """Symbol at the M-th roots of unity.

    For a2 < 1 (ordered side) the symbol is sqrt((1-a1 z)(1-a2/z) / ((1-a1/z)(1-a2 z))).
    For a2 > 1 its continuation onto the circle carries a winding factor:
    -z^{-1} sqrt((1-a1 z)(1-z/a2) / ((1-a1/z)(1-1/(a2 z)))).
    Each factor has positive real part, so principal roots are continuous.
    """
    high = a2 > 1
    b = 1 / a2 if high else a2
    out = []
    for j in range(M):
        z = mp.expjpi(2 * mp.mpf(j) / M)
        zi = 1 / z
        if high:
            v = -zi * mp.sqrt(1 - a1 * z) * mp.sqrt(1 - b * z) / (mp.sqrt(1 - a1 * zi) * mp.sqrt(1 - b * zi))
        else:
            v = mp.sqrt(1 - a1 * z) * mp.sqrt(1 - a2 * zi) / (mp.sqrt(1 - a1 * zi) * mp.sqrt(1 - a2 * z))
        out.append(v)
    return out


def _coefficients_at(vals, nmax: int):
    M = len(vals)
    out = {}
    for n in range(-nmax, nmax + 1):
        s = mp.fsum(vals[j] * mp.expjpi(-2 * mp.mpf((n * j) % M) / M) for j in range(M)) / M
        out[n] = s.real
    return out


def toeplitz_coefficients(a1, a2, nmax: int, digits: int = 50, max_nodes: int = 1 << 14) -> dict[int, mp.mpf]:
    """Fourier coefficients a_n, |n| <= nmax, to about 10^-digits."""
    with mp.workdps(digits + 10):
        a1, a2 = mp.mpf(a1), mp.mpf(a2)
        M = 64
        prev = _coefficients_at(_symbol_values(a1, a2, M), nmax)
        tol = mp.mpf(10) ** (-digits)
        err = mp.inf
        while 2 * M <= max_nodes:
            M *= 2
            cur = _coefficients_at(_symbol_values(a1, a2, M), nmax)
            err = max(abs(cur[n] - prev[n]) for n in cur)
            if err < tol:
                return {n: +v for n, v in cur.items()}
            prev = cur
        raise QuadratureError(f"quadrature did not converge; last change {mp.nstr(err, 5)}")


def toeplitz_det(coeffs: dict[int, mp.mpf], N: int):
    if N == 0:
        return mp.mpf(1)
    return mp.det(mp.matrix([[coeffs[i - j] for j in range(N)] for i in range(N)]))


def toeplitz_row(N: int, s_h, s_v, digits: int = 50):
    """C(0,N) at (s_h, s_v); the regime follows from k = s_h s_v."""
    if N > 12:
        raise ValueError("toeplitz oracle limited to N <= 12")
    with mp.workdps(digits + 10):
        p = ParamPoint(s_h, s_v)
        c = toeplitz_coefficients(p.alpha1, p.alpha2, max(N - 1, 0), digits)
        return toeplitz_det(c, N)


def toeplitz_diag(N: int, s_h, s_v, digits: int = 50):
    """C(N,N) at (s_h, s_v): the symbol with alpha_1 = 0 and alpha_2 = 1/k."""
    if N > 12:
        raise ValueError("toeplitz oracle limited to N <= 12")
    with mp.workdps(digits + 10):
        p = ParamPoint(s_h, s_v)
        c = toeplitz_coefficients(0, 1 / p.k, max(N - 1, 0), digits)
        return toeplitz_det(c, N)


def diag_symbol_coefficients(alpha2, nmax: int, digits: int = 50):
    return toeplitz_coefficients(0, alpha2, nmax, digits)


# -- transfer matrix (sanity check only) --------------------------------------


def transfer_matrix_row(N: int, s_h, s_v, width: int = 10) -> float:
    """<sigma_{0,0} sigma_{0,N}> on an infinitely long cylinder of circumference ``width``.

    Columns of ``width`` spins are coupled by E_v inside a column (periodic) and
    by E_h between neighbouring columns.  Finite-width result; converges
    exponentially in width away from criticality.  Double precision.
    """
    from scipy.sparse.linalg import LinearOperator, eigsh

    if width > 12:
        raise ValueError("transfer matrix limited to width <= 12")
    Kh = np.arcsinh(float(s_h)) / 2
    Kv = np.arcsinh(float(s_v)) / 2
    L = width
    n = 1 << L
    states = ((np.arange(n)[:, None] >> np.arange(L)[None, :]) & 1) * 2 - 1
    bond = (states * np.roll(states, -1, axis=1)).sum(axis=1)
    half = np.exp(Kv * bond / 2)
    one_site = np.array([[np.exp(Kh), np.exp(-Kh)], [np.exp(-Kh), np.exp(Kh)]])

    def apply_h(v):
        t = v.reshape((2,) * L)
        for ax in range(L):
            t = np.moveaxis(np.tensordot(one_site, t, axes=([1], [ax])), 0, ax)
        return t.reshape(n)

    def matvec(v):
        v = np.asarray(v).reshape(n)
        return half * apply_h(half * v)

    op = LinearOperator((n, n), matvec=matvec, dtype=float)
    vals, vecs = eigsh(op, k=1, which="LA")
    lam = vals[0]
    v0 = vecs[:, 0]
    spin = states[:, 0].astype(float)
    w = spin * v0
    for _ in range(N):
        w = matvec(w) / lam
    return float(np.dot(v0 * spin, w))
