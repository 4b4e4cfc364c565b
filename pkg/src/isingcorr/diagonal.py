"""Diagonal correlations C(N,N) as Toeplitz determinants over the (E, K) subring.

With alpha_1 = 0 the symbol is ((1 - a/z)/(1 - a z))^{1/2}, a = alpha_2.  It obeys
(-a z^3 + (1+a^2) z^2 - a z) f' = (a/2)(z^2 - 2 a z + 1) f, whose Laurent
coefficients satisfy

    a (n + 1/2) a_n = [(1 + a^2)(n - 1) + a^2] a_{n-1} - a (n - 3/2) a_{n-2}.

Given a_0 and a_1 every entry follows.  a_0 is classical; a_1 is recovered
from quadrature by integer-relation detection plus rational interpolation,
then frozen below and re-derived in the test suite.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import mpmath as mp

from .coeffield import ONE, SH, SV, FieldElem, RatFunc
from .ellring import PI, EllValue, exact_divide

# a_1 = kE(x) * E + kK(x) * K as (numerator, denominator) coefficient lists in
# the variable x of the regime (x = k on the high side, x = 1/k on the low side).
A1_FROZEN = {
    "high": {"E": ([2, 0, -1], [0, 0, 3]), "K": ([-2, 0, 2], [0, 0, 3])},
    "low": {"E": ([-1, 0, 2], [0, 3]), "K": ([1, 0, -1], [0, 3])},
}


def _poly_in(x: RatFunc, coeffs) -> RatFunc:
    out = RatFunc.const(0)
    p = ONE
    for c in coeffs:
        if c:
            out = out + p * Fraction(c)
        p = p * x
    return out


def _frozen_rat(x: RatFunc, spec) -> RatFunc:
    num, den = spec
    return _poly_in(x, num) / _poly_in(x, den)


def modulus_variable(regime: str) -> RatFunc:
    k = SH * SV
    return k if regime == "high" else ONE / k


def _entry_pair(n: int, regime: str, x: RatFunc) -> tuple[RatFunc, RatFunc]:
    """(coefficient of E, coefficient of K) of a_n, x being the modulus."""
    return _entries(regime, x, n)[n]


def _entries(regime: str, x: RatFunc, bound: int) -> dict[int, tuple[RatFunc, RatFunc]]:
    a = ONE / x if regime == "high" else x  # alpha_2
    if regime == "high":
        a0 = (ONE / x, -(1 - x * x) / x)
    else:
        a0 = (ONE, RatFunc.const(0))
    spec = A1_FROZEN[regime]
    a1 = (_frozen_rat(x, spec["E"]), _frozen_rat(x, spec["K"]))
    out = {0: a0, 1: a1}
    # upward
    for n in range(2, bound + 1):
        c1 = (1 + a * a) * (n - 1) + a * a
        c2 = a * (Fraction(2 * n - 3, 2))
        d = a * Fraction(2 * n + 1, 2)
        out[n] = tuple((c1 * out[n - 1][t] - c2 * out[n - 2][t]) / d for t in range(2))
    # downward: a_{m} from a_{m+1}, a_{m+2} with n = m + 2
    for m in range(-1, -bound - 1, -1):
        n = m + 2
        c1 = (1 + a * a) * (n - 1) + a * a
        d = a * Fraction(2 * n + 1, 2)
        c2 = a * Fraction(2 * n - 3, 2)
        out[m] = tuple((c1 * out[m + 1][t] - d * out[m + 2][t]) / c2 for t in range(2))
    return out


@lru_cache(maxsize=None)
def _entry_table(regime: str, bound: int, dual: bool) -> dict[int, EllValue]:
    src = "low" if dual else regime
    x = SH * SV if dual else modulus_variable(regime)
    tag = "high" if dual else regime
    raw = _entries(src, x, bound)
    return {
        n: EllValue({(1, 0, 0): FieldElem.rat(e), (0, 1, 0): FieldElem.rat(kk)}, PI, tag)
        for n, (e, kk) in raw.items()
    }


ENTRY_BOUND = 16


def diag_entry(n: int, regime: str = "high") -> EllValue:
    """a_n as alpha_n K + beta_n E.  Regimes: 'high', 'low', and 'dual'.

    'dual' is the low-side entry with the replacement s_h -> 1/s_v, s_v -> 1/s_h,
    i.e. the low formula with its modulus renamed k.
    """
    if abs(n) > ENTRY_BOUND:
        raise ValueError(f"|n| <= {ENTRY_BOUND} required")
    if regime == "dual":
        return _entry_table("high", ENTRY_BOUND, True)[n]
    if regime not in ("high", "low"):
        raise ValueError(f"unknown regime {regime!r}")
    return _entry_table(regime, ENTRY_BOUND, False)[n]


def bareiss_det(mat: list[list[EllValue]]) -> EllValue:
    """Fraction-free Gaussian elimination; every division is exact."""
    n = len(mat)
    if n == 0:
        raise ValueError("empty matrix")
    a = [row[:] for row in mat]
    prev = None
    sign = 1
    for k in range(n - 1):
        if a[k][k].is_zero():
            swap = next((r for r in range(k + 1, n) if not a[r][k].is_zero()), None)
            if swap is None:
                return a[k][k]._new({})
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                v = a[i][j] * a[k][k] - a[i][k] * a[k][j]
                a[i][j] = v if prev is None else exact_divide(v, prev)
        prev = a[k][k]
    res = a[n - 1][n - 1]
    return res if sign == 1 else -res


@lru_cache(maxsize=None)
def diag_correlation(N: int, regime: str = "high") -> EllValue:
    """C(N,N) ('high'), C_<(N,N) ('low'), or C_d(N,N) ('dual')."""
    if N < 0:
        raise ValueError("N >= 0")
    if N == 0:
        tag = "low" if regime == "low" else "high"
        return EllValue.const(1, PI, tag)
    if N > ENTRY_BOUND:
        raise ValueError("N too large for the entry bound")
    mat = [[diag_entry(i - j, regime) for j in range(N)] for i in range(N)]
    return bareiss_det(mat)


# -- derivation of a_1 ----------------------------------------------------------


def _numeric_entry(regime: str, x, digits: int):
    from .oracles import diag_symbol_coefficients
    from .numerics import ell_tilde

    a2 = 1 / x if regime == "high" else x
    c = diag_symbol_coefficients(a2, 1, digits)
    return c[1], ell_tilde("E", x), ell_tilde("K", x)


def fit_a1(regime: str, points=(Fraction(1, 5), Fraction(1, 4), Fraction(2, 7), Fraction(1, 3), Fraction(2, 5), Fraction(3, 7), Fraction(1, 2), Fraction(3, 5)), digits: int = 60):
    """Recover a_1 = cE(x) E + cK(x) K from quadrature.

    At each rational point an integer relation among (a_1, E, K) gives the two
    coefficient values exactly; the values are then interpolated by a rational
    function of the lowest degrees reproducing every point.  Returns
    {"E": (num, den), "K": (num, den)} as integer coefficient lists, normalized
    like ``A1_FROZEN``.
    """
    import sympy as sp

    values = {"E": [], "K": []}
    with mp.workdps(digits):
        for x in points:
            xm = mp.mpf(x.numerator) / x.denominator
            a1, e, kk = _numeric_entry(regime, xm, digits)
            rel = mp.pslq([a1, e, kk], maxcoeff=10 ** 8, maxsteps=10 ** 6)
            if rel is None or rel[0] == 0:
                raise RuntimeError(f"no integer relation at x={x}")
            values["E"].append(Fraction(-rel[1], rel[0]))
            values["K"].append(Fraction(-rel[2], rel[0]))
    X = sp.Symbol("x")
    out = {}
    for key, vals in values.items():
        data = [(sp.Rational(p.numerator, p.denominator), sp.Rational(v.numerator, v.denominator)) for p, v in zip(points, vals)]
        fit = None
        for total in range(1, len(data)):
            for degnum in range(0, total + 1):
                try:
                    f = sp.interpolate(data[: total + 1], X) if degnum == total else sp.polys.polyfuncs.rational_interpolate(data[: total + 1], degnum, X=X)
                except Exception:
                    continue
                if all(f.subs(X, p) == v for p, v in data):
                    fit = sp.cancel(f)
                    break
            if fit is not None:
                break
        if fit is None:
            raise RuntimeError(f"rational reconstruction failed for {key}")
        num, den = sp.fraction(sp.together(fit))
        num_c = [int(c) for c in reversed(sp.Poly(num, X).all_coeffs())]
        den_c = [int(c) for c in reversed(sp.Poly(den, X).all_coeffs())]
        # normalize: leading denominator coefficient positive, integer content removed
        if den_c[-1] < 0:
            num_c = [-c for c in num_c]
            den_c = [-c for c in den_c]
        out[key] = (num_c, den_c)
    return out


def same_rational(a, b) -> bool:
    """Compare two (num, den) coefficient-list pairs as rational functions."""
    import sympy as sp

    X = sp.Symbol("x")

    def expr(p):
        num, den = p
        return sum(sp.Integer(c) * X ** i for i, c in enumerate(num)) / sum(sp.Integer(c) * X ** i for i, c in enumerate(den))

    return sp.simplify(expr(a) - expr(b)) == 0
