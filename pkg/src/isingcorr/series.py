"""Truncated Laurent series in lambda for the limit s_h = s*lambda, s_v = s/lambda.

In that limit k = s_h s_v = s^2 is fixed, so E and K do not move while the
third-kind integral Pi(-s^2 lambda^2, s^2) expands in even powers of lambda.
Coefficients are rational functions of s, stored in the s_h slot of RatFunc.

    Pi = sum_m (-s^2 lambda^2)^m I_m,   I_m = (2/pi) int sin^{2m} / sqrt(1 - k^2 sin^2)

with I_0 = K, I_1 = (K - E)/k^2 and, by integration by parts,

    (2m + 1) k^2 I_{m+1} = 2m (1 + k^2) I_m - (2m - 1) I_{m-1}.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .coeffield import ONE, SH, FieldElem, RatFunc
from .ellring import PI, EllValue

PI_SERIES_BOUND = 16  # largest lambda order offered to callers
REGIME = "iso"


class SeriesOrderError(ValueError):
    pass


def _ev(c: RatFunc, mono=(0, 0, 0)) -> EllValue:
    return EllValue({mono: FieldElem.rat(c)}, PI, REGIME)


def _zero() -> EllValue:
    return EllValue({}, PI, REGIME)


@dataclass
class LamSeries:
    """sum_e coeffs[e] lambda^e, exact for every exponent <= prec."""

    coeffs: dict[int, EllValue]
    prec: int

    def __post_init__(self):
        self.coeffs = {e: c for e, c in self.coeffs.items() if e <= self.prec and not c.is_zero()}

    @staticmethod
    def const(v: EllValue, prec: int) -> "LamSeries":
        return LamSeries({0: v}, prec)

    def valuation(self) -> int:
        """Lowest exponent present; prec + 1 for the zero series."""
        return min(self.coeffs, default=self.prec + 1)

    def coeff(self, e: int) -> EllValue:
        if e > self.prec:
            raise SeriesOrderError(f"lambda^{e} beyond precision {self.prec}")
        return self.coeffs.get(e, _zero())

    def __add__(self, other: "LamSeries") -> "LamSeries":
        prec = min(self.prec, other.prec)
        out = dict(self.coeffs)
        for e, c in other.coeffs.items():
            out[e] = out[e] + c if e in out else c
        return LamSeries(out, prec)

    def __neg__(self):
        return LamSeries({e: -c for e, c in self.coeffs.items()}, self.prec)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other) -> "LamSeries":
        if not isinstance(other, LamSeries):
            return LamSeries({e: c * other for e, c in self.coeffs.items()}, self.prec)
        prec = min(self.prec + other.valuation(), other.prec + self.valuation())
        out: dict[int, EllValue] = {}
        for e1, c1 in self.coeffs.items():
            for e2, c2 in other.coeffs.items():
                e = e1 + e2
                if e > prec:
                    continue
                p = c1 * c2
                out[e] = out[e] + p if e in out else p
        return LamSeries(out, prec)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, LamSeries):
            return NotImplemented
        prec = min(self.prec, other.prec)
        keys = {e for e in set(self.coeffs) | set(other.coeffs) if e <= prec}
        return all(self.coeff(e) == other.coeff(e) for e in keys)

    def truncate(self, prec: int) -> "LamSeries":
        return LamSeries(dict(self.coeffs), min(prec, self.prec))


# -- scalar series (coefficients in Q(s)) ---------------------------------------


def _scalar(coeffs: dict[int, RatFunc], prec: int) -> LamSeries:
    return LamSeries({e: _ev(c) for e, c in coeffs.items() if not c.is_zero()}, prec)


def _laurent_poly(p) -> dict[int, RatFunc]:
    """p(s lambda, s/lambda) for an integer polynomial p(s_h, s_v)."""
    out: dict[int, RatFunc] = {}
    for exps, c in p.to_dict().items():
        a, b = int(exps[0]), int(exps[1])
        term = SH ** (a + b) * int(c)
        out[a - b] = out[a - b] + term if (a - b) in out else term
    return {e: c for e, c in out.items() if not c.is_zero()}


def _invert(d: dict[int, RatFunc], prec_terms: int) -> tuple[int, list[RatFunc]]:
    """1/d as lambda^{-v} (sum_i q_i lambda^i), i < prec_terms."""
    v = min(d)
    a = [d.get(v + i, RatFunc.const(0)) for i in range(prec_terms)]
    q = [a[0].inv()]
    for n in range(1, prec_terms):
        acc = RatFunc.const(0)
        for i in range(1, n + 1):
            if not a[i].is_zero():
                acc = acc + a[i] * q[n - i]
        q.append(-acc * q[0])
    return -v, q


def rat_series(r: RatFunc, prec: int) -> LamSeries:
    num = _laurent_poly(r.num)
    den = _laurent_poly(r.den)
    dv = min(den)
    nv = min(num) if num else 0
    terms = prec - (nv - dv) + 1
    if not num:
        return LamSeries({}, prec)
    shift, q = _invert(den, max(terms, 1))
    out: dict[int, RatFunc] = {}
    for e, c in num.items():
        for i, qi in enumerate(q):
            ee = e + shift + i
            if ee > prec:
                break
            t = c * qi
            out[ee] = out[ee] + t if ee in out else t
    return _scalar(out, prec)


def _sqrt1p_series(coef: RatFunc, step: int, prec: int) -> dict[int, RatFunc]:
    """(1 + coef lambda^step)^{1/2} through lambda^prec."""
    from fractions import Fraction

    out = {}
    binom = Fraction(1)
    n = 0
    while n * step <= prec:
        out[n * step] = coef ** n * binom
        binom = binom * (Fraction(1, 2) - n) / (n + 1)
        n += 1
    return out


def u_h_series(prec: int) -> LamSeries:
    """u_h = (1 + s^2 lambda^2)^{1/2}."""
    return _scalar(_sqrt1p_series(SH * SH, 2, prec), prec)


def u_v_series(prec: int) -> LamSeries:
    """u_v = (1 + s^2/lambda^2)^{1/2} = (s/lambda)(1 + lambda^2/s^2)^{1/2} for s > 0."""
    inner = _sqrt1p_series(ONE / (SH * SH), 2, prec + 1)
    return _scalar({e - 1: c * SH for e, c in inner.items()}, prec)


# -- third-kind integral --------------------------------------------------------


@lru_cache(maxsize=None)
def moments(m_max: int) -> tuple[EllValue, ...]:
    """I_0 .. I_{m_max} as (E, K)-linear values with k = s^2."""
    k2 = SH ** 4
    E = _ev(ONE, (1, 0, 0))
    K = _ev(ONE, (0, 1, 0))
    out = [K, (K - E) * (ONE / k2)]
    for m in range(1, m_max):
        nxt = (out[m] * ((1 + k2) * (2 * m)) - out[m - 1] * (2 * m - 1)) * (ONE / (k2 * (2 * m + 1)))
        out.append(nxt)
    return tuple(out[: m_max + 1])


def pi_lambda_series(order: int) -> LamSeries:
    """Pi(-s^2 lambda^2, s^2) through lambda^order."""
    mmax = max(order // 2, 1)
    I = moments(mmax)
    out = {}
    for m in range(order // 2 + 1):
        out[2 * m] = I[m] * ((-1) ** m * SH ** (2 * m))
    return LamSeries(out, order)


# -- substitution ---------------------------------------------------------------------


def _fe_series(c: FieldElem, prec: int, us: tuple[LamSeries, LamSeries]) -> LamSeries:
    uv, uh = us
    total = None
    for b in c.support():
        s = rat_series(c.c[b], prec + 4)
        if b & 1:
            s = s * uv
        if b & 2:
            s = s * uh
        total = s if total is None else total + s
    return total if total is not None else LamSeries({}, prec)


def lam_substitute(a: EllValue, order: int) -> LamSeries:
    """a(s_h = s lambda, s_v = s/lambda) through lambda^order (basis PI)."""
    if a.basis != PI:
        raise ValueError("lam_substitute needs basis PI")
    if order > PI_SERIES_BOUND:
        raise SeriesOrderError(f"order {order} exceeds the available expansion ({PI_SERIES_BOUND})")
    degree = max((sum(m) for m in a.terms), default=0)
    # negative powers cancel between factors, so every factor carries extra terms
    pad = 2 * degree + 4
    while True:
        total = _substitute_at(a, order + pad)
        if total.prec >= order:
            return total.truncate(order)
        pad *= 2
        if pad > 8 * PI_SERIES_BOUND:
            raise SeriesOrderError(f"precision {total.prec} below requested order {order}")


def _substitute_at(a: EllValue, work: int) -> LamSeries:
    pls = pi_lambda_series(work - work % 2)
    pis = [LamSeries.const(_ev(ONE), work)]
    us = (u_v_series(work), u_h_series(work))
    total = LamSeries({}, work)
    for (i, j, l), c in a.terms.items():
        while len(pis) <= l:
            pis.append(pis[-1] * pls)
        cs = _fe_series(c, work, us)
        mono = _ev(ONE, (i, j, 0))
        total = total + (cs * mono) * pis[l]
    return total


def iso_value(a: EllValue) -> EllValue:
    """Rewrite an (E, K) value depending on s_h s_v only with s_h = s_v = s."""
    return EllValue({m: FieldElem.rat(c.c[0].isotropic()) for m, c in a.terms.items()}, PI, REGIME)


def lambda_limit_check(M: int, N: int, table, order: int | None = None) -> dict:
    """C(M,N) in the lambda limit: no negative powers through lambda^order, lambda^0 = C(N,N)."""
    from .diagonal import diag_correlation

    order = 2 * N if order is None else order
    ser = lam_substitute(table.C(M, N), order)
    neg = sorted(e for e in ser.coeffs if e < 0)
    target = iso_value(diag_correlation(N, "high"))
    ok0 = ser.coeff(0) == target
    return {"M": M, "N": N, "order": order, "negative_terms": neg, "limit_ok": ok0, "ok": ok0 and not neg}
