"""Sparse polynomials in E, K, Pi (normalized complete elliptic integrals).

A monomial is an exponent triple (i, j, l) for E^i K^j P^l, where P is
Pi(-s_h^2, s_h s_v) in basis ``PI`` and Pi(-s_v^2, s_h s_v) in basis
``PI_P``.  Coefficients are ``FieldElem``.  The ``regime`` tag records
how the transcendentals are to be read numerically: ``high`` (modulus
s_h s_v), ``low`` (modulus 1/(s_h s_v), third-kind parameter -1/s_v^2
resp. -1/s_h^2) and ``iso`` (s_h = s_v = s, no third-kind term).
"""
from __future__ import annotations

from functools import lru_cache
from typing import Iterable

from .coeffield import (
    ONE,
    ONE_FE,
    RH,
    RV,
    SH,
    SV,
    ZERO,
    ZERO_FE,
    FieldElem,
    RatFunc,
    dual_fe,
    iso_fe,
    swap_fe,
)

PI = "PI"
PI_P = "PI_P"
BASES = (PI, PI_P)

Mono = tuple[int, int, int]


class BasisMismatch(ValueError):
    pass


class NotDivisible(ArithmeticError):
    """Raised by exact_divide; carries the remainder."""

    def __init__(self, remainder: "EllValue", message: str = "division is not exact"):
        super().__init__(message)
        self.remainder = remainder


def _order_key(m: Mono):
    i, j, l = m
    return (l, j, i)


class EllValue:
    __slots__ = ("terms", "basis", "regime")

    def __init__(self, terms: dict[Mono, FieldElem] | None = None, basis: str = PI, regime: str = "high"):
        if basis not in BASES:
            raise ValueError(f"unknown basis {basis!r}")
        self.terms = {m: c for m, c in (terms or {}).items() if not c.is_zero()}
        self.basis = basis
        self.regime = regime

    # -- constructors
    @staticmethod
    def const(c, basis: str = PI, regime: str = "high") -> "EllValue":
        c = c if isinstance(c, FieldElem) else FieldElem.rat(c)
        return EllValue({(0, 0, 0): c}, basis, regime)

    @staticmethod
    def E(basis: str = PI, regime: str = "high") -> "EllValue":
        return EllValue({(1, 0, 0): ONE_FE}, basis, regime)

    @staticmethod
    def K(basis: str = PI, regime: str = "high") -> "EllValue":
        return EllValue({(0, 1, 0): ONE_FE}, basis, regime)

    @staticmethod
    def P(basis: str = PI, regime: str = "high") -> "EllValue":
        return EllValue({(0, 0, 1): ONE_FE}, basis, regime)

    def _new(self, terms) -> "EllValue":
        v = EllValue.__new__(EllValue)
        v.terms = terms
        v.basis = self.basis
        v.regime = self.regime
        return v

    def _check(self, other: "EllValue"):
        if other.basis != self.basis:
            raise BasisMismatch(f"basis mismatch: {self.basis} vs {other.basis}")
        if other.regime != self.regime:
            raise BasisMismatch(f"regime mismatch: {self.regime} vs {other.regime}")

    def _lift(self, other) -> "EllValue":
        if isinstance(other, EllValue):
            self._check(other)
            return other
        if isinstance(other, (int, RatFunc, FieldElem)) or hasattr(other, "numerator"):
            return EllValue.const(other, self.basis, self.regime)
        raise TypeError(f"cannot combine EllValue with {type(other).__name__}")

    # -- predicates / structure
    def is_zero(self) -> bool:
        return not self.terms

    def monomials(self) -> list[Mono]:
        return sorted(self.terms, key=_order_key, reverse=True)

    def coeff(self, m: Mono) -> FieldElem:
        return self.terms.get(m, ZERO_FE)

    def total_degrees(self) -> set[int]:
        return {sum(m) for m in self.terms}

    def pi_degree(self) -> int:
        return max((m[2] for m in self.terms), default=-1)

    def is_homogeneous(self, degree: int | None = None) -> bool:
        degs = self.total_degrees()
        if not degs:
            return True
        if len(degs) != 1:
            return False
        return degree is None or degs == {degree}

    def leading(self) -> tuple[Mono, FieldElem]:
        m = max(self.terms, key=_order_key)
        return m, self.terms[m]

    # -- arithmetic
    def __add__(self, other):
        other = self._lift(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            if m in out:
                s = out[m] + c
                if s.is_zero():
                    del out[m]
                else:
                    out[m] = s
            else:
                out[m] = c
        return self._new(out)

    __radd__ = __add__

    def __neg__(self):
        return self._new({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        other = self._lift(other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "EllValue":
        if not isinstance(c, FieldElem):
            c = FieldElem.rat(c)
        if c.is_zero():
            return self._new({})
        out = {}
        for m, a in self.terms.items():
            p = a * c
            if not p.is_zero():
                out[m] = p
        return self._new(out)

    def __mul__(self, other):
        if isinstance(other, (int, RatFunc, FieldElem)) or hasattr(other, "numerator"):
            return self.scale(other)
        self._check(other)
        out: dict[Mono, FieldElem] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = (m1[0] + m2[0], m1[1] + m2[1], m1[2] + m2[2])
                p = c1 * c2
                if m in out:
                    out[m] = out[m] + p
                else:
                    out[m] = p
        return self._new({m: c for m, c in out.items() if not c.is_zero()})

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, EllValue):
            return exact_divide(self, other)
        if not isinstance(other, FieldElem):
            other = FieldElem.rat(other)
        return self.scale(other.inv())

    def __pow__(self, n: int):
        out = EllValue.const(1, self.basis, self.regime)
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def __eq__(self, other):
        if not isinstance(other, EllValue):
            return False
        return self.basis == other.basis and self.regime == other.regime and self.terms == other.terms

    def __hash__(self):
        return hash((self.basis, self.regime, frozenset(self.terms.items())))

    def map_coeffs(self, f) -> "EllValue":
        return self._new({m: f(c) for m, c in self.terms.items()})

    def with_tags(self, basis: str | None = None, regime: str | None = None) -> "EllValue":
        return EllValue(dict(self.terms), basis or self.basis, regime or self.regime)

    def __str__(self):
        from .render import to_text

        return to_text(self)

    __repr__ = __str__


# -- module-level operations -------------------------------------------------


def ell_arith(a: EllValue, b: EllValue, op: str) -> EllValue:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def exact_divide(num: EllValue, den: EllValue) -> EllValue:
    """Quotient q with q * den == num; raises NotDivisible otherwise.

    Plain multivariate division with respect to the (l, j, i) lex order.
    Any leading term of a multiple of ``den`` is divisible by the leading
    term of ``den``, so the first non-divisible leading term proves inexactness.
    """
    num._check(den)
    if den.is_zero():
        raise ZeroDivisionError("exact_divide by zero EllValue")
    md, cd = den.leading()
    inv_cd = cd.inv()
    dterms = list(den.terms.items())
    rem = dict(num.terms)
    quot: dict[Mono, FieldElem] = {}
    while rem:
        mr = max(rem, key=_order_key)
        cr = rem[mr]
        dm = (mr[0] - md[0], mr[1] - md[1], mr[2] - md[2])
        if min(dm) < 0:
            raise NotDivisible(num._new(rem))
        t = cr * inv_cd
        quot[dm] = t
        for m, c in dterms:
            mm = (m[0] + dm[0], m[1] + dm[1], m[2] + dm[2])
            p = c * t
            if mm in rem:
                s = rem[mm] - p
                if s.is_zero():
                    del rem[mm]
                else:
                    rem[mm] = s
            else:
                rem[mm] = -p
        rem.pop(mr, None)
    return num._new(quot)


def inv_w() -> FieldElem:
    """1/w = u_v u_h / ((1+s_v^2)(1+s_h^2))."""
    return FieldElem.from_components((RatFunc.const(0), RatFunc.const(0), RatFunc.const(0), (RV * RH).inv()))


def _substitute_pi(a: EllValue, image: EllValue, basis: str) -> EllValue:
    """Replace the third-kind generator by ``image`` (a value in the target basis)."""
    powers = [EllValue.const(1, basis, a.regime)]
    out = EllValue({}, basis, a.regime)
    for (i, j, l), c in a.terms.items():
        while len(powers) <= l:
            powers.append(powers[-1] * image)
        mono = EllValue({(i, j, 0): c}, basis, a.regime)
        out = out + mono * powers[l]
    return out


def change_basis(a: EllValue, to: str) -> EllValue:
    """Rewrite using Pi + Pi_p = K + 1/w."""
    if to not in BASES:
        raise ValueError(f"unknown basis {to!r}")
    if a.basis == to:
        return a
    # same relation in both directions: P_old = K + 1/w - P_new
    image = EllValue({(0, 1, 0): ONE_FE, (0, 0, 0): inv_w(), (0, 0, 1): -ONE_FE}, to, a.regime)
    return _substitute_pi(a, image, to)


def swap_hv(a: EllValue) -> EllValue:
    """s_h <-> s_v.  E, K are fixed; Pi and Pi_p exchange, so the basis tag flips."""
    to = PI_P if a.basis == PI else PI
    return EllValue({m: swap_fe(c) for m, c in a.terms.items()}, to, a.regime)


_K = None


def _k() -> RatFunc:
    global _K
    if _K is None:
        _K = SH * SV
    return _K


def duality_map(a: EllValue) -> EllValue:
    """s_h -> 1/s_v, s_v -> 1/s_h, E -> E/k + (k^2-1)K/k, K -> kK, Pi -> kPi (same for Pi_p)."""
    k = FieldElem.rat(_k())
    e_img = EllValue({(1, 0, 0): FieldElem.rat(ONE / _k()), (0, 1, 0): FieldElem.rat((_k() * _k() - 1) / _k())}, a.basis, a.regime)
    return _linear_substitution(a, dual_fe, e_img, k, k)


def _linear_substitution(a: EllValue, coeff_map, e_img: EllValue, k_scale: FieldElem, p_scale: FieldElem) -> EllValue:
    out: dict[Mono, FieldElem] = {}
    e_pows = [EllValue.const(1, a.basis, a.regime)]
    for (i, j, l), c in a.terms.items():
        while len(e_pows) <= i:
            e_pows.append(e_pows[-1] * e_img)
        cc = coeff_map(c) * (k_scale ** j) * (p_scale ** l)
        for (ei, ej, _), ec in e_pows[i].terms.items():
            m = (ei, ej + j, l)
            p = ec * cc
            out[m] = out[m] + p if m in out else p
    return EllValue({m: c for m, c in out.items() if not c.is_zero()}, a.basis, a.regime)


def isotropic_reduce(a: EllValue) -> EllValue:
    """Set s_h = s_v = s and eliminate Pi via Pi(-s^2, s^2) = K/2 + 1/(2(1+s^2)).

    The single variable s is stored in the s_h slot; u_v and u_h both become u.
    """
    half = RatFunc.const(1) / 2
    image = EllValue({(0, 1, 0): FieldElem.rat(half), (0, 0, 0): FieldElem.rat(half / RH)}, PI, "iso")
    coeffs = EllValue({m: iso_fe(c) for m, c in a.terms.items()}, PI, "iso")
    return _substitute_pi(coeffs, image, PI)


def negate_integrals(a: EllValue) -> EllValue:
    """E -> -E, K -> -K, Pi -> -Pi: each monomial picks up (-1)^degree."""
    return a._new({m: (c if sum(m) % 2 == 0 else -c) for m, c in a.terms.items()})


# -- derivative in k at fixed nu ----------------------------------------------


def _euler(p):
    """s_h dp/ds_h + s_v dp/ds_v for an integer polynomial."""
    sh, sv = SH.num, SV.num
    return sh * p.derivative("sh") + sv * p.derivative("sv")


def _euler_rat(r: RatFunc) -> RatFunc:
    """T(n/d) for reduced n/d without a gcd against the full d^2.

    With g = gcd(d, T d), d = g d1 and T d = g e1, T(n/d) = (T(n) d1 - n e1) / (g d1^2);
    the numerator is coprime to d1, so only g can cancel.
    """
    n, d = r.num, r.den
    if d.is_constant():
        return RatFunc(_euler(n), d, _reduced=True)
    ed = _euler(d)
    g = d.gcd(ed)
    d1, e1 = d / g, ed / g
    t = _euler(n) * d1 - n * e1
    if t.is_zero():
        return ZERO
    g2 = t.gcd(g)
    if not g2.is_one():
        t, g = t / g2, g / g2
    den = g * d1 * d1
    if den.leading_coefficient() < 0:
        t, den = -t, -den
    return RatFunc(t, den, _reduced=True)


_ROOT_LOG = None


def _root_log() -> tuple[RatFunc, RatFunc, RatFunc, RatFunc]:
    """T(u)/u for the basis units 1, u_v, u_h, u_v u_h."""
    global _ROOT_LOG
    if _ROOT_LOG is None:
        lv, lh = SV * SV / RV, SH * SH / RH
        _ROOT_LOG = (RatFunc.const(0), lv, lh, lv + lh)
    return _ROOT_LOG


def coeff_derivative_k(c: FieldElem) -> FieldElem:
    """(1/(2 s_h s_v)) (s_h d/ds_h + s_v d/ds_v) of a field element.

    With the Euler operator T, T(u_v) = s_v^2 u_v / (1 + s_v^2) and
    T(u_h) = s_h^2 u_h / (1 + s_h^2).
    """
    if c.is_zero():
        return c
    inv_two_k = ONE / (2 * SH * SV)
    logs = _root_log()
    out = []
    for b in range(4):
        r = c.c[b]
        if r.is_zero():
            out.append(r)
            continue
        d = _euler_rat(r)
        if b:
            d = d + r * logs[b]
        out.append(d * inv_two_k)
    return FieldElem.from_components(out)


@lru_cache(maxsize=None)
def deriv_closure() -> dict[str, EllValue]:
    """dE/dk, dK/dk, dPi/dk as degree-one values in basis PI."""
    k = _k()
    nu = SH / SV
    dE = EllValue({(1, 0, 0): FieldElem.rat(ONE / k), (0, 1, 0): FieldElem.rat(-ONE / k)})
    dK = EllValue({(1, 0, 0): FieldElem.rat(ONE / (k * (1 - k * k))), (0, 1, 0): FieldElem.rat(-ONE / k)})
    # d(w Pi)/dk = (A K + B E)/w, w^2 = (1+s_h^2)(1+s_v^2)
    A = -(nu + k) / (2 * nu * k)
    B = (nu * k * k + 2 * k + nu) / (2 * nu * k * (1 - k * k))
    w2 = RH * RV
    dw2 = coeff_derivative_k(FieldElem.rat(w2)).c00
    dP = EllValue(
        {
            (0, 1, 0): FieldElem.rat(A / w2),
            (1, 0, 0): FieldElem.rat(B / w2),
            (0, 0, 1): FieldElem.rat(-dw2 / (2 * w2)),
        }
    )
    return {"dE": dE, "dK": dK, "dPi": dP}


def derivative_k(a: EllValue) -> EllValue:
    if a.regime != "high":
        raise ValueError("derivative_k is defined for high-temperature values")
    if a.basis == PI_P:
        return swap_hv(derivative_k(swap_hv(a)))
    table = deriv_closure()
    gens = (table["dE"], table["dK"], table["dPi"])
    out = EllValue({}, PI)
    for m, c in a.terms.items():
        dc = coeff_derivative_k(c)
        if not dc.is_zero():
            out = out + EllValue({m: dc})
        for g in range(3):
            e = m[g]
            if e == 0:
                continue
            lower = list(m)
            lower[g] -= 1
            out = out + gens[g].scale(c * e) * EllValue({tuple(lower): ONE_FE})
    return out


def w_power(m: int) -> FieldElem:
    """w^m with w = u_v u_h."""
    out = ONE_FE
    w = FieldElem.from_components((RatFunc.const(0), RatFunc.const(0), RatFunc.const(0), ONE))
    for _ in range(m):
        out = out * w
    return out


def homogeneity_report(a: EllValue, M: int, N: int) -> dict:
    """Check degree max(M,N) and third-kind degree |N-M| in the adapted basis."""
    deg = max(M, N)
    bound = abs(N - M)
    ok_deg = all(sum(m) == deg for m in a.terms)
    ok_pi = all(m[2] <= bound for m in a.terms)
    return {"degree_ok": ok_deg, "pi_degree_ok": ok_pi, "degree": deg, "pi_bound": bound}


def coefficient_purity(a: EllValue, parity: int) -> bool:
    """Every coefficient is rational times u_v^parity (times nothing else)."""
    allowed = (1,) if parity else (0,)
    return all(c.support() == allowed for c in a.terms.values())


def from_terms(items: Iterable[tuple[Mono, FieldElem]], basis: str = PI, regime: str = "high") -> EllValue:
    return EllValue(dict(items), basis, regime)
