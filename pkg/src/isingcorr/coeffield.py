"""Exact coefficient field Q(s_h, s_v)[u_v, u_h].

Polynomials in s_h, s_v are flint ``fmpz_mpoly`` objects over a fixed
two-variable context with graded-lex order.  ``RatFunc`` keeps a reduced
numerator/denominator pair, ``FieldElem`` adds the two square roots
u_v = sqrt(1 + s_v^2) and u_h = sqrt(1 + s_h^2).
"""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Iterable

import flint

CTX = flint.fmpz_mpoly_ctx.get(("sh", "sv"), "deglex")

# IntPoly is the flint multivariate integer polynomial type itself.
IntPoly = flint.fmpz_mpoly

_P_ZERO = CTX.from_dict({})
_P_ONE = CTX.from_dict({(0, 0): 1})


def intpoly(terms: dict[tuple[int, int], int]) -> IntPoly:
    return CTX.from_dict({k: int(v) for k, v in terms.items() if v})


def intpoly_to_json(p: IntPoly) -> list:
    return [[int(e[0]), int(e[1]), str(int(c))] for e, c in sorted(p.to_dict().items(), reverse=True)]


def intpoly_from_json(data: list) -> IntPoly:
    return CTX.from_dict({(int(i), int(j)): int(c) for i, j, c in data})


class RatFunc:
    """Reduced quotient of two integer polynomials in s_h, s_v."""

    __slots__ = ("num", "den", "_key")

    def __init__(self, num, den=None, _reduced: bool = False):
        if not isinstance(num, IntPoly):
            num = _coerce_poly(num)
        if den is None:
            den = _P_ONE
            _reduced = True
        elif not isinstance(den, IntPoly):
            den = _coerce_poly(den)
        if not _reduced:
            if den.is_zero():
                raise ZeroDivisionError("RatFunc with zero denominator")
            if num.is_zero():
                den = _P_ONE
            else:
                g = num.gcd(den)
                if not g.is_one():
                    num = num / g
                    den = den / g
            if den.leading_coefficient() < 0:
                num, den = -num, -den
        self.num = num
        self.den = den
        self._key = None

    # -- constructors
    @staticmethod
    def const(c) -> "RatFunc":
        c = Fraction(c)
        return RatFunc(CTX.from_dict({(0, 0): c.numerator}), CTX.from_dict({(0, 0): c.denominator}))

    @staticmethod
    def sh() -> "RatFunc":
        return RatFunc(CTX.gens()[0])

    @staticmethod
    def sv() -> "RatFunc":
        return RatFunc(CTX.gens()[1])

    # -- predicates
    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_one(self) -> bool:
        return self.num.is_one() and self.den.is_one()

    def is_constant(self) -> bool:
        return self.num.is_constant() and self.den.is_constant()

    # -- arithmetic
    def __add__(self, other):
        other = _as_rat(other)
        if other is NotImplemented:
            return other
        if self.num.is_zero():
            return other
        if other.num.is_zero():
            return self
        if self.den == other.den:
            return RatFunc(self.num + other.num, self.den)
        if self.den.is_one():
            return RatFunc(self.num * other.den + other.num, other.den, _reduced=True)
        if other.den.is_one():
            return RatFunc(other.num * self.den + self.num, self.den, _reduced=True)
        g = self.den.gcd(other.den)
        if g.is_one():
            # coprime reduced denominators: a d + c b shares no factor with b d
            num = self.num * other.den + other.num * self.den
            if num.is_zero():
                return ZERO
            return RatFunc(num, self.den * other.den, _reduced=True)
        # Henrici: only the common part g can cancel
        b1 = self.den / g
        d1 = other.den / g
        t = self.num * d1 + other.num * b1
        if t.is_zero():
            return ZERO
        g2 = t.gcd(g)
        if not g2.is_one():
            t = t / g2
            g = g / g2
        den = b1 * d1 * g
        if den.leading_coefficient() < 0:
            t, den = -t, -den
        return RatFunc(t, den, _reduced=True)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(-self.num, self.den, _reduced=True)

    def __sub__(self, other):
        other = _as_rat(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _as_rat(other)
        if other is NotImplemented:
            return other
        if self.num.is_zero() or other.num.is_zero():
            return ZERO
        a, b, c, d = self.num, self.den, other.num, other.den
        if not d.is_one():
            g = a.gcd(d)
            if not g.is_one():
                a, d = a / g, d / g
        if not b.is_one():
            g = c.gcd(b)
            if not g.is_one():
                c, b = c / g, b / g
        den = b * d
        num = a * c
        if den.leading_coefficient() < 0:
            num, den = -num, -den
        return RatFunc(num, den, _reduced=True)

    __rmul__ = __mul__

    def inv(self) -> "RatFunc":
        if self.num.is_zero():
            raise ZeroDivisionError("inverse of zero RatFunc")
        num, den = self.den, self.num
        if den.leading_coefficient() < 0:
            num, den = -num, -den
        return RatFunc(num, den, _reduced=True)

    def __truediv__(self, other):
        other = _as_rat(other)
        if other is NotImplemented:
            return other
        return self * other.inv()

    def __rtruediv__(self, other):
        other = _as_rat(other)
        if other is NotImplemented:
            return other
        return other * self.inv()

    def __pow__(self, n: int):
        if n < 0:
            return self.inv() ** (-n)
        return RatFunc(self.num ** n, self.den ** n, _reduced=True)

    def __eq__(self, other):
        other = _as_rat(other)
        if other is NotImplemented:
            return False
        return self.num == other.num and self.den == other.den

    def key(self):
        if self._key is None:
            self._key = (tuple(sorted(self.num.to_dict().items())), tuple(sorted(self.den.to_dict().items())))
        return self._key

    def __hash__(self):
        return hash(self.key())

    # -- calculus and substitution
    def derivative(self, var: str) -> "RatFunc":
        dn = self.num.derivative(var)
        if self.den.is_constant():
            return RatFunc(dn, self.den)
        dd = self.den.derivative(var)
        return RatFunc(dn * self.den - self.num * dd, self.den * self.den)

    def swap(self) -> "RatFunc":
        """Exchange s_h and s_v."""
        sh, sv = CTX.gens()
        return RatFunc(self.num.compose(sv, sh), self.den.compose(sv, sh))

    def isotropic(self) -> "RatFunc":
        """Set s_v = s_h (the single variable s is stored as s_h)."""
        sh, _ = CTX.gens()
        return RatFunc(self.num.compose(sh, sh), self.den.compose(sh, sh))

    def dual(self) -> "RatFunc":
        """Apply s_h -> 1/s_v, s_v -> 1/s_h."""
        n, a1, b1 = _reciprocal_swap(self.num)
        d, a2, b2 = _reciprocal_swap(self.den)
        # n/(sh^a1 sv^b1) / (d/(sh^a2 sv^b2))
        ea, eb = a2 - a1, b2 - b1
        mon_n = {(max(ea, 0), max(eb, 0)): 1}
        mon_d = {(max(-ea, 0), max(-eb, 0)): 1}
        return RatFunc(n * CTX.from_dict(mon_n), d * CTX.from_dict(mon_d))

    def compose(self, sh_img: "RatFunc", sv_img: "RatFunc") -> "RatFunc":
        return _eval_poly(self.num, sh_img, sv_img) / _eval_poly(self.den, sh_img, sv_img)

    def evaluate(self, sh, sv):
        """Numeric value; works for Fraction, int, float or mpmath numbers."""
        return _eval_num(self.num, sh, sv) / _eval_num(self.den, sh, sv)

    def sqrt(self) -> "RatFunc":
        """Exact square root with positive leading coefficients; raises if not a square."""
        try:
            n = self.num.sqrt()
            d = self.den.sqrt()
        except Exception as exc:
            raise ValueError(f"{self} is not a perfect square") from exc
        return RatFunc(n, d)

    # -- output
    def __str__(self):
        if self.den.is_one():
            return _pstr(self.num)
        return f"({_pstr(self.num)})/({_pstr(self.den)})"

    __repr__ = __str__

    def latex(self) -> str:
        if self.den.is_one():
            return _platex(self.num)
        return r"\frac{%s}{%s}" % (_platex(self.num), _platex(self.den))

    def to_json(self) -> dict:
        return {"num": intpoly_to_json(self.num), "den": intpoly_to_json(self.den)}

    @staticmethod
    def from_json(data: dict) -> "RatFunc":
        return RatFunc(intpoly_from_json(data["num"]), intpoly_from_json(data["den"]))


def _coerce_poly(x) -> IntPoly:
    if isinstance(x, int):
        return CTX.from_dict({(0, 0): x}) if x else _P_ZERO
    if isinstance(x, dict):
        return intpoly(x)
    raise TypeError(f"cannot build a polynomial from {type(x).__name__}")


def _as_rat(x):
    if isinstance(x, RatFunc):
        return x
    if isinstance(x, (int, Fraction)):
        return RatFunc.const(x)
    return NotImplemented


def _reciprocal_swap(p: IntPoly):
    """p(1/s_v, 1/s_h) as q / (s_h^a s_v^b) with q polynomial."""
    d = p.to_dict()
    if not d:
        return _P_ZERO, 0, 0
    # term sh^i sv^j -> sv^-i sh^-j
    a = max(j for (_, j) in d)
    b = max(i for (i, _) in d)
    q = CTX.from_dict({(a - j, b - i): c for (i, j), c in d.items()})
    return q, a, b


def _eval_poly(p: IntPoly, x: RatFunc, y: RatFunc) -> RatFunc:
    out = ZERO
    cache_x: dict[int, RatFunc] = {}
    cache_y: dict[int, RatFunc] = {}
    for (i, j), c in p.to_dict().items():
        i, j = int(i), int(j)
        if i not in cache_x:
            cache_x[i] = x ** i
        if j not in cache_y:
            cache_y[j] = y ** j
        out = out + cache_x[i] * cache_y[j] * int(c)
    return out


def _eval_num(p: IntPoly, x, y):
    total = 0
    for (i, j), c in p.to_dict().items():
        total += int(c) * x ** int(i) * y ** int(j)
    return total


def _pstr(p: IntPoly) -> str:
    return str(p).replace("sh", "s_h").replace("sv", "s_v")


def _platex(p: IntPoly) -> str:
    parts = []
    for (i, j), c in sorted(p.to_dict().items(), key=lambda t: (-(t[0][0] + t[0][1]), -t[0][0])):
        c = int(c)
        mon = ""
        if i:
            mon += "s_h" if i == 1 else "s_h^{%d}" % i
        if j:
            mon += "s_v" if j == 1 else "s_v^{%d}" % j
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = (str(mag) if mag != 1 or not mon else "") + mon
        parts.append((sign, body))
    if not parts:
        return "0"
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


ZERO = RatFunc(_P_ZERO)
ONE = RatFunc(_P_ONE)
SH = RatFunc.sh()
SV = RatFunc.sv()
RV = ONE + SV * SV  # u_v^2
RH = ONE + SH * SH  # u_h^2


# basis index b = bv + 2*bh for u_v^bv u_h^bh
_BASIS_NAMES = ("", "u_v", "u_h", "u_v u_h")


class FieldElem:
    """Element c00 + c10 u_v + c01 u_h + c11 u_v u_h."""

    __slots__ = ("c",)

    def __init__(self, c00=ZERO, c10=ZERO, c01=ZERO, c11=ZERO):
        self.c = tuple(_as_rat(x) if not isinstance(x, RatFunc) else x for x in (c00, c10, c01, c11))

    @staticmethod
    def from_components(c: Iterable[RatFunc]) -> "FieldElem":
        fe = FieldElem.__new__(FieldElem)
        fe.c = tuple(c)
        return fe

    @staticmethod
    def rat(r) -> "FieldElem":
        return FieldElem(_as_rat(r) if not isinstance(r, RatFunc) else r)

    @property
    def c00(self):
        return self.c[0]

    @property
    def c10(self):
        return self.c[1]

    @property
    def c01(self):
        return self.c[2]

    @property
    def c11(self):
        return self.c[3]

    def is_zero(self) -> bool:
        return all(x.is_zero() for x in self.c)

    def is_one(self) -> bool:
        return self.c[0].is_one() and all(x.is_zero() for x in self.c[1:])

    def support(self) -> tuple[int, ...]:
        return tuple(b for b in range(4) if not self.c[b].is_zero())

    def is_rational(self) -> bool:
        return self.support() in ((), (0,))

    def __add__(self, other):
        other = _as_fe(other)
        if other is NotImplemented:
            return other
        return FieldElem.from_components(a + b for a, b in zip(self.c, other.c))

    __radd__ = __add__

    def __neg__(self):
        return FieldElem.from_components(-a for a in self.c)

    def __sub__(self, other):
        other = _as_fe(other)
        if other is NotImplemented:
            return other
        return FieldElem.from_components(a - b for a, b in zip(self.c, other.c))

    def __rsub__(self, other):
        other = _as_fe(other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, RatFunc)):
            r = _as_rat(other)
            return FieldElem.from_components(a * r for a in self.c)
        if not isinstance(other, FieldElem):
            return NotImplemented
        out = [ZERO, ZERO, ZERO, ZERO]
        for i in self.support():
            a = self.c[i]
            for j in other.support():
                t = a * other.c[j]
                if i & j & 1:
                    t = t * RV
                if i & j & 2:
                    t = t * RH
                out[i ^ j] = out[i ^ j] + t
        return FieldElem.from_components(out)

    __rmul__ = __mul__

    def conj_h(self) -> "FieldElem":
        c = self.c
        return FieldElem.from_components((c[0], c[1], -c[2], -c[3]))

    def conj_v(self) -> "FieldElem":
        c = self.c
        return FieldElem.from_components((c[0], -c[1], c[2], -c[3]))

    def inv(self) -> "FieldElem":
        """Inverse by norming down the tower: first u_h, then u_v."""
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero FieldElem")
        sup = self.support()
        if len(sup) == 1:
            b = sup[0]
            # (c u^b)^-1 = u^b / (c * u^{2b})
            norm = self.c[b]
            if b & 1:
                norm = norm * RV
            if b & 2:
                norm = norm * RH
            comps = [ZERO] * 4
            comps[b] = norm.inv()
            return FieldElem.from_components(comps)
        ch = self.conj_h()
        n1 = self * ch  # lies in Q(s)(u_v)
        cv = n1.conj_v()
        n2 = n1 * cv  # rational
        assert n2.is_rational()
        return ch * cv * n2.c[0].inv()

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction, RatFunc)):
            r = _as_rat(other).inv()
            return FieldElem.from_components(a * r for a in self.c)
        if not isinstance(other, FieldElem):
            return NotImplemented
        return self * other.inv()

    def __rtruediv__(self, other):
        other = _as_fe(other)
        if other is NotImplemented:
            return other
        return other * self.inv()

    def __pow__(self, n: int):
        if n < 0:
            return self.inv() ** (-n)
        out = ONE_FE
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction, RatFunc)):
            other = _as_fe(other)
        if not isinstance(other, FieldElem):
            return False
        return self.c == other.c

    def __hash__(self):
        return hash(tuple(x.key() for x in self.c))

    def map_rat(self, f: Callable[[RatFunc], RatFunc]) -> "FieldElem":
        return FieldElem.from_components(f(a) for a in self.c)

    def derivative(self, var: str) -> "FieldElem":
        return partial_derivative(self, var)

    def evaluate(self, sh, sv, sqrt):
        """Numeric value with positive roots; ``sqrt`` is the numeric square root to use."""
        uv = sqrt(1 + sv * sv)
        uh = sqrt(1 + sh * sh)
        basis = (1, uv, uh, uv * uh)
        return sum(self.c[b].evaluate(sh, sv) * basis[b] for b in self.support())

    def __str__(self):
        parts = []
        for b in self.support():
            r = str(self.c[b])
            parts.append(r if b == 0 else f"({r})*{_BASIS_NAMES[b].replace(' ', '*')}")
        return " + ".join(parts) if parts else "0"

    __repr__ = __str__

    def to_json(self) -> dict:
        return {name: self.c[b].to_json() for b, name in enumerate(("c00", "c10", "c01", "c11")) if not self.c[b].is_zero()}

    @staticmethod
    def from_json(data: dict) -> "FieldElem":
        return FieldElem.from_components(
            RatFunc.from_json(data[name]) if name in data else ZERO for name in ("c00", "c10", "c01", "c11")
        )


def _as_fe(x):
    if isinstance(x, FieldElem):
        return x
    r = _as_rat(x)
    if r is NotImplemented:
        return r
    return FieldElem.from_components((r, ZERO, ZERO, ZERO))


ZERO_FE = FieldElem()
ONE_FE = FieldElem(ONE)
U_V = FieldElem(ZERO, ONE)
U_H = FieldElem(ZERO, ZERO, ONE)
W = FieldElem(ZERO, ZERO, ZERO, ONE)  # w = u_v u_h


def field_mul(a: FieldElem, b: FieldElem) -> FieldElem:
    return a * b


def field_inv(a: FieldElem) -> FieldElem:
    return a.inv()


def ratfunc_arith(a: RatFunc, b: RatFunc, op: str) -> RatFunc:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown op {op!r}")


def partial_derivative(a: FieldElem, var: str) -> FieldElem:
    if var in ("s_h", "sh"):
        v, bit, rel = "sh", 2, RH
        s = SH
    elif var in ("s_v", "sv"):
        v, bit, rel = "sv", 1, RV
        s = SV
    else:
        raise ValueError(f"unknown variable {var!r}")
    out = [c.derivative(v) for c in a.c]
    # d(u)/ds = s u / (1 + s^2)
    factor = s / rel
    for b in a.support():
        if b & bit:
            out[b] = out[b] + a.c[b] * factor
    return FieldElem.from_components(out)


# -- substitutions -----------------------------------------------------------

_PROBE = (Fraction(2, 7), Fraction(3, 5))


def _root_image(radicand: RatFunc) -> FieldElem:
    """Write sqrt(radicand) as r * u_v^a * u_h^b with r rational and positive at a probe point."""
    for b in range(4):
        q = radicand
        if b & 1:
            q = q / RV
        if b & 2:
            q = q / RH
        try:
            r = q.sqrt()
        except ValueError:
            continue
        if r.evaluate(*_PROBE) < 0:
            r = -r
        comps = [ZERO] * 4
        comps[b] = r
        return FieldElem.from_components(comps)
    raise ValueError(f"square root of {radicand} is not in the coefficient field")


def substitute(a: FieldElem, sh_img: RatFunc, sv_img: RatFunc, kind: str | None = None) -> FieldElem:
    """Substitute s_h -> sh_img, s_v -> sv_img, rewriting u_v, u_h in the new variables.

    ``kind`` selects a fast path for the three standard maps ('dual', 'swap', 'iso');
    otherwise a generic composition is used.
    """
    if kind == "dual":
        rat = RatFunc.dual
    elif kind == "swap":
        rat = RatFunc.swap
    elif kind == "iso":
        rat = RatFunc.isotropic
    else:
        def rat(r):
            return r.compose(sh_img, sv_img)
    uv_img = _root_image(ONE + sv_img * sv_img)
    uh_img = _root_image(ONE + sh_img * sh_img)
    basis = (ONE_FE, uv_img, uh_img, uv_img * uh_img)
    out = ZERO_FE
    for b in a.support():
        out = out + basis[b] * rat(a.c[b])
    return out


def dual_fe(a: FieldElem) -> FieldElem:
    return substitute(a, ONE / SV, ONE / SH, kind="dual")


def swap_fe(a: FieldElem) -> FieldElem:
    c = a.c
    return FieldElem.from_components((c[0].swap(), c[2].swap(), c[1].swap(), c[3].swap()))


def iso_fe(a: FieldElem) -> FieldElem:
    return substitute(a, SH, SH, kind="iso")
