"""Linear differential operators in k (at fixed anisotropy) annihilating table entries.

Differentiation keeps the total (E, K, Pi)-degree and never raises the
Pi-degree, so the tower a, Da, D^2 a, ... lives in the span of the
(N - M + 1)(N + M + 2)/2 monomials allowed for C(M,N).  The annihilator is
read off from the square linear system over the coefficient field.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import mpmath as mp

from .coeffield import ONE, FieldElem, RatFunc
from .ellring import PI, EllValue, derivative_k, w_power


class RankDefect(ArithmeticError):
    pass


class StageFailure(ArithmeticError):
    pass


@dataclass
class DiffOp:
    """sum_p coeffs[p] D^p, D = d/dk at fixed nu; monic (coeffs[order] = 1)."""

    coeffs: list[FieldElem]

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def apply(self, a: EllValue) -> EllValue:
        tower = derivative_tower(a, self.order)
        out = EllValue({}, a.basis, a.regime)
        for c, t in zip(self.coeffs, tower):
            out = out + t * c
        return out

    def to_json(self) -> dict:
        return {"order": self.order, "coeffs": [c.to_json() for c in self.coeffs]}

    def to_latex(self) -> str:
        from .render import fe_latex

        parts = []
        for p in range(self.order, -1, -1):
            c = self.coeffs[p]
            if c.is_zero():
                continue
            d = "" if p == 0 else ("\\partial_k" if p == 1 else f"\\partial_k^{{{p}}}")
            parts.append(f"\\left({fe_latex(c)}\\right){d}" if p < self.order else d)
        return " + ".join(parts)


@dataclass
class FactorChain:
    """Stages applied right to left: factors[0] acts first.  Stage i is w^{-m} L w^{m}."""

    factors: list[DiffOp] = field(default_factory=list)
    conjugators: list[int] = field(default_factory=list)

    def orders(self) -> list[int]:
        return [f.order for f in self.factors]

    def apply(self, a: EllValue) -> EllValue:
        for op, m in zip(self.factors, self.conjugators):
            a = conjugated_apply(op, m, a)
        return a


def expected_order(M: int, N: int) -> int:
    M, N = min(M, N), max(M, N)
    return (N - M + 1) * (N + M + 2) // 2


def derivative_tower(a: EllValue, d: int) -> list[EllValue]:
    out = [a]
    for _ in range(d):
        out.append(derivative_k(out[-1]))
    return out


# -- linear algebra -------------------------------------------------------------------


def _common_unit(values: list[EllValue]) -> int | None:
    """Index b such that every coefficient is rational times the basis unit b, else None."""
    sups = {c.support() for v in values for c in v.terms.values()}
    sups.discard(())
    if len(sups) == 1:
        (sup,) = sups
        if len(sup) == 1:
            return sup[0]
    return None


def _size(x) -> int:
    if isinstance(x, RatFunc):
        return len(x.num) + len(x.den)
    return sum(len(c.num) + len(c.den) for c in x.c)


def _solve(rows: list[list], rhs: list):
    """Gaussian elimination over a field (RatFunc or FieldElem); square, full rank required.

    Pivots are chosen by smallest term count to limit coefficient growth.
    """
    n = len(rows)
    a = [r[:] + [b] for r, b in zip(rows, rhs)]
    for col in range(n):
        cands = [r for r in range(col, n) if not a[r][col].is_zero()]
        if not cands:
            raise RankDefect(f"rank {col} < {n}")
        piv = min(cands, key=lambda r: _size(a[r][col]))
        a[col], a[piv] = a[piv], a[col]
        inv = a[col][col].inv()
        a[col] = [x * inv if j > col else x for j, x in enumerate(a[col])]
        for r in range(col + 1, n):
            if not a[r][col].is_zero():
                f = a[r][col]
                a[r] = [x - f * y if j > col else x for j, (x, y) in enumerate(zip(a[r], a[col]))]
    x = [None] * n
    for r in range(n - 1, -1, -1):
        acc = a[r][n]
        for j in range(r + 1, n):
            if not a[r][j].is_zero():
                acc = acc - a[r][j] * x[j]
        x[r] = acc
    return x


def _matrix(vectors: list[EllValue], monos: list, unit: int | None):
    """Column j = coefficients of vectors[j] over monos, as rationals if a common unit exists."""
    if unit is None:
        zero = FieldElem()
        return [[v.terms.get(m, zero) for v in vectors] for m in monos]
    zero = RatFunc.const(0)
    return [[v.terms[m].c[unit] if m in v.terms else zero for v in vectors] for m in monos]


def annihilate(a: EllValue, order: int | None = None) -> DiffOp:
    """Monic operator of order = dim(span of the tower support) killing a."""
    if a.is_zero():
        raise ValueError("zero value has no minimal annihilator")
    # the span of a and its derivatives is contained in the monomials of the same
    # degree with Pi-degree at most that of a
    degs = a.total_degrees()
    if len(degs) != 1:
        raise ValueError("annihilate expects a homogeneous value")
    (deg,) = degs
    pdeg = a.pi_degree()
    monos = [(i, deg - i - l, l) for l in range(pdeg + 1) for i in range(deg - l + 1)]
    d = len(monos) if order is None else order
    tower = derivative_tower(a, d)
    extra = {m for t in tower for m in t.terms} - set(monos)
    if extra:
        raise StageFailure(f"derivatives left the expected monomial span: {sorted(extra)}")
    unit = _common_unit(tower)
    mat = _matrix(tower, monos, unit)
    rows = [r[:d] for r in mat]
    rhs = [-r[d] for r in mat]
    if len(rows) != d:
        raise RankDefect(f"{len(rows)} monomials for order {d}")
    sol = _solve(rows, rhs)
    coeffs = [s if isinstance(s, FieldElem) else FieldElem.rat(s) for s in sol] + [FieldElem.rat(ONE)]
    op = DiffOp(coeffs)
    # exact annihilation, recomputed from the tower
    res = EllValue({}, a.basis, a.regime)
    for c, t in zip(op.coeffs, tower):
        res = res + t * c
    if not res.is_zero():
        raise StageFailure("annihilator does not annihilate")
    return op


def annihilator(a: EllValue, M: int | None = None, N: int | None = None) -> DiffOp:
    """Minimal annihilator of a table entry; checks the order formula when (M, N) is given."""
    op = annihilate(a)
    if M is not None and N is not None and op.order != expected_order(M, N):
        raise RankDefect(f"order {op.order} differs from the expected {expected_order(M, N)}")
    return op


RANK_POINT = (Fraction(3, 4), Fraction(5, 12))  # 1 + s^2 is a rational square at both


def minimality_rank(a: EllValue, d: int) -> int:
    """Rank of the matrix of derivatives 0..d-1 over the monomial support.

    Computed exactly at a rational specialization where u_v and u_h are
    rational; a specialization can only lower the rank, so rank d there
    certifies that no operator of order below d exists.
    """
    sh, sv = RANK_POINT
    tower = derivative_tower(a, d - 1)
    monos = sorted({m for t in tower for m in t.terms})

    def val(c: FieldElem) -> Fraction:
        return c.evaluate(sh, sv, _rational_sqrt)

    rows = [[val(t.coeff(m)) for t in tower] for m in monos]
    rank = 0
    for col in range(d):
        piv = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        for r in range(len(rows)):
            if r != rank and rows[r][col] != 0:
                f = rows[r][col] / rows[rank][col]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def _rational_sqrt(q) -> Fraction:
    from math import isqrt

    q = Fraction(q)
    n, m = isqrt(q.numerator), isqrt(q.denominator)
    if n * n != q.numerator or m * m != q.denominator:
        raise ValueError(f"{q} is not a rational square")
    return Fraction(n, m)


# -- staged factorization --------------------------------------------------------------


def conjugated_apply(op: DiffOp, m: int, a: EllValue) -> EllValue:
    """(1/w^m) op (w^m a)."""
    if m == 0:
        return op.apply(a)
    wm = w_power(m)
    return op.apply(a * wm) * wm.inv()


def top_coefficient(a: EllValue) -> EllValue:
    """Coefficient of Pi^m (m the Pi-degree) as an (E, K) value."""
    m = a.pi_degree()
    return EllValue({(i, j, 0): c for (i, j, l), c in a.terms.items() if l == m}, a.basis, a.regime)


def staged_factorization(a: EllValue) -> FactorChain:
    """Kill the top Pi power stage by stage, then the remaining (E, K) polynomial."""
    if a.basis != PI:
        raise ValueError("staged_factorization expects basis PI")
    chain = FactorChain()
    cur = a
    while not cur.is_zero():
        m = cur.pi_degree()
        top = top_coefficient(cur)
        # with P = w Pi, D P is free of Pi, so an operator killing the coefficient
        # of P^m, i.e. top / w^m, lowers the Pi-degree; conjugating by w^m turns
        # that into an operator killing top itself
        op = annihilate(top)
        nxt = conjugated_apply(op, m, cur)
        if not nxt.is_zero() and nxt.pi_degree() >= m and m > 0:
            raise StageFailure(f"stage of order {op.order} did not lower the Pi-degree {m}")
        if m == 0 and not nxt.is_zero():
            raise StageFailure("final stage does not annihilate")
        chain.factors.append(op)
        chain.conjugators.append(m)
        cur = nxt
    return chain


# -- numerics --------------------------------------------------------------------------


def fornberg_weights(deriv: int, offsets: list[int]) -> list[Fraction]:
    """Exact finite-difference weights at 0 for the given integer offsets."""
    n = len(offsets)
    c = [[Fraction(0)] * (deriv + 1) for _ in range(n)]
    c1 = Fraction(1)
    c4 = Fraction(offsets[0])
    c[0][0] = Fraction(1)
    for i in range(1, n):
        mn = min(i, deriv)
        c2 = Fraction(1)
        c5 = c4
        c4 = Fraction(offsets[i])
        for j in range(i):
            c3 = Fraction(offsets[i] - offsets[j])
            c2 = c2 * c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2
            for k in range(mn, 0, -1):
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3
            c[j][0] = c4 * c[j][0] / c3
        c1 = c2
    return [row[deriv] for row in c]


def central_derivatives(f, x, nmax: int, h, accuracy: int = 8) -> list:
    """[f(x), f'(x), ..., f^(nmax)(x)] from central stencils of the given accuracy order."""
    half = (accuracy + nmax - 1) // 2 + (1 if nmax % 2 == 0 else 0)
    half = max(half, (nmax + accuracy) // 2)
    offsets = list(range(-half, half + 1))
    vals = {o: f(x + o * h) for o in offsets}
    out = [vals[0]]
    for d in range(1, nmax + 1):
        w = fornberg_weights(d, offsets)
        out.append(mp.fsum(mp.mpf(wi.numerator) / wi.denominator * vals[o] for wi, o in zip(w, offsets)) / h ** d)
    return out


def appendix_c1_coefficients(x, nu):
    p2 = 4 * x * (x**2 - 1) * (x + nu) ** 2 * (nu * x + 1) ** 2 * (nu * x**3 + 3 * x**2 + 3 * nu * x + 1)
    p1 = 4 * (x + nu) * (1 + nu * x) * (
        3 * nu**2 * x**7
        + (2 * nu**2 + 14) * nu * x**6
        + (24 * nu**2 + 9) * x**5
        + (12 * nu**2 + 18) * nu * x**4
        + (3 * nu**2 + 2) * x**3
        - 6 * (nu**2 + 1) * nu * x**2
        - (6 * nu**2 + 3) * x
        - 2 * nu
    )
    p0 = (
        3 * nu**3 * x**8
        + (8 * nu**2 + 19) * nu**2 * x**7
        + (nu**4 + 80 * nu**2 + 18) * nu * x**6
        + (55 * nu**2 + 140) * nu**2 * x**5
        + (6 * nu**4 + 123 * nu**2 + 96) * nu * x**4
        + (18 * nu**4 + 99 * nu**2 + 36) * x**3
        + (9 * nu**4 + 10 * nu**2 + 38) * nu * x**2
        + (15 * nu**4 - 2 * nu**2 - 4) * x
        + 8 * (nu**2 - 1) * nu
    )
    return p2, p1, p0


def low_point(x, nu):
    """Parameter point with k_< = x and anisotropy nu."""
    from .numerics import ParamPoint

    return ParamPoint(mp.sqrt(nu / x), 1 / mp.sqrt(nu * x))


APPENDIX_C1_POINTS = (("0.3", "0.7"), ("0.15", "1.0"), ("0.5", "2.0"), ("0.72", "0.4"), ("0.9", "1.3"))


def verify_appendix_c1(value: EllValue, points=APPENDIX_C1_POINTS, digits: int = 50, h="1e-8") -> dict:
    """Apply the printed M_2 M_1 (variable x = k_<) to a low-temperature value numerically."""
    from .numerics import eval_value

    out = []
    with mp.workdps(digits):
        step = mp.mpf(h)
        for xs, ns in points:
            x, nu = mp.mpf(xs), mp.mpf(ns)

            def f(t):
                return eval_value(value, low_point(t, nu))

            d = central_derivatives(f, x, 3, step)
            # g = M_1 f = f' - f/(2(x+nu)), with its first two derivatives
            a = 1 / (2 * (x + nu))
            da = -1 / (2 * (x + nu) ** 2)
            dda = 1 / (x + nu) ** 3
            g = d[1] - a * d[0]
            g1 = d[2] - a * d[1] - da * d[0]
            g2 = d[3] - a * d[2] - 2 * da * d[1] - dda * d[0]
            p2, p1, p0 = appendix_c1_coefficients(x, nu)
            terms = [p2 * g2, p1 * g1, p0 * g]
            res = mp.fsum(terms)
            scale = max(abs(t) for t in terms)
            out.append({"x": xs, "nu": ns, "residual": mp.nstr(res, 5), "relative": float(abs(res) / scale)})
    return {"points": out, "max_relative": max(p["relative"] for p in out)}


def kernel_check(op: DiffOp, target: EllValue, k, nu, shifts=(mp.mpf("0.5"), mp.mpf("1.7")), digits: int = 50, h="1e-8") -> dict:
    """op annihilates target(E + c E*, K + c K*) numerically for the given shifts c.

    (E*, K*) = (K(k') - E(k'), K(k')) is the second solution of the first-order
    system satisfied by (E, K), so every such shift stays in the kernel.
    """
    from .numerics import ParamPoint, ell_tilde, eval_value

    if target.pi_degree() > 0:
        raise ValueError("kernel_check expects an (E, K) value")
    rels = []
    with mp.workdps(digits + 30):
        k, nu = mp.mpf(k), mp.mpf(nu)
        step = mp.mpf(h)
        for c in shifts:
            def f(t, c=c):
                p = ParamPoint.from_k_nu(t, nu)
                kc = mp.sqrt(1 - t * t)
                E, K = ell_tilde("E", t), ell_tilde("K", t)
                Es = ell_tilde("K", kc) - ell_tilde("E", kc)
                Ks = ell_tilde("K", kc)
                return eval_value(target, p, values=(E + c * Es, K + c * Ks, mp.mpf(0), mp.mpf(0)))

            d = central_derivatives(f, k, op.order, step)
            p = ParamPoint.from_k_nu(k, nu)
            from .numerics import eval_fe

            terms = [eval_fe(cf, p) * d[i] for i, cf in enumerate(op.coeffs)]
            rels.append(float(abs(mp.fsum(terms)) / max(abs(t) for t in terms)))
    return {"max_relative": max(rels), "relative": rels}
