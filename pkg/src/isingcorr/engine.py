"""Correlation table {C(M,N), C_d(M,N)} from the quadratic difference equations.

Relations (with k = s_h s_v, D = C_d, reflection C(-M,N) = C(M,N) = C(M,-N)):

    R1(M,N):  D(M,N)^2 - D(M,N-1) D(M,N+1) + s_v^2 [C(M,N)^2 - C(M-1,N) C(M+1,N)] = 0
    R2(M,N):  D(M,N)^2 - D(M-1,N) D(M+1,N) + s_h^2 [C(M,N)^2 - C(M,N-1) C(M,N+1)] = 0
    R3(M,N):  D(M,N) D(M+1,N+1) - D(M,N+1) D(M+1,N)
                  - k [C(M,N) C(M+1,N+1) - C(M,N+1) C(M+1,N)] = 0

R1 and R2 are excluded at the origin.  Boundary data: C(0,0) = C_d(0,0) = 1,
the nearest-neighbour row value C(0,1), its mirror C(1,0), and
C_d(1,0) = u_h - s_h C(0,1), C_d(0,1) = u_v - s_v C(1,0).  Diagonals C(N,N)
and C_d(N,N) come from Toeplitz determinants.

Each anti-diagonal layer M+N = L is filled by propagation: any relation with
a single unknown appearing linearly is solved by exact division.  With the
diagonals known this always succeeds on the box.  Should a layer stall, one
unknown is carried as a parameter X and fixed by a relation quadratic in X;
that quadratic must be a perfect square, so X = -b/(2a) and the vanishing
discriminant is asserted exactly.
"""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

from .coeffield import ONE, RH, SH, SV, U_H, U_V, RatFunc
from .diagonal import diag_correlation
from .ellring import (
    PI,
    PI_P,
    EllValue,
    NotDivisible,
    change_basis,
    duality_map,
    exact_divide,
    isotropic_reduce,
    negate_integrals,
    swap_hv,
)
from .coeffield import dual_fe

Key = tuple[str, int, int]  # ("C" | "D", M, N)


class InsufficientSeeds(RuntimeError):
    pass


class AuditFailure(AssertionError):
    pass


# -- relation instances ---------------------------------------------------------


def _k() -> RatFunc:
    return SH * SV


def relation_terms(kind: str, M: int, N: int) -> list[tuple[RatFunc, Key, Key]]:
    """Bilinear terms (coefficient, key1, key2) of a relation instance, reflected to M,N >= 0."""
    def c(m, n):
        return ("C", abs(m), abs(n))

    def d(m, n):
        return ("D", abs(m), abs(n))

    one = ONE
    if kind == "R1":
        sv2 = SV * SV
        return [(one, d(M, N), d(M, N)), (-one, d(M, N - 1), d(M, N + 1)), (sv2, c(M, N), c(M, N)), (-sv2, c(M - 1, N), c(M + 1, N))]
    if kind == "R2":
        sh2 = SH * SH
        return [(one, d(M, N), d(M, N)), (-one, d(M - 1, N), d(M + 1, N)), (sh2, c(M, N), c(M, N)), (-sh2, c(M, N - 1), c(M, N + 1))]
    if kind == "R3":
        k = _k()
        return [
            (one, d(M, N), d(M + 1, N + 1)),
            (-one, d(M, N + 1), d(M + 1, N)),
            (-k, c(M, N), c(M + 1, N + 1)),
            (k, c(M, N + 1), c(M + 1, N)),
        ]
    raise ValueError(f"unknown relation {kind!r}")


def relation_points(kind: str, M: int, N: int) -> set[tuple[int, int]]:
    return {(k[1], k[2]) for _, a, b in relation_terms(kind, M, N) for k in (a, b)}


def relation_instances(points: set[tuple[int, int]]) -> list[tuple[str, int, int]]:
    """All instances whose participating points (after reflection) lie in ``points``."""
    out = []
    for (M, N) in sorted(points):
        for kind in ("R1", "R2", "R3"):
            if kind in ("R1", "R2") and (M, N) == (0, 0):
                continue
            if relation_points(kind, M, N) <= points:
                out.append((kind, M, N))
    return out


def evaluate_relation(kind: str, M: int, N: int, get) -> EllValue:
    total = None
    for coef, a, b in relation_terms(kind, M, N):
        t = get(a) * get(b) * coef
        total = t if total is None else total + t
    return total


# -- polynomials in the layer parameter X ----------------------------------------


class XPoly:
    """(sum_i num[i] X^i) / den with EllValue coefficients."""

    __slots__ = ("num", "den")

    def __init__(self, num: list[EllValue], den: EllValue | None = None):
        while len(num) > 1 and num[-1].is_zero():
            num = num[:-1]
        self.num = num
        self.den = den

    @staticmethod
    def known(v: EllValue) -> "XPoly":
        return XPoly([v])

    @staticmethod
    def param(zero: EllValue) -> "XPoly":
        return XPoly([zero, EllValue.const(1, zero.basis, zero.regime)])

    def degree(self) -> int:
        if len(self.num) == 1 and self.num[0].is_zero():
            return -1
        return len(self.num) - 1

    def _den_mul(self, a, b):
        if a is None:
            return b
        if b is None:
            return a
        return a * b

    def __mul__(self, other: "XPoly") -> "XPoly":
        out = [None] * (len(self.num) + len(other.num) - 1)
        for i, a in enumerate(self.num):
            if a.is_zero():
                continue
            for j, b in enumerate(other.num):
                if b.is_zero():
                    continue
                p = a * b
                out[i + j] = p if out[i + j] is None else out[i + j] + p
        zero = self.num[0] * 0
        return XPoly([x if x is not None else zero for x in out], self._den_mul(self.den, other.den))

    def scale(self, c) -> "XPoly":
        return XPoly([a * c for a in self.num], self.den)

    def __add__(self, other: "XPoly") -> "XPoly":
        if self.den is None and other.den is None or (self.den is not None and other.den is not None and self.den == other.den):
            a, b, den = self.num, other.num, self.den
        else:
            a = [x * other.den for x in self.num] if other.den is not None else self.num
            b = [x * self.den for x in other.num] if self.den is not None else other.num
            den = self._den_mul(self.den, other.den)
        n = max(len(a), len(b))
        zero = self.num[0] * 0
        out = []
        for i in range(n):
            x = a[i] if i < len(a) else zero
            y = b[i] if i < len(b) else zero
            out.append(x + y)
        return XPoly(out, den)

    def __neg__(self):
        return XPoly([-a for a in self.num], self.den)

    def at(self, x0: EllValue) -> EllValue:
        total = self.num[-1]
        for c in reversed(self.num[:-1]):
            total = total * x0 + c
        if self.den is None:
            return total
        return exact_divide(total, self.den)


# -- the table ------------------------------------------------------------------------


@dataclass
class Entry:
    C: EllValue
    C_d: EllValue
    provenance: str
    rule_C: str = ""
    rule_D: str = ""


@dataclass
class CorrTable:
    Nmax: int
    full_layers: int = 0
    entries: dict[tuple[int, int], Entry] = field(default_factory=dict)
    audit_log: list[dict] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    def points(self) -> set[tuple[int, int]]:
        return table_domain(self.Nmax, self.full_layers)

    def C(self, M: int, N: int) -> EllValue:
        return self.entries[(abs(M), abs(N))].C

    def C_d(self, M: int, N: int) -> EllValue:
        return self.entries[(abs(M), abs(N))].C_d

    def get(self, key: Key) -> EllValue:
        e = self.entries[(key[1], key[2])]
        return e.C if key[0] == "C" else e.C_d

    def adapted(self, M: int, N: int, dual: bool = False) -> EllValue:
        """Value in its adapted basis: PI for M <= N, PI_P for M > N."""
        v = self.C_d(M, N) if dual else self.C(M, N)
        return change_basis(v, PI_P) if M > N else v


def table_domain(Nmax: int, full_layers: int = 0) -> set[tuple[int, int]]:
    pts = {(M, N) for M in range(Nmax + 1) for N in range(Nmax + 1)}
    pts |= {(M, L - M) for L in range(full_layers + 1) for M in range(L + 1)}
    return pts


def row_seed() -> EllValue:
    """C(0,1) = u_v ((1 + s_h^2)/s_h Pi - K/s_h)."""
    P = EllValue.P()
    K = EllValue.K()
    return (P * (RH / SH) - K * (ONE / SH)) * U_V


def seeds(Nmax: int, full_layers: int = 0) -> CorrTable:
    t = CorrTable(Nmax, full_layers)
    one = EllValue.const(1)
    t.entries[(0, 0)] = Entry(one, one, "seed")
    c01 = row_seed()
    c10 = change_basis(swap_hv(c01), PI)
    d10 = (EllValue.const(U_H) - c01 * SH)
    d01 = (EllValue.const(U_V) - c10 * SV)
    t.entries[(0, 1)] = Entry(c01, d01, "seed", "row", "boundary")
    t.entries[(1, 0)] = Entry(c10, d10, "swapped", "swap", "boundary")
    # every diagonal up to the longest row, so C(N,N) sits beside C(0,N)
    for n in range(1, max(Nmax, full_layers) + 1):
        t.entries[(n, n)] = Entry(diag_correlation(n, "high"), diag_correlation(n, "dual"), "diagonal", "toeplitz", "toeplitz")
    return t


def _diag_known(t: CorrTable, key: Key) -> bool:
    return (key[1], key[2]) in t.entries


def fill_layer(p: int, t: CorrTable) -> CorrTable:
    """Fill every domain point with M + N = p + 1."""
    L = p + 1
    dom = t.points()
    # points that may participate: the domain, plus diagonal seeds just outside it
    avail = dom | {pt for pt in t.entries}
    layer_pts = sorted(pt for pt in dom if sum(pt) == L)
    unknown = {(kind, M, N) for (M, N) in layer_pts for kind in ("C", "D") if (M, N) not in t.entries}
    if not unknown:
        return t
    vals: dict[Key, XPoly] = {}
    for (M, N), e in t.entries.items():
        vals[("C", M, N)] = XPoly.known(e.C)
        vals[("D", M, N)] = XPoly.known(e.C_d)
    rules: dict[Key, str] = {}
    instances = [
        inst for inst in relation_instances(avail)
        if max(sum(pt) for pt in relation_points(*inst)) <= L + 1
        and any((kk, *pt) in unknown for pt in relation_points(*inst) for kk in ("C", "D"))
        and all(sum(pt) <= L or pt in t.entries for pt in relation_points(*inst))
    ]
    pending = list(instances)
    zero = EllValue({})
    param_key: Key | None = None
    param_dependent: set[Key] = set()

    def keys_of(inst):
        return {k for _, a, b in relation_terms(*inst) for k in (a, b)}

    while unknown:
        progress = False
        for inst in list(pending):
            missing = keys_of(inst) & unknown
            if len(missing) != 1:
                continue
            (u,) = missing
            a_part = None
            b_part = None
            linear = True
            for coef, k1, k2 in relation_terms(*inst):
                if k1 == u and k2 == u:
                    linear = False
                    break
                if k1 == u or k2 == u:
                    other = vals[k2 if k1 == u else k1].scale(coef)
                    a_part = other if a_part is None else a_part + other
                else:
                    term = (vals[k1] * vals[k2]).scale(coef)
                    b_part = term if b_part is None else b_part + term
            if not linear or a_part is None or a_part.degree() != 0:
                continue
            if a_part.num[0].is_zero():
                continue
            a0 = a_part.num[0]
            if b_part is None:
                b_part = XPoly.known(zero)
            # u = -b / a = -(b_num/b_den) * a_den / a0
            num = [-x for x in b_part.num]
            if a_part.den is not None:
                num = [x * a_part.den for x in num]
            den = a0 if b_part.den is None else b_part.den * a0
            sol = XPoly(num, den)
            if sol.degree() <= 0:
                try:
                    v = exact_divide(sol.num[0], den)
                except NotDivisible as exc:
                    raise NotDivisible(exc.remainder, f"non-polynomial solution for {u} from {inst}") from exc
                vals[u] = XPoly.known(v)
            else:
                vals[u] = sol
                param_dependent.add(u)
            rules[u] = "%s(%d,%d)" % inst
            unknown.discard(u)
            pending.remove(inst)
            progress = True
        if progress or not unknown:
            continue
        if param_key is None:
            cands = sorted((abs(M - N), M > N, M, kind) for (kind, M, N) in unknown if kind == "C")
            if not cands:
                raise InsufficientSeeds(f"insufficient seeds at layer {L}")
            _, _, M, _ = cands[0]
            param_key = ("C", M, L - M)
            vals[param_key] = XPoly.param(zero)
            param_dependent.add(param_key)
            unknown.discard(param_key)
            rules[param_key] = "parameter"
            continue
        # resolve the parameter from a fully evaluated relation
        resolved = False
        for inst in sorted(list(pending), key=lambda i: 0 if i[0] == "R3" else 1):
            if keys_of(inst) & unknown:
                continue
            q = None
            for coef, k1, k2 in relation_terms(*inst):
                term = (vals[k1] * vals[k2]).scale(coef)
                q = term if q is None else q + term
            deg = q.degree()
            if deg <= 0:
                continue
            if deg == 1:
                x0 = exact_divide(-q.num[0], q.num[1])
            elif deg == 2:
                c0, c1, c2 = q.num
                disc = c1 * c1 - c2 * c0 * 4
                if not disc.is_zero():
                    continue
                x0 = exact_divide(-c1, c2 * 2)
            else:
                continue
            for key in list(param_dependent):
                vals[key] = XPoly.known(vals[key].at(x0))
            rules[param_key] = "%s(%d,%d) double root" % inst if deg == 2 else "%s(%d,%d)" % inst
            param_dependent.clear()
            pending.remove(inst)
            resolved = True
            break
        if not resolved:
            raise InsufficientSeeds(f"insufficient seeds at layer {L}: parameter not fixed")
    if param_dependent:
        # parameter still free although every unknown is expressed: fix it from the remaining relations
        for inst in pending:
            q = None
            for coef, k1, k2 in relation_terms(*inst):
                term = (vals[k1] * vals[k2]).scale(coef)
                q = term if q is None else q + term
            deg = q.degree()
            if deg == 1:
                x0 = exact_divide(-q.num[0], q.num[1])
            elif deg == 2 and (q.num[1] * q.num[1] - q.num[2] * q.num[0] * 4).is_zero():
                x0 = exact_divide(-q.num[1], q.num[2] * 2)
            else:
                continue
            for key in list(param_dependent):
                vals[key] = XPoly.known(vals[key].at(x0))
            rules[param_key] = "%s(%d,%d)" % inst
            param_dependent.clear()
            break
        if param_dependent:
            raise InsufficientSeeds(f"insufficient seeds at layer {L}: parameter not fixed")
    for (M, N) in layer_pts:
        if (M, N) in t.entries:
            continue
        c = vals[("C", M, N)]
        d = vals[("D", M, N)]
        assert c.degree() <= 0 and c.den is None and d.degree() <= 0 and d.den is None
        t.entries[(M, N)] = Entry(c.num[0], d.num[0], "solved", rules.get(("C", M, N), ""), rules.get(("D", M, N), ""))
    return t


def build_table(Nmax: int = 4, full_layers: int = 0) -> CorrTable:
    t0 = time.perf_counter()
    t = seeds(Nmax, full_layers)
    top = max(sum(pt) for pt in t.points())
    for p in range(1, top):
        t1 = time.perf_counter()
        fill_layer(p, t)
        t.timings[f"layer{p + 1}"] = time.perf_counter() - t1
    t.timings["total"] = time.perf_counter() - t0
    return t


# -- audit --------------------------------------------------------------------------------


def audit(t: CorrTable, check_duality: bool = True, strict: bool = False) -> dict:
    pts = set(t.entries)
    checks = []
    ok = True
    for inst in relation_instances(pts):
        r = evaluate_relation(*inst, t.get)
        zero = r.is_zero()
        ok &= zero
        checks.append({"relation": inst[0], "M": inst[1], "N": inst[2], "zero": zero})
    bnd = boundary_relations(t)
    for name, zero in bnd.items():
        ok &= zero
        checks.append({"relation": name, "M": 0, "N": 0, "zero": zero})
    dual = {}
    if check_duality:
        for (M, N), e in sorted(t.entries.items()):
            d1 = duality_map(e.C)
            match = d1 == e.C_d
            inv = duality_map(d1) == e.C
            dual[(M, N)] = (match, inv)
            ok &= match and inv
            checks.append({"relation": "duality", "M": M, "N": N, "zero": match and inv})
    report = {"ok": ok, "checks": checks, "instances": len(checks)}
    t.audit_log = checks
    if strict and not ok:
        bad = [c for c in checks if not c["zero"]]
        raise AuditFailure(f"{len(bad)} nonzero checks, first {bad[0]}")
    return report


def boundary_relations(t: CorrTable) -> dict[str, bool]:
    """C_d(1,0) = u_h - s_h C(0,1) and C_d(0,1) = u_v - s_v C(1,0), exactly."""
    r4 = t.C_d(1, 0) - (EllValue.const(U_H) - t.C(0, 1) * SH)
    r5 = t.C_d(0, 1) - (EllValue.const(U_V) - t.C(1, 0) * SV)
    return {"boundary_h": r4.is_zero(), "boundary_v": r5.is_zero()}


def printed_boundary_relations(t: CorrTable) -> dict[str, bool]:
    """The boundary relations with C and C_d interchanged (kept for comparison; these fail)."""
    r4 = t.C(1, 0) - (EllValue.const(U_H) - t.C_d(0, 1) * SH)
    r5 = t.C(0, 1) - (EllValue.const(U_V) - t.C_d(1, 0) * SV)
    return {"printed_h": r4.is_zero(), "printed_v": r5.is_zero()}


# -- low temperature ---------------------------------------------------------------------


def low_temp(M: int, N: int, t: CorrTable) -> EllValue:
    """C_<(M,N): the replacement s_h -> 1/s_v, s_v -> 1/s_h applied to C_d(M,N)."""
    d = t.C_d(M, N)
    return EllValue({m: dual_fe(c) for m, c in d.terms.items()}, d.basis, "low")


def simple_identity(t: CorrTable, M: int, N: int) -> bool:
    """For odd N - M: iso C_d(M,N)(E, K) = s * iso C(M,N)(-E, -K), exactly."""
    lhs = isotropic_reduce(t.C_d(M, N))
    rhs = negate_integrals(isotropic_reduce(t.C(M, N))).scale(SH)
    return lhs == rhs


def swap_consistency(t: CorrTable, M: int, N: int) -> bool:
    """C(N,M) == swap_hv(C(M,N)) after rewriting in basis PI."""
    return change_basis(swap_hv(t.C(M, N)), PI) == t.C(N, M)


# -- cache ---------------------------------------------------------------------------------


CACHE_VERSION = 1


class CacheError(RuntimeError):
    pass


def table_to_json(t: CorrTable) -> dict:
    from .render import value_to_json

    return {
        "schema": "isingcorr.table",
        "version": CACHE_VERSION,
        "Nmax": t.Nmax,
        "full_layers": t.full_layers,
        "entries": [
            {
                "M": M,
                "N": N,
                "provenance": e.provenance,
                "rule_C": e.rule_C,
                "rule_D": e.rule_D,
                "C": value_to_json(e.C),
                "C_d": value_to_json(e.C_d),
            }
            for (M, N), e in sorted(t.entries.items())
        ],
    }


def table_from_json(data: dict) -> CorrTable:
    from .render import value_from_json

    if data.get("schema") != "isingcorr.table" or data.get("version") != CACHE_VERSION:
        raise CacheError(f"cache schema/version mismatch: {data.get('schema')!r} v{data.get('version')!r}")
    t = CorrTable(int(data["Nmax"]), int(data.get("full_layers", 0)))
    for item in data["entries"]:
        t.entries[(item["M"], item["N"])] = Entry(
            value_from_json(item["C"]), value_from_json(item["C_d"]), item["provenance"], item.get("rule_C", ""), item.get("rule_D", "")
        )
    return t


def dump_table(t: CorrTable) -> str:
    return json.dumps(table_to_json(t), indent=1, sort_keys=True) + "\n"


def save_table(t: CorrTable, path: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(dump_table(t))
    os.replace(tmp, path)


def load_table(path: str) -> CorrTable:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CacheError(f"corrupt cache {path}: {exc}") from exc
    return table_from_json(data)


def load_or_build(Nmax: int, path: str | None, full_layers: int = 0) -> CorrTable:
    if path and os.path.exists(path):
        t = load_table(path)
        if t.Nmax >= Nmax and t.full_layers >= full_layers:
            return t
        # extend rather than shrink what is already cached
        Nmax, full_layers = max(Nmax, t.Nmax), max(full_layers, t.full_layers)
    t = build_table(max(Nmax, 1), full_layers)
    if path:
        save_table(t, path)
    return t
