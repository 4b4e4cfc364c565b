"""Text, LaTeX and JSON renderings of coefficient-field and ring values."""
from __future__ import annotations

from .coeffield import FieldElem, RatFunc
from .ellring import PI, EllValue, _order_key

SCHEMA_VERSION = 1

_SYMBOLS = {
    "high": ("E", "K", "Pi", "Pi_p"),
    "low": ("E_<", "K_<", "Pi_<", "Pi_p<"),
    "iso": ("E", "K", "Pi", "Pi"),
}
_LATEX_SYMBOLS = {
    "high": (r"\tilde E", r"\tilde K", r"\tilde \Pi", r"\tilde \Pi_p"),
    "low": (r"\tilde E_<", r"\tilde K_<", r"\tilde \Pi_<", r"\tilde \Pi_{p<}"),
    "iso": (r"\tilde E", r"\tilde K", r"\tilde \Pi", r"\tilde \Pi"),
}
_ROOTS_TEXT = {1: "u_v", 2: "u_h", 3: "u_v*u_h"}
_ROOTS_LATEX = {1: r"(1+s_v^2)^{1/2}", 2: r"(1+s_h^2)^{1/2}", 3: r"(1+s_v^2)^{1/2}(1+s_h^2)^{1/2}"}


def _iso_text(s: str) -> str:
    return s.replace("s_h", "s")


def _mono_text(m, names, basis) -> str:
    i, j, l = m
    p = names[2] if basis == PI else names[3]
    parts = []
    for name, e in ((names[0], i), (names[1], j), (p, l)):
        if e == 1:
            parts.append(name)
        elif e > 1:
            parts.append(f"{name}^{e}")
    return "*".join(parts)


def fe_text(c: FieldElem, iso: bool = False) -> str:
    parts = []
    for b in c.support():
        r = str(c.c[b])
        if b:
            r = f"({r})*{_ROOTS_TEXT[b]}" if not iso else f"({r})*u"
        parts.append(r)
    out = " + ".join(parts) if parts else "0"
    return _iso_text(out) if iso else out


def to_text(a: EllValue) -> str:
    if a.is_zero():
        return "0"
    names = _SYMBOLS[a.regime]
    iso = a.regime == "iso"
    lines = []
    for m in a.monomials():
        mono = _mono_text(m, names, a.basis)
        coef = fe_text(a.terms[m], iso)
        if not mono:
            lines.append(coef if coef.lstrip("-").isdigit() else f"({coef})")
        else:
            lines.append(f"({coef})*{mono}")
    return " + ".join(lines)


def rat_latex(r: RatFunc, iso: bool = False) -> str:
    s = r.latex()
    return s.replace("s_h", "s") if iso else s


def fe_latex(c: FieldElem, iso: bool = False) -> str:
    parts = []
    for b in c.support():
        r = rat_latex(c.c[b], iso)
        if b:
            root = r"(1+s^2)^{1/2}" if iso else _ROOTS_LATEX[b]
            r = f"{root}\\left({r}\\right)"
        parts.append(r)
    return " + ".join(parts) if parts else "0"


def to_latex(a: EllValue) -> str:
    if a.is_zero():
        return "0"
    names = _LATEX_SYMBOLS[a.regime]
    iso = a.regime == "iso"
    out = []
    for m in a.monomials():
        i, j, l = m
        p = names[2] if a.basis == PI else names[3]
        mono = " ".join(
            (n if e == 1 else f"{n}^{{{e}}}") for n, e in ((names[0], i), (names[1], j), (p, l)) if e
        )
        coef = fe_latex(a.terms[m], iso)
        out.append(r"\left(" + coef + r"\right)" + (" " + mono if mono else ""))
    return " + ".join(out)


def latex_document(body: str) -> str:
    return "\\documentclass{article}\n\\usepackage{amsmath}\n\\begin{document}\n\\begin{multline*}\n" + body + "\n\\end{multline*}\n\\end{document}\n"


def value_to_json(a: EllValue) -> dict:
    return {
        "basis": a.basis,
        "regime": a.regime,
        "terms": [{"mono": list(m), "coeff": a.terms[m].to_json()} for m in sorted(a.terms, key=_order_key, reverse=True)],
    }


def value_from_json(data: dict) -> EllValue:
    terms = {tuple(t["mono"]): FieldElem.from_json(t["coeff"]) for t in data["terms"]}
    return EllValue(terms, data["basis"], data["regime"])


