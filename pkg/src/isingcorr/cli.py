"""Command-line entry point: compute, render, evaluate, verify and cache correlations.

    isingcorr correlation M N [--kind C|C_d|C_low] [--format text|latex|json]
    isingcorr eval M N --sh S_H --sv S_V [--kind ...] [--digits D]
    isingcorr verify SUITE [--Nmax 4] [--samples 100] [--seed 0] [--report FILE]
    isingcorr oracle toeplitz_row|toeplitz_diag|transfer_matrix N --sh S_H --sv S_V

The table cache lives at $ISINGCORR_CACHE, or ~/.cache/isingcorr/table.json;
--cache overrides both and --no-cache keeps everything in memory.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import mpmath as mp

from . import engine, numerics, ode, oracles, series
from .engine import CacheError, CorrTable
from .ellring import EllValue, duality_map, isotropic_reduce
from .numerics import ParamPoint, PrecisionConfig
from .render import SCHEMA_VERSION, latex_document, to_latex, to_text, value_to_json

CACHE_ENV = "ISINGCORR_CACHE"
KINDS = ("C", "C_d", "C_low")
SUITES = ("recursions", "duality", "identities", "isotropic", "lambda", "ode", "appendixC1")

HIGH_POINTS = ((0.6, 0.8), (0.3, 0.5), (0.9, 0.7))
LOW_POINTS = ((1.3, 1.7), (2.0, 0.8), (1.5, 1.5))
ISO_POINTS = (0.3, 0.6, 0.85)
ODE_PAIRS = ((0, 1), (1, 2), (0, 2), (0, 3))
LAMBDA_PAIRS = ((0, 1), (0, 2), (1, 2), (0, 3))


@dataclass
class RunConfig:
    Nmax: int = 4
    precision: PrecisionConfig = field(default_factory=PrecisionConfig)
    cache_path: str | None = None
    output_format: str = "text"
    sample_points: list[tuple[float, float]] = field(default_factory=lambda: list(HIGH_POINTS + LOW_POINTS))
    rng_seed: int = 0

    def __post_init__(self):
        if self.Nmax < 1:
            raise ValueError("Nmax must be at least 1")
        for sh, sv in self.sample_points:
            if sh <= 0 or sv <= 0 or sh * sv == 1:
                raise ValueError(f"sample point ({sh}, {sv}) is not in a regime")


def default_cache_path() -> str:
    env = os.environ.get(CACHE_ENV)
    if env:
        return env
    return str(Path.home() / ".cache" / "isingcorr" / "table.json")


def get_table(cfg: RunConfig, Nmax: int | None = None, full_layers: int = 0) -> CorrTable:
    path = cfg.cache_path
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
    return engine.load_or_build(Nmax or cfg.Nmax, path, full_layers)


def table_for(cfg: RunConfig, M: int, N: int) -> CorrTable:
    """Smallest table holding (M, N): the Nmax box, or a full triangle beyond it."""
    if max(M, N) <= cfg.Nmax:
        return get_table(cfg)
    # diagonals are seeded up to the layer count, so C(N,N) needs only layer N
    return get_table(cfg, cfg.Nmax, N if M == N else M + N)


def lookup(t: CorrTable, M: int, N: int, kind: str) -> EllValue:
    if kind == "C":
        return t.C(M, N)
    if kind == "C_d":
        return t.C_d(M, N)
    if kind == "C_low":
        return engine.low_temp(M, N, t)
    raise ValueError(f"unknown kind {kind!r}")


def render(a: EllValue, fmt: str) -> str:
    if fmt == "latex":
        return latex_document(to_latex(a))
    if fmt == "json":
        return json.dumps({"schema_version": SCHEMA_VERSION, "value": value_to_json(a)}, indent=1)
    return to_text(a)


# -- correlation / eval / oracle ------------------------------------------------------------


def cmd_correlation(cfg: RunConfig, M: int, N: int, kind: str) -> str:
    t = table_for(cfg, M, N)
    return render(lookup(t, M, N, kind), cfg.output_format)


def oracle_value(M: int, N: int, kind: str, sh, sv, digits: int):
    """Toeplitz value for rows and diagonals, or None when there is no oracle."""
    if kind == "C_d":
        # C_d(M,N) at (s_h, s_v) is the low-side C(M,N) at (1/s_v, 1/s_h)
        sh, sv = 1 / mp.mpf(sv), 1 / mp.mpf(sh)
    if M == N:
        return oracles.toeplitz_diag(N, sh, sv, digits)
    if M == 0:
        return oracles.toeplitz_row(N, sh, sv, digits)
    if N == 0:
        return oracles.toeplitz_row(M, sv, sh, digits)
    return None


def cmd_eval(cfg: RunConfig, M: int, N: int, kind: str, sh, sv) -> dict:
    """sh, sv may be decimal strings; they are parsed at the working precision."""
    digits = cfg.precision.working_digits
    with mp.workdps(digits):
        p = ParamPoint(mp.mpf(sh), mp.mpf(sv))
        want = "low" if kind == "C_low" else "high"
        if p.regime != want:
            raise ValueError(f"{kind} needs the {want}-temperature side but k = s_h s_v = {mp.nstr(p.k, 12)}")
        value = numerics.eval_value(lookup(table_for(cfg, M, N), M, N, kind), p)
        out = {"M": M, "N": N, "kind": kind, "s_h": str(sh), "s_v": str(sv), "k": mp.nstr(p.k, 20), "value": mp.nstr(value, digits)}
        ref = oracle_value(M, N, kind, p.s_h, p.s_v, digits)
        if ref is not None:
            out["oracle"] = mp.nstr(ref, digits)
            out["abs_diff"] = mp.nstr(abs(value - ref), 5)
    return out


def cmd_oracle(kind: str, N: int, sh, sv, digits: int = 50, width: int = 10) -> dict:
    if kind == "toeplitz_row":
        return {"kind": kind, "N": N, "value": mp.nstr(oracles.toeplitz_row(N, sh, sv, digits), digits)}
    if kind == "toeplitz_diag":
        return {"kind": kind, "N": N, "value": mp.nstr(oracles.toeplitz_diag(N, sh, sv, digits), digits)}
    if kind == "transfer_matrix":
        v = oracles.transfer_matrix_row(N, sh, sv, width)
        return {
            "kind": kind,
            "N": N,
            "width": width,
            "value": repr(v),
            "caveat": f"finite cylinder of circumference {width}, double precision; not the infinite-lattice value",
        }
    raise ValueError(f"unknown oracle {kind!r}")


# -- verify -----------------------------------------------------------------------------------


def _check(name: str, ok: bool, **detail) -> dict:
    return {"name": name, "ok": bool(ok), **detail}


def _fan_out(fn, items) -> list:
    """Exact symbolic checks only; mpmath precision is process-global, so numeric checks stay serial."""
    with ThreadPoolExecutor() as pool:
        return list(pool.map(fn, items))


def suite_recursions(cfg: RunConfig) -> list[dict]:
    t = get_table(cfg)
    pts = {pt for pt in t.entries if max(pt) <= cfg.Nmax}
    insts = engine.relation_instances(pts)

    def one(inst):
        zero = engine.evaluate_relation(*inst, t.get).is_zero()
        return _check(f"{inst[0]}({inst[1]},{inst[2]})", zero, residual="0" if zero else "nonzero")

    checks = _fan_out(one, insts)
    for name, zero in engine.boundary_relations(t).items():
        checks.append(_check(name, zero, residual="0" if zero else "nonzero"))
    return checks


def suite_duality(cfg: RunConfig) -> list[dict]:
    t = get_table(cfg)
    pts = sorted(pt for pt in t.entries if max(pt) <= cfg.Nmax)

    def one(pt):
        M, N = pt
        d = duality_map(t.C(M, N))
        return _check(f"duality({M},{N})", d == t.C_d(M, N) and duality_map(d) == t.C(M, N))

    return _fan_out(one, pts)


def four_over_three() -> bool:
    """At x = 0 the coefficients are exactly A = 4/3, B = -1/3 and R = 0, so A K + B K = K."""
    A, B, R = numerics.pi_identity_coefficients()
    a0 = A.compose(A.const(0), A.sv())
    b0 = B.compose(B.const(0), B.sv())
    r0 = R.compose(R.const(0), R.sv())
    return a0 == A.const(4) / 3 and b0 == -B.const(1) / 3 and r0.is_zero() and (a0 + b0).is_one()


def suite_identities(cfg: RunConfig, samples: int) -> list[dict]:
    seed = cfg.rng_seed
    digits = cfg.precision.working_digits
    out = []
    rep = numerics.verify_pi_identity(samples, seed, digits)
    out.append(_check("pi_identity", rep["max_residual"] < 1e-25, max_residual=rep["max_residual"], samples=rep["samples"], skipped=rep["skipped"]))
    rep = numerics.verify_thirdident(samples, seed + 1, digits)
    out.append(_check("third_identity", rep["max_residual"] < 1e-25, max_residual=rep["max_residual"], samples=rep["samples"]))
    out.append(_check("x0_evaluation", four_over_three()))
    rep = numerics.verify_c01_forms(10, seed + 2, digits)
    out.append(_check("c01_forms", rep["max_residual"] < 1e-20, max_residual=rep["max_residual"], samples=rep["samples"]))
    return out


def suite_isotropic(cfg: RunConfig) -> list[dict]:
    t = get_table(cfg)
    out = []
    pairs = sorted(pt for pt in t.entries if pt[0] <= pt[1] <= cfg.Nmax)
    with mp.workdps(cfg.precision.working_digits):
        for M, N in pairs:
            for kind in ("C", "C_d"):
                a = lookup(t, M, N, kind)
                iso = isotropic_reduce(a)
                worst = max(abs(numerics.eval_value(iso, ParamPoint(s, s)) - numerics.eval_value(a, ParamPoint(s, s))) for s in ISO_POINTS)
                out.append(_check(f"iso_{kind}({M},{N})", worst < 1e-30, max_residual=float(worst)))
        ratio = numerics.small_k_ratio(t.C(0, 1), digits=cfg.precision.working_digits)
    for M, N in pairs:
        if (N - M) % 2:
            out.append(_check(f"simple_identity({M},{N})", engine.simple_identity(t, M, N)))
    out.append(_check("small_k_law", abs(ratio - 1) < 1e-3, ratio=mp.nstr(ratio, 12)))
    return out


def suite_lambda(cfg: RunConfig) -> list[dict]:
    t = get_table(cfg)
    out = []
    for M, N in LAMBDA_PAIRS:
        if N > cfg.Nmax:
            continue
        r = series.lambda_limit_check(M, N, t)
        out.append(_check(f"lambda({M},{N})", r["ok"], negative_terms=r["negative_terms"], limit_ok=r["limit_ok"]))
    return out


def suite_ode(cfg: RunConfig) -> list[dict]:
    t = get_table(cfg)
    out = []
    for M, N in ODE_PAIRS:
        if N > cfg.Nmax:
            continue
        a = t.C(M, N)
        d = ode.expected_order(M, N)
        t0 = time.perf_counter()
        try:
            op = ode.annihilator(a, M, N)
            ok = op.order == d and op.apply(a).is_zero()
            out.append(_check(f"annihilator({M},{N})", ok, order=op.order, expected=d, seconds=round(time.perf_counter() - t0, 2)))
        except (ode.StageFailure, ode.RankDefect, ArithmeticError) as exc:
            out.append(_check(f"annihilator({M},{N})", False, error=str(exc)))
        rank = ode.minimality_rank(a, d)
        out.append(_check(f"minimality({M},{N})", rank == d, rank=rank, expected=d))
        t0 = time.perf_counter()
        try:
            ch = ode.staged_factorization(a)
            want = list(range(M + 1, N + 2))
            ok = sorted(ch.orders()) == want and ch.apply(a).is_zero()
            out.append(_check(f"staged({M},{N})", ok, orders=ch.orders(), expected=want, seconds=round(time.perf_counter() - t0, 2)))
        except (ode.StageFailure, ArithmeticError) as exc:
            out.append(_check(f"staged({M},{N})", False, error=str(exc)))
    return out


def suite_appendix(cfg: RunConfig) -> list[dict]:
    t = get_table(cfg)
    rep = ode.verify_appendix_c1(engine.low_temp(0, 1, t), digits=cfg.precision.working_digits)
    return [_check("appendix_c1", rep["max_relative"] < 1e-18, max_relative=float(rep["max_relative"]))]


def cmd_verify(cfg: RunConfig, suite: str, samples: int = 100) -> dict:
    names = SUITES if suite == "all" else (suite,)
    runners = {
        "recursions": lambda: suite_recursions(cfg),
        "duality": lambda: suite_duality(cfg),
        "identities": lambda: suite_identities(cfg, samples),
        "isotropic": lambda: suite_isotropic(cfg),
        "lambda": lambda: suite_lambda(cfg),
        "ode": lambda: suite_ode(cfg),
        "appendixC1": lambda: suite_appendix(cfg),
    }
    report = {"schema_version": SCHEMA_VERSION, "Nmax": cfg.Nmax, "seed": cfg.rng_seed, "suites": {}}
    for name in names:
        if name not in runners:
            raise ValueError(f"unknown suite {name!r}")
        t0 = time.perf_counter()
        checks = runners[name]()
        report["suites"][name] = {
            "ok": all(c["ok"] for c in checks),
            "seconds": round(time.perf_counter() - t0, 2),
            "checks": checks,
        }
    report["ok"] = all(s["ok"] for s in report["suites"].values())
    return report


# -- argument parsing ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="isingcorr", description=__doc__.splitlines()[0])
    ap.add_argument("--cache", help=f"table cache file (default ${CACHE_ENV} or ~/.cache/isingcorr/table.json)")
    ap.add_argument("--no-cache", action="store_true", help="do not read or write the table cache")
    ap.add_argument("--Nmax", type=int, default=4, help="table box size (default 4)")
    ap.add_argument("--digits", type=int, default=50, help="working precision in decimal digits")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("correlation", help="print an exact correlation")
    p.add_argument("M", type=int)
    p.add_argument("N", type=int)
    p.add_argument("--kind", choices=KINDS, default="C")
    p.add_argument("--format", choices=("text", "latex", "json"), default="text")

    p = sub.add_parser("eval", help="evaluate a correlation numerically")
    p.add_argument("M", type=int)
    p.add_argument("N", type=int)
    p.add_argument("--kind", choices=KINDS, default="C")
    p.add_argument("--sh", required=True)
    p.add_argument("--sv", required=True)

    p = sub.add_parser("verify", help="run verification suites and print a JSON report")
    p.add_argument("suite", choices=SUITES + ("all",))
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", help="also write the JSON report to this file")

    p = sub.add_parser("oracle", help="independent numeric correlation")
    p.add_argument("kind", choices=("toeplitz_row", "toeplitz_diag", "transfer_matrix"))
    p.add_argument("N", type=int)
    p.add_argument("--sh", required=True)
    p.add_argument("--sv", required=True)
    p.add_argument("--width", type=int, default=10, help="cylinder circumference for transfer_matrix")
    return ap


def config_from_args(args) -> RunConfig:
    cache = None if args.no_cache else (args.cache or default_cache_path())
    prec = PrecisionConfig(args.digits, 10.0 ** (-(args.digits // 2)))
    cfg = RunConfig(Nmax=args.Nmax, precision=prec, cache_path=cache)
    cfg.output_format = getattr(args, "format", "text")
    cfg.rng_seed = getattr(args, "seed", 0)
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command == "correlation":
            if min(args.M, args.N) < 0:
                raise ValueError("M and N must be non-negative")
            print(cmd_correlation(cfg, args.M, args.N, args.kind))
            return 0
        if args.command == "eval":
            print(json.dumps(cmd_eval(cfg, args.M, args.N, args.kind, args.sh, args.sv), indent=1))
            return 0
        if args.command == "oracle":
            with mp.workdps(cfg.precision.working_digits):
                out = cmd_oracle(args.kind, args.N, mp.mpf(args.sh), mp.mpf(args.sv), cfg.precision.working_digits, args.width)
            if "caveat" in out:
                print(f"warning: {out['caveat']}", file=sys.stderr)
            print(json.dumps(out, indent=1))
            return 0
        if args.command == "verify":
            report = cmd_verify(cfg, args.suite, args.samples)
            text = json.dumps(report, indent=1, default=str)
            if args.report:
                Path(args.report).write_text(text + "\n")
            print(text)
            return 0 if report["ok"] else 1
    except CacheError as exc:
        print(f"error: {exc} (remove the file or point {CACHE_ENV} elsewhere)", file=sys.stderr)
        return 3
    except oracles.QuadratureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
