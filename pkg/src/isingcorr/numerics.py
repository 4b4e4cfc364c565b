"""Arbitrary-precision numerics: Carlson forms, normalized complete integrals,
evaluation of ring values, and sampled identity checks."""
from __future__ import annotations

import random
import statistics
from dataclasses import dataclass, field

import mpmath as mp

from .coeffield import FieldElem, RatFunc
from .ellring import PI, EllValue


@dataclass
class PrecisionConfig:
    working_digits: int = 50
    target_tolerance: float = 1e-30

    def __post_init__(self):
        need = 2 * (-mp.log10(self.target_tolerance))
        if self.working_digits < need - 1e-9:
            raise ValueError(f"working_digits={self.working_digits} too small for tolerance {self.target_tolerance}")


@dataclass
class ParamPoint:
    s_h: mp.mpf
    s_v: mp.mpf
    k: mp.mpf = field(init=False)
    k_low: mp.mpf = field(init=False)
    nu: mp.mpf = field(init=False)
    z_h: mp.mpf = field(init=False)
    z_v: mp.mpf = field(init=False)
    alpha1: mp.mpf = field(init=False)
    alpha2: mp.mpf = field(init=False)
    regime: str = field(init=False)

    def __post_init__(self):
        self.s_h = mp.mpf(self.s_h)
        self.s_v = mp.mpf(self.s_v)
        if self.s_h <= 0 or self.s_v <= 0:
            raise ValueError("s_h and s_v must be positive")
        self.k = self.s_h * self.s_v
        self.k_low = 1 / self.k
        self.nu = self.s_h / self.s_v
        self.z_h = tanh_half(self.s_h)
        self.z_v = tanh_half(self.s_v)
        self.alpha1 = self.z_h * (1 - self.z_v) / (1 + self.z_v)
        self.alpha2 = (1 - self.z_v) / ((1 + self.z_v) * self.z_h)
        if self.k == 1:
            raise ValueError("k = 1 is the critical point; no regime")
        self.regime = "high" if self.k < 1 else "low"

    @staticmethod
    def from_k_nu(k, nu) -> "ParamPoint":
        k, nu = mp.mpf(k), mp.mpf(nu)
        return ParamPoint(mp.sqrt(nu * k), mp.sqrt(k / nu))


def tanh_half(s):
    """tanh(beta E) from s = sinh(2 beta E)."""
    return (mp.sqrt(1 + s * s) - 1) / s


# -- Carlson symmetric forms (mpmath implementations) ------------------------


def carlson(kind: str, *args):
    kind = kind.upper()
    if kind == "RF":
        x, y, z = args
        if min(x, y, z) < 0 or sum(1 for a in (x, y, z) if a == 0) > 1:
            raise ValueError("RF needs nonnegative arguments with at most one zero")
        return mp.elliprf(x, y, z)
    if kind == "RD":
        x, y, z = args
        if min(x, y) < 0 or z <= 0 or (x == 0 and y == 0):
            raise ValueError("RD domain violation")
        return mp.elliprd(x, y, z)
    if kind == "RJ":
        x, y, z, p = args
        if min(x, y, z) < 0 or sum(1 for a in (x, y, z) if a == 0) > 1:
            raise ValueError("RJ domain violation")
        if p == 0:
            raise ValueError("RJ with p = 0")
        if p > 0:
            return mp.elliprj(x, y, z, p)
        return _rj_negative_p(x, y, z, p)
    raise ValueError(f"unknown Carlson kind {kind!r}")


def _rj_negative_p(x, y, z, p):
    """Cauchy principal value for p < 0 via the standard reduction (DLMF 19.20.14)."""
    x, y, z = sorted((x, y, z))
    q = -p
    pp = (z * (x + y + q) - x * y) / (z + q)
    rj = mp.elliprj(x, y, z, pp)
    rf = mp.elliprf(x, y, z)
    rc = mp.elliprc(x * y / z + pp * q / z, pp * q / z)
    return ((pp - z) * rj - 3 * rf + 3 * mp.sqrt(x * y * z / (x * y + pp * q)) * rc) / (q + z)


def agm_K(k):
    """K(k) = pi / (2 agm(1, k'))."""
    return mp.pi / (2 * mp.agm(1, mp.sqrt(1 - k * k)))


def ell_tilde(kind: str, k, n=None):
    """Normalized integrals (2/pi) * {K, E, Pi}(n, k); Pi uses 1 - n sin^2."""
    k = mp.mpf(k)
    if not (0 <= k < 1):
        raise ValueError(f"modulus k={k} outside [0, 1)")
    kc2 = 1 - k * k
    rf = carlson("RF", mp.mpf(0), kc2, mp.mpf(1))
    if kind == "K":
        val = rf
    elif kind == "E":
        val = rf - k * k / 3 * carlson("RD", mp.mpf(0), kc2, mp.mpf(1))
    elif kind == "Pi":
        n = mp.mpf(n)
        if n >= 1:
            raise ValueError("Pi needs n < 1")
        val = rf if n == 0 else rf + n / 3 * carlson("RJ", mp.mpf(0), kc2, mp.mpf(1), 1 - n)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return 2 * val / mp.pi


def _transcendentals(p: ParamPoint, regime: str):
    if regime == "high":
        if p.k >= 1:
            raise ValueError(f"high-temperature value evaluated at k={mp.nstr(p.k, 8)} >= 1")
        k = p.k
        return (ell_tilde("E", k), ell_tilde("K", k), ell_tilde("Pi", k, -p.s_h ** 2), ell_tilde("Pi", k, -p.s_v ** 2))
    if regime == "low":
        if p.k <= 1:
            raise ValueError(f"low-temperature value evaluated at k={mp.nstr(p.k, 8)} <= 1")
        k = p.k_low
        return (ell_tilde("E", k), ell_tilde("K", k), ell_tilde("Pi", k, -1 / p.s_v ** 2), ell_tilde("Pi", k, -1 / p.s_h ** 2))
    if regime == "iso":
        if p.s_h != p.s_v:
            raise ValueError("isotropic values need s_h = s_v")
        k = p.s_h ** 2
        if k >= 1:
            raise ValueError(f"isotropic high-temperature value at k={mp.nstr(k, 8)} >= 1")
        pi = ell_tilde("Pi", k, -k)
        return (ell_tilde("E", k), ell_tilde("K", k), pi, pi)
    raise ValueError(f"unknown regime {regime!r}")


def eval_fe(c: FieldElem, p: ParamPoint):
    return c.evaluate(p.s_h, p.s_v, mp.sqrt)


def eval_rat(r: RatFunc, p: ParamPoint):
    return r.evaluate(p.s_h, p.s_v)


def eval_value(a: EllValue, p: ParamPoint, _cache: dict | None = None, values=None):
    """Evaluate at p.  ``values`` overrides (E, K, Pi, Pi_p), e.g. with another solution pair."""
    key = (a.regime, p.s_h, p.s_v)
    if values is not None:
        tr = values
    elif _cache is not None and key in _cache:
        tr = _cache[key]
    else:
        tr = _transcendentals(p, a.regime)
        if _cache is not None:
            _cache[key] = tr
    E, K, Pi, Pip = tr
    P = Pi if a.basis == PI else Pip
    total = mp.mpf(0)
    for (i, j, l), c in a.terms.items():
        total += eval_fe(c, p) * E ** i * K ** j * P ** l
    return total


# -- closed forms of the nearest-neighbour row correlation --------------------


def c01_onsager(p: ParamPoint):
    """Row correlation C(0,1) in the (nu, k) form of Onsager."""
    if p.regime == "high":
        k, nu = p.k, p.nu
        return mp.sqrt(1 + nu / k) / nu * ((1 + nu * k) * ell_tilde("Pi", k, -nu * k) - ell_tilde("K", k))
    kl, nu = p.k_low, p.nu
    return mp.sqrt(1 + nu * kl) * ((1 + kl / nu) * ell_tilde("Pi", kl, -nu * kl) - kl / nu * ell_tilde("K", kl))


def c01_alpha(p: ParamPoint):
    """Row correlation C(0,1) in the (alpha_1, alpha_2) form."""
    a1, a2 = p.alpha1, p.alpha2
    if p.regime == "high":
        k = p.k
        return (a1 - 1 / a1) / (1 - a1 / a2) * (ell_tilde("K", k) - (1 + a1 / a2) * ell_tilde("Pi", k, -a1 * k))
    kl = p.k_low
    return (a1 - 1 / a1) / (1 / a2 - a1) * (ell_tilde("K", kl) - (1 + a1 / a2) * ell_tilde("Pi", kl, -a1 * kl))


# -- identity checks ----------------------------------------------------------


def _report(residuals, points, skipped=0) -> dict:
    vals = [float(abs(r)) for r in residuals]
    return {
        "samples": len(vals),
        "skipped": skipped,
        "max_residual": max(vals) if vals else 0.0,
        "median_residual": statistics.median(vals) if vals else 0.0,
        "points": [[mp.nstr(x, 20) for x in pt] for pt in points],
        "residuals": [mp.nstr(r, 5) for r in residuals],
    }


def pi_identity_residual(z, kl):
    """Left side of the quadratic transformation identity for Pi(z, k_<)."""
    z, kl = mp.mpf(z), mp.mpf(kl)
    k2 = kl * kl
    R = 4 * k2 * z * (z - 1) * (z - k2) / (z * z - k2) ** 2
    return (
        4 * (z - 1) * (z * z - k2) * (z - k2) * ell_tilde("Pi", kl, z)
        + (z * z + k2 - 2 * z) * (z * z + k2 - 2 * k2 * z) * ell_tilde("Pi", kl, R)
        - (z * z - k2) * (z * z - 2 * z - 2 * k2 * z + 3 * k2) * ell_tilde("K", kl)
    )


def pi_identity_coefficients():
    """A(x,y), B(x,y), R(x,y) with signs fixed so that A Pi(x,y) + B Pi(R,y) = K(y).

    Returned as RatFuncs in two variables, x stored in the s_h slot and y in s_v.
    """
    x, y = RatFunc.sh(), RatFunc.sv()
    y2 = y * y
    rho = x * x - 2 * x - 2 * y2 * x + 3 * y2
    A = 4 * (x - 1) * (x - y2) / rho
    B = (x * x + y2 - 2 * x) * (x * x + y2 - 2 * y2 * x) / ((x * x - y2) * rho)
    R = 4 * y2 * x * (x - 1) * (x - y2) / ((x * x - y2) ** 2)
    return A, B, R


def verify_pi_identity(samples: int = 100, seed: int = 0, digits: int = 50) -> dict:
    rng = random.Random(seed)
    res, pts, skipped = [], [], 0
    with mp.workdps(digits):
        while len(res) < samples:
            kl = mp.mpf(rng.uniform(0.01, 0.5))
            z = mp.mpf(rng.uniform(-0.9, 0.9)) * kl * kl
            k2 = kl * kl
            R = 4 * k2 * z * (z - 1) * (z - k2) / (z * z - k2) ** 2
            if z == 0 or R >= 1:
                skipped += 1
                continue
            res.append(pi_identity_residual(z, kl))
            pts.append((z, kl))
    return _report(res, pts, skipped)


def verify_thirdident(samples: int = 100, seed: int = 1, digits: int = 50) -> dict:
    rng = random.Random(seed)
    res, pts = [], []
    with mp.workdps(digits):
        for _ in range(samples):
            k = mp.mpf(rng.uniform(0.01, 0.99))
            nu = mp.mpf(rng.uniform(0.1, 5.0))
            lhs = ell_tilde("Pi", k, -nu * k) + ell_tilde("Pi", k, -k / nu)
            rhs = ell_tilde("K", k) + 1 / mp.sqrt((1 + nu * k) * (1 + k / nu))
            res.append(lhs - rhs)
            pts.append((k, nu))
    return _report(res, pts)


def verify_c01_forms(points_per_regime: int = 10, seed: int = 2, digits: int = 50) -> dict:
    rng = random.Random(seed)
    res, pts = [], []
    with mp.workdps(digits):
        for regime in ("high", "low"):
            n = 0
            while n < points_per_regime:
                sh = mp.mpf(rng.uniform(0.1, 3.0))
                sv = mp.mpf(rng.uniform(0.1, 3.0))
                k = sh * sv
                if abs(k - 1) < 0.05 or (k < 1) != (regime == "high"):
                    continue
                p = ParamPoint(sh, sv)
                res.append(c01_onsager(p) - c01_alpha(p))
                pts.append((sh, sv))
                n += 1
    return _report(res, pts)


def small_k_ratio(value: EllValue, k=mp.mpf("1e-6"), nu=1, digits: int = 50):
    """eval(value) / (k^{1/2}/2) at the given modulus and anisotropy."""
    with mp.workdps(digits):
        p = ParamPoint.from_k_nu(k, nu)
        return eval_value(value, p) / (mp.sqrt(p.k) / 2)
