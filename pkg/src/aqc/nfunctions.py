"""N-function calculus: power profiles, V_p, shifts, doubling constants.

Shifted functions psi_a(t) = int_0^t psi'(a+s) s/(a+s) ds use closed forms
for the power family and adaptive quadrature otherwise; Fenchel conjugates
are computed numerically by golden-section maximisation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.integrate

from .errors import NegativeShift
from .util import golden_section_max, make_rng


@dataclass(frozen=True)
class NFunction:
    """Convex Orlicz profile with value/first/second derivative evaluators."""

    psi: Callable
    dpsi: Callable
    d2psi: Callable
    label: str = ""
    delta2_known: float | None = None
    nabla2_known: float | None = None
    growth_p: float | None = None

    def __call__(self, t):
        return self.psi(np.asarray(t, dtype=float))

    def d(self, t):
        return self.dpsi(np.asarray(t, dtype=float))

    def d2(self, t):
        return self.d2psi(np.asarray(t, dtype=float))

    def validate(self, t_values=None) -> bool:
        """Sampled sanity check: psi(0)=0, psi'(0)=0, psi' positive increasing."""
        t = np.logspace(-6, 6, 200) if t_values is None else np.asarray(t_values)
        d = self.d(t)
        ok = abs(float(self(0.0))) < 1e-14 and abs(float(self.d(0.0))) < 1e-12
        return bool(ok and np.all(d > 0.0) and np.all(np.diff(d) >= -1e-12 * np.abs(d[1:])))

    def is_shiftable(self, t_values=None) -> bool:
        """psi'(t) and t psi''(t) comparable on a sampled range."""
        t = np.logspace(-4, 4, 100) if t_values is None else np.asarray(t_values)
        q = t * self.d2(t) / self.d(t)
        return bool(np.all(np.isfinite(q)) and np.min(q) > 1e-3 and np.max(q) < 1e3)


def make_power(p: float) -> NFunction:
    """psi(t) = t^p."""
    if p <= 1.0:
        raise ValueError("power profiles need p > 1")

    def psi(t):
        return t ** p

    def dpsi(t):
        return p * t ** (p - 1.0)

    def d2psi(t):
        with np.errstate(divide="ignore"):
            return p * (p - 1.0) * t ** (p - 2.0)

    return NFunction(psi, dpsi, d2psi, label=f"power:{p:g}",
                     delta2_known=2.0 ** p, growth_p=p)


def make_vp_profile(p: float) -> NFunction:
    """Radial profile (1 + t^2)^{p/2} - 1 of the reference integrand."""
    if p <= 1.0:
        raise ValueError("need p > 1")

    def psi(t):
        return (1.0 + t * t) ** (p / 2.0) - 1.0

    def dpsi(t):
        return p * t * (1.0 + t * t) ** ((p - 2.0) / 2.0)

    def d2psi(t):
        return p * (1.0 + t * t) ** ((p - 4.0) / 2.0) * (1.0 + (p - 1.0) * t * t)

    return NFunction(psi, dpsi, d2psi, label=f"vp:{p:g}", growth_p=p)


def make_psi_aux(p: float) -> NFunction:
    """Auxiliary profile (1+t)^{p-2} t^2 used for subquadratic comparisons."""
    if not 1.0 < p < 2.0:
        raise ValueError("the auxiliary profile is used for 1 < p < 2")

    def psi(t):
        return (1.0 + t) ** (p - 2.0) * t * t

    def dpsi(t):
        return (1.0 + t) ** (p - 3.0) * t * (p * t + 2.0)

    def d2psi(t):
        return (1.0 + t) ** (p - 4.0) * (p * (p - 1.0) * t * t + 4.0 * (p - 1.0) * t + 2.0)

    return NFunction(psi, dpsi, d2psi, label=f"psi_aux:{p:g}", growth_p=p)


def _power_exponent(psi: NFunction) -> float | None:
    if psi.label.startswith("power:"):
        return float(psi.label.split(":")[1])
    return None


def shift(psi: NFunction, a: float) -> NFunction:
    """Shifted N-function psi_a(t) = int_0^t psi'(a+s) s/(a+s) ds.

    Closed form for the power family; adaptive quadrature (rel. 1e-10)
    otherwise.  Derivatives have closed forms for any base profile.
    """
    if a < 0.0:
        raise NegativeShift(f"shift must be nonnegative, got {a}")
    a = float(a)
    p = _power_exponent(psi)

    if p is not None:
        def value(t):
            t = np.asarray(t, dtype=float)
            return ((a + t) ** p - a ** p) - a * p / (p - 1.0) * ((a + t) ** (p - 1.0) - a ** (p - 1.0))
    else:
        def _one(t):
            if t <= 0.0:
                return 0.0
            val, _ = scipy.integrate.quad(
                lambda s: psi.d(a + s) * s / (a + s), 0.0, t, epsrel=1e-10, limit=200
            )
            return val

        def value(t):
            t = np.asarray(t, dtype=float)
            return np.vectorize(_one)(t)

    def dvalue(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(invalid="ignore"):
            out = psi.d(a + t) * t / (a + t)
        return np.where(t + a > 0.0, out, 0.0)

    def d2value(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = psi.d2(a + t) * t / (a + t) + psi.d(a + t) * a / (a + t) ** 2
        return np.where(t + a > 0.0, out, psi.d2(t))

    return NFunction(value, dvalue, d2value, label=f"shifted:{psi.label}:{a:g}",
                     growth_p=psi.growth_p)


def conjugate_value(psi: NFunction, t: float) -> float:
    """Fenchel conjugate psi*(t) = sup_s (s t - psi(s)), numerically."""
    t = float(t)
    if t <= 0.0:
        return 0.0
    hi = 1.0
    # grow the bracket until the maximiser s* with psi'(s*) = t is interior
    for _ in range(200):
        if psi.d(hi) > t:
            break
        hi *= 2.0
    _, val = golden_section_max(lambda s: s * t - float(psi(s)), 0.0, hi)
    return val


def delta2_nabla2(psi: NFunction, t_range=(1e-3, 1e3), samples: int = 120):
    """Sampled doubling constants of psi and of its numerical conjugate."""
    t = np.logspace(np.log10(t_range[0]), np.log10(t_range[1]), samples)
    delta2 = float(np.max(psi(2.0 * t) / psi(t)))
    star = np.array([conjugate_value(psi, v) for v in t])
    star2 = np.array([conjugate_value(psi, 2.0 * v) for v in t])
    nabla2 = float(np.max(star2 / np.where(star > 0, star, np.inf)))
    return delta2, nabla2


def vp_value(p: float, z) -> np.ndarray:
    """V_p(z) = (1+|z|^2)^{p/2} - 1 on batched vectors (..., d)."""
    z = np.asarray(z, dtype=float)
    zz = np.sum(z * z, axis=-1)
    return (1.0 + zz) ** (p / 2.0) - 1.0

def vp_grad(p: float, z) -> np.ndarray:
    """Gradient p (1+|z|^2)^{(p-2)/2} z."""
    z = np.asarray(z, dtype=float)
    zz = np.sum(z * z, axis=-1, keepdims=True)
    return p * (1.0 + zz) ** ((p - 2.0) / 2.0) * z

def vp_hessian(p: float, z) -> np.ndarray:
    """Hessian of V_p, shape (..., d, d)."""
    z = np.asarray(z, dtype=float)
    zz = np.sum(z * z, axis=-1)[..., None, None]
    d = z.shape[-1]
    eye = np.eye(d)
    outer = z[..., :, None] * z[..., None, :]
    return p * (1.0 + zz) ** ((p - 2.0) / 2.0) * eye \
        + p * (p - 2.0) * (1.0 + zz) ** ((p - 4.0) / 2.0) * outer


def vp_comparison_theta(p: float, sample_count: int = 10000, dim: int = 3,
                        seed: int = 0):
    """Empirical bracket for the second-order Taylor quotient of V_p.

    Quotient R(z, w) = (V_p(z+w) - V_p(z) - <V_p'(z), w>) divided by
    (1 + |z|^2 + |w|^2)^{(p-2)/2} |w|^2, over magnitudes log-uniform in
    [1e-3, 1e3].  Returns (min, max); both are finite and positive.
    """
    rng = make_rng(seed, stream=11)
    zdir = rng.standard_normal((sample_count, dim))
    zdir /= np.linalg.norm(zdir, axis=1, keepdims=True)
    wdir = rng.standard_normal((sample_count, dim))
    wdir /= np.linalg.norm(wdir, axis=1, keepdims=True)
    zmag = 10.0 ** rng.uniform(-3, 3, sample_count)
    wmag = 10.0 ** rng.uniform(-3, 3, sample_count)
    z = zdir * zmag[:, None]
    w = wdir * wmag[:, None]
    num = vp_value(p, z + w) - vp_value(p, z) - np.sum(vp_grad(p, z) * w, axis=-1)
    den = (1.0 + np.sum(z * z, -1) + np.sum(w * w, -1)) ** ((p - 2.0) / 2.0) * np.sum(w * w, -1)
    ratio = num / den
    lo, hi = float(np.min(ratio)), float(np.max(ratio))
    if not (0.0 < lo <= hi < np.inf):
        raise FloatingPointError(f"comparison quotient left its positive bracket: [{lo}, {hi}]")
    return lo, hi


@dataclass(frozen=True)
class F1Report:
    c: float
    per_shift: dict
    uniform_factor: float


def check_F1(psi: NFunction, a_values, t_values) -> F1Report:
    """Two-sided comparison of psi_a(t) with psi''(a+t) t^2 over a grid.

    Returns the worst two-sided ratio and, per shift, the largest ratio, so
    uniformity in the shift can be read off directly.
    """
    per = {}
    worst = 0.0
    for a in a_values:
        sh = shift(psi, a)
        t = np.asarray(t_values, dtype=float)
        lhs = sh(t)
        rhs = psi.d2(a + t) * t * t
        ratios = np.maximum(lhs / rhs, rhs / lhs)
        per[float(a)] = float(np.max(ratios))
        worst = max(worst, per[float(a)])
    vals = list(per.values())
    uniform = max(vals) / min(vals) if min(vals) > 0 else np.inf
    return F1Report(c=worst, per_shift=per, uniform_factor=float(uniform))


def psi_aux_bracket(p: float, a_values, t_values):
    """Empirical constants for the two comparison lines of the auxiliary profile.

    First: Psi''(a+t) against (1 + a^2 + t^2)^{(p-2)/2}; second: Psi'(t)
    against Psi''(t) t.  Returns the two worst two-sided ratios.
    """
    aux = make_psi_aux(p)
    a = np.asarray(a_values, dtype=float)[:, None]
    t = np.asarray(t_values, dtype=float)[None, :]
    lhs = aux.d2(a + t)
    rhs = (1.0 + a * a + t * t) ** ((p - 2.0) / 2.0)
    c1 = float(np.max(np.maximum(lhs / rhs, rhs / lhs)))
    tt = np.asarray(t_values, dtype=float)
    lhs2 = aux.d(tt)
    rhs2 = aux.d2(tt) * tt
    c2 = float(np.max(np.maximum(lhs2 / rhs2, rhs2 / lhs2)))
    return c1, c2


def parse_nfunction(spec: str) -> NFunction:
    """Registry: power:p, vp:p, psi_aux:p, shifted:<base spec>:a."""
    parts = spec.split(":")
    kind = parts[0]
    if kind == "power":
        return make_power(float(parts[1]))
    if kind == "vp":
        return make_vp_profile(float(parts[1]))
    if kind == "psi_aux":
        return make_psi_aux(float(parts[1]))
    if kind == "shifted":
        base = parse_nfunction(":".join(parts[1:-1]))
        return shift(base, float(parts[-1]))
    raise ValueError(f"unknown N-function spec {spec!r}")
