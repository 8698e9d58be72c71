"""Integrands, hypothesis checks, quasiconvexity tests, and diagnostics.

Energies take the form int F(x, u, A u) dx.  Hypothesis checks are sampled
necessary conditions: a positive empirical constant is labelled
"consistent-with" (it cannot certify the property), while a violating
sample is conclusive.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionMismatch, GridTooSmall, NonElliptic
from .fields import (GridField, apply_operator, bump_window, gradient_values,
                     random_band_limited_field, torus_points)
from .nfunctions import vp_grad, vp_hessian, vp_value
from .operators import (DifferentialOperator, GradientFormReduction,
                        check_ellipticity, essential_range,
                        reduce_to_gradient_form)
from .util import make_rng


@dataclass(frozen=True)
class Integrand:
    """Energy density F(x, y, z) with derivative evaluators in z.

    Evaluators are vectorised over leading axes: x has shape (..., n) (or
    None for autonomous F), y has shape (..., N) (or None), z has shape
    (..., zdim).  f returns (...), fz returns (..., zdim), fzz returns
    (..., zdim, zdim).  fy is the y-derivative when the density depends on
    the field values.
    """

    p: float
    zdim: int
    f: Callable
    fz: Callable = None
    fzz: Callable = None
    fy: Callable = None
    autonomous: bool = True
    growth_c: float | None = None
    ell: float | None = None
    modulus: Callable | None = None
    modulus_exponent: float | None = None
    minorant: tuple | None = None   # (Ftilde callable on z, gamma)
    label: str = ""

    def value(self, x, y, z):
        return self.f(x, y, np.asarray(z, dtype=float))

    def grad(self, x, y, z):
        if self.fz is None:
            raise ValueError("integrand has no z-derivative evaluator")
        return self.fz(x, y, np.asarray(z, dtype=float))


def vp_integrand(p: float, zdim: int, ell: float = 1.0) -> Integrand:
    """The reference p-growth integrand V_p(z) on R^zdim."""

    def f(x, y, z):
        return vp_value(p, z)

    def fz(x, y, z):
        return vp_grad(p, z)

    def fzz(x, y, z):
        return vp_hessian(p, z)

    return Integrand(p=p, zdim=zdim, f=f, fz=fz, fzz=fzz, autonomous=True,
                     growth_c=2.0, ell=ell, label=f"vp:{p:g}")


def scaled_vp_integrand(p: float, zdim: int, modulus_exponent: float = 0.3) -> Integrand:
    """Non-autonomous (1 + min(|x|,1)^{sigma p}) V_p(z) with modulus t^sigma.

    The x-factor exponent sigma*p makes the declared modulus valid:
    |F(x,y,z) - F(x',y',z)| <= (1+|z|^p) * (|x-x'|^p)^sigma, and sigma < 1/p
    is required for the modulus hypothesis.
    """
    sigma = float(modulus_exponent)
    if not 0.0 < sigma < 1.0 / p:
        raise ValueError("modulus exponent must lie in (0, 1/p)")
    q = sigma * p

    def factor(x):
        r = np.minimum(np.linalg.norm(np.asarray(x, dtype=float), axis=-1), 1.0)
        return 1.0 + r ** q

    def f(x, y, z):
        return factor(x) * vp_value(p, z)

    def fz(x, y, z):
        return factor(x)[..., None] * vp_grad(p, z)

    def fzz(x, y, z):
        return factor(x)[..., None, None] * vp_hessian(p, z)

    return Integrand(p=p, zdim=zdim, f=f, fz=fz, fzz=fzz, autonomous=False,
                     growth_c=2.0, ell=1.0,
                     modulus=lambda t: np.asarray(t, dtype=float) ** sigma,
                     modulus_exponent=sigma,
                     minorant=(lambda z: vp_value(p, z), 1.0),
                     label=f"scaled_vp:{p:g}:{sigma:g}")


def det_vp_integrand(mu: float, p: float = 2.0) -> Integrand:
    """det(z) + mu V_p(z) on 2x2 gradient space; det is a null Lagrangian."""

    def det(z):
        z = np.asarray(z, dtype=float)
        return z[..., 0] * z[..., 3] - z[..., 1] * z[..., 2]

    def f(x, y, z):
        return det(z) + mu * vp_value(p, z)

    def fz(x, y, z):
        z = np.asarray(z, dtype=float)
        g = np.empty_like(z)
        g[..., 0] = z[..., 3]
        g[..., 3] = z[..., 0]
        g[..., 1] = -z[..., 2]
        g[..., 2] = -z[..., 1]
        return g + mu * vp_grad(p, z)

    def fzz(x, y, z):
        z = np.asarray(z, dtype=float)
        H = np.zeros(z.shape + (4,))
        H[..., 0, 3] = H[..., 3, 0] = 1.0
        H[..., 1, 2] = H[..., 2, 1] = -1.0
        return H + mu * vp_hessian(p, z)

    return Integrand(p=p, zdim=4, f=f, fz=fz, fzz=fzz, autonomous=True,
                     growth_c=2.0 + mu, ell=mu, label=f"det+{mu:g}*vp:{p:g}")


def concave_toy_integrand(zdim: int, p: float = 2.0) -> Integrand:
    """-|z|^2: violates convexity along every direction (diagnostic)."""

    def f(x, y, z):
        z = np.asarray(z, dtype=float)
        return -np.sum(z * z, axis=-1)

    def fz(x, y, z):
        return -2.0 * np.asarray(z, dtype=float)

    def fzz(x, y, z):
        z = np.asarray(z, dtype=float)
        return np.broadcast_to(-2.0 * np.eye(zdim), z.shape + (zdim,)).copy()

    return Integrand(p=p, zdim=zdim, f=f, fz=fz, fzz=fzz, autonomous=True,
                     growth_c=1.0, label="concave_toy")


# ---------------------------------------------------------------------------
# hypothesis checks

@dataclass(frozen=True)
class HypothesisReport:
    entries: dict
    passed: bool

    def __getitem__(self, key):
        return self.entries[key]


def _sample_z(op: DifferentialOperator, rng, count: int, scale: float = 1.0) -> np.ndarray:
    """Random points of the essential range, embedded in the target space."""
    dec = essential_range(op)
    coords = rng.standard_normal((count, max(dec.dim, 1)))
    if dec.dim == 0:
        return np.zeros((count, op.l))
    return scale * coords[:, :dec.dim] @ dec.basis.T


def _pure_tensor_batch(op: DifferentialOperator, rng, count: int) -> np.ndarray:
    vs = rng.standard_normal((count, op.N))
    vs /= np.linalg.norm(vs, axis=1, keepdims=True)
    xis = rng.standard_normal((count, op.n))
    xis /= np.linalg.norm(xis, axis=1, keepdims=True)
    syms = op.symbols(xis)
    return np.einsum("klv,kv->kl", syms, vs)


def check_hypotheses(F: Integrand, op: DifferentialOperator,
                     sample_budget: int = 2000, seed: int = 0) -> HypothesisReport:
    """Sampled necessary checks for the standing integrand hypotheses.

    Verifies p-growth, derivative consistency and Hessian symmetry,
    convexity plus the Lipschitz-type bound along pure-tensor segments, and
    (non-autonomous case) the declared continuity modulus in (x, y).
    """
    rng = make_rng(seed, stream=21)
    entries = {}
    count = max(50, sample_budget // 4)
    x = rng.uniform(0.0, 1.0, (count, op.n)) if not F.autonomous else None
    y = rng.standard_normal((count, op.N)) if not F.autonomous else None
    z = _sample_z(op, rng, count, scale=1.0)
    z = np.vstack([z, 10.0 * z, 0.1 * z])
    if x is not None:
        x = np.vstack([x] * 3)
        y = np.vstack([y] * 3)

    # growth |F| <= c (1 + |z|^p)
    vals = F.value(x, y, z)
    bound = 1.0 + np.sum(z * z, axis=-1) ** (F.p / 2.0)
    c_emp = float(np.max(np.abs(vals) / bound))
    growth_ok = np.isfinite(c_emp) and (F.growth_c is None or c_emp <= F.growth_c * (1 + 1e-9))
    entries["p_growth"] = {"passed": bool(growth_ok), "constant": c_emp,
                           "worst": float(np.max(np.abs(vals)))}

    # derivative consistency and Hessian symmetry
    if F.fz is not None:
        sub = slice(0, min(64, z.shape[0]))
        zs = z[sub]
        xs = x[sub] if x is not None else None
        ys = y[sub] if y is not None else None
        g = F.fz(xs, ys, zs)
        h = 1e-6
        fd = np.empty_like(g)
        for j in range(F.zdim):
            e = np.zeros(F.zdim)
            e[j] = h
            fd[:, j] = (F.value(xs, ys, zs + e) - F.value(xs, ys, zs - e)) / (2 * h)
        scale = 1.0 + np.max(np.abs(g))
        grad_err = float(np.max(np.abs(fd - g)) / scale)
        sym_err = 0.0
        if F.fzz is not None:
            H = F.fzz(xs, ys, zs)
            sym_err = float(np.max(np.abs(H - np.swapaxes(H, -1, -2))))
        entries["smoothness"] = {"passed": bool(grad_err < 1e-5 and sym_err < 1e-10),
                                 "grad_error": grad_err, "hessian_asymmetry": sym_err}

    # convexity along pure-tensor segments (necessary for quasiconvexity)
    tensors = _pure_tensor_batch(op, rng, count)
    base = _sample_z(op, rng, count, scale=1.0)
    ts = rng.uniform(0.2, 2.0, count)
    xa = x[:count] if x is not None else None
    ya = y[:count] if y is not None else None
    f0 = F.value(xa, ya, base)
    f1 = F.value(xa, ya, base + ts[:, None] * tensors)
    fm = F.value(xa, ya, base + 0.5 * ts[:, None] * tensors)
    gaps = 0.5 * (f0 + f1) - fm
    worst_gap = float(np.min(gaps))
    conv_ok = worst_gap >= -1e-9 * np.maximum(1.0, np.abs(f0) + np.abs(f1)).max()
    witness = None
    if not conv_ok:
        k = int(np.argmin(gaps))
        witness = {"z": base[k].tolist(), "direction": tensors[k].tolist(), "t": float(ts[k])}
    entries["pure_tensor_convexity"] = {"passed": bool(conv_ok), "worst_gap": worst_gap,
                                        "witness": witness}

    # Lipschitz-type bound |F(w)-F(z)| <= c (1+|w|^{p-1}+|z|^{p-1}) |w-z|
    w = base + ts[:, None] * tensors
    num = np.abs(F.value(xa, ya, w) - F.value(xa, ya, base))
    den = (1.0 + np.sum(w * w, -1) ** ((F.p - 1) / 2.0)
           + np.sum(base * base, -1) ** ((F.p - 1) / 2.0)) * np.linalg.norm(w - base, axis=-1)
    c_lip = float(np.max(num / np.where(den > 0, den, np.inf)))
    entries["pure_tensor_lipschitz"] = {"passed": bool(np.isfinite(c_lip)), "constant": c_lip}

    # continuity modulus in (x, y) for non-autonomous densities
    if not F.autonomous and F.modulus is not None:
        xp = rng.uniform(0.0, 1.0, (count, op.n))
        yp = y[:count] + rng.standard_normal((count, op.N))
        dist = np.linalg.norm(x[:count] - xp, axis=-1) ** F.p \
            + np.linalg.norm(y[:count] - yp, axis=-1) ** F.p
        lhs = np.abs(F.value(x[:count], y[:count], base) - F.value(xp, yp, base))
        rhs = (1.0 + np.sum(base * base, -1) ** (F.p / 2.0)) * F.modulus(dist)
        c_mod = float(np.max(lhs / np.where(rhs > 0, rhs, np.inf)))
        mod_ok = np.isfinite(c_mod) and (F.modulus_exponent or 0.0) < 1.0 / F.p
        entries["xy_modulus"] = {"passed": bool(mod_ok), "constant": c_mod}

    # declared minorant: pointwise domination (coercivity handled separately)
    if F.minorant is not None:
        ftilde, gamma = F.minorant
        lhs = ftilde(z)
        rhs = F.value(x, y, z)
        dom = float(np.max(lhs - rhs))
        entries["uniform_minorant"] = {"passed": bool(dom <= 1e-10), "max_excess": dom,
                                       "gamma": gamma}

    passed = all(e["passed"] for e in entries.values())
    return HypothesisReport(entries=entries, passed=passed)


# ---------------------------------------------------------------------------
# strong quasiconvexity

@dataclass(frozen=True)
class QuasiconvexityReport:
    nu: float
    weak_mu: float | None
    verdict: str
    violation: dict | None
    samples: int


def _test_fields(op: DifferentialOperator, shape, count: int, rng,
                 kmax: int = 3, amplitudes=(0.2, 1.0, 4.0)):
    """Bump-localised compactly supported test fields on the unit cell."""
    window = bump_window(shape)
    fields = []
    for k in range(count):
        base = random_band_limited_field(op.N, shape, kmax, rng)
        amp = amplitudes[k % len(amplitudes)]
        vals = amp * base.values * window[None, ...]
        fields.append(GridField(values=vals, kind="torus"))
    return fields


def test_strong_quasiconvexity(F: Integrand, op: DifferentialOperator,
                               z_samples: int = 6, phi_samples: int = 8,
                               shape=None, seed: int = 0) -> QuasiconvexityReport:
    """Sampled coercive quasiconvexity ratio over test fields.

    For every sampled z in the essential range and compactly supported phi,
    compares the energy increment int F(z + A phi) - F(z) with the weighted
    Dirichlet term int (1 + |z|^2 + |A phi|^2)^{(p-2)/2} |A phi|^2.  The
    infimum of the ratios is an empirical strong-quasiconvexity constant; a
    nonpositive sample is a conclusive violation.  For p >= 2 the weaker
    normalisation against int |A phi|^2 + |A phi|^p is also reported.
    """
    rng = make_rng(seed, stream=31)
    if shape is None:
        shape = (64,) * op.n if op.n <= 2 else (16,) * op.n
    fields = _test_fields(op, shape, phi_samples, rng)
    zs = _sample_z(op, rng, z_samples, scale=1.0)
    zs[0] = 0.0
    if z_samples > 1:
        zs[1] *= 10.0
    best = np.inf
    weak_best = np.inf
    violation = None
    xs = None
    for z in zs:
        for idx, phi in enumerate(fields):
            aphi = apply_operator(op, phi.values)            # (l, *shape)
            zpt = np.moveaxis(aphi, 0, -1) + z
            vol = phi.cell_volume
            if F.autonomous:
                inc = float(np.sum(F.value(None, None, zpt) - F.value(None, None, z[None])) * vol)
            else:
                if xs is None:
                    xs = np.moveaxis(torus_points(shape), 0, -1)
                ys = np.moveaxis(phi.values, 0, -1)
                inc = float(np.sum(F.value(xs, ys, zpt) - F.value(xs, ys, z[None])) * vol)
            a2 = np.sum(aphi * aphi, axis=0)
            weight = (1.0 + np.dot(z, z) + a2) ** ((F.p - 2.0) / 2.0)
            dirich = float(np.sum(weight * a2) * vol)
            if dirich <= 0.0:
                continue
            ratio = inc / dirich
            if ratio < best:
                best = ratio
                if ratio <= 0.0 and violation is None:
                    violation = {"z": z.tolist(), "phi_index": idx, "ratio": ratio}
            if F.p >= 2.0:
                weak = inc / float(np.sum(a2 + a2 ** (F.p / 2.0)) * vol)
                weak_best = min(weak_best, weak)
    verdict = "violates" if best <= 0.0 else "consistent-with-strong-quasiconvexity"
    return QuasiconvexityReport(nu=float(best),
                                weak_mu=None if F.p < 2.0 else float(weak_best),
                                verdict=verdict, violation=violation,
                                samples=len(zs) * len(fields))


test_strong_quasiconvexity.__test__ = False  # not a pytest case


# ---------------------------------------------------------------------------
# reduction to full-gradient form

def reduce_integrand(F: Integrand, op: DifferentialOperator,
                     reduction: GradientFormReduction | None = None) -> Integrand:
    """G(x, y, z) = F(x, y, recover(pi(z))) on the full derivative space.

    Because recover(pi(z)) equals the symbol contraction of z, the chain
    collapses to G = F(contract(z)); the energy identity
    int G(grad u) = int F(A u) is then exact on discrete fields.
    """
    red = reduction if reduction is not None else reduce_to_gradient_form(op)
    C = red.contract

    def f(x, y, z):
        return F.f(x, y, np.asarray(z, dtype=float) @ C.T)

    def fz(x, y, z):
        return F.fz(x, y, np.asarray(z, dtype=float) @ C.T) @ C

    fzz = None
    if F.fzz is not None:
        def fzz(x, y, z):
            H = F.fzz(x, y, np.asarray(z, dtype=float) @ C.T)
            return np.einsum("la,...lw,wb->...ab", C, H, C)

    return Integrand(p=F.p, zdim=C.shape[1], f=f, fz=fz, fzz=fzz, fy=F.fy,
                     autonomous=F.autonomous, growth_c=None, ell=F.ell,
                     modulus=F.modulus, modulus_exponent=F.modulus_exponent,
                     label=(F.label or "integrand") + "@gradient_form")


# ---------------------------------------------------------------------------
# shifted Korn chain

@dataclass(frozen=True)
class ShiftedKornReport:
    mu: float
    per_magnitude: dict
    uniform_factor: float
    uniform_ok: bool


def test_shifted_korn_chain(op: DifferentialOperator, p: float,
                            z_magnitudes=(0.0, 1.0, 100.0), z_per_magnitude: int = 4,
                            phi_samples: int = 6, shape=None, seed: int = 0,
                            uniform_tolerance: float = 4.0) -> ShiftedKornReport:
    """Weighted gradient/operator ratio with subquadratic shift weights.

    For gradient-space samples z and compactly supported phi, the ratio of
    int (1+|z|^2+|grad phi|^2)^{(p-2)/2} |grad phi|^2 against the same
    expression with (pi-projected z, A phi) must stay bounded uniformly in
    the magnitude of z; the report returns the max ratio per magnitude and
    the spread across magnitudes.
    """
    if not 1.0 < p < 2.0:
        raise ValueError("the shifted chain targets 1 < p < 2")
    report = check_ellipticity(op)
    if not report.elliptic:
        raise NonElliptic(f"{op!r} is not elliptic")
    red = reduce_to_gradient_form(op)
    rng = make_rng(seed, stream=41)
    if shape is None:
        shape = (32,) * op.n if op.n <= 2 else (16,) * op.n
    fields = _test_fields(op, shape, phi_samples, rng)
    grads = [gradient_values(phi.values) if op.m == 1 else None for phi in fields]
    if op.m != 1:
        raise DimensionMismatch("the shifted chain is formulated for first-order operators")
    per = {}
    for mag in z_magnitudes:
        worst = 0.0
        for _ in range(z_per_magnitude):
            zdir = rng.standard_normal(red.grad_dim)
            zdir /= np.linalg.norm(zdir)
            z = mag * zdir
            a = float(np.linalg.norm(red.recover(z)))
            for phi, g in zip(fields, grads):
                vol = phi.cell_volume
                g2 = np.sum(g * g, axis=0)
                aphi = apply_operator(op, phi.values)
                a2 = np.sum(aphi * aphi, axis=0)
                lhs = float(np.sum((1.0 + mag * mag + g2) ** ((p - 2.0) / 2.0) * g2) * vol)
                rhs = float(np.sum((1.0 + a * a + a2) ** ((p - 2.0) / 2.0) * a2) * vol)
                worst = max(worst, lhs / rhs)
        per[float(mag)] = worst
    vals = list(per.values())
    factor = max(vals) / min(vals)
    return ShiftedKornReport(mu=float(max(vals)), per_magnitude=per,
                             uniform_factor=float(factor),
                             uniform_ok=bool(factor <= uniform_tolerance))


test_shifted_korn_chain.__test__ = False


# ---------------------------------------------------------------------------
# coercivity and regularity diagnostics

@dataclass(frozen=True)
class CoercivityReport:
    c_empirical: float
    per_amplitude: dict
    bounded: bool
    poincare_c: float


def coercivity_diagnostic(problem, phi_samples: int = 20,
                          amplitudes=(1.0, 10.0, 100.0), seed: int = 0) -> CoercivityReport:
    """Empirical coercivity constant across an amplitude ladder.

    Checks int |A u|^p <= c (int F(A u) + int |A u_0| + |A u_0|^p + 1) for
    u = u_0 + phi; an unbounded growth of c across the ladder flags a
    density with no p-coercive lower bound.  Also reports the sampled
    Poincare-type constant for int |u|^p.
    """
    from .solve import problem_discretization

    disc = problem_discretization(problem)
    F = problem.integrand
    rng = make_rng(seed, stream=51)
    u0 = disc.initial_guess()
    z0 = disc.operator_values(u0)
    vol = disc.cell_volume
    base = float(np.sum(np.linalg.norm(z0, axis=-1) + np.linalg.norm(z0, axis=-1) ** F.p) * vol) + 1.0
    per = {}
    poincare = 0.0
    for amp in amplitudes:
        worst = 0.0
        for _ in range(phi_samples):
            phi = amp * disc.random_test_direction(rng)
            u = u0 + phi
            z = disc.operator_values(u)
            znorm = np.linalg.norm(z, axis=-1)
            lhs = float(np.sum(znorm ** F.p) * vol)
            energy = float(np.sum(disc.density(F, u, z)) * vol)
            den = energy + base
            if den <= 0.0:
                worst = np.inf
            else:
                worst = max(worst, lhs / den)
            zphi = disc.operator_values(phi)
            dphi = float(np.sum(np.linalg.norm(zphi, axis=-1) ** F.p) * vol)
            unorm = float(np.sum(np.linalg.norm(u, axis=0) ** F.p) * disc.point_volume)
            u0norm = float(np.sum(np.linalg.norm(u0, axis=0) ** F.p) * disc.point_volume)
            if dphi + u0norm > 0:
                poincare = max(poincare, unorm / (dphi + u0norm + 1e-30))
        per[float(amp)] = worst
    vals = [v for v in per.values() if np.isfinite(v)]
    bounded = len(vals) == len(per) and max(vals) <= 10.0 * max(min(vals), 1e-30)
    return CoercivityReport(c_empirical=float(max(per.values())), per_amplitude=per,
                            bounded=bool(bounded), poincare_c=float(poincare))


@dataclass(frozen=True)
class RegularityReport:
    excess_map: np.ndarray
    singular_fraction: float
    alpha_estimate: float
    levels: int


def regularity_diagnostic(u: GridField, op: DifferentialOperator,
                          levels: int = 3, threshold: float = 0.1,
                          problem=None) -> RegularityReport:
    """Local excess decay exponents of A u across dyadic blocks.

    E(x, r) is the mean oscillation of A u over the block of size r through
    x; the per-cell least-squares slope of log E against log r is the decay
    exponent.  Cells with exponent below the threshold are counted
    singular; zero-excess cells count as regular.
    """
    if u.kind == "torus":
        z = apply_operator(op, u.values)
    else:
        from .solve import staggered_operator_values
        z = staggered_operator_values(op, u)
    shape = z.shape[1:]
    smallest = min(shape)
    if smallest < 2 ** levels:
        raise GridTooSmall(f"grid {shape} cannot host {levels} dyadic levels")
    excesses = []
    sizes = [2 ** (k + 1) for k in range(levels)]
    for size in sizes:
        trimmed = tuple((s // size) * size for s in shape)
        zz = z[(slice(None),) + tuple(slice(0, t) for t in trimmed)]
        view = zz
        for a in range(len(shape)):
            pos = 1 + 2 * a    # grid axis a after splitting axes 0..a-1
            new = view.shape[:pos] + (view.shape[pos] // size, size) + view.shape[pos + 1:]
            view = view.reshape(new)
        # axes holding the within-block offsets
        block_axes = tuple(2 + 2 * a for a in range(len(shape)))
        mean = view.mean(axis=block_axes, keepdims=True)
        exc = ((view - mean) ** 2).mean(axis=block_axes).sum(axis=0)
        reps = tuple(size for _ in shape)
        full = exc
        for axis, r in enumerate(reps):
            full = np.repeat(full, r, axis=axis)
        pad = np.zeros(shape)
        pad[tuple(slice(0, t) for t in trimmed)] = full
        excesses.append(pad)
    logs = np.log(np.maximum(np.stack(excesses), 1e-300))
    xs = np.log(np.array(sizes, dtype=float))
    xbar = xs.mean()
    denom = np.sum((xs - xbar) ** 2)
    slope = np.tensordot(xs - xbar, logs - logs.mean(axis=0), axes=(0, 0)) / denom
    tiny = np.max(np.stack(excesses), axis=0) < 1e-20
    slope = np.where(tiny, np.inf, slope)
    singular = float(np.mean(slope < threshold))
    finite = slope[np.isfinite(slope)]
    alpha = float(np.median(finite)) if finite.size else float("inf")
    return RegularityReport(excess_map=slope, singular_fraction=singular,
                            alpha_estimate=alpha, levels=levels)
