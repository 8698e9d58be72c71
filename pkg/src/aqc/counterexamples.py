"""Witnesses of Korn failure for non-elliptic operators.

Plane waves u_i(x) = rho(x) h_i(<x, xi'>) v along a symbol-kernel direction
(xi', v) drive the derivative/operator modular ratio to infinity while the
operator side decays; rough profiles along the same direction produce
kernel fields with no continuous representative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import AqcError, EllipticOperator, IndexOutOfRange
from .fields import GridField
from .operators import DifferentialOperator, check_ellipticity, operator_norm
from .util import smoothstep, smoothstep_deriv


def find_symbol_kernel(op: DifferentialOperator, sphere_samples: int | None = None):
    """Unit (xi', v) with A[xi'] v = 0, or None for elliptic operators."""
    report = check_ellipticity(op, sphere_samples=sphere_samples)
    if report.elliptic:
        return None
    return report.witness_xi, report.witness_kernel_vector


def bump_profile(t):
    """The standard bump exp(-1/(1-t^2)) on (-1, 1)."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    out = np.zeros_like(t)
    tt = np.where(inside, t, 0.0)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(inside, np.exp(-1.0 / (1.0 - tt * tt)), 0.0)
    return out


def bump_profile_deriv(t):
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    tt = np.where(inside, t, 0.0)
    with np.errstate(divide="ignore", over="ignore"):
        val = np.exp(-1.0 / (1.0 - tt * tt)) * (-2.0 * tt) / (1.0 - tt * tt) ** 2
    return np.where(inside, val, 0.0)


@dataclass(frozen=True)
class PlaneWaveRecipe:
    """Everything needed to sample the plane-wave sequence for one operator.

    The cutoff rho equals 1 on B(0, sqrt(n)), vanishes outside B(0, R) with
    R = 2 sqrt(n) (1 + 1/(sqrt(n) min(1/||A||, 1))), and its radial slope is
    bounded by 2/(R - sqrt(n)) <= min(1/||A||, 1).  The profile family is
    h_i(t) = i^{-gamma} g(i t) with g the standard bump and
    gamma = (1 - 1/p)/2, so the profile norms decay while the derivative
    norms blow up at explicit power rates.
    """

    op: DifferentialOperator
    xi_prime: np.ndarray
    v: np.ndarray
    radius: float
    gamma: float
    slope_bound: float
    op_norm: float

    @property
    def n(self) -> int:
        return self.op.n

    def rho_of_r(self, r):
        root = math.sqrt(self.n)
        return smoothstep((self.radius - np.asarray(r)) / (self.radius - root))

    def drho_of_r(self, r):
        """Signed radial derivative of the cutoff (nonpositive)."""
        root = math.sqrt(self.n)
        width = self.radius - root
        return -smoothstep_deriv((self.radius - np.asarray(r)) / width) / width

    def h(self, i: int, t):
        return i ** (-self.gamma) * bump_profile(i * np.asarray(t, dtype=float))

    def dh(self, i: int, t):
        return i ** (1.0 - self.gamma) * bump_profile_deriv(i * np.asarray(t, dtype=float))


def make_plane_wave_recipe(op: DifferentialOperator, p: float = 2.0,
                           gamma: float | None = None,
                           sphere_samples: int | None = None) -> PlaneWaveRecipe:
    """Locate a symbol kernel direction and fix the cutoff geometry."""
    found = find_symbol_kernel(op, sphere_samples=sphere_samples)
    if found is None:
        raise EllipticOperator(f"{op!r} is elliptic; no plane-wave counterexample exists")
    xi_prime, v = found
    norm = operator_norm(op)
    mu = min(1.0 / norm, 1.0) if norm > 0.0 else 1.0
    root = math.sqrt(op.n)
    radius = 2.0 * root * (1.0 + 1.0 / (root * mu))
    if gamma is None:
        gamma = (1.0 - 1.0 / p) / 2.0
    return PlaneWaveRecipe(op=op, xi_prime=xi_prime, v=v, radius=radius,
                           gamma=float(gamma), slope_bound=mu, op_norm=norm)


def _box_axes(radius: float, points: int):
    spacing = 2.0 * radius / points
    coords = -radius + (np.arange(points) + 0.5) * spacing
    return coords, spacing


def build_plane_wave_sequence(recipe: PlaneWaveRecipe, i: int,
                              points_per_axis: int | None = None) -> GridField:
    """Sample u_i = rho(x) h_i(<x, xi'>) v on a box grid covering B(0, R)."""
    if i < 1:
        raise IndexOutOfRange(f"plane-wave index must be >= 1, got {i}")
    n = recipe.n
    if points_per_axis is None:
        points_per_axis = 256 if n <= 2 else 96
    coords, spacing = _box_axes(recipe.radius, points_per_axis)
    mesh = np.meshgrid(*([coords] * n), indexing="ij")
    r = np.sqrt(sum(c * c for c in mesh))
    t = sum(c * w for c, w in zip(mesh, recipe.xi_prime))
    scalar = recipe.rho_of_r(r) * recipe.h(i, t)
    values = recipe.v[(...,) + (None,) * n] * scalar[None, ...]
    return GridField(values=values, kind="box",
                     spacing=(spacing,) * n, origin=(-recipe.radius,) * n)


def plane_wave_operator_values(recipe: PlaneWaveRecipe, i: int,
                               mesh: list[np.ndarray]) -> np.ndarray:
    """Analytic A u_i = h_i(<x, xi'>) A[grad rho(x)] v on given coordinates."""
    r = np.sqrt(sum(c * c for c in mesh))
    r = np.where(r > 0, r, 1.0)
    t = sum(c * w for c, w in zip(mesh, recipe.xi_prime))
    drho = recipe.drho_of_r(r)
    h = recipe.h(i, t)
    cols = np.stack([recipe.op.coeff(tuple(1 if a == j else 0 for a in range(recipe.n)))
                     @ recipe.v for j in range(recipe.n)], axis=1)   # l x n
    out = np.zeros((recipe.op.l,) + r.shape)
    for w in range(recipe.op.l):
        acc = np.zeros_like(r)
        for j in range(recipe.n):
            acc += cols[w, j] * mesh[j] / r
        out[w] = h * drho * acc
    return out


def h_family_norm(recipe: PlaneWaveRecipe, psi, i: int, derivative: bool = False,
                  points: int = 200001) -> float:
    """1-d quadrature of psi(|h_i|) or psi(|h_i'|) over the line."""
    t = np.linspace(-1.0, 1.0, points)
    vals = recipe.dh(i, t) if derivative else recipe.h(i, t)
    return float(np.trapezoid(psi(np.abs(vals)), t))


def korn_failure_experiment(op: DifferentialOperator, psi, i_max: int,
                            fine_points: int | None = None,
                            transverse_points: int | None = None,
                            p: float | None = None,
                            strict: bool = True):
    """Blow-up table (i, lhs_i, rhs_i, ratio_i) for a non-elliptic operator.

    lhs_i integrates psi(|Du_i|) and rhs_i integrates psi(|A u_i|) with the
    analytic product-rule derivative formulas; quadrature runs on a uniform
    grid aligned with xi' (volume-preserving rotation) so the oscillation
    axis can be refined independently of the cutoff axes.  First-order
    operators only.
    """
    if op.m != 1:
        raise AqcError("plane-wave experiments are implemented for first-order operators")
    if p is None:
        p = getattr(psi, "growth_p", None) or 2.0
    recipe = make_plane_wave_recipe(op, p=p)
    n = op.n
    if fine_points is None:
        fine_points = 2048 if n <= 2 else 1024
    if transverse_points is None:
        transverse_points = 512 if n <= 2 else 96

    # rotated orthonormal frame: first axis along xi'
    tangent = scipy.linalg.null_space(recipe.xi_prime[None, :]) if n > 1 else np.zeros((1, 0))
    frame = [recipe.xi_prime] + [tangent[:, a] for a in range(n - 1)]
    cols = np.stack([op.coeff(tuple(1 if a == j else 0 for a in range(n))) @ recipe.v
                     for j in range(n)], axis=1)                    # l x n
    gram = np.array([[float(np.dot(cols @ fa, cols @ fb)) for fb in frame] for fa in frame])

    y1, d1 = _box_axes(1.02, fine_points)
    tr, dtr = _box_axes(recipe.radius, transverse_points) if n > 1 else (np.zeros(1), 1.0)
    cellvol = d1 * dtr ** (n - 1)

    trans_axes = [tr.reshape((1,) * (a + 1) + (-1,) + (1,) * (n - 2 - a))
                  for a in range(n - 1)]
    r2_trans = sum(t * t for t in trans_axes) if n > 1 else 0.0

    rows = []
    chunk = max(1, (1 << 21) // max(1, transverse_points ** (n - 1)))
    for i in range(1, i_max + 1):
        lhs = rhs = 0.0
        for start in range(0, fine_points, chunk):
            stop = min(start + chunk, fine_points)
            t1 = y1[start:stop].reshape((-1,) + (1,) * (n - 1))
            r2 = t1 * t1 + r2_trans
            r = np.sqrt(r2)
            rho = recipe.rho_of_r(r)
            drho = recipe.drho_of_r(r)
            h = recipe.h(i, t1) * np.ones_like(r)
            dh = recipe.dh(i, t1) * np.ones_like(r)
            cos1 = t1 / r
            # |Du|^2 = (rho h')^2 + 2 rho h' h <xi', grad rho> + (h |grad rho|)^2
            du2 = (rho * dh) ** 2 + 2.0 * rho * dh * h * drho * cos1 + (h * drho) ** 2
            # |A u|^2 = h^2 drho^2 * quadratic form of the unit position
            ys = [t1] + trans_axes
            q = np.zeros_like(r)
            for a in range(n):
                for b in range(n):
                    q = q + gram[a, b] * ys[a] * ys[b] / r2
            au2 = h * h * drho * drho * q
            lhs += float(np.sum(psi(np.sqrt(np.maximum(du2, 0.0)))))
            rhs += float(np.sum(psi(np.sqrt(np.maximum(au2, 0.0)))))
        lhs *= cellvol
        rhs *= cellvol
        rows.append({"i": i, "lhs": lhs, "rhs": rhs, "ratio": lhs / rhs})

    if strict and i_max >= 2:
        ratios = [row["ratio"] for row in rows]
        rhss = [row["rhs"] for row in rows]
        for k in range(1, i_max - 1):
            if not ratios[k + 1] > ratios[k]:
                raise AqcError(f"ratio failed to increase between i={k + 1} and i={k + 2}")
            if not rhss[k + 1] < rhss[k]:
                raise AqcError(f"operator side failed to decrease between i={k + 1} and i={k + 2}")
    return rows


def fat_cantor_indicator(t, depth: int = 12):
    """Indicator of a fat Cantor set on [0, 1] (middle 4^{-k} removals)."""
    t = np.asarray(t, dtype=float)
    lo = np.zeros_like(t)
    hi = np.ones_like(t)
    member = np.ones(t.shape, dtype=bool)
    inside = (t >= 0.0) & (t <= 1.0)
    member &= inside
    for k in range(1, depth + 1):
        mid = 0.5 * (lo + hi)
        half = 0.5 * 4.0 ** (-k)
        removed = member & (np.abs(t - mid) < half)
        member &= ~removed
        go_left = member & (t < mid)
        go_right = member & (t >= mid)
        hi = np.where(go_left, mid - half, hi)
        lo = np.where(go_right, mid + half, lo)
    return member.astype(float)


def _rough_profile(name: str):
    if name == "step":
        return lambda t: np.where(np.asarray(t) >= 0.0, 1.0, -1.0)
    if name == "fat_cantor":
        return lambda t: fat_cantor_indicator(np.mod(np.asarray(t), 1.0))
    raise ValueError(f"unknown rough profile {name!r}")


def nonsmooth_kernel_field(op: DifferentialOperator, h="step",
                           points_per_axis: int | None = None,
                           half_side: float = 1.0) -> GridField:
    """Sample v(x) = h(<x, xi'>) v for a non-elliptic operator.

    A v vanishes identically in the distributional sense because the
    directional derivative acts along a symbol-kernel direction; any
    discrete operator applied to the samples vanishes away from the jump
    set of h.
    """
    found = find_symbol_kernel(op)
    if found is None:
        raise EllipticOperator(f"{op!r} is elliptic; its kernel fields are smooth")
    xi_prime, v = found
    profile = _rough_profile(h) if isinstance(h, str) else h
    n = op.n
    if points_per_axis is None:
        points_per_axis = 256 if n <= 2 else 64
    coords, spacing = _box_axes(half_side, points_per_axis)
    mesh = np.meshgrid(*([coords] * n), indexing="ij")
    t = sum(c * w for c, w in zip(mesh, xi_prime))
    scalar = np.asarray(profile(t), dtype=float)
    values = v[(...,) + (None,) * n] * scalar[None, ...]
    return GridField(values=values, kind="box",
                     spacing=(spacing,) * n, origin=(-half_side,) * n)
