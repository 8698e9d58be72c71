"""Shared helpers: counter-based RNG streams, sphere sampling, multi-indices."""
from __future__ import annotations

import itertools
import math
import os

import numpy as np
from scipy.special import ndtri


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Deterministic counter-based generator; distinct streams never collide."""
    key = ((int(stream) & 0xFFFFFFFFFFFFFFFF) << 64) | (int(seed) & 0xFFFFFFFFFFFFFFFF)
    return np.random.Generator(np.random.Philox(key=key))


def max_threads() -> int:
    """Worker cap honoured by parallel-capable loops (AQC_THREADS, default 1)."""
    try:
        return max(1, int(os.environ.get("AQC_THREADS", "1")))
    except ValueError:
        return 1


def multi_indices(n: int, m: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices of order m in n variables, in a fixed canonical order.

    For m = 1 the order is (1,0,..), (0,1,..), ... so that the flattened
    gradient layout matches row-major (component, axis) indexing.
    """
    out = [a for a in itertools.product(range(m + 1), repeat=n) if sum(a) == m]
    return tuple(sorted(out, reverse=True))


def xi_power(xi: np.ndarray, alpha) -> np.ndarray:
    """xi^alpha for a batch of frequencies, shape (..., n) -> (...)."""
    a = np.asarray(alpha, dtype=float)
    return np.prod(np.asarray(xi, dtype=float) ** a, axis=-1)


def _fibonacci_sphere(count: int) -> np.ndarray:
    i = np.arange(count)
    z = 1.0 - (2.0 * i + 1.0) / count
    golden = (1.0 + math.sqrt(5.0)) / 2.0
    phi = 2.0 * math.pi * i / golden
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def _kronecker_sphere(n: int, count: int) -> np.ndarray:
    # Generalised golden-ratio lattice in the cube, pushed to the sphere
    # through the normal quantile so the direction law is uniform.
    phi = 2.0
    for _ in range(40):
        phi = (1.0 + phi) ** (1.0 / (n + 1))
    alpha = np.array([phi ** -(j + 1) for j in range(n)]) % 1.0
    i = np.arange(1, count + 1)[:, None]
    u = np.mod(0.5 + i * alpha[None, :], 1.0)
    g = ndtri(np.clip(u, 1e-12, 1.0 - 1e-12))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return g / norms


def unit_sphere_samples(n: int, count: int) -> np.ndarray:
    """Deterministic quasi-uniform points on S^{n-1}, always including +-e_j."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        theta = 2.0 * math.pi * np.arange(count) / count
        pts = np.column_stack([np.cos(theta), np.sin(theta)])
    elif n == 3:
        pts = _fibonacci_sphere(count)
    else:
        pts = _kronecker_sphere(n, count)
    axes = np.vstack([np.eye(n), -np.eye(n)])
    return np.vstack([pts, axes])


def smoothstep(s):
    """C^2 monotone ramp: 0 for s<=0, 1 for s>=1, slope bounded by 2."""
    t = np.clip(s, 0.0, 1.0)
    return t - np.sin(2.0 * np.pi * t) / (2.0 * np.pi)


def smoothstep_deriv(s):
    s = np.asarray(s, dtype=float)
    inside = (s > 0.0) & (s < 1.0)
    return np.where(inside, 1.0 - np.cos(2.0 * np.pi * np.clip(s, 0.0, 1.0)), 0.0)


def golden_section_max(f, lo: float, hi: float, iters: int = 96):
    """Maximise a unimodal function on [lo, hi]; returns (argmax, max)."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)
