"""Fourier multiplier operators on the discrete torus.

Builds the Korn-type kernels xi^alpha (A*[xi] A[xi])^{-1} A*[xi] for elliptic
operators, applies degree-zero matrix multipliers by FFT, reconstructs full
derivative tensors from A u, and measures Korn-type modular and weighted
ratios.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import DimensionMismatch, NonElliptic, NonPositiveWeight, ZeroField
from .fields import (GridField, apply_operator, dm_tensor_norm, dm_values,
                     frequency_grid)
from .operators import DifferentialOperator, check_ellipticity
from .util import multi_indices, xi_power

_CHUNK = 1 << 16  # lattice points processed per block when applying kernels


@dataclass(frozen=True)
class MultiplierKernel:
    """Matrix-valued multiplier, homogeneous of degree zero.

    evaluate maps a batch of frequencies (K, n) to matrices
    (K, target_dim, source_dim); the zero frequency must be handled by the
    evaluator itself (the Korn kernels return the zero matrix there).
    """

    source_dim: int
    target_dim: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    label: str = ""

    def matrix_at(self, xi) -> np.ndarray:
        return self.evaluate(np.asarray(xi, dtype=float)[None, :])[0]


def identity_kernel(dim: int, n: int) -> MultiplierKernel:
    def evaluate(Xi):
        return np.broadcast_to(np.eye(dim), (Xi.shape[0], dim, dim)).copy()

    return MultiplierKernel(source_dim=dim, target_dim=dim, evaluate=evaluate, label="identity")


def build_korn_multiplier(op: DifferentialOperator, alpha,
                          ellipticity=None) -> MultiplierKernel:
    """Kernel xi^alpha (A*[xi] A[xi])^{-1} A*[xi]; zero matrix at xi = 0.

    Requires an elliptic operator; the evaluator normalises frequencies to
    the unit sphere first, which makes degree-zero homogeneity exact.
    """
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != op.n or sum(alpha) != op.m:
        raise DimensionMismatch(f"multi-index {alpha} does not match order {op.m} in n={op.n}")
    report = ellipticity if ellipticity is not None else check_ellipticity(op)
    if not report.elliptic:
        raise NonElliptic(
            f"{op!r} is not elliptic (min sigma {report.min_sigma:.3e}); "
            "the normal-equation inversion is ill-conditioned"
        )

    def evaluate(Xi):
        Xi = np.asarray(Xi, dtype=float)
        norms = np.linalg.norm(Xi, axis=1)
        out = np.zeros((Xi.shape[0], op.N, op.l))
        nz = norms > 0.0
        if np.any(nz):
            unit = Xi[nz] / norms[nz, None]
            syms = op.symbols(unit)                       # (K, l, N)
            gram = np.einsum("klv,klw->kvw", syms, syms)  # A* A
            rhs = np.transpose(syms, (0, 2, 1))           # A*
            theta = np.linalg.solve(gram, rhs)
            out[nz] = xi_power(unit, alpha)[:, None, None] * theta
        return out

    label = f"korn[{op.name or 'operator'}, alpha={alpha}]"
    return MultiplierKernel(source_dim=op.l, target_dim=op.N, evaluate=evaluate, label=label)


def apply_multiplier(kernel: MultiplierKernel, field: GridField) -> GridField:
    """Apply the kernel mode by mode: FFT, multiply by Theta(k), inverse FFT.

    Output realness is enforced by taking the real part, equivalent to
    Hermitian-symmetrising the multiplied spectrum.  Frequency blocks are
    independent, so the result does not depend on evaluation order.
    """
    if field.kind != "torus":
        raise DimensionMismatch("multipliers act on periodic torus fields")
    if field.components != kernel.source_dim:
        raise DimensionMismatch(
            f"field has {field.components} components, kernel expects {kernel.source_dim}"
        )
    shape = field.shape
    axes = tuple(range(1, field.values.ndim))
    hat = np.fft.fftn(field.values, axes=axes).reshape(kernel.source_dim, -1)
    freqs = frequency_grid(shape).reshape(field.n, -1).T
    out_hat = np.empty((kernel.target_dim, hat.shape[1]), dtype=complex)
    for start in range(0, hat.shape[1], _CHUNK):
        stop = min(start + _CHUNK, hat.shape[1])
        theta = kernel.evaluate(freqs[start:stop])
        out_hat[:, start:stop] = np.einsum("kts,sk->tk", theta, hat[:, start:stop])
    out_hat = out_hat.reshape((kernel.target_dim,) + shape)
    out = np.real(np.fft.ifftn(out_hat, axes=axes))
    return GridField(values=out, kind="torus")


def reconstruct_derivatives(op: DifferentialOperator, au: GridField) -> GridField:
    """Recover the full m-th derivative tensor of u from A u.

    au must equal A u for some mean-zero periodic u; on the discrete torus
    the multiplier identity is exact mode by mode, not an approximation.
    Output layout matches dm_values: component k*M + a is d^{alpha_a} u_k.
    """
    report = check_ellipticity(op)
    if not report.elliptic:
        raise NonElliptic(f"{op!r} is not elliptic; derivatives are not determined by A u")
    alphas = multi_indices(op.n, op.m)
    M = len(alphas)
    pieces = []
    for alpha in alphas:
        kernel = build_korn_multiplier(op, alpha, ellipticity=report)
        pieces.append(apply_multiplier(kernel, au).values)   # (N, *shape)
    out = np.empty((op.N * M,) + au.shape)
    for a in range(M):
        for k in range(op.N):
            out[k * M + a] = pieces[a][k]
    return GridField(values=out, kind="torus")


class KornRatio(NamedTuple):
    lhs: float
    rhs: float
    ratio: float


def korn_modular_ratio(op: DifferentialOperator, psi, field: GridField) -> KornRatio:
    """Quadrature of psi(|D^m u|) against psi(|A u|) for a periodic field."""
    if field.components != op.N:
        raise DimensionMismatch("field components do not match the operator domain")
    dm = dm_values(field.values, op.m)
    full_norm = dm_tensor_norm(dm, op.n, op.m, op.N)
    au = apply_operator(op, field.values)
    au_norm = np.sqrt(np.sum(au * au, axis=0))
    lhs = field.integrate(psi(full_norm))
    rhs = field.integrate(psi(au_norm))
    if rhs <= 0.0:
        raise ZeroField("psi(|A u|) integrates to zero; the ratio is undefined")
    return KornRatio(lhs=lhs, rhs=rhs, ratio=lhs / rhs)


class WeightedKornRatio(NamedTuple):
    lhs: float
    rhs: float
    ratio: float
    aq_constant: float


def muckenhoupt_constant(weight: np.ndarray, q: float) -> float:
    """Sampled A_q constant over dyadic blocks of the grid."""
    w = np.asarray(weight, dtype=float)
    if np.min(w) <= 0.0:
        raise NonPositiveWeight("weight must be strictly positive")
    n = w.ndim
    best = 0.0
    size = 1
    while all(size <= s for s in w.shape):
        view = w
        dual = w ** (-1.0 / (q - 1.0))
        for axis in range(n):
            new_shape = view.shape[:axis] + (view.shape[axis] // size, size) + view.shape[axis + 1:]
            view = view.reshape(new_shape).mean(axis=axis + 1)
            dual = dual.reshape(new_shape).mean(axis=axis + 1)
        best = max(best, float(np.max(view * dual ** (q - 1.0))))
        size *= 2
    return best


def weighted_korn_ratio(op: DifferentialOperator, q: float, weight: np.ndarray,
                        field: GridField) -> WeightedKornRatio:
    """Weighted power ratio: integral of |D^m u|^q w against |A u|^q w."""
    if not 1.0 < q < np.inf:
        raise ValueError("q must lie in (1, inf)")
    w = np.asarray(weight, dtype=float)
    if w.shape != field.shape:
        raise DimensionMismatch("weight shape does not match the grid")
    if np.min(w) <= 0.0:
        raise NonPositiveWeight("weight must be strictly positive on the grid")
    dm = dm_values(field.values, op.m)
    full_norm = dm_tensor_norm(dm, op.n, op.m, op.N)
    au = apply_operator(op, field.values)
    au_norm = np.sqrt(np.sum(au * au, axis=0))
    lhs = field.integrate(full_norm ** q * w)
    rhs = field.integrate(au_norm ** q * w)
    if rhs <= 0.0:
        raise ZeroField("weighted |A u|^q integrates to zero")
    return WeightedKornRatio(lhs=lhs, rhs=rhs, ratio=lhs / rhs,
                             aq_constant=muckenhoupt_constant(w, q))
