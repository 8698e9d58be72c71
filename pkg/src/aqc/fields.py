"""Periodic and box-sampled vector fields with spectral calculus.

Torus fields live on [0,1)^n with FFT sample points i/S; spectral
derivatives use signed integer frequencies in (-S/2, S/2] with the Nyquist
plane zeroed for odd derivative orders so real fields stay real.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatch, MalformedDefinition
from .util import multi_indices, smoothstep

AQCF_MAGIC = b"AQCF"
AQCF_VERSION = 1


@dataclass(frozen=True)
class GridField:
    """Sampled field with `components` channels on a uniform grid.

    values has shape (components, *shape) in C order.  kind is "torus"
    (unit torus, FFT sample points, power-of-two sizes) or "box"
    (cell-centred samples, zero extension outside the box).
    """

    values: np.ndarray
    kind: str = "torus"
    spacing: tuple = None
    origin: tuple = None
    mean_zero: bool = False

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim < 2:
            raise DimensionMismatch("values must have shape (components, *grid shape)")
        if self.kind not in ("torus", "box"):
            raise MalformedDefinition(f"unknown grid kind {self.kind!r}")
        shape = vals.shape[1:]
        if self.kind == "torus":
            for s in shape:
                if s < 2 or s & (s - 1):
                    raise DimensionMismatch(f"torus grids use power-of-two sizes, got {shape}")
            object.__setattr__(self, "spacing", tuple(1.0 / s for s in shape))
            object.__setattr__(self, "origin", tuple(0.0 for _ in shape))
        else:
            if self.spacing is None:
                raise MalformedDefinition("box fields need explicit spacing")
            object.__setattr__(self, "spacing", tuple(float(h) for h in self.spacing))
            if self.origin is None:
                object.__setattr__(self, "origin", tuple(0.0 for _ in shape))
            else:
                object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        if self.mean_zero:
            means = vals.reshape(vals.shape[0], -1).mean(axis=1)
            if np.max(np.abs(means)) > 1e-12:
                raise MalformedDefinition("field flagged mean_zero has nonzero component mean")

    @property
    def components(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple:
        return self.values.shape[1:]

    @property
    def n(self) -> int:
        return self.values.ndim - 1

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def integrate(self, integrand: np.ndarray) -> float:
        """Uniform grid sum times cell volume (spectrally accurate on the torus)."""
        return float(np.sum(integrand) * self.cell_volume)

    def with_values(self, values: np.ndarray, mean_zero: bool = False) -> "GridField":
        return replace(self, values=values, mean_zero=mean_zero)


def write_aqcf(field: GridField, path) -> None:
    """magic AQCF, u32 version, u8 n, u8 components, u32 sizes, f64 LE values."""
    with open(path, "wb") as fh:
        fh.write(AQCF_MAGIC)
        fh.write(struct.pack("<I", AQCF_VERSION))
        fh.write(struct.pack("<BB", field.n, field.components))
        for s in field.shape:
            fh.write(struct.pack("<I", s))
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes())


def read_aqcf(path, kind: str = "torus", spacing=None, origin=None) -> GridField:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != AQCF_MAGIC:
            raise MalformedDefinition(f"{path}: bad magic {magic!r}")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != AQCF_VERSION:
            raise MalformedDefinition(f"{path}: unsupported version {version}")
        n, comps = struct.unpack("<BB", fh.read(2))
        shape = tuple(struct.unpack("<I", fh.read(4))[0] for _ in range(n))
        count = comps * int(np.prod(shape))
        data = np.frombuffer(fh.read(count * 8), dtype="<f8", count=count)
    values = data.reshape((comps,) + shape)
    return GridField(values=values, kind=kind, spacing=spacing, origin=origin)


def torus_points(shape) -> np.ndarray:
    """FFT sample coordinates, shape (n, *shape)."""
    axes = [np.arange(s) / s for s in shape]
    return np.stack(np.meshgrid(*axes, indexing="ij"))


def lattice_frequencies(shape) -> list[np.ndarray]:
    """Per-axis signed integer frequencies with the positive Nyquist."""
    out = []
    for s in shape:
        k = np.fft.fftfreq(s) * s
        if s % 2 == 0:
            k[s // 2] = s / 2.0
        out.append(k)
    return out


def frequency_grid(shape) -> np.ndarray:
    """Stacked frequency vectors, shape (n, *shape)."""
    return np.stack(np.meshgrid(*lattice_frequencies(shape), indexing="ij"))


def _derivative_multiplier(shape, alpha) -> np.ndarray:
    """Fourier factor for d^alpha with odd-order Nyquist zeroing."""
    ks = lattice_frequencies(shape)
    fac = np.ones(shape, dtype=complex)
    for axis, (k, a) in enumerate(zip(ks, alpha)):
        if a == 0:
            continue
        shape_axis = [1] * len(shape)
        shape_axis[axis] = shape[axis]
        kk = k.reshape(shape_axis)
        factor = (2j * np.pi * kk) ** a
        if a % 2 == 1 and shape[axis] % 2 == 0:
            factor = np.where(np.abs(kk) == shape[axis] / 2.0, 0.0, factor)
        fac = fac * factor
    return fac


def spectral_derivative(values: np.ndarray, alpha) -> np.ndarray:
    """d^alpha per component of a (C, *shape) torus field."""
    shape = values.shape[1:]
    axes = tuple(range(1, values.ndim))
    hat = np.fft.fftn(values, axes=axes)
    fac = _derivative_multiplier(shape, alpha)
    return np.real(np.fft.ifftn(hat * fac, axes=axes))


def gradient_values(values: np.ndarray) -> np.ndarray:
    """Full gradient, layout (k*n + j, *shape) for d_j u_k."""
    n = values.ndim - 1
    comps = values.shape[0]
    out = np.empty((comps * n,) + values.shape[1:])
    for j in range(n):
        alpha = tuple(1 if t == j else 0 for t in range(n))
        d = spectral_derivative(values, alpha)
        for k in range(comps):
            out[k * n + j] = d[k]
    return out


def dm_values(values: np.ndarray, m: int) -> np.ndarray:
    """All order-m derivatives, layout (k*M + a, *shape), a over multi_indices."""
    n = values.ndim - 1
    comps = values.shape[0]
    alphas = multi_indices(n, m)
    out = np.empty((comps * len(alphas),) + values.shape[1:])
    for a, alpha in enumerate(alphas):
        d = spectral_derivative(values, alpha)
        for k in range(comps):
            out[k * len(alphas) + a] = d[k]
    return out


def dm_tensor_norm(dm: np.ndarray, n: int, m: int, comps: int) -> np.ndarray:
    """Pointwise Frobenius norm of the symmetric m-tensor of derivatives."""
    alphas = multi_indices(n, m)
    M = len(alphas)
    from math import factorial
    weights = np.array([
        factorial(m) / np.prod([factorial(a) for a in alpha]) for alpha in alphas
    ])
    sq = np.zeros(dm.shape[1:])
    for k in range(comps):
        for a in range(M):
            sq += weights[a] * dm[k * M + a] ** 2
    return np.sqrt(sq)


def apply_operator(op, values: np.ndarray) -> np.ndarray:
    """Spectral A u on the torus, (N, *shape) -> (l, *shape)."""
    if values.shape[0] != op.N:
        raise DimensionMismatch(f"field has {values.shape[0]} components, operator wants {op.N}")
    shape = values.shape[1:]
    axes = tuple(range(1, values.ndim))
    hat = np.fft.fftn(values, axes=axes)
    out_hat = np.zeros((op.l,) + shape, dtype=complex)
    for alpha, mat in op.coeffs.items():
        fac = _derivative_multiplier(shape, alpha)
        out_hat += np.einsum("wv,v...->w...", mat, hat) * fac
    return np.real(np.fft.ifftn(out_hat, axes=axes))


def apply_operator_adjoint(op, values: np.ndarray) -> np.ndarray:
    """Adjoint of the spectral A w.r.t. the grid inner product, (l,*) -> (N,*)."""
    if values.shape[0] != op.l:
        raise DimensionMismatch(f"field has {values.shape[0]} components, adjoint wants {op.l}")
    shape = values.shape[1:]
    axes = tuple(range(1, values.ndim))
    hat = np.fft.fftn(values, axes=axes)
    out_hat = np.zeros((op.N,) + shape, dtype=complex)
    for alpha, mat in op.coeffs.items():
        fac = np.conj(_derivative_multiplier(shape, alpha))
        out_hat += np.einsum("vw,w...->v...", mat.T, hat) * fac
    return np.real(np.fft.ifftn(out_hat, axes=axes))


def random_band_limited_field(components: int, shape, kmax: int,
                              rng: np.random.Generator) -> GridField:
    """Random real mean-zero field with frequencies |k_j| <= kmax.

    The draw order is a fixed lexicographic walk over the frequency cube, so
    the same generator state yields the same continuum field on any grid
    large enough to carry it.
    """
    import itertools
    n = len(shape)
    if kmax >= min(shape) / 2:
        raise DimensionMismatch("band limit must stay below the Nyquist frequency")
    hat = np.zeros((components,) + tuple(shape), dtype=complex)
    for k in itertools.product(*[range(-kmax, kmax + 1) for _ in range(n)]):
        if all(v == 0 for v in k):
            continue
        first = next(v for v in k if v != 0)
        if first < 0:
            continue  # the mirrored index carries the conjugate
        a = rng.standard_normal(components)
        b = rng.standard_normal(components)
        idx_pos = tuple(v % s for v, s in zip(k, shape))
        idx_neg = tuple((-v) % s for v, s in zip(k, shape))
        for c in range(components):
            hat[(c,) + idx_pos] += 0.5 * (a[c] - 1j * b[c])
            hat[(c,) + idx_neg] += 0.5 * (a[c] + 1j * b[c])
    axes = tuple(range(1, n + 1))
    values = np.real(np.fft.ifftn(hat, axes=axes)) * np.prod(shape)
    values -= values.reshape(components, -1).mean(axis=1).reshape((components,) + (1,) * n)
    return GridField(values=values, kind="torus", mean_zero=True)


def bump_window(shape, margin: float = 0.15) -> np.ndarray:
    """Smooth window on the unit cell: 1 in the middle, 0 near the boundary.

    Multiplying a periodic field by this window yields a compactly
    supported test field in (0,1)^n.
    """
    w = np.ones(tuple(shape))
    for axis, s in enumerate(shape):
        t = np.arange(s) / s
        prof = smoothstep(t / margin) * smoothstep((1.0 - t) / margin)
        shape_axis = [1] * len(shape)
        shape_axis[axis] = s
        w = w * prof.reshape(shape_axis)
    return w
