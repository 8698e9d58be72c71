"""Constant-coefficient homogeneous vectorial differential operators.

Symbol evaluation with SVD metadata, ellipticity and constant-rank
certification over the unit sphere, pure tensors and the essential range,
exactness of potential/annihilator symbol pairs, and the identification of
an operator with a full-gradient operator on the derivative space.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import DimensionMismatch
from .util import make_rng, multi_indices, unit_sphere_samples, xi_power

# Singular values below RANK_RTOL * sigma_max do not count toward the rank.
RANK_RTOL = 1e-10
# Elliptic iff the refined minimum of sigma_min over the sphere exceeds
# ELLIPTICITY_RTOL * operator_norm.
ELLIPTICITY_RTOL = 1e-8


class DifferentialOperator:
    """Homogeneous order-m operator  u -> sum_{|alpha|=m} A_alpha d^alpha u.

    Maps R^N-valued fields on R^n to R^l-valued fields.  Coefficients are a
    mapping from multi-indices alpha (tuples of length n with |alpha| = m)
    to real l x N matrices.  Instances are immutable and safe to share
    across threads.
    """

    def __init__(self, n, N, l, coeffs, name=None):
        self.n = int(n)
        self.N = int(N)
        self.l = int(l)
        self.name = name
        if self.n < 1 or self.N < 1 or self.l < 1:
            raise DimensionMismatch("n, N, l must all be positive")
        if not coeffs:
            raise DimensionMismatch("at least one coefficient matrix is required")
        orders = set()
        cleaned = {}
        for alpha, mat in coeffs.items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.n or any(a < 0 for a in alpha):
                raise DimensionMismatch(f"bad multi-index {alpha} for n={self.n}")
            orders.add(sum(alpha))
            arr = np.ascontiguousarray(mat, dtype=float)
            if arr.shape != (self.l, self.N):
                raise DimensionMismatch(
                    f"coefficient for {alpha} has shape {arr.shape}, expected {(self.l, self.N)}"
                )
            arr.setflags(write=False)
            cleaned[alpha] = arr
        if len(orders) != 1:
            raise DimensionMismatch(f"operator is not homogeneous: orders {sorted(orders)}")
        self.m = orders.pop()
        if self.m < 1:
            raise DimensionMismatch("order must be >= 1")
        self.coeffs = dict(sorted(cleaned.items(), reverse=True))
        # A fully vanishing operator (e.g. the deviatoric symmetric gradient
        # in one dimension) is representable; it is reported non-elliptic
        # rather than rejected so catalog verdicts stay total.
        self.degenerate = all(not arr.any() for arr in self.coeffs.values())
        self._zero = np.zeros((self.l, self.N))
        self._zero.setflags(write=False)

    def coeff(self, alpha) -> np.ndarray:
        return self.coeffs.get(tuple(alpha), self._zero)

    def symbol(self, xi) -> np.ndarray:
        """The l x N symbol matrix sum_alpha xi^alpha A_alpha."""
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.n,):
            raise DimensionMismatch(f"frequency has shape {xi.shape}, expected ({self.n},)")
        out = np.zeros((self.l, self.N))
        for alpha, mat in self.coeffs.items():
            out += xi_power(xi, alpha) * mat
        return out

    def symbols(self, Xi) -> np.ndarray:
        """Batched symbols, shape (K, n) -> (K, l, N)."""
        Xi = np.asarray(Xi, dtype=float)
        if Xi.ndim != 2 or Xi.shape[1] != self.n:
            raise DimensionMismatch(f"frequency batch has shape {Xi.shape}")
        out = np.zeros((Xi.shape[0], self.l, self.N))
        for alpha, mat in self.coeffs.items():
            out += xi_power(Xi, alpha)[:, None, None] * mat
        return out

    def __repr__(self):
        label = self.name or "operator"
        return f"DifferentialOperator({label}: n={self.n}, m={self.m}, R^{self.N} -> R^{self.l})"


@dataclass(frozen=True)
class SymbolMatrix:
    """Symbol at one frequency with SVD metadata."""

    xi: np.ndarray
    matrix: np.ndarray
    singular_values: np.ndarray
    rank: int

    @property
    def sigma_max(self) -> float:
        return float(self.singular_values[0]) if self.singular_values.size else 0.0

    @property
    def sigma_min(self) -> float:
        """Smallest singular value over the domain (0 when l < N)."""
        if self.matrix.shape[0] < self.matrix.shape[1]:
            return 0.0
        return float(self.singular_values[-1]) if self.singular_values.size else 0.0


@dataclass(frozen=True)
class RangeDecomposition:
    """Orthonormal basis of the essential range and its projector."""

    basis: np.ndarray      # l x dim
    dim: int
    projector: np.ndarray  # l x l, symmetric idempotent


@dataclass(frozen=True)
class EllipticityReport:
    elliptic: bool
    min_sigma: float
    witness_xi: np.ndarray
    witness_kernel_vector: np.ndarray | None
    constant_rank: bool
    rank_value: int
    samples: int
    threshold: float
    operator_norm: float


@dataclass(frozen=True)
class ExactnessReport:
    exact: bool
    composition_residual: float
    rank_nullity_ok: bool
    composition_ok: bool
    samples: int
    worst_xi: np.ndarray
    potential_rank: int
    annihilator_nullity: int


@dataclass(frozen=True)
class GradientFormReduction:
    """Identification of an operator with a gradient-space operator.

    ``contract`` maps a derivative-space vector z (layout z[v*M + a] for
    component v and multi-index alphas[a]) to sum_a A_{alpha_a} z[:, a] in
    the target space; ``embed`` is its pseudo-inverse, ``pi = embed @
    contract`` the orthogonal projector onto the row space.  For the plain
    gradient both contract and pi are exactly the identity.
    """

    reduced_op: DifferentialOperator
    pi: np.ndarray            # (N*M) x (N*M) orthogonal projector
    contract: np.ndarray      # l x (N*M)
    embed: np.ndarray         # (N*M) x l
    kappa: np.ndarray         # injection of the essential range into grad space
    kappa_prime: np.ndarray   # orthonormal basis of the complement
    lam: np.ndarray           # coordinate map on the domain (identity basis)
    alphas: tuple

    @property
    def grad_dim(self) -> int:
        return self.contract.shape[1]

    def recover(self, z: np.ndarray) -> np.ndarray:
        """Map gradient-space values (..., N*M) back to target-space values."""
        return np.asarray(z) @ self.contract.T


def _domain_sigma_min(op: DifferentialOperator, svals: np.ndarray) -> np.ndarray:
    """Smallest singular value over the N-dimensional domain, batched."""
    if op.l < op.N:
        return np.zeros(svals.shape[0])
    return svals[:, -1]


def symbol_at(op: DifferentialOperator, xi) -> SymbolMatrix:
    """Evaluate the symbol with SVD metadata at one frequency."""
    xi = np.asarray(xi, dtype=float)
    mat = op.symbol(xi)
    s = np.linalg.svd(mat, compute_uv=False)
    smax = s[0] if s.size else 0.0
    rank = int(np.count_nonzero(s > RANK_RTOL * smax)) if smax > 0.0 else 0
    return SymbolMatrix(xi=xi, matrix=mat, singular_values=s, rank=rank)


def pure_tensor(op: DifferentialOperator, v, xi) -> np.ndarray:
    """The pure tensor A[xi] v, an element of the target space."""
    v = np.asarray(v, dtype=float)
    if v.shape != (op.N,):
        raise DimensionMismatch(f"vector has shape {v.shape}, expected ({op.N},)")
    return op.symbol(xi) @ v


def operator_norm(op: DifferentialOperator) -> float:
    """Sum over multi-indices of the spectral norms of the coefficients."""
    return float(sum(np.linalg.norm(mat, 2) for mat in op.coeffs.values()))


def _default_samples(n: int) -> int:
    return 4096 if n <= 3 else 16384


def _refine_worst(op: DifferentialOperator, xi0: np.ndarray):
    """Polish the sphere minimum of sigma_min by derivative-free descent."""
    if op.n == 1:
        s = np.linalg.svd(op.symbol(xi0), compute_uv=False)
        val = 0.0 if op.l < op.N else (float(s[-1]) if s.size else 0.0)
        return xi0, val
    tangent = scipy.linalg.null_space(xi0[None, :])

    def objective(t):
        xi = xi0 + tangent @ t
        nrm = np.linalg.norm(xi)
        if nrm < 1e-8:
            return np.inf
        s = np.linalg.svd(op.symbol(xi / nrm), compute_uv=False)
        return 0.0 if op.l < op.N else float(s[-1])

    res = scipy.optimize.minimize(
        objective, np.zeros(op.n - 1), method="Nelder-Mead",
        options={"xatol": 1e-13, "fatol": 1e-14, "maxiter": 800, "maxfev": 1600},
    )
    xi = xi0 + tangent @ res.x
    xi = xi / np.linalg.norm(xi)
    return xi, float(res.fun)


def check_ellipticity(op: DifferentialOperator, sphere_samples: int | None = None,
                      refine: bool = True) -> EllipticityReport:
    """Decide ellipticity and constant rank by quasi-uniform sphere sampling.

    sigma_min is Lipschitz on the sphere with constant <= m * ||A||, so the
    sampled minimum plus a local polish from the worst sample certifies the
    verdict against the threshold ELLIPTICITY_RTOL * ||A||.
    """
    if sphere_samples is None:
        sphere_samples = _default_samples(op.n)
    if sphere_samples < 2 * op.n:
        raise ValueError("need at least 2n sphere samples")
    Xi = unit_sphere_samples(op.n, sphere_samples)
    syms = op.symbols(Xi)
    svals = np.linalg.svd(syms, compute_uv=False)
    smax = svals[:, 0]
    ranks = np.count_nonzero(svals > RANK_RTOL * np.where(smax > 0, smax, 1.0)[:, None], axis=1)
    ranks = np.where(smax > 0, ranks, 0)
    dom_min = _domain_sigma_min(op, svals)
    worst = int(np.argmin(dom_min))
    min_sigma = float(dom_min[worst])
    witness_xi = Xi[worst]
    if refine and not op.degenerate:
        xi_ref, val_ref = _refine_worst(op, witness_xi)
        if val_ref < min_sigma:
            min_sigma, witness_xi = val_ref, xi_ref
    norm = operator_norm(op)
    threshold = ELLIPTICITY_RTOL * norm
    elliptic = min_sigma > threshold
    kernel_vec = None
    if not elliptic:
        _, _, vh = np.linalg.svd(op.symbol(witness_xi), full_matrices=True)
        kernel_vec = vh[-1]
    return EllipticityReport(
        elliptic=elliptic,
        min_sigma=min_sigma,
        witness_xi=witness_xi,
        witness_kernel_vector=kernel_vec,
        constant_rank=bool(np.all(ranks == ranks[0])),
        rank_value=int(ranks[0]),
        samples=Xi.shape[0],
        threshold=threshold,
        operator_norm=norm,
    )


def essential_range(op: DifferentialOperator, seed: int = 0) -> RangeDecomposition:
    """Linear hull of the pure tensors, as an orthonormal basis + projector.

    Assembled from symbols at the coordinate directions, all 0/1 frequency
    patterns (small n), and 2*N*n random directions guarding degenerate
    coincidences; the span is extracted by a rank-revealing SVD.
    """
    freqs = [np.eye(op.n)]
    if op.n <= 6:
        import itertools
        extra = [np.array(bits, dtype=float)
                 for bits in itertools.product((0.0, 1.0), repeat=op.n) if any(bits)]
        freqs.append(np.array(extra))
    rng = make_rng(seed, stream=7)
    rand = rng.standard_normal((2 * op.N * op.n, op.n))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    freqs.append(rand)
    Xi = np.vstack(freqs)
    syms = op.symbols(Xi)                       # (K, l, N)
    cols = np.moveaxis(syms, 0, 1).reshape(op.l, -1)
    u, s, _ = np.linalg.svd(cols, full_matrices=False)
    smax = s[0] if s.size else 0.0
    r = int(np.count_nonzero(s > RANK_RTOL * smax)) if smax > 0.0 else 0
    basis = u[:, :r]
    projector = basis @ basis.T
    return RangeDecomposition(basis=basis, dim=r, projector=projector)


def check_exactness(potential: DifferentialOperator, annihilator: DifferentialOperator,
                    sphere_samples: int = 4096, tol: float = 1e-10) -> ExactnessReport:
    """Verify ker(annihilator[xi]) = im(potential[xi]) on sampled unit xi.

    Checks the composition vanishes and that rank/nullity match at every
    sample; both must hold for exactness.
    """
    if potential.n != annihilator.n:
        raise DimensionMismatch("potential and annihilator live in different dimensions")
    if potential.l != annihilator.N:
        raise DimensionMismatch(
            f"chain mismatch: potential target R^{potential.l} vs annihilator domain R^{annihilator.N}"
        )
    Xi = unit_sphere_samples(potential.n, sphere_samples)
    syms_pot = potential.symbols(Xi)
    syms_ann = annihilator.symbols(Xi)
    comp = np.einsum("kzw,kwv->kzv", syms_ann, syms_pot)
    residuals = np.max(np.abs(comp), axis=(1, 2))
    worst = int(np.argmax(residuals))

    def ranks(svals):
        smax = svals[:, 0]
        r = np.count_nonzero(svals > RANK_RTOL * np.where(smax > 0, smax, 1.0)[:, None], axis=1)
        return np.where(smax > 0, r, 0)

    rank_pot = ranks(np.linalg.svd(syms_pot, compute_uv=False))
    rank_ann = ranks(np.linalg.svd(syms_ann, compute_uv=False))
    nullity_ann = annihilator.N - rank_ann
    rank_ok = bool(np.all(nullity_ann == rank_pot))
    comp_ok = bool(residuals[worst] <= tol)
    return ExactnessReport(
        exact=comp_ok and rank_ok,
        composition_residual=float(residuals[worst]),
        rank_nullity_ok=rank_ok,
        composition_ok=comp_ok,
        samples=Xi.shape[0],
        worst_xi=Xi[worst],
        potential_rank=int(np.bincount(rank_pot).argmax()),
        annihilator_nullity=int(np.bincount(nullity_ann).argmax()),
    )


def reduce_to_gradient_form(op: DifferentialOperator) -> GradientFormReduction:
    """Identify the operator with an operator into the m-th derivative space.

    The contraction S maps derivative-space values z to sum_a A_{alpha_a}
    z[:, a]; its image is the essential range.  Taking the embedding as the
    pseudo-inverse of S makes pi = embed @ S the orthogonal projector onto
    row(S), so pi is symmetric idempotent, pi(grad v) equals the reduced
    operator applied to v, and recover(pi(grad v)) reproduces A v exactly.
    Ellipticity is preserved in both directions because embed restricted to
    the essential range is injective.
    """
    alphas = multi_indices(op.n, op.m)
    M = len(alphas)
    S = np.zeros((op.l, op.N * M))
    for a, alpha in enumerate(alphas):
        mat = op.coeff(alpha)
        for v in range(op.N):
            S[:, v * M + a] = mat[:, v]
    embed = np.linalg.pinv(S, rcond=1e-12)
    pi = embed @ S
    coeffs = {alpha: embed @ op.coeff(alpha) for alpha in alphas}
    if all(not c.any() for c in coeffs.values()):
        # keep a representative zero coefficient so construction succeeds
        coeffs = {alphas[0]: np.zeros((op.N * M, op.N))}
    label = (op.name or "operator") + "_gradient_form"
    reduced = DifferentialOperator(op.n, op.N, op.N * M, coeffs, name=label)
    kappa_prime = scipy.linalg.null_space(S)
    return GradientFormReduction(
        reduced_op=reduced,
        pi=pi,
        contract=S,
        embed=embed,
        kappa=embed,
        kappa_prime=kappa_prime,
        lam=np.eye(op.N),
        alphas=alphas,
    )
