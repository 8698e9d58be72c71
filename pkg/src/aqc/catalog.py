"""Builtin operator catalog and the JSON operator definition format.

Matrix-valued targets use the flattened full n x n matrix space so the
Euclidean norm on coefficients coincides with the Frobenius norm of the
matrix; exterior-algebra operators use the lexicographic basis of the
wedge powers.
"""
from __future__ import annotations

import itertools
import json

import numpy as np

from .errors import DimensionMismatch, MalformedDefinition
from .operators import DifferentialOperator


def gradient(n: int = 2, components: int = 1) -> DifferentialOperator:
    """D on R^components-valued fields; target layout (k, j) -> k*n + j."""
    N, l = components, components * n
    coeffs = {}
    for j in range(n):
        A = np.zeros((l, N))
        for k in range(N):
            A[k * n + j, k] = 1.0
        alpha = tuple(1 if a == j else 0 for a in range(n))
        coeffs[alpha] = A
    return DifferentialOperator(n, N, l, coeffs, name="gradient")


def _matrix_index(n: int, a: int, b: int) -> int:
    return a * n + b


def symmetric_gradient(n: int = 2) -> DifferentialOperator:
    """eps(u) = (Du + Du^T)/2, valued in flattened n x n matrices."""
    N, l = n, n * n
    coeffs = {}
    for j in range(n):
        A = np.zeros((l, N))
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    val = 0.5 * ((j == a) * (b == c) + (j == b) * (a == c))
                    if val:
                        A[_matrix_index(n, a, b), c] += val
        alpha = tuple(1 if t == j else 0 for t in range(n))
        coeffs[alpha] = A
    return DifferentialOperator(n, N, l, coeffs, name="symmetric_gradient")


def tracefree_symmetric_gradient(n: int = 2) -> DifferentialOperator:
    """eps(u) - div(u)/n * Id; the zero operator when n = 1."""
    base = symmetric_gradient(n)
    coeffs = {}
    for alpha, A in base.coeffs.items():
        j = alpha.index(1)
        B = A.copy()
        for a in range(n):
            B[_matrix_index(n, a, a), j] -= 1.0 / n
        coeffs[alpha] = B
    return DifferentialOperator(n, n, n * n, coeffs, name="tracefree_symmetric_gradient")


def curl(n: int = 3) -> DifferentialOperator:
    """Vector curl for n=3; the scalar rotation d1 u2 - d2 u1 for n=2."""
    if n == 3:
        coeffs = {}
        for j in range(3):
            e = np.zeros(3)
            e[j] = 1.0
            A = np.zeros((3, 3))
            for c in range(3):
                v = np.zeros(3)
                v[c] = 1.0
                A[:, c] = np.cross(e, v)
            alpha = tuple(1 if t == j else 0 for t in range(3))
            coeffs[alpha] = A
        return DifferentialOperator(3, 3, 3, coeffs, name="curl")
    if n == 2:
        coeffs = {
            (1, 0): np.array([[0.0, 1.0]]),
            (0, 1): np.array([[-1.0, 0.0]]),
        }
        return DifferentialOperator(2, 2, 1, coeffs, name="curl")
    raise DimensionMismatch("curl is provided for n in {2, 3}")


def divergence(n: int = 3) -> DifferentialOperator:
    coeffs = {}
    for j in range(n):
        A = np.zeros((1, n))
        A[0, j] = 1.0
        alpha = tuple(1 if t == j else 0 for t in range(n))
        coeffs[alpha] = A
    return DifferentialOperator(n, n, 1, coeffs, name="divergence")


def div_curl() -> DifferentialOperator:
    """(div u, curl u) on R^3-valued fields; divergence row first."""
    c = curl(3)
    coeffs = {}
    for j in range(3):
        alpha = tuple(1 if t == j else 0 for t in range(3))
        A = np.zeros((4, 3))
        A[0, j] = 1.0
        A[1:, :] = c.coeff(alpha)
        coeffs[alpha] = A
    return DifferentialOperator(3, 3, 4, coeffs, name="div_curl")


def _wedge_basis(n: int, ell: int):
    return list(itertools.combinations(range(n), ell))


def _wedge_matrix(n: int, ell: int, j: int) -> np.ndarray:
    """Matrix of e_j ^ . : wedge^ell -> wedge^(ell+1)."""
    src = _wedge_basis(n, ell)
    dst = _wedge_basis(n, ell + 1)
    idx = {I: i for i, I in enumerate(dst)}
    A = np.zeros((len(dst), len(src)))
    for c, I in enumerate(src):
        if j in I:
            continue
        pos = sum(1 for i in I if i < j)
        J = tuple(sorted(I + (j,)))
        A[idx[J], c] = (-1.0) ** pos
    return A


def _contract_matrix(n: int, ell: int, j: int) -> np.ndarray:
    """Matrix of the interior product with e_j: wedge^ell -> wedge^(ell-1)."""
    src = _wedge_basis(n, ell)
    dst = _wedge_basis(n, ell - 1)
    idx = {I: i for i, I in enumerate(dst)}
    A = np.zeros((len(dst), len(src)))
    for c, I in enumerate(src):
        if j not in I:
            continue
        k = I.index(j)
        J = I[:k] + I[k + 1:]
        A[idx[J], c] = (-1.0) ** k
    return A


def exterior_derivative_pair(n: int = 3, ell: int = 1) -> DifferentialOperator:
    """(d, d*) acting on ell-forms; target = wedge^(ell+1) + wedge^(ell-1)."""
    if not 1 <= ell <= n - 1:
        raise DimensionMismatch("need 1 <= ell <= n-1")
    dim_v = len(_wedge_basis(n, ell))
    dim_up = len(_wedge_basis(n, ell + 1))
    dim_dn = len(_wedge_basis(n, ell - 1))
    l = dim_up + dim_dn
    coeffs = {}
    for j in range(n):
        A = np.zeros((l, dim_v))
        A[:dim_up, :] = _wedge_matrix(n, ell, j)
        A[dim_up:, :] = _contract_matrix(n, ell, j)
        alpha = tuple(1 if t == j else 0 for t in range(n))
        coeffs[alpha] = A
    return DifferentialOperator(n, dim_v, l, coeffs, name="exterior_derivative_pair")


def split_laplace_beltrami(n: int = 2, ell: int = 1) -> DifferentialOperator:
    """Second-order (d d* u, d* d u) on ell-forms; elliptic by the Cartan identity."""
    if n < 2 or not 1 <= ell <= n - 1:
        raise DimensionMismatch("need n >= 2 and 1 <= ell <= n-1")
    dim_v = len(_wedge_basis(n, ell))
    l = 2 * dim_v
    blocks = {}
    for i in range(n):
        for j in range(n):
            up = _wedge_matrix(n, ell - 1, i) @ _contract_matrix(n, ell, j)
            dn = _contract_matrix(n, ell + 1, i) @ _wedge_matrix(n, ell, j)
            B = np.zeros((l, dim_v))
            B[:dim_v, :] = up
            B[dim_v:, :] = dn
            blocks[(i, j)] = B
    coeffs = {}
    for i in range(n):
        for j in range(i, n):
            alpha = tuple((t == i) + (t == j) for t in range(n))
            coeffs[alpha] = blocks[(i, j)] if i == j else blocks[(i, j)] + blocks[(j, i)]
    return DifferentialOperator(n, dim_v, l, coeffs, name="split_laplace_beltrami")


def saint_venant() -> DifferentialOperator:
    """Second-order compatibility annihilator of the symmetric gradient, n=2.

    Acts on flattened 2x2 matrix fields (w11, w12, w21, w22).  The first row
    is the classical compatibility condition symmetrised in w12/w21; the
    remaining rows annihilate the antisymmetric part at second order so the
    symbol kernel matches the image of the symmetric-gradient symbol on the
    full matrix space.
    """
    r1 = {  # d22 w11 + d11 w22 - d12 w12 - d12 w21
        (2, 0): np.array([0.0, 0.0, 0.0, 1.0]),
        (1, 1): np.array([0.0, -1.0, -1.0, 0.0]),
        (0, 2): np.array([1.0, 0.0, 0.0, 0.0]),
    }
    anti = np.array([0.0, 1.0, -1.0, 0.0])
    coeffs = {}
    for alpha in [(2, 0), (1, 1), (0, 2)]:
        A = np.zeros((4, 4))
        A[0, :] = r1[alpha]
        row = {(2, 0): 1, (1, 1): 2, (0, 2): 3}[alpha]
        A[row, :] = anti
        coeffs[alpha] = A
    return DifferentialOperator(2, 4, 4, coeffs, name="saint_venant")


BUILTINS = {
    "gradient": gradient,
    "symmetric_gradient": symmetric_gradient,
    "tracefree_symmetric_gradient": tracefree_symmetric_gradient,
    "exterior_derivative_pair": exterior_derivative_pair,
    "div_curl": lambda: div_curl(),
    "split_laplace_beltrami": split_laplace_beltrami,
    "curl": curl,
    "divergence": divergence,
    "saint_venant": lambda: saint_venant(),
}

# convenience alias: the potential of the divergence annihilator
ALIASES = {"divergence-potential-curl": ("curl", (3,))}

BUILTIN_NAMES = tuple(BUILTINS)


def builtin_operator(spec: str) -> DifferentialOperator:
    """Resolve 'name' or 'name:arg1[:arg2]' from the builtin catalog."""
    parts = spec.split(":")
    name, args = parts[0], parts[1:]
    if name in ALIASES:
        name, defaults = ALIASES[name]
        if not args:
            args = [str(a) for a in defaults]
    if name not in BUILTINS:
        raise MalformedDefinition(f"unknown builtin operator {name!r}; known: {sorted(BUILTINS)}")
    try:
        return BUILTINS[name](*(int(a) for a in args))
    except TypeError as exc:
        raise MalformedDefinition(f"bad arguments {args} for builtin {name!r}: {exc}") from exc


def operator_to_json(op: DifferentialOperator) -> dict:
    return {
        "name": op.name or "operator",
        "n": op.n,
        "N": op.N,
        "l": op.l,
        "m": op.m,
        "coefficients": [
            {"alpha": list(alpha), "matrix": mat.tolist()} for alpha, mat in op.coeffs.items()
        ],
    }


def operator_from_json(data: dict) -> DifferentialOperator:
    try:
        n, N, l, m = int(data["n"]), int(data["N"]), int(data["l"]), int(data["m"])
        entries = data["coefficients"]
        coeffs = {tuple(e["alpha"]): np.asarray(e["matrix"], dtype=float) for e in entries}
        name = data.get("name")
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedDefinition(f"bad operator definition: {exc}") from exc
    op = DifferentialOperator(n, N, l, coeffs, name=name)
    if op.m != m:
        raise MalformedDefinition(f"declared order {m} but coefficients have order {op.m}")
    return op


def load_operator(path) -> DifferentialOperator:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise MalformedDefinition(
                f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
            ) from exc
    return operator_from_json(data)


def save_operator(op: DifferentialOperator, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(operator_to_json(op), fh, indent=2, sort_keys=True)
        fh.write("\n")
