"""Direct-method minimisation of int F(x, u, A u) dx on grids.

Torus problems apply the operator spectrally; Dirichlet box problems use
second-order centred differences at the staggered dual-cell centres with
the boundary node layer frozen to the datum, which makes affine data
exactly critical.  Descent is limited-memory quasi-Newton with Armijo
backtracking and never touches second derivatives of the density.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from .errors import (DimensionMismatch, MalformedDefinition, NonFiniteEnergy)
from .fields import (GridField, apply_operator, apply_operator_adjoint,
                     bump_window, random_band_limited_field, torus_points)
from .operators import DifferentialOperator
from .util import make_rng, smoothstep
from .variational import Integrand


@dataclass(frozen=True)
class EnergyProblem:
    op: DifferentialOperator
    integrand: Integrand
    domain: str                      # "torus" | "dirichlet"
    shape: tuple
    datum: GridField | None = None

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))
        if len(self.shape) != self.op.n:
            raise DimensionMismatch("problem shape does not match the operator dimension")
        if self.integrand.zdim != self.op.l:
            raise DimensionMismatch(
                f"integrand takes z in R^{self.integrand.zdim}, operator produces R^{self.op.l}"
            )
        if self.domain == "dirichlet":
            if self.datum is None:
                raise MalformedDefinition("Dirichlet problems need a boundary datum field")
            if self.datum.values.shape != (self.op.N,) + self.shape:
                raise DimensionMismatch("datum shape does not match (N, *shape)")
        elif self.domain != "torus":
            raise MalformedDefinition(f"unknown domain type {self.domain!r}")


# ---------------------------------------------------------------------------
# staggered box operator

def _diff_matrix(S: int, h: float) -> scipy.sparse.csr_matrix:
    return scipy.sparse.diags([-np.ones(S - 1) / h, np.ones(S - 1) / h],
                              offsets=[0, 1], shape=(S - 1, S)).tocsr()


def _avg_matrix(S: int) -> scipy.sparse.csr_matrix:
    return scipy.sparse.diags([0.5 * np.ones(S - 1), 0.5 * np.ones(S - 1)],
                              offsets=[0, 1], shape=(S - 1, S)).tocsr()


def assemble_staggered_operator(op: DifferentialOperator, shape,
                                spacing) -> scipy.sparse.csr_matrix:
    """Sparse discrete A at dual-cell centres: rows (l, dual), cols (N, nodes)."""
    if op.m != 1:
        raise DimensionMismatch("box discretisation covers first-order operators")
    n = op.n
    mats = []
    for j in range(n):
        pieces = [_diff_matrix(shape[a], spacing[a]) if a == j else _avg_matrix(shape[a])
                  for a in range(n)]
        Dj = reduce(lambda a, b: scipy.sparse.kron(a, b, format="csr"), pieces)
        alpha = tuple(1 if a == j else 0 for a in range(n))
        Aj = scipy.sparse.csr_matrix(op.coeff(alpha))
        mats.append(scipy.sparse.kron(Aj, Dj, format="csr"))
    return sum(mats[1:], start=mats[0])


def assemble_dual_average(shape) -> scipy.sparse.csr_matrix:
    pieces = [_avg_matrix(s) for s in shape]
    return reduce(lambda a, b: scipy.sparse.kron(a, b, format="csr"), pieces)


def staggered_operator_values(op: DifferentialOperator, u: GridField) -> np.ndarray:
    """A u at dual-cell centres of a box field, shape (l, *dual)."""
    A = assemble_staggered_operator(op, u.shape, u.spacing)
    dual = tuple(s - 1 for s in u.shape)
    return (A @ u.values.ravel()).reshape((op.l,) + dual)


class _TorusDiscretization:
    def __init__(self, problem: EnergyProblem):
        self.problem = problem
        self.op = problem.op
        self.shape = problem.shape
        self.cell_volume = float(np.prod([1.0 / s for s in self.shape]))
        self.point_volume = self.cell_volume
        self._x = None
        self.free = np.ones((self.op.N,) + self.shape, dtype=bool)

    def initial_guess(self) -> np.ndarray:
        if self.problem.datum is not None:
            return self.problem.datum.values.copy()
        return np.zeros((self.op.N,) + self.shape)

    def pack(self, u_full: np.ndarray) -> np.ndarray:
        return u_full.ravel().copy()

    def unpack(self, x: np.ndarray) -> np.ndarray:
        return x.reshape((self.op.N,) + self.shape)

    def operator_values(self, u_full: np.ndarray) -> np.ndarray:
        return np.moveaxis(apply_operator(self.op, u_full), 0, -1)

    def _points(self):
        if self._x is None:
            self._x = np.moveaxis(torus_points(self.shape), 0, -1)
        return self._x

    def density(self, F: Integrand, u_full: np.ndarray, z: np.ndarray) -> np.ndarray:
        if F.autonomous:
            return F.f(None, None, z)
        return F.f(self._points(), np.moveaxis(u_full, 0, -1), z)

    def energy_gradient(self, x: np.ndarray):
        F = self.problem.integrand
        u = self.unpack(x)
        z = self.operator_values(u)
        dens = self.density(F, u, z)
        energy = float(np.sum(dens) * self.cell_volume)
        if F.autonomous:
            gz = F.fz(None, None, z)
        else:
            gz = F.fz(self._points(), np.moveaxis(u, 0, -1), z)
        grad = apply_operator_adjoint(self.op, np.moveaxis(gz, -1, 0)) * self.cell_volume
        if F.fy is not None:
            gy = F.fy(self._points() if not F.autonomous else None,
                      np.moveaxis(u, 0, -1), z)
            grad = grad + np.moveaxis(gy, -1, 0) * self.cell_volume
        return energy, grad.ravel()

    def random_test_direction(self, rng) -> np.ndarray:
        fld = random_band_limited_field(self.op.N, self.shape, 3, rng)
        return fld.values * bump_window(self.shape)[None, ...]

    def to_field(self, u_full: np.ndarray) -> GridField:
        return GridField(values=u_full, kind="torus")


class _BoxDiscretization:
    def __init__(self, problem: EnergyProblem):
        self.problem = problem
        self.op = problem.op
        self.shape = problem.shape
        if any(s < 4 for s in self.shape):
            raise DimensionMismatch("box grids need at least 4 nodes per axis")
        self.spacing = tuple(1.0 / (s - 1) for s in self.shape)
        self.dual = tuple(s - 1 for s in self.shape)
        self.A = assemble_staggered_operator(self.op, self.shape, self.spacing)
        self.avg = assemble_dual_average(self.shape)
        self.cell_volume = float(np.prod(self.spacing))
        self.point_volume = self.cell_volume
        frozen = np.zeros(self.shape, dtype=bool)
        for axis in range(len(self.shape)):
            sl = [slice(None)] * len(self.shape)
            sl[axis] = 0
            frozen[tuple(sl)] = True
            sl[axis] = -1
            frozen[tuple(sl)] = True
        self.free = np.broadcast_to(~frozen, (self.op.N,) + self.shape).copy()
        axes = [(np.arange(d) + 0.5) * h for d, h in zip(self.dual, self.spacing)]
        self._x = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def initial_guess(self) -> np.ndarray:
        return self.problem.datum.values.copy()

    def pack(self, u_full: np.ndarray) -> np.ndarray:
        return u_full[self.free].copy()

    def unpack(self, x: np.ndarray) -> np.ndarray:
        u = self.problem.datum.values.copy()
        u[self.free] = x
        return u

    def operator_values(self, u_full: np.ndarray) -> np.ndarray:
        z = (self.A @ u_full.ravel()).reshape((self.op.l,) + self.dual)
        return np.moveaxis(z, 0, -1)

    def _dual_values(self, u_full: np.ndarray) -> np.ndarray:
        out = np.empty((self.op.N,) + self.dual)
        for k in range(self.op.N):
            out[k] = (self.avg @ u_full[k].ravel()).reshape(self.dual)
        return np.moveaxis(out, 0, -1)

    def density(self, F: Integrand, u_full: np.ndarray, z: np.ndarray) -> np.ndarray:
        if F.autonomous:
            return F.f(None, None, z)
        return F.f(self._x, self._dual_values(u_full), z)

    def energy_gradient(self, x: np.ndarray):
        F = self.problem.integrand
        u = self.unpack(x)
        z = self.operator_values(u)
        dens = self.density(F, u, z)
        energy = float(np.sum(dens) * self.cell_volume)
        if F.autonomous:
            gz = F.fz(None, None, z)
        else:
            gz = F.fz(self._x, self._dual_values(u), z)
        gzflat = np.moveaxis(gz, -1, 0).ravel()
        grad = (self.A.T @ gzflat).reshape((self.op.N,) + self.shape) * self.cell_volume
        if F.fy is not None:
            gy = np.moveaxis(F.fy(self._x, self._dual_values(u), z), -1, 0)
            for k in range(self.op.N):
                grad[k] += (self.avg.T @ gy[k].ravel()).reshape(self.shape) * self.cell_volume
        return energy, grad[self.free]

    def random_test_direction(self, rng) -> np.ndarray:
        vals = rng.standard_normal((self.op.N,) + self.shape)
        w = np.ones(self.shape)
        for axis, s in enumerate(self.shape):
            t = np.arange(s) / (s - 1.0)
            prof = smoothstep(t / 0.25) * smoothstep((1.0 - t) / 0.25)
            sl = [1] * len(self.shape)
            sl[axis] = s
            w = w * prof.reshape(sl)
        out = vals * w[None, ...]
        out[~self.free] = 0.0
        return out

    def to_field(self, u_full: np.ndarray) -> GridField:
        return GridField(values=u_full, kind="box", spacing=self.spacing,
                         origin=(0.0,) * len(self.shape))


def problem_discretization(problem: EnergyProblem):
    if problem.domain == "torus":
        return _TorusDiscretization(problem)
    return _BoxDiscretization(problem)


# ---------------------------------------------------------------------------
# limited-memory quasi-Newton with Armijo backtracking

@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 1000
    tol: float = 1e-8
    memory: int = 10
    armijo: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60
    seed: int = 0


@dataclass(frozen=True)
class MinimizeResult:
    u: GridField
    energy: float
    trace: np.ndarray
    converged: bool
    iterations: int
    grad_norm: float
    reason: str


def _two_loop(grad, s_list, y_list):
    q = grad.copy()
    alphas = []
    for s, y in zip(reversed(s_list), reversed(y_list)):
        rho = 1.0 / float(np.dot(y, s))
        a = rho * float(np.dot(s, q))
        alphas.append(a)
        q -= a * y
    if s_list:
        s, y = s_list[-1], y_list[-1]
        q *= float(np.dot(s, y)) / float(np.dot(y, y))
    for (s, y), a in zip(zip(s_list, y_list), reversed(alphas)):
        rho = 1.0 / float(np.dot(y, s))
        b = rho * float(np.dot(y, q))
        q += (a - b) * s
    return q


def minimize(problem: EnergyProblem, config: SolverConfig | None = None,
             x0: np.ndarray | None = None) -> MinimizeResult:
    """Minimise the discrete energy; the accepted-energy trace is monotone.

    Terminates when the gradient sup-norm drops below tol * (1 + |energy|)
    or at the iteration cap (best iterate returned, flagged).  Raises
    NonFiniteEnergy if the energy or gradient is NaN/inf at the current
    iterate and no finite step can be found.
    """
    cfg = config or SolverConfig()
    disc = problem_discretization(problem)
    x = disc.pack(disc.initial_guess()) if x0 is None else np.asarray(x0, dtype=float).copy()
    f, g = disc.energy_gradient(x)
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise NonFiniteEnergy("energy or gradient not finite at the starting point")
    trace = [f]
    s_list, y_list = [], []
    reason = "iteration_cap"
    converged = False
    it = 0
    for it in range(1, cfg.max_iter + 1):
        gnorm = float(np.max(np.abs(g))) if g.size else 0.0
        if gnorm <= cfg.tol * (1.0 + abs(f)):
            converged, reason = True, "gradient_tolerance"
            break
        d = -_two_loop(g, s_list, y_list)
        slope = float(np.dot(g, d))
        if slope >= 0.0:
            d = -g
            slope = -float(np.dot(g, g))
            s_list, y_list = [], []
        step = 1.0 if s_list else 1.0 / (1.0 + np.sqrt(-slope))
        accepted = False
        for _ in range(cfg.max_backtracks):
            xn = x + step * d
            fn, gn = disc.energy_gradient(xn)
            if np.isfinite(fn) and np.all(np.isfinite(gn)) \
                    and fn <= f + cfg.armijo * step * slope:
                accepted = True
                break
            step *= cfg.backtrack
        if not accepted:
            probe = x + 1e-18 * d
            fp, _ = disc.energy_gradient(probe)
            if not np.isfinite(fp):
                raise NonFiniteEnergy("line search found no finite energy value")
            reason = "line_search_stall"
            break
        s = xn - x
        yv = gn - g
        if float(np.dot(s, yv)) > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
            s_list.append(s)
            y_list.append(yv)
            if len(s_list) > cfg.memory:
                s_list.pop(0)
                y_list.pop(0)
        x, f, g = xn, fn, gn
        trace.append(f)
    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    if not converged and gnorm <= cfg.tol * (1.0 + abs(f)):
        converged, reason = True, "gradient_tolerance"
    u_full = disc.unpack(x)
    return MinimizeResult(u=disc.to_field(u_full), energy=f, trace=np.asarray(trace),
                          converged=converged, iterations=it,
                          grad_norm=gnorm, reason=reason)


def solve_quadratic_dirichlet(problem: EnergyProblem) -> MinimizeResult:
    """Direct sparse solve of the normal equations for F(z) = |z|^2 on a box.

    Serves as the independent oracle for quadratic energies: the discrete
    minimiser solves (A^T A)|free u = -(A^T A)|frozen u0.
    """
    disc = _BoxDiscretization(problem)
    freeflat = disc.free.ravel()
    K = (disc.A.T @ disc.A).tocsr()
    u0 = disc.initial_guess().ravel()
    rhs = -(K[:, ~freeflat] @ u0[~freeflat])
    Kff = K[freeflat][:, freeflat]
    sol = scipy.sparse.linalg.spsolve(Kff.tocsc(), rhs[freeflat])
    u = u0.copy()
    u[freeflat] = sol
    z = disc.A @ u
    energy = float(np.sum(z * z) * disc.cell_volume)
    u_full = u.reshape((problem.op.N,) + problem.shape)
    return MinimizeResult(u=disc.to_field(u_full), energy=energy,
                          trace=np.array([energy]), converged=True,
                          iterations=0, grad_norm=0.0, reason="direct_solve")
