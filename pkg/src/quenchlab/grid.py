"""Uniform Dirichlet grids, the discrete Laplacian, and the linear algebra under it.

Only interior nodes are stored; homogeneous Dirichlet boundary values are
implicit everywhere.  A field is a plain float64 array of length
``grid.n_total`` (2D fields are flattened row-major: y index outer, x inner).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import EigenConvergenceError, SolverBreakdownError

FloatArray = np.ndarray

DEFAULT_TOL_LIN = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform grid of interior nodes on an interval or axis-aligned rectangle.

    Attributes
    ----------
    dimension : 1 or 2.
    extents : per-axis (low, high) endpoints of the open domain.
    n_interior : per-axis interior node counts; spacing is
        ``h = (high - low) / (n_interior + 1)`` so nodes sit strictly inside.
    """

    dimension: int
    extents: tuple[tuple[float, float], ...]
    n_interior: tuple[int, ...]

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        if len(self.extents) != self.dimension or len(self.n_interior) != self.dimension:
            raise ValueError("extents/n_interior length must match dimension")
        for (lo, hi), n in zip(self.extents, self.n_interior):
            if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
                raise ValueError(f"invalid extent ({lo}, {hi})")
            if n < 1:
                raise ValueError(f"need at least one interior node per axis, got {n}")

    @property
    def h(self) -> tuple[float, ...]:
        return tuple((hi - lo) / (n + 1) for (lo, hi), n in zip(self.extents, self.n_interior))

    @property
    def n_total(self) -> int:
        return int(np.prod(self.n_interior))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @cached_property
    def axes(self) -> tuple[FloatArray, ...]:
        """Interior node coordinates along each axis."""
        out = []
        for (lo, hi), n, hh in zip(self.extents, self.n_interior, self.h):
            out.append(lo + hh * np.arange(1, n + 1))
        return tuple(out)

    def coordinates(self) -> FloatArray:
        """All interior node coordinates, shape (n_total, dimension)."""
        if self.dimension == 1:
            return self.axes[0][:, None]
        xs, ys = self.axes
        gy, gx = np.meshgrid(ys, xs, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])

    @cached_property
    def quad_weights(self) -> FloatArray:
        # Composite trapezoid on the interior span plus rectangle end cells:
        # weight h per node, 3h/2 at the first/last interior node of each axis.
        # Integrates constants to the exact domain measure and is O(h^2) for
        # C^2 integrands, vanishing on the boundary or not.
        per_axis = []
        for n, hh in zip(self.n_interior, self.h):
            w = np.full(n, hh)
            w[0] += hh / 2
            w[-1] += hh / 2
            per_axis.append(w)
        if self.dimension == 1:
            return per_axis[0]
        wx, wy = per_axis
        return np.outer(wy, wx).ravel()

    def boundary_distance(self) -> FloatArray:
        """Distance from each interior node to the domain boundary."""
        coords = self.coordinates()
        dist = np.full(self.n_total, np.inf)
        for axis, (lo, hi) in enumerate(self.extents):
            dist = np.minimum(dist, coords[:, axis] - lo)
            dist = np.minimum(dist, hi - coords[:, axis])
        return dist

    def check_field(self, field: FloatArray, name: str = "field") -> FloatArray:
        arr = np.asarray(field, dtype=float)
        if arr.shape != (self.n_total,):
            raise ValueError(
                f"{name} has shape {arr.shape}, expected ({self.n_total},) for this grid"
            )
        if not np.isfinite(arr).all():
            raise ValueError(f"{name} contains non-finite entries")
        return arr


def interval(a: float, b: float, n_interior: int) -> Grid:
    """Open interval (a, b) with n_interior uniform interior nodes."""
    return Grid(dimension=1, extents=((float(a), float(b)),), n_interior=(int(n_interior),))


def rectangle(xspan: tuple[float, float], yspan: tuple[float, float],
              nx: int, ny: int) -> Grid:
    """Open axis-aligned rectangle with nx-by-ny interior nodes."""
    return Grid(
        dimension=2,
        extents=((float(xspan[0]), float(xspan[1])), (float(yspan[0]), float(yspan[1]))),
        n_interior=(int(nx), int(ny)),
    )


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """A symmetric positive-definite banded operator tied to a grid.

    Wraps the 3-point (1D) or 5-point (2D) Dirichlet stencil, or a positive
    shift of it; ``matrix`` acts on flattened interior fields.
    """

    grid: Grid
    matrix: sp.csr_matrix

    def apply(self, field: FloatArray) -> FloatArray:
        return self.matrix @ self.grid.check_field(field)

    @cached_property
    def norm_inf(self) -> float:
        return float(abs(self.matrix).sum(axis=1).max())

    @cached_property
    def _banded_factor(self):
        # 1D only: Cholesky of the (upper) banded form, computed once and reused.
        n = self.grid.n_total
        ab = np.zeros((2, n))
        ab[1, :] = self.matrix.diagonal()
        ab[0, 1:] = self.matrix.diagonal(1)
        return sla.cholesky_banded(ab, lower=False)

    @cached_property
    def _jacobi(self) -> FloatArray:
        return 1.0 / self.matrix.diagonal()

    def shifted(self, identity_coeff: float, operator_coeff: float) -> "DiscreteOperator":
        """Return identity_coeff*I + operator_coeff*A as an operator on the same grid."""
        mat = (identity_coeff * sp.identity(self.grid.n_total, format="csr")
               + operator_coeff * self.matrix).tocsr()
        return DiscreteOperator(grid=self.grid, matrix=mat)


def assemble_laplacian(grid: Grid) -> DiscreteOperator:
    """Negative Laplacian with implicit zero Dirichlet data.

    1D: tridiagonal [-1, 2, -1] / h^2.  2D: the 5-point cross stencil,
    assembled as a Kronecker sum of the per-axis tridiagonal operators.
    """

    def tridiag(n: int, hh: float) -> sp.csr_matrix:
        main = np.full(n, 2.0 / hh**2)
        off = np.full(n - 1, -1.0 / hh**2)
        return sp.diags([off, main, off], [-1, 0, 1], format="csr")

    if grid.dimension == 1:
        mat = tridiag(grid.n_interior[0], grid.h[0])
    else:
        nx, ny = grid.n_interior
        hx, hy = grid.h
        mat = (sp.kron(sp.identity(ny), tridiag(nx, hx))
               + sp.kron(tridiag(ny, hy), sp.identity(nx))).tocsr()
    return DiscreteOperator(grid=grid, matrix=mat)


def _backward_error(op: DiscreteOperator, x: FloatArray, b: FloatArray) -> float:
    # Normwise backward error ||Ax-b|| / (||A|| ||x|| + ||b||), the honest
    # stopping metric for a direct solve: ||Ax-b||/||b|| alone is bounded below
    # by cond(A)*eps and is unreachable on fine grids.
    r = op.matrix @ x - b
    denom = op.norm_inf * np.linalg.norm(x) + np.linalg.norm(b)
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(r) / denom)


def solve_poisson(op: DiscreteOperator, rhs: FloatArray, *,
                  tol_lin: float = DEFAULT_TOL_LIN,
                  max_iter: int | None = None) -> FloatArray:
    """Solve op @ u = rhs for the interior field u.

    1D uses the cached banded Cholesky factorization (with one iterative
    refinement pass if needed); 2D uses Jacobi-preconditioned conjugate
    gradients.  Raises SolverBreakdownError if the normwise backward error
    cannot be brought below tol_lin.
    """
    g = op.grid
    b = g.check_field(rhs, "rhs")
    if not np.all(np.isfinite(b)):
        raise ValueError("rhs contains non-finite entries")
    if not b.any():
        return np.zeros(g.n_total)

    if g.dimension == 1:
        x = sla.cho_solve_banded((op._banded_factor, False), b)
        if _backward_error(op, x, b) > tol_lin:
            x = x + sla.cho_solve_banded((op._banded_factor, False), b - op.matrix @ x)
    else:
        if max_iter is None:
            max_iter = 100 * g.n_total
        M = spla.LinearOperator(op.matrix.shape, matvec=lambda v: op._jacobi * v)
        x, info = spla.cg(op.matrix, b, rtol=tol_lin, atol=0.0, maxiter=max_iter, M=M)
        if info != 0:
            raise SolverBreakdownError(
                f"conjugate gradients stopped with info={info} before reaching "
                f"tol_lin={tol_lin:g}"
            )

    err = _backward_error(op, x, b)
    if err > tol_lin:
        raise SolverBreakdownError(
            f"linear solve backward error {err:.3e} exceeds tol_lin={tol_lin:g}"
        )
    return x


def integrate(field: FloatArray, grid: Grid) -> float:
    """Quadrature of a field over the domain (boundary values implicitly 0)."""
    arr = grid.check_field(field)
    return float(np.dot(grid.quad_weights, arr))


def l2_norm(field: FloatArray, grid: Grid) -> float:
    arr = grid.check_field(field)
    return float(math.sqrt(np.dot(grid.quad_weights, arr * arr)))


def gradient_inner(op: DiscreteOperator, u: FloatArray, v: FloatArray) -> float:
    """Quadrature of grad(u) . grad(v) with one-sided differences and zero boundary.

    By summation by parts this equals cell_volume * u^T A v exactly, which is
    how it is evaluated.
    """
    return op.grid.cell_volume * float(np.dot(u, op.apply(v)))


def principal_laplacian_eigenpair(op: DiscreteOperator, *,
                                  tol: float = 1e-10,
                                  max_iter: int = 500) -> tuple[float, FloatArray]:
    """Smallest eigenvalue and positive eigenfunction of the discrete operator.

    Inverse power iteration with the positive (Perron) orientation enforced at
    every step.  The returned eigenfunction is strictly positive and normalized
    so its quadrature equals 1; the relative eigen-residual is at most tol.
    """
    g = op.grid
    x = np.full(g.n_total, 1.0 / math.sqrt(g.n_total))
    lam = math.nan
    for _ in range(max_iter):
        y = solve_poisson(op, x)
        np.maximum(y, 0.0, out=y)  # inverse of an M-matrix is nonnegative; clip sign noise
        nrm = np.linalg.norm(y)
        if nrm == 0.0 or not np.isfinite(nrm):
            raise EigenConvergenceError("inverse power iteration collapsed")
        x = y / nrm
        ax = op.matrix @ x
        lam = float(np.dot(x, ax))
        residual = float(np.linalg.norm(ax - lam * x)) / lam
        if residual <= tol:
            break
    else:
        raise EigenConvergenceError(
            f"eigen-residual did not reach {tol:g} within {max_iter} iterations"
        )
    if x.min() <= 0.0:
        raise EigenConvergenceError("principal eigenfunction lost strict positivity")

    phi = x / integrate(x, g)
    for _ in range(4):
        total = integrate(phi, g)
        if total == 1.0:
            break
        phi = phi / total
    return lam, phi
