"""Linearization of the coupled system about a steady pair, and its
principal eigenvalue.

About a steady pair (w, z) the linearized operator is the 2x2 block

    M = [ A                  -lam * diag(alpha f'(z)) ]
        [ -mu * diag(beta g'(w))                A     ]

with A the discrete negative Laplacian.  Off-diagonal entries of M are
nonpositive, so M perturbs like an M-matrix: at a minimal steady pair its
principal eigenvalue nu1 is positive with a positive eigenvector, and inverse
power iteration on M converges to it.  A nonpositive nu1 (or a sign-changing
eigenvector) means the state under study is not linearly stable; that outcome
is reported as an exception carrying the estimate, since every downstream
certificate needs nu1 > 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import EigenConvergenceError, IndefiniteOperatorError
from .grid import DiscreteOperator, FloatArray, Grid, assemble_laplacian, integrate
from .model import Model, ParamPoint


@dataclass(frozen=True)
class LinearizedOperator:
    """Block linearization with the coupling rows kept for reassembly."""

    grid: Grid
    matrix: sp.csr_matrix
    n_nodes: int
    coupling_fz: FloatArray  # lam * alpha * f'(z) on the nodes
    coupling_gw: FloatArray  # mu * beta * g'(w) on the nodes


def assemble_linearization(grid: Grid, model: Model, params: ParamPoint,
                           w: FloatArray, z: FloatArray, *,
                           op: DiscreteOperator | None = None,
                           coupling_scale: float = 1.0) -> LinearizedOperator:
    """Build the block linearization at the pair (w, z).

    ``coupling_scale`` multiplies both off-diagonal blocks; 0 decouples the
    system into two copies of A (useful as a known-spectrum check).
    """
    if op is None:
        op = assemble_laplacian(grid)
    w = grid.check_field(w, "w")
    z = grid.check_field(z, "z")
    fz = params.lam * model.alpha.sample(grid) * model.f.deriv(z)
    gw = params.mu * model.beta.sample(grid) * model.g.deriv(w)
    a = op.matrix
    matrix = sp.bmat(
        [[a, sp.diags(-coupling_scale * fz)],
         [sp.diags(-coupling_scale * gw), a]],
        format="csr")
    return LinearizedOperator(grid=grid, matrix=matrix, n_nodes=grid.n_total,
                              coupling_fz=fz, coupling_gw=gw)


@dataclass(frozen=True)
class EigenPair:
    """Principal eigenvalue of the linearization with its positive eigenvector."""

    nu1: float
    phi: FloatArray
    psi: FloatArray
    residual: float
    iterations: int


def principal_eigenpair(lin: LinearizedOperator, *,
                        tol: float = 1e-10,
                        max_iter: int = 500) -> EigenPair:
    """Inverse power iteration for the smallest eigenvalue of the block
    linearization.

    Raises IndefiniteOperatorError (with the best estimate attached) when the
    operator is singular, the converged eigenvalue is nonpositive, or the
    eigenvector fails to be positive: all three mean no stability margin.
    Raises EigenConvergenceError when the budget runs out first.

    The returned eigenvector is normalized so quadrature(phi^2 + psi^2) = 1.
    """
    m = lin.matrix.tocsc()
    n2 = m.shape[0]
    try:
        factor = spla.splu(m)
    except RuntimeError as exc:
        raise IndefiniteOperatorError(
            "linearization is numerically singular", nu_estimate=0.0) from exc

    x = np.full(n2, 1.0 / np.sqrt(n2))
    nu = 0.0
    for it in range(1, max_iter + 1):
        y = factor.solve(x)
        norm = float(np.linalg.norm(y))
        if not np.isfinite(norm) or norm == 0.0:
            raise IndefiniteOperatorError(
                "inverse iteration produced a degenerate vector", nu_estimate=0.0)
        # Fix the orientation by the dominant sign so the sign test below is
        # about the eigenvector, not about the iteration's arbitrary flip.
        if y.sum() < 0:
            norm = -norm
        x = y / norm
        nu = float(x @ (m @ x))
        residual = float(np.linalg.norm(m @ x - nu * x)) / max(abs(nu), 1e-30)
        if residual <= tol:
            break
    else:
        raise EigenConvergenceError(
            f"principal eigenpair did not converge in {max_iter} iterations "
            f"(last residual {residual:.3e})")

    if nu <= 0.0:
        raise IndefiniteOperatorError(
            f"principal eigenvalue is not positive (estimate {nu:.6e})",
            nu_estimate=nu)
    if x.min() <= 0.0:
        raise IndefiniteOperatorError(
            f"principal eigenvector is not positive (eigenvalue estimate {nu:.6e})",
            nu_estimate=nu)

    n = lin.n_nodes
    phi, psi = x[:n].copy(), x[n:].copy()
    grid = lin.grid
    # Normalize in the quadrature metric; a second pass lands within an ulp.
    for _ in range(2):
        mass = integrate(phi * phi, grid) + integrate(psi * psi, grid)
        scale = 1.0 / np.sqrt(mass)
        phi *= scale
        psi *= scale
        if mass == 1.0:
            break
    return EigenPair(nu1=nu, phi=phi, psi=psi, residual=residual, iterations=it)
