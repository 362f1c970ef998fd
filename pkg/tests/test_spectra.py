"""Linearized coupled operator and its principal eigenvalue."""

import numpy as np
import pytest

import oracles
from conftest import power2_model
from quenchlab import (
    EigenConvergenceError,
    IndefiniteOperatorError,
    ParamPoint,
    assemble_linearization,
    integrate,
    monotone_minimal_solution,
    principal_eigenpair,
    second_solution_search,
)


def _minimal(stack, lam, mu=None):
    g, op, eig = stack
    params = ParamPoint(lam, lam if mu is None else mu)
    s = monotone_minimal_solution(g, power2_model(), params, op=op,
                                  eigenpair=eig).solution
    return g, op, eig, params, s


def test_decoupled_hook_reduces_to_laplacian(unit99):
    g, op, eig, params, s = _minimal(unit99, 1.0)
    lin = assemble_linearization(g, power2_model(), params, s.w, s.z, op=op,
                                 coupling_scale=0.0)
    pair = principal_eigenpair(lin)
    assert pair.nu1 == pytest.approx(eig[0], rel=1e-8)


def test_block_entries(unit99):
    g, op, eig, params, s = _minimal(unit99, 0.8, 1.1)
    model = power2_model()
    lin = assemble_linearization(g, model, params, s.w, s.z, op=op)
    m = lin.matrix.tocsr()
    n = g.n_total
    assert m.shape == (2 * n, 2 * n)
    alpha = model.alpha.sample(g)
    beta = model.beta.sample(g)
    for i in (0, n // 2, n - 1):
        assert m[i, n + i] == pytest.approx(-0.8 * alpha[i] * model.f.deriv(s.z[i]),
                                            rel=1e-14)
        assert m[n + i, i] == pytest.approx(-1.1 * beta[i] * model.g.deriv(s.w[i]),
                                            rel=1e-14)
    # diagonal blocks are the plain stencil
    diff = abs(m[:n, :n] - op.matrix)
    assert diff.max() == 0.0


def test_matches_dense_oracle(unit99):
    g, op, eig, params, s = _minimal(unit99, 1.0)
    lin = assemble_linearization(g, power2_model(), params, s.w, s.z, op=op)
    pair = principal_eigenpair(lin)
    dense = oracles.dense_principal_eigenvalue(lin.matrix)
    assert abs(pair.nu1 - dense) / abs(dense) <= 1e-10


def test_eigenfunctions_positive_and_normalized(unit99):
    g, op, eig, params, s = _minimal(unit99, 1.2, 0.7)
    lin = assemble_linearization(g, power2_model(), params, s.w, s.z, op=op)
    pair = principal_eigenpair(lin)
    assert pair.nu1 > 0.0
    assert pair.phi.min() > 0.0
    assert pair.psi.min() > 0.0
    mass = integrate(pair.phi ** 2 + pair.psi ** 2, g)
    assert mass == pytest.approx(1.0, abs=1e-12)
    assert pair.residual <= 1e-10


def test_symmetric_case_has_equal_components(unit99):
    g, op, eig, params, s = _minimal(unit99, 1.0)
    lin = assemble_linearization(g, power2_model(), params, s.w, s.z, op=op)
    pair = principal_eigenpair(lin)
    np.testing.assert_allclose(pair.phi, pair.psi, atol=1e-10)


def test_stability_margin_shrinks_toward_fold(unit99):
    g, op, eig = unit99
    nus = []
    for lam in (0.4, 0.8, 1.2):
        _, _, _, params, s = _minimal(unit99, lam)
        lin = assemble_linearization(g, power2_model(), params, s.w, s.z, op=op)
        nus.append(principal_eigenpair(lin).nu1)
    assert nus[0] > nus[1] + 1e-8
    assert nus[1] > nus[2] + 1e-8
    assert nus[2] > 0.0


def test_second_branch_is_indefinite(unit199):
    g, op, eig = unit199
    params = ParamPoint(1.0, 1.0)
    minimal = monotone_minimal_solution(g, power2_model(), params, op=op,
                                        eigenpair=eig).solution
    second = second_solution_search(g, power2_model(), params, minimal, op=op)
    assert second is not None
    lin = assemble_linearization(g, power2_model(), params, second.w, second.z,
                                 op=op)
    with pytest.raises(IndefiniteOperatorError) as err:
        principal_eigenpair(lin)
    assert err.value.nu_estimate < 0.0


def test_budget_exhaustion_raises(unit99):
    g, op, eig, params, s = _minimal(unit99, 1.2)
    lin = assemble_linearization(g, power2_model(), params, s.w, s.z, op=op)
    with pytest.raises(EigenConvergenceError):
        principal_eigenpair(lin, tol=1e-14, max_iter=1)
