import random

import numpy as np
import pytest

from conftest import modular
from wzw_invariants.fusion import (
    NonIntegralError,
    all_weights,
    fusion_generators,
    fusion_kac_walton,
    fusion_lambda1,
    fusion_product,
    fusion_verlinde,
    lambda1_neighbours,
    partition_of,
    verlinde_tensor,
    weight_multiplicities,
    weyl_dimension,
)
from wzw_invariants.modular_data import lambda_gen, mu_gen
from wzw_invariants.weights import AlgebraContext, apply_J, enumerate_p_plus, n_nonzero, vacuum


def test_adjoint_multiplicities():
    for r in (2, 3, 5):
        adj = (2,) + (1,) * (r - 1) + (0,)
        m = weight_multiplicities(adj)
        assert m == {adj: 1, (1,) * (r + 1): r}


def test_fundamental():
    m = weight_multiplicities((1, 0, 0, 0))
    assert m == {(1, 0, 0, 0): 1}
    assert weyl_dimension((1, 0, 0, 0)) == 4


@pytest.mark.parametrize("r", [2, 3, 4])
def test_dimension_matches_weyl(r):
    ctx = AlgebraContext(r, 5)
    kappa = partition_of(mu_gen(ctx, 1))
    assert sum(m for _, m in all_weights(kappa)) == weyl_dimension(kappa)


def test_vacuum_is_unit():
    ctx = AlgebraContext(2, 3)
    ws = enumerate_p_plus(ctx)
    for a in ws:
        assert fusion_product(vacuum(ctx), a, ctx) == {a: 1}


def test_su2_level2():
    md = modular(1, 2)
    assert fusion_verlinde((1, 1), (1, 1), (2, 0), md) == 1
    assert fusion_verlinde((1, 1), (1, 1), (1, 1), md) == 0
    assert fusion_kac_walton((1, 1), (1, 1), (0, 2), md.ctx) == 1


@pytest.mark.parametrize("r,k", [(1, 1), (1, 2), (1, 5), (1, 6), (2, 2), (2, 3), (2, 4), (3, 2)])
def test_dual_oracles_all_triples(r, k):
    md = modular(r, k)
    N = verlinde_tensor(md)
    for a, lam in enumerate(md.weights):
        for b, mu in enumerate(md.weights):
            row = fusion_product(lam, mu, md.ctx)
            expect = np.array([row.get(nu, 0) for nu in md.weights])
            assert np.array_equal(N[a, b], expect)


def test_J_covariance():
    ctx = AlgebraContext(3, 4)
    ws = enumerate_p_plus(ctx)
    rng = random.Random(5)
    for _ in range(50):
        lam, mu, nu = (rng.choice(ws) for _ in range(3))
        assert fusion_kac_walton(apply_J(lam), mu, apply_J(nu), ctx) == fusion_kac_walton(lam, mu, nu, ctx)


def test_associativity():
    ctx = AlgebraContext(2, 4)
    ws = enumerate_p_plus(ctx)
    rng = random.Random(7)
    for _ in range(30):
        lam, mu, nu = (rng.choice(ws) for _ in range(3))
        left, right = {}, {}
        for s, c in fusion_product(lam, mu, ctx).items():
            for t, e in fusion_product(s, nu, ctx).items():
                left[t] = left.get(t, 0) + c * e
        for s, c in fusion_product(mu, nu, ctx).items():
            for t, e in fusion_product(lam, s, ctx).items():
                right[t] = right.get(t, 0) + c * e
        assert left == right


@pytest.mark.parametrize("r,k", [(3, 5), (2, 9), (4, 4), (1, 7)])
def test_lambda1_closed_form(r, k):
    ctx = AlgebraContext(r, k)
    lam1 = lambda_gen(ctx, 1)
    for mu in enumerate_p_plus(ctx):
        row = fusion_lambda1(mu, ctx)
        assert row == fusion_product(lam1, mu, ctx)
        assert row.get(mu, 0) == n_nonzero(mu) - 1


def test_lambda1_special_rows():
    ctx = AlgebraContext(2, 9)
    assert fusion_lambda1((3, 3, 3), ctx)[(3, 3, 3)] == 2
    assert fusion_lambda1(vacuum(ctx), ctx) == {lambda_gen(ctx, 1): 1}


@pytest.mark.parametrize("r,k,ell", [(4, 5, 2), (5, 6, 2), (7, 8, 3), (6, 6, 3)])
def test_lambda1_neighbours(r, k, ell):
    ctx = AlgebraContext(r, k)
    got = lambda1_neighbours(ctx, ell)
    assert got == set(fusion_product(lambda_gen(ctx, 1), lambda_gen(ctx, ell), ctx))
    assert len(got) <= 8


def test_generators():
    ctx = AlgebraContext(1, 16)
    assert [w for _, w in fusion_generators(ctx, 1)] == [(14, 2), (16, 0)]
    for r, k in [(3, 5), (4, 6), (2, 9), (5, 7)]:
        assert len(fusion_generators(AlgebraContext(r, k), 1)) == r + 1
    ctx = AlgebraContext(7, 4)
    names = dict(fusion_generators(ctx, 1))
    assert names["T'lambda1"] == (2, 1, 0, 0, 0, 0, 0, 1)


def test_verlinde_rejects_non_integral():
    md = modular(1, 3)
    broken = type(md)(md.ctx, md.weights, md.S * 1.01, md.T)
    with pytest.raises(NonIntegralError):
        verlinde_tensor(broken, tol=1e-9)
