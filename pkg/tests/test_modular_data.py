import random
from math import pi, sin, sqrt

import numpy as np
import pytest

from conftest import modular
from wzw_invariants.modular_data import (
    big_lambda_gen,
    build_S,
    check_modular_identities,
    fixed_point_qdim,
    fixed_point_weight,
    generator_qdims,
    lambda_gen,
    phase_law_deviation,
    qdim,
    rank_level_check,
    vacuum_row,
)
from wzw_invariants.weights import AlgebraContext, apply_C, enumerate_p_plus, orbit, shifted_norm


def test_S_level1_su2():
    S = modular(1, 1).S
    assert np.allclose(S, np.array([[1, 1], [1, -1]]) / sqrt(2), atol=1e-12)


@pytest.mark.parametrize("r,k", [(1, 5), (2, 3), (3, 3), (4, 2)])
def test_identities(r, k):
    dev = check_modular_identities(modular(r, k))
    assert max(dev.values()) < 1e-9


def test_vacuum_row_positive():
    md = modular(2, 3)
    row = md.S[0].real
    assert np.all(row > 0) and np.all(row >= row[0] - 1e-12)
    S45 = modular(4, 5).S[0].real
    assert np.all(S45 > 0)


def test_vacuum_row_closed_form():
    v = vacuum_row(AlgebraContext(1, 1), 0)
    expect = sqrt(2 / 3) * np.array([sin(pi / 3), sin(2 * pi / 3)])
    assert np.allclose(v, expect) and np.allclose(v, [sqrt(0.5)] * 2)
    md = modular(3, 4)
    assert np.max(np.abs(vacuum_row(md.ctx, 0, md.weights) - md.S[0])) < 1e-9


def test_full_phase_law():
    assert phase_law_deviation(modular(3, 2)) < 1e-12


def test_det_and_laplace_paths_agree():
    ctx = AlgebraContext(3, 4)
    a = build_S(ctx, method="laplace")
    b = build_S(ctx, method="det")
    assert np.max(np.abs(a - b)) < 1e-12


def test_T_selection_rule():
    md = modular(3, 4)
    T = md.T
    assert T[0] / T[0] == 1
    kb2 = 2 * md.ctx.kbar
    norms = [shifted_norm(w) for w in md.weights]
    for i in range(0, md.n, 3):
        for j in range(0, md.n, 2):
            same = abs(T[i] - T[j]) < 1e-10
            assert same == ((norms[i] - norms[j]) % kb2 == 0)
    rng = random.Random(0)
    for w in rng.sample(md.weights, 20):
        assert abs(T[md.index[w]] - T[md.index[apply_C(w)]]) < 1e-12


@pytest.mark.parametrize("pair", [(1, 3), (2, 4), (3, 4)])
def test_rank_level(pair):
    dev = rank_level_check(AlgebraContext(*pair))
    assert max(dev.values()) < 1e-9


def test_rank_level_needs_k2():
    with pytest.raises(ValueError):
        rank_level_check(AlgebraContext(2, 1))


def test_qdims():
    ctx = AlgebraContext(1, 16)
    assert qdim((16, 0), ctx) == pytest.approx(1.0)
    assert qdim((14, 2), ctx) == pytest.approx(sin(3 * pi / 18) / sin(pi / 18))
    # qdims are invariant under rank-level transposition
    from wzw_invariants.weights import rank_level_transpose
    c = AlgebraContext(2, 4)
    for w in enumerate_p_plus(c):
        assert qdim(w, c) == pytest.approx(qdim(rank_level_transpose(w, c), c.dual()), rel=1e-10)


def test_fixed_points():
    c = AlgebraContext(1, 4)
    assert fixed_point_weight(c, 1) == (2, 2)
    # sin(3 pi / 6) / sin(pi / 6) = 2 exactly
    assert fixed_point_qdim(c, 1) == pytest.approx(2.0, abs=1e-12)
    c = AlgebraContext(3, 8)
    assert fixed_point_qdim(c, 2) == pytest.approx(qdim(fixed_point_weight(c, 2), c), abs=1e-9)
    c = AlgebraContext(2, 9)
    phi = fixed_point_weight(c, 1)
    fixed = [w for w in enumerate_p_plus(c) if len(orbit(w)) == 1]
    assert all(qdim(w, c) >= qdim(phi, c) - 1e-12 for w in fixed)


def test_generator_closed_forms():
    for r, k in [(3, 5), (4, 5), (8, 3), (2, 9)]:
        for name, (w, closed, direct) in generator_qdims(AlgebraContext(r, k)).items():
            assert closed == pytest.approx(direct, rel=1e-9), name
    c = AlgebraContext(8, 3)
    big = [qdim(big_lambda_gen(c, ell), c) for ell in range(1, 5)]
    assert all(a < b for a, b in zip(big, big[1:]))
    c = AlgebraContext(4, 5)
    kb, rb = c.kbar, c.rbar
    lam1 = lambda_gen(c, 1)
    assert lam1 == (3, 1, 0, 0, 1)
    prod = 1.0
    for ell in range(1, 3):
        prod *= sin(pi * (rb + 1 - ell) / kb) / sin(pi * ell / kb)
    assert qdim(big_lambda_gen(c, 2), c) == pytest.approx(prod, rel=1e-10)
