import numpy as np
import pytest

from conftest import modular
from wzw_invariants.classify import (
    DimensionCapExceeded,
    SearchOverflow,
    classification_report,
    commutant_basis,
    enumerate_ade7,
    expected_list,
    integer_relation,
    qdim_degeneracy_scan,
    qdim_screen,
    symmetry_class,
)
from wzw_invariants.invariants import build_C, compose, exceptional_catalog, verify
from wzw_invariants.modular_data import big_lambda_gen, lambda_gen
from wzw_invariants.weights import AlgebraContext


def test_commutant_dimensions():
    assert commutant_basis(modular(1, 1)).dim == 1
    assert commutant_basis(modular(1, 4)).dim == 2


@pytest.mark.parametrize("rk", [(1, 16), (2, 9), (4, 5)])
def test_catalog_in_commutant(rk):
    md = modular(*rk)
    basis = commutant_basis(md)
    for M in exceptional_catalog(md.ctx, md.weights):
        assert basis.contains(M.dense().astype(float)) < 1e-8


def test_sign_identity_38():
    md = modular(3, 8)
    i = md.index
    rho2 = i[(2, 2, 2, 2)]
    a = md.S[rho2, i[lambda_gen(md.ctx, 1)]]
    b = md.S[rho2, i[(4, 0, 4, 0)]]
    assert abs(a + b) < 1e-12 and abs(a) > 0.1


@pytest.mark.parametrize("r,k,names", [
    (1, 16, {"I", "I[J1]", "E(1,16)"}),
    (2, 9, {"I", "C", "I[J1]", "C.I[J1]", "E(2,9)", "C.E(2,9)"}),
    (1, 4, {"I", "I[J1]"}),
    (1, 3, {"I"}),
    (2, 2, {"I", "I[J1]"}),
])
def test_classification_small(r, k, names):
    rep = classification_report(AlgebraContext(r, k), md=modular(r, k))
    assert rep.match
    assert set(rep.names) == names


def test_found_closed_under_C_and_transpose():
    md = modular(2, 9)
    found = enumerate_ade7(md)
    keys = {M.key() for M in found}
    C = build_C(md.ctx, md.weights)
    for M in found:
        assert compose(C, M).key() in keys
        assert M.transpose().key() in keys
        assert verify(M, md).ade7


def test_expected_list_rules():
    names = lambda r, k: sorted(M.name for M in expected_list(AlgebraContext(r, k)))
    assert "C.I[J1]" not in names(2, 3)
    assert names(1, 2) == ["I[J1]"]
    assert not any(n.startswith("C.") for n in names(3, 2))
    exp = [M.name for M in expected_list(AlgebraContext(15, 2))]
    assert "1/2*I[J4].E(15,2)" in exp and "C.E(15,2)" in exp


def test_caps():
    md = modular(2, 9)
    with pytest.raises(SearchOverflow):
        enumerate_ade7(md, node_cap=3)
    with pytest.raises(DimensionCapExceeded):
        enumerate_ade7(md, dim_cap=1)


def test_relation_of_extra_83():
    rep = classification_report(AlgebraContext(8, 3), md=modular(8, 3))
    extra = [i for i, n in enumerate(rep.names) if n == "UNEXPECTED"]
    assert len(extra) == 2
    assert sorted(rep.relations[i] for i in extra) == ["C.I[J1] - I[J3] + E(8,3)", "I[J1] - C.I[J3] + C.E(8,3)"]
    assert integer_relation(rep.expected[0], rep.expected) is not None


def test_screen_examples():
    assert qdim_screen(AlgebraContext(6, 7), 1)
    assert not qdim_screen(AlgebraContext(1, 16), 1)
    assert not qdim_screen(AlgebraContext(8, 3), 1)


@pytest.mark.parametrize("rk", [(2, 9), (15, 2)])
def test_screen_equality_counts_as_failure(rk):
    # the largest generator meets the bound with equality here
    assert not qdim_screen(AlgebraContext(*rk), 1)


def test_degeneracy_examples():
    W = qdim_degeneracy_scan(AlgebraContext(8, 3))
    ctx = AlgebraContext(8, 3)
    assert set(W) == set(symmetry_class(big_lambda_gen(ctx, 3)))
    W = qdim_degeneracy_scan(AlgebraContext(3, 6))
    assert set(W) == set(symmetry_class((4, 0, 2, 0)))
    assert qdim_degeneracy_scan(AlgebraContext(5, 5)) == []
