"""Acceptance criteria 1-11, one pass/fail line each.

Set WZW_SKIP_STRETCH=1 to leave the (7,4) and (15,2) classifications out of
criterion 7.
"""

import gc
import json
import os
import time

import numpy as np
import pytest
from hypothesis import settings

from conftest import modular, record
from wzw_invariants.classify import classification_report, degeneracy_grid, qdim_screen_grid, symmetry_class
from wzw_invariants.cli import main
from wzw_invariants.fusion import fusion_lambda1, fusion_product, verlinde_deviation, verlinde_tensor
from wzw_invariants.invariants import (
    EXCEPTIONAL_CONTEXTS,
    build_simple_current,
    exceptional_catalog,
    generic_perron_matrix,
    perron_radius,
    projected_exceptional,
    simple_current_valid,
    structural_diagnostics,
    verify,
)
from wzw_invariants.modular_data import (
    big_lambda_gen,
    build_modular_data,
    check_modular_identities,
    lambda_gen,
    rank_level_check,
)
from wzw_invariants.weights import AlgebraContext, enumerate_p_plus, orbit

GRID = [(r, k) for r in range(1, 9) for k in range(1, 9)] + [(15, 2)]


@pytest.fixture(scope="module")
def grid_sweep():
    """Build every grid context once; collect identity deviations and I[J_d] verdicts."""
    identity, currents, t_build = {}, {}, 0.0
    for r, k in GRID:
        ctx = AlgebraContext(r, k)
        t0 = time.time()
        md = build_modular_data(ctx)
        identity[(r, k)] = max(check_modular_identities(md).values())
        t_build += time.time() - t0
        if (r, k) != (15, 2):
            for d in ctx.divisors():
                rep = verify(build_simple_current(ctx, d, md.weights), md)
                currents[(r, k, d)] = (rep.physical, simple_current_valid(ctx, d))
        del md
        gc.collect()
    return identity, currents, t_build


def test_criterion_01_modular_identities(grid_sweep):
    identity, _, secs = grid_sweep
    worst = max(identity.values())
    ok = worst < 1e-9
    record(1, ok, f"{len(identity)} contexts, max deviation {worst:.2e}, {secs:.0f}s")
    assert ok


def test_criterion_02_rank_level():
    devs = {rk: max(rank_level_check(AlgebraContext(*rk)).values()) for rk in [(1, 3), (2, 4), (3, 4)]}
    worst = max(devs.values())
    ok = worst < 1e-9
    record(2, ok, f"pairs (1,3)/(2,2) (2,4)/(3,3) (3,4)/(3,4), max deviation {worst:.2e}")
    assert ok


def test_criterion_03_fusion_oracles():
    contexts = [(1, k) for k in range(1, 7)] + [(2, k) for k in range(1, 5)] + [(3, k) for k in range(1, 4)]
    triples, bad, worst = 0, 0, 0.0
    for rk in contexts:
        md = modular(*rk)
        worst = max(worst, verlinde_deviation(md))
        N = verlinde_tensor(md)
        for a, lam in enumerate(md.weights):
            for b, mu in enumerate(md.weights):
                row = fusion_product(lam, mu, md.ctx)
                kw = np.array([row.get(nu, 0) for nu in md.weights])
                bad += int(np.sum(kw != N[a, b]))
                triples += md.n
    ok = bad == 0 and worst < 1e-6
    record(3, ok, f"{triples} triples, {bad} mismatches, max distance to integer {worst:.2e}")
    assert ok


def test_criterion_04_lambda1_row():
    bad, total = 0, 0
    for rk in [(3, 5), (2, 9)]:
        ctx = AlgebraContext(*rk)
        lam1 = lambda_gen(ctx, 1)
        for mu in enumerate_p_plus(ctx):
            total += 1
            bad += fusion_lambda1(mu, ctx) != fusion_product(lam1, mu, ctx)
    ok = bad == 0
    record(4, ok, f"{total} rows at (3,5) and (2,9), {bad} disagree")
    assert ok


def test_criterion_05_simple_currents(grid_sweep):
    _, currents, _ = grid_sweep
    wrong = [key for key, (phys, rule) in currents.items() if phys != rule]
    ok = not wrong
    record(5, ok, f"{len(currents)} (r,k,d) cases, {len(wrong)} disagree with the parity rule {wrong[:5]}")
    assert ok


def test_criterion_06_exceptional_catalog():
    failures, count = [], 0
    for rk in EXCEPTIONAL_CONTEXTS:
        md = modular(*rk)
        for M in exceptional_catalog(md.ctx, md.weights):
            count += 1
            rep = verify(M, md)
            if not (rep.physical and rep.ade7 and M.is_symmetric()):
                failures.append(M.name)
    md = modular(15, 2)
    literal_ok = verify(projected_exceptional(md.weights, literal=True), md).physical
    ok = not failures and count == 8
    record(6, ok, f"{count} invariants physical, ADE7 and symmetric; failures {failures}; "
                  f"diagonal-only reading of the projected term list physical: {literal_ok} (repaired version used)")
    assert ok


def _classification_targets():
    targets = [(1, 16), (2, 9), (4, 5), (3, 8), (8, 3)]
    targets += [(1, k) for k in range(1, 9)] + [(2, k) for k in range(1, 7)]
    if os.environ.get("WZW_SKIP_STRETCH") != "1":
        targets += [(7, 4), (15, 2)]
    return targets


def test_criterion_07_classification():
    verdicts, t0 = {}, time.time()
    for rk in _classification_targets():
        rep = classification_report(AlgebraContext(*rk), md=modular(*rk) if rk != (15, 2) else None)
        verdicts[rk] = rep
    secs = time.time() - t0
    bad = {rk: rep for rk, rep in verdicts.items() if not rep.match}
    detail = "; ".join(f"{rk}: extra {[rep.relations.get(i, n) for i, n in enumerate(rep.names) if n == 'UNEXPECTED']}"
                       f" missing {rep.missing}" for rk, rep in bad.items())
    ok = not bad
    record(7, ok, f"{len(verdicts)} contexts in {secs:.0f}s, {len(bad)} mismatch. {detail}")
    assert ok, detail


SCREEN_EXCEPTIONS = ([(1, k) for k in range(2, 17, 2)] + [(2, 3), (2, 6), (2, 9)] + [(3, k) for k in (4, 6, 8, 10)]
          + [(4, 5)] + [(5, k) for k in (6, 8, 10)] + [(7, 8), (7, 6), (9, 6), (5, 4), (7, 4), (9, 4), (5, 3), (8, 3)]
          + [(r, 2) for r in range(3, 16, 2)])


def test_criterion_08_screen_grid():
    t0 = time.time()
    fails = set(qdim_screen_grid(16, 17))
    expect = set(SCREEN_EXCEPTIONS)
    ok = fails == expect
    record(8, ok, f"{len(fails)} failing contexts, extra {sorted(fails - expect)}, "
                  f"missing {sorted(expect - fails)}, {time.time() - t0:.0f}s")
    assert ok


def _family(rk):
    r, k = rk
    ctx = AlgebraContext(r, k)
    if rk in [(8, 3), (8, 15)]:
        return big_lambda_gen(ctx, 3)
    if rk in [(7, 4), (7, 6)]:
        return big_lambda_gen(ctx, 4)
    if rk in [(2, 9), (14, 9)]:
        return (k - 3, 3) + (0,) * (r - 1)
    if rk in [(3, 8), (5, 8)]:
        return (k - 4, 4) + (0,) * (r - 1)
    return (k - 2, 0, 2) + (0,) * (r - 2)


def test_criterion_09_degeneracy():
    grid = degeneracy_grid(16, 16)
    expect = {rk: set(symmetry_class(_family(rk)))
              for rk in [(8, 3), (8, 15), (2, 9), (14, 9), (3, 6), (5, 4), (7, 4), (7, 6), (3, 8), (5, 8)]}
    got = {rk: set(W) for rk, W in grid.items() if W}
    ok = got == expect
    record(9, ok, f"nonempty at {sorted(got)}")
    assert ok


def test_criterion_10_diagnostics():
    worst, law, count = 0.0, True, 0
    for rk in EXCEPTIONAL_CONTEXTS:
        md = modular(*rk)
        for M in exceptional_catalog(md.ctx, md.weights):
            d = structural_diagnostics(M, md)
            count += 1
            worst = max([worst] + [abs(r - len(d.J_L)) for _, r, _ in d.block_radii])
            law &= d.value_law_ok and d.perron_ok
    md = modular(1, 16)
    E = exceptional_catalog(md.ctx, md.weights)[0]
    d = structural_diagnostics(E, md)
    target = {E.index[w] for w in orbit((14, 2))} | {E.index[(8, 8)]}
    r1 = [r for g, r, _ in d.block_radii if target <= set(g)]
    fixture = abs(perron_radius(generic_perron_matrix(1)) - 2) < 1e-7 and len(r1) == 1 and abs(r1[0] - 2) < 1e-7
    ok = worst < 1e-7 and law and fixture
    record(10, ok, f"{count} invariants, max Perron deviation {worst:.1e}, value law {law}, r1 = 2 fixture {fixture}")
    assert ok


def _cli_json(argv):
    import contextlib
    import io
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        code = main(argv, environ={})
    return code, buf.getvalue()


def test_criterion_11_determinism():
    runs = set()
    for workers in ("1", "2", "4"):
        for _ in range(2):
            runs.add(_cli_json(["classify", "-r", "2", "-k", "9", "--workers", workers]))
    diag = {_cli_json(["invariant", "diag", "-r", "3", "-k", "8", "--family", "exceptional", "--workers", w])
            for w in ("1", "3")}
    derand = settings.default.derandomize
    ok = len(runs) == 1 and len(diag) == 1 and derand and json.loads(next(iter(runs))[1])["verdict"] == "MATCH"
    record(11, ok, f"identical JSON across runs and worker counts: {len(runs) == 1 and len(diag) == 1}; "
                   f"property suites derandomized: {derand}")
    assert ok
