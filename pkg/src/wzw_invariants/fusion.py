"""Fusion coefficients of A_r^(1) at level k.

Two independent evaluations are provided: Verlinde's formula from the S
matrix, and the Kac-Walton algorithm (horizontal tensor product folded into
the level-kbar alcove).  Horizontal weights are handled in epsilon
coordinates: a dominant weight is a partition kappa with rbar parts (last part
0), and any weight of the module is a composition of |kappa|.
"""

from collections import defaultdict
from functools import lru_cache
from typing import Dict, Iterator, List, Sequence, Tuple

import numpy as np

from .modular_data import ModularData, big_lambda_gen, lambda_gen, mu_gen
from .weights import (
    AlgebraContext,
    Weight,
    apply_C,
    apply_J,
    check_weight,
    from_indices,
    n_nonzero,
    positions,
)

TOL_N = 1e-6

FusionRow = Dict[Weight, int]


class NonIntegralError(ArithmeticError):
    """A Verlinde sum is not within tolerance of an integer."""


# ---------------------------------------------------- weight multiplicities

def partition_of(w: Weight) -> Tuple[int, ...]:
    """Horizontal part of an affine weight as a partition with rbar parts."""
    r = len(w) - 1
    return tuple(sum(w[i:]) for i in range(1, r + 1)) + (0,)


def _dominates(a: Sequence[int], b: Sequence[int]) -> bool:
    sa = sb = 0
    for x, y in zip(a, b):
        sa += x
        sb += y
        if sb > sa:
            return False
    return True


def _dominant_below(kappa: Tuple[int, ...]) -> List[Tuple[int, ...]]:
    """All partitions (rbar parts, same size) dominated by kappa."""
    n, total = len(kappa), sum(kappa)
    out = []

    def rec(prefix, left, cap):
        if len(prefix) == n - 1:
            if left <= cap:
                cand = tuple(prefix) + (left,)
                if _dominates(kappa, cand):
                    out.append(cand)
            return
        for x in range(min(left, cap), -1, -1):
            rec(prefix + [x], left - x, x)

    rec([], total, total)
    return out


@lru_cache(maxsize=4096)
def weight_multiplicities(kappa: Tuple[int, ...]) -> Dict[Tuple[int, ...], int]:
    """Multiplicities of the dominant weights of the irreducible module kappa.

    Freudenthal's recursion, run on dominant weights from the top down:
    (|kappa+rho|^2 - |mu+rho|^2) m(mu) = 2 sum_{a<b} sum_{j>=1} (mu + j e_ab | e_ab) m(mu + j e_ab),
    with m of a non-dominant weight read off its sorted rearrangement.
    Normalize kappa so its last part is 0 (a shift by the determinant).
    """
    kappa = tuple(int(x) for x in kappa)
    n = len(kappa)
    if any(kappa[i] < kappa[i + 1] for i in range(n - 1)):
        raise ValueError(f"{kappa} is not dominant")
    rho = list(range(n - 1, -1, -1))
    top = sum((kappa[i] + rho[i]) ** 2 for i in range(n))
    mult: Dict[Tuple[int, ...], int] = {}
    doms = _dominant_below(kappa)
    # higher weights first: dominance-compatible order is lexicographic descending
    doms.sort(reverse=True)
    for mu in doms:
        if mu == kappa:
            mult[mu] = 1
            continue
        acc = 0
        for a in range(n):
            for b in range(a + 1, n):
                v = list(mu)
                j = 0
                while True:
                    j += 1
                    v[a] += 1
                    v[b] -= 1
                    if v[b] < 0:
                        break
                    key = tuple(sorted(v, reverse=True))
                    m = mult.get(key, 0)
                    if m:
                        acc += m * (v[a] - v[b])
        denom = top - sum((mu[i] + rho[i]) ** 2 for i in range(n))
        val, rem = divmod(2 * acc, denom)
        if rem:
            raise ArithmeticError(f"Freudenthal recursion not integral at {mu} in {kappa}")
        if val:
            mult[mu] = val
    return mult


def distinct_permutations(v: Sequence[int]) -> Iterator[Tuple[int, ...]]:
    counts: Dict[int, int] = defaultdict(int)
    for x in v:
        counts[x] += 1
    keys = sorted(counts, reverse=True)
    n = len(v)
    out = [0] * n

    def rec(i):
        if i == n:
            yield tuple(out)
            return
        for x in keys:
            if counts[x]:
                counts[x] -= 1
                out[i] = x
                yield from rec(i + 1)
                counts[x] += 1

    yield from rec(0)


def weyl_dimension(kappa: Sequence[int]) -> int:
    n = len(kappa)
    num = den = 1
    for a in range(n):
        for b in range(a + 1, n):
            num *= kappa[a] - kappa[b] + b - a
            den *= b - a
    return num // den


def all_weights(kappa: Tuple[int, ...]) -> List[Tuple[Tuple[int, ...], int]]:
    """Every weight of the module with its multiplicity."""
    out = []
    for mu, m in weight_multiplicities(tuple(kappa)).items():
        for p in distinct_permutations(mu):
            out.append((p, m))
    return out


# ------------------------------------------------------------ Kac-Walton

def fold(v: Sequence[int], kbar: int):
    """Fold an integer vector (lambda + rho in epsilon coordinates) into the alcove.

    Returns (sign, labels) with labels the affine Dynkin labels of the
    resulting level-k weight, or (0, None) when v lies on a wall.
    """
    n = len(v)
    res = [x % kbar for x in v]
    if len(set(res)) < n:
        return 0, None
    lifts = sum(x // kbar for x in v) % n
    order = sorted(range(n), key=lambda a: res[a])
    u = list(res)
    for a in order[:lifts]:
        u[a] += kbar
    perm = sorted(range(n), key=lambda a: -u[a])
    # sign of the sorting permutation by counting inversions
    inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
    us = [u[a] for a in perm]
    labels = [us[i] - us[i + 1] - 1 for i in range(n - 1)]
    head = kbar - (us[0] - us[-1]) - 1
    return (-1) ** inv, (head,) + tuple(labels)


def fusion_product(lam: Weight, mu: Weight, ctx: AlgebraContext) -> FusionRow:
    """All N_{lam,mu}^nu by Kac-Walton; returns nu -> coefficient (nonzero only)."""
    check_weight(ctx, lam)
    check_weight(ctx, mu)
    # iterate over the weights of the smaller module
    if weyl_dimension(partition_of(lam)) > weyl_dimension(partition_of(mu)):
        lam, mu = mu, lam
    base = positions(mu)
    acc: Dict[Weight, int] = defaultdict(int)
    for wt, m in all_weights(partition_of(lam)):
        sign, nu = fold([base[a] + wt[a] for a in range(ctx.rbar)], ctx.kbar)
        if sign:
            acc[nu] += sign * m
    out = {nu: c for nu, c in acc.items() if c}
    if any(c < 0 for c in out.values()):
        raise ArithmeticError(f"negative fusion coefficient for {lam} x {mu}")
    return out


def fusion_kac_walton(lam: Weight, mu: Weight, nu: Weight, ctx: AlgebraContext) -> int:
    check_weight(ctx, nu)
    return fusion_product(lam, mu, ctx).get(tuple(nu), 0)


# ---------------------------------------------------------------- Verlinde

def verlinde_tensor(md: ModularData, lam_rows: Sequence[int] = None, tol: float = TOL_N) -> np.ndarray:
    """N[l, m, n] for l in ``lam_rows`` (all by default), rounded and checked."""
    S = md.S
    lam_rows = np.arange(md.n) if lam_rows is None else np.asarray(lam_rows)
    ratio = S[lam_rows] / S[0][None, :]
    raw = np.einsum("ag,mg,ng->amn", ratio, S, S.conj())
    rounded = np.rint(raw.real)
    dev = max(float(np.max(np.abs(raw - rounded))), 0.0)
    if dev > tol:
        raise NonIntegralError(f"Verlinde sum off an integer by {dev:.3e}")
    return rounded.astype(np.int64)


def verlinde_deviation(md: ModularData, lam_rows: Sequence[int] = None) -> float:
    S = md.S
    lam_rows = np.arange(md.n) if lam_rows is None else np.asarray(lam_rows)
    raw = np.einsum("ag,mg,ng->amn", S[lam_rows] / S[0][None, :], S, S.conj())
    return float(np.max(np.abs(raw - np.rint(raw.real))))


def fusion_verlinde(lam: Weight, mu: Weight, nu: Weight, md: ModularData, tol: float = TOL_N) -> int:
    S = md.S
    a, b, c = md.index[tuple(lam)], md.index[tuple(mu)], md.index[tuple(nu)]
    val = np.sum(S[a] * S[b] * S[c].conj() / S[0])
    n = round(val.real)
    if abs(val - n) > tol:
        raise NonIntegralError(f"Verlinde sum {val} is not an integer")
    return int(n)


# ------------------------------------------------------ closed-form row

def fusion_lambda1(mu: Weight, ctx: AlgebraContext) -> FusionRow:
    """Fusions of mu with (k-2)Lambda_0 + Lambda_1 + Lambda_r in closed form."""
    if ctx.k < 2:
        raise ValueError("needs k >= 2")
    check_weight(ctx, mu)
    n = ctx.rbar
    out: FusionRow = {}
    if n_nonzero(mu) > 1:
        out[tuple(mu)] = n_nonzero(mu) - 1
    seen = set()
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            v = list(mu)
            v[i] += 1
            v[(i - 1) % n] -= 1
            v[j] -= 1
            v[(j - 1) % n] += 1
            nu = tuple(v)
            if min(nu) >= 0 and nu != tuple(mu) and nu not in seen:
                seen.add(nu)
                out[nu] = 1
    return out


def lambda1_neighbours(ctx: AlgebraContext, ell: int) -> set:
    """The weights nu with N_{lambda1, lambda^ell}^nu nonzero, as listed in closed form.

    lambda^0 is the vacuum and mu^0 is discarded.
    """
    lam = lambda i: lambda_gen(ctx, i) if i % ctx.rbar else tuple([ctx.k] + [0] * ctx.r)
    out = {lam(ell), lam(ell - 1), lam(ell + 1)}
    for j in (ell, ell - 1):
        if j >= 1:
            m = mu_gen(ctx, j)
            out.add(m)
            out.add(apply_C(m))
    l1, le = lambda_gen(ctx, 1), lam(ell)
    extra = tuple(a + b for a, b in zip(l1, le))
    extra = (extra[0] - ctx.k,) + extra[1:]
    out.add(extra)
    return {w for w in out if min(w) >= 0}


# -------------------------------------------------------- generator sets

def fusion_generators(ctx: AlgebraContext, d: int) -> List[Tuple[str, Weight]]:
    """Generator weights for the J^d-invariant part of the fusion ring.

    For rbar <= k: lambda^i (i <= rbar/2), mu^j (j <= r/2, absent at k = 2),
    Lambda^{rbar/d}.  For rbar > k > 1 the images of the dual generators are
    used instead.
    """
    if ctx.rbar % d:
        raise ValueError(f"d={d} does not divide rbar={ctx.rbar}")
    if ctx.k < 2:
        raise ValueError("needs k >= 2")
    rb, k = ctx.rbar, ctx.k
    out: List[Tuple[str, Weight]] = []
    if rb <= k:
        for i in range(1, rb // 2 + 1):
            out.append((f"lambda{i}", lambda_gen(ctx, i)))
        if k > 2:
            for j in range(1, ctx.r // 2 + 1):
                out.append((f"mu{j}", mu_gen(ctx, j)))
        out.append((f"Lambda{rb // d}", big_lambda_gen(ctx, rb // d)))
        return out
    for i in range(1, k // 2 + 1):
        out.append((f"T'lambda{i}", from_indices(ctx, [1] * i + [ctx.r] * i)))
    if ctx.r > 1:
        for j in range(1, (k - 1) // 2 + 1):
            out.append((f"T'mu{j}", from_indices(ctx, [1] * (j - 1) + [2] + [ctx.r] * (j + 1))))
    m, ell = divmod(rb // d, k)
    base = tuple([k - ell, ell] + [0] * (ctx.r - 1))
    out.append((f"J{m}TLambda{ell}", apply_J(base, m)))
    return out
