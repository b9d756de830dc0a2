"""Kac-Peterson matrices S and T of A_r^(1) at level k, and q-dimensions.

S is evaluated from the determinant form of the Weyl-group sum.  In integer
coordinates y (see ``weights.positions``) the sum over the symmetric group is

    S[l, m] = c * exp(2 pi i s(l) s(m) / (rbar kbar)) * det[w^(-y_a(l) y_b(m))]

with w = exp(2 pi i / kbar) and s = sum(y).  The global constant c is fixed by
matching row 0 to the positive sine product.  Both position vectors end in a
0, so the rbar x rbar determinant collapses (Schur complement of the all-ones
row and column) to an r x r determinant with entries w^(-y z) - 1; all
columns of one row are obtained together by a Laplace expansion over column
subsets.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import sqrt
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .weights import (
    AlgebraContext,
    Weight,
    apply_C,
    apply_J,
    enumerate_p_plus,
    fundamental,
    from_indices,
    positions,
    rank_level_transpose,
    scaled_norm,
    t_ality,
    weight_index,
)

TOL_S = 1e-9


class ConditioningError(RuntimeError):
    """The determinant evaluation disagrees with the sine-product row."""


def s_modulus(ctx: AlgebraContext) -> float:
    """|s| = kbar^(-r/2) rbar^(-1/2)."""
    return ctx.kbar ** (-ctx.r / 2) / sqrt(ctx.rbar)


def _position_array(weights: Sequence[Weight]) -> np.ndarray:
    return np.array([positions(w) for w in weights], dtype=np.int64)


# ---------------------------------------------------------------- vacuum row

def vacuum_row(ctx: AlgebraContext, ell: int = 0, weights: Sequence[Weight] = None) -> np.ndarray:
    """S[ell*rho, l] for every weight l, from the sine product over positive roots."""
    if ell < 0 or ell * ctx.r > ctx.k:
        raise ValueError(f"ell must lie in 0..{ctx.k // ctx.r}")
    if weights is None:
        weights = enumerate_p_plus(ctx)
    y = _position_array(weights)
    out = np.full(len(weights), s_modulus(ctx))
    for i in range(ctx.rbar):
        for j in range(i + 1, ctx.rbar):
            out *= 2 * np.sin(np.pi * (ell + 1) * (y[:, i] - y[:, j]) / ctx.kbar)
    return out


def qdims(ctx: AlgebraContext, weights: Sequence[Weight] = None) -> np.ndarray:
    """q-dimensions of a list of weights (sine-product form)."""
    if weights is None:
        weights = enumerate_p_plus(ctx)
    y = _position_array(weights)
    out = np.ones(len(weights))
    for i in range(ctx.rbar):
        for j in range(i + 1, ctx.rbar):
            out *= np.sin(np.pi * (y[:, i] - y[:, j]) / ctx.kbar) / np.sin(np.pi * (j - i) / ctx.kbar)
    return out


def qdim(w: Weight, ctx: AlgebraContext) -> float:
    return float(qdims(ctx, [w])[0])


def qdim_real(x: Sequence[float], ctx: AlgebraContext) -> float:
    """q-dimension extended to real points of the fundamental chamber."""
    x = np.asarray(x, dtype=float)
    y = np.concatenate([np.cumsum((x[1:] + 1)[::-1])[::-1], [0.0]])
    out = 1.0
    for i in range(ctx.rbar):
        for j in range(i + 1, ctx.rbar):
            out *= np.sin(np.pi * (y[i] - y[j]) / ctx.kbar) / np.sin(np.pi * (j - i) / ctx.kbar)
    return float(out)


# ------------------------------------------------------------------ T matrix

def t_exponent(w: Weight, ctx: AlgebraContext) -> Fraction:
    """Exponent x in T = exp(pi i x), reduced to [0, 2)."""
    rho = scaled_norm(tuple([ctx.k] + [0] * ctx.r))
    x = Fraction(scaled_norm(w), ctx.rbar * ctx.kbar) - Fraction(rho, ctx.rbar * ctx.rbar)
    return x % 2


def build_T(ctx: AlgebraContext, weights: Sequence[Weight] = None) -> np.ndarray:
    if weights is None:
        weights = enumerate_p_plus(ctx)
    ex = [t_exponent(w, ctx) for w in weights]
    return np.array([np.exp(1j * np.pi * float(x)) for x in ex])


# ------------------------------------------------------------------ S matrix

@lru_cache(maxsize=16)
def _laplace_tables(ncols: int, depth: int):
    """Subset bookkeeping for the column-subset Laplace expansion.

    Level m lists all m-subsets of range(ncols) in lexicographic order; for
    subset position j the tables give the column and the index of the subset
    with that column removed in level m-1.
    """
    levels = [{(): 0}]
    tables = [None]
    for m in range(1, depth + 1):
        subsets = list(combinations(range(ncols), m))
        prev = levels[-1]
        col = np.empty((len(subsets), m), dtype=np.intp)
        drop = np.empty((len(subsets), m), dtype=np.intp)
        for s, sub in enumerate(subsets):
            for j in range(m):
                col[s, j] = sub[j]
                drop[s, j] = prev[sub[:j] + sub[j + 1:]]
        levels.append({sub: i for i, sub in enumerate(subsets)})
        tables.append((col, drop))
    return levels[-1], tables


def _reduced_minor_chunks(ctx: AlgebraContext, y_rows: np.ndarray, chunk: int):
    """Yield (start, minors) with all r x r minors det[w^(-y_a z_b) - 1].

    ``y_rows`` holds the nonzero positions (descending) of each row weight.
    ``minors`` has shape (n_subsets, rows in chunk) and is indexed by the
    subset of nonzero column positions (values 1..kbar-1 as 0-based offsets).
    """
    kb, r = ctx.kbar, ctx.r
    _, tables = _laplace_tables(kb - 1, r)
    roots_m1 = np.exp(-2j * np.pi * np.arange(kb) / kb) - 1.0
    cols = np.arange(1, kb, dtype=np.int64)
    for start in range(0, y_rows.shape[0], chunk):
        ys = y_rows[start:start + chunk]
        D = np.ones((1, ys.shape[0]), dtype=complex)
        for m in range(1, r + 1):
            col, drop = tables[m]
            A = roots_m1[np.outer(cols, ys[:, m - 1]) % kb]
            new = np.zeros((col.shape[0], ys.shape[0]), dtype=complex)
            for j in range(m):
                term = A[col[:, j]]
                term *= D[drop[:, j]]
                if (m + j) % 2 == 0:
                    new -= term  # (-1)^(m + j + 1) with j counted from 0
                else:
                    new += term
            D = new
        yield start, D


def _raw_S_laplace(ctx: AlgebraContext, weights: Sequence[Weight], rows: np.ndarray,
                   chunk: int = 256) -> np.ndarray:
    y = _position_array(weights)
    levels, _ = _laplace_tables(ctx.kbar - 1, ctx.r)
    col_sub = np.array([levels[tuple(sorted(int(v) - 1 for v in yy[:-1]))] for yy in y])
    s = y.sum(axis=1)
    mod = ctx.rbar * ctx.kbar
    phase = np.exp(2j * np.pi * np.arange(mod) / mod)
    out = np.empty((len(rows), len(weights)), dtype=complex)
    for start, D in _reduced_minor_chunks(ctx, y[rows, :-1], chunk):
        rr = rows[start:start + D.shape[1]]
        blk = D[col_sub].T
        blk *= phase[np.outer(s[rr], s) % mod]
        out[start:start + D.shape[1]] = blk
    return out


def _raw_S_det(ctx: AlgebraContext, weights: Sequence[Weight], rows: np.ndarray) -> np.ndarray:
    """Reference path: one full rbar x rbar determinant per entry."""
    y = _position_array(weights)
    kb = ctx.kbar
    mod = ctx.rbar * kb
    roots = np.exp(-2j * np.pi * np.arange(kb) / kb)
    phase = np.exp(2j * np.pi * np.arange(mod) / mod)
    s = y.sum(axis=1)
    out = np.empty((len(rows), len(weights)), dtype=complex)
    for a, i in enumerate(rows):
        E = roots[(y[i][None, :, None] * y[:, None, :]) % kb]
        out[a] = np.linalg.det(E) * phase[(s[i] * s) % mod]
    return out


def build_S(ctx: AlgebraContext, weights: Sequence[Weight] = None, rows: Sequence[int] = None,
            method: str = "laplace", tol: float = TOL_S) -> np.ndarray:
    """Kac-Peterson S matrix (or a block of its rows).

    Parameters
    ----------
    ctx : AlgebraContext
    weights : list of weights, optional
        Column order; defaults to ``enumerate_p_plus(ctx)``.  Must start with
        the vacuum.
    rows : sequence of int, optional
        Row indices into ``weights``; defaults to all rows.
    method : {"laplace", "det"}
        Evaluation of the determinant; both give the same matrix.
    """
    if weights is None:
        weights = enumerate_p_plus(ctx)
    if tuple(weights[0]) != (ctx.k,) + (0,) * ctx.r:
        raise ValueError("weights must start with the vacuum")
    rows = np.arange(len(weights)) if rows is None else np.asarray(rows, dtype=np.intp)
    calc = _raw_S_laplace if method == "laplace" else _raw_S_det
    if method not in ("laplace", "det"):
        raise ValueError(f"unknown method {method!r}")
    raw0 = calc(ctx, weights, np.array([0]))[0]
    ref = vacuum_row(ctx, 0, weights)
    c = ref[0] / raw0[0]
    dev = np.max(np.abs(c * raw0 - ref))
    if not np.isfinite(dev) or dev > tol:
        raise ConditioningError(f"normalization mismatch {dev:.3e} on the vacuum row of {ctx}")
    if len(rows) == 1 and rows[0] == 0:
        return (c * raw0)[None, :]
    out = calc(ctx, weights, rows)
    out *= c
    return out


@dataclass
class ModularData:
    """S and T for one context, indexed by the ordered weight list."""

    ctx: AlgebraContext
    weights: List[Weight]
    S: np.ndarray
    T: np.ndarray
    index: Dict[Weight, int] = field(default=None, repr=False)

    def __post_init__(self):
        if self.index is None:
            self.index = weight_index(self.weights)

    @property
    def n(self) -> int:
        return len(self.weights)

    def qdims(self) -> np.ndarray:
        return (self.S[:, 0] / self.S[0, 0]).real

    def perm(self, fn) -> np.ndarray:
        """Index permutation p with weights[p[i]] = fn(weights[i])."""
        return np.array([self.index[fn(w)] for w in self.weights], dtype=np.intp)

    def t_values(self) -> np.ndarray:
        return np.array([t_ality(w) for w in self.weights], dtype=np.int64)


def build_modular_data(ctx: AlgebraContext, method: str = "laplace") -> ModularData:
    weights = enumerate_p_plus(ctx)
    S = build_S(ctx, weights, method=method)
    return ModularData(ctx, weights, S, build_T(ctx, weights))


# -------------------------------------------------------- identity checks

def _phase_table(rbar: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(rbar) / rbar)


def j_orbit_reps(md: ModularData) -> Tuple[np.ndarray, np.ndarray]:
    """Indices of J-orbit representatives and the orbit sizes."""
    Jp = md.perm(lambda w: apply_J(w, 1))
    seen = np.zeros(md.n, dtype=bool)
    reps, sizes = [], []
    for i in range(md.n):
        if seen[i]:
            continue
        j, size = i, 0
        while not seen[j]:
            seen[j] = True
            j = Jp[j]
            size += 1
        reps.append(i)
        sizes.append(size)
    return np.array(reps, dtype=np.intp), np.array(sizes)


def check_modular_identities(md: ModularData, dense_limit: int = 4000, block: int = 1024) -> Dict[str, float]:
    """Max deviations for symmetry, unitarity, S^2 = C and the J phase law.

    Symmetry and the phase law are checked on every entry.  Up to
    ``dense_limit`` weights the products S S^* and S S are formed in full.
    Above it they are formed on the rows of J-orbit representatives, with the
    inner sum folded over J-orbits; once the phase law holds entrywise to
    ``delta`` this differs from the full product by at most 2 n delta, and
    that amount is added to the reported deviation.
    """
    S, n, ctx = md.S, md.n, md.ctx
    rb = ctx.rbar
    ph = _phase_table(rb)
    t = md.t_values() % rb
    Jp = md.perm(lambda w: apply_J(w, 1))
    Cp = md.perm(apply_C)
    res = {"symmetry": 0.0, "phase_law": 0.0, "unitarity": 0.0, "s_squared": 0.0}
    for a in range(0, n, block):
        sl = slice(a, min(n, a + block))
        res["symmetry"] = max(res["symmetry"], float(np.max(np.abs(S[sl] - S[:, sl].T))))
        # row law S[J l, m] = e(t(m)/rbar) S[l, m] and column law S[l, J m] = e(t(l)/rbar) S[l, m]
        rows = np.arange(sl.start, sl.stop)
        d1 = np.abs(S[Jp[rows]] - ph[t][None, :] * S[sl])
        d2 = np.abs(S[sl][:, Jp] - ph[t[rows]][:, None] * S[sl])
        res["phase_law"] = max(res["phase_law"], float(d1.max()), float(d2.max()))
    if n <= dense_limit:
        for a in range(0, n, block):
            rr = np.arange(a, min(n, a + block))
            U = S[rr].conj() @ S.T  # conj of (S S^dagger)[rr]
            U[np.arange(len(rr)), rr] -= 1.0
            res["unitarity"] = max(res["unitarity"], float(np.max(np.abs(U))))
            Q = S[rr] @ S
            Q[np.arange(len(rr)), Cp[rr]] -= 1.0
            res["s_squared"] = max(res["s_squared"], float(np.max(np.abs(Q))))
        return res
    reps, sizes = j_orbit_reps(md)
    W = S[np.ix_(reps, reps)] * sizes[None, :]
    cols = S[:, reps]
    slack = 2 * n * res["phase_law"]
    for a in range(0, len(reps), block):
        rr = reps[a:a + block]
        Wb = W[a:a + block]
        U = Wb @ cols.conj().T
        U[t[rr][:, None] != t[None, :]] = 0.0
        U[np.arange(len(rr)), rr] -= 1.0
        res["unitarity"] = max(res["unitarity"], float(np.max(np.abs(U))) + slack)
        Q = Wb @ S[reps]
        Q[(t[rr][:, None] + t[None, :]) % rb != 0] = 0.0
        Q[np.arange(len(rr)), Cp[rr]] -= 1.0
        res["s_squared"] = max(res["s_squared"], float(np.max(np.abs(Q))) + slack)
    return res


def phase_law_deviation(md: ModularData) -> float:
    """Max deviation of the general two-sided law over all powers a, b."""
    S, ctx = md.S, md.ctx
    rb = ctx.rbar
    t = md.t_values()
    worst = 0.0
    for a in range(rb):
        Ja = md.perm(lambda w: apply_J(w, a))
        for b in range(rb):
            Jb = md.perm(lambda w: apply_J(w, b))
            ex = (b * t[:, None] + a * t[None, :] + ctx.k * a * b) % rb
            lhs = S[np.ix_(Ja, Jb)]
            worst = max(worst, float(np.max(np.abs(lhs - _phase_table(rb)[ex] * S))))
    return worst


# ------------------------------------------------------ rank-level duality

def rank_level_check(ctx: AlgebraContext, md: ModularData = None, md_dual: ModularData = None) -> Dict[str, float]:
    """Entrywise deviations of the rank-level relations for S and T."""
    if ctx.k < 2:
        raise ValueError("rank-level duality needs k >= 2")
    dual = ctx.dual()
    md = md or build_modular_data(ctx)
    md_dual = md_dual or build_modular_data(dual)
    tw = [rank_level_transpose(w, ctx) for w in md.weights]
    ti = np.array([md_dual.index[v] for v in tw], dtype=np.intp)
    t = md.t_values()
    rk = ctx.rbar * ctx.k
    pred = sqrt(ctx.k / ctx.rbar) * np.exp(2j * np.pi * np.outer(t, t) / rk) * md_dual.S[np.ix_(ti, ti)].conj()
    s_dev = float(np.max(np.abs(md.S - pred)))
    lhs = md.T * md.T[0].conj()
    rhs = np.exp(1j * np.pi * t * (rk - t) / rk) * md_dual.T[ti].conj() * md_dual.T[0]
    t_dev = float(np.max(np.abs(lhs - rhs)))
    # phase-free form on weights of zero rbar-ality
    p1 = np.flatnonzero(t % ctx.rbar == 0)
    shift = [apply_J(tw[i], -(int(t[i]) // ctx.rbar)) for i in p1]
    si = np.array([md_dual.index[v] for v in shift], dtype=np.intp)
    pf = sqrt(ctx.k / ctx.rbar) * md_dual.S[np.ix_(si, ti)].conj()
    pf_dev = float(np.max(np.abs(md.S[p1] - pf))) if len(p1) else 0.0
    return {"S": s_dev, "T": t_dev, "S_prime": pf_dev}


# -------------------------------------------------- closed-form q-dimensions

def fixed_point_weight(ctx: AlgebraContext, p: int) -> Weight:
    """phi^p = sum_j (k p / rbar) Lambda_{p j}."""
    _check_period(ctx, p)
    c = ctx.k * p // ctx.rbar
    return tuple(c if i % p == 0 else 0 for i in range(ctx.rbar))


def _check_period(ctx: AlgebraContext, p: int) -> None:
    if p < 1 or ctx.rbar % p or p >= ctx.rbar or ctx.k % (ctx.rbar // p):
        raise ValueError(f"period {p} needs p | rbar, p < rbar and (rbar/p) | k at {ctx}")


def fixed_point_qdim(ctx: AlgebraContext, p: int) -> float:
    """q-dimension of phi^p from the closed product for S[vacuum, phi^p]."""
    _check_period(ctx, p)
    rb, kb = ctx.rbar, ctx.kbar
    val = 2.0 ** (rb * (p - 1) / 2) * (rb / p) ** (rb / 2)
    for j in range(1, p):
        val *= np.sin(np.pi * j * rb / (p * kb)) ** (rb - j * rb / p)
    s00 = 1.0
    for i in range(rb):
        for j in range(i + 1, rb):
            s00 *= 2 * np.sin(np.pi * (j - i) / kb)
    return float(val / s00)


def lambda_gen(ctx: AlgebraContext, i: int) -> Weight:
    """(k-2) Lambda_0 + Lambda_i + Lambda_{rbar-i}."""
    return from_indices(ctx, [i, ctx.rbar - i])


def mu_gen(ctx: AlgebraContext, j: int) -> Weight:
    """(k-3) Lambda_0 + Lambda_1 + Lambda_j + Lambda_{r-j}."""
    return from_indices(ctx, [1, j, ctx.r - j])


def big_lambda_gen(ctx: AlgebraContext, ell: int) -> Weight:
    """(k-1) Lambda_0 + Lambda_ell (Lambda^rbar is the vacuum)."""
    return fundamental(ctx, ell % ctx.rbar)


def generator_qdims(ctx: AlgebraContext) -> Dict[str, Tuple[Weight, float, float]]:
    """Closed-form q-dimensions of the generator families with the explicit weights.

    Returns name -> (weight, closed form, sine product of the weight).
    """
    rb, kb = ctx.rbar, ctx.kbar
    sn = lambda x: np.sin(np.pi * x / kb)
    out = {}
    if ctx.k >= 2:
        for ell in range(1, rb // 2 + 1):
            val = sn(rb - 2 * ell + 1) / sn(rb + 1)
            for j in range(1, ell + 1):
                val *= sn(rb + 2 - j) ** 2 / sn(j) ** 2
            w = lambda_gen(ctx, ell)
            out[f"lambda{ell}"] = (w, float(val), qdim(w, ctx))
    if ctx.k >= 3:
        for ell in range(1, ctx.r // 2 + 1):
            val = (sn(rb - ell) * sn(rb + 2) * sn(rb - 2 * ell) * sn(ell)
                   / (sn(1) * sn(ell + 1) ** 2 * sn(rb + 1)))
            for j in range(1, ell + 1):
                val *= sn(rb + 2 - j) ** 2 / sn(j) ** 2
            w = mu_gen(ctx, ell)
            out[f"mu{ell}"] = (w, float(val), qdim(w, ctx))
    for ell in range(1, rb):
        val = 1.0
        for j in range(1, ell + 1):
            val *= sn(rb + 1 - j) / sn(j)
        w = big_lambda_gen(ctx, ell)
        out[f"Lambda{ell}"] = (w, float(val), qdim(w, ctx))
    return out
