"""Brute-force classification of ADE7-type invariants and the q-dimension screens.

Search outline (per divisor d of rbar):

* a physical matrix whose vacuum row and column live on the J-orbit of the
  vacuum has J_L = J_R = J_d for some d, its vacuum row/column is the
  indicator of the J_d-orbit of the vacuum, it is supported on the weights of
  integral J_d-charge, and it is constant on products of J_d-orbits;
* in orbit coordinates X the S-invariance becomes  Sigma X = X Sigma^T  with
  Sigma[O1, O2] = sum_{v in O2} S[rep(O1), v], and T-invariance masks X;
* the affine solution space (after fixing the vacuum row/column) is searched
  for non-negative integer points by depth-first search over entries with
  linear-programming bounds.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linprog

from .fusion import fusion_generators
from .invariants import (
    EXCEPTIONAL_CONTEXTS,
    InvariantMatrix,
    build_C,
    build_simple_current,
    compose,
    exceptional_catalog,
    simple_current_valid,
    verify,
)
from .modular_data import ModularData, build_modular_data, fixed_point_qdim, qdim
from .weights import (
    AlgebraContext,
    Weight,
    apply_C,
    apply_J,
    enumerate_p_plus,
    from_indices,
    fundamental,
    orbit_set,
    scaled_norm,
    t_ality,
)

log = logging.getLogger(__name__)

TOL_NULL = 1e-8
TOL_INT = 1e-6
DEFAULT_NODE_CAP = 10 ** 8
DEFAULT_DIM_CAP = 24
DEGENERACY_RTOL = 1e-7


class SearchOverflow(RuntimeError):
    """The DFS node budget was exhausted before the search space was covered."""


class DimensionCapExceeded(RuntimeError):
    """The affine solution space is larger than the configured cap."""


# ------------------------------------------------------------ reduced system

@dataclass
class OrbitSystem:
    """J_d-orbit coordinates for one divisor d."""

    d: int
    reps: List[int]                 # weight index of each orbit representative
    members: List[List[int]]        # weight indices of each orbit
    sizes: np.ndarray
    Sigma: np.ndarray               # orbit-summed S
    allowed: np.ndarray             # boolean mask of admissible orbit pairs
    vac: int                        # orbit number of the vacuum


def orbit_system(md: ModularData, d: int, qdim_prune: bool = True) -> OrbitSystem:
    ctx = md.ctx
    m = ctx.rbar // d
    support = [w for w in md.weights if t_ality(w) % m == 0]
    os_ = orbit_set(support, d)
    members = [[md.index[v] for v in os_.members[rep]] for rep in os_.reps]
    reps = [g[0] for g in members]
    sizes = np.array([len(g) for g in members])
    N = len(reps)
    Sigma = np.zeros((N, N), dtype=complex)
    for b, g in enumerate(members):
        Sigma[:, b] = md.S[np.ix_(reps, g)].sum(axis=1)
    # T selection: every pair in the block must share the norm class
    mod = 2 * ctx.kbar * ctx.rbar
    cls = []
    for g in members:
        c = {scaled_norm(md.weights[i]) % mod for i in g}
        cls.append(next(iter(c)) if len(c) == 1 else None)
    cls_arr = np.array([-1 if c is None else c for c in cls])
    allowed = (cls_arr[:, None] == cls_arr[None, :]) & (cls_arr[:, None] >= 0)
    if qdim_prune:
        # a nonzero entry needs D(l)/D(m) within [|J_d m|/|J_d|, |J_d|/|J_d l|]
        D = md.qdims()[reps]
        ratio = D[:, None] / D[None, :]
        lo = sizes[None, :] / m
        hi = m / sizes[:, None]
        allowed &= (ratio >= lo * (1 - 1e-9)) & (ratio <= hi * (1 + 1e-9))
    vac = 0
    return OrbitSystem(d, reps, members, sizes, Sigma, allowed, vac)


def _real_nullspace(A: np.ndarray, tol: float = TOL_NULL) -> np.ndarray:
    """Orthonormal real basis (columns) of {x real : A x = 0} for complex A."""
    R = np.vstack([A.real, A.imag])
    if R.shape[1] == 0:
        return np.zeros((0, 0))
    _, s, vh = sla.svd(R, full_matrices=True)
    rank = int(np.sum(s > tol * max(1.0, s[0] if s.size else 1.0)))
    return vh[rank:].T.copy()


def reduced_commutant(sys_: OrbitSystem) -> Tuple[np.ndarray, np.ndarray]:
    """Real basis of orbit matrices X with Sigma X = X Sigma^T on the allowed pairs.

    Solved as the fixed space of X -> mask(Sigma X Sigma^H): this is conjugation
    by S followed by an orthogonal projection (in the orbit-size weighted norm),
    so a fixed point is exactly a masked X that commutes.

    Returns (pairs, basis) where pairs is a (u, 2) array of orbit pairs and
    basis has shape (u, dim).
    """
    pairs = np.argwhere(sys_.allowed)
    a, b = pairs[:, 0], pairs[:, 1]
    F = sys_.Sigma[np.ix_(a, a)] * np.conj(sys_.Sigma[np.ix_(b, b)])
    F[np.diag_indices_from(F)] -= 1.0
    return pairs, _real_nullspace(F)


@dataclass
class CommutantBasis:
    ctx: AlgebraContext
    basis: List[np.ndarray]
    support: np.ndarray
    residual: float

    @property
    def dim(self) -> int:
        return len(self.basis)

    def contains(self, M: np.ndarray) -> float:
        """Least-squares residual of M against the span."""
        if not self.basis:
            return float(np.abs(M).max())
        B = np.stack([b.ravel() for b in self.basis], axis=1)
        c, *_ = np.linalg.lstsq(B, M.ravel().astype(float), rcond=None)
        return float(np.abs(B @ c - M.ravel()).max())


def commutant_basis(md: ModularData, max_size: int = 400) -> CommutantBasis:
    """Real basis of {X : SX = XS, TX = XT}, restricted to equal-T pairs."""
    if md.n > max_size:
        raise ValueError(f"commutant of {md.n} weights is above the dense limit {max_size}")
    sys_ = orbit_system(md, md.ctx.rbar, qdim_prune=False)
    pairs, basis = reduced_commutant(sys_)
    n = md.n
    order = np.array(sys_.reps)
    mats = []
    for v in basis.T:
        X = np.zeros((n, n))
        X[order[pairs[:, 0]], order[pairs[:, 1]]] = v
        mats.append(X)
    res = max((float(np.abs(md.S @ X - X @ md.S).max()) for X in mats), default=0.0)
    return CommutantBasis(md.ctx, mats, sys_.allowed, res)


# ------------------------------------------------------------------- search

@dataclass
class SearchStats:
    nodes: int = 0
    lps: int = 0
    affine_dim: Dict[int, int] = field(default_factory=dict)
    seconds: float = 0.0


def _lp_range(c_obj, A_ub, b_ub, A_eq, b_eq, bounds):
    out = []
    for sign in (1, -1):
        res = linprog(sign * c_obj, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                      bounds=bounds, method="highs")
        if res.status == 2:
            return None
        if res.status != 0:
            raise RuntimeError(f"LP failed: {res.message}")
        out.append(sign * res.fun)
    return out


def _search_divisor(md: ModularData, d: int, node_cap: int, dim_cap: int,
                    stats: SearchStats) -> List[np.ndarray]:
    """All non-negative integer orbit matrices for J_L = J_R = J_d."""
    sys_ = orbit_system(md, d)
    pairs, basis = reduced_commutant(sys_)
    N = len(sys_.reps)
    pos = {(int(a), int(b)): i for i, (a, b) in enumerate(pairs)}
    vac = sys_.vac
    if (vac, vac) not in pos:
        return []
    # vacuum row and column: 1 at (vac, vac), 0 elsewhere
    fixed_idx, fixed_val = [], []
    for o in range(N):
        for key in ((vac, o), (o, vac)):
            if key in pos and pos[key] not in fixed_idx:
                fixed_idx.append(pos[key])
                fixed_val.append(1.0 if key == (vac, vac) else 0.0)
    Bf = basis[fixed_idx]
    c0, *_ = np.linalg.lstsq(Bf, np.array(fixed_val), rcond=None)
    if np.abs(Bf @ c0 - fixed_val).max() > 1e-7:
        return []
    K = _real_nullspace(Bf.astype(complex)) if Bf.size else np.eye(basis.shape[1])
    x0 = basis @ c0
    Nb = basis @ K  # x = x0 + Nb z
    dim = Nb.shape[1]
    stats.affine_dim[d] = dim
    if dim > dim_cap:
        raise DimensionCapExceeded(f"affine dimension {dim} at d={d} exceeds cap {dim_cap}")
    # entries must be >= 0; columns of Nb that vanish identically are irrelevant
    Nb[np.abs(Nb) < 1e-12] = 0.0
    live = np.flatnonzero(np.abs(Nb).max(axis=1) > 0) if dim else np.array([], dtype=int)
    A_ub = -Nb[live]
    b_ub = x0[live] + 1e-9
    bounds = [(None, None)] * dim
    found = []

    def finish(z):
        x = x0 + Nb @ z if dim else x0.copy()
        xr = np.rint(x)
        if np.abs(x - xr).max() > TOL_INT or xr.min() < 0:
            return
        X = np.zeros((N, N))
        X[pairs[:, 0], pairs[:, 1]] = xr
        found.append(X)

    def rec(eq_rows, eq_vals):
        stats.nodes += 1
        if stats.nodes > node_cap:
            raise SearchOverflow(f"node cap {node_cap} exceeded at {md.ctx} d={d}")
        A_eq = np.array(eq_rows) if eq_rows else None
        b_eq = np.array(eq_vals) if eq_rows else None
        # remaining freedom
        if eq_rows:
            rest = sla.null_space(A_eq)
        else:
            rest = np.eye(dim)
        if rest.shape[1] == 0:
            z = np.linalg.lstsq(A_eq, b_eq, rcond=None)[0]
            finish(z)
            return
        # branch on the live entry with the narrowest LP range
        proj = np.abs(Nb[live] @ rest).max(axis=1)
        cand = live[proj > 1e-9]
        best = None
        for e in cand:
            stats.lps += 2
            rng = _lp_range(Nb[e], A_ub, b_ub, A_eq, b_eq, bounds)
            if rng is None:
                return
            lo = int(np.ceil(x0[e] + rng[0] - TOL_INT))
            hi = int(np.floor(x0[e] + rng[1] + TOL_INT))
            if hi < lo:
                return
            if best is None or hi - lo < best[1] - best[0]:
                best = (lo, hi, e)
                if hi == lo:
                    break
        lo, hi, e = best
        for v in range(lo, hi + 1):
            rec(eq_rows + [Nb[e]], eq_vals + [v - x0[e]])

    if dim == 0:
        finish(np.zeros(0))
    else:
        rec([], [])
    return [_expand(md, sys_, X) for X in found]


def _expand(md: ModularData, sys_: OrbitSystem, X: np.ndarray) -> np.ndarray:
    M = np.zeros((md.n, md.n), dtype=np.int64)
    nz = np.argwhere(X != 0)
    for a, b in nz:
        M[np.ix_(sys_.members[a], sys_.members[b])] = int(X[a, b])
    return M


def enumerate_ade7(md: ModularData, basis: CommutantBasis = None, node_cap: int = DEFAULT_NODE_CAP,
                   dim_cap: int = DEFAULT_DIM_CAP, stats: SearchStats = None) -> List[InvariantMatrix]:
    """Every ADE7-type invariant at the context of ``md``, re-verified and deduplicated."""
    import scipy.sparse as sp

    stats = stats if stats is not None else SearchStats()
    t0 = time.time()
    out, seen = [], set()
    for d in md.ctx.divisors():
        for M in _search_divisor(md, d, node_cap, dim_cap, stats):
            key = M.tobytes()
            if key in seen:
                continue
            seen.add(key)
            inv = InvariantMatrix(md.ctx, md.weights, sp.csr_matrix(M), "")
            rep = verify(inv, md)
            if not rep.ade7_type:
                raise AssertionError(f"search produced a matrix failing verification at {md.ctx}")
            if basis is not None and basis.contains(M) > 1e-6:
                raise AssertionError("search produced a matrix outside the commutant")
            out.append(inv)
    stats.seconds = time.time() - t0
    out.sort(key=lambda m: m.key())
    return out


# ------------------------------------------------------------ expected list

def expected_list(ctx: AlgebraContext, weights: Sequence[Weight] = None) -> List[InvariantMatrix]:
    """The complete list for this context, redundancies removed by rule."""
    weights = list(weights) if weights is not None else enumerate_p_plus(ctx)
    out = []
    c_values = (0,) if (ctx.r == 1 or ctx.k <= 2) else (0, 1)
    redundant_c = {(2, 3, 1), (2, 6, 1), (4, 5, 1), (5, 3, 2)}
    C = build_C(ctx, weights)
    for d in ctx.divisors():
        if not simple_current_valid(ctx, d):
            continue
        if ctx.rbar == 2 and ctx.k == 2 and d == 2:
            continue  # same matrix as d = 1
        I = build_simple_current(ctx, d, weights)
        out.append(I)
        if 1 in c_values and (ctx.r, ctx.k, d) not in redundant_c:
            out.append(compose(C, I, name=f"C.{I.name}"))
    if (ctx.r, ctx.k) in EXCEPTIONAL_CONTEXTS:
        cat = exceptional_catalog(ctx, weights)
        out.extend(cat)
        if (ctx.r, ctx.k) in ((2, 9), (8, 3), (15, 2)):
            E = cat[0]
            out.append(compose(C, E, name=f"C.{E.name}"))
    return out


def _display_name(M: InvariantMatrix) -> str:
    # I[J_rbar] is the identity
    name = M.name
    rb = M.ctx.rbar
    if name.startswith(("I[", "C.I[")):
        name = name.replace(f"I[J{rb}]", "I")
    return "C" if name == "C.I" else name


def integer_relation(M: InvariantMatrix, basis: Sequence[InvariantMatrix]) -> Optional[str]:
    """Express M as an integer combination of ``basis`` if one exists, e.g. "E - I[J3] + I[J1]"."""
    if not basis:
        return None
    B = np.stack([b.dense().ravel() for b in basis], axis=1).astype(float)
    c, *_ = np.linalg.lstsq(B, M.dense().ravel().astype(float), rcond=None)
    ci = np.rint(c)
    if np.abs(c - ci).max() > 1e-6 or np.abs(B @ ci - M.dense().ravel()).max() > 1e-6:
        return None
    parts = []
    for v, b in zip(ci.astype(int), basis):
        if v == 0:
            continue
        coef = "" if abs(v) == 1 else f"{abs(v)}*"
        parts.append(("- " if v < 0 else "+ ") + coef + _display_name(b))
    text = " ".join(parts)
    return text[2:] if text.startswith("+ ") else text


@dataclass
class ClassificationReport:
    ctx: AlgebraContext
    found: List[InvariantMatrix]
    expected: List[InvariantMatrix]
    names: List[str]
    missing: List[str]
    stats: SearchStats
    relations: Dict[int, str] = field(default_factory=dict)

    @property
    def match(self) -> bool:
        return not self.missing and "UNEXPECTED" not in self.names and len(self.found) == len(self.expected)

    def to_json(self) -> Dict:
        return {
            "ctx": {"r": self.ctx.r, "k": self.ctx.k},
            "verdict": "MATCH" if self.match else "MISMATCH",
            "found": [dict({"name": n, "entries": m.to_json()["entries"]},
                           **({"relation": self.relations[i]} if i in self.relations else {}))
                      for i, (n, m) in enumerate(zip(self.names, self.found))],
            "expected": sorted(_display_name(m) for m in self.expected),
            "missing": self.missing,
            "nodes": self.stats.nodes,
            "affine_dim": {str(d): v for d, v in sorted(self.stats.affine_dim.items())},
        }


def classification_report(ctx: AlgebraContext, md: ModularData = None, node_cap: int = DEFAULT_NODE_CAP,
                          dim_cap: int = DEFAULT_DIM_CAP) -> ClassificationReport:
    md = md if md is not None else build_modular_data(ctx)
    stats = SearchStats()
    found = enumerate_ade7(md, node_cap=node_cap, dim_cap=dim_cap, stats=stats)
    log.debug("(%d,%d): %d found, %d nodes, %.2fs", ctx.r, ctx.k, len(found), stats.nodes, stats.seconds)
    expected = expected_list(ctx, md.weights)
    exp_by_key = {m.key(): _display_name(m) for m in expected}
    names = [exp_by_key.get(m.key(), "UNEXPECTED") for m in found]
    found = [m.renamed(n) for m, n in zip(found, names)]
    found_keys = {m.key() for m in found}
    missing = sorted(_display_name(m) for m in expected if m.key() not in found_keys)
    order = sorted(range(len(found)), key=lambda i: (names[i], found[i].key()))
    found = [found[i] for i in order]
    names = [names[i] for i in order]
    relations = {}
    for i, n in enumerate(names):
        if n == "UNEXPECTED":
            rel = integer_relation(found[i], expected)
            if rel:
                relations[i] = rel
    return ClassificationReport(ctx, found, expected, names, missing, stats, relations)


# -------------------------------------------------------------- qdim screens

def screen_generators(ctx: AlgebraContext, d: int) -> List[Tuple[str, Weight]]:
    return fusion_generators(ctx, d)


def qdim_screen(ctx: AlgebraContext, d: int) -> bool:
    """True when max over generators of D is below (p/rbar) D(phi^p) for every fixed-point period p.

    Vacuously true when J_d has no fixed points.  Equality fails the screen;
    it is detected to relative tolerance ``DEGENERACY_RTOL`` since both sides
    are floating-point sine products.
    """
    rb, k = ctx.rbar, ctx.k
    if rb % d:
        raise ValueError(f"d={d} does not divide rbar={rb}")
    periods = [p for p in range(d, rb, d) if rb % p == 0 and k % (rb // p) == 0]
    if not periods or k < 2:
        return True
    g = max(qdim(w, ctx) for _, w in screen_generators(ctx, d))
    return all(g < (p / rb) * fixed_point_qdim(ctx, p) * (1 - DEGENERACY_RTOL) for p in periods)


def qdim_screen_grid(r_max: int = 16, k_max: int = 17) -> List[Tuple[int, int]]:
    """(r, k) pairs where the screen fails for some d."""
    fails = []
    for r in range(1, r_max + 1):
        for k in range(1, k_max + 1):
            ctx = AlgebraContext(r, k)
            if not all(qdim_screen(ctx, d) for d in ctx.divisors()):
                fails.append((r, k))
    return fails


def symmetry_class(w: Weight) -> Tuple[Weight, ...]:
    """Orbit of w under the group generated by J and C, sorted."""
    out = set()
    for c in (tuple(w), apply_C(w)):
        for a in range(len(w)):
            out.add(apply_J(c, a))
    return tuple(sorted(out, reverse=True))


def qdim_degeneracy_scan(ctx: AlgebraContext, rtol: float = DEGENERACY_RTOL) -> List[Weight]:
    """Weights outside the J, C class of lambda^1 with the same q-dimension.

    Every weight with q-dimension at most D(lambda^1) is reached by moving label
    mass onto one new index at a time, starting from k Lambda_0: along the line
    that empties one of two nonzero labels into the other, D exceeds the
    smaller of its two endpoint values, so each weight has a lower-D parent
    with one fewer nonzero label.  The closure is taken over J, C classes.
    """
    if ctx.k < 2:
        raise ValueError("needs k >= 2")
    lam1 = from_indices(ctx, [1, ctx.r])
    target = qdim(lam1, ctx)
    limit = target * (1 + rtol)
    canon = lambda w: symmetry_class(w)[0]
    start = canon(fundamental(ctx, 0, ctx.k))
    seen = {start}
    level, below = [start], [start]
    rb = ctx.rbar
    while level:
        nxt = []
        for e in level:
            supp = [i for i in range(rb) if e[i]]
            for i in supp:
                for j in range(rb):
                    if e[j]:
                        continue
                    for u in range(1, e[i]):
                        v = list(e)
                        v[i] -= u
                        v[j] += u
                        c = canon(tuple(v))
                        if c in seen:
                            continue
                        seen.add(c)
                        if qdim(c, ctx) <= limit:
                            nxt.append(c)
        below.extend(nxt)
        level = nxt
    L = canon(lam1)
    out = []
    for c in sorted(below, reverse=True):
        if c != L and abs(qdim(c, ctx) - target) <= rtol * target:
            out.extend(symmetry_class(c))
    return sorted(set(out), reverse=True)


def degeneracy_grid(r_max: int = 16, k_max: int = 16) -> Dict[Tuple[int, int], List[Weight]]:
    out = {}
    for r in range(1, r_max + 1):
        for k in range(2, k_max + 1):
            ctx = AlgebraContext(r, k)
            W = qdim_degeneracy_scan(ctx)
            if W:
                out[(r, k)] = W
    return out
