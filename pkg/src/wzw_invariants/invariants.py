"""Candidate partition-function matrices: builders, verification, diagnostics.

Matrices are stored sparse (scipy CSR, int64) over the ordered weight list of
the context; entries are always finalized non-negative integers.
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from .modular_data import ModularData
from .weights import (
    AlgebraContext,
    Weight,
    apply_C,
    apply_J,
    enumerate_p_plus,
    format_weight,
    from_indices,
    orbit,
    parse_weight,
    scaled_norm,
    t_ality,
    weight_index,
)

TOL_M = 1e-8
TOL_PERRON = 1e-10


class NonIntegralError(ArithmeticError):
    """A scaled product did not come out integral and non-negative."""


class UnsupportedContext(ValueError):
    """No exceptional invariant is catalogued for this (r, k)."""


@dataclass
class InvariantMatrix:
    ctx: AlgebraContext
    weights: List[Weight]
    M: sp.csr_matrix
    name: str = ""
    index: Dict[Weight, int] = field(default=None, repr=False)

    def __post_init__(self):
        if self.index is None:
            self.index = weight_index(self.weights)
        self.M = sp.csr_matrix(self.M, dtype=np.int64)
        self.M.eliminate_zeros()
        self.M.sort_indices()

    @property
    def n(self) -> int:
        return len(self.weights)

    def get(self, lam: Weight, mu: Weight) -> int:
        return int(self.M[self.index[tuple(lam)], self.index[tuple(mu)]])

    def dense(self) -> np.ndarray:
        return self.M.toarray()

    def entries(self) -> List[Tuple[int, int, int]]:
        coo = self.M.tocoo()
        return sorted(zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()))

    def key(self) -> Tuple:
        return tuple(self.entries())

    def __eq__(self, other):
        if not isinstance(other, InvariantMatrix):
            return NotImplemented
        return self.ctx.r == other.ctx.r and self.ctx.k == other.ctx.k and (self.M != other.M).nnz == 0

    def __hash__(self):
        return hash(self.key())

    def is_symmetric(self) -> bool:
        return (self.M != self.M.T).nnz == 0

    def transpose(self) -> "InvariantMatrix":
        return InvariantMatrix(self.ctx, self.weights, self.M.T.tocsr(), self.name + "^T", self.index)

    def renamed(self, name: str) -> "InvariantMatrix":
        return InvariantMatrix(self.ctx, self.weights, self.M, name, self.index)

    def to_json(self) -> Dict:
        return {
            "ctx": {"r": self.ctx.r, "k": self.ctx.k},
            "name": self.name,
            "entries": [[format_weight(self.weights[i]), format_weight(self.weights[j]), v]
                        for i, j, v in self.entries()],
        }


def from_entries(ctx: AlgebraContext, entries: Dict[Tuple[Weight, Weight], int], name: str = "",
                 weights: Sequence[Weight] = None) -> InvariantMatrix:
    weights = list(weights) if weights is not None else enumerate_p_plus(ctx)
    idx = weight_index(weights)
    rows, cols, vals = [], [], []
    for (a, b), v in entries.items():
        if v:
            rows.append(idx[tuple(a)])
            cols.append(idx[tuple(b)])
            vals.append(int(v))
    M = sp.csr_matrix((vals, (rows, cols)), shape=(len(weights), len(weights)), dtype=np.int64)
    return InvariantMatrix(ctx, weights, M, name, idx)


def from_json(data: Dict, ctx: AlgebraContext = None) -> InvariantMatrix:
    if ctx is None:
        ctx = AlgebraContext(int(data["ctx"]["r"]), int(data["ctx"]["k"]))
    ent = {}
    for a, b, v in data["entries"]:
        key = (parse_weight(a, ctx), parse_weight(b, ctx))
        ent[key] = ent.get(key, 0) + int(v)
    return from_entries(ctx, ent, data.get("name", ""))


def dumps(M: InvariantMatrix) -> str:
    return json.dumps(M.to_json(), sort_keys=True)


# ------------------------------------------------------------------ builders

def _perm_matrix(ctx, weights, fn, name):
    idx = weight_index(weights)
    n = len(weights)
    cols = [idx[fn(w)] for w in weights]
    M = sp.csr_matrix((np.ones(n, dtype=np.int64), (np.arange(n), cols)), shape=(n, n))
    return InvariantMatrix(ctx, weights, M, name, idx)


def build_identity(ctx: AlgebraContext, weights: Sequence[Weight] = None) -> InvariantMatrix:
    weights = list(weights) if weights is not None else enumerate_p_plus(ctx)
    return _perm_matrix(ctx, weights, lambda w: w, "I")


def build_C(ctx: AlgebraContext, weights: Sequence[Weight] = None) -> InvariantMatrix:
    weights = list(weights) if weights is not None else enumerate_p_plus(ctx)
    return _perm_matrix(ctx, weights, apply_C, "C")


def simple_current_valid(ctx: AlgebraContext, d: int) -> bool:
    """Whether k' d is even (the criterion for I[J_d] to be physical)."""
    return (ctx.kprime * d) % 2 == 0


def build_simple_current(ctx: AlgebraContext, d: int, weights: Sequence[Weight] = None) -> InvariantMatrix:
    """I[J_d]: entry (l, J^{dj} l) += 1 whenever 2 t(l) + d j k' = 0 mod 2 rbar/d."""
    if ctx.rbar % d:
        raise ValueError(f"d={d} does not divide rbar={ctx.rbar}")
    weights = list(weights) if weights is not None else enumerate_p_plus(ctx)
    idx = weight_index(weights)
    m = ctx.rbar // d
    ent: Dict[Tuple[int, int], int] = {}
    for i, w in enumerate(weights):
        t = t_ality(w)
        for j in range(1, m + 1):
            if (2 * t + d * j * ctx.kprime) % (2 * m) == 0:
                key = (i, idx[apply_J(w, d * j)])
                ent[key] = ent.get(key, 0) + 1
    n = len(weights)
    if ent:
        r, c = zip(*ent.keys())
        M = sp.csr_matrix((list(ent.values()), (r, c)), shape=(n, n), dtype=np.int64)
    else:
        M = sp.csr_matrix((n, n), dtype=np.int64)
    return InvariantMatrix(ctx, weights, M, f"I[J{d}]", idx)


def compose(M1: InvariantMatrix, M2: InvariantMatrix, scalar: Fraction = Fraction(1), name: str = None) -> InvariantMatrix:
    """scalar * M1 M2, required to come out non-negative and integral."""
    if (M1.ctx.r, M1.ctx.k) != (M2.ctx.r, M2.ctx.k):
        raise ValueError("matrices belong to different contexts")
    scalar = Fraction(scalar)
    P = (M1.M @ M2.M).tocsr()
    if scalar != 1:
        num = P.data * scalar.numerator
        if np.any(num % scalar.denominator):
            raise NonIntegralError(f"{scalar} * product is not integral")
        P = sp.csr_matrix((num // scalar.denominator, P.indices, P.indptr), shape=P.shape)
    if P.nnz and P.data.min() < 0:
        raise NonIntegralError("negative entry in product")
    if name is None:
        pre = "" if scalar == 1 else f"{scalar}*"
        name = f"{pre}{M1.name}.{M2.name}"
    return InvariantMatrix(M1.ctx, M1.weights, P, name, M1.index)


def conjugate(M: InvariantMatrix) -> InvariantMatrix:
    """C . M, named the way the classification reports it."""
    return compose(build_C(M.ctx, M.weights), M, name=f"C.{M.name}")


# ------------------------------------------------------ exceptional catalog

@dataclass(frozen=True)
class Term:
    """coef on every (l, m) with l in ``left`` and m in ``right``.

    ``mirror`` adds the transposed block as well (the a*b shorthand).
    """

    coef: int
    left: Tuple[Weight, ...]
    right: Tuple[Weight, ...]
    mirror: bool = False


def orbit_sum(w: Weight, d: int) -> Tuple[Weight, ...]:
    return orbit(w, d)


def _w(s: str) -> Weight:
    return tuple(int(c) for c in s)


def _catalog_terms(r: int, k: int) -> Tuple[int, List[Term]]:
    ctx = AlgebraContext(r, k)
    one = lambda w: (w,)
    if (r, k) == (1, 16):
        return 1, [Term(1, orbit((14, 2), 1), one((8, 8)), True), Term(1, one((8, 8)), one((8, 8)))]
    if (r, k) == (2, 9):
        return 1, [Term(2, one(_w("333")), one(_w("333"))),
                   Term(1, orbit(_w("711"), 1), one(_w("333")), True)]
    if (r, k) == (3, 8):
        f = one(_w("2222"))
        a = orbit(_w("5012"), 1) + orbit(_w("5210"), 1)
        b = orbit(_w("4040"), 1)
        return 1, [Term(2, f, f), Term(1, a, f, True), Term(1, orbit(_w("6101"), 1), b, True), Term(1, b, b)]
    if (r, k) == (4, 5):
        f = one(_w("11111"))
        return 1, [Term(1, orbit(_w("31001"), 1), f, True), Term(4, f, f)]
    if (r, k) == (7, 4):
        a, b = orbit(_w("20002000"), 2), orbit(_w("02000200"), 2)
        f, g = one(_w("01010101")), one(_w("10101010"))
        return 2, [
            Term(1, a, a), Term(1, b, b),
            Term(1, orbit(_w("21000001"), 2), a, True),
            Term(1, orbit(_w("12100000"), 2), b, True),
            Term(1, orbit(_w("12000010"), 2) + orbit(_w("10100002"), 2), f, True),
            # the printed list runs this term on without an operator; read as a sum
            Term(1, orbit(_w("21010000"), 2) + orbit(_w("20000101"), 2), g, True),
            Term(2, f, f), Term(2, g, g),
        ]
    if (r, k) == (8, 3):
        terms = []
        for j in range(3):
            f = one(apply_J(from_indices(ctx, [0, 3, 6]), j))
            terms.append(Term(2, f, f))
            terms.append(Term(1, orbit(apply_J(from_indices(ctx, [2, 3, 4]), j), 3), f, True))
        return 3, terms
    if (r, k) == (15, 2):
        terms = []
        for j in range(8):
            f = one(apply_J(from_indices(ctx, [0, 8]), j))
            terms.append(Term(1, f, f))
            terms.append(Term(1, orbit(apply_J(from_indices(ctx, [3, 5]), j), 8), f, True))
        return 8, terms
    raise UnsupportedContext(f"no exceptional invariant catalogued at (r, k) = ({r}, {k})")


def _projection_terms(literal: bool = False) -> Tuple[int, List[Term]]:
    ctx = AlgebraContext(15, 2)
    terms = []
    for j in range(4):
        f = (apply_J(from_indices(ctx, [0, 8]), 2 * j),)
        # |chi_f|^2 couples f to its whole J^4 orbit {f, J^4 f}; the literal
        # diagonal-only reading does not commute with S
        terms.append(Term(1, f, f if literal else orbit(f[0], 4)))
        terms.append(Term(1, orbit(apply_J(from_indices(ctx, [3, 5]), 2 * j), 4), f, True))
    return 4, terms


EXCEPTIONAL_CONTEXTS = ((1, 16), (2, 9), (3, 8), (4, 5), (7, 4), (8, 3), (15, 2))


def expand_terms(ctx: AlgebraContext, d: int, terms: Sequence[Term], name: str,
                 weights: Sequence[Weight] = None) -> InvariantMatrix:
    """I[J_d] with every row and column touching an exceptional orbit replaced by the terms."""
    base = build_simple_current(ctx, d, weights)
    special = set()
    for t in terms:
        for w in t.left + t.right:
            special.update(orbit(w, d))
    sidx = np.array(sorted(base.index[w] for w in special), dtype=np.intp)
    keep = np.ones(base.n, dtype=np.int64)
    keep[sidx] = 0
    D = sp.diags(keep)
    M = (D @ base.M @ D).tolil()
    for t in terms:
        for a in t.left:
            for b in t.right:
                i, j = base.index[a], base.index[b]
                M[i, j] += t.coef
                if t.mirror:
                    M[j, i] += t.coef
    return InvariantMatrix(ctx, base.weights, M.tocsr(), name, base.index)


def exceptional(ctx: AlgebraContext, weights: Sequence[Weight] = None) -> InvariantMatrix:
    d, terms = _catalog_terms(ctx.r, ctx.k)
    return expand_terms(ctx, d, terms, f"E({ctx.r},{ctx.k})", weights)


def projected_exceptional(weights: Sequence[Weight] = None, literal: bool = False) -> InvariantMatrix:
    """The d = 4 invariant at (15, 2) read from its own term list.

    ``literal=True`` keeps only the diagonal |chi_f|^2 entries; that matrix is
    not S-invariant and exists for comparison.
    """
    ctx = AlgebraContext(15, 2)
    d, terms = _projection_terms(literal)
    return expand_terms(ctx, d, terms, "1/2*I[J4].E(15,2)", weights)


def exceptional_catalog(ctx: AlgebraContext, weights: Sequence[Weight] = None) -> List[InvariantMatrix]:
    """Exceptional invariants at this context (E and, at (15,2), the projected one)."""
    E = exceptional(ctx, weights)
    out = [E]
    if (ctx.r, ctx.k) == (15, 2):
        P = compose(build_simple_current(ctx, 4, E.weights), E, Fraction(1, 2), name="1/2*I[J4].E(15,2)")
        out.append(P)
    return out


# -------------------------------------------------------------- verification

@dataclass
class VerificationReport:
    t_selection: bool
    s_commutator: float
    s_commutes: bool
    nonnegative: bool
    integral: bool
    vacuum_normalized: bool
    ade7: bool
    J_L: List[int]
    J_R: List[int]
    groups_balanced: bool
    P_L: List[int]
    P_R: List[int]

    @property
    def physical(self) -> bool:
        return (self.t_selection and self.s_commutes and self.nonnegative
                and self.integral and self.vacuum_normalized)

    @property
    def ade7_type(self) -> bool:
        return self.physical and self.ade7

    def summary(self) -> Dict:
        return {
            "physical": self.physical,
            "ade7": self.ade7_type,
            "t_selection": self.t_selection,
            "s_commutator": self.s_commutator,
            "nonnegative": self.nonnegative,
            "integral": self.integral,
            "vacuum_normalized": self.vacuum_normalized,
            "vacuum_support_in_orbit": self.ade7,
            "J_L": self.J_L,
            "J_R": self.J_R,
            "groups_balanced": self.groups_balanced,
        }


def s_commutator(M: InvariantMatrix, md: ModularData, block: int = 1024) -> float:
    S = md.S
    A = M.M.astype(float)
    worst = 0.0
    for a in range(0, md.n, block):
        sl = slice(a, min(md.n, a + block))
        SM = (A.T @ S[sl].T).T
        MS = A[sl] @ S
        worst = max(worst, float(np.max(np.abs(SM - MS))))
    return worst


def vacuum_orbit_indices(M: InvariantMatrix) -> Dict[int, int]:
    """Power a -> index of J^a applied to the vacuum."""
    vac = M.weights[0]
    return {a: M.index[apply_J(vac, a)] for a in range(M.ctx.rbar)}


def verify(M: InvariantMatrix, md: ModularData, tol: float = TOL_M) -> VerificationReport:
    if len(md.weights) != M.n or md.weights[0] != M.weights[0]:
        raise ValueError("modular data and matrix use different weight lists")
    ctx = M.ctx
    coo = M.M.tocoo()
    norms = np.array([scaled_norm(w) for w in M.weights], dtype=np.int64)
    t_ok = bool(np.all((norms[coo.row] - norms[coo.col]) % (2 * ctx.kbar * ctx.rbar) == 0))
    comm = s_commutator(M, md)
    nonneg = bool(coo.data.size == 0 or coo.data.min() >= 0)
    integral = np.issubdtype(M.M.dtype, np.integer)
    vac_ok = int(M.M[0, 0]) == 1
    vo = vacuum_orbit_indices(M)
    allowed = set(vo.values())
    row0 = set(M.M.getrow(0).indices.tolist())
    col0 = set(M.M.getcol(0).tocoo().row.tolist())
    ade = row0 <= allowed and col0 <= allowed
    JL = sorted(a for a, i in vo.items() if M.M[i, 0] != 0)
    JR = sorted(a for a, i in vo.items() if M.M[0, i] != 0)
    PL = sorted(set(coo.row.tolist()))
    PR = sorted(set(coo.col.tolist()))
    return VerificationReport(t_ok, comm, comm < tol, nonneg, integral, vac_ok, ade,
                              JL, JR, len(JL) == len(JR), PL, PR)


# --------------------------------------------------------------- diagnostics

def perron_radius(B: np.ndarray, tol: float = TOL_PERRON, max_iter: int = 100000) -> float:
    """Spectral radius of an irreducible non-negative matrix.

    Power iteration on B + I (primitive even when B is periodic) with the
    Collatz-Wielandt bracket min/max (Bx)_i / x_i as the stopping rule.
    """
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    if n == 0 or not np.any(B):
        return 0.0
    A = B + np.eye(n)
    x = np.ones(n) / n
    lo, hi = 0.0, np.inf
    for _ in range(max_iter):
        y = A @ x
        ratio = y / x
        lo, hi = ratio.min(), ratio.max()
        x = y / y.sum()
        if hi - lo < tol:
            break
    return float((lo + hi) / 2 - 1.0)


def blocks(M: InvariantMatrix) -> List[List[int]]:
    """Index sets of the indecomposable diagonal blocks (union-find on the support)."""
    parent = list(range(M.n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    coo = M.M.tocoo()
    for i, j in zip(coo.row.tolist(), coo.col.tolist()):
        a, b = find(i), find(j)
        if a != b:
            parent[max(a, b)] = min(a, b)
    groups: Dict[int, List[int]] = {}
    for i in range(M.n):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


@dataclass
class Diagnostics:
    J_L: List[int]
    J_R: List[int]
    equivariant: bool
    block_radii: List[Tuple[List[int], float, float]]
    perron_ok: bool
    monogamous: List[Tuple[int, int]]
    value_law_ok: bool
    parity_ok: bool
    entry_bound: float
    max_entry: int
    bound_ok: bool
    vacuum_balance: float

    def summary(self) -> Dict:
        return {
            "J_L": self.J_L,
            "J_R": self.J_R,
            "equivariant": self.equivariant,
            "nonzero_blocks": len(self.block_radii),
            "perron_ok": self.perron_ok,
            "max_perron_deviation": max([abs(r - len(self.J_L)) for _, r, _ in self.block_radii], default=0.0),
            "monogamous_pairs": len(self.monogamous),
            "value_law_ok": self.value_law_ok,
            "parity_ok": self.parity_ok,
            "max_entry": self.max_entry,
            "entry_bound": self.entry_bound,
            "bound_ok": self.bound_ok,
            "vacuum_balance": self.vacuum_balance,
        }


def structural_diagnostics(M: InvariantMatrix, md: ModularData, tol: float = 1e-7) -> Diagnostics:
    ctx = M.ctx
    rb = ctx.rbar
    vo = vacuum_orbit_indices(M)
    JL = sorted(a for a, i in vo.items() if M.M[i, 0] != 0)
    JR = sorted(a for a, i in vo.items() if M.M[0, i] != 0)
    A = M.M
    # equivariance under all of J_L x J_R
    equi = True
    for a in JL:
        pa = np.array([M.index[apply_J(w, a)] for w in M.weights])
        for b in JR:
            pb = np.array([M.index[apply_J(w, b)] for w in M.weights])
            if (A[pa][:, pb] != A).nnz:
                equi = False
    m = len(JL)
    radii = []
    ok = True
    for g in blocks(M):
        sub = A[g][:, g].toarray()
        if not sub.any():
            continue
        r1 = perron_radius(sub)
        r2 = np.sqrt(perron_radius(sub @ sub.T))
        radii.append((g, r1, float(r2)))
        ok &= abs(r1 - m) < tol and abs(r2 - m) < tol
    # monogamy and the value law
    orbL = {i: {M.index[apply_J(M.weights[i], a)] for a in JL} for i in range(M.n)}
    orbR = {i: {M.index[apply_J(M.weights[i], b)] for b in JR} for i in range(M.n)}
    csr, csc = A.tocsr(), A.tocsc()
    mono, law = [], True
    coo = A.tocoo()
    for i, j, v in zip(coo.row.tolist(), coo.col.tolist(), coo.data.tolist()):
        row = set(csr.indices[csr.indptr[i]:csr.indptr[i + 1]].tolist())
        col = set(csc.indices[csc.indptr[j]:csc.indptr[j + 1]].tolist())
        if row <= orbR[j] and col <= orbL[i]:
            mono.append((i, j))
            expect = m / np.sqrt(len(orbL[i]) * len(orbR[j]))
            law &= abs(v - expect) < 1e-12
    # rows in the support are exactly the weights of integral J_L-charge
    dL = rb // m if m else rb
    parity = {i for i, w in enumerate(M.weights) if t_ality(w) % (rb // dL) == 0}
    support = set(coo.row.tolist())
    s00 = md.S[0, 0].real
    bound = int(A[0, 0]) / s00 ** 2
    mx = int(coo.data.max()) if coo.data.size else 0
    balance = float(abs((md.S[0] @ A.toarray()[:, 0]) - s00 * m)) if M.n <= 5000 else float("nan")
    return Diagnostics(JL, JR, equi, radii, ok and bool(radii), mono, law, parity == support,
                       bound, mx, mx <= bound, balance)


def generic_perron_matrix(m: int) -> np.ndarray:
    """[[m, 1, 1], [1, 0, 0], [1, 0, 0]], the block shape met at a single fixed point."""
    return np.array([[m, 1, 1], [1, 0, 0], [1, 0, 0]], dtype=float)
