"""Level-k integrable weights of A_r^(1) and the diagram-symmetry combinatorics.

A weight is stored as a plain tuple of Dynkin labels ``(l0, l1, ..., lr)``
summing to the level.  Everything here is pure and works on tuples, so the
objects can be shared freely between workers.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Dict, Iterable, List, Sequence, Tuple

Weight = Tuple[int, ...]

DEFAULT_CAP = 20000


class CapacityError(ValueError):
    """Raised when a weight set is larger than the configured cap."""


@dataclass(frozen=True)
class AlgebraContext:
    """Rank and level of A_r^(1) together with the derived constants.

    Attributes
    ----------
    r : int
        Rank of the horizontal algebra A_r.
    k : int
        Level.
    cap : int
        Largest weight set that will be enumerated.
    """

    r: int
    k: int
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if not isinstance(self.r, int) or not isinstance(self.k, int):
            raise TypeError("rank and level must be integers")
        if self.r < 1 or self.k < 1:
            raise ValueError(f"need r >= 1 and k >= 1, got r={self.r}, k={self.k}")

    @property
    def rbar(self) -> int:
        return self.r + 1

    @property
    def h_dual(self) -> int:
        return self.r + 1

    @property
    def kbar(self) -> int:
        return self.k + self.r + 1

    @property
    def kprime(self) -> int:
        # k' is shifted by rbar only when both k and rbar are odd
        if self.k % 2 == 1 and self.rbar % 2 == 1:
            return self.kbar
        return self.k

    @property
    def size(self) -> int:
        return comb(self.k + self.r, self.r)

    def divisors(self) -> List[int]:
        return [d for d in range(1, self.rbar + 1) if self.rbar % d == 0]

    def dual(self) -> "AlgebraContext":
        """Context of the rank-level dual algebra A_{k-1} at level r+1."""
        if self.k < 2:
            raise ValueError("rank-level dual needs k >= 2 (A_0 is not defined)")
        return AlgebraContext(self.k - 1, self.rbar, self.cap)

    def __str__(self):
        return f"A_{self.r}^(1) level {self.k}"


def vacuum(ctx: AlgebraContext) -> Weight:
    return (ctx.k,) + (0,) * ctx.r


def fundamental(ctx: AlgebraContext, i: int, coeff: int = 1) -> Weight:
    """Return ``coeff`` times Lambda_i (indices mod rbar), remaining level on Lambda_0."""
    labels = [0] * ctx.rbar
    labels[0] = ctx.k - coeff
    labels[i % ctx.rbar] += coeff
    return tuple(labels)


def from_indices(ctx: AlgebraContext, indices: Iterable[int]) -> Weight:
    """Sum of Lambda_i over ``indices`` (mod rbar, repeats allowed), padded with Lambda_0."""
    labels = [0] * ctx.rbar
    for i in indices:
        labels[i % ctx.rbar] += 1
    labels[0] += ctx.k - sum(labels)
    w = tuple(labels)
    check_weight(ctx, w)
    return w


def check_weight(ctx: AlgebraContext, w: Sequence[int]) -> None:
    if len(w) != ctx.rbar:
        raise ValueError(f"weight {tuple(w)} has {len(w)} labels, expected {ctx.rbar}")
    if any(x < 0 for x in w):
        raise ValueError(f"weight {tuple(w)} has a negative label")
    if sum(w) != ctx.k:
        raise ValueError(f"weight {tuple(w)} does not have level {ctx.k}")


def _compositions(total: int, parts: int):
    # lexicographically decreasing
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_p_plus(ctx: AlgebraContext) -> List[Weight]:
    """All level-k weights, lexicographically decreasing (vacuum first)."""
    if ctx.size > ctx.cap:
        raise CapacityError(f"{ctx} has {ctx.size} weights, above the cap {ctx.cap}")
    return list(_compositions(ctx.k, ctx.rbar))


def weight_index(weights: Iterable[Weight]) -> Dict[Weight, int]:
    return {w: i for i, w in enumerate(weights)}


def apply_J(w: Weight, a: int = 1) -> Weight:
    """Simple current J^a: (J l)_i = l_{i-1 mod rbar}."""
    n = len(w)
    a %= n
    if a == 0:
        return tuple(w)
    return tuple(w[-a:]) + tuple(w[:-a])


def apply_C(w: Weight) -> Weight:
    """Charge conjugation (l0, lr, ..., l1)."""
    return (w[0],) + tuple(reversed(w[1:]))


def t_ality(w: Weight) -> int:
    """Raw rbar-ality sum_j j*l_j (reduce mod rbar with ``t_mod``)."""
    return sum(j * x for j, x in enumerate(w))


def t_mod(w: Weight) -> int:
    return t_ality(w) % len(w)


def n_nonzero(w: Weight) -> int:
    return sum(1 for x in w if x)


def orbit(w: Weight, d: int = 1) -> Tuple[Weight, ...]:
    """Distinct members of the J^d orbit of ``w``, in the order w, J^d w, ..."""
    n = len(w)
    if n % d:
        raise ValueError(f"d={d} does not divide rbar={n}")
    out = []
    cur = tuple(w)
    for _ in range(n // d):
        if cur in out:
            break
        out.append(cur)
        cur = apply_J(cur, d)
    return tuple(out)


def is_fixed_point(w: Weight, d: int = 1) -> bool:
    return len(orbit(w, d)) < len(w) // d


def period(w: Weight) -> int:
    """Smallest p with l_i = l_{i+p} for all i (p divides rbar)."""
    n = len(w)
    for p in range(1, n + 1):
        if n % p == 0 and apply_J(w, p) == tuple(w):
            return p
    return n


@dataclass(frozen=True)
class OrbitSet:
    """Partition of a weight list into J^d orbits.

    ``members[rep]`` lists the orbit of ``rep`` (rep first); ``reps`` keeps
    the order of first appearance in the input list.
    """

    d: int
    orbit_length: int
    reps: Tuple[Weight, ...]
    members: Dict[Weight, Tuple[Weight, ...]]
    rep_of: Dict[Weight, Weight]

    def is_fixed(self, w: Weight) -> bool:
        return len(self.members[self.rep_of[w]]) < self.orbit_length

    def fixed_points(self) -> List[Weight]:
        return [w for w in self.rep_of if self.is_fixed(w)]


def orbit_set(weights: Sequence[Weight], d: int = 1) -> OrbitSet:
    if not weights:
        raise ValueError("empty weight list")
    n = len(weights[0])
    reps, members, rep_of = [], {}, {}
    for w in weights:
        if w in rep_of:
            continue
        orb = orbit(w, d)
        reps.append(w)
        members[w] = orb
        for v in orb:
            rep_of[v] = w
    return OrbitSet(d, n // d, tuple(reps), members, rep_of)


def parity_set(ctx: AlgebraContext, d: int, weights: Sequence[Weight] = None) -> List[Weight]:
    """Weights with t(l) = 0 mod rbar/d, i.e. those with integral J^d charge."""
    if ctx.rbar % d:
        raise ValueError(f"d={d} does not divide rbar={ctx.rbar}")
    if weights is None:
        weights = enumerate_p_plus(ctx)
    m = ctx.rbar // d
    return [w for w in weights if t_ality(w) % m == 0]


def positions(w: Weight) -> Tuple[int, ...]:
    """Integer orthogonal coordinates of l+rho.

    y_a = sum_{i=a}^{r} (l_i + 1) for a = 1..rbar, so y is strictly
    decreasing with last entry 0.  The actual orthogonal vector is y minus its
    mean; all inner products below are computed from y without the shift.
    """
    r = len(w) - 1
    y = [0] * (r + 1)
    acc = 0
    for a in range(r, 0, -1):
        acc += w[a] + 1
        y[a - 1] = acc
    return tuple(y)


def scaled_norm(w: Weight) -> int:
    """rbar * (l+rho | l+rho) as an exact integer."""
    y = positions(w)
    n = len(y)
    s = sum(y)
    return n * sum(v * v for v in y) - s * s


def shifted_norm(w: Weight) -> Fraction:
    """(l+rho | l+rho) in the form where long roots have norm 2."""
    return Fraction(scaled_norm(w), len(w))


def same_T_class(ctx: AlgebraContext, a: Weight, b: Weight) -> bool:
    """Exact selection rule: norms agree modulo 2*kbar."""
    return (scaled_norm(a) - scaled_norm(b)) % (2 * ctx.kbar * ctx.rbar) == 0


def rank_level_transpose(w: Weight, ctx: AlgebraContext) -> Weight:
    """Young-diagram transpose onto A_{k-1}^(1) at level r+1.

    Row i of the diagram holds sum_{j>=i} l_j boxes (i = 1..r).  After
    transposing, columns of full length k are removed.
    """
    if ctx.k < 2:
        raise ValueError("rank-level transpose needs k >= 2")
    check_weight(ctx, w)
    rows = [sum(w[i:]) for i in range(1, ctx.rbar)]
    cols = [sum(1 for x in rows if x >= j) for j in range(1, ctx.k + 1)]
    full = cols[-1]  # rows of length k become columns of length k after transposing
    cols = [c - full for c in cols[:-1]]
    labels = [cols[j] - (cols[j + 1] if j + 1 < len(cols) else 0) for j in range(len(cols))]
    head = ctx.rbar - (cols[0] if cols else 0)
    return (head,) + tuple(labels)


def rank_level_prime(w: Weight, ctx: AlgebraContext) -> Weight:
    """T' = Jdual^{-t/rbar} T on weights with t = 0 mod rbar."""
    t = t_ality(w)
    if t % ctx.rbar:
        raise ValueError(f"{w} has nonzero rbar-ality")
    return apply_J(rank_level_transpose(w, ctx), -(t // ctx.rbar))


def format_weight(w: Weight) -> str:
    return ",".join(str(x) for x in w)


def parse_weight(text: str, ctx: AlgebraContext = None) -> Weight:
    text = text.strip().strip("()[]")
    if "," in text:
        w = tuple(int(x) for x in text.split(","))
    else:
        w = tuple(int(x) for x in text)
    if ctx is not None:
        check_weight(ctx, w)
    return w
