"""Exact restricted isometry and orthogonality constants by enumeration.

For a matrix A with columns a_i:

* delta_s (restricted isometry) is the smallest d >= 0 with
  (1 - d) ||c||^2 <= ||A_S c||^2 <= (1 + d) ||c||^2 for every column
  subset S with |S| <= s.  Equivalently, the worst deviation of the
  eigenvalues of A_S' A_S from 1 over subsets of size exactly s (the
  max over smaller subsets is dominated by eigenvalue interlacing).
* theta_{s1,s2} (restricted orthogonality) is the smallest t with
  |c1' A_{T1}' A_{T2} c2| <= t ||c1|| ||c2|| over disjoint subsets of
  sizes s1 and s2, i.e. the worst spectral norm of an s1 x s2
  off-diagonal block of the Gram matrix.

Both are exact only by exhausting subsets, so matrices are capped at
MAX_COLS columns and every call is pre-checked against a subset budget;
exceeding either raises EnumerationCapError naming the offending count.

From a table of these constants, two scalar functions drive every
recovery condition in this library:

    a_k(s, sc) = (theta_{sc,s} + theta_{sc,k} theta_{s,k} / (1 - delta_k))
                 / (1 - delta_s - theta_{s,k}^2 / (1 - delta_k))
    K_k(u)     = sqrt(1 + delta_u)
                 / (1 - delta_u - theta_{u,k}^2 / (1 - delta_k))

and the recovery guarantee for the box-constrained program with support
estimate size k, miss count u, and bad-set size k_b is the pair of
conditions

    1.  delta_{k+u} < 1   and   delta_{2u} + delta_k + theta_{k,2u}^2 < 1
    2.  a_k(2u, u) + a_{k_b}(u, u) < 1

checked numerically by :func:`theorem1_conditions`.
"""

import hashlib
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import check_matrix

MAX_COLS = 24
MAX_SUBSETS = 2_000_000
_CHUNK = 32768


class EnumerationCapError(ValueError):
    """Subset enumeration would exceed the budget."""

    def __init__(self, count: int, detail: str):
        self.count = count
        super().__init__(f"enumeration too large: {detail} requires {count} subsets "
                         f"(budget {MAX_SUBSETS}, column cap {MAX_COLS})")


class TableOrderError(KeyError):
    """A constant of the requested order is not in the table."""


def _guard(a, orders) -> np.ndarray:
    a = check_matrix(a)
    m = a.shape[1]
    if m > MAX_COLS:
        raise EnumerationCapError(math.comb(m, max(orders)),
                                  f"matrix with {m} > {MAX_COLS} columns")
    return a


def _comb_chunks(m, s):
    it = itertools.combinations(range(m), s)
    while True:
        block = list(itertools.islice(it, _CHUNK))
        if not block:
            return
        yield np.array(block, dtype=np.int64)


def ric(a, s: int) -> float:
    """delta_s: worst eigenvalue deviation of s-column Grams from 1."""
    a = _guard(a, [s])
    m = a.shape[1]
    if not 1 <= s <= m:
        raise ValueError(f"order s={s} outside 1..{m}")
    count = math.comb(m, s)
    if count > MAX_SUBSETS:
        raise EnumerationCapError(count, f"delta_{s} on {m} columns")
    g = a.T @ a
    hi, lo = -np.inf, np.inf
    for idx in _comb_chunks(m, s):
        blocks = g[idx[:, :, None], idx[:, None, :]]
        ev = np.linalg.eigvalsh(blocks)
        hi = max(hi, float(ev[:, -1].max()))
        lo = min(lo, float(ev[:, 0].min()))
    return max(hi - 1.0, 1.0 - lo, 0.0)


def roc(a, s1: int, s2: int) -> float:
    """theta_{s1,s2}: worst spectral norm of disjoint s1 x s2 Gram blocks."""
    a = _guard(a, [s1 + s2])
    m = a.shape[1]
    if s1 < 1 or s2 < 1 or s1 + s2 > m:
        raise ValueError(f"orders ({s1},{s2}) infeasible for {m} columns")
    count = math.comb(m, s1) * math.comb(m - s1, s2)
    if count > MAX_SUBSETS:
        raise EnumerationCapError(count, f"theta_{{{s1},{s2}}} on {m} columns")
    # loop the side with fewer subsets in Python, batch the other side
    outer_s, inner_s = (s1, s2) if math.comb(m, s1) <= math.comb(m, s2) else (s2, s1)
    g = a.T @ a
    rel = np.array(list(itertools.combinations(range(m - outer_s), inner_s)),
                   dtype=np.int64)
    all_idx = np.arange(m, dtype=np.int64)
    best = 0.0
    for outer in itertools.combinations(range(m), outer_s):
        outer_idx = np.array(outer, dtype=np.int64)
        compl = np.setdiff1d(all_idx, outer_idx)
        rows = g[outer_idx]
        for lo in range(0, rel.shape[0], _CHUNK):
            t2 = compl[rel[lo:lo + _CHUNK]]
            blocks = rows[:, t2].transpose(1, 0, 2)
            sv = np.linalg.svd(blocks, compute_uv=False)
            best = max(best, float(sv[:, 0].max()))
    return best


def matrix_fingerprint(a) -> str:
    a = check_matrix(a)
    h = hashlib.sha256()
    h.update(str(a.shape).encode())
    h.update(np.ascontiguousarray(a).tobytes())
    return h.hexdigest()[:16]


@dataclass
class RipTable:
    """Cached delta_s and theta_{s1,s2} values for one matrix."""

    fingerprint: str
    delta: dict = field(default_factory=dict)
    theta: dict = field(default_factory=dict)

    def delta_at(self, s: int) -> float:
        if s == 0:
            return 0.0
        if s not in self.delta:
            raise TableOrderError(f"delta_{s} not in table")
        return self.delta[s]

    def theta_at(self, s1: int, s2: int) -> float:
        if s1 == 0 or s2 == 0:
            return 0.0
        key = (min(s1, s2), max(s1, s2))
        if key not in self.theta:
            raise TableOrderError(f"theta_{key} not in table")
        return self.theta[key]


def build_table(a, s_max: int, delta_orders=None, theta_pairs=None) -> RipTable:
    """Constants for one matrix in a single pass.

    By default: delta_s for s <= s_max and theta_{s1,s2} for
    s1+s2 <= s_max.  `delta_orders`/`theta_pairs` restrict the work to
    named orders (the recovery conditions need only a handful).
    """
    a = check_matrix(a)
    m = a.shape[1]
    s_max = min(int(s_max), m)
    table = RipTable(matrix_fingerprint(a))
    if delta_orders is None:
        delta_orders = range(1, s_max + 1)
    for s in sorted(set(int(s) for s in delta_orders if s > 0)):
        table.delta[s] = ric(a, s)
    if theta_pairs is None:
        theta_pairs = [(s1, s2) for s1 in range(1, s_max) for s2 in range(s1, s_max)
                       if s1 + s2 <= s_max]
    for s1, s2 in theta_pairs:
        if s1 == 0 or s2 == 0:
            continue
        key = (min(s1, s2), max(s1, s2))
        if key not in table.theta:
            table.theta[key] = roc(a, key[0], key[1])
    return table


def condition_orders(k: int, u: int, k_b: int):
    """The (delta orders, theta pairs) that the recovery conditions and
    the certificate series for sizes (k, u, k_b) consume."""
    deltas = {u, 2 * u, k, k_b, k + u}
    thetas = {(u, u), (u, 2 * u), (u, k), (2 * u, k), (u, k_b)}
    return sorted(d for d in deltas if d > 0), sorted(
        (min(p), max(p)) for p in thetas if p[0] > 0 and p[1] > 0)


def condition_table(a, k: int, u: int, k_b: int) -> RipTable:
    """A table with exactly the orders the conditions for (k, u, k_b) need."""
    deltas, thetas = condition_orders(k, u, k_b)
    s_max = max(deltas, default=1)
    return build_table(a, s_max, delta_orders=deltas, theta_pairs=thetas)


def a_fn(table: RipTable, k: int, s: int, s_check: int) -> float:
    """a_k(s, s_check); raises when its defining denominators are not
    positive (the recovery conditions fail at this order)."""
    dk = table.delta_at(k)
    if dk >= 1.0:
        raise ValueError(f"condition violated: delta_{k} = {dk:.6g} >= 1")
    ds = table.delta_at(s)
    t_sk = table.theta_at(s, k)
    denom = 1.0 - ds - t_sk * t_sk / (1.0 - dk)
    if denom <= 0.0:
        raise ValueError(
            f"condition violated: 1 - delta_{s} - theta_{{{s},{k}}}^2/(1-delta_{k}) "
            f"= {denom:.6g} <= 0")
    num = table.theta_at(s_check, s) + table.theta_at(s_check, k) * t_sk / (1.0 - dk)
    return num / denom


def k_fn(table: RipTable, k: int, u: int) -> float:
    """K_k(u); same domain restrictions as a_fn."""
    dk = table.delta_at(k)
    if dk >= 1.0:
        raise ValueError(f"condition violated: delta_{k} = {dk:.6g} >= 1")
    du = table.delta_at(u)
    t_uk = table.theta_at(u, k)
    denom = 1.0 - du - t_uk * t_uk / (1.0 - dk)
    if denom <= 0.0:
        raise ValueError(
            f"condition violated: 1 - delta_{u} - theta_{{{u},{k}}}^2/(1-delta_{k}) "
            f"= {denom:.6g} <= 0")
    return math.sqrt(1.0 + du) / denom


@dataclass
class ConditionCheck:
    name: str
    value: float
    bound: float
    passed: bool

    @property
    def margin(self) -> float:
        return self.bound - self.value


@dataclass
class ConditionReport:
    k: int
    u: int
    k_b: int
    checks: list

    @property
    def overall(self) -> bool:
        return all(c.passed for c in self.checks)


def theorem1_conditions(table: RipTable, k: int, u: int, k_b: int) -> ConditionReport:
    """Numeric evaluation of the two exact-recovery conditions for
    support-estimate size k, miss count u, and bad-set size k_b."""
    if not 0 <= k_b <= k:
        raise ValueError("k_b must lie in [0, k]")
    d_ku = table.delta_at(k + u)
    c1a = ConditionCheck("delta_{k+u} < 1", d_ku, 1.0, d_ku < 1.0)
    v1b = table.delta_at(2 * u) + table.delta_at(k) + table.theta_at(k, 2 * u) ** 2
    c1b = ConditionCheck("delta_{2u} + delta_k + theta_{k,2u}^2 < 1", v1b, 1.0,
                         v1b < 1.0)
    try:
        v2 = a_fn(table, k, 2 * u, u) + a_fn(table, k_b, u, u)
        c2 = ConditionCheck("a_k(2u,u) + a_{k_b}(u,u) < 1", v2, 1.0, v2 < 1.0)
    except ValueError:
        c2 = ConditionCheck("a_k(2u,u) + a_{k_b}(u,u) < 1", np.inf, 1.0, False)
    return ConditionReport(k, u, k_b, [c1a, c1b, c2])
