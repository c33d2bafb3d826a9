"""Dual certificates for the box-constrained recovery program.

For ground truth x with prior (T, mu_hat, rho), the box constraint is
active at index i in T when |x_i - mu_hat_i| = rho; the active set
splits by sign into T_a+ (x_i - mu_hat_i = +rho) and T_a- (= -rho),
with the rest of T inactive (T_in).

Recovery of x is certified by an n-vector w with

    1.  A_{T_in}' w = 0,  A_{T_a+}' w >= 0,  A_{T_a-}' w <= 0
    2.  A_Delta' w = sgn(x_Delta)          (Delta = misses N \\ T)
    3.  |A_j' w| < 1 for every j outside T and Delta

(:func:`verify_lemma1` checks these numerically).  Such a w is built in
two stages:

* interpolation step: for disjoint sets S (annihilated) and T_d
  (interpolated to target c),

      w~ = M(S) A_{T_d} (A_{T_d}' M(S) A_{T_d})^{-1} c

  gives A_S' w~ = 0 and A_{T_d}' w~ = c exactly.  Off S and T_d the
  correlations |A_j' w~| are small except on an exceptional set E of
  size below a chosen s_check, with norm bounds controlled by the
  a/K functions of :mod:`regmodbp.rip` (:func:`lemma2_w`,
  :func:`lemma3_w`).
* good-set search: among subsets of the active sets, find the largest
  pair whose witness w~ (built with the remaining "bad" part of T
  annihilated) has strictly correct signs on the chosen subsets
  (:func:`good_set_search`).  A larger good set shrinks the bad-set
  size k_b and therefore weakens the recovery conditions.
* series: starting from the good-set witness, each iteration cancels
  the residual correlations on the previous exceptional set; the
  alternating sum w = w_1 - w_2 + w_3 - ... converges geometrically
  with ratio a_k(2u, u) when the recovery conditions hold
  (:func:`build_certificate`).
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .linalg import check_vector, complement, index_set, set_union, solve_spd
from .models import InfeasiblePriorError, PriorKnowledge
from .rip import ConditionCheck, ConditionReport, RipTable, a_fn, k_fn, theorem1_conditions

LEMMA1_TOL = 1e-8
SIGN_MARGIN = 1e-10


class CertificateError(RuntimeError):
    """The certificate series misbehaved under passing conditions."""


@dataclass
class ActivePartition:
    """Disjoint split of T into positively/negatively active and inactive."""

    t_a_plus: np.ndarray
    t_a_minus: np.ndarray
    t_in: np.ndarray

    @property
    def t(self) -> np.ndarray:
        return set_union(set_union(self.t_a_plus, self.t_a_minus), self.t_in)

    @property
    def active(self) -> np.ndarray:
        return set_union(self.t_a_plus, self.t_a_minus)


@dataclass
class GoodSetResult:
    t_a_plus_g: np.ndarray
    t_a_minus_g: np.ndarray
    t_b: np.ndarray
    k_b: int
    witness: np.ndarray


@dataclass
class CertificateReport:
    w: np.ndarray
    checks: list
    passed: bool
    terms_used: int | None = None
    term_norms: list = field(default_factory=list)
    tail_norms: list = field(default_factory=list)
    decay_bound: float | None = None
    conditions: ConditionReport | None = None


def classify_active(x, prior: PriorKnowledge, tol_active: float | None = None
                    ) -> ActivePartition:
    """Split T by which side of the box |x_i - mu_hat_i| <= rho is tight.

    Activity is an equality in exact arithmetic; the default tolerance
    1e-9 * max(1, rho) makes the predicate robust to decimal-to-binary
    conversion of quantized data.
    """
    x = check_vector(x)
    t = prior.t
    if t.size and t[-1] >= x.size:
        raise ValueError("support estimate index out of range")
    if tol_active is None:
        tol_active = 1e-9 * max(1.0, prior.rho if np.isfinite(prior.rho) else 1.0)
    diff = x[t] - prior.mu_hat_t
    if np.isfinite(prior.rho) and t.size:
        gap = float(np.abs(diff).max(initial=0.0))
        if gap > prior.rho + tol_active:
            raise InfeasiblePriorError(
                f"||x_T - mu_hat||_inf = {gap:.6g} exceeds rho = {prior.rho:.6g}")
    plus = np.abs(diff - prior.rho) <= tol_active
    minus = np.abs(diff + prior.rho) <= tol_active
    if np.any(plus & minus):
        raise ValueError("rho below tolerance: an index is active on both sides")
    return ActivePartition(t[plus], t[minus], t[~plus & ~minus])


def lemma2_w(a, t_b, delta, sgn_x_delta) -> np.ndarray:
    """Witness M(T_b) A_D (A_D' M(T_b) A_D)^{-1} sgn(x_D): annihilates
    the columns in T_b and interpolates the sign pattern on Delta."""
    t_b = index_set(t_b) if np.size(t_b) else np.zeros(0, dtype=np.int64)
    delta = index_set(delta) if np.size(delta) else np.zeros(0, dtype=np.int64)
    n = a.shape[0]
    if delta.size == 0:
        return np.zeros(n)
    sgn = np.asarray(sgn_x_delta, dtype=np.float64)
    if sgn.size != delta.size:
        raise ValueError("sign pattern length does not match |Delta|")
    a_b = a[:, t_b]
    a_d = a[:, delta]
    cross = a_b.T @ a_d
    z = solve_spd(a_b.T @ a_b, cross)
    schur = a_d.T @ a_d - cross.T @ z
    omega = solve_spd(schur, sgn)
    return a_d @ omega - a_b @ (z @ omega)


def good_set_search(a, partition: ActivePartition, delta, sgn_x_delta,
                    margin: float = SIGN_MARGIN) -> GoodSetResult:
    """Largest active subsets whose witness has strictly correct signs.

    Candidate pairs are subsets of T_a+ x T_a-; they are scanned in
    decreasing order of total cardinality and, within a cardinality, in
    lexicographic order of the combined sorted index set, so the first
    hit is the deterministic maximal answer.  The empty pair always
    passes (worst case: T_b = T), so the search cannot fail.

    All candidates of one cardinality are evaluated in a single batched
    linear-algebra pass over the Gram blocks of T; only the winning
    candidate's witness is assembled in measurement space.
    """
    t = partition.t
    delta = index_set(delta) if np.size(delta) else np.zeros(0, dtype=np.int64)
    sgn = np.asarray(sgn_x_delta, dtype=np.float64)
    actives = partition.active
    side = np.where(np.isin(actives, partition.t_a_plus), 1.0, -1.0)
    t_pos = {int(j): p for p, j in enumerate(t)}
    act_pos = np.array([t_pos[int(j)] for j in actives], dtype=np.int64)

    a_t = a[:, t]
    a_d = a[:, delta]
    gram_tt = a_t.T @ a_t
    gram_td = a_t.T @ a_d
    gram_dd = a_d.T @ a_d
    k, u = t.size, delta.size
    all_pos = np.arange(k, dtype=np.int64)

    def level_scan(size, combos):
        # combos: (count, size) positions into `actives`, lexicographic
        ps = act_pos[combos]
        mask = np.ones((combos.shape[0], k), dtype=bool)
        mask[np.arange(combos.shape[0])[:, None], ps] = False
        pb = np.broadcast_to(all_pos, mask.shape)[mask].reshape(combos.shape[0], k - size)
        g_bb = gram_tt[pb[:, :, None], pb[:, None, :]]
        cross = gram_td[pb]
        z = np.linalg.solve(g_bb, cross) if k - size else np.zeros_like(cross)
        schur = gram_dd - np.einsum("nki,nkj->nij", cross, z)
        rhs = np.broadcast_to(sgn[:, None], (combos.shape[0], u, 1))
        omega = np.linalg.solve(schur, rhs)[..., 0]
        r_cross = gram_tt[ps[:, :, None], pb[:, None, :]]
        vals = np.einsum("nju,nu->nj", gram_td[ps] - r_cross @ z, omega)
        ok = np.all(vals * side[combos] > margin, axis=1)
        hits = np.flatnonzero(ok)
        return None if hits.size == 0 else int(hits[0])

    keep = ()
    if u > 0:
        for size in range(actives.size, 0, -1):
            combos = np.array(list(itertools.combinations(range(actives.size), size)),
                              dtype=np.int64)
            winner = None
            for lo in range(0, combos.shape[0], 4096):
                winner = level_scan(size, combos[lo:lo + 4096])
                if winner is not None:
                    keep = tuple(combos[lo + winner])
                    break
            if winner is not None:
                break

    ps = act_pos[list(keep)]
    pb = np.setdiff1d(all_pos, ps)
    t_b = t[pb]
    if u > 0:
        cross = gram_td[pb]
        z = solve_spd(gram_tt[np.ix_(pb, pb)], cross)
        omega = solve_spd(gram_dd - cross.T @ z, sgn)
        witness = a_d @ omega - a[:, t_b] @ (z @ omega)
    else:
        witness = np.zeros(a.shape[0])
    chosen = actives[list(keep)]
    return GoodSetResult(
        t_a_plus_g=np.intersect1d(chosen, partition.t_a_plus),
        t_a_minus_g=np.intersect1d(chosen, partition.t_a_minus),
        t_b=t_b, k_b=int(t_b.size), witness=witness)


@dataclass
class InterpolationDiagnostics:
    s: int
    s_check: int
    a_value: float
    k_value: float
    threshold: float
    c_norm: float
    w_norm: float
    w_bound: float
    e_size: int
    e_norm: float
    e_bound: float


def lemma3_w(a, t, t_d, c, table: RipTable, s: int | None = None,
             s_check: int | None = None):
    """Witness annihilating A_T and interpolating c on a disjoint T_d,
    plus its exceptional set E = { j off T u T_d with correlation above
    a_k(s, s_check) ||c||_2 / sqrt(s_check) } and the bound diagnostics.
    """
    t = index_set(t) if np.size(t) else np.zeros(0, dtype=np.int64)
    t_d = index_set(t_d)
    if np.intersect1d(t, t_d).size:
        raise ValueError("T_d must be disjoint from T")
    c = np.asarray(c, dtype=np.float64)
    if c.size != t_d.size:
        raise ValueError("target vector length does not match |T_d|")
    k = int(t.size)
    s = int(s) if s is not None else int(t_d.size)
    if t_d.size > s:
        raise ValueError("|T_d| exceeds the stated order s")
    s_check = int(s_check) if s_check is not None else s
    if s_check < 1:
        raise ValueError("s_check must be at least 1")

    d_check = table.delta_at(s) + table.delta_at(k) + table.theta_at(k, s) ** 2
    if d_check >= 1.0:
        raise ValueError(
            f"hypothesis violated: delta_{s} + delta_{k} + theta_{{{k},{s}}}^2 "
            f"= {d_check:.6g} >= 1")

    a_t = a[:, t]
    a_d = a[:, t_d]
    cross = a_t.T @ a_d
    z = solve_spd(a_t.T @ a_t, cross)
    schur = a_d.T @ a_d - cross.T @ z
    omega = solve_spd(schur, c)
    w = a_d @ omega - a_t @ (z @ omega)

    a_val = a_fn(table, k, s, s_check)
    k_val = k_fn(table, k, s)
    c_norm = float(np.linalg.norm(c))
    thr = a_val * c_norm / np.sqrt(s_check)
    off = complement(set_union(t, t_d), a.shape[1])
    corr = a[:, off].T @ w
    e_set = off[np.abs(corr) > thr]
    diag = InterpolationDiagnostics(
        s=s, s_check=s_check, a_value=a_val, k_value=k_val, threshold=float(thr),
        c_norm=c_norm, w_norm=float(np.linalg.norm(w)), w_bound=k_val * c_norm,
        e_size=int(e_set.size),
        e_norm=float(np.linalg.norm(a[:, e_set].T @ w)) if e_set.size else 0.0,
        e_bound=a_val * c_norm)
    return w, e_set, diag


def verify_lemma1(a, w, partition: ActivePartition, delta, sgn_x_delta,
                  delta_ku: float) -> CertificateReport:
    """Numeric check of the three certificate conditions plus
    delta_{k+u} < 1; all four must pass for the overall flag."""
    w = check_vector(w)
    delta = index_set(delta) if np.size(delta) else np.zeros(0, dtype=np.int64)
    sgn = np.asarray(sgn_x_delta, dtype=np.float64)
    t = partition.t

    def corr(idx):
        return a[:, idx].T @ w if idx.size else np.zeros(0)

    v_in = float(np.abs(corr(partition.t_in)).max(initial=0.0))
    v_plus = float(corr(partition.t_a_plus).min(initial=0.0))
    v_minus = float(corr(partition.t_a_minus).max(initial=0.0))
    v_interp = float(np.abs(corr(delta) - sgn).max(initial=0.0))
    off = complement(set_union(t, delta), a.shape[1])
    v_off = float(np.abs(corr(off)).max(initial=0.0))

    checks = [
        ConditionCheck("inactive columns orthogonal", v_in, LEMMA1_TOL,
                       v_in <= LEMMA1_TOL),
        ConditionCheck("plus-active correlations nonnegative", v_plus, -LEMMA1_TOL,
                       v_plus >= -LEMMA1_TOL),
        ConditionCheck("minus-active correlations nonpositive", v_minus, LEMMA1_TOL,
                       v_minus <= LEMMA1_TOL),
        ConditionCheck("sign interpolation on misses", v_interp, LEMMA1_TOL,
                       v_interp <= LEMMA1_TOL),
        ConditionCheck("off-support correlations strictly below 1", v_off,
                       1.0 - LEMMA1_TOL, v_off < 1.0 - LEMMA1_TOL),
        ConditionCheck("delta_{k+u} < 1", float(delta_ku), 1.0, delta_ku < 1.0),
    ]
    return CertificateReport(w=w, checks=checks, passed=all(c.passed for c in checks))


def build_certificate(a, table: RipTable, partition: ActivePartition,
                      good: GoodSetResult, delta, sgn_x_delta,
                      max_iters: int = 200, tol_series: float = 1e-12,
                      force: bool = False) -> CertificateReport:
    """Alternating interpolation series w = w_1 - w_2 + w_3 - ...

    w_1 is the good-set witness; term r+1 re-interpolates, on
    Delta u E_r, the residual correlations A'_{E_r} w_r left on the
    previous exceptional set (target 0 on Delta).  Terms are summed
    until ||w_r||_2 < tol_series or max_iters.  Under passing recovery
    conditions the recorded tail norms ||A'_{E_r} w_r||_2 must contract
    by at least a_k(2u, u); a violation raises CertificateError.
    """
    delta = index_set(delta) if np.size(delta) else np.zeros(0, dtype=np.int64)
    sgn = np.asarray(sgn_x_delta, dtype=np.float64)
    t = partition.t
    k, u = int(t.size), int(delta.size)
    conditions = theorem1_conditions(table, k, u, good.k_b)
    if not conditions.overall and not force:
        raise ValueError("recovery conditions fail; pass force=True to build "
                         "a diagnostic certificate anyway")

    w1 = lemma2_w(a, good.t_b, delta, sgn)
    w_total = w1.copy()
    term_norms = [float(np.linalg.norm(w1))]
    tail_norms = []

    decay = None
    if u > 0:
        a0 = a_fn(table, good.k_b, u, u)
        decay = a_fn(table, k, 2 * u, u)
        off = complement(set_union(t, delta), a.shape[1])
        corr = a[:, off].T @ w1
        e_set = off[np.abs(corr) > a0]
        tail_norms.append(float(np.linalg.norm(a[:, e_set].T @ w1)) if e_set.size else 0.0)
    else:
        e_set = np.zeros(0, dtype=np.int64)

    w_r = w1
    terms = 1
    while terms < max_iters:
        if e_set.size == 0 or term_norms[-1] < tol_series:
            break
        t_d = set_union(delta, e_set)
        target = np.zeros(t_d.size)
        in_e = np.isin(t_d, e_set)
        target[in_e] = a[:, t_d[in_e]].T @ w_r
        w_next, e_next, diag = lemma3_w(a, t, t_d, target, table,
                                        s=2 * u, s_check=u)
        terms += 1
        w_total += w_next if terms % 2 == 1 else -w_next
        term_norms.append(float(np.linalg.norm(w_next)))
        tail = float(np.linalg.norm(a[:, e_next].T @ w_next)) if e_next.size else 0.0
        if conditions.overall and tail_norms[-1] > 0.0 and \
                tail > tail_norms[-1] * (decay + 1e-9):
            raise CertificateError(
                f"internal inconsistency: tail norm grew {tail_norms[-1]:.3e} -> "
                f"{tail:.3e} with contraction bound {decay:.6g}")
        tail_norms.append(tail)
        w_r, e_set = w_next, e_next

    report = verify_lemma1(a, w_total, partition, delta, sgn,
                           delta_ku=table.delta_at(k + u))
    report.terms_used = terms
    report.term_norms = term_norms
    report.tail_norms = tail_norms
    report.decay_bound = decay
    report.conditions = conditions
    return report
