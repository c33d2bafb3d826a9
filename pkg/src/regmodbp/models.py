"""Recovery problem types and the LP reductions of the four programs.

The task: reconstruct a sparse m-vector x with support N from n < m
linear measurements y = A x, given a support estimate T (with misses
Delta = N \\ T and extras Delta_e = T \\ N) and a value estimate mu_hat
on T satisfying ||x_T - mu_hat||_inf <= rho.  Four convex programs are
supported, all linear after the usual reduction:

    bp         min ||b||_1                            s.t.  y = A b
    modcs      min ||b_{T^c}||_1                      s.t.  y = A b
    wl1        min ||b_{T^c}||_1 + gamma ||b_T||_1    s.t.  y = A b
    regmodbp   min ||b_{T^c}||_1   s.t.  y = A b  and  ||b_T - mu_hat||_inf <= rho

Coordinates that carry an l1 cost are split as b_i = p_i - q_i with
p_i, q_i >= 0 and the weight on both halves; coordinates with no cost
stay single variables, free for modcs and box-bounded by
[mu_hat - rho, mu_hat + rho] for regmodbp.  At a simplex vertex the
columns of p_i and q_i cannot both be basic (they are dependent), so
min(p_i, q_i) = 0 and b = p - q minimizes the original program.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from . import lp
from .linalg import (check_matrix, check_vector, complement, index_set,
                     read_matrix_csv, write_matrix_csv)

EXACT_REL_TOL = 1e-5
SIGN_ZERO_TOL = 1e-14
GAMMA_SWEEP = (0.1, 0.05, 0.01, 0.001)

METHOD_TAGS = ("bp", "modcs", "wl1", "regmodbp")


class InfeasiblePriorError(ValueError):
    """The prior contradicts the ground truth it claims to describe."""


class RecoveryError(RuntimeError):
    """The recovery LP did not come back optimal."""


@dataclass
class RecoveryInstance:
    """Measurements y = A x, with optional ground truth for evaluation."""

    a: np.ndarray
    y: np.ndarray
    x_true: np.ndarray | None = None

    def __post_init__(self):
        self.a = check_matrix(self.a)
        self.y = check_vector(self.y)
        if self.y.size != self.a.shape[0]:
            raise ValueError("measurement length does not match matrix rows")
        if self.x_true is not None:
            self.x_true = check_vector(self.x_true)
            if self.x_true.size != self.a.shape[1]:
                raise ValueError("signal length does not match matrix columns")
            resid = np.abs(self.a @ self.x_true - self.y).max() if self.y.size else 0.0
            if resid > 1e-12 * (1.0 + np.abs(self.y).max(initial=0.0)):
                raise ValueError(f"y != A x_true (residual {resid:.3e})")

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.a.shape[1]

    @property
    def support(self) -> np.ndarray:
        """Indices where the true signal is nonzero."""
        if self.x_true is None:
            raise ValueError("instance carries no ground truth")
        return np.flatnonzero(self.x_true).astype(np.int64)


@dataclass
class PriorKnowledge:
    """Support estimate T, value estimate on T, and box radius rho."""

    t: np.ndarray
    mu_hat_t: np.ndarray
    rho: float

    def __post_init__(self):
        self.t = index_set(self.t)
        self.mu_hat_t = check_vector(self.mu_hat_t)
        if self.mu_hat_t.size != self.t.size:
            raise ValueError("value estimate length does not match |T|")
        self.rho = float(self.rho)
        if not self.rho >= 0.0:
            raise ValueError("rho must be nonnegative")

    def misses(self, support) -> np.ndarray:
        """Delta = N \\ T, true-support entries missing from T."""
        return np.setdiff1d(np.asarray(support, dtype=np.int64), self.t)

    def extras(self, support) -> np.ndarray:
        """Delta_e = T \\ N, estimate entries outside the true support."""
        return np.setdiff1d(self.t, np.asarray(support, dtype=np.int64))


@dataclass(frozen=True)
class Method:
    tag: str
    gamma: float | None = None

    def __post_init__(self):
        if self.tag not in METHOD_TAGS:
            raise ValueError(f"unknown method tag {self.tag!r}")
        if self.tag == "wl1":
            if self.gamma is None or not self.gamma > 0.0:
                raise ValueError("wl1 requires gamma > 0")
        elif self.gamma is not None:
            raise ValueError(f"method {self.tag!r} takes no gamma")

    @classmethod
    def bp(cls):
        return cls("bp")

    @classmethod
    def modcs(cls):
        return cls("modcs")

    @classmethod
    def weighted_l1(cls, gamma: float):
        return cls("wl1", float(gamma))

    @classmethod
    def regmodbp(cls):
        return cls("regmodbp")


def sign_pattern(b) -> np.ndarray:
    """Elementwise b_i/|b_i| with magnitudes below 1e-14 mapped to 0."""
    b = np.asarray(b, dtype=np.float64)
    out = np.sign(b).astype(np.int64)
    out[np.abs(b) < SIGN_ZERO_TOL] = 0
    return out


def clip_0_7(b) -> np.ndarray:
    """Clamp elementwise into [0, 7] (3-bit signal range)."""
    return np.clip(np.asarray(b, dtype=np.float64), 0.0, 7.0)


def check_prior_feasible(inst: RecoveryInstance, prior: PriorKnowledge) -> None:
    """Ground truth, when present, must sit inside the prior's box."""
    if inst.x_true is None:
        return
    if prior.t.size and prior.t[-1] >= inst.m:
        raise ValueError("support estimate index out of range")
    if prior.t.size == 0:
        return
    gap = np.abs(inst.x_true[prior.t] - prior.mu_hat_t).max()
    tol = 1e-9 * max(1.0, prior.rho) if np.isfinite(prior.rho) else np.inf
    if np.isfinite(prior.rho) and gap > prior.rho + tol:
        raise InfeasiblePriorError(
            f"||x_T - mu_hat||_inf = {gap:.6g} exceeds rho = {prior.rho:.6g}")


@dataclass
class ReducedProgram:
    """A StandardLP plus the map from LP variables back to the signal."""

    problem: lp.StandardLP
    m: int
    t: np.ndarray       # coordinates kept as single variables, ascending
    tc: np.ndarray      # coordinates split as p - q, ascending

    def beta_from(self, solution: np.ndarray) -> np.ndarray:
        k, mc = self.t.size, self.tc.size
        beta = np.zeros(self.m)
        beta[self.t] = solution[:k]
        beta[self.tc] = solution[k:k + mc] - solution[k + mc:k + 2 * mc]
        return beta


def _split_reduction(inst, keep, keep_lo, keep_hi, keep_cost, split_cost):
    keep = index_set(keep)
    split = complement(keep, inst.m)
    a_keep = inst.a[:, keep]
    a_split = inst.a[:, split]
    a_eq = np.hstack([a_keep, a_split, -a_split])
    k, mc = keep.size, split.size
    c = np.concatenate([np.full(k, keep_cost), np.full(2 * mc, 1.0) * split_cost])
    lower = np.concatenate([keep_lo, np.zeros(2 * mc)])
    upper = np.concatenate([keep_hi, np.full(2 * mc, np.inf)])
    problem = lp.StandardLP(c, a_eq, inst.y.copy(), lower, upper)
    return ReducedProgram(problem, inst.m, keep, split)


def reduce_bp(inst: RecoveryInstance) -> ReducedProgram:
    """Basis pursuit: every coordinate split, unit weight."""
    empty = np.zeros(0)
    return _split_reduction(inst, np.zeros(0, dtype=np.int64), empty, empty, 0.0, 1.0)


def reduce_modcs(inst: RecoveryInstance, prior: PriorKnowledge) -> ReducedProgram:
    """Sparsest outside T: b_T free with zero cost, T^c split."""
    k = prior.t.size
    return _split_reduction(inst, prior.t, np.full(k, -np.inf), np.full(k, np.inf),
                            0.0, 1.0)


def reduce_weighted_l1(inst: RecoveryInstance, prior: PriorKnowledge,
                       gamma: float) -> ReducedProgram:
    """Weight gamma on ||b_T||_1, unit weight outside T."""
    if not gamma > 0.0:
        raise ValueError("gamma must be positive")
    red = reduce_bp(inst)
    weights = np.ones(inst.m)
    weights[prior.t] = gamma
    red.problem.objective = np.concatenate([weights, weights])
    return red


def reduce_regmodbp(inst: RecoveryInstance, prior: PriorKnowledge) -> ReducedProgram:
    """modcs plus the box |b_T - mu_hat| <= rho as direct variable bounds."""
    check_prior_feasible(inst, prior)
    if np.isfinite(prior.rho):
        lo = prior.mu_hat_t - prior.rho
        hi = prior.mu_hat_t + prior.rho
    else:
        k = prior.t.size
        lo, hi = np.full(k, -np.inf), np.full(k, np.inf)
    return _split_reduction(inst, prior.t, lo, hi, 0.0, 1.0)


def reduce(inst: RecoveryInstance, prior: PriorKnowledge | None,
           method: Method) -> ReducedProgram:
    if method.tag == "bp":
        return reduce_bp(inst)
    if prior is None:
        raise ValueError(f"method {method.tag!r} needs prior knowledge")
    if method.tag == "modcs":
        return reduce_modcs(inst, prior)
    if method.tag == "wl1":
        return reduce_weighted_l1(inst, prior, method.gamma)
    return reduce_regmodbp(inst, prior)


def recover(inst: RecoveryInstance, prior: PriorKnowledge | None,
            method: Method) -> np.ndarray:
    """Solve the chosen program and return the recovered signal."""
    red = reduce(inst, prior, method)
    out = lp.solve_lp(red.problem)
    if out.status == lp.INFEASIBLE:
        raise RecoveryError(f"{method.tag} program reported infeasible")
    if out.status == lp.UNBOUNDED:
        # impossible for these reductions; signals an internal bug upstream
        raise RecoveryError(f"{method.tag} program reported unbounded")
    return red.beta_from(out.solution)


def rel_error(x_hat, x) -> float:
    x = check_vector(x)
    nx = float(np.linalg.norm(x))
    if nx == 0.0:
        raise ValueError("true signal is zero; relative error undefined")
    return float(np.linalg.norm(check_vector(x_hat) - x) / nx)


def is_exact(x_hat, x) -> bool:
    """Exact-recovery predicate: relative l2 error below 1e-5."""
    return rel_error(x_hat, x) < EXACT_REL_TOL


# -- JSON instance documents ----------------------------------------------
#
# {"A": <csv path, relative to the document>, "y": [...], "x_true": [...],
#  "T": [...], "mu_hat": [...], "rho": r}
# x_true may be null/absent; the prior block (T, mu_hat, rho) may be absent
# as a whole.  rho may be the non-finite literal Infinity.


def write_instance_json(path, inst: RecoveryInstance,
                        prior: PriorKnowledge | None = None,
                        matrix_path=None) -> None:
    path = os.fspath(path)
    if matrix_path is None:
        matrix_path = os.path.splitext(path)[0] + ".A.csv"
    write_matrix_csv(matrix_path, inst.a)
    doc = {
        "A": os.path.relpath(matrix_path, os.path.dirname(path) or "."),
        "y": [float(v) for v in inst.y],
        "x_true": None if inst.x_true is None else [float(v) for v in inst.x_true],
    }
    if prior is not None:
        doc["T"] = [int(i) for i in prior.t]
        doc["mu_hat"] = [float(v) for v in prior.mu_hat_t]
        doc["rho"] = prior.rho
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_instance_json(path):
    """Returns (instance, prior or None)."""
    path = os.fspath(path)
    with open(path) as fh:
        doc = json.load(fh)
    a = read_matrix_csv(os.path.join(os.path.dirname(path) or ".", doc["A"]))
    inst = RecoveryInstance(a, np.asarray(doc["y"], dtype=np.float64),
                            None if doc.get("x_true") is None
                            else np.asarray(doc["x_true"], dtype=np.float64))
    prior = None
    if "T" in doc:
        prior = PriorKnowledge(np.asarray(doc["T"], dtype=np.int64),
                               np.asarray(doc["mu_hat"], dtype=np.float64),
                               float(doc["rho"]))
    return inst, prior
