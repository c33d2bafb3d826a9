"""Dense two-phase primal simplex for bounded-variable linear programs.

The carrier problem is

    minimize    c' x
    subject to  A x = b,    lo <= x <= hi

where individual bounds may be -inf/+inf; free variables are handled
natively rather than split into differences.  Phase 1 minimizes the sum
of artificial variables (one signed unit column per row) and certifies
infeasibility when its optimum stays away from zero; phase 2 minimizes
the real objective with the artificials pinned at zero.

Pricing is Dantzig (most negative reduced cost) by default; after a long
run of consecutive degenerate pivots the solver permanently switches to
Bland's least-index rule, which guarantees termination.  The basis
inverse is kept explicitly and updated in product form, with a fresh
dense factorization every REFRESH_EVERY pivots and at every claimed
optimum, so reported solutions always come from a newly factorized
basis.

All decisions are deterministic functions of the input bits: ties in
pricing and in the ratio test break toward the lowest index, so
identical StandardLP inputs give identical LPOutcome values.
"""

from dataclasses import dataclass, field

import numpy as np

from .linalg import check_matrix, check_vector

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-9
DUAL_TOL = 1e-9
REFRESH_EVERY = 50
MAX_PIVOTS = 10**6
DEGEN_SWITCH = 100

_LO, _UP, _FREE, _BASIC = 0, 1, 2, 3


class PivotLimitError(RuntimeError):
    """Raised when the pivot cap is exhausted (cycling suspected)."""


@dataclass
class StandardLP:
    """Equality-form LP with per-variable bounds."""

    objective: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.objective = check_vector(self.objective)
        self.a_eq = check_matrix(self.a_eq)
        self.b_eq = check_vector(self.b_eq)
        self.lower = np.asarray(self.lower, dtype=np.float64)
        self.upper = np.asarray(self.upper, dtype=np.float64)
        m, n = self.a_eq.shape
        if self.b_eq.shape != (m,):
            raise ValueError("rhs length does not match constraint rows")
        if self.objective.shape != (n,) or self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("objective/bounds length does not match columns")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise ValueError("bounds must not be NaN")
        if np.any(self.lower > self.upper):
            raise ValueError("lower bound exceeds upper bound")


@dataclass
class LPOutcome:
    status: str
    solution: np.ndarray | None
    objective: float
    iterations: int
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None


def solve_lp(p: StandardLP) -> LPOutcome:
    """Solve a StandardLP; see the module docstring for the method."""
    return _Simplex(p).run()


def format_lp(p: StandardLP) -> str:
    """Readable dump: an objective line, one constraint line per row in
    the form ``r<i>: <coef>*x<j> ... = <rhs>``, then one bounds line per
    variable.  Zero coefficients are omitted."""
    def terms(vec):
        parts = [f"{v:+.12g}*x{j}" for j, v in enumerate(vec) if v != 0.0]
        return " ".join(parts) if parts else "0"

    lines = ["minimize", "  " + terms(p.objective), "subject to"]
    for i in range(p.a_eq.shape[0]):
        lines.append(f"  r{i}: " + terms(p.a_eq[i]) + f" = {p.b_eq[i]:.12g}")
    lines.append("bounds")
    for j in range(p.objective.size):
        lines.append(f"  {p.lower[j]:.12g} <= x{j} <= {p.upper[j]:.12g}")
    return "\n".join(lines) + "\n"


class _Simplex:
    def __init__(self, p: StandardLP):
        self.a = np.ascontiguousarray(p.a_eq)
        self.b = p.b_eq.copy()
        self.c = p.objective.copy()
        self.m, self.n = self.a.shape
        self.total = self.n + self.m
        self.lo = np.concatenate([p.lower, np.zeros(self.m)])
        self.hi = np.concatenate([p.upper, np.full(self.m, np.inf)])
        self.status = np.empty(self.total, dtype=np.int8)
        self.xn = np.zeros(self.total)
        for j in range(self.n):
            if np.isfinite(self.lo[j]):
                self.status[j], self.xn[j] = _LO, self.lo[j]
            elif np.isfinite(self.hi[j]):
                self.status[j], self.xn[j] = _UP, self.hi[j]
            else:
                self.status[j], self.xn[j] = _FREE, 0.0
        resid = self.b - self.a @ self.xn[:self.n]
        self.art_sign = np.where(resid >= 0.0, 1.0, -1.0)
        self.basis = np.arange(self.n, self.n + self.m)
        self.status[self.n:] = _BASIC
        self.xb = np.abs(resid)
        self.binv = np.diag(self.art_sign.copy())
        self.iterations = 0
        self.since_refresh = 0
        self.bland = False
        self.degen_run = 0
        self.scale_b = 1.0 + (np.abs(self.b).max() if self.m else 0.0)

    # -- basis linear algebra -------------------------------------------

    def _column(self, j: int) -> np.ndarray:
        if j < self.n:
            return self.a[:, j]
        col = np.zeros(self.m)
        col[j - self.n] = self.art_sign[j - self.n]
        return col

    def _nonbasic_rhs(self) -> np.ndarray:
        r = self.a @ self.xn[:self.n]
        r += self.art_sign * self.xn[self.n:]
        return r

    def _refresh(self):
        bmat = np.empty((self.m, self.m))
        for r, j in enumerate(self.basis):
            bmat[:, r] = self._column(j)
        self.binv = np.linalg.inv(bmat)
        self.xb = self.binv @ (self.b - self._nonbasic_rhs())
        self.since_refresh = 0

    def _reduced_costs(self, cvec):
        y = self.binv.T @ cvec[self.basis]
        d = cvec.copy()
        d[:self.n] -= self.a.T @ y
        d[self.n:] -= self.art_sign * y
        return y, d

    # -- one simplex phase ----------------------------------------------

    def _phase(self, cvec, allow_unbounded):
        movable = self.hi > self.lo
        while True:
            if self.iterations > MAX_PIVOTS:
                raise PivotLimitError("cycling suspected")
            if self.since_refresh >= REFRESH_EVERY:
                self._refresh()
            y, d = self._reduced_costs(cvec)
            st = self.status
            go_up = (st == _LO) & movable & (d < -DUAL_TOL)
            go_dn = (st == _UP) & movable & (d > DUAL_TOL)
            go_fr = (st == _FREE) & (np.abs(d) > DUAL_TOL)
            elig = go_up | go_dn | go_fr
            if not elig.any():
                if self.since_refresh == 0:
                    return OPTIMAL, y, d
                self._refresh()
                continue
            if self.bland:
                q = int(np.argmax(elig))
            else:
                viol = np.where(elig, np.abs(d), -np.inf)
                q = int(np.argmax(viol))
            t = 1.0 if (st[q] == _LO or (st[q] == _FREE and d[q] < 0.0)) else -1.0

            dvec = self.binv @ self._column(q)
            g = t * dvec
            lo_b = self.lo[self.basis]
            hi_b = self.hi[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                r_lo = np.where(g > PIVOT_TOL, (self.xb - lo_b) / g, np.inf)
                r_up = np.where(g < -PIVOT_TOL, (self.xb - hi_b) / g, np.inf)
            ratios = np.maximum(np.minimum(r_lo, r_up), 0.0)
            ratios[~np.isfinite(ratios)] = np.inf
            rmin = float(ratios.min()) if self.m else np.inf
            own = self.hi[q] - self.lo[q]

            if rmin == np.inf and not np.isfinite(own):
                if allow_unbounded:
                    return UNBOUNDED, y, d
                raise RuntimeError("phase-1 subproblem reported unbounded")

            self.iterations += 1
            if own <= rmin:
                # the entering variable hits its opposite bound first
                self.xb -= t * own * dvec
                self.status[q] = _UP if self.status[q] == _LO else _LO
                self.xn[q] = self.hi[q] if self.status[q] == _UP else self.lo[q]
                continue

            tie = rmin * (1.0 + 1e-12) + 1e-15
            cand = np.flatnonzero(ratios <= tie)
            if self.bland:
                r = int(cand[np.argmin(self.basis[cand])])
            else:
                r = int(cand[np.argmax(np.abs(g[cand]))])
            self._pivot(q, r, t, rmin, dvec, g)

    def _pivot(self, q, r, t, delta, dvec, g):
        leave = self.basis[r]
        enter_val = self.xn[q] + t * delta
        self.xb -= t * delta * dvec
        self.xb[r] = enter_val
        if g[r] > 0.0:
            self.status[leave], self.xn[leave] = _LO, self.lo[leave]
        else:
            self.status[leave], self.xn[leave] = _UP, self.hi[leave]
        self.status[q], self.xn[q] = _BASIC, 0.0
        self.basis[r] = q
        br = self.binv[r] / dvec[r]
        self.binv -= np.outer(dvec, br)
        self.binv[r] = br
        self.since_refresh += 1
        if delta <= 1e-12:
            self.degen_run += 1
            if self.degen_run > DEGEN_SWITCH:
                self.bland = True
        else:
            self.degen_run = 0

    # -- phase glue -------------------------------------------------------

    def _drive_out_artificials(self):
        for r in range(self.m):
            if self.basis[r] < self.n:
                continue
            alpha = self.a.T @ self.binv[r]
            ok = (np.abs(alpha) > PIVOT_TOL) & (self.status[:self.n] != _BASIC)
            cand = np.flatnonzero(ok)
            if cand.size == 0:
                continue  # dependent row; artificial stays basic, pinned at 0
            q = int(cand[0])
            dvec = self.binv @ self._column(q)
            g = dvec.copy()
            g[r] = abs(g[r])  # leaving artificial exits to its lower bound 0
            self._pivot(q, r, 1.0, 0.0, dvec, g)

    def run(self) -> LPOutcome:
        c1 = np.zeros(self.total)
        c1[self.n:] = 1.0
        status, _, _ = self._phase(c1, allow_unbounded=False)
        art_basic = self.basis >= self.n
        phase1 = float(np.sum(np.maximum(self.xb[art_basic], 0.0)))
        if phase1 > FEAS_TOL * self.scale_b:
            return LPOutcome(INFEASIBLE, None, float("nan"), self.iterations)

        self.lo[self.n:] = 0.0
        self.hi[self.n:] = 0.0
        self.xb[art_basic] = 0.0
        self._drive_out_artificials()

        c2 = np.zeros(self.total)
        c2[:self.n] = self.c
        status, y, d = self._phase(c2, allow_unbounded=True)
        if status == UNBOUNDED:
            return LPOutcome(UNBOUNDED, None, float("nan"), self.iterations)

        x = self.xn[:self.n].copy()
        struct_basic = self.basis < self.n
        x[self.basis[struct_basic]] = self.xb[struct_basic]
        resid = float(np.abs(self.a @ x - self.b).max()) if self.m else 0.0
        if resid > FEAS_TOL * self.scale_b:
            raise RuntimeError(f"optimal basis residual {resid:.3e} out of tolerance")
        obj = float(self.c @ x)
        return LPOutcome(OPTIMAL, x, obj, self.iterations,
                         duals=y.copy(), reduced_costs=d[:self.n].copy())
