"""Monte Carlo benchmark harness for the four recovery programs.

One experiment cell draws a column-normalized Gaussian matrix once per
(measurement count, seed), then repeats independent trials: draw the
support N, the misses Delta (from N) and extras Delta_e (from N^c) to
form the estimate T = N u Delta_e \\ Delta, draw the signal and the
value estimate per the scenario, measure y = A x, and run every
requested method.  A trial is exact when the relative l2 error is
below 1e-5; p_exact is the exact fraction and N-RMSE is reported both
as the mean of per-trial relative errors (`nrmse_mean`) and as the
ratio of aggregate norms sqrt(sum ||xhat-x||^2) / sqrt(sum ||x||^2)
(`nrmse_agg`).

Scenarios
---------
quantized   x = +-1 on N n T, +-0.1 on Delta; estimate noise nu on a
            symmetric grid {0, +-rho/K, ..., +-rho} on T n N and the
            same grid without 0 on Delta_e; the box constraint is
            active with probability 2/(2K+1) per grid entry.
three_bit   integer signals: x in {3..7} on N n T, {1,2} on Delta;
            mu_hat = clip(x + nu) into [0,7] with nu in {-2..2}
            ({-2,-1,1,2} on Delta_e); rho = 2.
continuous  x as in quantized; nu ~ uniform(-rho, rho), so constraints
            are active with probability zero.

Determinism
-----------
Every draw comes from the counter-based streams in
:mod:`regmodbp.rng`: the matrix at measurement count n uses stream
2**32 + n (or the n-independent master stream 2**32 when
`reuse_matrix` slices one m x m draw), and trial t at count n uses
stream n * 2**20 + t.  Trial streams never interact, so trial counts
can grow without reshuffling earlier trials, results are identical for
any worker count, and reruns are byte-identical.

Failed LP solves are recorded per trial with an error string and count
as not exact; they are surfaced in ExperimentResult.failures, never
dropped.
"""

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import certificates, models
from .linalg import complement, set_diff, set_union
from .models import Method, PriorKnowledge, RecoveryInstance
from .rng import Stream

MATRIX_STREAM_BASE = 1 << 32
TRIAL_STREAM_SHIFT = 20
ACTIVE_SEARCH_CAP = 20

SCENARIO_KINDS = ("quantized", "three_bit", "continuous")


@dataclass(frozen=True)
class Scenario:
    kind: str
    grid_k: int | None = None
    rho: float | None = None

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.kind == "quantized":
            if self.grid_k is None or self.grid_k < 1:
                raise ValueError("quantized scenario needs K >= 1")
            if self.rho is None or not self.rho > 0:
                raise ValueError("quantized scenario needs rho > 0")
        if self.kind == "continuous" and (self.rho is None or not self.rho > 0):
            raise ValueError("continuous scenario needs rho > 0")

    @property
    def has_active(self) -> bool:
        """Whether box constraints can be active with nonzero probability."""
        return self.kind != "continuous"

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.grid_k is not None:
            out["K"] = self.grid_k
        if self.rho is not None:
            out["rho"] = self.rho
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        return cls(kind=d["kind"], grid_k=d.get("K"), rho=d.get("rho"))


@dataclass(frozen=True)
class ExperimentConfig:
    m: int
    size_n: int
    u: int
    n_values: tuple
    scenario: Scenario
    trials: int
    seed: int
    methods: tuple = ("bp", "modcs", "wl1", "regmodbp")
    gamma_sweep: tuple = models.GAMMA_SWEEP
    reuse_matrix: bool = False
    collect_set_stats: bool = True

    def __post_init__(self):
        if self.size_n + self.u > self.m:
            raise ValueError("|N| + u exceeds m")
        if self.u > self.size_n:
            raise ValueError("u exceeds |N|")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.m >= (1 << 12) or self.trials >= (1 << TRIAL_STREAM_SHIFT):
            raise ValueError("m or trial count too large for the stream layout")
        object.__setattr__(self, "n_values", tuple(self.n_values))
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "gamma_sweep", tuple(float(g) for g in self.gamma_sweep))
        for tag in self.methods:
            if tag not in models.METHOD_TAGS:
                raise ValueError(f"unknown method {tag!r}")

    def resolved_n(self) -> list:
        return [resolve_n(self.m, v) for v in self.n_values]

    def to_dict(self) -> dict:
        return {"m": self.m, "size_n": self.size_n, "u": self.u,
                "n_values": list(self.n_values), "scenario": self.scenario.to_dict(),
                "trials": self.trials, "seed": self.seed,
                "methods": list(self.methods), "gamma_sweep": list(self.gamma_sweep),
                "reuse_matrix": self.reuse_matrix,
                "collect_set_stats": self.collect_set_stats}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        return cls(m=d["m"], size_n=d["size_n"], u=d["u"],
                   n_values=tuple(d["n_values"]),
                   scenario=Scenario.from_dict(d["scenario"]),
                   trials=d["trials"], seed=d["seed"],
                   methods=tuple(d.get("methods", ("bp", "modcs", "wl1", "regmodbp"))),
                   gamma_sweep=tuple(d.get("gamma_sweep", models.GAMMA_SWEEP)),
                   reuse_matrix=d.get("reuse_matrix", False),
                   collect_set_stats=d.get("collect_set_stats", True))

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def resolve_n(m: int, value) -> int:
    """Measurement counts below 1 are fractions of m, rounded to nearest."""
    v = float(value)
    if v <= 0:
        raise ValueError("n must be positive")
    n = int(round(v * m)) if v < 1.0 else int(round(v))
    if not 1 <= n <= m:
        raise ValueError(f"resolved n={n} outside 1..{m}")
    return n


def default_n_grid(m: int) -> list:
    """Multiples of ceil(0.01 m) between round(0.05 m) and round(0.5 m)."""
    step = math.ceil(0.01 * m)
    lo, hi = round(0.05 * m), round(0.5 * m)
    start = ((lo + step - 1) // step) * step
    return list(range(start, hi + 1, step))


# -- generators ----------------------------------------------------------


def gen_gaussian_matrix(n: int, m: int, rng: Stream) -> np.ndarray:
    """n x m with i.i.d. standard normal entries, columns scaled to unit
    l2 norm.  Entries are drawn row-major."""
    raw = rng.gaussians(n * m).reshape(n, m)
    return raw / np.linalg.norm(raw, axis=0)


def gen_support(m: int, size_n: int, u: int, rng: Stream):
    """Uniform support N, misses Delta from N, extras Delta_e from N^c,
    and the estimate T = N u Delta_e \\ Delta (so |T| = |N|)."""
    nset = rng.subset(np.arange(m), size_n)
    delta = rng.subset(nset, u)
    delta_e = rng.subset(complement(nset, m), u)
    t = set_union(set_diff(nset, delta), delta_e)
    return nset, delta, delta_e, t


def _signal_pm(m, nset, delta, rng):
    # one pass over sorted N: +-1 on kept entries, +-0.1 on misses
    x = np.zeros(m)
    in_delta = np.isin(nset, delta)
    for i, is_miss in zip(nset, in_delta):
        x[i] = rng.pick((0.1, -0.1)) if is_miss else rng.pick((1.0, -1.0))
    return x


def _grid_values(rho, k, with_zero):
    vals = [0.0] if with_zero else []
    for j in range(1, k + 1):
        vals.extend((j * rho / k, -j * rho / k))
    return tuple(vals)


def gen_signal_quantized(m, nset, delta, t, delta_e, grid_k, rho, rng):
    """Grid-noise scenario; returns (x, mu_hat on sorted T)."""
    x = _signal_pm(m, nset, delta, rng)
    inner = _grid_values(rho, grid_k, with_zero=True)
    outer = _grid_values(rho, grid_k, with_zero=False)
    in_extras = np.isin(t, delta_e)
    nu = np.array([rng.pick(outer if e else inner) for e in in_extras])
    return x, x[t] + nu


def gen_signal_3bit(m, nset, delta, t, delta_e, rng):
    """3-bit scenario; returns (x, mu_hat on sorted T, rho = 2)."""
    x = np.zeros(m)
    in_delta = np.isin(nset, delta)
    for i, is_miss in zip(nset, in_delta):
        x[i] = rng.pick((1.0, 2.0)) if is_miss else rng.pick((3.0, 4.0, 5.0, 6.0, 7.0))
    in_extras = np.isin(t, delta_e)
    nu = np.array([rng.pick((-2.0, -1.0, 1.0, 2.0)) if e
                   else rng.pick((-2.0, -1.0, 0.0, 1.0, 2.0)) for e in in_extras])
    return x, models.clip_0_7(x[t] + nu), 2.0


def gen_signal_continuous(m, nset, delta, t, rho, rng):
    """Continuous-noise scenario; returns (x, mu_hat on sorted T)."""
    x = _signal_pm(m, nset, delta, rng)
    nu = -rho + 2.0 * rho * rng.uniforms(t.size)
    return x, x[t] + nu


def gen_trial(config: ExperimentConfig, n: int, trial: int):
    """Instance and prior for one trial of one cell, from its own stream."""
    rng = Stream(config.seed, (n << TRIAL_STREAM_SHIFT) + trial)
    nset, delta, delta_e, t = gen_support(config.m, config.size_n, config.u, rng)
    sc = config.scenario
    if sc.kind == "quantized":
        x, mu = gen_signal_quantized(config.m, nset, delta, t, delta_e,
                                     sc.grid_k, sc.rho, rng)
        rho = sc.rho
    elif sc.kind == "three_bit":
        x, mu, rho = gen_signal_3bit(config.m, nset, delta, t, delta_e, rng)
    else:
        x, mu = gen_signal_continuous(config.m, nset, delta, t, sc.rho, rng)
        rho = sc.rho
    return x, PriorKnowledge(t, mu, rho), nset, delta, delta_e


def matrix_for(config: ExperimentConfig, n: int) -> np.ndarray:
    """The cell matrix: fresh per n by default, or the first n rows of a
    single m x m raw draw (re-normalized) when reuse_matrix is set."""
    if config.reuse_matrix:
        rng = Stream(config.seed, MATRIX_STREAM_BASE)
        raw = rng.gaussians(config.m * config.m).reshape(config.m, config.m)[:n]
        return raw / np.linalg.norm(raw, axis=0)
    return gen_gaussian_matrix(n, config.m, Stream(config.seed, MATRIX_STREAM_BASE + n))


# -- the driver ----------------------------------------------------------


@dataclass
class TrialRecord:
    method: str
    n: int
    trial: int
    exact: bool
    rel_err: float
    gamma: float | None = None
    error: str | None = None
    x_norm: float = 0.0


@dataclass
class SetStatsRecord:
    n: int
    trial: int
    ta: int
    tg: int | None
    tb: int | None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    n_values: list
    records: list
    set_stats: list

    @property
    def failures(self) -> list:
        return [r for r in self.records if r.error is not None]


def _recover_record(inst, prior, method, n, trial) -> TrialRecord:
    x = inst.x_true
    try:
        x_hat = models.recover(inst, prior, method)
        rel = models.rel_error(x_hat, x)
        return TrialRecord(method.tag, n, trial, rel < models.EXACT_REL_TOL, rel,
                           gamma=method.gamma, x_norm=float(np.linalg.norm(x)))
    except (models.RecoveryError, RuntimeError) as exc:
        return TrialRecord(method.tag, n, trial, False, float("nan"),
                           gamma=method.gamma, error=str(exc),
                           x_norm=float(np.linalg.norm(x)))


def run_trial(config: ExperimentConfig, a: np.ndarray, n: int, trial: int):
    """All method records plus the set statistics for one trial."""
    x, prior, nset, delta, delta_e = gen_trial(config, n, trial)
    inst = RecoveryInstance(a, a @ x, x)
    models.check_prior_feasible(inst, prior)
    sgn_d = models.sign_pattern(x[delta])

    partition = certificates.classify_active(x, prior)
    ta = int(partition.active.size)
    tg = tb = None
    if (config.collect_set_stats and config.scenario.has_active
            and ta <= ACTIVE_SEARCH_CAP):
        good = certificates.good_set_search(a, partition, delta, sgn_d)
        tg = int(good.t_a_plus_g.size + good.t_a_minus_g.size)
        tb = good.k_b
    stats = SetStatsRecord(n, trial, ta, tg, tb)

    records = []
    for tag in config.methods:
        if tag == "wl1":
            for gamma in config.gamma_sweep:
                records.append(_recover_record(inst, prior,
                                               Method.weighted_l1(gamma), n, trial))
        else:
            records.append(_recover_record(inst, prior, Method(tag), n, trial))
    return records, stats


def _chunk_worker(args):
    config, n, lo, hi = args
    a = matrix_for(config, n)
    records, stats = [], []
    for trial in range(lo, hi):
        recs, st = run_trial(config, a, n, trial)
        records.extend(recs)
        stats.append(st)
    return records, stats


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Run every (n, trial) cell; output is independent of `workers`."""
    n_values = config.resolved_n()
    jobs = []
    for n in n_values:
        chunk = config.trials if workers <= 1 else max(1, -(-config.trials // (workers * 4)))
        for lo in range(0, config.trials, chunk):
            jobs.append((config, n, lo, min(lo + chunk, config.trials)))
    if workers <= 1:
        outs = [_chunk_worker(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_chunk_worker, jobs))
    records, stats = [], []
    for recs, sts in outs:
        records.extend(recs)
        stats.extend(sts)
    return ExperimentResult(config, n_values, records, stats)


# -- aggregation and CSV -------------------------------------------------


@dataclass
class SummaryRow:
    method: str
    n: int
    p_exact: float
    nrmse_mean: float
    nrmse_agg: float
    mean_ta: float | None
    mean_tg: float | None
    mean_tb: float | None
    gamma: float | None = None


def _aggregate(records, n, trials, mean_ta, mean_tg, mean_tb, method, gamma=None):
    ok = [r for r in records if r.error is None]
    p = sum(r.exact for r in records) / trials
    if ok:
        mean = sum(r.rel_err for r in ok) / len(ok)
        agg = math.sqrt(sum((r.rel_err * r.x_norm) ** 2 for r in ok)
                        / sum(r.x_norm ** 2 for r in ok))
    else:
        mean = agg = float("nan")
    return SummaryRow(method, n, p, mean, agg, mean_ta, mean_tg, mean_tb, gamma)


def summarize(result: ExperimentResult) -> list:
    """One row per (method, n); weighted-l1 reports its best sweep gamma
    by p_exact (ties break toward the earliest sweep entry)."""
    cfg = result.config
    rows = []
    for n in result.n_values:
        stats = [s for s in result.set_stats if s.n == n]
        mean_ta = sum(s.ta for s in stats) / len(stats) if stats else None
        tg_vals = [s.tg for s in stats if s.tg is not None]
        mean_tg = sum(tg_vals) / len(tg_vals) if tg_vals else None
        tb_vals = [s.tb for s in stats if s.tb is not None]
        mean_tb = sum(tb_vals) / len(tb_vals) if tb_vals else None
        for tag in cfg.methods:
            recs = [r for r in result.records if r.n == n and r.method == tag]
            if tag == "wl1":
                per_gamma = [_aggregate([r for r in recs if r.gamma == g], n,
                                        cfg.trials, mean_ta, mean_tg, mean_tb,
                                        tag, gamma=g)
                             for g in cfg.gamma_sweep]
                rows.append(max(per_gamma, key=lambda s: s.p_exact))
            else:
                rows.append(_aggregate(recs, n, cfg.trials, mean_ta, mean_tg,
                                       mean_tb, tag))
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def write_trials_csv(result: ExperimentResult, path) -> None:
    stats = {(s.n, s.trial): s for s in result.set_stats}
    with open(path, "w") as fh:
        fh.write("method,n,trial,exact,rel_err,Ta,Tg,Tb,gamma\n")
        for r in result.records:
            s = stats[(r.n, r.trial)]
            fh.write(",".join([
                r.method, str(r.n), str(r.trial), str(int(r.exact)),
                _fmt(r.rel_err), str(s.ta),
                "" if s.tg is None else str(s.tg),
                "" if s.tb is None else str(s.tb),
                _fmt(r.gamma)]) + "\n")


def write_summary_csv(result: ExperimentResult, path) -> None:
    with open(path, "w") as fh:
        fh.write("method,n,p_exact,nrmse_mean,nrmse_agg,mean_Ta,mean_Tg,mean_Tb\n")
        for s in summarize(result):
            fh.write(",".join([
                s.method, str(s.n), _fmt(s.p_exact), _fmt(s.nrmse_mean),
                _fmt(s.nrmse_agg), _fmt(s.mean_ta), _fmt(s.mean_tg),
                _fmt(s.mean_tb)]) + "\n")


# -- smallest n with all trials exact ------------------------------------


@dataclass
class NExactResult:
    n: int | None
    status: str
    counts: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)


def find_n_exact(config: ExperimentConfig, method: Method,
                 verify_above: int = 0) -> NExactResult:
    """Smallest grid n at which every trial recovers exactly.

    Scans config.n_values (ascending) and aborts a grid point at its
    first inexact trial.  With verify_above > 0, that many further grid
    points are also checked and any non-exact one is recorded as a note
    (sampling noise can make exactness non-monotone), not a failure.
    """
    grid = config.resolved_n()
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("n grid must be strictly ascending")
    counts = {}

    def all_exact(n):
        a = matrix_for(config, n)
        done = 0
        for trial in range(config.trials):
            x, prior, _, _, _ = gen_trial(config, n, trial)
            inst = RecoveryInstance(a, a @ x, x)
            rec = _recover_record(inst, prior, method, n, trial)
            if not rec.exact:
                counts[n] = (done, trial + 1)
                return False
            done += 1
        counts[n] = (done, config.trials)
        return True

    for pos, n in enumerate(grid):
        if all_exact(n):
            notes = []
            for above in grid[pos + 1:pos + 1 + verify_above]:
                if not all_exact(above):
                    notes.append(f"n={above} not all-exact above n={n} "
                                 "(sampling noise)")
            return NExactResult(n, "found", counts, notes)
    return NExactResult(None, "above grid max", counts)
