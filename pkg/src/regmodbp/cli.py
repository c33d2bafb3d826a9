"""Command-line front end.

Four workflows::

    regmodbp solve      --instance inst.json --method regmodbp [--out xhat.csv]
    regmodbp rip        --matrix A.csv --smax 6 [--out table.csv]
    regmodbp certify    --instance inst.json [--out report.json] [--force]
    regmodbp experiment --config cfg.json [--out prefix] [--workers 4]

Exit codes: 0 on success, 1 on domain errors (infeasible prior,
enumeration cap exceeded, failed solve), 2 on I/O or parse errors.
Input files are loaded and validated before any computation starts.
Diagnostics go to stderr; data goes to files or stdout.  Identical
invocations on identical files produce byte-identical outputs.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import bench, certificates, linalg, lp, models, rip

DOMAIN_ERRORS = (ValueError, KeyError, models.RecoveryError,
                 lp.PivotLimitError, certificates.CertificateError)


def _err(msg: str) -> None:
    print(f"regmodbp: {msg}", file=sys.stderr)


def _parse_gamma_list(text):
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="regmodbp", description=__doc__,
                                  formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="recover one instance with one method")
    p.add_argument("--instance", required=True)
    p.add_argument("--method", required=True, choices=models.METHOD_TAGS)
    p.add_argument("--gamma", type=_parse_gamma_list, default=None,
                   help="comma-separated weights; solve uses the first")
    p.add_argument("--rho", type=float, default=None, help="override the prior radius")
    p.add_argument("--out", default=None, help="recovered-signal CSV (default stdout)")
    p.add_argument("--dump-lp", default=None, help="write the reduced LP as text")
    p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("rip", help="exact delta/theta table of a matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--smax", type=int, required=True)
    p.add_argument("--out", default=None, help="table CSV (default stdout)")
    p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("certify", help="recovery conditions and dual certificate")
    p.add_argument("--instance", required=True)
    p.add_argument("--out", default=None, help="JSON certificate report")
    p.add_argument("--force", action="store_true",
                   help="build the certificate even when conditions fail")
    p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("experiment", help="run a Monte Carlo configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None,
                   help="output prefix (default: config file stem)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--gamma", type=_parse_gamma_list, default=None,
                   help="override the weighted-l1 sweep")
    p.add_argument("--verbose", action="store_true")
    return top


def _emit(text: str, out_path) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w") as fh:
            fh.write(text)


def _cmd_solve(args) -> int:
    try:
        inst, prior = models.read_instance_json(args.instance)
    except Exception as exc:
        _err(f"cannot load instance: {exc}")
        return 2
    try:
        if args.rho is not None and prior is not None:
            prior = models.PriorKnowledge(prior.t, prior.mu_hat_t, args.rho)
        if args.method == "wl1":
            gamma = (args.gamma or models.GAMMA_SWEEP)[0]
            method = models.Method.weighted_l1(gamma)
        else:
            method = models.Method(args.method)
        red = models.reduce(inst, prior, method)
        if args.dump_lp:
            with open(args.dump_lp, "w") as fh:
                fh.write(lp.format_lp(red.problem))
        out = lp.solve_lp(red.problem)
        if out.status != lp.OPTIMAL:
            raise models.RecoveryError(f"{method.tag} program reported {out.status}")
        x_hat = red.beta_from(out.solution)
    except DOMAIN_ERRORS as exc:
        _err(str(exc))
        return 1
    _emit("".join(repr(float(v)) + "\n" for v in x_hat), args.out)
    if args.verbose:
        _err(f"status={out.status} objective={out.objective:.12g} "
             f"iterations={out.iterations}")
    return 0


def _cmd_rip(args) -> int:
    try:
        a = linalg.read_matrix_csv(args.matrix)
    except Exception as exc:
        _err(f"cannot load matrix: {exc}")
        return 2
    try:
        if args.smax > a.shape[1]:
            raise ValueError(f"smax={args.smax} exceeds {a.shape[1]} columns")
        table = rip.build_table(a, args.smax)
    except DOMAIN_ERRORS as exc:
        _err(str(exc))
        return 1
    lines = ["kind,s1,s2,value\n"]
    for s in sorted(table.delta):
        lines.append(f"delta,{s},0,{table.delta[s]!r}\n")
    for (s1, s2) in sorted(table.theta):
        lines.append(f"theta,{s1},{s2},{table.theta[(s1, s2)]!r}\n")
    _emit("".join(lines), args.out)
    return 0


def _check_entry(c) -> dict:
    return {"name": c.name, "value": float(c.value), "bound": float(c.bound),
            "margin": float(c.margin), "passed": bool(c.passed)}


def _cmd_certify(args) -> int:
    try:
        inst, prior = models.read_instance_json(args.instance)
    except Exception as exc:
        _err(f"cannot load instance: {exc}")
        return 2
    try:
        if inst.x_true is None:
            raise ValueError("certify needs ground truth (x_true) in the instance")
        if prior is None:
            raise ValueError("certify needs prior knowledge (T, mu_hat, rho)")
        models.check_prior_feasible(inst, prior)
        support = inst.support
        delta = prior.misses(support)
        delta_e = prior.extras(support)
        k, u = int(prior.t.size), int(delta.size)
        if k + 2 * u > inst.m:
            raise ValueError(f"orders k+2u = {k + 2 * u} exceed m = {inst.m}")
        sgn_d = models.sign_pattern(inst.x_true[delta])
        partition = certificates.classify_active(inst.x_true, prior)
        good = certificates.good_set_search(inst.a, partition, delta, sgn_d)
        table = rip.condition_table(inst.a, k, u, good.k_b)
        conditions = rip.theorem1_conditions(table, k, u, good.k_b)
        report = None
        if conditions.overall or args.force:
            report = certificates.build_certificate(
                inst.a, table, partition, good, delta, sgn_d, force=args.force)
    except DOMAIN_ERRORS as exc:
        _err(str(exc))
        return 1

    def fmt_set(s):
        return "{" + ",".join(str(int(i)) for i in s) + "}"

    print(f"support estimate |T| = {k}, misses |Delta| = {u}, "
          f"extras |Delta_e| = {delta_e.size}")
    print(f"active sets T_a+ = {fmt_set(partition.t_a_plus)}, "
          f"T_a- = {fmt_set(partition.t_a_minus)}")
    print(f"good sets  T_a+g = {fmt_set(good.t_a_plus_g)}, "
          f"T_a-g = {fmt_set(good.t_a_minus_g)}, k_b = {good.k_b}")
    for c in conditions.checks:
        print(f"  [{'pass' if c.passed else 'FAIL'}] {c.name}: "
              f"{c.value:.6g} (margin {c.margin:+.6g})")
    if conditions.overall:
        print("conditions hold: recovery is guaranteed for this instance")
    else:
        print("conditions do not hold: inconclusive (the test is sufficient, "
              "not necessary)")
    if report is not None:
        for c in report.checks:
            print(f"  [{'pass' if c.passed else 'FAIL'}] certificate: {c.name}: "
                  f"{c.value:.6g}")
        print(f"certificate {'verifies' if report.passed else 'does NOT verify'} "
              f"after {report.terms_used} series terms")

    if args.out:
        doc = {
            "fingerprint": table.fingerprint,
            "k": k, "u": u, "k_b": good.k_b,
            "sets": {
                "T": [int(i) for i in prior.t],
                "Delta": [int(i) for i in delta],
                "Delta_e": [int(i) for i in delta_e],
                "T_a_plus": [int(i) for i in partition.t_a_plus],
                "T_a_minus": [int(i) for i in partition.t_a_minus],
                "T_a_plus_g": [int(i) for i in good.t_a_plus_g],
                "T_a_minus_g": [int(i) for i in good.t_a_minus_g],
                "T_b": [int(i) for i in good.t_b],
            },
            "conditions": [_check_entry(c) for c in conditions.checks],
            "conditions_pass": conditions.overall,
            "certificate": None if report is None else {
                "passed": report.passed,
                "checks": [_check_entry(c) for c in report.checks],
                "terms_used": report.terms_used,
                "term_norms": report.term_norms,
                "tail_norms": report.tail_norms,
                "decay_bound": report.decay_bound,
                "w": [float(v) for v in report.w],
            },
        }
        with open(args.out, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _cmd_experiment(args) -> int:
    try:
        config = bench.ExperimentConfig.from_json(args.config)
        if args.seed is not None:
            config = bench.ExperimentConfig.from_dict(
                {**config.to_dict(), "seed": args.seed})
        if args.gamma is not None:
            config = bench.ExperimentConfig.from_dict(
                {**config.to_dict(), "gamma_sweep": list(args.gamma)})
    except Exception as exc:
        _err(f"cannot load config: {exc}")
        return 2
    try:
        result = bench.run_experiment(config, workers=max(1, args.workers))
    except DOMAIN_ERRORS as exc:
        _err(str(exc))
        return 1
    prefix = args.out or os.path.splitext(os.path.basename(args.config))[0]
    bench.write_trials_csv(result, prefix + "_trials.csv")
    bench.write_summary_csv(result, prefix + "_summary.csv")
    print(f"{'method':>10} {'n':>5} {'p_exact':>8} {'nrmse':>10} "
          f"{'E|Ta|':>7} {'E|Tg|':>7} {'E|Tb|':>7}")
    for s in bench.summarize(result):
        def cell(v):
            return "-" if v is None else f"{v:.3f}"
        print(f"{s.method:>10} {s.n:>5} {s.p_exact:>8.3f} {s.nrmse_mean:>10.4g} "
              f"{cell(s.mean_ta):>7} {cell(s.mean_tg):>7} {cell(s.mean_tb):>7}")
    failures = result.failures
    if failures:
        _err(f"{len(failures)} trial solve(s) failed; see {prefix}_trials.csv")
    if args.verbose:
        _err(f"wrote {prefix}_trials.csv and {prefix}_summary.csv")
    return 0


_HANDLERS = {"solve": _cmd_solve, "rip": _cmd_rip, "certify": _cmd_certify,
             "experiment": _cmd_experiment}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return _HANDLERS[args.command](args)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
