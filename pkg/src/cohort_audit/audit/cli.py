"""Command-line entry point.

Exit codes: 0 = pass, 1 = violations found, 2 = usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..domain import ParseError, ValidationError
from ..gof import GofInput, LengthMismatch, ZeroExpectedCell, chi_squared_gof, format_p
from ..psm import balance, fit_propensity, match_one_to_k
from ..psm.matching import EmptyPool, InvalidK
from ..psm.propensity import SeparationDetected, SingleClass, SingularDesign
from ..psm.tabular import read_records, write_matched
from ..rates import Rate, baseline_stats, crude_rate, deviation, project_cases
from ..rounding import round_half_away
from ..screening import AuditConfig, external_validity_flag, structural_bias_flag
from ..simulate import InvalidConfig, default_config, load_sim_config, run_paradox_experiment
from .engine import run_audit
from .loaders import load_study_with_benchmark
from .report import dumps_machine, render_report
from .simreport import render_simulation, simulation_to_dict

EXIT_PASS, EXIT_VIOLATIONS, EXIT_USAGE = 0, 1, 2

INPUT_ERRORS = (ParseError, ValidationError, InvalidConfig, LengthMismatch, ZeroExpectedCell,
                EmptyPool, InvalidK, SingleClass, SeparationDetected, SingularDesign, OSError, ValueError)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _audit_config(args) -> AuditConfig:
    return AuditConfig(
        cr_deviation_sd_threshold=args.sd_threshold,
        cr_deviation_pct_threshold=args.pct_threshold,
        gof_alpha=args.alpha,
        rate_scale=args.scale,
    )


def _add_thresholds(p: argparse.ArgumentParser) -> None:
    d = AuditConfig()
    p.add_argument("--sd-threshold", type=float, default=d.cr_deviation_sd_threshold,
                   help="flag rate deviations beyond this many benchmark SDs (default %(default)s)")
    p.add_argument("--pct-threshold", type=float, default=d.cr_deviation_pct_threshold,
                   help="flag relative rate deviations beyond this fraction (default %(default)s)")
    p.add_argument("--alpha", type=float, default=d.gof_alpha,
                   help="flag goodness-of-fit p-values below this (default %(default)s)")
    p.add_argument("--scale", type=float, default=d.rate_scale,
                   help="persons per rate unit (default %(default)s)")


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_audit(args) -> int:
    study = load_study_with_benchmark(args.cohort, args.benchmark)
    report = run_audit(study.cohort, study.benchmark, _audit_config(args), study.reported,
                       study.name, study.notes)
    _emit(render_report(report, args.format), args.output)
    return EXIT_VIOLATIONS if report.verdict == "violations" else EXIT_PASS


def cmd_rates(args) -> int:
    rate = crude_rate(args.cases, args.population, args.scale)
    out = {"cases": args.cases, "population": args.population, "scale": args.scale, "rate": rate.value}
    lines = [f"{args.cases:,} / {args.population:,} x {args.scale:,.0f} = "
             f"{round_half_away(rate.value, 2):.2f} per {args.scale:,.0f}"]
    code = EXIT_PASS
    if args.baseline:
        stats = baseline_stats([Rate(v, args.baseline_scale) for v in args.baseline], args.scale)
        dev = deviation(rate, stats)
        out["baseline"] = {"mean": stats.mean.value, "sd": stats.sd.value, "n_years": stats.n_years}
        out["deviation"] = {"absolute": dev.absolute, "fraction": dev.fraction, "percent": dev.percent,
                            "sd_multiples": dev.sd_multiples}
        sd = "n/a" if dev.sd_multiples is None else f"{dev.sd_multiples:+.2f} SD"
        lines.append(f"baseline mean {round_half_away(stats.mean.value, 2):.2f} "
                     f"(population SD {round_half_away(stats.sd.value, 2):.2f}); deviation "
                     f"{round_half_away(dev.absolute, 2):+.2f} = {round_half_away(dev.percent, 2):+.2f}% ({sd})")
        flag = external_validity_flag(dev, _audit_config(args))
        if flag:
            out["flags"] = [flag.to_dict()]
            lines.append(f"[{flag.severity.upper()}] {flag.code}: {flag.message}")
            code = EXIT_VIOLATIONS
    if args.project:
        cases = project_cases(rate, args.project)
        out["projection"] = {"population": args.project, "cases": cases}
        lines.append(f"projected cases in {args.project:,}: {cases:,.0f}")
    _emit(json.dumps(out, indent=2) + "\n" if args.format == "machine" else "\n".join(lines) + "\n", None)
    return code


def cmd_gof(args) -> int:
    if args.observed is not None:
        data = GofInput(tuple(args.observed), tuple(args.expected))
    else:
        if args.total is None:
            raise ValueError("--observed-proportions needs --total")
        props = args.observed_proportions
        if any(p > 1 for p in props):
            props = [p / 100 for p in props]
        data = GofInput.from_proportions(props, args.total, args.expected)
    expected = list(data.expected_proportions)
    if any(p > 1 for p in expected):
        data = GofInput(data.observed, tuple(p / 100 for p in expected))
    result = chi_squared_gof(data)
    flag = structural_bias_flag(result, AuditConfig(gof_alpha=args.alpha))
    if args.format == "machine":
        doc = {"observed": list(result.observed), "expected": list(result.expected),
               "statistic": result.statistic, "df": result.df, "p_value": result.p_value,
               "p_floor_hit": result.p_floor_hit, "alpha": args.alpha, "significant": flag is not None}
        sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    else:
        print(f"observed {list(result.observed)} vs expected {[round(e, 1) for e in result.expected]}")
        print(f"chi-squared = {result.statistic:,.2f}, df = {result.df}, "
              f"p {format_p(result.p_value, result.p_floor_hit)}")
        if flag:
            print(f"[{flag.severity.upper()}] {flag.code}: {flag.message}")
    return EXIT_VIOLATIONS if flag else EXIT_PASS


def cmd_match(args) -> int:
    records, names = read_records(args.input, args.delimiter)
    model = fit_propensity(records)
    scores = model.scores(records)
    base_is_treated = args.base == "treated"
    base = [r.id for r in records if r.treated == base_is_treated]
    pool = [r.id for r in records if r.treated != base_is_treated]
    cohort = match_one_to_k(scores, base, pool, args.k, args.caliper,
                            with_replacement=args.with_replacement, base_is_treated=base_is_treated)
    n_rows = write_matched(args.output, records, names, cohort, args.delimiter)
    report = balance(records, model, cohort, names)
    doc = {
        "model": {"coefficients": list(model.coefficients), "converged": model.converged,
                  "iterations": model.iterations, "log_likelihood": model.log_likelihood},
        "k": cohort.k, "base_group": args.base, "matched_base": len(cohort.pairs),
        "unmatched_base": len(cohort.unmatched_base), "rows_written": n_rows,
        "balance": [{"covariate": r.name, "smd_before": r.smd_before, "smd_after": r.smd_after,
                     "flag_before": r.flag_before, "flag_after": r.flag_after} for r in report.rows],
    }
    if args.format == "machine":
        _emit(json.dumps(doc, indent=2) + "\n", args.report)
    else:
        lines = [f"matched {len(cohort.pairs):,} {args.base} base individuals 1:{cohort.k}; "
                 f"{len(cohort.unmatched_base):,} unmatched; {n_rows:,} rows -> {args.output}",
                 f"{'covariate':<20} {'SMD before':>11} {'SMD after':>11}"]
        lines += [f"{r.name:<20} {r.smd_before:>11.4f} {r.smd_after:>11.4f}" for r in report.rows]
        _emit("\n".join(lines) + "\n", args.report)
    return EXIT_PASS


def cmd_simulate(args) -> int:
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.n is not None:
        overrides["population_size"] = args.n
    if args.config:
        cfg = load_sim_config(args.config)
        if overrides:
            doc = cfg.to_dict()
            doc.update(overrides)
            cfg = type(cfg).from_dict(doc)
    else:
        cfg = default_config(**overrides)
    result = run_paradox_experiment(cfg, _audit_config(args))
    if args.format == "machine":
        text = dumps_machine(simulation_to_dict(result))
    else:
        text = render_simulation(result)
    _emit(text, args.output)
    return EXIT_VIOLATIONS if result.verdict == "violations" else EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cohort-audit", description="External-validity screening for cohort studies.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("audit", help="audit a cohort against a national benchmark")
    p.add_argument("--cohort", required=True, help="study document (JSON)")
    p.add_argument("--benchmark", help="benchmark document (JSON); optional if embedded in the study")
    p.add_argument("--format", choices=("human", "machine"), default="human")
    p.add_argument("--output", help="write the report here instead of stdout")
    _add_thresholds(p)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("rates", help="crude incidence rate for one group")
    p.add_argument("--cases", type=int, required=True)
    p.add_argument("--population", type=int, required=True)
    p.add_argument("--baseline", type=float, nargs="+", help="annual benchmark rates")
    p.add_argument("--baseline-scale", type=float, default=100_000,
                   help="persons per unit of --baseline values (default %(default)s)")
    p.add_argument("--project", type=int, metavar="POPULATION", help="project annual cases onto a population")
    p.add_argument("--format", choices=("human", "machine"), default="human")
    _add_thresholds(p)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("gof", help="chi-squared goodness of fit against known proportions")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--observed", type=int, nargs="+", help="observed counts")
    src.add_argument("--observed-proportions", type=float, nargs="+",
                     help="observed shares (fractions or percents), with --total")
    p.add_argument("--total", type=int)
    p.add_argument("--expected", type=float, nargs="+", required=True, help="expected proportions")
    p.add_argument("--alpha", type=float, default=AuditConfig().gof_alpha)
    p.add_argument("--format", choices=("human", "machine"), default="human")
    p.set_defaults(func=cmd_gof)

    p = sub.add_parser("match", help="1:k propensity-score matching of individual-level data")
    p.add_argument("--input", required=True, help="delimited file with id, treated, covariates")
    p.add_argument("--output", required=True, help="matched cohort file")
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--base", choices=("treated", "untreated"), default="treated")
    p.add_argument("--caliper", type=float)
    p.add_argument("--with-replacement", action="store_true")
    p.add_argument("--delimiter")
    p.add_argument("--report", help="write the balance report here instead of stdout")
    p.add_argument("--format", choices=("human", "machine"), default="human")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("simulate", help="run the matching-induced selection experiment")
    p.add_argument("--config", help="simulation config (JSON); defaults to the bundled calibration")
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int, help="population size override")
    p.add_argument("--format", choices=("human", "machine"), default="human")
    p.add_argument("--output")
    _add_thresholds(p)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help exits 0, usage errors exit 2
        return int(exc.code or 0)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except INPUT_ERRORS as exc:
        print(f"cohort-audit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


cli_main = main


if __name__ == "__main__":
    sys.exit(main())
