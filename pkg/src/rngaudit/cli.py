"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 provider failure,
3 storage failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import cot, report, runner, stats
from .errors import ConfigError, PlanDriftError, ProviderError, RngAuditError, StorageError
from .plan import load_config
from .store import Store

EXIT_OK, EXIT_USAGE, EXIT_PROVIDER, EXIT_STORAGE = 0, 1, 2, 3

log = logging.getLogger("rngaudit")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _cmd_run(args) -> int:
    config = load_config(args.config)
    fn = runner.resume if args.command == "resume" else runner.run
    summary = fn(config, args.store, max_workers=args.workers)
    print(summary)
    return EXIT_PROVIDER if summary.calls_error else EXIT_OK


def _cmd_analyze(args) -> int:
    result = report.summarize_store(args.store, min_valid=args.min_valid, base=args.entropy_base)
    report.write_stats_csv(result, args.out)
    absent = sum(not s.present for s in result)
    print(f"{len(result)} cells written to {args.out} ({absent} absent)")
    return EXIT_OK


def _cmd_table(args) -> int:
    rows = report.read_stats_csv(args.stats)
    if args.range is not None:
        rows = [s for s in rows if s.range_upper == args.range]
    ranges = {s.range_upper for s in rows}
    if len(ranges) > 1:
        raise ConfigError(f"stats cover several ranges {sorted(ranges)}; pick one with --range")
    table = report.aggregate_table(rows, args.metric)
    out = Path(args.out)
    if out.suffix == ".md":
        out.write_text(table.to_markdown(), encoding="utf-8")
    else:
        table.to_csv(out)
    print(table.to_markdown(), end="")
    return EXIT_OK


def _cmd_heatmap(args) -> int:
    matrix = report.heatmap_matrix(args.store, args.provider, args.language, args.range)
    out = Path(args.out)
    if out.suffix == ".svg":
        out.write_text(report.render_heatmap_svg(matrix, args.norm), encoding="utf-8")
    else:
        matrix.to_csv(out, args.norm)
    return EXIT_OK


def _cmd_violin(args) -> int:
    summaries = report.distribution_summary(args.store, args.group_by)
    report.write_summary_csv(summaries, args.out)
    return EXIT_OK


def _cmd_baseline(args) -> int:
    runs = stats.baseline_uniform_runs(args.range, args.samples, args.runs, args.seed)
    report.write_stats_csv(runs, args.out)
    s = stats.summarize_runs(runs)
    print(f"p-value   {s.mean_p:.3f} ± {s.std_p:.3f}")
    print(f"Cramér V  {s.mean_v:.3f} ± {s.std_v:.3f}")
    print(f"RI        {s.mean_ri:.3f} ± {s.std_ri:.3f} (exact uniform: {stats.uniform_ri(args.range):.3f})")
    return EXIT_OK


def _cmd_cot(args) -> int:
    table = cot.PatternTable.from_file(args.patterns) if args.patterns else cot.default_patterns()
    analyses = []
    store = Store(args.store)
    for cell in store.cells():
        for entry in store.cell_file(cell).read_transcript():
            think = entry.get("think_text")
            if think is None:
                continue
            analyses.append(cot.analyze_trace(think, entry.get("parsed_value"), table,
                                              cell_key=cell.key, call_index=entry.get("call_index")))
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cot.ANALYSIS_COLUMNS, lineterminator="\n")
        w.writeheader()
        for a in analyses:
            w.writerow(cot.analysis_row(a))
    if not analyses:
        print("no reasoning traces found")
        return EXIT_OK
    agg = cot.aggregate_strategies(analyses)
    print(f"{agg.n_traces} traces")
    for label, share in agg.labels.items():
        print(f"  {label:<20} {share:.2f}")
    for lang, share in agg.languages.items():
        print(f"  lang {lang:<15} {share:.2f}")
    print(f"  final/emitted mismatch {agg.mismatch_rate:.2f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rngaudit", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name in ("run", "resume"):
        sp = sub.add_parser(name, help=f"{name} an experiment plan")
        sp.add_argument("--config", required=True)
        sp.add_argument("--store", required=True)
        sp.add_argument("--workers", type=int, default=None)
        sp.set_defaults(func=_cmd_run)

    sp = sub.add_parser("analyze", help="compute per-cell statistics")
    sp.add_argument("--store", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--min-valid", type=int, default=report.MIN_VALID)
    sp.add_argument("--entropy-base", choices=("observed", "range"), default="observed")
    sp.set_defaults(func=_cmd_analyze)

    rp = sub.add_parser("report", help="tables and figure data")
    rsub = rp.add_subparsers(dest="report", required=True, parser_class=_Parser)
    sp = rsub.add_parser("table")
    sp.add_argument("--stats", required=True)
    sp.add_argument("--metric", default="ri")
    sp.add_argument("--range", type=int, default=None)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_table)
    sp = rsub.add_parser("heatmap")
    sp.add_argument("--store", required=True)
    sp.add_argument("--provider", required=True)
    sp.add_argument("--language", required=True)
    sp.add_argument("--range", type=int, required=True)
    sp.add_argument("--norm", choices=("abs", "rowmax"), default="abs")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_heatmap)
    sp = rsub.add_parser("violin")
    sp.add_argument("--store", required=True)
    sp.add_argument("--group-by", choices=report.GROUP_KEYS, default="provider")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_violin)

    sp = sub.add_parser("baseline", help="pseudo-random uniform reference runs")
    sp.add_argument("--range", type=int, default=5)
    sp.add_argument("--samples", type=int, default=100)
    sp.add_argument("--runs", type=int, default=100)
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_baseline)

    sp = sub.add_parser("cot", help="classify reasoning traces")
    sp.add_argument("--store", required=True)
    sp.add_argument("--patterns", default=None)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=_cmd_cot)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ProviderError as exc:
        print(f"provider failure: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (StorageError, PlanDriftError, OSError) as exc:
        print(f"storage failure: {exc}", file=sys.stderr)
        return EXIT_STORAGE
    except (ConfigError, RngAuditError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
