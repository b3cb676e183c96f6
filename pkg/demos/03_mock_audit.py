"""A full audit against scripted mock providers, no network needed.

The plan in config/mock_plan.yaml crosses two biased mock models with two
languages, two ranges and three temperatures. The run is written to an
append-only store and killed partway through. Resuming picks up exactly
where it stopped. The finished store is then analysed into per-cell
statistics, an RI table, a value-by-temperature heatmap and distribution
summaries.
"""

import tempfile
from pathlib import Path

from rngaudit import Gateway, aggregate_table, heatmap_matrix, load_config, render_heatmap_svg, resume, run, summarize_store
from rngaudit.report import distribution_summary, write_stats_csv


class Crash(Exception):
    pass


class CrashingGateway(Gateway):
    """Stands in for a process that dies after ``limit`` calls."""

    def __init__(self, configs, limit, **kw):
        super().__init__(configs, **kw)
        self.limit, self.count = limit, 0

    def complete(self, name, request):
        if self.count >= self.limit:
            raise Crash()
        self.count += 1
        return super().complete(name, request)


HERE = Path(__file__).resolve().parent
config = load_config(HERE / "config" / "mock_plan.yaml")
work = Path(tempfile.mkdtemp(prefix="rngaudit-demo-"))
store = work / "store"

try:
    run(config, store, gateway=CrashingGateway(config.providers, 1000, seed=config.plan.seed), max_workers=4)
except Crash:
    print("run died after 1000 calls")
print("resume:", resume(config, store, max_workers=4))
print("resume again:", resume(config, store))  # already complete, nothing to do

stats = summarize_store(store)
write_stats_csv(stats, work / "stats.csv")
for upper in config.plan.ranges:
    table = aggregate_table([s for s in stats if s.range_upper == upper], "ri")
    print(f"\nRI, range 1..{upper}")
    print(table.to_markdown(), end="")

m = heatmap_matrix(store, "biased-a", "EN", 10)
(work / "heatmap.svg").write_text(render_heatmap_svg(m, "rowmax"), encoding="utf-8")
print("\nvalue counts for biased-a, EN, 1..10 (rows are temperatures)")
for t, row in zip(m.y, m.counts):
    print(f"  T={t:<4} {row.tolist()}")

print("\nparsed values grouped by temperature")
for d in distribution_summary(store, "temperature"):
    print(f"  T={d.group:<4} n={d.n} median {d.median:g} range {d.min:g}..{d.max:g}")
print(f"\nartifacts in {work}")
