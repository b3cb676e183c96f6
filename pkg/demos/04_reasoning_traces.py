"""Mining a reasoning trace for the strategies a model uses to "randomize".

The trace below is a real-style reasoning transcript for a 1..100 request.
The classifier tags it with strategy labels, detects which language the
model reasoned in, lists every number it considered, and checks whether
the number it settled on is the one it finally emitted.
"""

from pathlib import Path

from rngaudit.cot import aggregate_strategies, analyze_trace, classify_strategies

HERE = Path(__file__).resolve().parent
trace = (HERE.parent / "tests" / "fixtures" / "appendix_trace.txt").read_text(encoding="utf-8")

a = analyze_trace(trace, emitted_value=43)
print("labels:           ", sorted(str(x) for x in a.labels))
print("reasoning language:", a.language_code)
print("numbers considered:", len(a.proposed_numbers), "mentions, first few", a.proposed_numbers[:12])
print("final stated:      ", a.final_stated, "| mismatch with emitted:", a.mismatch)

snippets = [
    "Hmm, maybe use the current time in seconds, that's 37.",
    "I'll just go with my gut and say 42.",
    "Let me avoid the middle and pick something less obvious, like 17.",
    "Tomo el valor central del rango, 50.",
    "In Python I would call random.randint(1, 100), so say 63.",
]
print()
analyses = [a]
for s in snippets:
    print(f"{s!r:<70} {sorted(str(x) for x in classify_strategies(s))}")
    analyses.append(analyze_trace(s))

agg = aggregate_strategies(analyses)
print(f"\nshares over {agg.n_traces} traces")
for label, share in agg.labels.items():
    print(f"  {label:<20} {share:.2f}")
