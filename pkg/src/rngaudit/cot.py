"""Mining of ``<think>`` reasoning traces.

Strategy labels come from an editable pattern table (CSV with ``label``,
``language_code`` and ``pattern`` columns). Patterns are regular expressions
matched against the case-folded trace; every language's patterns are tried
because a trace may switch language midway.
"""

from __future__ import annotations

import csv
import enum
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigError, EmptyAggregateError
from .parsing import iter_integer_tokens
from .prompts import Language


class StrategyLabel(str, enum.Enum):
    PiDigits = "PiDigits"
    DateTime = "DateTime"
    CentralValue = "CentralValue"
    WordMapping = "WordMapping"
    CodeRandFunction = "CodeRandFunction"
    RealWorldSimulation = "RealWorldSimulation"
    PersonalInfo = "PersonalInfo"
    Instinct = "Instinct"
    Other = "Other"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Pattern:
    label: StrategyLabel
    language: str
    regex: re.Pattern


class PatternTable:
    def __init__(self, patterns: Iterable[Pattern]):
        self.patterns = tuple(patterns)
        if not any(p.language == "EN" for p in self.patterns):
            raise ConfigError("pattern table needs English patterns")

    @classmethod
    def from_rows(cls, rows: Iterable[dict]) -> "PatternTable":
        out = []
        for i, row in enumerate(rows, 2):
            if None in row:  # csv puts surplus fields under None, e.g. an unquoted comma
                raise ConfigError(f"bad pattern row {i}: too many fields, quote the pattern")
            try:
                label = StrategyLabel(row["label"].strip())
                regex = re.compile(row["pattern"], re.IGNORECASE)
            except (KeyError, ValueError, re.error) as exc:
                raise ConfigError(f"bad pattern row {i}: {exc}") from exc
            out.append(Pattern(label, row.get("language_code", "EN").strip().upper(), regex))
        return cls(out)

    @classmethod
    def from_file(cls, path: str | Path) -> "PatternTable":
        with open(path, encoding="utf-8", newline="") as fh:
            return cls.from_rows(csv.DictReader(fh))

    @classmethod
    def default(cls) -> "PatternTable":
        ref = resources.files("rngaudit") / "data" / "cot_patterns.csv"
        with ref.open(encoding="utf-8", newline="") as fh:
            return cls.from_rows(csv.DictReader(fh))


_DEFAULT_TABLE: PatternTable | None = None


def default_patterns() -> PatternTable:
    global _DEFAULT_TABLE
    if _DEFAULT_TABLE is None:
        _DEFAULT_TABLE = PatternTable.default()
    return _DEFAULT_TABLE


def _normalise(text: str) -> str:
    return text.casefold().replace("’", "'").replace("‘", "'")


def classify_strategies(think_text: str, table: PatternTable | None = None) -> set[StrategyLabel]:
    """Multi-label strategy tags for one trace.

    An empty trace gets no labels; a non-empty trace on which nothing fires
    gets ``{Other}``.
    """
    if not think_text or not think_text.strip():
        return set()
    table = table or default_patterns()
    text = _normalise(think_text)
    labels = {p.label for p in table.patterns if p.regex.search(text)}
    return labels or {StrategyLabel.Other}


# ------------------------------------------------------------- language ----

_STOPWORDS = {
    Language.EN: frozenset("""the and i to a of is so that it need number random between with but
        maybe think this for okay what if or not be can just my me it's i'm let's""".split()),
    Language.ES: frozenset("""el la los las de que y un una es por para con pero como más número
        aleatorio dame entre puedo necesito voy pienso tal vez quizás""".split()),
    Language.FR: frozenset("""le la les de des un une et est que je pour pas dans nombre entre
        aléatoire il ce avec mais peut-être donc suis""".split()),
}
_WORD = re.compile(r"[^\W\d_]+(?:['\-][^\W\d_]+)*")


def _script_counts(text: str) -> Counter:
    c: Counter = Counter()
    for ch in text:
        o = ord(ch)
        if 0x4E00 <= o <= 0x9FFF or 0x3400 <= o <= 0x4DBF:
            c["han"] += 1
        elif 0x3040 <= o <= 0x30FF:
            c["kana"] += 1
        elif 0x0900 <= o <= 0x097F:
            c["deva"] += 1
        elif 0x0400 <= o <= 0x04FF:
            c["cyr"] += 1
        elif ch.isalpha() and o < 0x250:
            c["latin"] += 1
    return c


def detect_reasoning_language(think_text: str, min_hits: int = 2,
                              margin: float = 1.5) -> Language | None:
    """Guess the language a trace is written in; ``None`` means unknown.

    Non-Latin scripts decide by character share (kana separates Japanese from
    Chinese). Latin text is split between English, Spanish and French by
    stopword hits; the winner needs ``min_hits`` hits and a ``margin`` lead
    over the runner-up.
    """
    counts = _script_counts(think_text or "")
    total = sum(counts.values())
    if total == 0:
        return None
    cjk = counts["han"] + counts["kana"]
    if cjk / total >= 0.3:
        return Language.JP if counts["kana"] / cjk >= 0.1 else Language.CN
    if counts["deva"] / total >= 0.3:
        return Language.IN
    if counts["cyr"] / total >= 0.3:
        return Language.RU
    if counts["latin"] / total < 0.5:
        return None
    words = [w.lower() for w in _WORD.findall(think_text)]
    scores = {lang: sum(w in sw for w in words) for lang, sw in _STOPWORDS.items()}
    ranked = sorted(scores.items(), key=lambda kv: kv[1], reverse=True)
    (best, top), (_, second) = ranked[0], ranked[1]
    if top < min_hits or top < margin * second:
        return None
    return best


# -------------------------------------------------------------- numbers ----

# "I'll settle on N", "the final number is N", "N seems good", ...
COMMITMENT_PATTERNS = tuple(re.compile(p, re.IGNORECASE) for p in (
    r"\bgo(?:ing)? with\b",
    r"\bsettle (?:on|for)\b",
    r"\bfinal (?:number|answer|choice|output) (?:is|will be)\b",
    r"\bi'?ll just\b",
    r"\b(?:seems|sounds|looks) (?:good|fine|right|okay)\b",
    r"\bi(?:'ll| will)? (?:pick|choose|select)\b",
    r"\bmy (?:answer|choice|number|pick) (?:is|will be)\b",
    r"\bthe (?:random )?number is\b",
    r"\blet'?s (?:say|go with|pick)\b",
    r"\bi'?ll say\b",
    r"\bme quedo con\b", r"\bel número (?:final )?es\b", r"\belijo\b",
    r"\bje choisis\b", r"\ble nombre (?:final )?est\b", r"\bje vais prendre\b",
    r"最终|我选择|就选", r"にします|に決め", r"выбираю|итоговое число|остановлюсь на",
))
_SENTENCE_SPLIT = re.compile(r"(?<=[.!?。！？])\s+|\n+")


def _commitment_value(sentence: str) -> int | None:
    hits = [m for p in COMMITMENT_PATTERNS for m in p.finditer(sentence)]
    if not hits:
        return None
    last = max(hits, key=lambda m: m.end())
    tokens = [t for t in iter_integer_tokens(sentence) if t.value is not None]
    after = [t for t in tokens if t.start >= last.end()]
    if after:
        return after[0].value
    before = [t for t in tokens if t.end <= last.start()]
    return before[-1].value if before else None


def extract_numbers(think_text: str, remainder_value: int | None = None
                    ) -> tuple[list[int], int | None, bool]:
    """Numbers proposed in a trace and the one it finally commits to.

    Returns ``(proposed_numbers, final_stated, mismatch)``. The commitment is
    read from the last sentence that contains a commitment phrase and a
    number: the first integer after the phrase, or failing that the nearest
    one before it ("45 seems good").
    """
    text = (think_text or "").replace("’", "'")
    proposed = [t.value for t in iter_integer_tokens(text) if t.value is not None]
    final = None
    for sentence in reversed(_SENTENCE_SPLIT.split(text)):
        final = _commitment_value(sentence)
        if final is not None:
            break
    mismatch = final is not None and remainder_value is not None and final != remainder_value
    return proposed, final, mismatch


# ------------------------------------------------------------- analysis ----

@dataclass
class CotAnalysis:
    labels: set[StrategyLabel]
    reasoning_language: Language | None
    proposed_numbers: list[int]
    final_stated: int | None
    mismatch: bool
    cell_key: str = ""
    call_index: int | None = None

    @property
    def language_code(self) -> str:
        return self.reasoning_language.value if self.reasoning_language else "unknown"


def analyze_trace(think_text: str, emitted_value: int | None = None,
                  table: PatternTable | None = None, **ident) -> CotAnalysis:
    proposed, final, mismatch = extract_numbers(think_text, emitted_value)
    return CotAnalysis(
        labels=classify_strategies(think_text, table),
        reasoning_language=detect_reasoning_language(think_text),
        proposed_numbers=proposed, final_stated=final, mismatch=mismatch, **ident,
    )


@dataclass
class StrategyAggregate:
    n_traces: int
    labels: dict[str, float]
    languages: dict[str, float]
    label_counts: dict[str, int] = field(default_factory=dict)
    mismatch_rate: float = 0.0


def aggregate_strategies(analyses: Sequence[CotAnalysis]) -> StrategyAggregate:
    """Share of traces carrying each label and written in each language.

    Labels are multi-valued, so label shares need not sum to one.
    """
    n = len(analyses)
    if n == 0:
        raise EmptyAggregateError("no traces to aggregate")
    label_counts = Counter(str(lab) for a in analyses for lab in a.labels)
    lang_counts = Counter(a.language_code for a in analyses)
    with_final = [a for a in analyses if a.final_stated is not None]
    return StrategyAggregate(
        n_traces=n,
        labels={lab.value: label_counts.get(lab.value, 0) / n for lab in StrategyLabel},
        languages={k: v / n for k, v in sorted(lang_counts.items())},
        label_counts={lab.value: label_counts.get(lab.value, 0) for lab in StrategyLabel},
        mismatch_rate=(sum(a.mismatch for a in with_final) / len(with_final)) if with_final else 0.0,
    )


# Approximate shares reported for one reasoning model's traces. Reference
# only: they describe that model, not this classifier.
REFERENCE_SHARES = {
    "PiDigits": 0.10, "DateTime": 0.30, "CentralValue": 0.10, "WordMapping": 0.50,
    "CodeRandFunction": 0.60, "RealWorldSimulation": 0.60, "PersonalInfo": 0.30,
    "Instinct": 0.60, "english_reasoning": 0.70,
}

ANALYSIS_COLUMNS = ["cell_key", "call_index", "labels", "reasoning_language", "n_proposed",
                    "final_stated", "mismatch"]


def analysis_row(a: CotAnalysis) -> dict:
    return {
        "cell_key": a.cell_key,
        "call_index": "" if a.call_index is None else a.call_index,
        "labels": ";".join(sorted(str(lab) for lab in a.labels)),
        "reasoning_language": a.language_code,
        "n_proposed": len(a.proposed_numbers),
        "final_stated": "" if a.final_stated is None else a.final_stated,
        "mismatch": "true" if a.mismatch else "false",
    }
