"""Turn raw completion text into a structured parse.

The rules follow the output shapes seen from real models: the number comes
first, optionally followed by a note or, at high temperature, by garbage
tokens. Reasoning models wrap their monologue in ``<think>`` tags, which are
split off before the answer is parsed.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator


class Status(str, enum.Enum):
    OK = "ok"
    OUT_OF_RANGE = "out_of_range"
    UNPARSABLE = "unparsable"
    EXTRA_TEXT = "extra_text"
    DECOHERENT = "decoherent"
    PROVIDER_ERROR = "provider_error"

    def __str__(self) -> str:
        return self.value


# statuses whose value is a usable in-range draw
COUNTED_STATUSES = frozenset({Status.OK, Status.EXTRA_TEXT, Status.DECOHERENT})


@dataclass(frozen=True)
class ParsedOutput:
    value: int | None
    in_range: bool
    extra_text: bool
    decoherent: bool
    status: Status
    think_text: str | None = None


_TAG_RE = re.compile(r"<(/?)think\s*>", re.IGNORECASE)
_CLOSE_RE = re.compile(r"</think\s*>", re.IGNORECASE)


def extract_think(text: str) -> tuple[str | None, str]:
    """Split ``<think>`` blocks from the answer.

    Returns ``(think_text, remainder)``. Several blocks are joined with a
    newline. An unterminated opening tag swallows the rest of the text. A
    closing tag with no opening tag (some chat templates eat the opener)
    marks everything before it as reasoning.
    """
    think_parts: list[str] = []
    remainder: list[str] = []
    pos = 0
    found = False
    while True:
        m = _TAG_RE.search(text, pos)
        if m is None:
            remainder.append(text[pos:])
            break
        found = True
        if m.group(1):  # orphan closing tag
            think_parts.append(text[pos:m.start()])
            pos = m.end()
            continue
        remainder.append(text[pos:m.start()])
        close = _CLOSE_RE.search(text, m.end())
        if close is None:
            think_parts.append(text[m.end():])
            break
        think_parts.append(text[m.end():close.start()])
        pos = close.end()
    if not found:
        return None, text
    return "\n".join(think_parts), "".join(remainder)


_DIGITS = "0123456789０１２３４５６７８９"
_DIGIT_RUN = re.compile(f"[{_DIGITS}]+")
_MINUS = "-−‐‑–"
_FULLWIDTH = str.maketrans("０１２３４５６７８９", "0123456789")


def _wordish(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


@dataclass(frozen=True)
class _Token:
    start: int
    end: int
    value: int | None  # None for negatives / decimals


def iter_integer_tokens(text: str) -> Iterator[_Token]:
    """Yield standalone digit runs in order.

    Digit runs glued to letters (``addu610646``, ``74th``) are skipped.
    Runs that are really part of a negative number or a decimal yield a token
    with ``value=None``.
    """
    n = len(text)
    for m in _DIGIT_RUN.finditer(text):
        s, e = m.span()
        before = text[s - 1] if s > 0 else ""
        after = text[e] if e < n else ""
        if (before and _wordish(before)) or (after and _wordish(after)):
            continue
        is_decimal = (
            (after == "." and e + 1 < n and text[e + 1] in _DIGITS)
            or (before == "." and s >= 2 and text[s - 2] in _DIGITS)
        )
        is_negative = bool(before) and before in _MINUS and (s < 2 or not _wordish(text[s - 2]))
        if is_decimal or is_negative:
            yield _Token(s, e, None)
        else:
            yield _Token(s, e, int(m.group().translate(_FULLWIDTH)))


# parentheticals and "Note:" lines are recognised boilerplate, not gibberish
_NOTE_RE = re.compile(
    r"\([^()]*\)|\[[^\[\]]*\]|^\s*(?:note|nota|remarque|注|注意|примечание)\b.*$",
    re.IGNORECASE | re.MULTILINE,
)
_WORD_RE = re.compile(r"^[^\W\d_]+(?:['’.\-][^\W\d_]+)*$")
_EDGE_PUNCT = "\"'“”‘’«»()[]{}<>.,;:!?¡¿…—–-*`、。，！？：；「」『』"
_NEUTRAL_RE = re.compile(r"^[\d.,:/%+\-−=]*$")


def _is_gibberish(extra: str) -> bool:
    """Heuristic: does leftover text look like decoded noise?

    A token is junk when, after trimming punctuation, it is neither a plain
    word nor a number: mixed letters and digits, underscores, runs of
    symbols. Text is gibberish when junk makes up at least a quarter of the
    non-numeric tokens.
    """
    stripped = _NOTE_RE.sub(" ", extra)
    words = junk = 0
    for raw in stripped.split():
        tok = raw.strip(_EDGE_PUNCT)
        if not tok or _NEUTRAL_RE.match(tok):
            continue
        if _WORD_RE.match(tok):
            words += 1
        else:
            junk += 1
    return junk > 0 and junk * 4 >= junk + words


def parse_number(text: str, upper: int, lower: int = 1) -> ParsedOutput:
    """Parse an answer with the reasoning block already removed.

    The first standalone integer is taken as the model's choice. If that
    first numeric token is a negative number or a decimal, the answer is
    unparsable.
    """
    token = next(iter_integer_tokens(text), None)
    extra = text if token is None else text[:token.start] + " " + text[token.end:]
    extra_text = bool(extra.strip())
    decoherent = extra_text and _is_gibberish(extra)
    if token is None or token.value is None:
        return ParsedOutput(None, False, extra_text, decoherent, Status.UNPARSABLE)
    value = token.value
    in_range = lower <= value <= upper
    if not in_range:
        status = Status.OUT_OF_RANGE
    elif decoherent:
        status = Status.DECOHERENT
    elif extra_text:
        status = Status.EXTRA_TEXT
    else:
        status = Status.OK
    return ParsedOutput(value, in_range, extra_text, decoherent, status)


def parse_output(text: str, upper: int, lower: int = 1) -> ParsedOutput:
    """Compose :func:`extract_think` and :func:`parse_number`."""
    think, remainder = extract_think(text)
    parsed = parse_number(remainder, upper, lower)
    return ParsedOutput(
        parsed.value, parsed.in_range, parsed.extra_text, parsed.decoherent,
        parsed.status, think,
    )


def load_fixtures(path: str | Path) -> list[dict]:
    """Read a JSON-lines parser corpus.

    Each record has ``text``, ``range_upper``, ``expected_status`` and
    ``expected_value`` (null when no value is expected).
    """
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(json.loads(line))
    return out
