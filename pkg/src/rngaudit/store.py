"""Append-only per-cell record files.

Each cell owns ``<cell key>.csv`` with the columns in :data:`CSV_COLUMNS` and
a sibling ``<cell key>.jsonl`` transcript holding unescaped text and the
reasoning block. The CSV is authoritative; the transcript is rebuilt from it
when a crash left it behind.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator

from .errors import StorageError
from .parsing import Status, extract_think
from .plan import Cell

CSV_COLUMNS = ["call_index", "timestamp_iso8601", "status", "parsed_value",
               "think_present", "raw_text_escaped"]
MANIFEST = "run.json"

_ESCAPES = {"\\": "\\\\", "\n": "\\n", "\r": "\\r", "\t": "\\t", ",": "\\x2c"}
_UNESCAPES = {"\\": "\\", "n": "\n", "r": "\r", "t": "\t"}


def escape_text(text: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in text)


def unescape_text(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            if nxt == "x" and i + 3 < len(text):
                out.append(chr(int(text[i + 2:i + 4], 16)))
                i += 4
                continue
            out.append(_UNESCAPES.get(nxt, nxt))
            i += 2
            continue
        out.append(ch)
        i += 1
    return "".join(out)


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


@dataclass(frozen=True)
class CallRecord:
    cell: Cell
    call_index: int
    timestamp: str
    raw_text: str
    status: Status
    parsed_value: int | None
    think_present: bool

    def __post_init__(self):
        v = self.parsed_value
        in_range = v is not None and 1 <= v <= self.cell.upper
        if self.status is Status.OK and not in_range:
            raise ValueError(f"status ok needs an in-range value, got {v!r}")
        if self.status is Status.OUT_OF_RANGE and (v is None or in_range):
            raise ValueError(f"status out_of_range needs an out-of-range value, got {v!r}")

    def identity(self) -> tuple:
        """Everything except the timestamp."""
        return (self.cell, self.call_index, self.raw_text, self.status, self.parsed_value,
                self.think_present)

    def csv_row(self) -> list[str]:
        return [str(self.call_index), self.timestamp, self.status.value,
                "" if self.parsed_value is None else str(self.parsed_value),
                "true" if self.think_present else "false", escape_text(self.raw_text)]


def _repair_tail(path: Path) -> None:
    """Drop a torn final line left by an abrupt stop."""
    if not path.exists() or path.stat().st_size == 0:
        return
    with open(path, "rb+") as fh:
        fh.seek(-1, os.SEEK_END)
        if fh.read(1) == b"\n":
            return
        fh.seek(0)
        data = fh.read()
        fh.truncate(data.rfind(b"\n") + 1)


class CellFile:
    """Reader/appender for one cell. One writer per cell at a time."""

    def __init__(self, root: Path, cell: Cell):
        self.cell = cell
        self.csv_path = root / f"{cell.key}.csv"
        self.jsonl_path = root / f"{cell.key}.jsonl"

    def read(self) -> list[CallRecord]:
        if not self.csv_path.exists():
            return []
        try:
            text = self.csv_path.read_text(encoding="utf-8")
        except OSError as exc:
            raise StorageError(f"cannot read {self.csv_path}: {exc}") from exc
        if text and not text.endswith("\n"):
            text = text[:text.rfind("\n") + 1]
        records: dict[int, CallRecord] = {}
        for row in csv.DictReader(io.StringIO(text)):
            idx = int(row["call_index"])
            if idx in records:
                continue
            value = row["parsed_value"]
            records[idx] = CallRecord(
                self.cell, idx, row["timestamp_iso8601"], unescape_text(row["raw_text_escaped"]),
                Status(row["status"]), int(value) if value else None,
                row["think_present"] == "true",
            )
        return [records[i] for i in sorted(records)]

    def transcript_indices(self) -> set[int]:
        if not self.jsonl_path.exists():
            return set()
        out = set()
        with open(self.jsonl_path, encoding="utf-8") as fh:
            for line in fh:
                try:
                    out.add(json.loads(line)["call_index"])
                except (ValueError, KeyError):
                    continue
        return out

    def read_transcript(self) -> list[dict]:
        if not self.jsonl_path.exists():
            return []
        out = []
        with open(self.jsonl_path, encoding="utf-8") as fh:
            for line in fh:
                try:
                    out.append(json.loads(line))
                except ValueError:
                    continue
        return out

    def prepare(self) -> list[CallRecord]:
        """Repair torn tails, backfill missing transcript lines, return existing records."""
        try:
            _repair_tail(self.csv_path)
            _repair_tail(self.jsonl_path)
            records = self.read()
            have = self.transcript_indices()
            for rec in records:
                if rec.call_index not in have:
                    think, remainder = extract_think(rec.raw_text)
                    self._append_json(_transcript(rec, think, remainder, reconstructed=True))
        except OSError as exc:
            raise StorageError(f"cannot prepare {self.csv_path}: {exc}") from exc
        return records

    def append(self, rec: CallRecord, **extra) -> None:
        try:
            new = not self.csv_path.exists() or self.csv_path.stat().st_size == 0
            with open(self.csv_path, "a", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                if new:
                    writer.writerow(CSV_COLUMNS)
                writer.writerow(rec.csv_row())
                fh.flush()
                os.fsync(fh.fileno())
            think, remainder = extract_think(rec.raw_text)
            self._append_json(_transcript(rec, think, remainder, **extra))
        except OSError as exc:
            raise StorageError(f"cannot write {self.csv_path}: {exc}") from exc

    def _append_json(self, obj: dict) -> None:
        with open(self.jsonl_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
            fh.flush()


def _transcript(rec: CallRecord, think: str | None, remainder: str, **extra) -> dict:
    obj = {
        "cell_key": rec.cell.key,
        "call_index": rec.call_index,
        "timestamp": rec.timestamp,
        "status": rec.status.value,
        "parsed_value": rec.parsed_value,
        "raw_text": rec.raw_text,
        "think_text": think,
        "answer_text": remainder,
    }
    obj.update(extra)
    return obj


class Store:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    def cell_file(self, cell: Cell) -> CellFile:
        return CellFile(self.root, cell)

    def cells(self) -> list[Cell]:
        if not self.root.is_dir():
            raise StorageError(f"store {self.root} does not exist")
        out = []
        for p in sorted(self.root.glob("*.csv")):
            try:
                out.append(Cell.from_key(p.stem))
            except ValueError:
                continue
        return sorted(out)

    def iter_records(self) -> Iterator[tuple[Cell, list[CallRecord]]]:
        for cell in self.cells():
            yield cell, self.cell_file(cell).read()

    def read_manifest(self) -> dict | None:
        path = self.root / MANIFEST
        if not path.exists():
            return None
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise StorageError(f"unreadable manifest {path}: {exc}") from exc

    def write_manifest(self, manifest: dict) -> None:
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            tmp = self.root / (MANIFEST + ".tmp")
            tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")
            os.replace(tmp, self.root / MANIFEST)
        except OSError as exc:
            raise StorageError(f"cannot write manifest in {self.root}: {exc}") from exc
