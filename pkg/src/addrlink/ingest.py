"""Loading address datasets and writing match files."""

from __future__ import annotations

import csv
import io
import logging
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

from .tokenizer import normalize

log = logging.getLogger(__name__)

MAX_ID = 2**64 - 1
MATCH_HEADER = ("left_id", "right_id", "score", "decision", "best")

PathLike = Union[str, os.PathLike]


class DatasetError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class AddressRecord:
    id: int
    raw: str
    normalized: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        if not 0 <= self.id <= MAX_ID:
            raise ValueError(f"address id {self.id} outside unsigned 64-bit range")
        norm = normalize(self.raw)
        object.__setattr__(self, "normalized", self.raw if norm == self.raw else norm)

    @property
    def is_empty(self) -> bool:
        return not self.normalized


def records_from_texts(texts: Iterable[str], start: int = 1) -> list[AddressRecord]:
    return [AddressRecord(i, t) for i, t in enumerate(texts, start)]


def _parse_id(value: str, line: int) -> int:
    try:
        rid = int(value.strip())
    except ValueError:
        raise DatasetError(f"line {line}: id {value!r} is not an integer") from None
    if not 0 <= rid <= MAX_ID:
        raise DatasetError(f"line {line}: id {rid} outside unsigned 64-bit range")
    return rid


def _read_text(path: Path) -> tuple[str, int]:
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc.strerror}") from exc
    text = data.decode("utf-8", errors="replace")
    bad = text.count("\ufffd") - data.decode("utf-8", errors="ignore").count("\ufffd")
    return text, bad


def load_dataset(
    path: PathLike,
    fmt: str = "lines",
    column: Union[str, int, None] = None,
    id_column: Union[str, int, None] = None,
    delimiter: str = ",",
) -> list[AddressRecord]:
    """Read one address per line, or one per CSV row.

    Without an id column, ids run from 1 in file order. Rows whose address
    normalises to nothing are kept (``record.is_empty``) so counts line up
    with the file. Undecodable bytes become separators.
    """
    path = Path(path)
    text, bad = _read_text(path)
    if bad:
        log.warning("%s: replaced %d invalid UTF-8 sequence(s)", path, bad)

    if fmt == "lines":
        lines = text.split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        lines = [line[:-1] if line.endswith("\r") else line for line in lines]
        return [AddressRecord(i, line) for i, line in enumerate(lines, 1)]
    if fmt != "csv":
        raise DatasetError(f"unknown format {fmt!r}")

    reader = csv.reader(io.StringIO(text, newline=""), delimiter=delimiter, strict=True)
    try:
        header = next(reader)
    except StopIteration:
        return []
    except csv.Error as exc:
        raise DatasetError(f"line 1: malformed CSV header: {exc}") from exc

    def resolve(col: Union[str, int, None], what: str) -> Optional[int]:
        if col is None:
            return None
        if isinstance(col, int) or str(col).isdigit():
            idx = int(col)
            if idx >= len(header):
                raise DatasetError(f"{what} column index {idx} out of range ({len(header)} columns)")
            return idx
        if col not in header:
            raise DatasetError(f"{what} column {col!r} not found in header {header}")
        return header.index(col)

    addr_idx = resolve(column if column is not None else 0, "address")
    id_idx = resolve(id_column, "id")

    records: list[AddressRecord] = []
    seen: dict[int, int] = {}
    next_id = 1
    while True:
        try:
            row = next(reader)
        except StopIteration:
            break
        except csv.Error as exc:
            raise DatasetError(f"line {reader.line_num}: malformed CSV row: {exc}") from exc
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(header):
            raise DatasetError(
                f"line {line}: expected {len(header)} fields, found {len(row)}"
            )
        if id_idx is None:
            rid = next_id
            next_id += 1
        else:
            rid = _parse_id(row[id_idx], line)
            if rid in seen:
                raise DatasetError(f"line {line}: duplicate id {rid} (first seen on line {seen[rid]})")
            seen[rid] = line
        records.append(AddressRecord(rid, row[addr_idx]))
    return records


def write_dataset(records: Sequence[AddressRecord], path: PathLike, fmt: str = "lines") -> None:
    """Inverse of :func:`load_dataset` for ``lines`` (ids implicit) and ``csv`` (``id,address``)."""
    if fmt == "lines":
        for pos, rec in enumerate(records, 1):
            if rec.id != pos:
                raise DatasetError("lines format needs ids 1..n in order; use csv")
            if "\n" in rec.raw or "\r" in rec.raw:
                raise DatasetError(f"record {rec.id} contains a line break")
        _atomic_write(path, "".join(r.raw + "\n" for r in records))
    elif fmt == "csv":
        with _atomic_open(path) as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["id", "address"])
            w.writerows((r.id, r.raw) for r in records)
    else:
        raise DatasetError(f"unknown format {fmt!r}")


def format_score(score: float) -> str:
    """Six decimals, ties to even (float formatting rounds the exact binary value that way)."""
    return f"{score:.6f}"


class _atomic_open:
    """Write to a temp file in the target directory, rename on success."""

    def __init__(self, path: PathLike):
        self.path = Path(path)

    def __enter__(self):
        directory = self.path.parent if str(self.path.parent) else Path(".")
        try:
            fd, self.tmp = tempfile.mkstemp(dir=directory, prefix=f".{self.path.name}.", suffix=".tmp")
        except OSError as exc:
            raise DatasetError(f"cannot write {self.path}: {exc.strerror}") from exc
        self.fh = os.fdopen(fd, "w", encoding="utf-8", newline="")
        return self.fh

    def __exit__(self, exc_type, exc, tb):
        self.fh.close()
        if exc_type is None:
            os.replace(self.tmp, self.path)
        else:
            os.unlink(self.tmp)
        return False


def _atomic_write(path: PathLike, content: str) -> None:
    with _atomic_open(path) as fh:
        fh.write(content)


def write_matches(results: Iterable, path: PathLike) -> int:
    """Write match results as TSV, returns the number of data lines.

    Results are written in the order given; the linkage functions already
    return them sorted by (left_id, score desc, right_id).
    """
    n = 0
    with _atomic_open(path) as fh:
        fh.write("\t".join(MATCH_HEADER) + "\n")
        for r in results:
            right = "" if r.right_id is None else str(r.right_id)
            decision = getattr(r.decision, "value", r.decision)
            fh.write(f"{r.left_id}\t{right}\t{r.score:.6f}\t{decision}\t{int(r.best)}\n")
            n += 1
    return n


def read_matches(path: PathLike) -> list[tuple[int, Optional[int], str, str, bool]]:
    """Parse a match file back into ``(left, right, score_text, decision, best)`` tuples."""
    out = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != MATCH_HEADER:
            raise DatasetError(f"{path}: unexpected header {header}")
        for line_no, line in enumerate(fh, 2):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != len(MATCH_HEADER):
                raise DatasetError(f"{path}: line {line_no}: expected {len(MATCH_HEADER)} fields")
            left, right, score, decision, best = parts
            out.append((int(left), int(right) if right else None, score, decision, best == "1"))
    return out
