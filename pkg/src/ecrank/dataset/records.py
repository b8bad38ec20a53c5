"""Curve records and the on-disk formats: curves.csv and aps.bin."""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..arith import sieve_primes
from ..curve import ApRecord, WeierstrassCurve
from ..errors import ParseError, SingularCurve, ValidationError

CSV_HEADER = ["id", "a1", "a2", "a3", "a4", "a6", "conductor", "rank"]
ISOGENY_COLUMN = "isogeny_class"


@dataclass(frozen=True)
class CurveRecord:
    id: str
    a1: int
    a2: int
    a3: int
    a4: int
    a6: int
    conductor: int | None = None
    rank: int | None = None
    source: str = ""

    @property
    def ainvs(self):
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @property
    def curve(self) -> WeierstrassCurve:
        return WeierstrassCurve(*self.ainvs, conductor=self.conductor)

    def with_rank(self, rank: int | None) -> CurveRecord:
        return CurveRecord(self.id, *self.ainvs, conductor=self.conductor, rank=rank, source=self.source)


def _int(field: str, lineno: int, name: str) -> int:
    try:
        return int(field)
    except ValueError:
        raise ParseError(f"bad integer {field!r} in column {name}", lineno) from None


def ingest_csv(path, dedup_isogeny: bool = False, source: str = "") -> list[CurveRecord]:
    """Read a curves.csv file.

    Extra columns after the standard ones are ignored, except ``isogeny_class``
    which enables ``dedup_isogeny`` (first curve per (conductor, class) kept).
    """
    path = Path(path)
    out: list[CurveRecord] = []
    seen: set = set()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("missing header", 1) from None
        header = [h.strip() for h in header]
        if header[:len(CSV_HEADER)] != CSV_HEADER:
            raise ParseError(f"header must start with {','.join(CSV_HEADER)}", 1)
        iso_col = header.index(ISOGENY_COLUMN) if ISOGENY_COLUMN in header else None
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < len(CSV_HEADER):
                raise ParseError(f"expected {len(CSV_HEADER)} fields, got {len(row)}", lineno)
            row = [c.strip() for c in row]
            ainvs = [_int(row[i], lineno, CSV_HEADER[i]) for i in range(1, 6)]
            conductor = _int(row[6], lineno, "conductor") if row[6] else None
            rank = _int(row[7], lineno, "rank") if row[7] else None
            if conductor is not None and conductor <= 0:
                raise ValidationError(f"line {lineno}: conductor must be positive")
            if rank is not None and rank < 0:
                raise ValidationError(f"line {lineno}: negative rank")
            try:
                WeierstrassCurve(*ainvs)
            except SingularCurve:
                raise ValidationError(f"line {lineno}: singular curve {ainvs}") from None
            if dedup_isogeny and iso_col is not None:
                key = (conductor, row[iso_col])
                if key in seen:
                    continue
                seen.add(key)
            out.append(CurveRecord(row[0], *ainvs, conductor=conductor, rank=rank, source=source))
    return out


def write_curves_csv(path, records) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow([r.id, *r.ainvs, "" if r.conductor is None else r.conductor,
                    "" if r.rank is None else r.rank])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


# ---------------------------------------------------------------------------
# aps.bin: per curve, u32 id length, utf-8 id, u32 bound, then (<i4 a_p, u1 type)
# for every prime below the bound; little-endian, blocks back to back.

_ENTRY = np.dtype([("ap", "<i4"), ("red", "u1")])


def write_aps(path, records) -> None:
    with open(path, "wb") as fh:
        for rec in records:
            cid = rec.curve_id.encode("utf-8")
            fh.write(struct.pack("<I", len(cid)))
            fh.write(cid)
            fh.write(struct.pack("<I", rec.bound))
            block = np.empty(len(rec.primes), dtype=_ENTRY)
            block["ap"] = rec.ap
            block["red"] = rec.reduction
            fh.write(block.tobytes())


def read_aps(path) -> list[ApRecord]:
    data = Path(path).read_bytes()
    tables: dict[int, np.ndarray] = {}
    out = []
    pos = 0
    while pos < len(data):
        try:
            (n,) = struct.unpack_from("<I", data, pos)
            cid = data[pos + 4:pos + 4 + n].decode("utf-8")
            pos += 4 + n
            (bound,) = struct.unpack_from("<I", data, pos)
            pos += 4
        except (struct.error, UnicodeDecodeError) as exc:
            raise ParseError(f"corrupt aps file at byte {pos}: {exc}") from None
        if bound not in tables:
            tables[bound] = sieve_primes(bound).primes if bound >= 2 else np.zeros(0, np.int64)
        primes = tables[bound]
        size = len(primes) * _ENTRY.itemsize
        if pos + size > len(data):
            raise ParseError(f"truncated a_p block for {cid}")
        block = np.frombuffer(data, dtype=_ENTRY, count=len(primes), offset=pos)
        pos += size
        out.append(ApRecord(cid, bound, primes, block["ap"].astype(np.int64),
                            block["red"].astype(np.uint8)))
    return out
