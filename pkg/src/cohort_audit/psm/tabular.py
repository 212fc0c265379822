"""Delimited text I/O for individual-level matching data.

Input: a header row with ``id`` and ``treated`` (0/1), optional ``outcome``
(0/1); every other column is a numeric covariate. Output adds ``match_group``
and ``role`` (base/partner).
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

from ..domain import IndividualRecord, ParseError, validate_records
from .matching import MatchedCohort

RESERVED = ("id", "treated", "outcome")


def _delimiter_for(path: Path, delimiter: str | None) -> str:
    if delimiter:
        return delimiter
    return "\t" if path.suffix.lower() in (".tsv", ".tab") else ","


def _flag(value: str, column: str, source: str, line: int) -> bool:
    v = value.strip()
    if v in ("0", "1"):
        return v == "1"
    raise ParseError(f"column {column!r} must be 0 or 1, got {value!r}", source, line)


def read_records(path, delimiter: str | None = None) -> tuple[list[IndividualRecord], list[str]]:
    """Read records and return them with the covariate column names."""
    path = Path(path)
    source = str(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=_delimiter_for(path, delimiter))
        header = next(reader, None)
        if header is None:
            raise ParseError("file is empty", source, 1)
        header = [h.strip() for h in header]
        for required in ("id", "treated"):
            if required not in header:
                raise ParseError(f"missing required column {required!r}", source, 1)
        idx = {name: i for i, name in enumerate(header)}
        covariates = [h for h in header if h not in RESERVED]
        records = []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", source, line)
            try:
                x = tuple(float(row[idx[c]]) for c in covariates)
            except ValueError as exc:
                raise ParseError(f"non-numeric covariate: {exc}", source, line) from None
            outcome = _flag(row[idx["outcome"]], "outcome", source, line) if "outcome" in idx else None
            records.append(IndividualRecord(row[idx["id"]].strip(),
                                            _flag(row[idx["treated"]], "treated", source, line),
                                            x, outcome))
    return validate_records(records), covariates


def write_matched(path, records: Sequence[IndividualRecord], covariates: Sequence[str],
                  cohort: MatchedCohort, delimiter: str | None = None) -> int:
    """Write one row per matched individual (per use, under replacement); returns row count."""
    path = Path(path)
    by_id = {r.id: r for r in records}
    has_outcome = any(r.outcome is not None for r in records)
    header = ["id", "treated", *covariates] + (["outcome"] if has_outcome else []) + ["match_group", "role"]
    n = 0
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=_delimiter_for(path, delimiter), lineterminator="\n")
        writer.writerow(header)
        for group, (base_id, partners) in enumerate(cohort.pairs, start=1):
            for role, rid in [("base", base_id)] + [("partner", p) for p in partners]:
                r = by_id[rid]
                row = [r.id, int(r.treated), *(repr(v) for v in r.covariates)]
                if has_outcome:
                    row.append("" if r.outcome is None else int(r.outcome))
                writer.writerow(row + [group, role])
                n += 1
    return n
