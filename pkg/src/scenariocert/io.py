"""CSV and JSON interchange files.

Every float is written with 17 significant digits, so a value survives a
write/read cycle bit for bit. Readers report the 1-based line number of the
first malformed row through :class:`CsvFormatError`.
"""
from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DomainError
from .mpc import Dataset, SampleRecord
from .qp import SOLVED
from .scenario import SampleValues, TradeoffPoint

DATASET_VALUE_COLUMN = "n_iters"
SAMPLE_COLUMNS = ("value", "n_iters", "phi")
TRACE_HEADER = ("sample_id", "k", "phi")
TRADEOFF_HEADER = ("control", "y_value", "q_star", "s_star", "epsilon",
                   "epsilon_lower", "empirical_violation")


class CsvFormatError(DomainError):
    """Malformed CSV input; ``line`` is the 1-based offending line."""

    def __init__(self, message, path=None, line=None):
        where = f"{path}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.path = path
        self.line = line


def format_float(x):
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == int(x) and abs(x) < 1e17:
        # integral doubles carry no fractional digits
        return str(int(x))
    return format(x, ".17g")


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return format_float(x)
    return str(x)


def _write_rows(target, header, rows):
    """Write to a path or to an open text stream."""
    if hasattr(target, "write"):
        writer = csv.writer(target, lineterminator="\n")
        writer.writerow(header)
        writer.writerows([_cell(v) for v in row] for row in rows)
        return
    with open(target, "w", newline="", encoding="utf-8") as fh:
        _write_rows(fh, header, rows)


def _read_rows(path):
    """Yield ``(line_number, header, row_dict)``; validates field counts."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError("empty file", path, 1) from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise CsvFormatError("duplicate column names", path, 1)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise CsvFormatError(
                    f"expected {len(header)} fields, found {len(row)}", path, line)
            yield line, header, dict(zip(header, (c.strip() for c in row)))


def _parse_float(text, column, path, line, allow_empty=False):
    if text == "" and allow_empty:
        return None
    try:
        return float(text)
    except ValueError:
        raise CsvFormatError(f"column {column!r}: not a number: {text!r}", path, line) from None


def _parse_int(text, column, path, line, allow_empty=False):
    if text == "" and allow_empty:
        return None
    try:
        value = float(text)
    except ValueError:
        value = math.nan
    if not math.isfinite(value) or value != int(value):
        raise CsvFormatError(f"column {column!r}: not an integer: {text!r}", path, line)
    return int(value)


def _sample_id(text):
    try:
        return int(text)
    except ValueError:
        return text


def _require(header, columns, path):
    missing = [c for c in columns if c not in header]
    if missing:
        raise CsvFormatError(f"missing columns {missing}", path, 1)


def write_samples_csv(path, samples, column="value"):
    _write_rows(path, ("sample_id", column),
                zip(samples.sample_ids, samples.values.tolist()))


def write_slack_csv(path, samples, solution):
    _write_rows(path, ("sample_id", "value", "xi"),
                zip(samples.sample_ids, samples.values.tolist(), solution.xi_star.tolist()))


def read_samples_csv(path, column=None):
    """Load a ``sample_id,<value>`` table as :class:`SampleValues`.

    ``column`` defaults to the first of ``value``, ``n_iters``, ``phi``
    present in the header, so a dataset file can be used directly.
    """
    ids, vals = [], []
    for line, header, row in _read_rows(path):
        if column is None:
            found = [c for c in SAMPLE_COLUMNS if c in header]
            if not found:
                raise CsvFormatError(f"no value column among {SAMPLE_COLUMNS}", path, 1)
            column = found[0]
        _require(header, ("sample_id", column), path)
        value = _parse_float(row[column], column, path, line)
        if not math.isfinite(value) or value < 0:
            raise CsvFormatError(f"column {column!r}: must be finite and nonnegative", path, line)
        ids.append(_sample_id(row["sample_id"]))
        vals.append(value)
    if not vals:
        raise CsvFormatError("no data rows", path, 2)
    if len(set(ids)) != len(ids):
        raise CsvFormatError("duplicate sample ids", path)
    return SampleValues(vals, ids)


def write_dataset_csv(path, dataset):
    nx = len(dataset.records[0].x0) if dataset.records else 2
    header = ("sample_id",) + tuple(f"x0_{i + 1}" for i in range(nx)) + (DATASET_VALUE_COLUMN,)
    _write_rows(path, header,
                ((r.sample_id, *r.x0, r.iterations) for r in dataset.records))


def read_dataset_csv(path, config_hash="", seed=0):
    records = []
    for line, header, row in _read_rows(path):
        xcols = sorted((c for c in header if c.startswith("x0_")), key=lambda c: int(c[3:]))
        _require(header, ("sample_id", DATASET_VALUE_COLUMN), path)
        if not xcols:
            raise CsvFormatError("no x0_* columns", path, 1)
        x0 = tuple(_parse_float(row[c], c, path, line) for c in xcols)
        records.append(SampleRecord(
            _parse_int(row["sample_id"], "sample_id", path, line), x0,
            _parse_int(row[DATASET_VALUE_COLUMN], DATASET_VALUE_COLUMN, path, line), SOLVED))
    if not records:
        raise CsvFormatError("no data rows", path, 2)
    return Dataset(tuple(records), config_hash, seed, candidates=records[-1].sample_id + 1)


def write_trace_csv(path, rows):
    _write_rows(path, TRACE_HEADER, ((sid, int(k), float(phi)) for sid, k, phi in rows))


def read_trace_csv(path):
    rows = []
    for line, header, row in _read_rows(path):
        _require(header, TRACE_HEADER, path)
        phi = _parse_float(row["phi"], "phi", path, line)
        if not math.isfinite(phi) or phi < 0:
            raise CsvFormatError("column 'phi': must be finite and nonnegative", path, line)
        rows.append((_sample_id(row["sample_id"]),
                     _parse_int(row["k"], "k", path, line), phi))
    if not rows:
        raise CsvFormatError("no data rows", path, 2)
    return rows


def trace_by_budget(rows):
    """Group trace rows into ``{k: SampleValues}`` keyed by iteration count."""
    grouped = {}
    for sid, k, phi in rows:
        ids, vals = grouped.setdefault(k, ([], []))
        ids.append(sid)
        vals.append(phi)
    return {k: SampleValues(v, i) for k, (i, v) in sorted(grouped.items())}


def write_tradeoff_csv(path, points):
    _write_rows(path, TRADEOFF_HEADER, (
        (float(p.control), float(p.y_value), int(p.q_star), p.s_star, float(p.epsilon),
         None if p.epsilon_lower is None else float(p.epsilon_lower),
         float(p.empirical_violation))
        for p in points))


def read_tradeoff_csv(path):
    points = []
    for line, header, row in _read_rows(path):
        _require(header, TRADEOFF_HEADER, path)
        points.append(TradeoffPoint(
            control=_parse_float(row["control"], "control", path, line),
            y_value=_parse_float(row["y_value"], "y_value", path, line),
            q_star=_parse_int(row["q_star"], "q_star", path, line),
            s_star=_parse_int(row["s_star"], "s_star", path, line, allow_empty=True),
            epsilon=_parse_float(row["epsilon"], "epsilon", path, line),
            epsilon_lower=_parse_float(row["epsilon_lower"], "epsilon_lower", path, line,
                                       allow_empty=True),
            empirical_violation=_parse_float(row["empirical_violation"],
                                             "empirical_violation", path, line),
        ))
    return points


def _json_value(obj):
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            # JSON has no infinities; emit them as strings
            return json.dumps(format_float(obj))
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(v)}"
                               for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_json_value(v) for v in obj) + "]"
    if hasattr(obj, "tolist"):
        return _json_value(obj.tolist())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj):
    """JSON text with floats at 17 significant digits."""
    return _json_value(obj)


def file_digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def now_utc():
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """Provenance written next to every output file as ``<out>.manifest.json``."""

    command: list
    config_digest: str = ""
    seed: object = None
    version: str = ""
    started: str = field(default_factory=now_utc)
    finished: str = ""

    def to_dict(self):
        return {"command": list(self.command), "config_digest": self.config_digest,
                "seed": self.seed, "version": self.version,
                "started": self.started, "finished": self.finished}

    def write_for(self, out_path):
        if not self.finished:
            self.finished = now_utc()
        target = Path(str(out_path) + ".manifest.json")
        target.write_text(dumps_json(self.to_dict()) + "\n", encoding="utf-8")
        return target
