"""Canonical CSV reading and writing.

Schema: ``timestamp,irradiance,temperature,wind_speed,relative_humidity[,pv_power]``
with integer epoch-second timestamps and dot-decimal floats. Further numeric
columns (such as ``narx_power``) are carried along as extra features. Floats
are written in shortest round-trip form, so write-then-read is exact.
"""

import csv
import math

import numpy as np

from .core import DEFAULT_STEP, FEATURES, TARGET, Dataset, DataError


class CsvError(DataError):
    """Malformed input; ``line`` is 1-based and counts the header."""

    def __init__(self, message, line=None, column=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.column = column


def _check_value(name, v):
    if not math.isfinite(v):
        return "non-finite value"
    if name == "irradiance" and v < 0:
        return "irradiance out of range"
    if name == "relative_humidity" and not 0 <= v <= 100:
        return "relative_humidity out of range"
    if name == TARGET and v < 0:
        return "pv_power out of range"
    return None


def parse_csv(path) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CsvError("empty file", line=1) from None
        if not header or header[0] != "timestamp":
            raise CsvError("first column must be 'timestamp'", line=1)
        missing = [c for c in FEATURES if c not in header]
        if missing:
            raise CsvError(f"missing column {missing[0]!r}", line=1)
        if len(set(header)) != len(header):
            raise CsvError("duplicate column name", line=1)
        value_cols = header[1:]
        extras = [c for c in value_cols if c not in FEATURES and c != TARGET]
        columns = tuple(FEATURES) + tuple(extras)
        ts, rows = [], []
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not f.strip() for f in raw):
                continue
            if len(raw) != len(header):
                raise CsvError(f"expected {len(header)} fields, found {len(raw)}", line=lineno)
            try:
                t = int(raw[0])
            except ValueError:
                raise CsvError(f"invalid integer {raw[0]!r}", line=lineno, column="timestamp") from None
            if ts and t <= ts[-1]:
                raise CsvError("timestamps must be strictly increasing", line=lineno, column="timestamp")
            vals = {}
            for name, field in zip(value_cols, raw[1:]):
                try:
                    v = float(field)
                except ValueError:
                    raise CsvError(f"invalid number {field!r}", line=lineno, column=name) from None
                problem = _check_value(name, v)
                if problem:
                    raise CsvError(problem, line=lineno, column=name)
                vals[name] = v
            ts.append(t)
            rows.append(vals)
    if not rows:
        raise CsvError("no data rows")
    step = ts[1] - ts[0] if len(ts) > 1 else DEFAULT_STEP
    for i in range(2, len(ts)):
        if ts[i] - ts[i - 1] != step:
            raise CsvError(f"irregular step: expected {step} s", line=i + 2, column="timestamp")
    X = np.array([[r[c] for c in columns] for r in rows], dtype=np.float64)
    y = np.array([r[TARGET] for r in rows], dtype=np.float64) if TARGET in value_cols else None
    return Dataset(np.array(ts, dtype=np.int64), X, y, int(step), columns)


def _fmt(v):
    return repr(float(v))


def write_csv(data: Dataset, path):
    header = ["timestamp", *data.columns] + ([TARGET] if data.has_target else [])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(len(data)):
            row = [str(int(data.timestamps[i]))] + [_fmt(v) for v in data.features[i]]
            if data.has_target:
                row.append(_fmt(data.pv_power[i]))
            w.writerow(row)


def write_table(path, header, rows):
    """Plain numeric table (predictions, rankings)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
