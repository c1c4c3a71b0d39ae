"""Delimited output: CSV with a JSON metadata comment line, and JSON lines.

Reals are written with 17 significant digits and rationals as "num/den", so
every file parses back to exactly the values that produced it.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import tempfile
from datetime import datetime, timezone
from fractions import Fraction

HEIGHT_CONVENTION = "half-x-height"


def fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v) or math.isnan(v):
            return repr(v)
        return format(v, ".17g")
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return str(v)


def _json_value(v):
    if isinstance(v, Fraction):
        return fmt(v)
    if isinstance(v, float) and (math.isinf(v) or math.isnan(v)):
        return repr(v)
    if isinstance(v, float):
        # Round-trips through float() exactly.
        return float(format(v, ".17g"))
    return v


def content_hash(params: dict) -> str:
    blob = json.dumps(params, sort_keys=True, default=fmt).encode()
    return hashlib.sha1(b"blob %d\0" % len(blob) + blob).hexdigest()


def make_metadata(kind: str, params: dict, constants: dict | None = None, timestamp: bool = False) -> dict:
    meta = {
        "kind": kind,
        "params": {k: _json_value(v) for k, v in params.items()},
        "constants": {k: _json_value(v) for k, v in (constants or {}).items()},
        "height_convention": HEIGHT_CONVENTION,
        "input_hash": content_hash({"kind": kind, **params}),
    }
    if timestamp:
        meta["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return meta


def to_csv(columns, rows, metadata: dict | None = None) -> str:
    buf = io.StringIO()
    if metadata is not None:
        buf.write("# " + json.dumps(metadata, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def to_jsonl(columns, rows, metadata: dict | None = None) -> str:
    lines = []
    if metadata is not None:
        lines.append(json.dumps({"metadata": metadata}, sort_keys=True))
    for row in rows:
        lines.append(json.dumps({c: _json_value(v) for c, v in zip(columns, row)}))
    return "\n".join(lines) + "\n"


def parse_csv(text: str) -> tuple[dict, list[dict]]:
    meta = {}
    lines = text.splitlines()
    if lines and lines[0].startswith("# "):
        meta = json.loads(lines[0][2:])
        lines = lines[1:]
    return meta, list(csv.DictReader(lines))


def parse_jsonl(text: str) -> tuple[dict, list[dict]]:
    meta, records = {}, []
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if "metadata" in obj and len(obj) == 1:
            meta = obj["metadata"]
        else:
            records.append(obj)
    return meta, records


def parse_fraction(s) -> Fraction | None:
    if s in (None, ""):
        return None
    return Fraction(s)


def strip_timestamp(text: str) -> str:
    """Drop the generated_at field so two runs can be compared byte for byte."""
    out = []
    for line in text.splitlines(keepends=True):
        if '"generated_at"' in line:
            prefix = "# " if line.startswith("# ") else ""
            obj = json.loads(line[len(prefix):])
            target = obj.get("metadata", obj)
            target.pop("generated_at", None)
            line = prefix + json.dumps(obj, sort_keys=True) + "\n"
        out.append(line)
    return "".join(out)


def atomic_write(path: str | os.PathLike, data: str | bytes) -> None:
    """Write via a temp file in the same directory, then rename over path."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
