"""Atomic file output with a provenance header line."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Sequence


def atomic_write_text(path: str | os.PathLike, text: str) -> Path:
    """Write ``text`` to ``path`` via a temp file in the same directory plus rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def header_line(config: Mapping) -> str:
    """One comment line carrying the resolved config (JSON, sorted keys)."""
    return "# config: " + json.dumps(dict(config), sort_keys=True, default=str)


def csv_text(rows: Sequence[Mapping], columns: Sequence[str], config: Mapping | None = None) -> str:
    buf = io.StringIO()
    if config is not None:
        buf.write(header_line(config) + "\n")
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for row in rows:
        w.writerow({k: _fmt(row.get(k)) for k in columns})
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, bool):
        return int(v)
    return v


def read_csv(path: str | os.PathLike) -> tuple[dict | None, list[dict]]:
    """Inverse of ``csv_text``: (config or None, rows as str dicts)."""
    lines = Path(path).read_text().splitlines()
    config = None
    if lines and lines[0].startswith("# config: "):
        config = json.loads(lines[0][len("# config: "):])
        lines = lines[1:]
    return config, list(csv.DictReader(lines))


def write_csv(path, rows: Iterable[Mapping], columns: Sequence[str], config: Mapping | None = None) -> Path:
    return atomic_write_text(path, csv_text(list(rows), columns, config))


def write_json(path, obj, config: Mapping | None = None) -> Path:
    payload = dict(obj)
    if config is not None:
        payload = {"config": dict(config), **payload}
    return atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=False, default=float) + "\n")
