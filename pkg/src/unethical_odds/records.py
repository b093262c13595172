"""CSV/JSON writers and the manifest that pins every run to its configuration.

Files are written with fixed column order, ``repr``-exact floats and sorted
JSON keys so identical runs produce byte-identical output.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import __version__
from .errors import DataError

__all__ = ["format_value", "write_csv", "write_json", "write_manifest", "read_returns_csv", "read_series_csv"]


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        return repr(v)
    return str(v)


def _jsonable(v):
    if isinstance(v, Mapping):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


def write_csv(path: Path, rows: Sequence[Mapping], columns: Sequence[str] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(c)) for c in columns])
    return path


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir: Path, command: str, parameters: Mapping, files: Iterable[Path]) -> Path:
    """Record the resolved configuration and a hash of every output file."""
    out_dir = Path(out_dir)
    entry = {
        "command": command,
        "parameters": dict(parameters),
        "software": {"unethical_odds": __version__, "numpy": np.__version__},
        "files": {Path(f).name: _sha256(f) for f in sorted(files, key=lambda p: Path(p).name)},
    }
    return write_json(out_dir / "manifest.json", entry)


def read_returns_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a ``return,label`` CSV; labels must be ``red`` or ``green``."""
    path = Path(path)
    returns, red = [], []
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        header = [h.strip().lower() for h in header]
        if "return" not in header or "label" not in header:
            raise DataError(f"{path}: header must contain 'return' and 'label' columns, got {header}")
        i_ret, i_lab = header.index("return"), header.index("label")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                value = float(row[i_ret])
            except (ValueError, IndexError):
                raise DataError(f"{path}:{lineno}: bad return value {row!r}") from None
            if not math.isfinite(value):
                raise DataError(f"{path}:{lineno}: return must be finite")
            try:
                label = row[i_lab].strip().lower()
            except IndexError:
                raise DataError(f"{path}:{lineno}: missing label") from None
            if label not in ("red", "green"):
                raise DataError(f"{path}:{lineno}: label must be 'red' or 'green', got {label!r}")
            returns.append(value)
            red.append(label == "red")
    return np.array(returns, dtype=float), np.array(red, dtype=bool)


def read_series_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read an ``s,value`` CSV describing a process on a regular grid."""
    path = Path(path)
    s, v = [], []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip().lower() for h in (next(reader, None) or [])]
        if "s" not in header or "value" not in header:
            raise DataError(f"{path}: header must contain 's' and 'value' columns")
        i_s, i_v = header.index("s"), header.index("value")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                s.append(float(row[i_s]))
                v.append(float(row[i_v]))
            except (ValueError, IndexError):
                raise DataError(f"{path}:{lineno}: bad row {row!r}") from None
    return np.array(s), np.array(v)
