"""CSV / JSON result files with a provenance record."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from spraylab import __version__
from spraylab.errors import ConfigError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Provenance:
    config_hash: str
    seed: int
    task: str
    version: str = __version__

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def _clean(value: Any, precision: int) -> Any:
    """JSON-ready copy: floats rounded to ``precision`` digits, non-finite → null."""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.ndarray):
        return _clean(value.tolist(), precision)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        if not math.isfinite(value):
            return None
        return float(f"{value:.{precision}g}")
    if isinstance(value, (np.integer, np.bool_)):
        return value.item()
    if isinstance(value, dict):
        return {str(k): _clean(v, precision) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v, precision) for v in value]
    return value


def _prepare(path: Path) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create directory {path.parent}: {exc.strerror}", "output.path") from None


def save_json(path: str | Path, result: Any, provenance: Provenance, precision: int = 17) -> Path:
    path = Path(path)
    _prepare(path)
    document = {"provenance": provenance.to_dict(), "result": _clean(result, precision)}
    try:
        path.write_text(json.dumps(document, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc.strerror}", "output.path") from None
    log.info("wrote %s", path)
    return path


def save_csv(
    path: str | Path,
    header: Sequence[str],
    rows: Any,
    provenance: Provenance,
    precision: int = 17,
) -> Path:
    """``# key=value`` provenance lines, a header row, then one row per sample."""
    path = Path(path)
    _prepare(path)
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    try:
        with path.open("w", newline="", encoding="utf-8") as handle:
            for key, value in provenance.to_dict().items():
                handle.write(f"# {key}={value}\n")
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow(f"{v:.{precision}g}" for v in row)
    except OSError as exc:
        raise ConfigError(f"cannot write {path}: {exc.strerror}", "output.path") from None
    log.info("wrote %d rows to %s", len(rows), path)
    return path


def load_csv(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read back a file written by :func:`save_csv` (provenance lines skipped)."""
    with Path(path).open(encoding="utf-8") as handle:
        lines = [line for line in handle if not line.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    return header, np.array([[float(v) for v in row] for row in reader])


def status_path(artifact: str | Path) -> Path:
    return Path(artifact).with_suffix(".status.json")


def write_status(
    artifact: str | Path,
    status: str,
    exit_code: int,
    provenance: Provenance | None,
    message: str = "",
    field: str = "",
    extra: dict[str, Any] | None = None,
) -> Path:
    path = status_path(artifact)
    document: dict[str, Any] = {
        "status": status,
        "exit_code": exit_code,
        "message": message,
        "artifact": str(artifact),
    }
    if field:
        document["field"] = field
    if provenance is not None:
        document["provenance"] = provenance.to_dict()
    if extra:
        document.update(extra)
    _prepare(path)
    path.write_text(json.dumps(_clean(document, 17), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
