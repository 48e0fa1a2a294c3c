"""
Writers module for Sparse Forge.
Deterministic JSON and CSV artifacts, written atomically.
"""
import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union

from config import RunConfig
from errors import SerializationError
from exact_sets.intervals import IntervalSet
from exact_sets.serialization import interval_set_from_json, interval_set_to_json, scalar_to_json
from sparsity.dimension import PlotPoint
from sparsity.profiles import CoveringProfile

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Write through a temporary file in the target directory, then rename over the target."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(tmp_name, target)
    except BaseException:
        Path(tmp_name).unlink(missing_ok=True)
        raise
    logger.debug(f"wrote {target}")
    return target


def dumps_report(document: Mapping[str, Any]) -> str:
    return json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_report(path: PathLike, payload: Mapping[str, Any], run_config: Optional[RunConfig] = None) -> Path:
    """JSON report with sorted keys and the run configuration embedded under "run_config"."""
    document = dict(payload)
    if run_config is not None:
        document["run_config"] = run_config.to_dict()
    return atomic_write_text(path, dumps_report(document))


def write_interval_set(
    path: PathLike,
    a: IntervalSet,
    run_config: Optional[RunConfig] = None,
    **extra: Any
) -> Path:
    """Set document: {"interval_set": [[lo, hi], ...], "run_config": {...}, ...extra}."""
    return write_report(path, {"interval_set": interval_set_to_json(a), **extra}, run_config)


def read_json(path: PathLike) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding='utf-8'))
    except OSError as e:
        raise SerializationError(f"Cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise SerializationError(f"{path} is not valid JSON: {e}") from e


def read_interval_set(path: PathLike) -> IntervalSet:
    return interval_set_from_json(read_json(path))


def _csv_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _csv_cell(value: Any) -> str:
    encoded = scalar_to_json(value)
    return encoded if isinstance(encoded, str) else json.dumps(encoded, sort_keys=True)


def write_profile_csv(path: PathLike, profile: CoveringProfile) -> Path:
    """Columns r, N, method; exact radii."""
    rows = [(_csv_cell(e.r), e.n, e.method.value) for e in profile]
    return atomic_write_text(path, _csv_text(("r", "N", "method"), rows))


def write_plot_csv(path: PathLike, points: Sequence[PlotPoint]) -> Path:
    """Plot data only: columns log_inv_r, log_N."""
    header = ("log_inv_r", "log_N")
    rows = [tuple(row[column] for column in header) for row in (p.to_row() for p in points)]
    return atomic_write_text(path, _csv_text(header, rows))


def summarize_reports(paths: Sequence[PathLike]) -> Dict[str, Any]:
    """Aggregate report files into pass/fail counts keyed by file name.

    A report passes when its top-level "passed" is true; reports without
    the key are listed as informational.
    """
    entries: List[Dict[str, Any]] = []
    counts = {"passed": 0, "failed": 0, "informational": 0}
    for path in sorted(Path(p) for p in paths):
        document = read_json(path)
        if not isinstance(document, dict):
            raise SerializationError(f"{path} does not hold a report object")
        verdict = document.get("passed")
        status = "informational" if verdict is None else ("passed" if verdict else "failed")
        counts[status] += 1
        entries.append({"file": path.name, "status": status, "check": document.get("check")})
    logger.info(f"summarized {len(entries)} reports: {counts}")
    return {"reports": entries, "counts": counts, "passed": counts["failed"] == 0}
