"""
Metrics module for Sparse Forge.
Run and system metrics appended to JSONL files; never part of deterministic artifacts.
"""
import json
import logging
import os
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional

import psutil

from config import config

logger = logging.getLogger(__name__)


@dataclass
class SystemMetrics:
    """Host state at the end of a run."""
    timestamp: datetime
    cpu_percent: float
    memory_percent: float
    memory_used_mb: float
    process_rss_mb: float
    load_average: Optional[float] = None


@dataclass
class RunMetrics:
    """One CLI command."""
    timestamp: datetime
    command: str
    duration_seconds: float
    exit_code: int
    counters: Dict[str, int] = field(default_factory=dict)


class MetricsCollector:
    """Collects run and system metrics and summarizes them."""

    def __init__(self, metrics_dir: Optional[str] = None):
        self.metrics_dir = Path(metrics_dir or config.METRICS_DIR)
        self.metrics_dir.mkdir(parents=True, exist_ok=True)
        self.system_metrics_file = self.metrics_dir / "system_metrics.jsonl"
        self.run_metrics_file = self.metrics_dir / "run_metrics.jsonl"

    def collect_system_metrics(self) -> SystemMetrics:
        try:
            memory = psutil.virtual_memory()
            load_avg = os.getloadavg()[0] if hasattr(os, 'getloadavg') else None
            return SystemMetrics(
                timestamp=datetime.now(),
                cpu_percent=psutil.cpu_percent(interval=None),
                memory_percent=memory.percent,
                memory_used_mb=memory.used / (1024 * 1024),
                process_rss_mb=psutil.Process().memory_info().rss / (1024 * 1024),
                load_average=load_avg
            )
        except (psutil.Error, OSError) as e:
            logger.error(f"Failed to collect system metrics: {e}")
            return SystemMetrics(datetime.now(), 0.0, 0.0, 0.0, 0.0)

    def save_metrics(self, metrics: Any, filename: Path) -> None:
        """Append one record; failures are logged, never raised."""
        try:
            record = asdict(metrics)
            record['timestamp'] = record['timestamp'].isoformat()
            with open(filename, 'a', encoding='utf-8') as f:
                f.write(json.dumps(record, sort_keys=True) + '\n')
        except (OSError, TypeError) as e:
            logger.error(f"Failed to save metrics to {filename}: {e}")

    def load_metrics(self, filename: Path, hours: int = 24) -> List[Dict[str, Any]]:
        """Records from the last `hours` hours; malformed lines are skipped."""
        if not filename.exists():
            return []
        cutoff = datetime.now() - timedelta(hours=hours)
        records = []
        with open(filename, 'r', encoding='utf-8') as f:
            for line in f:
                try:
                    data = json.loads(line)
                    if datetime.fromisoformat(data['timestamp']) >= cutoff:
                        records.append(data)
                except (json.JSONDecodeError, KeyError, ValueError):
                    continue
        return records

    @contextmanager
    def track_run(self, command: str) -> Iterator[RunMetrics]:
        """Time a command; set `exit_code` and `counters` on the yielded record."""
        run = RunMetrics(timestamp=datetime.now(), command=command, duration_seconds=0.0, exit_code=1)
        start = time.perf_counter()
        try:
            yield run
        finally:
            run.duration_seconds = round(time.perf_counter() - start, 6)
            self.save_metrics(run, self.run_metrics_file)
            self.save_metrics(self.collect_system_metrics(), self.system_metrics_file)

    def generate_run_report(self, hours: int = 24) -> Dict[str, Any]:
        """Per-command counts, pass rates and mean durations."""
        runs = self.load_metrics(self.run_metrics_file, hours)
        if not runs:
            return {"error": "No run metrics available"}
        by_command: Dict[str, List[Dict[str, Any]]] = {}
        for run in runs:
            by_command.setdefault(run['command'], []).append(run)
        commands = {}
        for command, items in sorted(by_command.items()):
            passed = sum(1 for r in items if r['exit_code'] == 0)
            commands[command] = {
                "runs": len(items),
                "pass_rate_percent": round(100 * passed / len(items), 2),
                "average_seconds": round(sum(r['duration_seconds'] for r in items) / len(items), 3),
            }
        return {"period_hours": hours, "total_runs": len(runs), "commands": commands}
