"""
Unit tests for run metrics and logging configuration.
"""
import json
import logging
import os
import sys
from datetime import datetime, timedelta
from unittest.mock import Mock, patch

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from monitoring.metrics import MetricsCollector, RunMetrics, SystemMetrics
from utils.logging_config import JSONFormatter, StructuredFormatter, setup_logging

pytestmark = pytest.mark.unit


@pytest.fixture
def collector(tmp_path):
    """Collector writing into a temporary metrics directory."""
    return MetricsCollector(str(tmp_path / "metrics"))


@pytest.fixture
def restore_root_logger():
    """Put the root logger back after setup_logging replaced its handlers."""
    root = logging.getLogger()
    handlers, level = list(root.handlers), root.level
    yield
    for handler in root.handlers:
        handler.close()
    root.handlers[:] = handlers
    root.setLevel(level)


class TestSystemMetrics:
    """Host metrics through psutil."""

    @patch('psutil.Process')
    @patch('psutil.cpu_percent')
    @patch('psutil.virtual_memory')
    @patch('os.getloadavg', create=True)
    def test_collect_system_metrics(self, mock_getloadavg, mock_memory, mock_cpu, mock_process, collector):
        """Values are read from psutil and converted to MiB."""
        mock_cpu.return_value = 25.0
        mock_memory.return_value = Mock(percent=60.0, used=512 * 1024 * 1024)
        mock_process.return_value.memory_info.return_value = Mock(rss=64 * 1024 * 1024)
        mock_getloadavg.return_value = (1.0, 1.5, 2.0)

        metrics = collector.collect_system_metrics()

        assert metrics.cpu_percent == 25.0
        assert metrics.memory_percent == 60.0
        assert metrics.memory_used_mb == 512.0
        assert metrics.process_rss_mb == 64.0
        assert metrics.load_average == 1.0

    @patch('psutil.virtual_memory')
    def test_collect_failure_returns_zeros(self, mock_memory, collector):
        """psutil errors are logged and give an empty record."""
        mock_memory.side_effect = OSError("no /proc")
        metrics = collector.collect_system_metrics()
        assert metrics.cpu_percent == 0.0
        assert metrics.process_rss_mb == 0.0


class TestRunMetrics:
    """Per-command run records."""

    @patch('psutil.Process')
    @patch('psutil.cpu_percent', return_value=5.0)
    @patch('psutil.virtual_memory')
    def test_track_run(self, mock_memory, mock_cpu, mock_process, collector):
        """The yielded record is saved with its duration and exit code."""
        mock_memory.return_value = Mock(percent=10.0, used=1024 * 1024)
        mock_process.return_value.memory_info.return_value = Mock(rss=1024 * 1024)

        with collector.track_run("verify scale-lemma") as run:
            run.exit_code = 0
            run.counters = {"checked": 12}

        records = collector.load_metrics(collector.run_metrics_file)
        assert len(records) == 1
        assert records[0]["command"] == "verify scale-lemma"
        assert records[0]["exit_code"] == 0
        assert records[0]["counters"] == {"checked": 12}
        assert records[0]["duration_seconds"] >= 0
        assert len(collector.load_metrics(collector.system_metrics_file)) == 1

    @patch.object(MetricsCollector, 'collect_system_metrics')
    def test_track_run_records_failures(self, mock_collect, collector):
        """An exception inside the block still leaves a record with exit code 1."""
        mock_collect.return_value = SystemMetrics(datetime.now(), 0.0, 0.0, 0.0, 0.0)
        with pytest.raises(RuntimeError):
            with collector.track_run("build"):
                raise RuntimeError("boom")
        records = collector.load_metrics(collector.run_metrics_file)
        assert records[0]["exit_code"] == 1

    def test_load_metrics_filters_old_and_malformed(self, collector):
        """Records older than the window and broken lines are skipped."""
        old = RunMetrics(datetime.now() - timedelta(hours=48), "build", 1.0, 0)
        new = RunMetrics(datetime.now(), "dims", 2.0, 0)
        collector.save_metrics(old, collector.run_metrics_file)
        collector.save_metrics(new, collector.run_metrics_file)
        with open(collector.run_metrics_file, 'a', encoding='utf-8') as f:
            f.write("not json\n")
        records = collector.load_metrics(collector.run_metrics_file, hours=24)
        assert [r["command"] for r in records] == ["dims"]

    def test_load_missing_file(self, collector):
        """No file means no records."""
        assert collector.load_metrics(collector.metrics_dir / "absent.jsonl") == []

    def test_generate_run_report(self, collector):
        """Per-command counts, pass rates and mean durations."""
        now = datetime.now()
        for exit_code, seconds in ((0, 1.0), (2, 3.0)):
            collector.save_metrics(RunMetrics(now, "verify containment", seconds, exit_code), collector.run_metrics_file)
        collector.save_metrics(RunMetrics(now, "build", 0.5, 0), collector.run_metrics_file)

        report = collector.generate_run_report(hours=1)

        assert report["total_runs"] == 3
        assert report["commands"]["verify containment"] == {
            "runs": 2, "pass_rate_percent": 50.0, "average_seconds": 2.0
        }
        assert report["commands"]["build"]["pass_rate_percent"] == 100.0

    def test_generate_run_report_empty(self, collector):
        """An empty history is reported, not raised."""
        assert collector.generate_run_report() == {"error": "No run metrics available"}


class TestLogging:
    """Formatters and handler setup."""

    def _record(self, message="hello", **kwargs):
        record = logging.LogRecord("sparse_forge.test", logging.INFO, __file__, 10, message, None, None)
        for key, value in kwargs.items():
            setattr(record, key, value)
        return record

    def test_json_formatter(self):
        """One JSON object per record, extra fields merged."""
        data = json.loads(JSONFormatter().format(self._record(extra_fields={"k": 3})))
        assert data["message"] == "hello"
        assert data["level"] == "INFO"
        assert data["logger"] == "sparse_forge.test"
        assert data["k"] == 3

    def test_structured_formatter(self):
        """Single line with level, logger and message."""
        line = StructuredFormatter().format(self._record())
        assert "INFO" in line
        assert "sparse_forge.test:10 - hello" in line

    def test_console_only_by_default(self, restore_root_logger):
        """Without a log file only the stderr handler is installed."""
        root = setup_logging(log_level="DEBUG", log_file=None)
        assert root.level == logging.DEBUG
        assert len(root.handlers) == 1
        assert root.handlers[0].stream is sys.stderr

    def test_file_handlers(self, tmp_path, restore_root_logger):
        """A log file adds the full log and the error log."""
        root = setup_logging(log_level="INFO", log_file="run.log", log_dir=str(tmp_path), use_json=True)
        logging.getLogger("sparse_forge.test").error("failed")
        for handler in root.handlers:
            handler.flush()
        assert len(root.handlers) == 3
        assert json.loads((tmp_path / "error.log").read_text().splitlines()[0])["message"] == "failed"
        assert (tmp_path / "run.log").exists()
