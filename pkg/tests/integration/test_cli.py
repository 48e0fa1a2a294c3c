"""
Integration tests for the sparse-forge command line.
"""
import json
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from config import config
from exact_sets.serialization import scalar_from_json
import main
from main import EXIT_COUNTEREXAMPLE, EXIT_ERROR, EXIT_INTERRUPTED, EXIT_OK, EXIT_USAGE, build_parser, run_command
from reports.writers import read_interval_set, read_json

pytestmark = pytest.mark.integration


def run(output_dir, *argv):
    return run_command(["--output-dir", str(output_dir), "--log-level", "WARNING", *argv])


def last_json_line(capsys):
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


class TestBuild:
    """build writes set documents."""

    def test_rational_depth_six(self, output_dir, capsys):
        """E_6 of the fast construction has 64 components."""
        status = run(output_dir, "build", "--rule", "theorem-b", "--regime", "rational", "--depth", "6")
        assert status == EXIT_OK
        assert last_json_line(capsys)["components"] == 64
        document = read_json(output_dir / "sets" / "e6.json")
        assert document["rule"] == "theorem-b"
        assert document["depth"] == 6
        assert "run_config" in document
        assert len(read_interval_set(output_dir / "sets" / "e6.json")) == 64

    def test_explicit_out(self, output_dir):
        """--out overrides the default location."""
        target = output_dir / "custom.json"
        assert run(output_dir, "build", "--rule", "middle-thirds", "--depth", "3", "--out", str(target)) == EXIT_OK
        assert len(read_interval_set(target)) == 8

    def test_gap_encoded(self, output_dir, capsys):
        """Gap-encoded sets are built from --lengths."""
        status = run(output_dir, "build", "--rule", "gap-encoded", "--lengths", "1/2,1/6,1/24", "--block-depth", "2")
        assert status == EXIT_OK
        assert last_json_line(capsys)["components"] > 1

    def test_gap_encoded_needs_lengths(self, output_dir):
        """Missing lengths are a configuration error."""
        assert run(output_dir, "build", "--rule", "gap-encoded") == EXIT_ERROR


class TestUsage:
    """Argument errors and configuration errors."""

    @pytest.mark.parametrize("argv", [
        ["build", "--bogus"],
        [],
        ["verify"],
        ["dims", "--window", "5:2"],
        ["encode", "x-tuple", "--x", "one", "--y", "1"],
    ])
    def test_usage_errors(self, output_dir, argv):
        """Usage errors exit with 64."""
        assert run(output_dir, *argv) == EXIT_USAGE

    def test_subcommand_flag_sharing_global_prefix(self):
        """--m of verify null is not taken for a prefix of --max-pairs or --metrics."""
        args = build_parser().parse_args(["verify", "null", "--m", "3", "--k-range", "3:5"])
        assert args.m == 3
        assert args.k_range == (3, 5)
        assert args.max_pairs is None
        assert args.metrics is False

    def test_abbreviated_global_option_rejected(self, output_dir):
        """Long options must be spelled out."""
        assert run(output_dir, "--max", "10", "build", "--depth", "2") == EXIT_USAGE

    def test_invalid_regime(self, output_dir):
        """An unknown regime fails validation."""
        assert run(output_dir, "--regime", "polynomial", "build", "--depth", "2") == EXIT_ERROR

    def test_config_file(self, output_dir, tmp_path, capsys):
        """kmax from a configuration file sets the default depth."""
        path = tmp_path / "sparse_forge.conf"
        path.write_text("kmax = 3\nregime = tower\n")
        assert run(output_dir, "--config", str(path), "build") == EXIT_OK
        assert last_json_line(capsys)["components"] == 8
        assert read_json(output_dir / "sets" / "e3.json")["run_config"]["regime"] == "tower"


class TestVerify:
    """verify subcommands and their exit codes."""

    def test_scale_lemma(self, output_dir):
        """The fast construction passes at K = 6, k = 2."""
        assert run(output_dir, "verify", "scale-lemma", "--depth", "6", "--k", "2") == EXIT_OK
        report = read_json(output_dir / "reports" / "scale-lemma.json")
        assert report["passed"]
        assert report["results"][0]["k"] == 2

    def test_scale_lemma_middle_thirds(self, output_dir):
        """Geometric scales give exit code 2."""
        status = run(output_dir, "verify", "scale-lemma", "--rule", "middle-thirds", "--depth", "5", "--k", "1")
        assert status == EXIT_COUNTEREXAMPLE

    def test_containment_middle_thirds(self, output_dir):
        """Middle thirds violates POLY(2, 2)."""
        status = run(output_dir, "verify", "containment", "--rule", "middle-thirds", "--n", "2", "--corner", "poly:2")
        assert status == EXIT_COUNTEREXAMPLE
        report = read_json(output_dir / "reports" / "containment.json")
        assert report["violated"] > 0
        assert report["witnesses"]
        assert report["delta_choice"]["source"] == "fallback"

    def test_containment_rational(self, output_dir):
        """The fast construction passes with δ = r_1."""
        status = run(output_dir, "verify", "containment", "--depth", "5", "--corner", "poly:2", "--delta", "r:1")
        assert status == EXIT_OK
        report = read_json(output_dir / "reports" / "containment.json")
        assert report["violated"] == 0
        assert report["delta_choice"]["index"] == 1

    def test_fastness(self, output_dir):
        """The tower regime is ψ-fast, the rational regime is not."""
        assert run(output_dir, "verify", "fastness", "--regime", "tower", "--j", "1", "--k-max", "5") == EXIT_OK
        assert run(output_dir, "verify", "fastness", "--regime", "rational", "--j", "1",
                   "--k-max", "5") == EXIT_COUNTEREXAMPLE

    def test_null(self, output_dir):
        """Tower-regime null diagnostic for m = 1."""
        status = run(output_dir, "verify", "null", "--regime", "tower", "--m", "1", "--k-range", "3:6")
        assert status == EXIT_OK
        report = read_json(output_dir / "reports" / "null.json")
        assert report["unknown"] == 0
        assert [entry["k"] for entry in report["trace"]] == [3, 4, 5, 6]

    def test_null_height_three(self, output_dir):
        """--m 3 reaches the diagnostic and every index is decided."""
        status = run(output_dir, "verify", "null", "--regime", "tower", "--m", "3", "--k-range", "3:5")
        assert status == EXIT_OK
        report = read_json(output_dir / "reports" / "null.json")
        assert report["check"] == "null:m=3"
        assert report["unknown"] == 0

    def test_symmetries(self, output_dir):
        """The octagon reading covers the plane; the cube reading does not."""
        assert run(output_dir, "verify", "symmetries", "--n", "2") == EXIT_OK
        assert run(output_dir, "verify", "symmetries", "--n", "2", "--reading", "cube") == EXIT_COUNTEREXAMPLE


class TestDims:
    """Covering profiles from the command line."""

    def test_middle_thirds_window(self, output_dir):
        """Slope over 3^-2 .. 3^-8 with CSV outputs."""
        csv_path, plot_path = output_dir / "profile.csv", output_dir / "plot.csv"
        status = run(output_dir, "dims", "--rule", "middle-thirds", "--depth", "8", "--window", "2:8",
                     "--radii-from-regime", "--csv", str(csv_path), "--plot", str(plot_path))
        assert status == EXIT_OK
        report = read_json(output_dir / "reports" / "dims.json")
        assert abs(float(report["dimension"]["slope_decimal"]) - 0.6309) <= 0.02
        assert csv_path.read_text().startswith("r,N,method\n")
        assert plot_path.read_text().startswith("log_inv_r,log_N\n")
        first_row = plot_path.read_text().splitlines()[1].split(",")
        assert [float(value) for value in first_row] == pytest.approx([2 * 1.0986122887, 2 * 0.6931471806])

    def test_from_set_document(self, output_dir):
        """A built document keeps its rule, so regime radii work."""
        assert run(output_dir, "build", "--rule", "middle-thirds", "--depth", "6") == EXIT_OK
        status = run(output_dir, "dims", "--in", str(output_dir / "sets" / "e6.json"),
                     "--window", "1:6", "--radii-from-regime")
        assert status == EXIT_OK
        entries = read_json(output_dir / "reports" / "dims.json")["profile"]["entries"]
        assert [e["N"] for e in entries] == [2, 4, 8, 16, 32, 64]

    def test_explicit_radii_and_modulus(self, output_dir):
        """power:2 squares every radius and keeps the counts."""
        status = run(output_dir, "dims", "--rule", "middle-thirds", "--depth", "4",
                     "--radii", "1/3,1/9,1/27", "--modulus", "power:2")
        assert status == EXIT_OK
        entries = read_json(output_dir / "reports" / "dims.json")["profile"]["entries"]
        assert [scalar_from_json(e["r"]) for e in entries] == [
            scalar_from_json("1/9"), scalar_from_json("1/81"), scalar_from_json("1/729")
        ]
        assert {e["method"] for e in entries} == {"bound"}

    def test_needs_radii(self, output_dir):
        """Without radii the command fails."""
        assert run(output_dir, "dims", "--rule", "middle-thirds", "--depth", "4") == EXIT_ERROR


class TestEncodeAndTransform:
    """Encoding demos and gap transforms."""

    def test_x_tuple(self, output_dir):
        """(1, 1) at depth 8."""
        assert run(output_dir, "encode", "x-tuple", "--x", "1", "--y", "1", "--depth", "8") == EXIT_OK
        report = read_json(output_dir / "reports" / "x-tuple.json")
        assert report["values"] == ["1/1", "1/1", "2/1", "1/1", "0/1"]

    def test_factorial_demo(self, output_dir):
        """The factorial chain comes back from the gap lengths."""
        assert run(output_dir, "encode", "factorial-demo", "--n-max", "5") == EXIT_OK
        report = read_json(output_dir / "reports" / "factorial-demo.json")
        assert report["recovered"]
        assert report["nat_prefix"] == [0, 3, 4, 5]

    def test_pack_demo(self, output_dir):
        """No collisions for the fast construction."""
        assert run(output_dir, "encode", "pack-demo", "--depth", "4", "--samples", "100") == EXIT_OK
        assert read_json(output_dir / "reports" / "pack-demo.json")["collisions"] == 0

    def test_transform_round_trip(self, output_dir):
        """Gap data read back through reconstruct gives the set again."""
        assert run(output_dir, "build", "--rule", "middle-thirds", "--depth", "3") == EXIT_OK
        source = output_dir / "sets" / "e3.json"
        assert run(output_dir, "transform", "gap-lengths", "--in", str(source)) == EXIT_OK
        gaps_doc = output_dir / "sets" / "e3-gap-lengths.json"
        assert len(read_json(gaps_doc)["values"]) == 7
        assert run(output_dir, "transform", "reconstruct", "--in", str(gaps_doc)) == EXIT_OK
        rebuilt = read_interval_set(output_dir / "sets" / "e3-gap-lengths-reconstruct.json")
        assert rebuilt == read_interval_set(source)

    def test_reconstruct_needs_gaps(self, output_dir):
        """A plain set document has no gap data."""
        assert run(output_dir, "build", "--rule", "middle-thirds", "--depth", "2") == EXIT_OK
        assert run(output_dir, "transform", "reconstruct", "--in", str(output_dir / "sets" / "e2.json")) == EXIT_ERROR


class TestReport:
    """Summaries over report files."""

    def test_summary(self, output_dir):
        """One pass and one counterexample give exit code 2."""
        run(output_dir, "verify", "scale-lemma", "--depth", "4", "--k", "1")
        run(output_dir, "verify", "symmetries", "--n", "2", "--reading", "cube")
        assert run(output_dir, "report") == EXIT_COUNTEREXAMPLE
        summary = read_json(output_dir / "summary.json")
        assert summary["counts"]["passed"] == 1
        assert summary["counts"]["failed"] == 1

    def test_metrics(self, output_dir, tmp_path, monkeypatch):
        """--metrics appends a run record."""
        monkeypatch.setattr(config, "METRICS_DIR", str(tmp_path / "metrics"))
        assert run(output_dir, "--metrics", "build", "--depth", "2") == EXIT_OK
        lines = (tmp_path / "metrics" / "run_metrics.jsonl").read_text().splitlines()
        record = json.loads(lines[-1])
        assert record["command"] == "build"
        assert record["exit_code"] == 0
        assert record["counters"] == {"components": 4}


class TestEntryPoint:
    """Exit statuses of the process entry point."""

    def test_interrupt(self, mocker):
        """Ctrl-C exits with 130."""
        mocker.patch("main.run_command", side_effect=KeyboardInterrupt)
        with pytest.raises(SystemExit) as exc_info:
            main.main()
        assert exc_info.value.code == EXIT_INTERRUPTED

    def test_unexpected_failure(self, mocker):
        """Anything else exits with 1."""
        mocker.patch("main.run_command", side_effect=RuntimeError("boom"))
        with pytest.raises(SystemExit) as exc_info:
            main.main()
        assert exc_info.value.code == EXIT_ERROR

    def test_status_is_passed_through(self, mocker):
        """The subcommand status becomes the process status."""
        mocker.patch("main.run_command", return_value=EXIT_COUNTEREXAMPLE)
        with pytest.raises(SystemExit) as exc_info:
            main.main()
        assert exc_info.value.code == EXIT_COUNTEREXAMPLE
