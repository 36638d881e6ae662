"""Command-line interface tests.

Every test drives ``qftir.cli.main`` in-process with an argv list: exit codes
come back as return values, output is captured with capsys, and monkeypatching
(e.g. the calibration iteration cap) works without subprocess plumbing.
"""
from __future__ import annotations

import json
import os

import numpy as np
import pytest

from qftir import (
    GasMixture,
    Spectrum,
    SpectrumKind,
    apply_response,
    beer_lambert_transmission,
)
from qftir import io as qio
from qftir.cli import main

from conftest import data_file

SPECIES3 = ",".join(data_file(n) for n in ("acetone.xsc", "methanol.xsc", "ethanol.xsc"))


def run(*argv: str) -> int:
    return main(list(argv))


def read_tree(root: str) -> dict[str, bytes]:
    """All files under root, keyed by relative path."""
    tree: dict[str, bytes] = {}
    for base, _, files in os.walk(root):
        for name in files:
            path = os.path.join(base, name)
            with open(path, "rb") as fh:
                tree[os.path.relpath(path, root)] = fh.read()
    return tree


class TestSimulate:
    def test_writes_scan_pairs_and_ground_truth(self, tmp_path, capsys):
        out = tmp_path / "run"
        code = run(
            "simulate",
            "--species-files", SPECIES3,
            "--mixture", "acetone=175,methanol=103",
            "--output-dir", str(out),
            "--scan-count", "2",
            "--scan-length-cm", "0.2",
            "--seed", "7",
        )
        assert code == 0
        for i in range(2):
            for role in ("sample", "background"):
                for part in ("signal", "fringe"):
                    assert (out / role / f"scan_{i:04d}_{part}.json").exists()
        truth = json.loads((out / "ground_truth.json").read_text())
        assert truth["mixture"] == {"acetone": 175.0, "methanol": 103.0}
        assert truth["seed"] == 7
        assert truth["scan_count"] == 2
        assert len(truth["config_digest"]) == 64
        assert "wrote 2 scan pairs" in capsys.readouterr().out

    def test_byte_identical_for_fixed_seed(self, tmp_path, monkeypatch):
        # same seed, same config -> identical bytes, even with noise enabled
        trees = []
        for name in ("a", "b"):
            cwd = tmp_path / name
            cwd.mkdir()
            monkeypatch.chdir(cwd)
            code = run(
                "simulate",
                "--species-files", data_file("acetone.xsc"),
                "--mixture", "acetone=50",
                "--output-dir", "out",
                "--scan-count", "1",
                "--scan-length-cm", "0.2",
                "--noise-std", "1e-3",
                "--seed", "3",
            )
            assert code == 0
            trees.append(read_tree("out"))
        assert trees[0] == trees[1]

    def test_seed_changes_noisy_scans(self, tmp_path, monkeypatch):
        scans = []
        for name, seed in (("a", "3"), ("b", "4")):
            cwd = tmp_path / name
            cwd.mkdir()
            monkeypatch.chdir(cwd)
            code = run(
                "simulate",
                "--species-files", data_file("acetone.xsc"),
                "--mixture", "acetone=50",
                "--output-dir", "out",
                "--scan-count", "1",
                "--scan-length-cm", "0.2",
                "--noise-std", "1e-3",
                "--seed", seed,
            )
            assert code == 0
            with open("out/sample/scan_0000_signal.json", "rb") as fh:
                scans.append(fh.read())
        assert scans[0] != scans[1]

    def test_zero_scan_count_is_config_error(self, tmp_path, capsys):
        out = tmp_path / "never"
        code = run(
            "simulate",
            "--species-files", data_file("acetone.xsc"),
            "--mixture", "acetone=5",
            "--output-dir", str(out),
            "--scan-count", "0",
        )
        assert code == 2
        assert "scan_count" in capsys.readouterr().err
        assert not out.exists()

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"bogus": 1}))
        code = run("simulate", "--config", str(cfg))
        assert code == 2
        assert "bogus" in capsys.readouterr().err

    def test_malformed_mixture_flag(self, capsys):
        code = run(
            "simulate",
            "--species-files", data_file("acetone.xsc"),
            "--mixture", "acetone",
        )
        assert code == 2
        assert "name=ppm" in capsys.readouterr().err

    def test_unknown_mixture_species(self, capsys):
        code = run(
            "simulate",
            "--species-files", data_file("acetone.xsc"),
            "--mixture", "xenon=5",
        )
        assert code == 2
        assert "xenon" in capsys.readouterr().err

    def test_output_dir_env_override(self, tmp_path, monkeypatch):
        target = tmp_path / "envout"
        monkeypatch.setenv("QFTIR_OUTPUT_DIR", str(target))
        code = run(
            "simulate",
            "--species-files", data_file("acetone.xsc"),
            "--mixture", "acetone=5",
            "--scan-count", "1",
            "--scan-length-cm", "0.2",
        )
        assert code == 0
        assert (target / "ground_truth.json").exists()

    def test_threads_env_must_be_positive(self, monkeypatch, capsys):
        monkeypatch.setenv("QFTIR_THREADS", "0")
        code = run(
            "simulate",
            "--species-files", data_file("acetone.xsc"),
            "--mixture", "acetone=5",
        )
        assert code == 2
        assert "QFTIR_THREADS" in capsys.readouterr().err


class TestAnalyze:
    def test_pure_acetone_end_to_end(self, tmp_path, capsys):
        # scan/reference dirs default to <output_dir>/{sample,background};
        # identical config flags -> identical digest on every output file
        out = tmp_path / "run"
        common = [
            "--species-files", SPECIES3,
            "--mixture", "acetone=150",
            "--output-dir", str(out),
            "--scan-count", "2",
        ]
        assert run("simulate", *common, "--seed", "1") == 0
        capsys.readouterr()
        assert run("analyze", *common) == 0

        txt = capsys.readouterr().out
        rows = {
            line.split()[0]: line
            for line in txt.splitlines()
            if line.split() and line.split()[0] in ("acetone", "methanol", "ethanol")
        }
        assert "PRESENT" in rows["acetone"]
        assert "ABSENT" in rows["methanol"]
        assert "ABSENT" in rows["ethanol"]

        # noiseless scans: back out the ground truth to 0.1%
        doc = json.loads((out / "result.json").read_text())
        assert set(doc["concentrations"]) == {"acetone", "methanol", "ethanol"}
        assert set(doc["detection_limits"]) == {"acetone", "methanol", "ethanol"}
        assert doc["concentrations"]["acetone"] == pytest.approx(150.0, rel=1e-3)
        assert abs(doc["concentrations"]["methanol"]) < 0.15
        assert abs(doc["concentrations"]["ethanol"]) < 0.15
        assert doc["noise_std"] >= 0.0
        assert doc["provenance"]["n_failed"] == {"sample": 0, "reference": 0}

        truth = json.loads((out / "ground_truth.json").read_text())
        assert doc["provenance"]["config_digest"] == truth["config_digest"]
        with open(out / "residual.csv") as fh:
            header = fh.readline()
        assert f"config={truth['config_digest']}" in header

    def test_empty_scan_dir_is_clean_error(self, tmp_path, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        code = run(
            "analyze",
            "--species-files", data_file("acetone.xsc"),
            "--output-dir", str(tmp_path / "o"),
            "--scan-dir", str(empty),
            "--reference-dir", str(empty),
        )
        assert code == 3
        err = capsys.readouterr().err
        assert err.startswith("data error:")
        assert "no *_signal.json" in err

    def test_missing_scan_dir(self, tmp_path, capsys):
        code = run(
            "analyze",
            "--species-files", data_file("acetone.xsc"),
            "--output-dir", str(tmp_path / "o"),
            "--scan-dir", str(tmp_path / "nowhere"),
            "--reference-dir", str(tmp_path / "nowhere"),
        )
        assert code == 3
        assert "scan directory not found" in capsys.readouterr().err

    def test_missing_fringe_file(self, tmp_path, capsys):
        out = tmp_path / "run"
        assert run(
            "simulate",
            "--species-files", data_file("acetone.xsc"),
            "--mixture", "acetone=150",
            "--output-dir", str(out),
            "--scan-count", "1",
            "--scan-length-cm", "0.2",
        ) == 0
        (out / "sample" / "scan_0000_fringe.json").unlink()
        code = run(
            "analyze",
            "--species-files", data_file("acetone.xsc"),
            "--output-dir", str(out),
        )
        assert code == 3
        assert "missing fringe" in capsys.readouterr().err


class TestCalibrate:
    TRUE_RES = 1.3

    @pytest.fixture()
    def methane_csv(self, tmp_path, methane):
        grid = methane.cross_section.grid
        mix = GasMixture((("methane", 80.0),))
        trans = beer_lambert_transmission(mix, {"methane": methane}, 135.0, grid)
        vals = -np.log(apply_response(trans, self.TRUE_RES).values)
        path = tmp_path / "methane_abs.csv"
        qio.write_spectrum_csv(Spectrum(grid, vals, SpectrumKind.ABSORBANCE), path)
        return str(path)

    def test_recovers_concentration_and_resolution(self, methane_csv, tmp_path, capsys):
        out = tmp_path / "cal"
        code = run(
            "calibrate", methane_csv,
            "--species-files", data_file("methane.xsc"),
            "--output-dir", str(out),
            "--initial-ppm", "40",
        )
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        printed = {line.split(":")[0]: line.split()[1] for line in lines if ":" in line}
        assert float(printed["resolution"]) == pytest.approx(self.TRUE_RES, rel=5e-3)
        assert float(printed["concentration"]) == pytest.approx(80.0, rel=5e-3)

        doc = json.loads((out / "calibration.json").read_text())
        assert doc["converged"] is True
        assert doc["species"] == "methane"
        assert doc["concentration_ppm"] == pytest.approx(80.0, rel=5e-3)
        assert doc["resolution_cm1"] == pytest.approx(self.TRUE_RES, rel=5e-3)
        assert doc["provenance"]["input"]["path"] == methane_csv

    def test_missing_species_file_names_path(self, methane_csv, tmp_path, capsys):
        bad = str(tmp_path / "nope.xsc")
        code = run("calibrate", methane_csv, "--species-files", bad)
        assert code == 2
        assert bad in capsys.readouterr().err

    def test_intensity_spectrum_rejected(self, tmp_path, capsys, methane):
        grid = methane.cross_section.grid
        path = tmp_path / "intensity.csv"
        qio.write_spectrum_csv(
            Spectrum(grid, np.ones(grid.count), SpectrumKind.INTENSITY), path
        )
        code = run(
            "calibrate", str(path),
            "--species-files", data_file("methane.xsc"),
            "--output-dir", str(tmp_path / "cal"),
        )
        assert code == 3
        assert "absorbance" in capsys.readouterr().err

    def test_no_convergence_exit_code(self, methane_csv, tmp_path, capsys, monkeypatch):
        monkeypatch.setattr("qftir.calibration._MAX_ITERATIONS", 2)
        out = tmp_path / "cal"
        code = run(
            "calibrate", methane_csv,
            "--species-files", data_file("methane.xsc"),
            "--output-dir", str(out),
        )
        assert code == 4
        assert "did not converge" in capsys.readouterr().err
        assert not (out / "calibration.json").exists()


class TestTrack:
    def test_decay_series_with_corrupt_step(self, tmp_path, capsys):
        series = tmp_path / "series"
        sp = data_file("acetone.xsc")
        for stamp, ppm in (("0", 150.0), ("300", 90.0), ("600", 50.0)):
            assert run(
                "simulate",
                "--species-files", sp,
                "--mixture", f"acetone={ppm}",
                "--output-dir", str(series / stamp),
                "--scan-count", "2",
                "--scan-length-cm", "0.4",
                "--seed", "11",
            ) == 0
        (series / "600" / "sample" / "scan_0000_signal.json").write_text("{not json")
        capsys.readouterr()

        out = tmp_path / "trackout"
        code = run(
            "track", str(series),
            "--species-files", sp,
            "--scan-length-cm", "0.4",
            "--output-dir", str(out),
        )
        assert code == 0
        assert "tracked 3 steps (1 failed)" in capsys.readouterr().out

        lines = (out / "track.csv").read_text().splitlines()
        assert lines[0].startswith("# qftir-track v1 config=")
        assert lines[1] == "timestamp,species,concentration_ppm,detection_limit_ppm,snr,error"
        data = lines[2:]
        good = [line for line in data if line.split(",")[1] == "acetone"]
        bad = [line for line in data if line.split(",")[1] == ""]
        assert len(good) == 2 and len(bad) == 1

        c0 = float(good[0].split(",")[2])
        c300 = float(good[1].split(",")[2])
        assert c0 == pytest.approx(150.0, rel=5e-3)
        assert c300 == pytest.approx(90.0, rel=5e-3)
        assert c0 > c300
        assert bad[0].startswith("600.0,")
        assert "ParseError" in bad[0]

    def test_missing_series_dir(self, tmp_path, capsys):
        code = run(
            "track", str(tmp_path / "nowhere"),
            "--species-files", data_file("methane.xsc"),
        )
        assert code == 3
        assert "series directory not found" in capsys.readouterr().err

    def test_non_numeric_step_rejected(self, tmp_path, capsys):
        series = tmp_path / "series"
        (series / "first").mkdir(parents=True)
        code = run(
            "track", str(series),
            "--species-files", data_file("methane.xsc"),
        )
        assert code == 3
        assert "not a numeric timestamp" in capsys.readouterr().err
