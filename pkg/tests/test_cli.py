import json

import pytest

from floquet_fano.cli import (
    EXIT_CONFIG,
    EXIT_NO_CONVERGENCE,
    EXIT_REPRO_FAIL,
    _parse_grid,
    main,
)
from floquet_fano.errors import ConfigError

CANONICAL = """\
# canonical parameters, first-replica edge regime
eA = 1.25
eB = 1.30
gA = 0.05
gB = 0.05
omega = 2.3025
chi = 1.081978
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "model.cfg"
    path.write_text(CANONICAL)
    return str(path)


class TestParseGrid:
    def test_comma_list(self):
        assert _parse_grid("2.30,2.3025,2.304") == [2.30, 2.3025, 2.304]

    def test_range_spec(self):
        grid = _parse_grid("0.0:1.0:0.25")
        assert grid == pytest.approx([0.0, 0.25, 0.5, 0.75, 1.0])

    def test_bad_range(self):
        with pytest.raises(ConfigError):
            _parse_grid("0:1:0.25:9")
        with pytest.raises(ConfigError):
            _parse_grid("0:1:-0.1")


class TestValidate:
    def test_canonical_config(self, config_file, capsys):
        assert main(["validate", "--config", config_file]) == 0
        out = capsys.readouterr().out
        assert "chi = 1.081978" in out
        assert "replica n=+1: [1.3025, 3.3025]" in out
        assert "level B" in out and "outside all replicas" in out
        assert "distance 0.0025" in out

    def test_bad_config_exits_2(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text(CANONICAL + "mystery = 1\n")
        assert main(["validate", "--config", str(path)]) == EXIT_CONFIG
        assert "invalid config" in capsys.readouterr().err

    def test_strong_coupling_advisory(self, tmp_path, capsys):
        path = tmp_path / "strong.cfg"
        path.write_text(CANONICAL.replace("gA = 0.05", "gA = 0.5"))
        assert main(["validate", "--config", str(path)]) == 0
        assert "advisory" in capsys.readouterr().out


class TestPole:
    def test_default_variant_solves_b_pole(self, config_file, capsys):
        assert main(["pole", "--config", config_file]) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["variant"] == "ScalarB0Exact"
        assert record["gamma"] == pytest.approx(2.6346e-5, rel=0.02)
        assert record["re_z"] == pytest.approx(1.30308, abs=1e-4)
        assert record["sheetmap"]["1"] == "second"
        assert record["residual"] < 1e-12

    def test_purely_real_pole_is_flagged(self, tmp_path, capsys):
        path = tmp_path / "real.cfg"
        path.write_text(CANONICAL.replace("omega = 2.3025", "omega = 2.3040"))
        assert main(["pole", "--config", str(path)]) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["gamma"] < 1e-9
        assert record["note"] == "pole purely real within resolution"

    def test_output_files_and_manifest(self, config_file, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["pole", "--config", config_file, "--out", str(out),
                     "--quiet"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["outputs"] == ["pole.json"]
        assert (out / "pole.json").exists()
        assert manifest["truncation"]["N"] >= 1
        assert capsys.readouterr().out == ""

    def test_deterministic_output(self, config_file, tmp_path):
        paths = []
        for name in ("run1", "run2"):
            out = tmp_path / name
            main(["pole", "--config", config_file, "--out", str(out), "--quiet"])
            paths.append((out / "pole.json").read_bytes())
        assert paths[0] == paths[1]

    def test_explicit_variant_and_seed(self, config_file, capsys):
        assert main(["pole", "--config", config_file, "--variant", "DeterminantB",
                     "--seed-re", "1.303", "--seed-im=-2e-5"]) == 0
        record = json.loads(capsys.readouterr().out)
        assert record["variant"] == "DeterminantB"
        assert record["gamma"] == pytest.approx(2.8646e-5, rel=1e-3)

    def test_exhausted_iterations_exit_3(self, tmp_path, capsys):
        path = tmp_path / "stall.cfg"
        path.write_text(CANONICAL + "N = 3\nmax_iter = 1\n")
        assert main(["pole", "--config", str(path)]) == EXIT_NO_CONVERGENCE
        assert "no convergence" in capsys.readouterr().err


class TestEvolve:
    def test_short_run_writes_series(self, tmp_path, capsys):
        path = tmp_path / "short.cfg"
        path.write_text(CANONICAL + "M = 60\nw = 30\nt_max = 5.0\nstride = 100\n")
        out = tmp_path / "out"
        assert main(["evolve", "--config", str(path), "--out", str(out),
                     "--initial", "B"]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert set(manifest["outputs"]) == {"survival_B.csv", "survival_B.json"}
        header = (out / "survival_B.csv").read_bytes().split(b"\r\n")[0]
        assert header == b"t,p_survival,norm"
        meta = json.loads((out / "survival_B.json").read_text())
        assert meta["evolution"]["M"] == 60
        assert meta["initial"] == "B"
        assert "P_B(t_max)" in capsys.readouterr().out

    def test_bad_evolution_keys_exit_2(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text(CANONICAL + "M = 60\nw = 60\nt_max = 5.0\n")
        assert main(["evolve", "--config", str(path)]) == EXIT_CONFIG


class TestSweep:
    def test_grid_of_one_matches_pole(self, config_file, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["sweep", "--config", config_file, "--axis", "omega",
                     "--grid", "2.3025", "--out", str(out), "--quiet"]) == 0
        line = (out / "sweep.csv").read_bytes().decode().split("\r\n")[1]
        gamma_sweep = float(line.split(",")[2])

        main(["pole", "--config", config_file])
        record = json.loads(capsys.readouterr().out)
        assert gamma_sweep == pytest.approx(record["gamma"], rel=1e-9)

    def test_manifest_lists_csv(self, config_file, tmp_path):
        out = tmp_path / "out"
        main(["sweep", "--config", config_file, "--axis", "omega",
              "--grid", "2.3020,2.3040", "--out", str(out), "--quiet"])
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["outputs"] == ["sweep.csv"]
        rows = (out / "sweep.csv").read_bytes().decode().strip().split("\r\n")
        assert len(rows) == 3

    def test_deterministic_csv(self, config_file, tmp_path):
        blobs = []
        for name in ("s1", "s2"):
            out = tmp_path / name
            main(["sweep", "--config", config_file, "--axis", "chi",
                  "--grid", "0.9,1.1", "--out", str(out), "--quiet"])
            blobs.append((out / "sweep.csv").read_bytes())
        assert blobs[0] == blobs[1]


class TestRepro:
    def test_table_gammab(self, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["repro", "table-gammaB", "--out", str(out)]) == 0
        report = capsys.readouterr().out.strip().split("\n")
        assert len(report) == 5
        assert all(line.startswith("PASS") for line in report)
        rows = (out / "table_gammaB.csv").read_bytes().decode().strip().split("\r\n")
        assert len(rows) == 6
        manifest = json.loads((out / "manifest.json").read_text())
        assert "table_gammaB.csv" in manifest["outputs"]

    def test_repro_fail_exit_code(self, tmp_path, monkeypatch, capsys):
        # force a failing threshold by corrupting the expected table
        from floquet_fano import presets as p
        monkeypatch.setitem(p.GAMMA_B_TABLE, 2.3025, 1.0e-4)
        out = tmp_path / "out"
        assert main(["repro", "table-gammaB", "--out", str(out)]) == EXIT_REPRO_FAIL
        assert "FAIL" in capsys.readouterr().out
