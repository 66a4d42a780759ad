import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from affsphere.cli import main, parse_res, parse_window, resolve_config
from affsphere.errors import ConfigError
from affsphere.export import read_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def summary(out):
    return json.loads(out[out.index("{"):])


class TestParsing:
    @pytest.mark.parametrize("text", ["-1,1,-2,2", "[-1,1]x[-2,2]", "[-1, 1] x [-2, 2]"])
    def test_window_forms(self, text):
        assert parse_window(text) == ((-1, 1), (-2, 2))

    def test_square_window(self):
        assert parse_window("[-0.15,0.15]^2") == ((-0.15, 0.15), (-0.15, 0.15))
        assert parse_window([0, 1]) == ((0, 1), (0, 1))

    def test_bad_window(self):
        with pytest.raises(ConfigError):
            parse_window("a,b")

    def test_res(self):
        assert parse_res("80x60") == (80, 60)
        with pytest.raises(ConfigError):
            parse_res("80")

    def test_precedence(self, tmp_path):
        cfg_file = tmp_path / "c.json"
        cfg_file.write_text(json.dumps({"res": "10x12", "step": 0.01, "fixture": "excusp2"}))
        cfg = resolve_config(["surface", "--config", str(cfg_file), "--step", "0.002"])
        assert cfg.res == (10, 12)
        assert cfg.step == 0.002
        assert cfg.fixture == "excusp2"
        assert cfg.tol == 1e-10

    def test_unknown_config_key(self, tmp_path):
        cfg_file = tmp_path / "c.json"
        cfg_file.write_text(json.dumps({"fixture": "excusp1", "colour": "red"}))
        with pytest.raises(ConfigError):
            resolve_config(["surface", "--config", str(cfg_file)])


class TestErrors:
    @pytest.mark.parametrize("argv", [
        ["surface"],
        ["surface", "--fixture", "nope"],
        ["surface", "--fixture", "excusp1", "--res", "1x5"],
        ["surface", "--fixture", "excusp1", "--formats", "png"],
        ["singular", "--fixture", "excusp1", "--window", "0,3,0,1"],
        ["frobnicate"],
    ])
    def test_configuration_errors_exit_2(self, capsys, tmp_path, argv):
        code, out, err = run(capsys, *argv, *(["--out", str(tmp_path)] if len(argv) > 1 else []))
        assert code == 2
        payload = json.loads(err.strip().splitlines()[-1])
        assert payload["exit_code"] == 2 and payload["error"]

    def test_threads_env(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("AFFSPHERE_THREADS", "zero")
        code, _, err = run(capsys, "singular", "--fixture", "excusp1", "--out", str(tmp_path))
        assert code == 2 and "AFFSPHERE_THREADS" in err

    def test_threads_env_valid(self, capsys, tmp_path, monkeypatch):
        monkeypatch.setenv("AFFSPHERE_THREADS", "2")
        code, out, _ = run(capsys, "singular", "--fixture", "excusp1", "--out", str(tmp_path), "--formats", "json")
        assert code == 0 and summary(out)["summary"]["Swallowtail"] == 1


class TestSurface:
    def test_obj_csv_json(self, capsys, tmp_path):
        code, out, _ = run(capsys, "surface", "--fixture", "excusp1", "--res", "80x80", "--out", str(tmp_path),
                           "--formats", "obj,csv,json")
        assert code == 0
        s = summary(out)
        assert s["vertices"] == 6400
        assert s["validation"]["max_abs_L"] < 1e-9 and s["validation"]["max_xi_deviation"] < 1e-9
        obj = (tmp_path / "surface.obj").read_text().splitlines()
        assert sum(line.startswith("v ") for line in obj) == 6400
        assert sum(line.startswith("f ") for line in obj) == 2 * 79 * 79
        with (tmp_path / "surface.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["s", "t", "x", "y", "g", "omega"] and len(rows) == 6401
        sing = json.loads((tmp_path / "surface_singular_vertices.json").read_text())
        assert sing["vertex_indices"]
        data = json.loads((tmp_path / "surface.json").read_text())
        assert len(data["samples"]) == 6400

    def test_csv_round_trips_floats(self, capsys, tmp_path):
        run(capsys, "surface", "--fixture", "excusp2", "--res", "7x9", "--out", str(tmp_path), "--formats", "csv")
        grid = read_csv(tmp_path / "surface.csv")
        assert grid.shape == (7, 9)
        from affsphere.area import surface_grid
        from affsphere.fixtures import excusp2_pair, get_fixture
        (s0, s1), (t0, t1) = get_fixture("excusp2").local_window
        ref = surface_grid(excusp2_pair(), np.linspace(s0, s1, 7), np.linspace(t0, t1, 9), 1e-10)
        assert np.array_equal(grid.g, ref.g)

    def test_user_curves(self, capsys, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        a.write_text(json.dumps({"backend": "polynomial", "x_coeffs": [0, 1], "y_coeffs": [-1, 0, 1, 1], "domain": [-0.5, 0.5]}))
        b.write_text(json.dumps({"backend": "polynomial", "x_coeffs": [0, 1], "y_coeffs": [1, 0, -1, -1], "domain": [-0.5, 0.5]}))
        code, out, _ = run(capsys, "surface", "--alpha", str(a), "--beta", str(b), "--res", "5x5",
                           "--out", str(tmp_path), "--formats", "json")
        assert code == 0 and summary(out)["vertices"] == 25


class TestSingular:
    def test_excusp1(self, capsys, tmp_path):
        code, out, _ = run(capsys, "singular", "--fixture", "excusp1", "--out", str(tmp_path))
        assert code == 0
        s = summary(out)
        assert s["summary"]["Swallowtail"] == 1
        assert abs(s["swallowtails"][0]["s"]) < 1e-4
        svg = (tmp_path / "evolute.svg").read_text()
        assert svg.startswith("<svg") and "<circle" in svg
        rep = json.loads((tmp_path / "singular.json").read_text())
        assert rep["evolutes"][0]["cusps"]

    def test_excusp2_full(self, capsys, tmp_path):
        code, out, _ = run(capsys, "singular", "--fixture", "excusp2", "--window", "[-1.5,1.5]^2",
                           "--step", "0.003", "--out", str(tmp_path), "--formats", "json")
        s = summary(out)
        assert code == 0 and s["summary"]["Degenerate"] > 0 and s["summary"]["Swallowtail"] == 1

    def test_empty_window(self, capsys, tmp_path):
        code, out, _ = run(capsys, "singular", "--fixture", "excusp1", "--window", "0.1,0.1,0,0.2",
                           "--out", str(tmp_path), "--formats", "json")
        assert code == 0 and summary(out)["summary"] == {}


class TestSymmetry:
    def test_excusp1(self, capsys, tmp_path):
        code, out, _ = run(capsys, "symmetry", "--fixture", "excusp1", "--out", str(tmp_path))
        assert code == 0
        s = summary(out)
        assert s["aass_branches"] == 1 and s["aess_points"] > 100
        rep = json.loads((tmp_path / "symmetry.json").read_text())
        assert rep["aass"][0]["max_tangent_angle"] < 1e-2
        svg = (tmp_path / "symmetry.svg").read_text()
        assert svg.count("<polyline") >= 5

    def test_empty_window(self, capsys, tmp_path):
        code, out, _ = run(capsys, "symmetry", "--fixture", "excusp1", "--window", "0,0,0,0",
                           "--out", str(tmp_path))
        s = summary(out)
        assert code == 0 and s["aass_points"] == 0 and s["aess_points"] == 0


class TestRoundtrip:
    def test_forward(self, capsys, tmp_path):
        code, out, _ = run(capsys, "roundtrip", "--fixture", "excusp1", "--res", "30x30", "--out", str(tmp_path))
        assert code == 0 and summary(out)["max_deviation"] < 1e-8

    def test_published(self, capsys, tmp_path):
        code, out, _ = run(capsys, "roundtrip", "--fixture", "excusp2", "--published", "--res", "20x20",
                           "--window", "[-1,1]^2", "--out", str(tmp_path))
        assert code == 0
        rep = json.loads((tmp_path / "roundtrip.json").read_text())
        a = np.array(rep["alpha"])
        s = a[:, 0]
        assert np.allclose(a[:, 1:], np.column_stack([s ** 2 - s ** 3, s ** 2 + s ** 3]), atol=1e-12)

    def test_published_needs_excusp2(self, capsys, tmp_path):
        code, _, _ = run(capsys, "roundtrip", "--fixture", "excusp1", "--published", "--out", str(tmp_path))
        assert code == 2

    def test_from_csv(self, capsys, tmp_path):
        run(capsys, "surface", "--fixture", "excusp1", "--res", "30x30", "--out", str(tmp_path), "--formats", "csv")
        code, out, _ = run(capsys, "roundtrip", "--grid", str(tmp_path / "surface.csv"), "--out", str(tmp_path))
        assert code == 0 and summary(out)["cross_variation"] < 1e-6

    def test_shuffled_csv_is_rejected(self, capsys, tmp_path, rng):
        run(capsys, "surface", "--fixture", "excusp1", "--res", "12x12", "--out", str(tmp_path), "--formats", "csv")
        path = tmp_path / "surface.csv"
        rows = list(csv.reader(path.open()))
        g = [r[4] for r in rows[1:]]
        rng.shuffle(g)
        for r, v in zip(rows[1:], g):
            r[4] = v
        with path.open("w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
        code, _, err = run(capsys, "roundtrip", "--grid", str(path), "--out", str(tmp_path))
        assert code == 3 and json.loads(err)["error"] == "NotAsymptotic"


def test_outputs_are_byte_identical(capsys, tmp_path):
    blobs = []
    for k in range(2):
        d = tmp_path / str(k)
        run(capsys, "surface", "--fixture", "excusp1", "--res", "20x20", "--out", str(d))
        run(capsys, "singular", "--fixture", "excusp1", "--out", str(d))
        blobs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
    assert blobs[0] == blobs[1] and len(blobs[0]) >= 6


def test_selftest(capsys):
    code, out, _ = run(capsys, "selftest")
    lines = [line for line in out.splitlines() if line.startswith(("PASS", "FAIL"))]
    assert code == 0 and lines and all(line.startswith("PASS") for line in lines)


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "affsphere.cli", "roundtrip", "--fixture", "excusp2",
                           "--res", "10x10", "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["max_deviation"] < 1e-8
