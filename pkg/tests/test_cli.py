import json
import os
import subprocess
import sys

import numpy as np
import pytest

from orbicollapse.analysis.report import SWEEP_COLUMNS, manifest, sweep_csv, table_csv
from orbicollapse.analysis.sweep import SweepRecord
from orbicollapse.cli import main
from orbicollapse.cli.config import ConfigError, parse_config

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIGS = os.path.join(ROOT, "configs")


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return str(p)


def collapse_doc(**kw):
    doc = {"version": 1, "experiment": "collapse",
           "O1": {"kind": "torus", "side": 2 * np.pi, "h": 0.2},
           "O2": {"kind": "pillowcase", "side": 2 * np.pi, "h": 0.3, "grading": 0.5},
           "eps": [0.4, 0.2], "k": 4}
    doc.update(kw)
    return doc


def read_csv(path):
    lines = open(path).read().splitlines()
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


class TestConfig:
    def test_defaults(self):
        cfg = parse_config(json.dumps(collapse_doc()))
        assert cfg["k_boundary"] == 32 and cfg["seed"] == 0 and cfg["threads"] == 1

    def test_increasing_eps(self):
        with pytest.raises(ConfigError, match="eps"):
            parse_config(json.dumps(collapse_doc(eps=[0.1, 0.2])))

    def test_unknown_field(self):
        with pytest.raises(ConfigError):
            parse_config(json.dumps(collapse_doc(bogus=1)))

    def test_wrong_version(self):
        with pytest.raises(ConfigError, match="version"):
            parse_config(json.dumps(collapse_doc(version=2)))


class TestReport:
    def record(self):
        lam = np.array([0.0, 1.0])
        return SweepRecord(0.1, lam, lam + 0.01, np.full(2, 0.01), np.full(2, 1e-10), 100, 5, True,
                           0.0, {}, np.zeros(2))

    def test_sweep_columns(self):
        text = sweep_csv([self.record()])
        header, *rows = text.splitlines()
        assert tuple(header.split(",")) == SWEEP_COLUMNS
        assert len(rows) == 2
        assert rows[1].split(",")[0] == "0.1"
        assert float(rows[1].split(",")[4]) == pytest.approx(0.01)

    def test_table(self):
        assert table_csv(("a", "b"), [(1, True), (0.5, "x")]) == "a,b\n1,true\n5.000000000000e-01,x\n"

    def test_manifest_is_stable(self, coarse_torus):
        a = manifest({"k": 1}, {"O1": coarse_torus[0]}, {"c": np.bool_(True)})
        b = manifest({"k": 1}, {"O1": coarse_torus[0]}, {"c": True})
        assert a == b
        doc = json.loads(a)
        assert doc["meshes"]["O1"]["hash"] == coarse_torus[0].content_hash()
        assert doc["checks"]["c"] is True


class TestCommands:
    def test_validate(self, tmp_path, capsys):
        out = tmp_path / "v"
        code = main(["run", os.path.join(CONFIGS, "validate_torus.json"), "--out", str(out)])
        assert code == 0
        header, rows = read_csv(out / "results.csv")
        assert len(rows) == 10
        assert "eigenvalue" in header
        assert "status=ok" in capsys.readouterr().out
        assert all(json.load(open(out / "manifest.json"))["checks"].values())

    def test_increasing_eps_exit_2(self, tmp_path, capsys):
        code = main(["run", write(tmp_path, collapse_doc(eps=[0.1, 0.2])), "--out", str(tmp_path / "o")])
        assert code == 2
        err = capsys.readouterr().err
        assert err.startswith("status=config") and "eps" in err

    def test_malformed_json_exit_2(self, tmp_path, capsys):
        path = write(tmp_path, '{\n  "version": 1,\n  "k": ,\n}')
        assert main(["describe", path]) == 2
        assert "line 3" in capsys.readouterr().err

    def test_missing_file_exit_2(self, tmp_path, capsys):
        assert main(["describe", str(tmp_path / "absent.json")]) == 2

    def test_bad_threads(self, tmp_path):
        assert main(["run", write(tmp_path, collapse_doc()), "--threads", "0"]) == 2

    def test_numerical_exit_3(self, tmp_path, capsys):
        doc = collapse_doc(O1={"kind": "torus", "side": 2 * np.pi, "h": 10.0})
        assert main(["run", write(tmp_path, doc), "--out", str(tmp_path / "o")]) == 3
        assert capsys.readouterr().err.startswith("status=numerical")

    def test_describe(self, capsys):
        assert main(["describe", os.path.join(CONFIGS, "collapse_canonical.json")]) == 0
        text = capsys.readouterr().out
        assert "eps (4 values): 0.4, 0.2, 0.1, 0.05" in text
        assert "j <= 6" in text
        assert "assertions:" in text

    def test_collapse_outputs(self, tmp_path):
        out = tmp_path / "c"
        assert main(["run", write(tmp_path, collapse_doc()), "--out", str(out)]) == 0
        header, rows = read_csv(out / "results.csv")
        assert tuple(header) == SWEEP_COLUMNS
        assert len(rows) == 2 * 5
        svg = (out / "plot.svg").read_text()
        assert svg.count('class="series"') == 5
        doc = json.load(open(out / "manifest.json"))
        assert set(doc["meshes"]) >= {"O1", "O2"}

    def test_byte_identical_reruns(self, tmp_path):
        path = write(tmp_path, collapse_doc())
        for name, threads in (("a", "1"), ("b", "2")):
            assert main(["run", path, "--out", str(tmp_path / name), "--threads", threads]) == 0
        for f in ("results.csv", "plot.svg"):
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
        ma = json.load(open(tmp_path / "a" / "manifest.json"))
        mb = json.load(open(tmp_path / "b" / "manifest.json"))
        assert ma["checks"] == mb["checks"] and ma["meshes"] == mb["meshes"]

    def test_module_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "orbicollapse", "describe",
                              os.path.join(CONFIGS, "validate_torus.json")],
                             capture_output=True, text=True, check=False)
        assert res.returncode == 0
        assert "experiment: validate" in res.stdout
