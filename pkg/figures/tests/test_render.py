"""Rendering checks: determinism, schema guards, the paper-style analogues."""

import json
import shutil
from pathlib import Path

import pytest

from figures.render import render
from figures.spec import FigureSpec, SchemaError

DATA = Path(__file__).parent / "data"
SPECS = Path(__file__).parent.parent / "specs"


def render_spec(name, out):
    spec = FigureSpec.load(SPECS / name)
    return render(spec, out)


class TestRendering:
    def test_dynamics_from_weak_coupling_outputs(self, tmp_path):
        files = render_spec("dynamics.json", tmp_path)
        assert len(files) == 1
        assert files[0].suffix == ".svg"
        assert files[0].stat().st_size > 10_000

    def test_counterterm_figure(self, tmp_path):
        files = render_spec("counterterm.json", tmp_path)
        assert files[0].name == "counterterm.svg"

    def test_byte_stable_across_reruns(self, tmp_path):
        a = render_spec("dynamics.json", tmp_path / "a")[0].read_bytes()
        b = render_spec("dynamics.json", tmp_path / "b")[0].read_bytes()
        assert a == b
        c = render_spec("counterterm.json", tmp_path / "a")[0].read_bytes()
        d = render_spec("counterterm.json", tmp_path / "b")[0].read_bytes()
        assert c == d

    @pytest.mark.parametrize("spec_name", [
        "spectral.json", "fit.json", "adiabatic.json", "rwa_compare.json",
        "longtime.json"])
    def test_all_figure_kinds_render(self, tmp_path, spec_name):
        files = render_spec(spec_name, tmp_path)
        assert files[0].exists()


class TestGuards:
    def test_empty_input_set_errors_without_output(self, tmp_path):
        spec = FigureSpec(figure="dynamics", inputs=())
        with pytest.raises(SchemaError, match="no input files"):
            render(spec, tmp_path / "out")
        assert not (tmp_path / "out").exists()

    def test_missing_metadata_hash_refused(self, tmp_path):
        src = DATA / "criterion6"
        work = tmp_path / "in"
        work.mkdir()
        shutil.copy(src / "hops.csv", work / "hops.csv")
        meta = json.loads((src / "hops.meta.json").read_text())
        meta["config_hash"] = ""
        (work / "hops.meta.json").write_text(json.dumps(meta))
        spec = FigureSpec(figure="dynamics", inputs=(str(work / "hops.csv"),))
        with pytest.raises(SchemaError, match="config hash"):
            render(spec, tmp_path / "out")

    def test_missing_sidecar_refused(self, tmp_path):
        work = tmp_path / "in"
        work.mkdir()
        shutil.copy(DATA / "criterion6" / "hops.csv", work / "hops.csv")
        spec = FigureSpec(figure="dynamics", inputs=(str(work / "hops.csv"),))
        with pytest.raises(SchemaError, match="sidecar"):
            render(spec, tmp_path / "out")

    def test_missing_columns_refused(self, tmp_path):
        work = tmp_path / "in"
        work.mkdir()
        (work / "bad.csv").write_text("a,b\n1,2\n")
        (work / "bad.meta.json").write_text('{"config_hash": "x"}')
        spec = FigureSpec(figure="dynamics", inputs=(str(work / "bad.csv"),))
        with pytest.raises(SchemaError, match="missing columns"):
            render(spec, tmp_path / "out")

    def test_unknown_figure_kind(self):
        with pytest.raises(SchemaError, match="unknown figure kind"):
            FigureSpec(figure="piecharts", inputs=())


class TestCli:
    def test_render_subcommand(self, tmp_path):
        from figures.cli import main
        rc = main(["render", "--spec", str(SPECS / "dynamics.json"),
                   "--out", str(tmp_path)])
        assert rc == 0
        assert (tmp_path / "dynamics.svg").exists()

    def test_schema_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"figure": "dynamics", "inputs": []}))
        from figures.cli import main
        rc = main(["render", "--spec", str(bad), "--out", str(tmp_path)])
        assert rc == 1
