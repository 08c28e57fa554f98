"""Schema checks and rendering for every figure kind."""

import struct

import numpy as np
import pytest

from speechlevel_plots import (OutputExists, PlotJob, SchemaError,
                               read_attention_csv, read_feature_container,
                               render)
from speechlevel_plots.cli import main
from speechlevel_plots.render import accuracy_table, modspec_matrix
from speechlevel_plots.readers import read_report_json


class TestReaders:
    def test_attention_round_trip(self, golden_dir):
        table = read_attention_csv(golden_dir / "alpha.csv")
        assert len(table["alpha"]) == 12
        assert abs(table["alpha"].sum() - 1.0) < 1e-6
        assert np.allclose(table["mean_weight"], 1.0 / 12.0)

    def test_container_round_trip(self, golden_dir):
        values = read_feature_container(golden_dir / "utt.modspec.feat")
        assert values.shape == (5, 184)
        assert values.dtype == np.float32

    def test_container_bad_magic(self, tmp_path):
        bad = tmp_path / "bad.feat"
        bad.write_bytes(b"NOTAFORM".ljust(16, b"\0")
                        + struct.pack("<III", 1, 1, 1) + b"\0\0\0\0")
        with pytest.raises(SchemaError, match="magic"):
            read_feature_container(bad)

    def test_misnamed_column_is_named(self, golden_dir, tmp_path):
        text = (golden_dir / "alpha.csv").read_text()
        bad = tmp_path / "bad.csv"
        bad.write_text(text.replace("alpha", "aplha", 1))
        with pytest.raises(SchemaError, match="'aplha'"):
            read_attention_csv(bad)

    def test_non_numeric_cell_is_located(self, golden_dir, tmp_path):
        lines = (golden_dir / "alpha.csv").read_text().splitlines()
        parts = lines[3].split(",")
        parts[1] = "n/a"
        lines[3] = ",".join(parts)
        bad = tmp_path / "bad.csv"
        bad.write_text("\n".join(lines) + "\n")
        with pytest.raises(SchemaError, match="column 'alpha' row 4"):
            read_attention_csv(bad)

    def test_report_missing_key(self, golden_dir, tmp_path):
        doc = (golden_dir / "report-a.json").read_text()
        bad = tmp_path / "bad.json"
        bad.write_text(doc.replace('"accuracies"', '"accs"'))
        with pytest.raises(SchemaError, match="'accuracies'"):
            read_report_json(bad)


class TestHelpers:
    def test_modspec_matrix_shape(self, golden_dir):
        values = read_feature_container(golden_dir / "utt.modspec.feat")
        mat = modspec_matrix(values)
        assert mat.shape == (23, 8)
        assert np.allclose(mat.reshape(-1),
                           values.astype(np.float64).mean(axis=0))

    def test_modspec_matrix_rejects_wrong_width(self):
        with pytest.raises(SchemaError, match="184 columns"):
            modspec_matrix(np.zeros((4, 100)))

    def test_accuracy_table(self, golden_dir):
        docs = [read_report_json(golden_dir / n)
                for n in ("report-a.json", "report-b.json")]
        names, means, stds = accuracy_table(docs)
        assert names == ["cond-a", "cond-b"]
        assert means[0] == pytest.approx(0.9)
        assert means[0] > means[1]
        assert (stds >= 0).all()


class TestRender:
    @pytest.mark.parametrize("kind,inputs", [
        ("attention", ("alpha.csv",)),
        ("attention", ("alpha.csv", "wave.csv")),
        ("modspec", ("utt.modspec.feat",)),
        ("durations", ("features.csv",)),
        ("accuracy", ("report-a.json", "report-b.json")),
    ])
    def test_golden_inputs_render(self, golden_dir, tmp_path, kind, inputs):
        out = tmp_path / f"{kind}_{len(inputs)}.png"
        job = PlotJob(kind=kind,
                      inputs=tuple(golden_dir / name for name in inputs),
                      out=out)
        assert render(job) == out
        assert out.stat().st_size > 1000
        assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_render_is_deterministic(self, golden_dir, tmp_path):
        blobs = []
        for name in ("one.png", "two.png"):
            out = tmp_path / name
            render(PlotJob("attention", (golden_dir / "alpha.csv",), out))
            blobs.append(out.read_bytes())
        assert blobs[0] == blobs[1]

    def test_svg_output(self, golden_dir, tmp_path):
        out = tmp_path / "fig.svg"
        render(PlotJob("durations", (golden_dir / "features.csv",), out))
        assert out.read_text().lstrip().startswith("<?xml")

    def test_refuses_overwrite_without_force(self, golden_dir, tmp_path):
        out = tmp_path / "fig.png"
        job = PlotJob("modspec", (golden_dir / "utt.modspec.feat",), out)
        render(job)
        first = out.read_bytes()
        with pytest.raises(OutputExists):
            render(job)
        assert out.read_bytes() == first
        render(PlotJob(job.kind, job.inputs, out, force=True))

    def test_unknown_kind(self, golden_dir, tmp_path):
        with pytest.raises(SchemaError, match="unknown figure kind"):
            render(PlotJob("scatter", (golden_dir / "alpha.csv",),
                           tmp_path / "x.png"))

    def test_empty_csv_writes_nothing(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("frame_time_s,alpha,mean_weight\n")
        out = tmp_path / "fig.png"
        with pytest.raises(SchemaError, match="no data rows"):
            render(PlotJob("attention", (empty,), out))
        assert not out.exists()

    def test_inputs_never_modified(self, golden_dir, tmp_path):
        src = golden_dir / "features.csv"
        before = src.read_bytes()
        render(PlotJob("durations", (src,), tmp_path / "d.png"))
        assert src.read_bytes() == before


class TestCli:
    def test_renders_and_reports(self, golden_dir, tmp_path, capsys):
        out = tmp_path / "weights.png"
        code = main(["--kind", "attention", "--out", str(out),
                     str(golden_dir / "alpha.csv"),
                     str(golden_dir / "wave.csv")])
        assert code == 0
        assert out.exists()
        assert str(out) in capsys.readouterr().out

    def test_corrupted_column_fails_loudly(self, golden_dir, tmp_path,
                                           capsys):
        lines = (golden_dir / "features.csv").read_text().splitlines()
        lines[0] = lines[0].replace("duration_s", "length_s")
        bad = tmp_path / "bad.csv"
        bad.write_text("\n".join(lines) + "\n")
        out = tmp_path / "fig.png"
        code = main(["--kind", "durations", "--out", str(out), str(bad)])
        assert code == 1
        err = capsys.readouterr().err
        assert "length_s" in err and "duration_s" in err
        assert not out.exists()

    def test_existing_output_exit_code(self, golden_dir, tmp_path, capsys):
        out = tmp_path / "fig.png"
        argv = ["--kind", "modspec", "--out", str(out),
                str(golden_dir / "utt.modspec.feat")]
        assert main(argv) == 0
        assert main(argv) == 2
        assert "force" in capsys.readouterr().err
        assert main(argv + ["--force"]) == 0

    def test_wrong_input_count(self, golden_dir, tmp_path, capsys):
        code = main(["--kind", "modspec", "--out", str(tmp_path / "f.png"),
                     str(golden_dir / "utt.modspec.feat"),
                     str(golden_dir / "alpha.csv")])
        assert code == 1
        assert "input file" in capsys.readouterr().err
