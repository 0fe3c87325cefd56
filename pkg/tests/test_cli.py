import json

import numpy as np
import pytest

from specmap.cli import main
from specmap.fmap import load_pointmap


def _masked_trace(path):
    records = json.loads(path.read_text())
    for r in records:
        r["millis"] = 0.0
    return records


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    """A small synthetic pair written by the CLI itself."""
    d = tmp_path_factory.mktemp("synth")
    rc = main([
        "synth", "--kind", "perm", "--n", "162", "--seed", "3",
        "--out-prefix", str(d / "pair"),
    ])
    assert rc == 0
    return d


class TestSynth:
    def test_outputs_exist(self, synth_dir):
        for suffix in ("_source.off", "_target.off", "_gt.txt", "_gt_rev.txt"):
            assert (synth_dir / f"pair{suffix}").exists()

    def test_bend_kind(self, tmp_path):
        rc = main([
            "synth", "--kind", "bend", "--n", "162", "--seed", "1",
            "--bend", "0.4", "--out-prefix", str(tmp_path / "b"),
        ])
        assert rc == 0
        gt = load_pointmap(tmp_path / "b_gt.txt")
        assert np.array_equal(gt.targets, np.arange(162))


class TestBasis:
    def test_writes_cache(self, synth_dir, tmp_path):
        out = tmp_path / "src.basis"
        rc = main([
            "basis", "--mesh", str(synth_dir / "pair_source.off"),
            "--k", "12", "--out", str(out),
        ])
        assert rc == 0
        header = out.read_text().splitlines()[0]
        assert header == "162 12"


class TestZoomoutCommand:
    def _run(self, synth_dir, outdir, tag):
        args = [
            "zoomout",
            "--source", str(synth_dir / "pair_source.off"),
            "--target", str(synth_dir / "pair_target.off"),
            "--init-p2p", str(synth_dir / "pair_gt.txt"),
            "--k0", "4", "--kmax", "20", "--step", "1", "--probe", "10",
            "--seed", "0",
            "--out-p2p", str(outdir / f"{tag}.p2p"),
            "--out-fmap", str(outdir / f"{tag}.fmap"),
            "--trace", str(outdir / f"{tag}.trace.json"),
        ]
        assert main(args) == 0

    def test_refines_and_writes(self, synth_dir, tmp_path):
        self._run(synth_dir, tmp_path, "a")
        pm = load_pointmap(tmp_path / "a.p2p")
        gt = load_pointmap(synth_dir / "pair_gt.txt")
        assert (pm.targets == gt.targets).mean() >= 0.99
        trace = json.loads((tmp_path / "a.trace.json").read_text())
        assert len(trace) == 17
        assert set(trace[0]) == {"kM", "kN", "energy", "millis"}

    def test_deterministic_outputs(self, synth_dir, tmp_path):
        self._run(synth_dir, tmp_path, "r1")
        self._run(synth_dir, tmp_path, "r2")
        assert (tmp_path / "r1.p2p").read_bytes() == (tmp_path / "r2.p2p").read_bytes()
        assert (tmp_path / "r1.fmap").read_bytes() == (tmp_path / "r2.fmap").read_bytes()
        assert _masked_trace(tmp_path / "r1.trace.json") == _masked_trace(
            tmp_path / "r2.trace.json"
        )

    def test_basis_cache_reuse(self, synth_dir, tmp_path):
        src_basis = tmp_path / "src.basis"
        tgt_basis = tmp_path / "tgt.basis"
        assert main(["basis", "--mesh", str(synth_dir / "pair_source.off"),
                     "--k", "20", "--out", str(src_basis)]) == 0
        assert main(["basis", "--mesh", str(synth_dir / "pair_target.off"),
                     "--k", "20", "--out", str(tgt_basis)]) == 0
        args = [
            "zoomout",
            "--source", str(synth_dir / "pair_source.off"),
            "--target", str(synth_dir / "pair_target.off"),
            "--basis-source", str(src_basis),
            "--basis-target", str(tgt_basis),
            "--init-p2p", str(synth_dir / "pair_gt.txt"),
            "--k0", "4", "--kmax", "20",
            "--out-p2p", str(tmp_path / "cached.p2p"),
        ]
        assert main(args) == 0
        pm = load_pointmap(tmp_path / "cached.p2p")
        gt = load_pointmap(synth_dir / "pair_gt.txt")
        assert (pm.targets == gt.targets).mean() >= 0.99


class TestConvertAndIcp:
    def test_convert_p2p_to_fmap_and_back(self, synth_dir, tmp_path):
        fmap_path = tmp_path / "c.fmap"
        rc = main([
            "convert",
            "--source", str(synth_dir / "pair_source.off"),
            "--target", str(synth_dir / "pair_target.off"),
            "--init-p2p", str(synth_dir / "pair_gt.txt"),
            "--k", "15", "--out-fmap", str(fmap_path),
        ])
        assert rc == 0
        assert fmap_path.read_text().splitlines()[0] == "15 15"

        p2p_path = tmp_path / "c.p2p"
        rc = main([
            "convert",
            "--source", str(synth_dir / "pair_source.off"),
            "--target", str(synth_dir / "pair_target.off"),
            "--init-fmap", str(fmap_path),
            "--out-p2p", str(p2p_path),
        ])
        assert rc == 0
        pm = load_pointmap(p2p_path)
        gt = load_pointmap(synth_dir / "pair_gt.txt")
        assert (pm.targets == gt.targets).mean() >= 0.99

    def test_icp_command(self, synth_dir, tmp_path):
        rc = main([
            "icp",
            "--source", str(synth_dir / "pair_source.off"),
            "--target", str(synth_dir / "pair_target.off"),
            "--init-p2p", str(synth_dir / "pair_gt.txt"),
            "--k", "15", "--iters", "3",
            "--out-p2p", str(tmp_path / "icp.p2p"),
            "--trace", str(tmp_path / "icp.trace.json"),
        ])
        assert rc == 0
        trace = json.loads((tmp_path / "icp.trace.json").read_text())
        assert len(trace) == 3
        assert all(r["kM"] == 15 for r in trace)


class TestEval:
    def test_report_keys_and_echo(self, synth_dir, tmp_path):
        report_path = tmp_path / "report.json"
        rc = main([
            "eval",
            "--source", str(synth_dir / "pair_source.off"),
            "--target", str(synth_dir / "pair_target.off"),
            "--map", str(synth_dir / "pair_gt.txt"),
            "--map-reverse", str(synth_dir / "pair_gt_rev.txt"),
            "--gt", str(synth_dir / "pair_gt.txt"),
            "--report", str(report_path),
        ])
        assert rc == 0
        report = json.loads(report_path.read_text())
        for key in (
            "accuracy_mean", "uncoverage_percent", "bijectivity_mean",
            "edge_distortion_mean", "dirichlet",
        ):
            assert key in report
        assert report["accuracy_mean"] == 0.0
        assert report["version"]
        assert report["config"]["command"] == "eval"

    def test_normalizer_flag(self, synth_dir, tmp_path):
        report_path = tmp_path / "norm.json"
        rc = main([
            "eval",
            "--source", str(synth_dir / "pair_source.off"),
            "--target", str(synth_dir / "pair_target.off"),
            "--map", str(synth_dir / "pair_gt.txt"),
            "--normalizer", "2.0",
            "--report", str(report_path),
        ])
        assert rc == 0
        report = json.loads(report_path.read_text())
        assert report["config"]["normalizer"] == 2.0

    def test_optional_metrics_null(self, synth_dir, tmp_path):
        report_path = tmp_path / "partial.json"
        rc = main([
            "eval",
            "--source", str(synth_dir / "pair_source.off"),
            "--target", str(synth_dir / "pair_target.off"),
            "--map", str(synth_dir / "pair_gt.txt"),
            "--report", str(report_path),
        ])
        assert rc == 0
        report = json.loads(report_path.read_text())
        assert report["accuracy_mean"] is None
        assert report["bijectivity_mean"] is None


class TestExperimentCommand:
    def test_stability(self, tmp_path):
        report_path = tmp_path / "exp.json"
        rc = main([
            "experiment", "--name", "stability", "--n", "162", "--seed", "1",
            "--sigma", "0.2", "--trials", "2", "--k0", "4", "--kmax", "15",
            "--probe", "10", "--report", str(report_path),
        ])
        assert rc == 0
        report = json.loads(report_path.read_text())
        assert report["label"] == "stability"
        assert report["records"][-1]["trials"] == 2
        assert report["config"]["name"] == "stability"


class TestErrors:
    def test_missing_mesh_exit_2(self, tmp_path, capsys):
        rc = main([
            "basis", "--mesh", str(tmp_path / "ghost.off"),
            "--k", "4", "--out", str(tmp_path / "x"),
        ])
        assert rc == 2
        assert "ghost.off" in capsys.readouterr().err

    def test_unknown_flag_exit_2(self, capsys):
        assert main(["zoomout", "--frobnicate"]) == 2

    def test_computation_error_exit_1(self, synth_dir, tmp_path, capsys):
        rc = main([
            "basis", "--mesh", str(synth_dir / "pair_source.off"),
            "--k", "100000", "--out", str(tmp_path / "x"),
        ])
        assert rc == 1

    def test_version_flag(self, capsys):
        assert main(["--version"]) == 0
        assert "specmap" in capsys.readouterr().out
