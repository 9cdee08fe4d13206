import json

import numpy as np
import pytest

from bmtk import corpus as cp
from bmtk.cli import build_parser, config_from_args, main
from bmtk.config import ExperimentConfig, worker_count
from bmtk.experiments import generate_corpus
from bmtk.fieldio import read_field
from bmtk.grid import Grid, to_spectral
from bmtk.morrey import BMParams, MorreyParams, WindowSet


class TestCorpus:
    def test_same_seed_bit_identical(self):
        g = Grid(2, 32)
        a = cp.build_corpus(g, 7, 3, kmax=8)
        b = cp.build_corpus(g, 7, 3, kmax=8)
        assert [e.label for e in a.entries] == [e.label for e in b.entries]
        for x, y in zip(a.entries, b.entries):
            assert x.field.tobytes() == y.field.tobytes()

    def test_different_seed_differs(self):
        g = Grid(2, 32)
        assert not np.array_equal(cp.build_corpus(g, 1, 1, 8).entries[0].field,
                                  cp.build_corpus(g, 2, 1, 8).entries[0].field)

    def test_zero_trials(self):
        c = cp.build_corpus(Grid(2, 32), 0, 0)
        assert len(c) == 0
        assert c.manifest["entries"] == [] and c.manifest["trials"] == 0
        json.dumps(c.manifest)

    def test_manifest_regeneration(self):
        c = cp.build_corpus(Grid(2, 32), 11, 2, kmax=10, slope=1.5)
        again = cp.corpus_from_manifest(json.loads(json.dumps(c.manifest)))
        for x, y in zip(c.entries, again.entries):
            assert x.field.tobytes() == y.field.tobytes()

    def test_spectral_slope(self):
        g = Grid(2, 128)
        f = cp.random_field(g, cp.trial_rng(3, 0), kmax=32, slope=2.0)
        norms = cp.shell_norms(g, f)
        scaled = [norms[j] * 4.0**j for j in (2, 3, 4)]
        assert max(scaled) / min(scaled) < 3.0

    def test_fields_are_dealiased_and_mean_free(self):
        g = Grid(2, 32)
        for e in cp.build_corpus(g, 0, 2, kmax=10).by_prefix("scalar"):
            assert abs(np.mean(e.field)) < 1e-14
            assert np.max(np.abs(to_spectral(g, e.field)[~g.dealias_mask])) < 1e-10

    def test_box_must_fit(self):
        with pytest.raises(ValueError):
            cp.random_field(Grid(2, 16), cp.trial_rng(0, 0), kmax=8)

    def test_written_corpus_round_trips(self, tmp_path):
        cfg = ExperimentConfig("corpus", Grid(2, 16), seed=4, trials=1, out=tmp_path)
        corp = generate_corpus(cfg)
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["config_hash"] == cfg.hash
        g, f = read_field(tmp_path / "fields" / "scalar_0")
        assert g == cfg.grid and f.tobytes() == corp.entries[0].field.tobytes()


class TestConfig:
    def test_round_trip_with_infinite_exponent(self):
        cfg = ExperimentConfig("norms", Grid(2, 32), BMParams(2.0, MorreyParams(float("inf"), 2.0), float("inf")),
                               WindowSet(3, 2), seed=5, options={"modes": 4})
        back = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert back.hash == cfg.hash

    def test_hash_ignores_output(self, tmp_path):
        a = ExperimentConfig("corpus", out=tmp_path / "a")
        b = ExperimentConfig("corpus", out=tmp_path / "b")
        assert a.hash == b.hash
        assert a.hash != ExperimentConfig("corpus", seed=1).hash

    def test_validation(self):
        with pytest.raises(ValueError, match="unknown command"):
            ExperimentConfig("bogus")
        with pytest.raises(ValueError):
            ExperimentConfig("corpus", seed=-1)
        with pytest.raises(ValueError):
            ExperimentConfig("corpus", trials=-2)

    def test_modes_clipped(self):
        assert ExperimentConfig("corpus", Grid(2, 16), options={"modes": 16}).modes == 5

    def test_worker_count(self, monkeypatch):
        monkeypatch.setenv("BMTK_THREADS", "3")
        assert worker_count() == 3
        monkeypatch.setenv("BMTK_THREADS", "zero")
        with pytest.raises(ValueError):
            worker_count()


def _run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr()


class TestCli:
    def test_parser_maps_flags(self):
        a = build_parser().parse_args(["verify", "--lemma", "3.4", "--N", "32", "--p", "inf", "--kmax", "3"])
        cfg = config_from_args(a)
        assert cfg.grid == Grid(2, 32) and cfg.bm.p == float("inf") and cfg.window.k_max == 3
        assert cfg.option("lemma") == "3.4"

    def test_norms_json(self, capsys):
        code, out = _run(capsys, "norms", "--grid", "16", "--trials", "1", "--json-only")
        rep = json.loads(out.out)
        assert code == 0 and rep["passed"] and rep["rows"]

    def test_norms_of_field_file(self, capsys, tmp_path):
        cfg = ExperimentConfig("corpus", Grid(2, 16), trials=1, out=tmp_path)
        generate_corpus(cfg)
        code, out = _run(capsys, "norms", "--field", str(tmp_path / "fields" / "velocity_0"), "--json-only")
        rep = json.loads(out.out)
        assert code == 0 and rep["config"]["grid"]["size"] == 16 and len(rep["rows"]) == 1

    def test_verify_is_deterministic(self, capsys, tmp_path):
        args = ["verify", "--lemma", "3.4", "--grid", "32", "--trials", "2", "--modes", "6", "--json-only"]
        c1, _ = _run(capsys, *args, "--out", str(tmp_path / "a"))
        c2, _ = _run(capsys, *args, "--out", str(tmp_path / "b"))
        assert c1 == c2 == 0
        assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()

    def test_unknown_lemma_exits_1(self, capsys):
        code, out = _run(capsys, "verify", "--lemma", "9.9", "--grid", "16")
        assert code == 1 and "known ids" in out.err

    def test_bad_exponent_exits_1(self, capsys):
        code, out = _run(capsys, "norms", "--grid", "16", "--q", "0")
        assert code == 1 and "q <= p" in out.err

    def test_usage_error_exits_1(self):
        with pytest.raises(SystemExit) as exc:
            main(["euler"])
        assert exc.value.code == 1

    def test_failed_check_exits_2(self, capsys):
        # a 10% composition tolerance is met, 1e-9 is not
        base = ["verify", "--lemma", "3.1", "--grid", "16", "--trials", "1", "--modes", "4", "--dt", "0.02"]
        assert _run(capsys, *base)[0] == 0
        cfg = config_from_args(build_parser().parse_args(base)).with_options(composition_tol=1e-9)
        from bmtk.experiments import run_experiment
        assert run_experiment(cfg)[0] == 2

    def test_euler_run_and_diagnose(self, capsys, tmp_path):
        run = tmp_path / "run"
        code, _ = _run(capsys, "euler", "run", "--grid", "32", "--T", "0.1", "--dt", "0.01", "--out", str(run))
        assert code == 0
        for name in ("manifest.json", "report.json", "iteration_report.json", "diagnostics.csv"):
            assert (run / name).exists()
        code, out = _run(capsys, "diagnose", str(run), "--json-only")
        rep = json.loads(out.out)
        assert code == 0 and rep["bkm_vs_steady_estimate"] == pytest.approx(1.0, rel=1e-10)

    def test_diagnose_refuses_mismatched_hash(self, capsys, tmp_path):
        run = tmp_path / "run"
        _run(capsys, "euler", "run", "--grid", "16", "--T", "0.05", "--dt", "0.01", "--out", str(run))
        rep = json.loads((run / "report.json").read_text())
        rep["config_hash"] = "0" * len(rep["config_hash"])
        (run / "report.json").write_text(json.dumps(rep))
        code, out = _run(capsys, "diagnose", str(run))
        assert code == 1 and "refusing" in out.err

    def test_diagnose_missing_directory(self, capsys, tmp_path):
        code, out = _run(capsys, "diagnose", str(tmp_path / "nope"))
        assert code == 1 and "missing" in out.err

    def test_mhd_iterate_run(self, capsys, tmp_path):
        code, out = _run(capsys, "mhd", "run", "--grid", "16", "--init", "random", "--binit", "random", "--modes", "2",
                         "--amplitude", "0.1", "--scheme", "iterate", "--T", "0.02", "--dt", "0.005", "--json-only",
                         "--out", str(tmp_path / "m"))
        rep = json.loads(out.out)
        assert code == 0 and rep["iteration"]["converged"]
        assert (tmp_path / "m" / "fields").is_dir()

    def test_file_init_needs_path(self, capsys):
        code, out = _run(capsys, "euler", "run", "--grid", "16", "--init", "file", "--T", "0.01", "--dt", "0.01")
        assert code == 1 and "--field" in out.err
