import hashlib
import json
import logging
import subprocess
import sys

import pytest

from compgen import load_index, read_outcomes, serialize_index
from compgen.cli import run_subcommand

SIM_SPEC = {
    "V": 30,
    "N": 800,
    "zipf_s": 1.1,
    "objects_per_sample": [1, 3],
    "seed": 7,
    "per_object_success": [-4.0, 1.5],
    "test_set": {"n": 150, "objects_per_sample": [2, 2], "distribution": "loguniform"},
    "embeddings": {"dim": 8, "noise": 0.9},
}


def run(argv, caplog=None):
    if caplog is not None:
        with caplog.at_level(logging.DEBUG, logger="compgen"):
            return run_subcommand([str(a) for a in argv])
    return run_subcommand([str(a) for a in argv])


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    """One simulated world shared by the CLI tests (read-only)."""
    root = tmp_path_factory.mktemp("cli_world")
    spec_path = root / "spec.json"
    spec_path.write_text(json.dumps(SIM_SPEC), encoding="utf-8")
    out = root / "sim"
    assert run(["simulate", "--spec", spec_path, "--out", out]) == 0
    return out


@pytest.fixture(scope="module")
def eval_dir(sim_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_eval")
    code = run(
        [
            "eval",
            "--curated", sim_dir / "curated.jsonl",
            "--queries", sim_dir / "queries.cgem",
            "--gallery", sim_dir / "gallery.cgem",
            "--out", out,
        ]
    )
    assert code == 0
    return out


class TestExitCodes:
    def test_no_arguments_usage(self, capsys):
        assert run([]) == 1
        assert "usage:" in capsys.readouterr().err

    def test_unknown_command(self, capsys):
        assert run(["frobnicate"]) == 1
        assert "error" in capsys.readouterr().err

    def test_unknown_flag(self, capsys):
        assert run(["ingest", "--frobnicate", "x"]) == 1

    def test_version_exits_zero(self, capsys):
        assert run(["--version"]) == 0
        assert capsys.readouterr().out.startswith("compgen ")

    def test_help_exits_zero(self, capsys):
        assert run(["--help"]) == 0
        assert run(["fit", "--help"]) == 0

    def test_missing_required_inputs_listed(self, caplog):
        assert run(["ingest"], caplog) == 1
        assert "missing required inputs: --corpus, --vocab" in caplog.text

    def test_missing_files_all_listed(self, caplog, tmp_path):
        a, b = tmp_path / "nope_a.jsonl", tmp_path / "nope_b.txt"
        assert run(["ingest", "--corpus", a, "--vocab", b], caplog) == 1
        assert "missing input files" in caplog.text
        assert str(a) in caplog.text and str(b) in caplog.text

    def test_curate_requires_vocab(self, sim_dir, caplog):
        code = run(
            [
                "curate",
                "--index", sim_dir / "index.cgix",
                "--manifest", sim_dir / "test_manifest.jsonl",
            ],
            caplog,
        )
        assert code == 1
        assert "missing required inputs: --vocab" in caplog.text

    def test_corrupt_index_is_input_error(self, tmp_path, sim_dir, caplog):
        bad = tmp_path / "bad.cgix"
        bad.write_bytes(b"NOPE" + bytes(20))
        assert run(["stats", "--index", bad, "--out", tmp_path], caplog) == 1
        assert "bad magic" in caplog.text

    def test_unexpected_exception_is_internal(self, monkeypatch, caplog):
        from compgen import cli

        def boom(args, config):
            raise RuntimeError("wires crossed")

        monkeypatch.setitem(cli._HANDLERS, "stats", boom)
        assert run(["stats"], caplog) == 2
        assert "internal error" in caplog.text

    def test_out_dir_collides_with_file(self, tmp_path, sim_dir, caplog):
        blocker = tmp_path / "blocked"
        blocker.write_text("file, not a directory", encoding="utf-8")
        code = run(
            ["stats", "--index", sim_dir / "index.cgix", "--out", blocker], caplog
        )
        assert code == 1


class TestConfigFile:
    def test_config_supplies_values(self, eval_dir, tmp_path, caplog):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps(
                {
                    "outcomes": str(eval_dir / "outcomes.csv"),
                    "bootstrap": 8,
                    "seed": 3,
                    "iqr.space": "linear",
                    "out": str(tmp_path / "out"),
                }
            ),
            encoding="utf-8",
        )
        assert run(["fit", "--config", cfg], caplog) == 0
        fit = json.loads((tmp_path / "out" / "fit.json").read_text(encoding="utf-8"))
        assert fit["B"] == 8 and fit["seed"] == 3
        manifest = json.loads(
            (tmp_path / "out" / "run_manifest.fit.json").read_text(encoding="utf-8")
        )
        assert manifest["config"]["iqr_space"] == "linear"
        assert manifest["config"]["bootstrap"] == 8

    def test_flag_overrides_config(self, eval_dir, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps({"outcomes": str(eval_dir / "outcomes.csv"), "seed": 3}),
            encoding="utf-8",
        )
        out = tmp_path / "out"
        code = run(["fit", "--config", cfg, "--seed", 5, "--bootstrap", 8, "--out", out])
        assert code == 0
        fit = json.loads((out / "fit.json").read_text(encoding="utf-8"))
        assert fit["seed"] == 5

    def test_unknown_config_key(self, tmp_path, caplog):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"bogus": 1, "alsobad": 2}), encoding="utf-8")
        assert run(["fit", "--config", cfg], caplog) == 1
        assert "unknown config keys: alsobad, bogus" in caplog.text

    def test_config_must_be_object(self, tmp_path, caplog):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("[1, 2]", encoding="utf-8")
        assert run(["fit", "--config", cfg], caplog) == 1
        assert "must be a JSON object" in caplog.text

    def test_config_invalid_json(self, tmp_path, caplog):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("{oops", encoding="utf-8")
        assert run(["fit", "--config", cfg], caplog) == 1
        assert "not valid JSON" in caplog.text

    def test_invalid_setting_rejected(self, eval_dir, tmp_path, caplog):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps({"outcomes": str(eval_dir / "outcomes.csv"), "ci.level": 1.5}),
            encoding="utf-8",
        )
        assert run(["fit", "--config", cfg, "--out", tmp_path / "out"], caplog) == 1
        assert "ci level" in caplog.text


class TestSimulate:
    def test_expected_files(self, sim_dir):
        names = {p.name for p in sim_dir.iterdir()}
        assert {
            "sim_spec.json",
            "vocab.txt",
            "corpus.jsonl",
            "index.cgix",
            "test_manifest.jsonl",
            "curated.jsonl",
            "summary.json",
            "outcomes.csv",
            "queries.cgem",
            "gallery.cgem",
            "run_manifest.simulate.json",
        } <= names

    def test_seed_flag_overrides_spec(self, tmp_path):
        spec = dict(SIM_SPEC, N=60)
        spec["test_set"] = dict(spec["test_set"], n=0)
        spec["embeddings"] = {"dim": 0, "noise": 0.1}
        p = tmp_path / "spec.json"
        p.write_text(json.dumps(spec), encoding="utf-8")
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert run(["simulate", "--spec", p, "--out", out_a, "--seed", 99]) == 0
        assert run(["simulate", "--spec", p, "--out", out_b]) == 0
        echoed = json.loads((out_a / "sim_spec.json").read_text(encoding="utf-8"))
        assert echoed["seed"] == 99
        assert (out_a / "corpus.jsonl").read_bytes() != (out_b / "corpus.jsonl").read_bytes()


class TestPipeline:
    def test_ingest_reproduces_simulated_index(self, sim_dir, tmp_path):
        out = tmp_path / "ing"
        code = run(
            [
                "ingest",
                "--corpus", sim_dir / "corpus.jsonl",
                "--vocab", sim_dir / "vocab.txt",
                "--out", out,
            ]
        )
        assert code == 0
        rebuilt = load_index(out / "index.cgix")
        original = load_index(sim_dir / "index.cgix")
        assert serialize_index(rebuilt) == serialize_index(original)
        stats = json.loads((out / "ingest_stats.json").read_text(encoding="utf-8"))
        assert stats["n_records"] == SIM_SPEC["N"]
        assert stats["n_parse_errors"] == 0

    def test_stats_frequency_table(self, sim_dir, tmp_path):
        out = tmp_path / "st"
        code = run(
            [
                "stats",
                "--index", sim_dir / "index.cgix",
                "--vocab", sim_dir / "vocab.txt",
                "--out", out,
            ]
        )
        assert code == 0
        lines = (out / "frequencies.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "concept_id,lemma,frequency"
        assert len(lines) == 1 + SIM_SPEC["V"]
        index = load_index(sim_dir / "index.cgix")
        row0 = lines[1].split(",")
        assert row0 == ["0", "c0000", str(index.frequency(0))]
        doc = json.loads((out / "stats.json").read_text(encoding="utf-8"))
        assert doc["n_samples"] == SIM_SPEC["N"]
        assert doc["vocab_size"] == SIM_SPEC["V"]

    def test_stats_vocab_size_mismatch(self, sim_dir, tmp_path, caplog):
        small = tmp_path / "small_vocab.txt"
        small.write_text("cat\ndog\n", encoding="utf-8")
        code = run(
            ["stats", "--index", sim_dir / "index.cgix", "--vocab", small, "--out", tmp_path],
            caplog,
        )
        assert code == 1
        assert "index expects" in caplog.text

    def test_curate_matches_simulated_labels(self, sim_dir, tmp_path):
        out = tmp_path / "cur"
        code = run(
            [
                "curate",
                "--index", sim_dir / "index.cgix",
                "--manifest", sim_dir / "test_manifest.jsonl",
                "--vocab", sim_dir / "vocab.txt",
                "--out", out,
            ]
        )
        assert code == 0
        assert (out / "curated.jsonl").read_bytes() == (sim_dir / "curated.jsonl").read_bytes()
        assert (out / "summary.json").read_bytes() == (sim_dir / "summary.json").read_bytes()
        summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
        assert summary["n_samples"] == SIM_SPEC["test_set"]["n"]
        assert abs(sum(summary["percentages"].values()) - 100.0) < 1e-9

    def test_eval_outputs(self, eval_dir):
        outcomes, ks = read_outcomes(eval_dir / "outcomes.csv")
        assert ks == (1, 5, 10)
        assert all(o.rank is not None and o.rank >= 1 for o in outcomes)
        summary = json.loads((eval_dir / "recall_summary.json").read_text(encoding="utf-8"))
        r = summary["all"]["recall"]
        assert r["1"] <= r["5"] <= r["10"]
        # mixed outcomes prove the noise knob leaves room for rank errors
        assert 0.0 < r["1"] < 1.0

    def test_eval_normalizes_with_warning(self, sim_dir, eval_dir, tmp_path, caplog):
        from compgen import EmbeddingMatrix, load_embeddings, save_embeddings

        scaled = tmp_path / "scaled.cgem"
        q = load_embeddings(sim_dir / "queries.cgem")
        save_embeddings(EmbeddingMatrix(q.data * 2.5), scaled)
        out = tmp_path / "ev"
        code = run(
            [
                "eval",
                "--curated", sim_dir / "curated.jsonl",
                "--queries", scaled,
                "--gallery", sim_dir / "gallery.cgem",
                "--out", out,
            ],
            caplog,
        )
        assert code == 0
        assert "not unit norm" in caplog.text
        outcomes, _ = read_outcomes(out / "outcomes.csv")
        reference, _ = read_outcomes(eval_dir / "outcomes.csv")
        assert outcomes == reference

    def test_eval_gallery_scope_curated(self, sim_dir, eval_dir, tmp_path):
        out = tmp_path / "ev_cur"
        code = run(
            [
                "eval",
                "--curated", sim_dir / "curated.jsonl",
                "--queries", sim_dir / "queries.cgem",
                "--gallery", sim_dir / "gallery.cgem",
                "--gallery-scope", "curated",
                "--out", out,
            ]
        )
        assert code == 0
        manifest = json.loads((out / "run_manifest.eval.json").read_text(encoding="utf-8"))
        assert manifest["config"]["gallery_scope"] == "curated"
        full, _ = read_outcomes(eval_dir / "outcomes.csv")
        cut, _ = read_outcomes(out / "outcomes.csv")
        by_id = {o.test_id: o for o in full}
        assert len(cut) == len(full)
        for o in cut:
            assert o.rank <= by_id[o.test_id].rank

    def test_eval_custom_ks(self, sim_dir, tmp_path):
        out = tmp_path / "ev_k"
        code = run(
            [
                "eval",
                "--curated", sim_dir / "curated.jsonl",
                "--queries", sim_dir / "queries.cgem",
                "--gallery", sim_dir / "gallery.cgem",
                "--k", "3,20",
                "--out", out,
            ]
        )
        assert code == 0
        _, ks = read_outcomes(out / "outcomes.csv")
        assert ks == (3, 20)

    def test_fit_outputs_and_determinism(self, sim_dir, tmp_path):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        argv = [
            "fit",
            "--outcomes", sim_dir / "outcomes.csv",
            "--bootstrap", 50,
            "--seed", 11,
        ]
        assert run(argv + ["--out", out_a]) == 0
        assert run(argv + ["--out", out_b]) == 0
        assert (out_a / "fit.json").read_bytes() == (out_b / "fit.json").read_bytes()
        assert (out_a / "bootstrap.csv").read_bytes() == (out_b / "bootstrap.csv").read_bytes()
        fit = json.loads((out_a / "fit.json").read_text(encoding="utf-8"))
        assert set(fit) == {
            "beta0", "beta1", "p_value", "ci", "ci_level",
            "n_used", "n_dropped_iqr", "B", "seed", "converged",
        }
        assert fit["B"] == 50
        # simulated outcomes follow the frequency model, so the slope shows
        assert fit["beta1"] > 0

    def test_fit_k_selection(self, eval_dir, tmp_path, caplog):
        base = ["fit", "--outcomes", eval_dir / "outcomes.csv", "--bootstrap", 10, "--seed", 1]
        out_default = tmp_path / "d"
        out_k10 = tmp_path / "k10"
        out_k1 = tmp_path / "k1"
        assert run(base + ["--out", out_default]) == 0
        assert run(base + ["--k", 10, "--out", out_k10]) == 0
        assert run(base + ["--k", 1, "--out", out_k1]) == 0
        d = (out_default / "fit.json").read_bytes()
        assert d == (out_k10 / "fit.json").read_bytes()
        assert d != (out_k1 / "fit.json").read_bytes()
        assert run(base + ["--k", 7, "--out", tmp_path / "k7"], caplog) == 1
        assert "k=7 not present" in caplog.text

    def test_report_files(self, sim_dir, tmp_path):
        fit_out = tmp_path / "fit"
        assert (
            run(
                [
                    "fit",
                    "--outcomes", sim_dir / "outcomes.csv",
                    "--bootstrap", 40,
                    "--out", fit_out,
                ]
            )
            == 0
        )
        rep = tmp_path / "rep"
        code = run(
            [
                "report",
                "--outcomes", sim_dir / "outcomes.csv",
                "--fit", fit_out / "fit.json",
                "--curated", sim_dir / "curated.jsonl",
                "--out", rep,
            ]
        )
        assert code == 0
        outcomes, _ = read_outcomes(sim_dir / "outcomes.csv")
        labels = sorted({o.label for o in outcomes})
        expected = {"histogram.csv", "binned_recall.csv", "curve.csv", "run_manifest.report.json"}
        expected |= {f"report_{lab}.svg" for lab in labels}
        assert expected <= {p.name for p in rep.iterdir()}

    def test_report_requires_bootstrap_next_to_fit(self, sim_dir, tmp_path, caplog):
        fit_out = tmp_path / "fit"
        assert (
            run(["fit", "--outcomes", sim_dir / "outcomes.csv", "--bootstrap", 10, "--out", fit_out])
            == 0
        )
        lonely = tmp_path / "lonely"
        lonely.mkdir()
        (lonely / "fit.json").write_bytes((fit_out / "fit.json").read_bytes())
        code = run(
            [
                "report",
                "--outcomes", sim_dir / "outcomes.csv",
                "--fit", lonely / "fit.json",
                "--out", tmp_path / "rep",
            ],
            caplog,
        )
        assert code == 1
        assert "bootstrap.csv" in caplog.text


class TestRunManifest:
    def test_digests_match_inputs(self, sim_dir, tmp_path):
        out = tmp_path / "st"
        assert run(["stats", "--index", sim_dir / "index.cgix", "--out", out]) == 0
        doc = json.loads((out / "run_manifest.stats.json").read_text(encoding="utf-8"))
        assert doc["command"] == "stats"
        index_path = str(sim_dir / "index.cgix")
        assert list(doc["inputs"]) == [index_path]
        digest = hashlib.sha256((sim_dir / "index.cgix").read_bytes()).hexdigest()
        assert doc["inputs"][index_path] == digest
        assert doc["config"]["seed"] == 0


class TestEntrypointProcess:
    def test_console_script_version(self):
        proc = subprocess.run(
            [sys.executable, "-m", "compgen", "--version"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert proc.stdout.strip().startswith("compgen ")

    def test_no_args_usage_exit_one(self):
        proc = subprocess.run(
            [sys.executable, "-m", "compgen"], capture_output=True, text=True
        )
        assert proc.returncode == 1
        assert "usage:" in proc.stderr

    def test_bad_log_level_warns(self):
        proc = subprocess.run(
            [sys.executable, "-m", "compgen", "--version"],
            capture_output=True,
            text=True,
            env={"PATH": "/usr/bin:/bin", "COMPGEN_LOG": "bogus"},
        )
        assert proc.returncode == 0
        assert "unknown COMPGEN_LOG" in proc.stderr

    def test_debug_log_level_accepted(self, tmp_path):
        spec = dict(SIM_SPEC, N=20)
        spec["test_set"] = dict(spec["test_set"], n=0)
        spec["embeddings"] = {"dim": 0, "noise": 0.1}
        p = tmp_path / "spec.json"
        p.write_text(json.dumps(spec), encoding="utf-8")
        proc = subprocess.run(
            [
                sys.executable, "-m", "compgen",
                "simulate", "--spec", str(p), "--out", str(tmp_path / "out"),
            ],
            capture_output=True,
            text=True,
            env={"PATH": "/usr/bin:/bin", "COMPGEN_LOG": "info"},
        )
        assert proc.returncode == 0
        assert "simulated corpus" in proc.stderr
