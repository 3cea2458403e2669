"""Command-line pipeline: ingest, stats, curate, eval, fit, simulate, report.

Exit codes: 0 success, 1 bad input (including usage errors), 2 internal
failure.  Every flag mirrors a flat dotted key in the optional JSON
config file (--iqr-space <-> "iqr.space", --out <-> "out"); explicit
flags win over the file.  Each run writes a manifest with SHA-256
digests of its inputs next to its outputs.  COMPGEN_LOG selects the log
level (error, warn, info, debug).
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .curation import CuratedSample, CuratedTestSet, TestSample, curate, read_curated, read_manifest, write_curated, write_manifest, write_summary
from .embeddings import load_embeddings, normalize_rows, save_embeddings
from .errors import CompgenError, InputError, ManifestError
from .index import load_index, save_index
from .ingest import ingest_corpus, ingest_records, write_corpus
from .predictor import LogisticFit, fit_logistic, read_bootstrap, write_bootstrap, write_fit
from .report import emit_report
from .retrieval import evaluate, read_outcomes, recall_summary, remap_test_rows, restrict_gallery, write_outcomes
from .simulation import generate_corpus, generate_embeddings, generate_test_samples, load_spec, simulate_eval_outcomes, simulation_vocabulary, spec_to_dict
from .vocabulary import load_vocabulary, save_vocabulary

log = logging.getLogger("compgen")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

# flag dest -> config key; every flag is resolvable from the config file
_CONFIG_KEYS = {
    "config": None,  # the config file cannot point at itself
    "corpus": "corpus",
    "vocab": "vocab",
    "index": "index",
    "manifest": "manifest",
    "curated": "curated",
    "queries": "queries",
    "gallery": "gallery",
    "outcomes": "outcomes",
    "fit": "fit",
    "spec": "spec",
    "out": "out",
    "seed": "seed",
    "k": "k",
    "bootstrap": "bootstrap",
    "ci_level": "ci.level",
    "iqr_space": "iqr.space",
    "iqr_mult": "iqr.mult",
    "gallery_scope": "gallery.scope",
}

_DEFAULTS = {
    "out": ".",
    "seed": 0,
    "k": "1,5,10",
    "bootstrap": 1000,
    "ci_level": 0.95,
    "iqr_space": "log",
    "iqr_mult": 1.5,
    "gallery_scope": "full",
}


@dataclass
class RunConfig:
    """Resolved per-run settings, echoed into the run manifest."""

    paths: dict[str, str]
    ks: tuple[int, ...]
    iqr_space: str
    iqr_multiplier: float
    bootstrap: int
    seed: int
    ci_level: float
    gallery_scope: str

    def validate(self) -> None:
        if not self.ks or any(k < 1 for k in self.ks):
            raise InputError("k values must be integers >= 1")
        if self.iqr_multiplier <= 0:
            raise InputError("iqr multiplier must be positive")
        if self.bootstrap < 1:
            raise InputError("bootstrap count must be >= 1")
        if not 0.0 < self.ci_level < 1.0:
            raise InputError("ci level must be in (0, 1)")
        if self.iqr_space not in ("log", "linear"):
            raise InputError(f"unknown iqr space {self.iqr_space!r}")
        if self.gallery_scope not in ("full", "curated"):
            raise InputError(f"unknown gallery scope {self.gallery_scope!r}")

    def to_dict(self) -> dict:
        return {
            "paths": dict(sorted(self.paths.items())),
            "ks": list(self.ks),
            "iqr_space": self.iqr_space,
            "iqr_multiplier": self.iqr_multiplier,
            "bootstrap": self.bootstrap,
            "seed": self.seed,
            "ci_level": self.ci_level,
            "gallery_scope": self.gallery_scope,
        }


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage problems; the contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(self._input_exit(message))

    def _input_exit(self, message: str) -> int:
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        return EXIT_INPUT


def _build_parser() -> _Parser:
    parser = _Parser(prog="compgen", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"compgen {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name: str, help_text: str, flags: list[str]) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file with flat dotted keys")
        p.add_argument("--out", help="output directory (default: current directory)")
        for flag in flags:
            if flag == "--seed":
                p.add_argument(flag, type=int, help="random seed")
            elif flag == "--bootstrap":
                p.add_argument(flag, type=int, help="bootstrap replicate count")
            elif flag == "--ci-level":
                p.add_argument(flag, dest="ci_level", type=float, help="confidence level")
            elif flag == "--iqr-mult":
                p.add_argument(flag, dest="iqr_mult", type=float, help="IQR fence multiplier")
            elif flag == "--iqr-space":
                p.add_argument(flag, dest="iqr_space", choices=["log", "linear"])
            elif flag == "--gallery-scope":
                p.add_argument(flag, dest="gallery_scope", choices=["full", "curated"])
            elif flag == "--k":
                p.add_argument(flag, help="comma-separated recall cutoffs, e.g. 1,5,10")
            else:
                p.add_argument(flag)
        return p

    add("ingest", "build a concept index from a corpus", ["--corpus", "--vocab"])
    add("stats", "per-concept frequency table from an index", ["--index", "--vocab"])
    add("curate", "label test samples against an index", ["--index", "--manifest", "--vocab"])
    add("eval", "rank curated samples over embeddings", ["--curated", "--queries", "--gallery", "--k", "--gallery-scope"])
    add("fit", "fit success probability against frequency", ["--outcomes", "--seed", "--bootstrap", "--ci-level", "--iqr-space", "--iqr-mult", "--k"])
    add("simulate", "generate a synthetic corpus and outcomes", ["--spec", "--seed", "--k"])
    add("report", "emit figures and series for fitted outcomes", ["--outcomes", "--fit", "--curated", "--k"])
    return parser


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise InputError(f"config {path} must be a JSON object")
    known = {v for v in _CONFIG_KEYS.values() if v}
    unknown = sorted(set(obj) - known)
    if unknown:
        raise InputError(f"unknown config keys: {', '.join(unknown)}")
    return obj


def _resolve(args: argparse.Namespace, config: dict, dest: str):
    """Flag value if given, else config value, else built-in default."""
    val = getattr(args, dest, None)
    if val is not None:
        return val
    key = _CONFIG_KEYS.get(dest)
    if key is not None and key in config:
        return config[key]
    return _DEFAULTS.get(dest)


def _parse_ks(value) -> tuple[int, ...]:
    if isinstance(value, (list, tuple)):
        parts = list(value)
    else:
        parts = [p for p in str(value).split(",") if p.strip()]
    try:
        ks = tuple(sorted(set(int(p) for p in parts)))
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid k list {value!r}") from exc
    if not ks:
        raise InputError("k list is empty")
    return ks


def _require_paths(**named: str | None) -> dict[str, str]:
    missing_flags = sorted(name for name, val in named.items() if val is None)
    if missing_flags:
        flags = ", ".join(f"--{n.replace('_', '-')}" for n in missing_flags)
        raise InputError(f"missing required inputs: {flags}")
    absent = sorted(str(v) for v in named.values() if not os.path.exists(str(v)))
    if absent:
        raise InputError(f"missing input files: {', '.join(absent)}")
    return {name: str(val) for name, val in named.items()}


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _out_dir(args: argparse.Namespace, config: dict) -> Path:
    out = Path(str(_resolve(args, config, "out")))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_run_manifest(out: Path, command: str, inputs: dict[str, str], cfg: RunConfig) -> None:
    doc = {
        "command": command,
        "inputs": {path: _sha256(path) for path in sorted(inputs.values())},
        "config": cfg.to_dict(),
    }
    path = out / f"run_manifest.{command}.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _run_config(args, config, inputs: dict[str, str]) -> RunConfig:
    cfg = RunConfig(
        paths=dict(inputs),
        ks=_parse_ks(_resolve(args, config, "k")),
        iqr_space=str(_resolve(args, config, "iqr_space")),
        iqr_multiplier=float(_resolve(args, config, "iqr_mult")),
        bootstrap=int(_resolve(args, config, "bootstrap")),
        seed=int(_resolve(args, config, "seed")),
        ci_level=float(_resolve(args, config, "ci_level")),
        gallery_scope=str(_resolve(args, config, "gallery_scope")),
    )
    cfg.validate()
    return cfg


def _cmd_ingest(args, config) -> int:
    inputs = _require_paths(
        corpus=_resolve(args, config, "corpus"), vocab=_resolve(args, config, "vocab")
    )
    out = _out_dir(args, config)
    cfg = _run_config(args, config, inputs)
    vocab = load_vocabulary(inputs["vocab"])
    unstable = vocab.warn_unstable_entries()
    if unstable:
        log.warning("%d vocabulary entries are not lemmatizer fixed points", len(unstable))
    index, stats = ingest_corpus(inputs["corpus"], vocab)
    save_index(index, out / "index.cgix")
    (out / "ingest_stats.json").write_text(
        json.dumps(stats.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_run_manifest(out, "ingest", inputs, cfg)
    log.info("ingested %d records (%d parse errors)", stats.n_records, stats.n_parse_errors)
    return EXIT_OK


def _cmd_stats(args, config) -> int:
    inputs = _require_paths(index=_resolve(args, config, "index"))
    vocab_path = _resolve(args, config, "vocab")
    vocab = None
    if vocab_path is not None:
        inputs.update(_require_paths(vocab=vocab_path))
        vocab = load_vocabulary(vocab_path)
    out = _out_dir(args, config)
    cfg = _run_config(args, config, inputs)
    index = load_index(inputs["index"])
    if vocab is not None and len(vocab) != index.vocab_size:
        raise InputError(
            f"vocabulary has {len(vocab)} entries, index expects {index.vocab_size}"
        )
    freqs = np.asarray([index.frequency(c) for c in range(index.vocab_size)], dtype=np.int64)
    with open(out / "frequencies.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("concept_id,lemma,frequency\n")
        for c in range(index.vocab_size):
            lemma = vocab.lemma(c) if vocab is not None else ""
            fh.write(f"{c},{lemma},{int(freqs[c])}\n")
    nonzero = freqs[freqs > 0]
    doc = {
        "n_samples": index.n_samples,
        "vocab_size": index.vocab_size,
        "nonzero_concepts": int(nonzero.size),
        "zero_concepts": int(freqs.size - nonzero.size),
        "max_frequency": int(freqs.max()) if freqs.size else 0,
        "median_nonzero_frequency": float(np.median(nonzero)) if nonzero.size else 0.0,
    }
    (out / "stats.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_run_manifest(out, "stats", inputs, cfg)
    return EXIT_OK


def _cmd_curate(args, config) -> int:
    inputs = _require_paths(
        index=_resolve(args, config, "index"),
        manifest=_resolve(args, config, "manifest"),
        vocab=_resolve(args, config, "vocab"),
    )
    out = _out_dir(args, config)
    cfg = _run_config(args, config, inputs)
    vocab = load_vocabulary(inputs["vocab"])
    index = load_index(inputs["index"])
    if len(vocab) != index.vocab_size:
        raise InputError(
            f"vocabulary has {len(vocab)} entries, index expects {index.vocab_size}"
        )
    samples = list(read_manifest(inputs["manifest"], vocab))
    curated = curate(samples, index)
    write_curated(curated, vocab, out / "curated.jsonl")
    write_summary(curated, out / "summary.json")
    _write_run_manifest(out, "curate", inputs, cfg)
    log.info("curated %d samples: %s", len(curated.samples), curated.counts)
    return EXIT_OK


def _curated_from_rows(rows) -> CuratedTestSet:
    samples = []
    for row in rows:
        sample = TestSample(
            test_id=row["test_id"],
            modality=row["modality"],
            concepts=frozenset(),
            payload_row=row["payload_row"],
            gt_rows=tuple(row["gt_rows"]),
            caption=row.get("caption"),
            tags=None if row.get("tags") is None else tuple(row["tags"]),
        )
        f_per_concept = tuple(int(f) for f in row["f_per_concept"])
        if row["label"] != "excluded" and (len(f_per_concept) < 2 or any(f <= 0 for f in f_per_concept)):
            raise ManifestError(
                f"sample {row['test_id']!r} is labeled {row['label']!r} but its "
                f"per-concept frequencies are {list(f_per_concept)}"
            )
        samples.append(CuratedSample(sample, row["label"], int(row["f_cap"]), f_per_concept))
    if not samples:
        raise ManifestError("curated file has no rows")
    counts = {lab: 0 for lab in ("known", "novel", "excluded")}
    for s in samples:
        counts[s.label] += 1
    total = len(samples)
    percentages = {lab: 100.0 * n / total for lab, n in counts.items()}
    return CuratedTestSet(samples, counts, percentages)


def _cmd_eval(args, config) -> int:
    inputs = _require_paths(
        curated=_resolve(args, config, "curated"),
        queries=_resolve(args, config, "queries"),
        gallery=_resolve(args, config, "gallery"),
    )
    out = _out_dir(args, config)
    cfg = _run_config(args, config, inputs)
    test = _curated_from_rows(read_curated(inputs["curated"]))
    queries = load_embeddings(inputs["queries"])
    gallery = load_embeddings(inputs["gallery"])
    if not queries.normalized:
        log.warning("query rows are not unit norm, normalizing")
        queries = normalize_rows(queries)
    if not gallery.normalized:
        log.warning("gallery rows are not unit norm, normalizing")
        gallery = normalize_rows(gallery)
    if cfg.gallery_scope == "curated":
        gallery, row_map = restrict_gallery(test, gallery)
        test = remap_test_rows(test, row_map)
        log.info("gallery restricted to %d curated rows", gallery.rows)
    outcomes = evaluate(test, queries, gallery, None, cfg.ks)
    if not outcomes:
        raise InputError("no non-excluded samples to evaluate")
    write_outcomes(outcomes, out / "outcomes.csv", cfg.ks)
    (out / "recall_summary.json").write_text(
        json.dumps(recall_summary(outcomes, cfg.ks), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    _write_run_manifest(out, "eval", inputs, cfg)
    return EXIT_OK


def _select_k(args, config, available: tuple[int, ...]) -> int:
    # an explicit --k (or config "k") picks the indicator; default: largest
    raw = getattr(args, "k", None)
    if raw is None:
        raw = config.get("k")
    if raw is None:
        return max(available)
    ks = _parse_ks(raw)
    if len(ks) == 1:
        k = ks[0]
    else:
        k = max(ks)
    if k not in available:
        raise InputError(f"k={k} not present in outcomes (has {list(available)})")
    return k


def _cmd_fit(args, config) -> int:
    inputs = _require_paths(outcomes=_resolve(args, config, "outcomes"))
    out = _out_dir(args, config)
    cfg = _run_config(args, config, inputs)
    outcomes, ks = read_outcomes(inputs["outcomes"])
    k = _select_k(args, config, ks)
    pairs = [(o.y_at_k[k], o.f_avg) for o in outcomes]
    fit = fit_logistic(
        pairs,
        B=cfg.bootstrap,
        seed=cfg.seed,
        ci_level=cfg.ci_level,
        iqr_multiplier=cfg.iqr_multiplier,
        iqr_space=cfg.iqr_space,
    )
    write_fit(fit, out / "fit.json")
    write_bootstrap(fit, out / "bootstrap.csv")
    _write_run_manifest(out, "fit", inputs, cfg)
    log.info(
        "fit beta0=%.4f beta1=%.4f p=%.3g n_used=%d (k=%d)",
        fit.beta0, fit.beta1, fit.p_value, fit.n_used, k,
    )
    if not fit.converged:
        log.warning("fit did not converge within the iteration budget")
    return EXIT_OK


def _cmd_simulate(args, config) -> int:
    inputs = _require_paths(spec=_resolve(args, config, "spec"))
    out = _out_dir(args, config)
    cfg = _run_config(args, config, inputs)
    spec = load_spec(inputs["spec"])
    if getattr(args, "seed", None) is not None or "seed" in config:
        spec = dataclasses.replace(spec, seed=cfg.seed)
    (out / "sim_spec.json").write_text(
        json.dumps(spec_to_dict(spec), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    vocab = simulation_vocabulary(spec)
    save_vocabulary(vocab, out / "vocab.txt")
    records = list(generate_corpus(spec))
    write_corpus(records, out / "corpus.jsonl")
    index, _stats = ingest_records(records, vocab)
    save_index(index, out / "index.cgix")
    log.info("simulated corpus: %d records over %d concepts", spec.N, spec.V)

    if spec.test_set.n > 0:
        samples = generate_test_samples(spec, index)
        write_manifest(samples, out / "test_manifest.jsonl")
        curated = curate(samples, index)
        write_curated(curated, vocab, out / "curated.jsonl")
        write_summary(curated, out / "summary.json")
        outcomes = simulate_eval_outcomes(spec, curated, index, cfg.ks)
        if outcomes:
            write_outcomes(outcomes, out / "outcomes.csv", cfg.ks)
        else:
            log.warning("every simulated test sample was excluded, no outcomes written")
        if spec.embeddings.dim > 0:
            queries, gallery = generate_embeddings(spec, spec.test_set.n)
            save_embeddings(queries, out / "queries.cgem")
            save_embeddings(gallery, out / "gallery.cgem")
        log.info("simulated test set: %s", curated.counts)
    _write_run_manifest(out, "simulate", inputs, cfg)
    return EXIT_OK


def _fit_from_files(fit_path: str) -> LogisticFit:
    try:
        doc = json.loads(Path(fit_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read fit file {fit_path}: {exc}") from exc
    boot_path = Path(fit_path).with_name("bootstrap.csv")
    if not boot_path.exists():
        raise InputError(f"missing input files: {boot_path}")
    betas = read_bootstrap(boot_path)
    try:
        return LogisticFit(
            beta0=float(doc["beta0"]),
            beta1=float(doc["beta1"]),
            p_value=float(doc["p_value"]),
            ci={k: (float(v[0]), float(v[1])) for k, v in doc["ci"].items()},
            ci_level=float(doc["ci_level"]),
            n_used=int(doc["n_used"]),
            n_dropped_iqr=int(doc["n_dropped_iqr"]),
            B=int(doc["B"]),
            seed=int(doc["seed"]),
            converged=bool(doc["converged"]),
            bootstrap_betas=betas,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"fit file {fit_path} is malformed: {exc}") from exc


def _cmd_report(args, config) -> int:
    inputs = _require_paths(
        outcomes=_resolve(args, config, "outcomes"), fit=_resolve(args, config, "fit")
    )
    curated_path = _resolve(args, config, "curated")
    curated = None
    if curated_path is not None:
        inputs.update(_require_paths(curated=curated_path))
        curated = _curated_from_rows(read_curated(curated_path))
    out = _out_dir(args, config)
    cfg = _run_config(args, config, inputs)
    outcomes, ks = read_outcomes(inputs["outcomes"])
    fit = _fit_from_files(inputs["fit"])
    k = _select_k(args, config, ks)
    written = emit_report(curated, outcomes, fit, out, recall_k=k)
    _write_run_manifest(out, "report", inputs, cfg)
    log.info("wrote %d report files", len(written))
    return EXIT_OK


_HANDLERS = {
    "ingest": _cmd_ingest,
    "stats": _cmd_stats,
    "curate": _cmd_curate,
    "eval": _cmd_eval,
    "fit": _cmd_fit,
    "simulate": _cmd_simulate,
    "report": _cmd_report,
}


def _setup_logging() -> None:
    raw = os.environ.get("COMPGEN_LOG", "warn").lower()
    level = _LOG_LEVELS.get(raw)
    if level is None:
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    log.setLevel(level)
    if raw not in _LOG_LEVELS:
        log.warning("unknown COMPGEN_LOG value %r, using warn", raw)


def run_subcommand(argv: list[str]) -> int:
    """Parse argv and execute one subcommand, mapping errors to exit codes."""
    parser = _build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_INPUT
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --version / --help exit 0; usage errors already carry code 1
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_INPUT
    try:
        config = _load_config(args.config)
        return _HANDLERS[args.command](args, config)
    except InputError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except CompgenError as exc:
        log.error("internal error: %s", exc)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        log.error("internal error: %s: %s", type(exc).__name__, exc)
        log.debug("traceback", exc_info=True)
        return EXIT_INTERNAL


def entrypoint() -> None:
    _setup_logging()
    sys.exit(run_subcommand(sys.argv[1:]))


if __name__ == "__main__":
    entrypoint()
