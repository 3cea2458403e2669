import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import AdapterError
from .export import ExportJob, export_embeddings

log = logging.getLogger("compgen_adapter")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INTERNAL = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_INPUT)


def build_parser() -> _Parser:
    parser = _Parser(prog="compgen-adapter", description=__doc__)
    parser.add_argument("--version", action="version", version=f"compgen-adapter {__version__}")
    sub = parser.add_subparsers(dest="command")
    exp = sub.add_parser("export", help="embed a manifest into queries.cgem + gallery.cgem")
    exp.add_argument("--manifest", required=True, help="test-set manifest (JSONL)")
    exp.add_argument("--model", required=True, help="'hashproj:<dim>' or 'st:<name>'")
    exp.add_argument("--out", required=True, help="output directory")
    exp.add_argument("--batch", type=int, default=32, help="inference batch size")
    exp.add_argument("--device", default="cpu", help="device hint for model backends")
    return parser


def run(argv: list[str]) -> int:
    parser = build_parser()
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_INPUT
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_INPUT
    manifest = Path(args.manifest)
    if not manifest.is_file():
        log.error("missing input file: %s", manifest)
        return EXIT_INPUT
    out = Path(args.out)
    job_kwargs = dict(
        manifest=manifest,
        model=args.model,
        queries_path=out / "queries.cgem",
        gallery_path=out / "gallery.cgem",
        batch_size=args.batch,
        device=args.device,
    )
    try:
        job = ExportJob(**job_kwargs)
        result = export_embeddings(job)
    except AdapterError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except Exception as exc:
        log.error("internal error: %s: %s", type(exc).__name__, exc)
        return EXIT_INTERNAL
    log.info(
        "wrote %s (%d rows) and %s (%d rows), dim %d",
        result.queries_path, result.n_queries,
        result.gallery_path, result.n_gallery, result.dim,
    )
    return EXIT_OK


def entrypoint() -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    raise SystemExit(run(sys.argv[1:]))
