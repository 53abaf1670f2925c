"""Command-line entry point.

Subcommands mirror the pipeline stages and share one JSON configuration
file; each stage also runs its prerequisites, skipping anything already
up to date in the artifact directory.

Exit codes: 0 success, 2 configuration error, 3 backend/protocol error,
4 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import load_config
from .errors import BackendError, ConfigError, DataError, ProtocolError
from .pipeline import (
    ArtifactStore,
    cmd_align,
    cmd_eval,
    cmd_index,
    cmd_score,
    cmd_senses,
    cmd_substitute,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3
EXIT_DATA = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftscope",
        description="Measure lexical semantic change from masked-token substitutes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="override config seed")

    for name, help_text in [
        ("align", "align lemmatized documents to raw text"),
        ("index", "index occurrences and pick background terms"),
        ("substitute", "fetch masked-token substitutes from the backend"),
        ("score", "compute raw and frequency-scaled change scores"),
        ("senses", "induce sense clusters for one term"),
        ("eval", "correlate scaled scores with gold ratings"),
    ]:
        p = sub.add_parser(name, help=help_text)
        common(p)
        if name == "score":
            p.add_argument(
                "--emit-plot-data",
                action="store_true",
                help="also write count-vs-raw and gold-vs-scaled scatter TSVs",
            )
        if name == "senses":
            p.add_argument("--term", required=True, help="target term to cluster")
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed_override=args.seed)
        store = ArtifactStore(cfg)
        with store.lock():
            if args.command == "align":
                cmd_align(cfg, store)
            elif args.command == "index":
                cmd_index(cfg, store)
            elif args.command == "substitute":
                cmd_substitute(cfg, store)
            elif args.command == "score":
                cmd_score(cfg, store, emit_plot_data=args.emit_plot_data)
            elif args.command == "senses":
                cmd_senses(cfg, args.term, store)
            elif args.command == "eval":
                cmd_eval(cfg, store)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BackendError, ProtocolError) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
