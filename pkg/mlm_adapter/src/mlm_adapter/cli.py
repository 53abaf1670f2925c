"""Command line: ``mlm-adapter serve`` and ``mlm-adapter finetune``."""

from __future__ import annotations

import argparse
import sys

from .model import AdapterConfig, MaskedTokenRanker


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlm-adapter")
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="speak the substituter protocol")
    serve.add_argument("--model", required=True, help="model id or directory")
    serve.add_argument("--device", default="cpu")
    serve.add_argument("--candidate-factor", type=int, default=4,
                       help="candidates returned per request: factor * k")
    serve.add_argument("--max-length", type=int, default=None)
    serve.add_argument("--tcp", default=None, metavar="HOST:PORT",
                       help="serve over TCP instead of stdio")
    serve.add_argument("--seed", type=int, default=0)

    tune = sub.add_parser("finetune", help="continued masked-LM training")
    tune.add_argument("--model", required=True)
    tune.add_argument("--output", required=True)
    tune.add_argument("--corpus", action="append", required=True,
                      help="training corpus (repeat for the union of both periods)")
    tune.add_argument("--epochs", type=int, default=5)
    tune.add_argument("--batch-size", type=int, default=16)
    tune.add_argument("--learning-rate", type=float, default=5e-5)
    tune.add_argument("--device", default="cpu")
    tune.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "serve":
        config = AdapterConfig(
            model=args.model,
            device=args.device,
            candidate_factor=args.candidate_factor,
            max_length=args.max_length,
            seed=args.seed,
        )
        try:
            ranker = MaskedTokenRanker(config)
        except Exception as exc:
            # the handshake must not be emitted if the model cannot load
            print(f"model load failed: {exc}", file=sys.stderr)
            return 1
        from .server import serve_stream, serve_tcp

        if args.tcp:
            host, _, port = args.tcp.rpartition(":")
            serve_tcp(ranker, host or "127.0.0.1", int(port))
        else:
            serve_stream(ranker, sys.stdin, sys.stdout)
        return 0

    if args.command == "finetune":
        from .finetune import finetune

        config = AdapterConfig(
            model=args.model,
            device=args.device,
            epochs=args.epochs,
            batch_size=args.batch_size,
            learning_rate=args.learning_rate,
            seed=args.seed,
        )
        out = finetune(config, args.corpus, args.output)
        print(f"model written to {out}")
        return 0
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
