"""Entry point: build the app from config and serve it with uvicorn."""

import argparse
import sys

from .app import create_app
from .backends import BackendStartupError
from .config import load_config


def main(argv: list | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="neuroquery-sidecar",
        description="Inference sidecar: embeddings, span extraction, translation")
    parser.add_argument("--config", default=None, help="key = value config file")
    parser.add_argument("--host", default=None)
    parser.add_argument("--port", type=int, default=None)
    parser.add_argument("--backend", choices=["transformers", "hash"], default=None)
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        if args.host:
            config.host = args.host
        if args.port:
            config.port = args.port
        if args.backend:
            config.backend = args.backend
        app = create_app(config)
    except (BackendStartupError, ValueError, OSError) as exc:
        print(f"startup failure: {exc}", file=sys.stderr)
        return 1

    import uvicorn

    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
