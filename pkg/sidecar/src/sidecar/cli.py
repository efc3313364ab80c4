"""Command line entry: `seg-sidecar --port 8765 --mode mock_flood:128`."""

from __future__ import annotations

import argparse
import sys

from .server import ServerConfig, create_app


def parse_mode(text: str) -> ServerConfig:
    kind, _, rest = text.partition(":")
    if kind == "mock_flood":
        return ServerConfig(mode="mock_flood", tau=int(rest) if rest else 128)
    if kind == "model":
        if not rest:
            raise ValueError("model mode needs a checkpoint path: model:<path>")
        return ServerConfig(mode="model", checkpoint=rest)
    raise ValueError(f"unknown mode {kind!r} (use mock_flood[:tau] or model:<checkpoint>)")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="seg-sidecar", description=__doc__)
    parser.add_argument("--port", type=int, default=8765)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--mode", default="mock_flood:128")
    parser.add_argument("--max-concurrent", type=int, default=4)
    args = parser.parse_args(argv)
    try:
        config = parse_mode(args.mode)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    config.max_concurrent = args.max_concurrent

    import uvicorn

    uvicorn.run(create_app(config), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
