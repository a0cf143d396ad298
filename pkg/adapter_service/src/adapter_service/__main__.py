"""Run the adapter service: `adapter-service --config cfg.json --port 8080`."""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

import uvicorn

from .app import create_app
from .scenario import ServiceConfig, load_config


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="adapter-service")
    parser.add_argument("--config", help="service config JSON")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--record-dir", help="capture replay fixtures here")
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    config = load_config(Path(args.config)) if args.config else ServiceConfig()
    app = create_app(config, record_dir=Path(args.record_dir) if args.record_dir else None)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
