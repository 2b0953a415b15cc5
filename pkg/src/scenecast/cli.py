"""Command line entry points.

    engine serve  --listen HOST:PORT --canvas WxH --fps N [--ui DIR]
    engine run    --script FILE --out FILE.flv [--events FILE]
    engine ingest --listen HOST:PORT --out-dir DIR

Exit codes: 0 on success, 1 on usage errors, 2 on runtime failures.
Set SCENECAST_LOG_LEVEL (debug, info, warning, error) to tune logging.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .engine import Engine
from .ingest import IngestServer
from .model import OutputConfig
from .script import ScriptError, load_script, run_script
from .server import ControlServer

log = logging.getLogger(__name__)

USAGE_EXIT = 1
RUNTIME_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _parse_listen(value: str) -> tuple[str, int]:
    host, sep, port = value.rpartition(":")
    if not sep or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {value!r}")
    return (host or "127.0.0.1", int(port))


def _parse_canvas(value: str) -> tuple[int, int]:
    try:
        w, h = value.lower().split("x")
        return (int(w), int(h))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected WxH, got {value!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="engine", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the live engine and control service")
    serve.add_argument("--listen", type=_parse_listen, default=("127.0.0.1", 7070))
    serve.add_argument("--canvas", type=_parse_canvas, default=(1280, 720))
    serve.add_argument("--fps", type=int, default=30)
    serve.add_argument("--keyframe-interval", type=int, default=30)
    serve.add_argument("--assets", default=None, help="root for relative source paths")
    serve.add_argument("--ui", default=None, help="serve this directory over HTTP")

    run = sub.add_parser("run", help="execute a session script headlessly")
    run.add_argument("--script", required=True)
    run.add_argument("--out", required=True, help="output FLV path")
    run.add_argument("--events", default=None, help="also write the event log (JSONL)")
    run.add_argument("--assets", default=None, help="root for relative source paths")

    ingest = sub.add_parser("ingest", help="run the loopback RTMP ingest server")
    ingest.add_argument("--listen", type=_parse_listen, default=("127.0.0.1", 1935))
    ingest.add_argument("--out-dir", required=True)
    return parser


def _setup_logging() -> None:
    level_name = os.environ.get("SCENECAST_LOG_LEVEL", "warning").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(
        level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )


def cmd_serve(args) -> int:
    config = OutputConfig(
        width=args.canvas[0],
        height=args.canvas[1],
        fps=args.fps,
        keyframe_interval=args.keyframe_interval,
    )
    config.validate()
    engine = Engine(output=config, assets_root=args.assets, keep_log=False)
    server = ControlServer(engine, args.listen[0], args.listen[1], ui_dir=args.ui)
    host, port = server.address
    print(f"engine listening on {host}:{port} "
          f"({config.width}x{config.height} @ {config.fps} fps)")
    if args.ui:
        print(f"control panel: http://{host}:{port}/")
    server.serve_forever()
    return 0


def cmd_run(args) -> int:
    script = load_script(args.script)
    assets_root = args.assets or os.path.dirname(os.path.abspath(args.script))
    result = run_script(script, assets_root=assets_root)
    with open(args.out, "wb") as fh:
        fh.write(result.flv)
    if args.events:
        with open(args.events, "wb") as fh:
            fh.write(result.event_log_bytes())
    errors = [r for r in result.replies if not r.get("ok")]
    print(
        f"rendered {result.frames_rendered} frames -> {args.out} "
        f"({len(result.flv)} bytes, {len(errors)} command errors)"
    )
    return 0


def cmd_ingest(args) -> int:
    server = IngestServer(args.listen[0], args.listen[1], args.out_dir)
    host, port = server.address
    print(f"ingest listening on rtmp://{host}:{port}/<app>/<stream_key>")
    print(f"recordings land in {os.path.abspath(args.out_dir)}")
    server.serve_forever()
    return 0


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"serve": cmd_serve, "run": cmd_run, "ingest": cmd_ingest}
    try:
        return handlers[args.command](args)
    except ScriptError as exc:
        print(f"script error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT
    except KeyboardInterrupt:
        return 0
    except Exception as exc:  # noqa: BLE001
        log.debug("fatal", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT


if __name__ == "__main__":
    sys.exit(main())
