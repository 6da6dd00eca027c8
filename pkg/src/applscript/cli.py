"""Command-line interface: run, replay, trace export, report, ast-size, check."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import __version__
from .backends.http import HttpBackend
from .backends.mock import MockBackend, load_script
from .compiler import compile_source
from .context import promptify
from .errors import APPLError, DSLRuntimeError, GenerationFailed, SourceError
from .frontend import ast_size, parse_source
from .futures import DEFAULT_POOL_SIZE
from .interpreter import Interpreter, RuntimeEnv
from .ir import dump_ir
from .trace import ReplayCache, TraceLog, export_chrome_trace, report

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    script: Path
    entry: str = "main"
    backend: str = "mock"
    seed: int = 0
    pool_size: int = DEFAULT_POOL_SIZE
    latency_ms: float = 0.0
    responses: Path | None = None
    trace: Path | None = None
    replay: Path | None = None
    replay_mode: str = "strict"
    replay_fallback: str = "error"
    sequential: bool = False
    model: str | None = None

    def __post_init__(self):
        if self.replay is not None and not self.replay.is_file():
            raise UsageError(f"replay log not found: {self.replay}")


def bundled_examples() -> Path:
    return Path(str(resources.files("applscript") / "examples"))


def resolve_path(path: str | Path) -> Path:
    """Return ``path`` if it exists, else the bundled example of the same name."""
    p = Path(path)
    if p.exists():
        return p
    bundled = bundled_examples() / p.name
    if bundled.exists():
        return bundled
    raise UsageError(f"file not found: {path}")


def _default_responses(script: Path) -> Path | None:
    candidate = script.with_name(script.stem + ".responses.json")
    return candidate if candidate.is_file() else None


def _read_source(path: Path) -> str:
    return path.read_text(encoding="utf-8")


def _make_backend(cfg: RunConfig):
    if cfg.backend == "http":
        return HttpBackend()
    responses = cfg.responses or _default_responses(cfg.script)
    return MockBackend(seed=cfg.seed, latency_ms=cfg.latency_ms, script=load_script(responses))


def execute(cfg: RunConfig, out=None, err=None) -> int:
    """Compile and run a script per ``cfg``; shared by ``run`` and ``replay``."""
    out = out or sys.stdout
    err = err or sys.stderr
    program = compile_source(_read_source(cfg.script))
    replay = None
    if cfg.replay is not None:
        replay = ReplayCache(TraceLog.load(cfg.replay), cfg.replay_mode, cfg.replay_fallback == "live")
    trace = TraceLog(cfg.trace, seed=cfg.seed) if cfg.trace is not None else None
    env = RuntimeEnv(
        backend=_make_backend(cfg),
        trace=trace,
        pool_size=1 if cfg.sequential else cfg.pool_size,
        seed=cfg.seed,
        replay=replay,
        model=cfg.model,
    )
    interp = Interpreter(program, env)
    try:
        value = interp.run(cfg.entry)
        text = None if value is None else promptify(value).materialize()
    finally:
        if trace is not None:
            trace.close()
        if replay is not None:
            print(f"hits: {interp.scheduler.hits}, live: {interp.scheduler.live}", file=err)
    if text is not None:
        print(text, file=out)
    return EXIT_OK


def _config(args: argparse.Namespace) -> RunConfig:
    script = resolve_path(args.script)
    responses = resolve_path(args.responses) if args.responses else None
    return RunConfig(
        script=script,
        entry=args.entry,
        backend=args.backend,
        seed=args.seed,
        pool_size=args.pool_size,
        latency_ms=args.latency_ms,
        responses=responses,
        trace=Path(args.trace) if args.trace else None,
        replay=Path(args.log) if getattr(args, "log", None) else None,
        replay_mode=getattr(args, "mode", "strict"),
        replay_fallback=getattr(args, "replay_fallback", "error"),
        sequential=args.sequential,
        model=args.model,
    )


def cmd_run(args: argparse.Namespace) -> int:
    return execute(_config(args))


def cmd_replay(args: argparse.Namespace) -> int:
    return execute(_config(args))


def _chrome_path(log: Path) -> Path:
    name = log.name
    for suffix in (".trace.jsonl", ".jsonl"):
        if name.endswith(suffix):
            return log.with_name(name[: -len(suffix)] + ".chrome.json")
    return log.with_name(name + ".chrome.json")


def cmd_trace_export(args: argparse.Namespace) -> int:
    log_path = Path(args.log)
    if not log_path.is_file():
        raise UsageError(f"file not found: {args.log}")
    dest = Path(args.output) if args.output else _chrome_path(log_path)
    dest.write_text(export_chrome_trace(TraceLog.load(log_path)), encoding="utf-8")
    print(dest)
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    log_path = Path(args.log)
    if not log_path.is_file():
        raise UsageError(f"file not found: {args.log}")
    sys.stdout.write(report(TraceLog.load(log_path)))
    return EXIT_OK


def cmd_ast_size(args: argparse.Namespace) -> int:
    print(ast_size(parse_source(_read_source(resolve_path(args.script)))))
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    program = compile_source(_read_source(resolve_path(args.script)))
    if args.emit_ir:
        sys.stdout.write(dump_ir(program))
    return EXIT_OK


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("script", help="path to an .apl script (bundled examples are found by name)")
    p.add_argument("--entry", default="main", help="entry function (default: main)")
    p.add_argument("--backend", choices=("mock", "http"), default="mock", help="generation backend")
    p.add_argument("--seed", type=int, default=0, help="mock backend seed")
    p.add_argument("--pool-size", type=int, default=DEFAULT_POOL_SIZE, help="worker pool size")
    p.add_argument("--sequential", action="store_true", help="shorthand for --pool-size 1")
    p.add_argument("--latency-ms", type=float, default=0.0, help="injected mock latency per request")
    p.add_argument(
        "--script",
        dest="responses",
        metavar="RESPONSES",
        help="scripted mock responses (default: <script>.responses.json next to the script)",
    )
    p.add_argument("--trace", help="write the trace log (JSONL) to this path")
    p.add_argument("--model", help="model name (default: $APPL_MODEL or gpt-4o-mini)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="applscript", description="Compile and run APPL-script programs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log backend retries and scheduler activity")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="compile and run a script")
    _add_run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="re-run a script serving recorded responses")
    _add_run_flags(p)
    p.add_argument("--log", required=True, help="trace log recorded by a previous run")
    p.add_argument("--mode", choices=("strict", "nonstrict"), default="strict", help="replay matching mode")
    p.add_argument(
        "--replay-fallback",
        choices=("error", "live"),
        default="error",
        help="on a strict-mode mismatch, fail (default) or call the backend",
    )
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("trace", help="trace log utilities")
    tsub = p.add_subparsers(dest="trace_command", required=True)
    e = tsub.add_parser("export", help="export a Chrome trace-viewer timeline")
    e.add_argument("log")
    e.add_argument("-o", "--output", help="destination (default: <run>.chrome.json)")
    e.set_defaults(func=cmd_trace_export)

    p = sub.add_parser("report", help="print the call tree of a trace log")
    p.add_argument("log")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("ast-size", help="count AST nodes of a script")
    p.add_argument("script")
    p.set_defaults(func=cmd_ast_size)

    p = sub.add_parser("check", help="compile only")
    p.add_argument("script")
    p.add_argument("--emit-ir", action="store_true", help="print the compiled IR")
    p.set_defaults(func=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DSLRuntimeError as exc:
        print(exc.format_trace(), file=sys.stderr)
        return EXIT_RUNTIME
    except GenerationFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except APPLError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
