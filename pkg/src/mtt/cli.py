"""Command-line driver: ``mtt check`` and ``mtt eval``."""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, TextIO

from .diagnostics import Diagnostic, MttError
from .elab import CommandResult, Options, Session
from .env import Environment, initial_env
from .kernel import normalize
from .surface.parser import iter_commands, parse_term
from .surface.printer import show
from .unify import Tracer

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class RunReport:
    file: str
    commands: list[CommandResult] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)
    trace: list[dict] = field(default_factory=list)
    unify_steps: int = 0
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.diagnostics

    def transcript(self) -> str:
        """Command outputs and diagnostics in source order."""
        lines = []
        for res in self.commands:
            lines.extend(res.output)
            lines.extend(d.render() for d in res.diagnostics)
        lines.extend(d.render() for d in self.diagnostics if not any(
            d in r.diagnostics for r in self.commands))
        return "".join(f"{ln}\n" for ln in lines)

    def summary(self, deterministic: bool = False) -> str:
        status = "ok" if self.ok else "failed"
        s = (f"== {self.file}: {status} ({len(self.commands)} commands, "
             f"{self.unify_steps} unification steps")
        if not deterministic:
            s += f", {self.seconds:.3f}s"
        return s + ")"


def _ops(session: Session):
    return lambda: {k: (e.level, e.assoc) for k, e in session.env.notations.items()}


def run_text(text: str, env: Environment, file: str = "<input>", *, options: Options | None = None,
             tracer: Tracer | None = None, keep_going: bool = False) -> tuple[RunReport, Environment]:
    """Process every command of ``text``; returns the report and the final environment."""
    tracer = tracer or Tracer()
    session = Session(env, options, tracer)
    report = RunReport(file)
    start = time.perf_counter()
    try:
        for cmd in iter_commands(text, _ops(session), file):
            res = session.process(cmd)
            report.commands.append(res)
            if not res.ok:
                report.diagnostics.extend(res.diagnostics)
                if not keep_going:
                    break
    except MttError as e:
        report.diagnostics.append(e.diagnostic())
    report.seconds = time.perf_counter() - start
    report.trace = list(tracer.records)
    report.unify_steps = tracer.steps
    return report, session.env


def default_prelude() -> list[Path]:
    root = resources.files("mtt") / "prelude"
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".mtt"))


_PRELUDE_CACHE: dict[tuple, Environment] = {}


def load_prelude(paths: Iterable[Path] | None = None, options: Options | None = None) -> Environment:
    """Environment after processing the prelude files in order (cached per path list)."""
    paths = list(paths) if paths is not None else default_prelude()
    options = options or Options()
    key = (tuple(str(p) for p in paths), options.conv_fuel, options.unify_fuel)
    if key in _PRELUDE_CACHE:
        return _PRELUDE_CACHE[key]
    env = initial_env()
    for p in paths:
        report, env = run_text(Path(p).read_text(encoding="utf-8"), env, str(p), options=options)
        if not report.ok:
            raise MttError("prelude failed to check:\n" + report.transcript(), category="PreludeError")
    _PRELUDE_CACHE[key] = env
    return env


def run_file(path: str | Path, *, env: Environment | None = None, options: Options | None = None,
             trace: str | None = None, keep_going: bool = False) -> RunReport:
    env = env if env is not None else load_prelude(options=options)
    kinds = {"elab": {"elab"}, "unify": {"unify"}, "all": {"elab", "unify"}}.get(trace or "", set())
    text = Path(path).read_text(encoding="utf-8")
    report, _ = run_text(text, env, str(path), options=options, tracer=Tracer(frozenset(kinds)),
                         keep_going=keep_going)
    return report


def eval_term(env: Environment, text: str, options: Options | None = None) -> str:
    """Elaborate a closed term, normalize it in the kernel and print the result."""
    ops = {k: (e.level, e.assoc) for k, e in env.notations.items()}
    s = parse_term(text, ops)
    session = Session(env, options)
    t, _ = session.elaborate_closed(env, s)
    return show(normalize(env, t, session._fuel()), env, explicit=bool(options and options.explicit))


def emit_trace(report: RunReport, sink: TextIO) -> None:
    for rec in report.trace:
        sink.write(json.dumps({"file": report.file, **rec}, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mtt", description="Check .mtt files.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--prelude", action="append", metavar="PATH",
                        help="prelude file or directory (repeatable; replaces the default prelude)")
    common.add_argument("--fuel-conv", type=int, default=None, metavar="N")
    common.add_argument("--fuel-unify", type=int, default=None, metavar="N")
    common.add_argument("--explicit", action="store_true", help="print coercions and implicit arguments")
    sub = ap.add_subparsers(dest="command", required=True)

    chk = sub.add_parser("check", parents=[common], help="check files")
    chk.add_argument("files", nargs="+")
    chk.add_argument("--trace", choices=("elab", "unify", "all"))
    chk.add_argument("--trace-out", metavar="PATH", help="NDJSON trace destination (default: stderr)")
    chk.add_argument("--keep-going", action="store_true")
    chk.add_argument("--deterministic", action="store_true", help="omit timing from the output")

    ev = sub.add_parser("eval", parents=[common], help="normalize a closed term")
    ev.add_argument("term")
    return ap


def _prelude_paths(args) -> list[Path] | None:
    if not args.prelude:
        return None
    out: list[Path] = []
    for p in map(Path, args.prelude):
        out.extend(sorted(p.glob("*.mtt")) if p.is_dir() else [p])
    return out


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    options = Options()
    if args.fuel_conv is not None:
        options.conv_fuel = args.fuel_conv
    if args.fuel_unify is not None:
        options.unify_fuel = args.fuel_unify
    options.explicit = args.explicit
    try:
        env = load_prelude(_prelude_paths(args), options)
    except OSError as e:
        print(f"mtt: cannot read prelude: {e}", file=sys.stderr)
        return EXIT_USAGE
    except MttError as e:
        print(f"mtt: {e.message}", file=sys.stderr)
        return EXIT_FAIL

    if args.command == "eval":
        try:
            print(eval_term(env, args.term, options))
        except MttError as e:
            print(e.diagnostic().render(), file=sys.stderr)
            return EXIT_FAIL
        return EXIT_OK

    sink: TextIO = sys.stderr
    if args.trace_out:
        try:
            sink = open(args.trace_out, "w", encoding="utf-8")
        except OSError as e:
            print(f"mtt: {e}", file=sys.stderr)
            return EXIT_USAGE
    status = EXIT_OK
    try:
        for f in args.files:
            try:
                report = run_file(f, env=env, options=options, trace=args.trace,
                                  keep_going=args.keep_going)
            except OSError as e:
                print(f"mtt: cannot read {f}: {e.strerror}", file=sys.stderr)
                status = EXIT_USAGE
                continue
            sys.stdout.write(report.transcript())
            print(report.summary(args.deterministic))
            if args.trace:
                emit_trace(report, sink)
            if not report.ok and status == EXIT_OK:
                status = EXIT_FAIL
    finally:
        if sink is not sys.stderr:
            sink.close()
    return status


if __name__ == "__main__":
    sys.exit(main())
