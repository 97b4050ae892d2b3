"""polariton2d command line.

    polariton2d run CONFIG            run the tasks listed in [run] tasks
    polariton2d <task> CONFIG         run one task (eig, linear, emission, twod,
                                      pathways, buildup, trace, popdyn, fit)
    polariton2d validate CONFIG       print diagnostics
    polariton2d template              print a default configuration

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 1 other.
POLARITON2D_THREADS limits BLAS/LAPACK threads.
"""
from __future__ import annotations

import argparse
import os
import sys

from threadpoolctl import threadpool_limits

from . import __version__
from .config import TASKS, RunConfig, dumps, load
from .errors import ConfigError, NumericalError, ParameterError
from .runner import TaskFailed, run, validate

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3
THREADS_ENV = "POLARITON2D_THREADS"


def _parser():
    ap = argparse.ArgumentParser(prog="polariton2d", description="2D spectra of open polariton systems")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run",) + TASKS:
        p = sub.add_parser(name, help="run all configured tasks" if name == "run" else f"run the {name} task")
        p.add_argument("config")
        p.add_argument("-o", "--output-dir", help="override [run] output_dir")
        p.add_argument("--formats", help="comma list overriding [run] formats (text, binary)")
    p = sub.add_parser("validate", help="print unit, grid and memory diagnostics")
    p.add_argument("config")
    sub.add_parser("template", help="print a default configuration file")
    return ap


def _threads():
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return None
    try:
        n = int(raw)
        if n < 1:
            raise ValueError
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    return n


def _dispatch(args):
    if args.command == "template":
        sys.stdout.write(dumps(RunConfig(tasks=("eig", "linear", "twod"))))
        return EXIT_OK
    cfg = load(args.config)
    if args.command == "validate":
        diags = validate(cfg)
        for d in diags:
            print(d)
        return EXIT_OK
    if args.command != "run":
        cfg = cfg.with_(tasks=(args.command,))
    if args.formats:
        formats = tuple(f.strip() for f in args.formats.split(",") if f.strip())
        if any(f not in ("text", "binary") for f in formats):
            raise ConfigError(f"unknown format in {args.formats!r}")
        cfg = cfg.with_(formats=formats)
    manifest = run(cfg, args.output_dir)
    for task, info in manifest["tasks"].items():
        print(f"{task}: done in {info['seconds']:.2f} s")
    print(f"wrote {len(manifest['files'])} files and manifest.json to {args.output_dir or cfg.output_dir}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        n = _threads()
        if n is None:
            return _dispatch(args)
        with threadpool_limits(limits=n):
            return _dispatch(args)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TaskFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.numerical:
            return EXIT_NUMERICAL
        if isinstance(exc.cause, (ConfigError, ParameterError)):
            return EXIT_CONFIG
        return EXIT_OTHER
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
