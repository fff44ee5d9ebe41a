"""Command line front-end: ``symdelay run | list | validate``.

Exit codes: 0 all checks passed, 1 a check failed, 2 invalid config,
3 numerical abort.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional

from .config import ExperimentConfig, load_document, validate
from .errors import ValidationError
from .runner import (EXIT_CHECK_FAILED, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, execute,
                     report_text, write_artifacts)
from .scenarios import catalogue, scenario

log = logging.getLogger("symdelay")


def _configs(args) -> List[ExperimentConfig]:
    docs = []
    if args.config:
        for path in args.config:
            docs.append((load_document(path), path))
    for name in args.scenario or []:
        docs.append((scenario(name), name))
    if not docs:
        raise ValidationError("give --config PATH or --scenario NAME")
    out = []
    for doc, src in docs:
        if args.seed is not None:
            doc["seed"] = args.seed
        out.append(validate(doc, src))
    names = [c.name for c in out]
    if len(set(names)) != len(names):
        raise ValidationError("experiment names must be unique within one invocation")
    return out


def _execute_one(args):
    """Validate, run and write one experiment (picklable for the process pool)."""
    doc, src, out, workers, quiet = args
    cfg = validate(doc, src)
    start = time.perf_counter()
    res = execute(cfg, workers)
    elapsed = time.perf_counter() - start
    text = None
    if res.status in (EXIT_OK, EXIT_CHECK_FAILED):
        target = write_artifacts(res, out or cfg.output)
        text = report_text(res)
        log.info("%s finished in %.1f s, artifacts in %s", cfg.name, elapsed, target)
    return cfg.name, res.status, res.error, text


def cmd_run(args) -> int:
    configs = _configs(args)
    out = args.out
    if out is None and any(c.output is None for c in configs):
        raise ValidationError("no output directory: pass --out DIR or set 'output'")
    workers = max(1, args.workers)
    inner = workers if len(configs) == 1 else 1
    tasks = [(c.raw, c.name, out, inner, args.quiet) for c in configs]
    for t in tasks:
        t[0]["name"] = t[1]
    if len(configs) > 1 and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_execute_one, tasks))
    else:
        results = [_execute_one(t) for t in tasks]
    worst = EXIT_OK
    for name, status, error, text in results:
        if error:
            print(f"{name}: {error}", file=sys.stderr)
        if text and not args.quiet:
            sys.stdout.write(text)
        worst = max(worst, status, key=_severity)
    return worst


def _severity(code: int) -> int:
    return {EXIT_OK: 0, EXIT_CHECK_FAILED: 1, EXIT_NUMERICAL: 2, EXIT_VALIDATION: 3}[code]


def cmd_list(args) -> int:
    for name, kind, criteria, desc in catalogue():
        crit = ",".join(str(c) for c in criteria) or "-"
        print(f"{name:24s} {kind:18s} criteria {crit:6s} {desc}")
    return EXIT_OK


def cmd_validate(args) -> int:
    for cfg in _configs(args):
        print(f"{cfg.name}: valid ({cfg.kind}; checks {', '.join(cfg.checks)})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="symdelay", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", action="append", metavar="PATH",
                       help="YAML or JSON experiment config (repeatable)")
        p.add_argument("--scenario", action="append", metavar="NAME",
                       help="built-in scenario name (repeatable)")
        p.add_argument("--seed", type=int, default=None, metavar="K")

    p_run = sub.add_parser("run", help="run experiments and write artifacts")
    common(p_run)
    p_run.add_argument("--out", metavar="DIR", default=None)
    p_run.add_argument("--workers", type=int, default=1, metavar="N")
    p_run.add_argument("-q", "--quiet", action="store_true")
    p_run.set_defaults(func=cmd_run)
    p_list = sub.add_parser("list", help="list built-in scenarios")
    p_list.set_defaults(func=cmd_list)
    p_val = sub.add_parser("validate", help="validate configs without running")
    common(p_val)
    p_val.set_defaults(func=cmd_validate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
