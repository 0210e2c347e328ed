"""Command line: ``syncaction run|validate|export``.

Failures exit nonzero with a single JSON object on standard error::

    {"error": "<kind>", "message": "...", "violations": [...]}

Exit codes: 0 ok, 1 validation failed / runtime error, 2 invalid config,
3 output directory not writable, 4 export refused.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, validate_config
from .records import FIGURES, MissingToggleError, export_from_directory
from .runner import OutputError, run_experiment


def _fail(kind: str, message: str, code: int, violations=None) -> int:
    payload = {"error": kind, "message": message}
    if violations is not None:
        payload["violations"] = violations
    print(json.dumps(payload), file=sys.stderr)
    return code


def cmd_run(args) -> int:
    try:
        report = run_experiment(args.config)
    except ConfigError as exc:
        return _fail("invalid-config", "config failed validation", 2, exc.violations)
    except OutputError as exc:
        return _fail("output-not-writable", str(exc), 3)
    except (OSError, ValueError, IndexError, FloatingPointError) as exc:
        return _fail("run-failed", f"{type(exc).__name__}: {exc}", 1)
    out = {"output_dir": str(report.output_dir), "summary": str(report.output_dir / "summary.json"),
           "seeds": [{k: e.get(k) for k in ("seed", "dir", "final_r", "regime", "sync_time")}
                     for e in report.seeds]}
    print(json.dumps(out, indent=2))
    return 0


def cmd_validate(args) -> int:
    violations = validate_config(args.config)
    if violations:
        return _fail("invalid-config", f"{len(violations)} violation(s)", 1, violations)
    print("ok")
    return 0


def cmd_export(args) -> int:
    try:
        path = export_from_directory(args.record_dir, args.figure, args.out)
    except MissingToggleError as exc:
        return _fail("missing-analysis-toggle", str(exc), 4)
    except (OSError, ValueError) as exc:
        return _fail("export-failed", f"{type(exc).__name__}: {exc}", 1)
    print(str(path))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="syncaction",
                                description="Coupled-oscillator synchronisation experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run every seed of a config")
    r.add_argument("config", type=Path)
    r.set_defaults(func=cmd_run)
    v = sub.add_parser("validate", help="check a config without running it")
    v.add_argument("config", type=Path)
    v.set_defaults(func=cmd_validate)
    e = sub.add_parser("export", help="write plot-ready CSV from a seed record directory")
    e.add_argument("record_dir", type=Path)
    e.add_argument("--figure", required=True, choices=FIGURES)
    e.add_argument("--out", required=True, type=Path)
    e.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
