"""Command line entry point.

Exit codes: 0 success, 1 configuration invalid, 2 runtime failure.  Errors
print one machine-readable line on stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import PRESETS, load_config
from .errors import MemrepError
from .experiments import run_experiment


def _fail(kind: str, message: str) -> None:
    line = str(message).replace("\n", " ")
    print(f"memrep-error kind={kind} message={line!r}", file=sys.stderr)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="memrep",
                                     description="imitation dynamics with memory")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment from a config file")
    run_p.add_argument("config", type=Path)
    run_p.add_argument("--jobs", type=int, default=None, help="worker threads")
    run_p.add_argument("--out", type=Path, default=None, help="output directory override")

    val_p = sub.add_parser("validate", help="list config violations without running")
    val_p.add_argument("config", type=Path)

    pre_p = sub.add_parser("preset", help="materialize and run a shipped preset")
    pre_p.add_argument("name", choices=sorted(PRESETS))
    pre_p.add_argument("--out", type=Path, required=True)
    pre_p.add_argument("--jobs", type=int, default=None)
    return parser


def _run_config(path: Path, jobs, out) -> int:
    try:
        config, findings = load_config(path)
    except OSError as exc:
        _fail("validation", str(exc))
        return 1
    if findings or config is None:
        for finding in findings:
            _fail("validation", str(finding))
        return 1
    try:
        paths = run_experiment(config, jobs=jobs, out_dir=str(out) if out else None)
    except MemrepError as exc:
        _fail("runtime", str(exc))
        return 2
    for p in paths:
        print(p)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "validate":
        try:
            _config, findings = load_config(args.config)
        except OSError as exc:
            _fail("validation", str(exc))
            return 1
        for finding in findings:
            print(finding)
        return 0 if not findings else 1
    if args.command == "preset":
        args.out.mkdir(parents=True, exist_ok=True)
        cfg_path = args.out / f"{args.name}.cfg"
        cfg_path.write_text(PRESETS[args.name])
        return _run_config(cfg_path, args.jobs, args.out)
    return _run_config(args.config, args.jobs, args.out)


if __name__ == "__main__":
    sys.exit(main())
