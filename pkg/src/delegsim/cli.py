"""Command-line entry point.

    delegsim run <config> [--seed N] [--out DIR]
    delegsim path <A|B|C> [--seed N]
    delegsim sweep <config> --grid <file> [--out DIR]
    delegsim validate <config>

``<config>`` is a TOML scenario file, or the name of a shipped preset.
Exit status: 0 success, 2 invalid configuration, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from pathlib import Path
from typing import Optional, Sequence

from .errors import ConfigValidationError

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2


def _load(target: str):
    from . import config as C

    p = Path(target)
    if not p.exists() and target in C.list_presets():
        raw = C.resolve_preset(C.preset_raw(target))
        return C.validate(raw), raw, None
    cfg, raw = C.load_config(p)
    return cfg, raw, p.parent


def _report_invalid(exc: ConfigValidationError) -> int:
    print("invalid configuration:", file=sys.stderr)
    for loc, msg in exc.problems:
        print(f"  {loc}: {msg}", file=sys.stderr)
    return EXIT_INVALID


def cmd_validate(args) -> int:
    from .config import config_hash

    cfg, _, _ = _load(args.config)
    print(f"ok {cfg.name} {config_hash(cfg)}")
    return EXIT_OK


def cmd_run(args) -> int:
    from .engine import run_scenario
    from .output import write_outputs

    cfg, _, base = _load(args.config)
    res = run_scenario(cfg, seed=args.seed, base_dir=base)
    out = Path(args.out) if args.out else Path(cfg.output.dir)
    write_outputs(res, out, cfg.thinning, cfg.output.events)
    print(f"{res.classification.label.value} -> {out}")
    return EXIT_OK


def cmd_path(args) -> int:
    from .engine import run_canonical_path

    traj, regime = run_canonical_path(args.path, seed=args.seed)
    print(json.dumps({"path": args.path.upper(), "regime": regime.value if regime else None,
                      "trajectory": [s.label for s in traj]}))
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .config import _read_toml_text
    from .engine import sweep
    from .output import write_sweep

    cfg, raw, base = _load(args.config)
    gpath = Path(args.grid)
    if not gpath.is_file():
        raise ConfigValidationError([(str(gpath), "grid file not found")])
    grid = _read_toml_text(gpath.read_text(), str(gpath))
    try:
        rows = sweep(raw, grid, base)
    except ValueError as exc:
        raise ConfigValidationError([(str(gpath), str(exc))]) from None
    out = Path(args.out) if args.out else Path(cfg.output.dir)
    path = write_sweep(rows, out / "sweep.csv")
    labels = Counter(r.label if r.status == "ok" else r.status for r in rows)
    for name in sorted(labels):
        print(f"{name}: {labels[name]}")
    print(f"{len(rows)} points -> {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="delegsim", description="Seeded human-AI delegation dynamics simulator.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log classification predicates")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario and write its outputs")
    p.add_argument("config")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory (default: output.dir)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("path", help="run a canonical single-agent path")
    p.add_argument("path", choices=["A", "B", "C", "a", "b", "c"])
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_path)

    p = sub.add_parser("sweep", help="run a parameter grid")
    p.add_argument("config")
    p.add_argument("--grid", required=True, help="TOML table of dotted keys to value lists")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check a config without running it")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except ConfigValidationError as exc:
        return _report_invalid(exc)
    except Exception as exc:  # noqa: BLE001 - the exit-code contract covers every failure
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
