"""Command-line entry point: ``nschrelax run|sweep|verify``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .runner import ConfigError, RunConfig, SolverFailure, SweepConfig, run_single, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("nschrelax")

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nschrelax", description=__doc__)
    p.add_argument("--workers", type=int, default=None, help="parallel sweep workers")
    p.add_argument("--out", type=Path, default=None, help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("run", "sweep"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, required=True)
    sub.add_parser("verify", help="run built-in oracle checks")
    return p

def _read(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc

def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "verify":
            from .verify import run_checks
            return EXIT_OK if run_checks() else 1
        if args.command == "run":
            cfg = RunConfig.from_text(_read(args.config), args.out)
            res = run_single(cfg)
            print(f"finished t={res.state.t:.6g}; outputs in {cfg.out_dir}")
            if res.error is not None:
                print("  ".join(f"{k}={v:.3e}" for k, v in zip(res.error.norm_names(), res.error.norms())))
            return EXIT_OK
        cfg = SweepConfig.from_text(_read(args.config), args.out)
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigError("--workers must be >= 1")
            cfg.workers = args.workers
        rows = run_sweep(cfg)
        failed = sum(r.status != "ok" for r in rows)
        print(f"{len(rows)} runs, {failed} failed; table in {cfg.report}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverFailure as exc:
        print(f"solver failure at step {exc.step} (residual {exc.residual:.3e}): {exc}", file=sys.stderr)
        out = getattr(args, "out", None)
        if out is not None:
            try:
                Path(out).mkdir(parents=True, exist_ok=True)
                (Path(out) / "failure.txt").write_text(
                    f"step={exc.step}\nresidual={exc.residual!r}\nmessage={exc}\n")
            except OSError:
                pass
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO

if __name__ == "__main__":
    sys.exit(main())
