"""
Command line interface for simulation, navigation runs and sweeps.

``robnav run``       simulate a scenario and run the navigation pipeline
``robnav sweep``     run a settings comparison and/or reduction-order sweep
``robnav simulate``  write the synthetic sensor streams only
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from robnav.pipeline import RunOptions, run_streams
from robnav.protection import PlConfig
from robnav.sim.config import ConfigError, ScenarioConfig
from robnav.sim.sensors import export_csv, simulate
from robnav.sweep import SweepSpec, q_sweep, settings_sweep, write_rows, write_table

log = logging.getLogger("robnav")


def _on_off(value: str) -> bool:
    v = value.lower()
    if v not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return v == "on"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robnav", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="simulate and run the pipeline")
    run.add_argument("scenario", type=Path)
    run.add_argument("--filter", choices=("ekf", "ehf"), default="ehf")
    run.add_argument("--fd", type=_on_off, default=True, metavar="on|off")
    run.add_argument("--q", type=int, default=4000, help="zonotope reduction order")
    run.add_argument("--n-sigma-z", type=float, default=3.0)
    run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    run.add_argument("--out", type=Path, default=Path("out"))

    sweep = sub.add_parser("sweep", help="settings comparison and q sweep")
    sweep.add_argument("spec", type=Path)
    sweep.add_argument("--out", type=Path, required=True)

    sim = sub.add_parser("simulate", help="write sensor streams as CSV")
    sim.add_argument("scenario", type=Path)
    sim.add_argument("--seed", type=int, default=None)
    sim.add_argument("--out", type=Path, required=True)
    return parser


def _load(path: Path, seed: int | None) -> ScenarioConfig:
    cfg = ScenarioConfig.load(path)
    return cfg if seed is None else cfg.with_seed(seed)


def cmd_run(args) -> int:
    cfg = _load(args.scenario, args.seed)
    try:
        pl = PlConfig(q=args.q, n_sigma_z=args.n_sigma_z)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    report = run_streams(simulate(cfg), RunOptions(mode=args.filter, fd=args.fd, pl=pl))
    args.out.mkdir(parents=True, exist_ok=True)
    report.write_csv(args.out / "report.csv")
    report.write_summary(args.out / "summary.json")
    s = report.summary
    status = "diverged" if report.diverged else "ok"
    print(
        f"{status}: {report.n_rows} epochs, 2D RMS {s['error_2d']['rms']:.3f} m, "
        f"3D RMS {s['error_3d']['rms']:.3f} m, PL containment {s.get('pl_containment', float('nan')):.4f}"
    )
    return 0


def cmd_sweep(args) -> int:
    spec = SweepSpec.load(args.spec)
    args.out.mkdir(parents=True, exist_ok=True)
    if spec.settings:
        rows = settings_sweep(spec)
        write_rows(rows, args.out / "settings_runs.csv")
        write_table(rows, args.out / "settings_table.csv")
        print(f"settings table: {args.out / 'settings_table.csv'}")
    if spec.q_values:
        rows = q_sweep(spec)
        write_rows(rows, args.out / "q_sweep.csv")
        print(f"q sweep: {args.out / 'q_sweep.csv'}")
    return 0


def cmd_simulate(args) -> int:
    streams = simulate(_load(args.scenario, args.seed))
    paths = export_csv(streams, args.out)
    (args.out / "events.json").write_text(json.dumps(streams.events, indent=2))
    print("\n".join(str(p) for p in paths))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handlers = {"run": cmd_run, "sweep": cmd_sweep, "simulate": cmd_simulate}
    try:
        return handlers[args.command](args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
