"""Single entry binary: serve, simulate, analyze, export, seed."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 on usage errors instead of 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> _Parser:
    parser = _Parser(prog="blockworld", description="Collaborative persistent voxel-world toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_serve = sub.add_parser("serve", help="run the world server")
    p_serve.add_argument(
        "--listen",
        default=os.environ.get("BLOCKS_LISTEN", "127.0.0.1:8420"),
        help="host:port to bind (env BLOCKS_LISTEN)",
    )
    p_serve.add_argument("--data-dir", default="./data", help="event logs and snapshots")
    p_serve.add_argument("--config", default=None, help="shared-world definitions (JSON)")
    p_serve.add_argument("--static-dir", default=None, help="serve the web client from this directory")

    p_sim = sub.add_parser("simulate", help="run a scripted multi-client scenario")
    p_sim.add_argument("--scenario", required=True, help="scenario JSON file")
    p_sim.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_sim.add_argument("--out", required=True, help="output directory for logs and run summary")

    p_an = sub.add_parser("analyze", help="collaboration metrics from an NDJSON log")
    p_an.add_argument("--log", required=True, help="exported NDJSON event log")
    p_an.add_argument("--sync-window-ms", type=int, default=60_000, help="simultaneity window")
    p_an.add_argument("--json", action="store_true", help="emit the report as JSON")

    p_ex = sub.add_parser("export", help="dump a world's event log as NDJSON")
    p_ex.add_argument("--data-dir", required=True)
    p_ex.add_argument("--world", required=True)
    p_ex.add_argument("--out", default=None, help="write here instead of stdout")

    p_seed = sub.add_parser("seed", help="seed the starter structure into an empty shared world")
    p_seed.add_argument("--data-dir", required=True)
    p_seed.add_argument("--world", required=True)

    return parser


def cmd_serve(args) -> int:
    import uvicorn

    from .registry import WorldRegistry, load_config
    from .service import create_app

    host, _, port = args.listen.rpartition(":")
    if not host or not port.isdigit():
        print(f"error: --listen wants host:port, got {args.listen!r}", file=sys.stderr)
        return EXIT_USAGE
    shared = load_config(args.config) if args.config else None
    registry = WorldRegistry(args.data_dir, shared)
    app = create_app(registry)
    if args.static_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/app", StaticFiles(directory=args.static_dir, html=True), name="app")
    uvicorn.run(app, host=host, port=int(port), log_level="info")
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .simulator import Scenario, run_scenario

    scenario = Scenario.from_file(args.scenario)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = run_scenario(scenario, seed=args.seed, out_dir=out_dir)
    summary = {
        "scenario": scenario.name,
        "seed": scenario.seed if args.seed is None else args.seed,
        "logs": {k: str(v) for k, v in result.log_paths.items()},
        "converged": result.converged,
        "rejects": result.rejects,
        "ground_truth": result.ground_truth,
    }
    (out_dir / "run.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    print(f"{scenario.name}: {result.steps} steps, logs in {out_dir}")
    for world, path in result.log_paths.items():
        print(f"  {world}: {path}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    from .analytics import render_table, summarize
    from .storage import read_log

    records = read_log(Path(args.log))
    report = summarize(records, window_ms=args.sync_window_ms)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2))
    else:
        print(render_table(report))
    return EXIT_OK


def cmd_export(args) -> int:
    path = Path(args.data_dir) / "worlds" / args.world / "log.ndjson"
    if not path.exists():
        print(f"error: no log for world {args.world!r} under {args.data_dir}", file=sys.stderr)
        return EXIT_RUNTIME
    data = path.read_text(encoding="utf-8")
    if args.out:
        Path(args.out).write_text(data, encoding="utf-8")
    else:
        sys.stdout.write(data)
    return EXIT_OK


def cmd_seed(args) -> int:
    from . import world as w
    from .storage import EventLog, restore

    dirpath = Path(args.data_dir) / "worlds" / args.world
    if (dirpath / "meta.json").exists():
        state = restore(dirpath).state
    else:
        state = w.WorldState(world_id=args.world, kind="shared")
    log = EventLog(dirpath)
    if not (dirpath / "meta.json").exists():
        log.write_meta(state)
    try:
        events = w.seed_starter_structure(state, now=time.time_ns() // 1_000_000)
    except w.WorldError as e:
        print(f"error: {e}", file=sys.stderr)
        log.close()
        return EXIT_RUNTIME
    for event in events:
        log.append(event, state)
    log.close()
    print(f"seeded {len(events)} blocks into {args.world}")
    return EXIT_OK


_COMMANDS = {
    "serve": cmd_serve,
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "export": cmd_export,
    "seed": cmd_seed,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except KeyboardInterrupt:
        return EXIT_RUNTIME
    except Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
