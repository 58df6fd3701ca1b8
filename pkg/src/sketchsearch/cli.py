"""Command-line interface: batch runs, sweeps, replay checks, reports, serving."""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__


def _cmd_run(args) -> int:
    from .config import load_experiment
    from .harness import run_batch, summarize
    from .report import render_report

    import os
    import shutil

    exp = load_experiment(args.config)
    out_dir = args.out or exp["out_dir"]
    workers = args.workers or exp.get("workers")
    os.makedirs(out_dir, exist_ok=True)
    echo = os.path.join(out_dir, "config.yaml")  # provenance next to results
    if os.path.abspath(args.config) != os.path.abspath(echo):
        shutil.copyfile(args.config, echo)

    def progress(row):
        status = "error" if "error" in row else \
            ("captured" if row.get("captured") else "timeout")
        print(f"[{row['arm']}] episode {row['index']}: {status}", flush=True)

    rows = run_batch(exp["arms"], exp["base_seed"], out_dir, workers=workers,
                     progress=progress if args.verbose else None)
    for name, arm_rows in rows.items():
        print(name, json.dumps(summarize(arm_rows)))
    written = render_report(out_dir)
    print("report:", ", ".join(written))
    return 0


def _cmd_sweep(args) -> int:
    from .harness import SWEEPS, run_batch, summarize
    from .report import render_report

    if args.name not in SWEEPS:
        print(f"unknown sweep {args.name!r}; available: {', '.join(sorted(SWEEPS))}",
              file=sys.stderr)
        return 2
    kwargs = {}
    if args.episodes is not None:
        kwargs["episodes"] = args.episodes
    if args.values:
        parsed = tuple(None if v.lower() in ("inf", "none") else float(v)
                       for v in args.values.split(","))
        axis = "periods" if args.name == "sketch_rate" else "values"
        kwargs[axis] = parsed
    try:
        arms = SWEEPS[args.name](**kwargs)
    except TypeError as err:
        print(f"sweep {args.name!r} does not accept those overrides: {err}",
              file=sys.stderr)
        return 2
    rows = run_batch(arms, args.seed, args.out, workers=args.workers)
    for name, arm_rows in rows.items():
        print(name, json.dumps(summarize(arm_rows)))
    written = render_report(args.out)
    print("report:", ", ".join(written))
    return 0


def _cmd_replay(args) -> int:
    from .episode import replay_episode

    ok, line = replay_episode(args.log)
    if ok:
        print("replay identical")
        return 0
    print(f"replay DIVERGED at line {line}")
    return 1


def _cmd_report(args) -> int:
    from .report import render_report

    written = render_report(args.metrics_dir, args.out)
    for path in written:
        print(path)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    cfg = ServiceConfig(mode=args.mode, pace=args.pace, preset=args.preset,
                        session_dir=args.sessions)
    app = create_app(cfg)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sketchsearch",
                                description="human-assisted target search engine")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a batch experiment from a YAML config")
    run.add_argument("config")
    run.add_argument("--out", default=None, help="override output directory")
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--verbose", action="store_true")
    run.set_defaults(func=_cmd_run)

    sweep = sub.add_parser("sweep", help="run one of the built-in sweeps")
    sweep.add_argument("name")
    sweep.add_argument("--episodes", type=int, default=None)
    sweep.add_argument("--seed", type=int, default=1)
    sweep.add_argument("--values", default=None,
                       help="comma-separated axis override (eta/xi grid values, "
                            "or sketch periods with 'inf' allowed)")
    sweep.add_argument("--out", default="results")
    sweep.add_argument("--workers", type=int, default=None)
    sweep.set_defaults(func=_cmd_sweep)

    replay = sub.add_parser("replay", help="re-run an episode log and verify it matches")
    replay.add_argument("log")
    replay.set_defaults(func=_cmd_replay)

    report = sub.add_parser("report", help="render CSV tables and figures from metrics")
    report.add_argument("metrics_dir")
    report.add_argument("--out", default=None)
    report.set_defaults(func=_cmd_report)

    serve = sub.add_parser("serve", help="start the live session service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--mode", default="both", choices=["active", "passive", "both"])
    serve.add_argument("--pace", type=float, default=1.0)
    serve.add_argument("--preset", default="sim", choices=["sim", "study"])
    serve.add_argument("--sessions", default="sessions")
    serve.set_defaults(func=_cmd_serve)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
