"""Command-line interface.

Commands route through the HTTP service layer (an in-process app by
default, or a remote server via --server), so file formats and validation
behave identically either way.  The exception is ``stream``, the real-time
loop: it drives the engine directly in-process to keep per-line latency at
projection cost plus I/O.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__
from .client import ServiceClient, ServiceError
from .errors import PoseBridgeError

DEFAULT_CANDIDATES = 10
DEFAULT_BACKWARD = 10


def _fmt(values):
    return ",".join(f"{v:.10g}" for v in values)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="posebridge",
        description="Project human poses onto a humanoid configuration space in real time.",
    )
    parser.add_argument("--version", action="version", version=f"posebridge {__version__}")
    parser.add_argument(
        "--server",
        metavar="URL",
        default=None,
        help="base URL of a running posebridge server (default: run in-process)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)

    p = sub.add_parser("synth-recording", help="write a synthetic motion recording")
    p.add_argument("--out", required=True)
    p.add_argument("--frames", type=int, default=600)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--skeleton", default="desk10")
    p.add_argument("--rate-hz", type=float, default=30.0)
    p.add_argument("--jitter", type=float, default=0.04)

    p = sub.add_parser("extract", help="extract correspondence landmarks from a recording")
    p.add_argument("--recording", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--bandwidth", type=float, default=None,
                   help="mean-shift bandwidth (default: pairwise-distance heuristic)")

    p = sub.add_parser("build", help="train the kernel store over a landmark set")
    p.add_argument("--landmarks", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=10, help="neighbors (and hidden units) per kernel")
    p.add_argument("--reg", type=float, default=1e-8, help="kernel ridge regularization")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("project", help="project pose vectors onto the humanoid")
    p.add_argument("--store", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--pose", help="comma-separated pose vector")
    src.add_argument("--pose-file", help="file with one comma-separated pose per line")
    p.add_argument("--candidates", type=int, default=DEFAULT_CANDIDATES,
                   help="forward kernels consulted per query")
    p.add_argument("--backward", type=int, default=DEFAULT_BACKWARD,
                   help="backward kernels consulted per candidate")
    p.add_argument("--mode", choices=("relaxed", "exact"), default="relaxed")

    p = sub.add_parser("replay", help="project a recording and trace quality metrics")
    p.add_argument("--store", required=True)
    p.add_argument("--recording", required=True)
    p.add_argument("--out", required=True, help="output JSONL of configurations")
    p.add_argument("--metrics-csv", default=None)
    p.add_argument("--candidates", type=int, default=DEFAULT_CANDIDATES)
    p.add_argument("--backward", type=int, default=DEFAULT_BACKWARD)
    p.add_argument("--no-smooth", action="store_true")
    p.add_argument("--alpha", type=float, default=0.75)
    p.add_argument("--gamma", type=float, default=0.3)
    p.add_argument("--eta", type=float, default=0.15)

    p = sub.add_parser(
        "stream",
        help="read one pose per stdin line, write one smoothed configuration per line",
    )
    p.add_argument("--store", required=True)
    p.add_argument("--candidates", type=int, default=DEFAULT_CANDIDATES)
    p.add_argument("--backward", type=int, default=DEFAULT_BACKWARD)
    p.add_argument("--no-smooth", action="store_true")
    p.add_argument("--alpha", type=float, default=0.75)
    p.add_argument("--gamma", type=float, default=0.3)
    p.add_argument("--eta", type=float, default=0.15)

    p = sub.add_parser("bench", help="run the benchmark suites")
    p.add_argument("--store", default=None, help="store to benchmark (default: synthetic)")
    p.add_argument("--out", default=None, help="report JSON path")
    p.add_argument("--traces-csv", default=None)
    p.add_argument("--suites", default="poses,motions,sweep,latency,similarity")
    p.add_argument("--sizes", default="50,250,1000")
    p.add_argument("--frames", type=int, default=120)
    p.add_argument("--latency-queries", type=int, default=100_000)
    p.add_argument("--candidates", type=int, default=DEFAULT_CANDIDATES)
    p.add_argument("--backward", type=int, default=DEFAULT_BACKWARD)
    p.add_argument("--seed", type=int, default=11)
    return parser


def cmd_serve(args):
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


def cmd_synth_recording(client, args):
    info = client.synth_recording(
        out=args.out, frames=args.frames, seed=args.seed,
        schema_name=args.skeleton, rate_hz=args.rate_hz, jitter=args.jitter,
    )
    print(f"wrote {info['frames']} frames (dim {info['dim']}) to {info['out']}")
    return 0


def cmd_extract(client, args):
    info = client.extract(recording=args.recording, out=args.out, bandwidth=args.bandwidth)
    print(
        f"extracted {info['landmarks']} landmarks (bandwidth {info['bandwidth']:.5g}, "
        f"dropped {info['dropped_degenerate']}, merged {info['merged_after_renormalize']}) "
        f"to {info['out']}"
    )
    return 0


def cmd_build(client, args):
    info = client.build(
        landmarks=args.landmarks, out=args.out, k=args.k,
        regularization=args.reg, seed=args.seed,
    )
    print(f"built kernel store over {info['landmarks']} landmarks (k={info['k']}) to {info['out']}")
    return 0


def _parse_pose_line(line, lineno="pose"):
    try:
        return [float(tok) for tok in line.strip().split(",") if tok.strip() != ""]
    except ValueError:
        raise ValueError(f"{lineno}: not a comma-separated list of decimals") from None


def cmd_project(client, args):
    if args.pose is not None:
        rows = [_parse_pose_line(args.pose)]
    else:
        with open(args.pose_file) as fh:
            rows = [
                _parse_pose_line(line, f"{args.pose_file}:{i}")
                for i, line in enumerate(fh, 1) if line.strip()
            ]
    if not rows:
        raise ValueError("no pose vectors given")
    info = client.create_engine(
        store=args.store, n_candidates=args.candidates,
        n_backward=args.backward, mode=args.mode,
    )
    try:
        result = client.project(info["engine_id"], poses=rows)
        for config in result["configs"]:
            print(_fmt(config))
    finally:
        client.delete_engine(info["engine_id"])
    return 0


def cmd_replay(client, args):
    info = client.create_engine(
        store=args.store, n_candidates=args.candidates, n_backward=args.backward
    )
    try:
        result = client.replay(
            info["engine_id"],
            recording=args.recording,
            out_configs=args.out,
            metrics_csv=args.metrics_csv,
            smooth=not args.no_smooth,
            alpha=args.alpha, gamma=args.gamma, eta=args.eta,
        )
    finally:
        client.delete_engine(info["engine_id"])
    msg = (
        f"replayed {result['frames']} frames to {result['out_configs']} "
        f"(mean M_max {result['mean_m_max_deg']:.3f} deg, "
        f"mean M_avg {result['mean_m_avg_deg']:.3f} deg)"
    )
    if result["metrics_csv"]:
        msg += f"; metrics in {result['metrics_csv']}"
    print(msg)
    return 0


def cmd_stream(args):
    # direct in-process loop: one reader, one projector, one writer, in order
    from .kernelstore import load_store
    from .projection import ProjectionEngine
    from .smoothing import Smoother

    store = load_store(args.store)
    engine = ProjectionEngine(
        store, n_candidates=args.candidates, n_backward=args.backward
    )
    smoother = None
    if not args.no_smooth:
        smoother = Smoother(store.humanoid_dim, alpha=args.alpha, gamma=args.gamma, eta=args.eta)
    stdin, stdout = sys.stdin, sys.stdout
    for lineno, line in enumerate(stdin, 1):
        if not line.strip():
            continue
        values = _parse_pose_line(line, f"stdin:{lineno}")
        pose = np.asarray(values, dtype=np.float64)
        result = engine.project(pose)
        out = smoother.step(result.config) if smoother is not None else result.config
        stdout.write(_fmt(out) + "\n")
        stdout.flush()
    return 0


def cmd_bench(client, args):
    suites = [s.strip() for s in args.suites.split(",") if s.strip()]
    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    summary = client.bench(
        store=args.store, out=args.out, traces_csv=args.traces_csv,
        suites=suites, landmark_sizes=sizes, motion_frames=args.frames,
        latency_queries=args.latency_queries,
        n_candidates=args.candidates, n_backward=args.backward, seed=args.seed,
    )
    for check in summary["assertions"]:
        print(f"[{'PASS' if check['ok'] else 'FAIL'}] {check['name']}: {check['detail']}")
    if summary["out"]:
        print(f"report written to {summary['out']}")
    return 0 if summary["all_ok"] else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "serve":
            return cmd_serve(args)
        if args.command == "stream":
            return cmd_stream(args)
        handlers = {
            "synth-recording": cmd_synth_recording,
            "extract": cmd_extract,
            "build": cmd_build,
            "project": cmd_project,
            "replay": cmd_replay,
            "bench": cmd_bench,
        }
        with ServiceClient(base_url=args.server) as client:
            return handlers[args.command](client, args)
    except (ServiceError, PoseBridgeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
