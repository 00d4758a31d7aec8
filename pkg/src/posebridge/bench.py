"""Benchmark suites at desk scale: pose/motion quality, landmark-size sweep,
latency, and the near-landmark similarity check.

Every suite returns plain dicts so reports serialize straight to JSON; the
assertions each suite cares about are collected machine-readably under
``assertions`` so callers (and the CLI's exit status) can act on them.
All quality ground truth comes from the schema's analytic inverse, by way
of generating queries directly in configuration space.
"""

from __future__ import annotations

import gc
import time
from dataclasses import dataclass

import numpy as np

from . import synth
from .io import write_json, atomic_write_text
from .kernelstore import build_store
from .kinematics import fk_batch, rest_config
from .metrics import CSV_HEADER, deviation
from .projection import ProjectionEngine, project_relaxed
from .smoothing import Smoother

REPORT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class EvaluationConfig:
    landmark_sizes: tuple = (50, 250, 1000)
    k: int = 10
    regularization: float = 1e-8
    n_candidates: int = 10
    n_backward: int = 10
    motion_frames: int = 120
    latency_queries: int = 100_000
    latency_queries_wide: int = 5_000
    similarity_percentile: float = 10.0   # delta: nearest-landmark distance percentile
    similarity_tolerance_deg: float = 10.0  # epsilon
    quality_tolerance_deg: float = 10.0
    quality_frame_fraction: float = 0.95
    sweep_slack: float = 0.10
    seed: int = 11

    def __post_init__(self):
        if self.similarity_percentile <= 0 or self.similarity_tolerance_deg <= 0:
            raise ValueError("similarity radius percentile and tolerance must be > 0")
        if not self.landmark_sizes:
            raise ValueError("landmark_sizes must be nonempty")


def default_engine(schema, config=EvaluationConfig(), size=None):
    """Engine over a synthetic landmark set at the configured size."""
    size = size or max(config.landmark_sizes)
    ls = synth.sample_landmark_set(schema, size, seed=config.seed)
    store = build_store(ls, k=min(config.k, size), regularization=config.regularization,
                        seed=config.seed)
    return ProjectionEngine(
        store,
        n_candidates=min(config.n_candidates, size),
        n_backward=min(config.n_backward, size),
    )


def _motion_configs(schema, pose_name, frames):
    target = schema.benchmark_poses[pose_name]
    taus = np.linspace(0.0, 1.0, frames)
    return np.outer(1.0 - taus, rest_config(schema)) + np.outer(taus, target)


def run_pose_suite(engine, schema, config=EvaluationConfig()):
    """Reconstruct the eight benchmark poses and report their deviations."""
    if len(schema.benchmark_poses) != 8:
        raise ValueError("schema does not provide the eight benchmark poses")
    poses = {}
    worst = 0.0
    for name in sorted(schema.benchmark_poses):
        target = schema.benchmark_poses[name]
        res = project_relaxed(engine, fk_batch(target[None, :], schema)[0])
        rep = deviation(res.config, target)
        worst = max(worst, rep.m_max)
        poses[name] = rep.as_dict()
    return {
        "poses": poses,
        "worst_m_max_deg": worst,
        "assertions": [
            {
                "name": "pose_suite_below_tolerance",
                "ok": worst < config.quality_tolerance_deg,
                "detail": f"worst pose M_max {worst:.3f} deg vs {config.quality_tolerance_deg}",
            }
        ],
    }


def run_motion_suite(engine, schema, config=EvaluationConfig(), smoothing=True):
    """Replay the eight rest-to-pose motions through project + smooth.

    Traces per-frame deviations against the interpolated ground-truth
    configurations.
    """
    frames = config.motion_frames
    motions = {}
    all_max, all_avg = [], []
    for name in sorted(schema.benchmark_poses):
        configs = _motion_configs(schema, name, frames)
        poses = fk_batch(configs, schema)
        smoother = Smoother(schema.humanoid_dim) if smoothing else None
        trace = []
        for f, (pose, truth) in enumerate(zip(poses, configs)):
            out = project_relaxed(engine, pose).config
            if smoother is not None:
                out = smoother.step(out)
            rep = deviation(out, truth)
            trace.append({"frame": f, "m_max_deg": rep.m_max, "m_avg_deg": rep.m_avg})
            all_max.append(rep.m_max)
            all_avg.append(rep.m_avg)
        motions[name] = {
            "frames": frames,
            "max_m_max_deg": max(t["m_max_deg"] for t in trace),
            "mean_m_avg_deg": float(np.mean([t["m_avg_deg"] for t in trace])),
            "trace": trace,
        }
    all_max = np.asarray(all_max)
    frac_ok = float((all_max < config.quality_tolerance_deg).mean())
    mean_avg = float(np.mean(all_avg))
    return {
        "motions": motions,
        "fraction_frames_below_tolerance": frac_ok,
        "mean_m_avg_deg": mean_avg,
        "assertions": [
            {
                "name": "motion_frames_below_tolerance",
                "ok": frac_ok >= config.quality_frame_fraction,
                "detail": f"{frac_ok:.4f} of frames below {config.quality_tolerance_deg} deg "
                          f"(need >= {config.quality_frame_fraction})",
            },
            {
                "name": "motion_mean_m_avg",
                "ok": mean_avg < 5.0,
                "detail": f"mean M_avg {mean_avg:.3f} deg vs 5.0",
            },
        ],
    }


def run_size_sweep(schema, config=EvaluationConfig()):
    """Projection quality as the landmark count grows.

    Engines are built over nested subsets of one sampled correspondence
    pool, then evaluated on the rest-to-pose_8 motion (no smoothing, so the
    numbers isolate projection quality).
    """
    pool = synth.sample_motion_configs(schema, max(config.landmark_sizes), config.seed)
    rows = []
    for size in sorted(config.landmark_sizes):
        subset = np.unique(pool[:size], axis=0)
        ls = synth.landmark_set_from_configs(schema, subset)
        store = build_store(ls, k=min(config.k, len(ls)),
                            regularization=config.regularization, seed=config.seed)
        engine = ProjectionEngine(
            store,
            n_candidates=min(config.n_candidates, len(ls)),
            n_backward=min(config.n_backward, len(ls)),
        )
        configs = _motion_configs(schema, "pose_8", config.motion_frames)
        poses = fk_batch(configs, schema)
        reps = [deviation(project_relaxed(engine, p).config, c)
                for p, c in zip(poses, configs)]
        rows.append({
            "size": len(ls),
            "mean_m_max_deg": float(np.mean([r.m_max for r in reps])),
            "mean_m_avg_deg": float(np.mean([r.m_avg for r in reps])),
        })
    ok = all(
        b["mean_m_avg_deg"] <= a["mean_m_avg_deg"] * (1.0 + config.sweep_slack)
        for a, b in zip(rows, rows[1:])
    )
    return {
        "sizes": rows,
        "assertions": [
            {
                "name": "sweep_error_non_increasing",
                "ok": ok,
                "detail": "mean M_avg per size: "
                          + ", ".join(f"{r['size']}: {r['mean_m_avg_deg']:.3f}" for r in rows),
            }
        ],
    }


def run_latency(engine, schema, config=EvaluationConfig()):
    """Per-query wall-clock timing over pre-generated random queries.

    Timing only: queries are generated up front, the garbage collector is
    paused, and a short warmup precedes measurement.
    """
    queries, _ = synth.sample_query_poses(
        schema, min(4096, config.latency_queries), seed=config.seed + 1
    )
    queries = np.ascontiguousarray(queries)
    wide = ProjectionEngine(
        engine.store,
        n_candidates=min(50, len(engine.store)),
        n_backward=min(50, len(engine.store)),
    )

    def timed(target_engine, count):
        for i in range(min(200, count)):
            project_relaxed(target_engine, queries[i % len(queries)])
        times = np.empty(count)
        gc_was_enabled = gc.isenabled()
        gc.disable()
        try:
            for i in range(count):
                t0 = time.perf_counter()
                project_relaxed(target_engine, queries[i % len(queries)])
                times[i] = time.perf_counter() - t0
        finally:
            if gc_was_enabled:
                gc.enable()
        return {
            "queries": count,
            "mean_ms": float(times.mean() * 1e3),
            "p99_ms": float(np.percentile(times, 99) * 1e3),
        }

    narrow = timed(engine, config.latency_queries)
    wide_stats = timed(wide, config.latency_queries_wide)
    return {
        "narrow": {"n_candidates": engine.n_candidates, "n_backward": engine.n_backward, **narrow},
        "wide": {"n_candidates": wide.n_candidates, "n_backward": wide.n_backward, **wide_stats},
        "assertions": [
            {
                "name": "latency_mean_below_budget",
                "ok": narrow["mean_ms"] < 0.1,
                "detail": f"mean {narrow['mean_ms']:.4f} ms vs 0.1 ms",
            },
            {
                "name": "latency_grows_with_neighbor_counts",
                "ok": wide_stats["mean_ms"] > narrow["mean_ms"],
                "detail": f"wide {wide_stats['mean_ms']:.4f} ms vs narrow {narrow['mean_ms']:.4f} ms",
            },
        ],
    }


def run_similarity(engine, schema, config=EvaluationConfig()):
    """Queries within the similarity radius of the landmarks stay within
    the configured tolerance of the analytic ground truth."""
    ls = engine.store.landmarks
    d2 = ((ls.human[:, None, :] - ls.human[None, :, :]) ** 2).sum(axis=2)
    np.fill_diagonal(d2, np.inf)
    delta = float(np.percentile(np.sqrt(d2.min(axis=1)), config.similarity_percentile))
    rng = np.random.default_rng(config.seed + 2)
    worst = 0.0
    count = 0
    for i in range(0, len(ls), max(1, len(ls) // 200)):
        step = rng.normal(size=schema.humanoid_dim)
        truth = np.clip(
            ls.humanoid[i] + step / np.linalg.norm(step) * 0.25 * delta,
            schema.joint_min, schema.joint_max,
        )
        pose = fk_batch(truth[None, :], schema)[0]
        if np.linalg.norm(pose - ls.human[i]) > delta:
            continue
        count += 1
        res = project_relaxed(engine, pose)
        worst = max(worst, deviation(res.config, truth).m_max)
    return {
        "delta": delta,
        "queries": count,
        "worst_m_max_deg": worst,
        "assertions": [
            {
                "name": "similarity_within_tolerance",
                "ok": count > 0 and worst < config.similarity_tolerance_deg,
                "detail": f"worst M_max {worst:.3f} deg over {count} queries "
                          f"within delta {delta:.4f}",
            }
        ],
    }


SUITES = ("poses", "motions", "sweep", "latency", "similarity")


def run_bench(schema, config=EvaluationConfig(), suites=SUITES, engine=None):
    """Run the requested suites and assemble the full report."""
    unknown = set(suites) - set(SUITES)
    if unknown:
        raise ValueError(f"unknown bench suites: {sorted(unknown)}")
    if engine is None:
        engine = default_engine(schema, config)
    report = {
        "format_version": REPORT_FORMAT_VERSION,
        "type": "bench_report",
        "schema": schema.name,
        "landmarks": len(engine.store),
        "config": {
            "landmark_sizes": list(config.landmark_sizes),
            "k": config.k,
            "regularization": config.regularization,
            "n_candidates": config.n_candidates,
            "n_backward": config.n_backward,
            "motion_frames": config.motion_frames,
            "latency_queries": config.latency_queries,
            "similarity_percentile": config.similarity_percentile,
            "similarity_tolerance_deg": config.similarity_tolerance_deg,
            "seed": config.seed,
        },
        "suites": {},
    }
    runners = {
        "poses": lambda: run_pose_suite(engine, schema, config),
        "motions": lambda: run_motion_suite(engine, schema, config),
        "sweep": lambda: run_size_sweep(schema, config),
        "latency": lambda: run_latency(engine, schema, config),
        "similarity": lambda: run_similarity(engine, schema, config),
    }
    assertions = []
    for name in SUITES:
        if name not in suites:
            continue
        section = runners[name]()
        assertions.extend(section.pop("assertions"))
        report["suites"][name] = section
    report["assertions"] = assertions
    report["all_ok"] = all(a["ok"] for a in assertions)
    return report


def write_report(path, report, traces_csv=None):
    write_json(path, report)
    if traces_csv and "motions" in report.get("suites", {}):
        lines = ["motion," + CSV_HEADER]
        for name, motion in report["suites"]["motions"]["motions"].items():
            for row in motion["trace"]:
                lines.append(
                    f"{name},{row['frame']},{row['m_max_deg']:.9g},{row['m_avg_deg']:.9g}"
                )
        atomic_write_text(traces_csv, "\n".join(lines) + "\n")
