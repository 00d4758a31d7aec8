"""Sparse landmark extraction: mean-shift clustering plus IK pairing.

Raw motion recordings are dense and redundant.  Mean shift with a Gaussian
kernel collapses them to cluster modes; each mode is renormalized back to a
valid unit-vector pose and paired with a humanoid configuration through the
schema's inverse kinematics.  The resulting correspondence pairs are the
landmark set everything downstream is built on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import io
from .errors import DegeneratePoseError
from .kinematics import inverse_kinematics, normalize_pose, schema_digest

LANDMARKS_FORMAT_VERSION = 1

_CHUNK_ROWS = 512


@dataclass(frozen=True)
class MeanShiftResult:
    modes: np.ndarray        # (K, d), first-discovery order
    assignments: np.ndarray  # (P,) mode index per input point, -1 if unconverged
    converged: np.ndarray    # (P,) bool
    iterations: int


def mean_shift(points, bandwidth, max_iter=500, tol=1e-7):
    """Gaussian-kernel mean shift over the rows of ``points``.

    Every point is iterated until its update step drops below ``tol`` or
    ``max_iter`` is exhausted.  Converged points within ``bandwidth/2`` of an
    earlier mode merge into it; unconverged points are flagged and assigned
    to no mode.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("points must be a nonempty (count, dim) array")
    if not bandwidth > 0:
        raise ValueError("bandwidth must be > 0")
    inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth)

    pts_t = pts.T.copy()
    pts_sq = np.einsum("ij,ij->i", pts, pts)
    cur = pts.copy()
    active = np.ones(len(pts), dtype=bool)
    iterations = 0
    for iterations in range(1, max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        moved = cur[idx]
        for start in range(0, idx.size, _CHUNK_ROWS):
            sl = slice(start, start + _CHUNK_ROWS)
            block = moved[sl]
            d2 = np.einsum("ij,ij->i", block, block)[:, None] + pts_sq - 2.0 * (block @ pts_t)
            np.maximum(d2, 0.0, out=d2)
            w = np.exp(-d2 * inv_two_h2)
            new = (w @ pts) / w.sum(axis=1)[:, None]
            moved[sl] = new
        step = np.linalg.norm(moved - cur[idx], axis=1)
        cur[idx] = moved
        active[idx] = step >= tol
        if not active.any():
            break
    converged = ~active

    merge_tol = bandwidth / 2.0
    modes = []
    assignments = np.full(len(pts), -1, dtype=np.int64)
    for i in range(len(pts)):
        if not converged[i]:
            continue
        x = cur[i]
        for mi, mode in enumerate(modes):
            if np.linalg.norm(x - mode) < merge_tol:
                assignments[i] = mi
                break
        else:
            assignments[i] = len(modes)
            modes.append(x)
    modes_arr = np.asarray(modes) if modes else np.empty((0, pts.shape[1]))
    modes_arr.flags.writeable = False
    return MeanShiftResult(
        modes=modes_arr,
        assignments=assignments,
        converged=converged,
        iterations=iterations,
    )


def mean_shift_update(point, points, bandwidth):
    """One mean-shift step from ``point``; used to check fixed-pointness."""
    pts = np.asarray(points, dtype=np.float64)
    d2 = ((pts - point) ** 2).sum(axis=1)
    w = np.exp(-d2 / (2.0 * bandwidth * bandwidth))
    return (w @ pts) / w.sum()


def default_bandwidth(points, percentile=20.0, max_sample=1000):
    """Bandwidth heuristic: a low percentile of pairwise distances.

    Uses an evenly strided subsample of at most ``max_sample`` rows so the
    choice is deterministic and cheap on long recordings.
    """
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) > max_sample:
        stride = int(np.ceil(len(pts) / max_sample))
        pts = pts[::stride]
    if len(pts) < 2:
        return 1.0
    d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
    iu = np.triu_indices(len(pts), k=1)
    dists = np.sqrt(d2[iu])
    positive = dists[dists > 0]
    if positive.size == 0:
        return 1.0
    return float(np.percentile(positive, percentile))


@dataclass(frozen=True)
class LandmarkSet:
    """Paired (human pose, humanoid config) correspondence samples."""

    human: np.ndarray     # (N, m)
    humanoid: np.ndarray  # (N, n)
    bandwidth: float
    merge_tol: float
    schema_name: str
    schema_digest: str
    source_digest: str
    dropped_degenerate: int = 0
    merged_after_renormalize: int = 0

    def __len__(self):
        return self.human.shape[0]

    @property
    def human_dim(self):
        return self.human.shape[1]

    @property
    def humanoid_dim(self):
        return self.humanoid.shape[1]


def _freeze_pair_arrays(human, humanoid):
    h = np.ascontiguousarray(human, dtype=np.float64)
    r = np.ascontiguousarray(humanoid, dtype=np.float64)
    h.flags.writeable = False
    r.flags.writeable = False
    return h, r


def build_landmarks(frames, bandwidth, schema, max_iter=500, tol=1e-7, source_digest=""):
    """Extract a landmark set from recording frames via mean shift + IK.

    Modes whose renormalization or inverse kinematics fails (degenerate
    bone geometry) are dropped and counted; modes that collapse onto an
    earlier landmark after renormalization are merged away so no two human
    landmarks sit closer than ``bandwidth/2``.
    """
    pts = np.asarray(frames, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("recording must contain at least one frame")
    if pts.shape[1] != schema.human_dim:
        raise ValueError(
            f"frames have dimension {pts.shape[1]}, schema expects {schema.human_dim}"
        )
    if bandwidth is None:
        bandwidth = default_bandwidth(pts)
    result = mean_shift(pts, bandwidth, max_iter=max_iter, tol=tol)

    merge_tol = bandwidth / 2.0
    humans, configs = [], []
    dropped = 0
    merged = 0
    for mode in result.modes:
        try:
            pose = normalize_pose(mode)
            config = inverse_kinematics(pose, schema)
        except (ValueError, DegeneratePoseError):
            dropped += 1
            continue
        if any(np.linalg.norm(pose - kept) < merge_tol for kept in humans):
            merged += 1
            continue
        humans.append(pose)
        configs.append(config)
    if not humans:
        raise ValueError("no usable landmarks: every mode was degenerate")
    h, r = _freeze_pair_arrays(humans, configs)
    return LandmarkSet(
        human=h,
        humanoid=r,
        bandwidth=float(bandwidth),
        merge_tol=merge_tol,
        schema_name=schema.name,
        schema_digest=schema_digest(schema),
        source_digest=source_digest,
        dropped_degenerate=dropped,
        merged_after_renormalize=merged,
    )


def landmarks_from_pairs(human, humanoid, schema, source_digest=""):
    """Build a landmark set directly from given correspondence pairs.

    Used for synthetic experiment sets where the pairs come from sampling a
    known model rather than from clustering a recording.
    """
    h, r = _freeze_pair_arrays(human, humanoid)
    if h.ndim != 2 or r.ndim != 2 or h.shape[0] != r.shape[0] or h.shape[0] == 0:
        raise ValueError("need equal nonzero counts of human poses and humanoid configs")
    if h.shape[1] != schema.human_dim or r.shape[1] != schema.humanoid_dim:
        raise ValueError("pair dimensions disagree with the schema")
    if len(np.unique(h, axis=0)) != len(h):
        raise ValueError("duplicate human landmarks are not allowed")
    return LandmarkSet(
        human=h,
        humanoid=r,
        bandwidth=0.0,
        merge_tol=0.0,
        schema_name=schema.name,
        schema_digest=schema_digest(schema),
        source_digest=source_digest,
    )


def landmarks_to_dict(ls):
    return {
        "format_version": LANDMARKS_FORMAT_VERSION,
        "type": "landmark_set",
        "schema": ls.schema_name,
        "schema_digest": ls.schema_digest,
        "source_digest": ls.source_digest,
        "bandwidth": ls.bandwidth,
        "merge_tol": ls.merge_tol,
        "count": len(ls),
        "dropped_degenerate": ls.dropped_degenerate,
        "merged_after_renormalize": ls.merged_after_renormalize,
        "pairs": [
            {"human": h.tolist(), "humanoid": r.tolist()}
            for h, r in zip(ls.human, ls.humanoid)
        ],
    }


def landmarks_from_dict(data):
    if data.get("format_version") != LANDMARKS_FORMAT_VERSION:
        raise ValueError(f"unsupported landmark_set format_version: {data.get('format_version')!r}")
    pairs = data["pairs"]
    if len(pairs) != data["count"] or data["count"] < 1:
        raise ValueError("landmark_set count disagrees with stored pairs")
    h, r = _freeze_pair_arrays(
        [p["human"] for p in pairs], [p["humanoid"] for p in pairs]
    )
    return LandmarkSet(
        human=h,
        humanoid=r,
        bandwidth=float(data["bandwidth"]),
        merge_tol=float(data["merge_tol"]),
        schema_name=data["schema"],
        schema_digest=data["schema_digest"],
        source_digest=data.get("source_digest", ""),
        dropped_degenerate=int(data.get("dropped_degenerate", 0)),
        merged_after_renormalize=int(data.get("merged_after_renormalize", 0)),
    )


def save_landmarks(path, ls):
    io.write_json(path, landmarks_to_dict(ls))


def load_landmarks(path):
    return landmarks_from_dict(io.read_json(path, expected_type="landmark_set"))
