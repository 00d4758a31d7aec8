"""Synthetic motion generation for the desk schema.

Stands in for a capture session: configurations are sampled along the
segments joining the rest pose and the benchmark poses (with bounded
jitter), which concentrates data on the kind of trajectories the bench
suites replay -- the same way a recorded operator session covers the
motions that are later reconstructed from it.
"""

from __future__ import annotations

import numpy as np

from .io import digest_frames
from .kinematics import clamp_config, fk_batch, rest_config
from .landmarks import landmarks_from_pairs


def _anchor_configs(schema):
    anchors = [rest_config(schema)]
    anchors.extend(schema.benchmark_poses[name] for name in sorted(schema.benchmark_poses))
    return np.asarray(anchors)


def sample_motion_configs(schema, count, seed, jitter=0.06, include_anchors=True):
    """Configurations on the rest/benchmark motion manifold.

    Points interpolate randomly chosen anchor pairs with uniform blend
    factors plus clipped jitter.  Half the segments are anchored at the
    rest pose, the way a capture session keeps returning to rest, so the
    rest-to-pose trajectories the bench suites replay are densely covered.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    anchors = _anchor_configs(schema)
    n_anchor = len(anchors)
    rows = []
    if include_anchors:
        rows.extend(anchors[: min(count, n_anchor)])
    remaining = count - len(rows)
    if remaining > 0:
        a = rng.integers(0, n_anchor, remaining)
        b = rng.integers(0, n_anchor, remaining)
        a[rng.uniform(size=remaining) < 0.5] = 0  # rest pose anchors half the segments
        tau = rng.uniform(0.0, 1.0, remaining)[:, None]
        pts = anchors[a] * (1.0 - tau) + anchors[b] * tau
        pts += rng.uniform(-jitter, jitter, pts.shape)
        rows.extend(clamp_config(schema, p) for p in pts)
    return np.asarray(rows[:count])


def synthetic_recording(schema, frames, seed, rate_hz=30.0, jitter=0.04):
    """A recording that walks rest -> pose -> rest across benchmark poses.

    Returns (timestamps, poses); poses are the forward-kinematics images of
    the jittered configuration path, renormalized unit bones by construction.
    """
    if frames < 1:
        raise ValueError("frames must be >= 1")
    rng = np.random.default_rng(seed)
    anchors = _anchor_configs(schema)
    order = rng.permutation(len(anchors))
    waypoints = [anchors[i] for i in order]
    waypoints.append(anchors[order[0]])
    segs = len(waypoints) - 1
    per_seg = max(1, frames // segs)
    configs = []
    for s in range(segs):
        tau = np.linspace(0.0, 1.0, per_seg, endpoint=False)[:, None]
        block = waypoints[s] * (1.0 - tau) + waypoints[s + 1] * tau
        configs.append(block)
    configs = np.vstack(configs)[:frames]
    while len(configs) < frames:  # pad short tail by holding the last config
        configs = np.vstack([configs, configs[-1:]])
    configs = configs + rng.uniform(-jitter, jitter, configs.shape)
    configs = np.clip(configs, schema.joint_min, schema.joint_max)
    poses = fk_batch(configs, schema)
    timestamps = np.arange(frames) / rate_hz
    return timestamps, poses


def _locality_order(points):
    """Greedy nearest-neighbor chain: neighboring rows get nearby indices.

    Landmark order is free for sampled sets; storing them in space-local
    order keeps the query path's kernel-block gathers cache-friendly.
    """
    pts = np.asarray(points)
    n = len(pts)
    order = np.empty(n, dtype=np.int64)
    visited = np.zeros(n, dtype=bool)
    cur = 0
    for pos in range(n):
        order[pos] = cur
        visited[cur] = True
        if pos == n - 1:
            break
        d2 = ((pts - pts[cur]) ** 2).sum(axis=1)
        d2[visited] = np.inf
        cur = int(np.argmin(d2))
    return order


def _unique_keep_order(configs):
    _, first = np.unique(configs, axis=0, return_index=True)
    return configs[np.sort(first)]


def sample_landmark_set(schema, count, seed, jitter=0.06):
    """Landmark pairs (FK image, config) sampled from the motion manifold.

    The rest pose and the benchmark poses are always included (a capture
    session visits them), and configurations are deduplicated before pairing
    since the direct constructor rejects duplicate human poses.
    """
    configs = _unique_keep_order(
        sample_motion_configs(schema, count + 16, seed, jitter=jitter)
    )[:count]
    rng = np.random.default_rng(seed + 1)
    while len(configs) < count:
        extra = sample_motion_configs(schema, count, int(rng.integers(0, 2**32)), jitter=jitter)
        configs = _unique_keep_order(np.vstack([configs, extra]))[:count]
    configs = configs[_locality_order(configs)]
    poses = fk_batch(configs, schema)
    return landmarks_from_pairs(
        poses, configs, schema, source_digest=digest_frames(poses)
    )


def landmark_set_from_configs(schema, configs):
    """Landmark pairs for explicitly given configurations, locality-ordered."""
    configs = np.asarray(configs, dtype=np.float64)
    configs = configs[_locality_order(configs)]
    poses = fk_batch(configs, schema)
    return landmarks_from_pairs(poses, configs, schema, source_digest=digest_frames(poses))


def sample_query_poses(schema, count, seed, jitter=0.05):
    """Query poses near the motion manifold (FK images of jittered configs)."""
    configs = sample_motion_configs(schema, count, seed, jitter=jitter, include_anchors=False)
    return fk_batch(configs, schema), configs
