"""Configuration projection: map a human pose to a humanoid configuration.

Given a query pose, the nearest human landmarks each propose a candidate
configuration through their forward kernels.  Candidates are scored by
back-projected deviation: each candidate is pushed through the backward
kernels of its nearest humanoid landmarks, and the distance between the
back-projected pose and the query (minimized over those kernels) is the
candidate's score.  Two solvers share this scoring rule:

* relaxed -- score the candidate points directly and keep the best one.
  This is the real-time path; it runs as a compiled kernel.
* exact -- per candidate cluster, optimize a convex combination of the
  cluster's humanoid landmarks over the probability simplex, minimizing the
  back-projected deviation of the combined point; keep the cluster with the
  smallest optimum.  Deterministic grid search plus projected pattern
  descent, seeded additionally with the simplex projection of the
  candidate itself.

Tie rules are part of the contract: neighbor lists order by (distance,
landmark index); cluster selection breaks deviation ties by the seed
landmark's distance to the query, then by lower index.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit
from scipy.optimize import nnls
from scipy.special import expit

from .errors import EngineInvalid, NumericFailure
from .kernelstore import knn_indices
from .kinematics import load_schema

DEFAULT_CANDIDATES = 10        # nearest human landmarks consulted per query
DEFAULT_BACKWARD = 10          # backward kernels consulted per candidate
DEFAULT_GRID_RESOLUTION = 8
DEFAULT_DESCENT_STEPS = 50

MODES = ("relaxed", "exact")
EXACT_OUTPUTS = ("combination", "candidate")

# Reassociated/contracted reductions let the compiler vectorize the distance
# and kernel loops; values may differ from the numpy path in the last ulp.
_FASTMATH = {"reassoc", "contract", "nsz", "arcp"}


@dataclass(frozen=True)
class ProjectionResult:
    config: np.ndarray      # (n,) clamped humanoid configuration
    deviation: float        # back-projected deviation, human-space norm
    chosen_cluster: int     # landmark index of the winning candidate cluster
    weights: object         # exact: (M,) simplex vector; relaxed: winning backward slot
    elapsed: float          # seconds spent inside the solver


@dataclass(frozen=True)
class ProjectionEngine:
    """Immutable bundle of a kernel store plus solver parameters."""

    store: object
    n_candidates: int = DEFAULT_CANDIDATES
    n_backward: int = DEFAULT_BACKWARD
    mode: str = "relaxed"
    exact_output: str = "combination"
    grid_resolution: int = DEFAULT_GRID_RESOLUTION
    descent_steps: int = DEFAULT_DESCENT_STEPS
    joint_min: np.ndarray = None
    joint_max: np.ndarray = None

    def __post_init__(self):
        store = self.store
        if store is None or len(store) == 0:
            raise EngineInvalid("projection engine requires a nonempty kernel store")
        n = len(store)
        if not 1 <= self.n_candidates <= n:
            raise ValueError(f"n_candidates must be in [1, {n}], got {self.n_candidates}")
        if not 1 <= self.n_backward <= n:
            raise ValueError(f"n_backward must be in [1, {n}], got {self.n_backward}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.exact_output not in EXACT_OUTPUTS:
            raise ValueError(f"exact_output must be one of {EXACT_OUTPUTS}, got {self.exact_output!r}")
        if self.grid_resolution < 1:
            raise ValueError("grid_resolution must be >= 1")
        if self.joint_min is None or self.joint_max is None:
            schema = load_schema(store.landmarks.schema_name)
            object.__setattr__(self, "joint_min", schema.joint_min)
            object.__setattr__(self, "joint_max", schema.joint_max)

    def project(self, pose):
        if self.mode == "relaxed":
            return project_relaxed(self, pose)
        return project_exact(self, pose)


# absolute slack on the projection lower bound: prunes stay exact under
# float rounding for data on the package's unit-vector/radian scales
_PRUNE_GUARD = 1e-12

_NO_INDEX = 1 << 62


@njit(cache=True, fastmath=_FASTMATH)
def _knn_axis(sorted_pts, proj, orig, axis, q, count, out_idx, out_d2):
    """Exact k nearest rows, ascending (squared distance, original index).

    Rows are pre-sorted by their projection on a unit axis; the scan expands
    outward from the query's projection and stops a side once the projection
    gap (a lower bound on distance) can no longer beat the k-th best.
    """
    n, dim = sorted_pts.shape
    for s in range(count):
        out_d2[s] = np.inf
        out_idx[s] = _NO_INDEX
    p = 0.0
    for t in range(dim):
        p += q[t] * axis[t]
    lo = 0
    hi = n
    while lo < hi:
        mid = (lo + hi) // 2
        if proj[mid] < p:
            lo = mid + 1
        else:
            hi = mid
    left = lo - 1
    right = lo
    worst = np.inf
    filled = 0
    while left >= 0 or right < n:
        bl = p - proj[left] if left >= 0 else np.inf
        br = proj[right] - p if right < n else np.inf
        if bl <= br:
            i = left
            bound = bl
            side_left = True
        else:
            i = right
            bound = br
            side_left = False
        b_adj = bound - _PRUNE_GUARD
        if filled >= count and b_adj > 0.0 and b_adj * b_adj > worst:
            if side_left:
                left = -1
                o_adj = br - _PRUNE_GUARD
                if br == np.inf or (o_adj > 0.0 and o_adj * o_adj > worst):
                    break
            else:
                right = n
                o_adj = bl - _PRUNE_GUARD
                if bl == np.inf or (o_adj > 0.0 and o_adj * o_adj > worst):
                    break
            continue
        if side_left:
            left -= 1
        else:
            right += 1
        d2 = 0.0
        for t in range(dim):
            dd = sorted_pts[i, t] - q[t]
            d2 += dd * dd
        oi = orig[i]
        w = out_d2[count - 1]
        if d2 < w or (d2 == w and oi < out_idx[count - 1]):
            pp = count - 1
            while pp > 0 and (out_d2[pp - 1] > d2 or (out_d2[pp - 1] == d2 and out_idx[pp - 1] > oi)):
                out_d2[pp] = out_d2[pp - 1]
                out_idx[pp] = out_idx[pp - 1]
                pp -= 1
            out_d2[pp] = d2
            out_idx[pp] = oi
            worst = out_d2[count - 1]
        filled += 1


@njit(cache=True, fastmath=_FASTMATH)
def _relaxed_core(q, h_sorted, h_proj, h_orig, h_axis,
                  r_sorted, r_proj, r_orig, r_axis, fw_pack, bw_pack,
                  n_candidates, n_backward, lo, hi, out):
    # packed kernel blocks: fw rows are [weights(m) | bias | output(n)],
    # bw rows are [weights(n) | bias | output(m)]
    m = h_sorted.shape[1]
    n = r_sorted.shape[1]
    k = fw_pack.shape[1]
    idx_l = np.empty(n_candidates, np.int64)
    d_l = np.empty(n_candidates)
    cand = np.empty((n_candidates, n))
    idx_m = np.empty(n_backward, np.int64)
    d_m = np.empty(n_backward)
    hid = np.empty(k)
    _knn_axis(h_sorted, h_proj, h_orig, h_axis, q, n_candidates, idx_l, d_l)
    best_j = 0
    best_slot = -1
    best_dev = np.inf
    best_seed = np.inf
    for j in range(n_candidates):
        blk = fw_pack[idx_l[j]]
        for t in range(n):
            cand[j, t] = 0.0
        for a in range(k):
            z = blk[a, m]
            for t in range(m):
                z += blk[a, t] * q[t]
            g = 1.0 / (1.0 + math.exp(-z))
            for t in range(n):
                cand[j, t] += g * blk[a, m + 1 + t]
        _knn_axis(r_sorted, r_proj, r_orig, r_axis, cand[j], n_backward, idx_m, d_m)
        dev_j = np.inf
        slot_j = -1
        for s in range(n_backward):
            blk2 = bw_pack[idx_m[s]]
            for a in range(k):
                z = blk2[a, n]
                for t in range(n):
                    z += blk2[a, t] * cand[j, t]
                hid[a] = 1.0 / (1.0 + math.exp(-z))
            dev = 0.0
            for t in range(m):
                acc = 0.0
                for a in range(k):
                    acc += hid[a] * blk2[a, n + 1 + t]
                dd = acc - q[t]
                dev += dd * dd
            if dev < dev_j:
                dev_j = dev
                slot_j = s
        if dev_j < best_dev or (dev_j == best_dev and d_l[j] < best_seed):
            best_dev = dev_j
            best_seed = d_l[j]
            best_j = j
            best_slot = slot_j
    for t in range(n):
        v = cand[best_j, t]
        if v < lo[t]:
            v = lo[t]
        elif v > hi[t]:
            v = hi[t]
        out[t] = v
    return idx_l[best_j], best_slot, math.sqrt(best_dev)


def project_relaxed(engine, pose):
    """Project by scoring the candidate points directly (real-time path)."""
    store = engine.store
    q = np.ascontiguousarray(pose, dtype=np.float64)
    if q.shape != (store.human_dim,):
        raise ValueError(f"pose has shape {q.shape}, engine expects ({store.human_dim},)")
    out = np.empty(store.humanoid_dim)
    hs, hp, ho, ha = store.axis_human
    rs, rp, ro, ra = store.axis_humanoid
    t0 = time.perf_counter()
    cluster, slot, dev = _relaxed_core(
        q, hs, hp, ho, ha, rs, rp, ro, ra,
        store.fw_pack, store.bw_pack,
        engine.n_candidates, engine.n_backward,
        engine.joint_min, engine.joint_max, out,
    )
    elapsed = time.perf_counter() - t0
    return ProjectionResult(
        config=out,
        deviation=float(dev),
        chosen_cluster=int(cluster),
        weights=int(slot),
        elapsed=elapsed,
    )


def choose_cluster(deviations, seed_distances=None):
    """Index of the smallest deviation.

    Ties go to the cluster whose seed landmark is closer to the query (when
    distances are supplied), then to the lower index.  A NaN deviation is a
    numeric failure naming the cluster; non-finite values violate the
    contract otherwise.
    """
    devs = np.asarray(deviations, dtype=np.float64)
    if devs.ndim != 1 or devs.size == 0:
        raise ValueError("deviations must be a nonempty 1-D sequence")
    for i, v in enumerate(devs):
        if math.isnan(v):
            raise NumericFailure(f"deviation for cluster {i} is NaN")
        if math.isinf(v):
            raise ValueError(f"deviation for cluster {i} is not finite")
    sd = None
    if seed_distances is not None:
        sd = np.asarray(seed_distances, dtype=np.float64)
        if sd.shape != devs.shape:
            raise ValueError("seed_distances must match deviations in length")
    best = 0
    for i in range(1, devs.size):
        if devs[i] < devs[best]:
            best = i
        elif devs[i] == devs[best] and sd is not None and sd[i] < sd[best]:
            best = i
    return best


@lru_cache(maxsize=32)
def _simplex_grid(m, resolution):
    """All barycentric weight vectors with denominator ``resolution``."""
    if m == 1:
        grid = np.ones((1, 1))
    else:
        combos = itertools.combinations(range(resolution + m - 1), m - 1)
        rows = []
        for bars in combos:
            prev = -1
            counts = []
            for b in bars:
                counts.append(b - prev - 1)
                prev = b
            counts.append(resolution + m - 2 - prev)
            rows.append(counts)
        grid = np.asarray(rows, dtype=np.float64) / resolution
    grid.flags.writeable = False
    return grid


def _forward_candidates(store, idx_l, q):
    w = store.fw_weights[idx_l]
    c = store.fw_biases[idx_l]
    b = store.fw_out[idx_l]
    hidden = expit(np.matmul(w, q) + c)
    return np.matmul(hidden[:, None, :], b)[:, 0, :]


def _backward_min_dev(store, bidx, points, q):
    """min-over-kernel back-projected deviation for each row of ``points``.

    ``bidx`` are the landmark indices whose backward kernels vouch for the
    cluster; returns a (len(points),) array of norms.
    """
    pts = np.atleast_2d(points)
    best = np.full(pts.shape[0], np.inf)
    for bi in bidx:
        hidden = expit(pts @ store.bw_weights[bi].T + store.bw_biases[bi])
        back = hidden @ store.bw_out[bi]
        d = np.linalg.norm(back - q, axis=1)
        np.minimum(best, d, out=best)
    return best


def _simplex_seed(neighbors, target):
    """Least-squares projection of ``target`` onto the simplex of rows.

    Solved as nonnegative least squares with a strongly weighted sum-to-one
    row, then renormalized.  Returns None when degenerate.
    """
    m = neighbors.shape[0]
    rho = 10.0 * (1.0 + float(np.abs(neighbors).max()))
    a = np.vstack([neighbors.T, np.full((1, m), rho)])
    b = np.concatenate([target, [rho]])
    w, _ = nnls(a, b)
    s = w.sum()
    if s <= 1e-12:
        return None
    return w / s


def _optimize_cluster(engine, bidx, seeds, q):
    """Minimize back-projected deviation over the simplex of one cluster."""
    store = engine.store
    neighbors = store.landmarks.humanoid[list(bidx)]
    m = neighbors.shape[0]

    def evaluate(weights2d):
        return _backward_min_dev(store, bidx, weights2d @ neighbors, q)

    grid = _simplex_grid(m, engine.grid_resolution)
    cand_w = [grid]
    for seed in seeds:
        if seed is not None:
            cand_w.append(seed[None, :])
    pool = np.vstack(cand_w)
    vals = evaluate(pool)
    best = int(np.argmin(vals))
    w = pool[best].copy()
    value = float(vals[best])

    if m > 1:
        step = 1.0 / (2.0 * engine.grid_resolution)
        pairs = [(a, b) for a in range(m) for b in range(m) if a != b]
        for _ in range(engine.descent_steps):
            moves = []
            for a, b in pairs:
                if w[b] >= step:
                    mv = w.copy()
                    mv[a] += step
                    mv[b] -= step
                    moves.append(mv)
            if moves:
                mv_arr = np.asarray(moves)
                mv_vals = evaluate(mv_arr)
                i = int(np.argmin(mv_vals))
                if mv_vals[i] < value:
                    value = float(mv_vals[i])
                    w = mv_arr[i]
                    continue
            step *= 0.5
            if step < 1e-9:
                break
    return value, w


def project_exact(engine, pose):
    """Project by optimizing simplex combinations per candidate cluster."""
    store = engine.store
    q = np.ascontiguousarray(pose, dtype=np.float64)
    if q.shape != (store.human_dim,):
        raise ValueError(f"pose has shape {q.shape}, engine expects ({store.human_dim},)")
    t0 = time.perf_counter()
    idx_l, d_l = knn_indices(store.landmarks.human, q, engine.n_candidates, with_distances=True)
    cands = _forward_candidates(store, idx_l, q)

    clusters = []   # backward index tuple per candidate
    seeds = {}      # tuple -> list of simplex seeds
    for j in range(len(idx_l)):
        bidx = tuple(knn_indices(store.landmarks.humanoid, cands[j], engine.n_backward))
        clusters.append(bidx)
        seeds.setdefault(bidx, []).append(
            _simplex_seed(store.landmarks.humanoid[list(bidx)], cands[j])
        )
    solved = {
        bidx: _optimize_cluster(engine, bidx, sds, q) for bidx, sds in seeds.items()
    }
    devs = np.asarray([solved[c][0] for c in clusters])
    best = choose_cluster(devs, d_l)
    value, w = solved[clusters[best]]
    if engine.exact_output == "combination":
        point = w @ store.landmarks.humanoid[list(clusters[best])]
    else:
        point = cands[best]
    config = np.clip(point, engine.joint_min, engine.joint_max)
    elapsed = time.perf_counter() - t0
    return ProjectionResult(
        config=config,
        deviation=float(value),
        chosen_cluster=int(idx_l[best]),
        weights=w,
        elapsed=elapsed,
    )
