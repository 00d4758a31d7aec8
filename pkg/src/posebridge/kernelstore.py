"""Per-landmark kernel banks with exact nearest-neighbor retrieval.

For every landmark i the store holds two kernels trained on the pairs of
its k nearest neighbors (self included):

* ``forward[i]``  : human pose -> humanoid config, neighbors taken in human
  space around the i-th human landmark;
* ``backward[i]`` : humanoid config -> human pose, neighbors taken in
  humanoid space around the i-th humanoid landmark.

Each kernel uses ``hidden_count == k`` so it (near-)interpolates its own
training pairs.  Per-kernel seeds are ``seed ^ index`` with backward
kernels offset by the landmark count, so all 2N hidden layers differ.

Neighbor search is exact vectorized brute force ordered by
(distance, landmark index); at the store sizes this package targets it
beats space-partitioning trees in these dimensions and keeps the tie rule
bit-deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import elm
from .landmarks import LandmarkSet, landmarks_from_dict, landmarks_to_dict
from . import io

STORE_FORMAT_VERSION = 1

DEFAULT_STORE_REGULARIZATION = 1e-8


def knn_indices(points, query, count, with_distances=False):
    """Indices of the ``count`` nearest rows of ``points`` to ``query``.

    Exact Euclidean search; ascending distance with ties broken by lower
    row index.
    """
    pts = np.asarray(points, dtype=np.float64)
    q = np.asarray(query, dtype=np.float64)
    n = pts.shape[0]
    if not 1 <= count <= n:
        raise ValueError(f"neighbor count must be in [1, {n}], got {count}")
    diff = pts - q
    d2 = np.einsum("ij,ij->i", diff, diff)
    if count == n:
        ids = np.arange(n)
    else:
        part = np.argpartition(d2, count - 1)[:count]
        ids = np.flatnonzero(d2 <= d2[part].max())
    order = np.lexsort((ids, d2[ids]))
    chosen = ids[order][:count]
    if with_distances:
        return chosen, np.sqrt(d2[chosen])
    return chosen


@dataclass(frozen=True)
class KernelStore:
    landmarks: LandmarkSet
    k: int
    regularization: float
    seed: int
    forward: tuple                  # N ElmKernel, human -> humanoid
    backward: tuple                 # N ElmKernel, humanoid -> human
    forward_neighbors: np.ndarray   # (N, k) landmark indices
    backward_neighbors: np.ndarray  # (N, k)
    # packed parameter tensors for the vectorized/jitted query paths:
    # block layout per landmark is [hidden weights | bias | output weights]
    fw_pack: np.ndarray = field(repr=False, default=None)  # (N, k, m + 1 + n)
    bw_pack: np.ndarray = field(repr=False, default=None)  # (N, k, n + 1 + m)
    # landmarks sorted along the principal axis of each space, so exact kNN
    # can expand a window around the query's projection and prune by the
    # projection lower bound; tuples are (sorted pts, projections, original
    # indices, unit axis)
    axis_human: tuple = field(repr=False, default=None)
    axis_humanoid: tuple = field(repr=False, default=None)

    def __len__(self):
        return len(self.landmarks)

    @property
    def human_dim(self):
        return self.landmarks.human_dim

    @property
    def humanoid_dim(self):
        return self.landmarks.humanoid_dim

    # unpacked views for the numpy evaluation paths
    @property
    def fw_weights(self):
        return self.fw_pack[:, :, : self.human_dim]

    @property
    def fw_biases(self):
        return self.fw_pack[:, :, self.human_dim]

    @property
    def fw_out(self):
        return self.fw_pack[:, :, self.human_dim + 1:]

    @property
    def bw_weights(self):
        return self.bw_pack[:, :, : self.humanoid_dim]

    @property
    def bw_biases(self):
        return self.bw_pack[:, :, self.humanoid_dim]

    @property
    def bw_out(self):
        return self.bw_pack[:, :, self.humanoid_dim + 1:]


def _neighbor_table(points, k):
    """All-pairs exact kNN table with self-inclusion guaranteed."""
    pts = np.asarray(points, dtype=np.float64)
    n = pts.shape[0]
    sq = np.einsum("ij,ij->i", pts, pts)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
    np.maximum(d2, 0.0, out=d2)
    table = np.empty((n, k), dtype=np.int64)
    cols = np.arange(n)
    for i in range(n):
        row = d2[i]
        if k == n:
            ids = cols
        else:
            part = np.argpartition(row, k - 1)[:k]
            ids = np.flatnonzero(row <= row[part].max())
        order = np.lexsort((ids, row[ids]))
        chosen = ids[order][:k]
        if i not in chosen:
            # duplicate landmarks can crowd out the self pair; keep it anyway
            chosen = chosen.copy()
            chosen[-1] = i
            chosen = chosen[np.lexsort((chosen, row[chosen]))]
        table[i] = chosen
    return table


def _axis_index(points):
    """Sort points along their first principal axis for windowed exact kNN."""
    pts = np.asarray(points, dtype=np.float64)
    centered = pts - pts.mean(axis=0)
    vt = np.linalg.svd(centered, full_matrices=False)[2]
    axis = vt[0] / np.linalg.norm(vt[0])
    proj = pts @ axis
    order = np.lexsort((np.arange(len(pts)), proj))
    sorted_pts = np.ascontiguousarray(pts[order])
    proj_sorted = np.ascontiguousarray(proj[order])
    orig = np.ascontiguousarray(order.astype(np.int64))
    axis = np.ascontiguousarray(axis)
    for arr in (sorted_pts, proj_sorted, orig, axis):
        arr.flags.writeable = False
    return sorted_pts, proj_sorted, orig, axis


def _pack(kernels, in_dim, out_dim, k):
    """Per-landmark parameter blocks laid out as [weights | bias | output].

    One contiguous (k, in_dim + 1 + out_dim) block per kernel keeps the
    query path's gathers sequential in memory.
    """
    n = len(kernels)
    pack = np.empty((n, k, in_dim + 1 + out_dim))
    for i, kr in enumerate(kernels):
        pack[i, :, :in_dim] = kr.hidden_weights
        pack[i, :, in_dim] = kr.hidden_biases
        pack[i, :, in_dim + 1:] = kr.output_weights
    pack.flags.writeable = False
    return pack


def build_store(landmarks, k, regularization=DEFAULT_STORE_REGULARIZATION, seed=0):
    """Train the 2N kernels over a landmark set and index both spaces."""
    n = len(landmarks)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    h, r = landmarks.human, landmarks.humanoid
    nbr_h = _neighbor_table(h, k)
    nbr_r = _neighbor_table(r, k)
    forward = tuple(
        elm.train(h[nbr_h[i]], r[nbr_h[i]], k, regularization, seed ^ i)
        for i in range(n)
    )
    backward = tuple(
        elm.train(r[nbr_r[i]], h[nbr_r[i]], k, regularization, seed ^ (n + i))
        for i in range(n)
    )
    nbr_h.flags.writeable = False
    nbr_r.flags.writeable = False
    return KernelStore(
        landmarks=landmarks,
        k=int(k),
        regularization=float(regularization),
        seed=int(seed),
        forward=forward,
        backward=backward,
        forward_neighbors=nbr_h,
        backward_neighbors=nbr_r,
        fw_pack=_pack(forward, landmarks.human_dim, landmarks.humanoid_dim, k),
        bw_pack=_pack(backward, landmarks.humanoid_dim, landmarks.human_dim, k),
        axis_human=_axis_index(landmarks.human),
        axis_humanoid=_axis_index(landmarks.humanoid),
    )


def nearest_human(store, pose, count):
    """Landmark indices nearest to ``pose`` in human space, ascending."""
    q = np.asarray(pose, dtype=np.float64)
    if q.shape != (store.human_dim,):
        raise ValueError(f"pose has shape {q.shape}, store expects ({store.human_dim},)")
    return knn_indices(store.landmarks.human, q, count)


def nearest_humanoid(store, config, count):
    """Landmark indices nearest to ``config`` in humanoid space, ascending."""
    q = np.asarray(config, dtype=np.float64)
    if q.shape != (store.humanoid_dim,):
        raise ValueError(f"config has shape {q.shape}, store expects ({store.humanoid_dim},)")
    return knn_indices(store.landmarks.humanoid, q, count)


def store_to_dict(store):
    return {
        "format_version": STORE_FORMAT_VERSION,
        "type": "kernel_store",
        "k": store.k,
        "regularization": store.regularization,
        "seed": store.seed,
        "landmarks": landmarks_to_dict(store.landmarks),
        "forward": [elm.kernel_to_dict(kr) for kr in store.forward],
        "backward": [elm.kernel_to_dict(kr) for kr in store.backward],
    }


def store_from_dict(data):
    if data.get("format_version") != STORE_FORMAT_VERSION:
        raise ValueError(f"unsupported kernel_store format_version: {data.get('format_version')!r}")
    landmarks = landmarks_from_dict(data["landmarks"])
    n = len(landmarks)
    k = int(data["k"])
    forward = tuple(elm.kernel_from_dict(d) for d in data["forward"])
    backward = tuple(elm.kernel_from_dict(d) for d in data["backward"])
    if len(forward) != n or len(backward) != n:
        raise ValueError("kernel_store holds a kernel count different from its landmark count")
    nbr_h = _neighbor_table(landmarks.human, k)
    nbr_r = _neighbor_table(landmarks.humanoid, k)
    nbr_h.flags.writeable = False
    nbr_r.flags.writeable = False
    return KernelStore(
        landmarks=landmarks,
        k=k,
        regularization=float(data["regularization"]),
        seed=int(data["seed"]),
        forward=forward,
        backward=backward,
        forward_neighbors=nbr_h,
        backward_neighbors=nbr_r,
        fw_pack=_pack(forward, landmarks.human_dim, landmarks.humanoid_dim, k),
        bw_pack=_pack(backward, landmarks.humanoid_dim, landmarks.human_dim, k),
        axis_human=_axis_index(landmarks.human),
        axis_humanoid=_axis_index(landmarks.humanoid),
    )


def save_store(path, store):
    io.write_json(path, store_to_dict(store))


def load_store(path):
    return store_from_dict(io.read_json(path, expected_type="kernel_store"))
