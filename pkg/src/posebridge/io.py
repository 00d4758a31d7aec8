"""File formats: versioned JSON documents, JSONL recordings, atomic writes.

Every file this package writes carries a ``format_version`` field.  Writers
go through :func:`atomic_write_text` so a failed run never leaves a partial
file behind.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

import numpy as np

RECORDING_FORMAT_VERSION = 1


def atomic_write_text(path, text):
    """Write ``text`` to ``path`` via a temp file + rename in one step."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def dump_json(obj):
    """Canonical JSON text: sorted keys, newline-terminated, full float repr."""
    return json.dumps(obj, sort_keys=True, separators=(",", ": "), indent=1) + "\n"


def write_json(path, obj):
    atomic_write_text(path, dump_json(obj))


def read_json(path, expected_type=None):
    with open(path) as fh:
        data = json.load(fh)
    if expected_type is not None and data.get("type") != expected_type:
        raise ValueError(
            f"{path}: expected a {expected_type!r} document, got {data.get('type')!r}"
        )
    return data


def sha256_hex(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def digest_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def digest_frames(frames: np.ndarray) -> str:
    arr = np.ascontiguousarray(frames, dtype=np.float64)
    return sha256_hex(arr.tobytes() + str(arr.shape).encode())


def write_recording(path, timestamps, poses, schema_name):
    """Write a motion recording as JSONL: a header line, then one frame per line.

    Frames are ``{"t": seconds, "pose": [...]}`` with strictly increasing
    timestamps.
    """
    ts = np.asarray(timestamps, dtype=np.float64)
    arr = np.asarray(poses, dtype=np.float64)
    if arr.ndim != 2 or ts.shape != (arr.shape[0],):
        raise ValueError("poses must be (frames, dim) with one timestamp per frame")
    if np.any(np.diff(ts) <= 0):
        raise ValueError("timestamps must be strictly increasing")
    header = {
        "format_version": RECORDING_FORMAT_VERSION,
        "type": "recording",
        "human_schema": schema_name,
        "dim": arr.shape[1],
        "frames": arr.shape[0],
    }
    lines = [json.dumps(header, sort_keys=True)]
    for t, row in zip(ts, arr):
        lines.append(json.dumps({"t": t, "pose": row.tolist()}))
    atomic_write_text(path, "\n".join(lines) + "\n")


def read_recording(path):
    """Read a JSONL recording; returns (timestamps, poses, header dict)."""
    timestamps, rows = [], []
    header = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "t" not in obj:
                if header is not None:
                    raise ValueError(f"{path}:{lineno}: duplicate header line")
                if obj.get("type") != "recording":
                    raise ValueError(f"{path}:{lineno}: not a recording header")
                if obj.get("format_version") != RECORDING_FORMAT_VERSION:
                    raise ValueError(
                        f"{path}:{lineno}: unsupported recording format_version "
                        f"{obj.get('format_version')!r}"
                    )
                header = obj
                continue
            timestamps.append(float(obj["t"]))
            rows.append(obj["pose"])
    if header is None:
        raise ValueError(f"{path}: missing recording header line")
    if not rows:
        raise ValueError(f"{path}: recording has no frames")
    poses = np.asarray(rows, dtype=np.float64)
    if poses.shape[1] != header["dim"]:
        raise ValueError(f"{path}: frame dimension {poses.shape[1]} != header dim {header['dim']}")
    ts = np.asarray(timestamps)
    if np.any(np.diff(ts) <= 0):
        raise ValueError(f"{path}: timestamps must be strictly increasing")
    return ts, poses, header
