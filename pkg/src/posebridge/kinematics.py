"""Skeleton schemas plus forward/inverse kinematics for the desk model.

A *human pose* is a flat float64 vector of concatenated unit bone vectors
(dimension m = 3 * bone_count); a *humanoid configuration* is a flat vector
of joint angles in radians (dimension n).  Both are plain numpy arrays.

Two schemas ship with the package:

* ``desk10`` -- 8 bones / 10 joints, with closed-form forward kinematics and
  an exact analytic inverse.  This is the model everything is tested
  against, because its inverse supplies ground truth.
* ``nao26`` -- a full 26-DOF humanoid with a 19-bone human descriptor,
  carried as data only (limits, bookkeeping, benchmark poses); it has no
  analytic chain here, so FK/IK raise for it.

Desk conventions (x forward, y left, z up):

* gaze bone      = Rz(head_yaw) Ry(-head_pitch) x_hat
* upper arm bone = Ry(-shoulder_pitch) Rx(shoulder_roll) (-z_hat)
* forearm bone   = U (sin(ey) sin(er), cos(ey) sin(er), -cos(er))
  where U = Ry(-pitch) Rx(roll) is the upper-arm frame, ey the elbow yaw
  (twist about the upper-arm axis) and er the elbow roll (bend; 0 = straight
  arm, which leaves the yaw axis undefined -- the inverse resolves that tie
  by returning yaw 0).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DegeneratePoseError

SCHEMA_FORMAT_VERSION = 1

# axis-undefined threshold for inverse kinematics
_DEGENERATE_TOL = 1e-9

BUILTIN_SCHEMAS = ("desk10", "nao26")


@dataclass(frozen=True)
class SkeletonSchema:
    name: str
    model: str  # "desk10" (analytic) or "data"
    bone_names: tuple
    rest_directions: np.ndarray  # (bone_count, 3)
    joint_names: tuple
    joint_min: np.ndarray  # (n,)
    joint_max: np.ndarray  # (n,)
    benchmark_poses: dict  # name -> (n,) config

    @property
    def bone_count(self):
        return len(self.bone_names)

    @property
    def human_dim(self):
        return 3 * len(self.bone_names)

    @property
    def humanoid_dim(self):
        return len(self.joint_names)

    @property
    def has_analytic_chain(self):
        return self.model == "desk10"


def _schema_from_dict(data):
    if data.get("format_version") != SCHEMA_FORMAT_VERSION:
        raise ValueError(f"unsupported schema format_version: {data.get('format_version')!r}")
    if data.get("type") != "skeleton_schema":
        raise ValueError("not a skeleton schema document")
    bones = data["bones"]
    joints = data["joints"]
    rest = np.asarray([b["rest_direction"] for b in bones], dtype=np.float64)
    rest.flags.writeable = False
    jmin = np.asarray([j["min"] for j in joints], dtype=np.float64)
    jmax = np.asarray([j["max"] for j in joints], dtype=np.float64)
    jmin.flags.writeable = False
    jmax.flags.writeable = False
    poses = {}
    for pname, vals in data["benchmark_poses"].items():
        arr = np.asarray(vals, dtype=np.float64)
        if arr.shape != (len(joints),):
            raise ValueError(f"benchmark pose {pname!r} has wrong dimension")
        arr.flags.writeable = False
        poses[pname] = arr
    if len(poses) != 8:
        raise ValueError(f"schema must define exactly eight benchmark poses, got {len(poses)}")
    schema = SkeletonSchema(
        name=data["name"],
        model=data["model"],
        bone_names=tuple(b["name"] for b in bones),
        rest_directions=rest,
        joint_names=tuple(j["name"] for j in joints),
        joint_min=jmin,
        joint_max=jmax,
        benchmark_poses=poses,
    )
    if schema.model == "desk10":
        _check_desk_layout(schema)
    return schema


_DESK_JOINTS = (
    "head_yaw", "head_pitch",
    "l_shoulder_pitch", "l_shoulder_roll", "l_elbow_yaw", "l_elbow_roll",
    "r_shoulder_pitch", "r_shoulder_roll", "r_elbow_yaw", "r_elbow_roll",
)
_DESK_BONES = (
    "torso", "gaze", "l_clavicle", "l_upper_arm", "l_forearm",
    "r_clavicle", "r_upper_arm", "r_forearm",
)


def _check_desk_layout(schema):
    if schema.joint_names != _DESK_JOINTS or schema.bone_names != _DESK_BONES:
        raise ValueError("desk10 model requires the canonical bone/joint layout")


def load_schema(name_or_path):
    """Load a built-in schema by name or any schema JSON by path."""
    if name_or_path in BUILTIN_SCHEMAS:
        text = resources.files("posebridge.schemas").joinpath(f"{name_or_path}.json").read_text()
    else:
        text = Path(name_or_path).read_text()
    return _schema_from_dict(json.loads(text))


def schema_digest(schema):
    """Stable digest of the schema's semantic content."""
    import hashlib

    canonical = json.dumps(
        {
            "name": schema.name,
            "model": schema.model,
            "bones": list(schema.bone_names),
            "rest": schema.rest_directions.tolist(),
            "joints": list(schema.joint_names),
            "min": schema.joint_min.tolist(),
            "max": schema.joint_max.tolist(),
            "benchmark_poses": {k: v.tolist() for k, v in sorted(schema.benchmark_poses.items())},
        },
        sort_keys=True,
    )
    return "sha256:" + hashlib.sha256(canonical.encode()).hexdigest()


def rest_config(schema):
    return np.zeros(schema.humanoid_dim)


def validate_config(schema, config, what="config"):
    """Return the config as float64, raising if out of dimension or limits."""
    c = np.asarray(config, dtype=np.float64)
    if c.shape != (schema.humanoid_dim,):
        raise ValueError(f"{what} has shape {c.shape}, schema expects ({schema.humanoid_dim},)")
    if not np.all(np.isfinite(c)):
        raise ValueError(f"{what} contains non-finite values")
    bad = (c < schema.joint_min - 1e-12) | (c > schema.joint_max + 1e-12)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(
            f"{what}: joint {schema.joint_names[i]!r} = {c[i]:.6f} outside "
            f"[{schema.joint_min[i]:.6f}, {schema.joint_max[i]:.6f}]"
        )
    return c


def validate_pose(schema, pose, what="pose"):
    """Return the pose as float64, raising on bad shape or non-unit bones."""
    p = np.asarray(pose, dtype=np.float64)
    if p.shape != (schema.human_dim,):
        raise ValueError(f"{what} has shape {p.shape}, schema expects ({schema.human_dim},)")
    norms = np.linalg.norm(p.reshape(-1, 3), axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-6):
        i = int(np.argmax(np.abs(norms - 1.0)))
        raise ValueError(f"{what}: bone {schema.bone_names[i]!r} has norm {norms[i]:.8f}, expected 1")
    return p


def clamp_config(schema, config):
    return np.clip(config, schema.joint_min, schema.joint_max)


def normalize_pose(pose_like):
    """Renormalize each 3-vector of a flat pose to unit length.

    Raises ValueError if any bone collapses to (numerically) zero length,
    which makes its direction undefined.
    """
    p = np.asarray(pose_like, dtype=np.float64).copy()
    bones = p.reshape(-1, 3)
    norms = np.linalg.norm(bones, axis=1)
    if np.any(norms < 1e-9):
        raise ValueError(f"bone {int(np.argmin(norms))} has near-zero length, direction undefined")
    bones /= norms[:, None]
    return bones.ravel()


def _require_analytic(schema):
    if not schema.has_analytic_chain:
        raise ValueError(
            f"schema {schema.name!r} carries no analytic kinematic chain; "
            "forward/inverse kinematics support the desk10 model only"
        )


def forward_kinematics(config, schema):
    """Unit bone directions of the humanoid posed at ``config``.

    Raises ValueError when any joint is outside its limits.
    """
    _require_analytic(schema)
    c = validate_config(schema, config)
    return _fk_batch_desk(c[None, :])[0]


def fk_batch(configs, schema):
    """Vectorized :func:`forward_kinematics` over rows of ``configs``."""
    _require_analytic(schema)
    arr = np.asarray(configs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != schema.humanoid_dim:
        raise ValueError(f"configs must have shape (*, {schema.humanoid_dim})")
    lo, hi = schema.joint_min, schema.joint_max
    if np.any(arr < lo - 1e-12) or np.any(arr > hi + 1e-12):
        raise ValueError("some configuration is outside joint limits")
    return _fk_batch_desk(arr)


def _fk_batch_desk(c):
    f = c.shape[0]
    out = np.empty((f, 24))
    # fixed bones
    out[:, 0:3] = (0.0, 0.0, 1.0)    # torso
    out[:, 6:9] = (0.0, 1.0, 0.0)    # l_clavicle
    out[:, 15:18] = (0.0, -1.0, 0.0)  # r_clavicle
    # gaze
    hy, hp = c[:, 0], c[:, 1]
    cp, sp = np.cos(hp), np.sin(hp)
    out[:, 3] = np.cos(hy) * cp
    out[:, 4] = np.sin(hy) * cp
    out[:, 5] = sp
    _arm_bones_desk(c[:, 2], c[:, 3], c[:, 4], c[:, 5], out[:, 9:12], out[:, 12:15])
    _arm_bones_desk(c[:, 6], c[:, 7], c[:, 8], c[:, 9], out[:, 18:21], out[:, 21:24])
    return out


def _arm_bones_desk(pitch, roll, eyaw, eroll, upper_out, fore_out):
    cp, sp = np.cos(pitch), np.sin(pitch)
    cr, sr = np.cos(roll), np.sin(roll)
    upper_out[:, 0] = sp * cr
    upper_out[:, 1] = sr
    upper_out[:, 2] = -cp * cr
    # forearm direction in the upper-arm frame, then rotated to world:
    # U = Ry(-pitch) Rx(roll), columns expanded inline
    ce, se = np.cos(eyaw), np.sin(eyaw)
    cb, sb = np.cos(eroll), np.sin(eroll)
    fx, fy, fz = se * sb, ce * sb, -cb
    fore_out[:, 0] = cp * fx + (-sp * sr) * fy + (-sp * cr) * fz
    fore_out[:, 1] = cr * fy + (-sr) * fz
    fore_out[:, 2] = sp * fx + (cp * sr) * fy + (cp * cr) * fz


def inverse_kinematics(pose, schema):
    """Joint angles reproducing the input bones, clamped to limits.

    Exact on the reachable set away from the straight-elbow tie (where the
    elbow yaw is undefined and resolved to 0).  Unreachable bone directions
    whose defining axis is still well posed are clamped joint-wise.

    Raises DegeneratePoseError when a bone direction leaves a joint axis
    undefined and no documented tie-break applies (gaze parallel to the
    torso axis, or an upper arm parallel to the lateral axis).
    """
    _require_analytic(schema)
    p = np.asarray(pose, dtype=np.float64)
    if p.shape != (schema.human_dim,):
        raise ValueError(f"pose has shape {p.shape}, schema expects ({schema.human_dim},)")
    lo, hi = schema.joint_min, schema.joint_max
    c = np.empty(10)

    gaze = p[3:6]
    if math.hypot(gaze[0], gaze[1]) < _DEGENERATE_TOL:
        raise DegeneratePoseError("gaze is parallel to the torso axis; head yaw undefined", 1)
    c[0] = math.atan2(gaze[1], gaze[0])
    c[1] = math.asin(min(1.0, max(-1.0, gaze[2])))
    c[2:6] = _arm_ik_desk(p[9:12], p[12:15], 3)
    c[6:10] = _arm_ik_desk(p[18:21], p[21:24], 6)
    return np.clip(c, lo, hi)


def _arm_ik_desk(upper, fore, upper_bone_index):
    if math.hypot(upper[0], upper[2]) < _DEGENERATE_TOL:
        raise DegeneratePoseError(
            "upper arm is parallel to the lateral axis; shoulder pitch undefined",
            upper_bone_index,
        )
    roll = math.asin(min(1.0, max(-1.0, upper[1])))
    pitch = math.atan2(upper[0], -upper[2])
    cp, sp = math.cos(pitch), math.sin(pitch)
    cr, sr = math.cos(roll), math.sin(roll)
    # f_local = U^T fore, with U = Ry(-pitch) Rx(roll)
    fx = cp * fore[0] + sp * fore[2]
    fy = -sp * sr * fore[0] + cr * fore[1] + cp * sr * fore[2]
    fz = -sp * cr * fore[0] - sr * fore[1] + cp * cr * fore[2]
    eroll = math.acos(min(1.0, max(-1.0, -fz)))
    if math.hypot(fx, fy) < _DEGENERATE_TOL:
        eyaw = 0.0  # straight (or fully folded) elbow: twist undefined, keep 0
    else:
        eyaw = math.atan2(fx, fy)
    return pitch, roll, eyaw, eroll
