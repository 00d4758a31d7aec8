"""posebridge: real-time human-to-humanoid pose projection.

Sparse correspondence landmarks, local kernel regressors in both mapping
directions, back-projected-deviation candidate selection, and streaming
smoothing; served over HTTP with a thin CLI on top.
"""

__version__ = "0.1.0"

from .elm import ElmKernel, predict, predict_many, train
from .kernelstore import KernelStore, build_store, load_store, nearest_human, nearest_humanoid, save_store
from .kinematics import (
    SkeletonSchema,
    fk_batch,
    forward_kinematics,
    inverse_kinematics,
    load_schema,
)
from .landmarks import (
    LandmarkSet,
    build_landmarks,
    landmarks_from_pairs,
    load_landmarks,
    mean_shift,
    save_landmarks,
)
from .metrics import DeviationReport, deviation
from .projection import ProjectionEngine, ProjectionResult, project_exact, project_relaxed
from .smoothing import Smoother

__all__ = [
    "ElmKernel",
    "KernelStore",
    "LandmarkSet",
    "DeviationReport",
    "ProjectionEngine",
    "ProjectionResult",
    "SkeletonSchema",
    "Smoother",
    "build_landmarks",
    "build_store",
    "deviation",
    "fk_batch",
    "forward_kinematics",
    "inverse_kinematics",
    "landmarks_from_pairs",
    "load_landmarks",
    "load_schema",
    "load_store",
    "mean_shift",
    "nearest_human",
    "nearest_humanoid",
    "predict",
    "predict_many",
    "project_exact",
    "project_relaxed",
    "save_landmarks",
    "save_store",
    "train",
]
