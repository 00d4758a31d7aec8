"""Request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator


class HealthResponse(BaseModel):
    status: str
    name: str
    version: str


class SynthRecordingRequest(BaseModel):
    out: str
    schema_name: str = "desk10"
    frames: int = Field(default=600, ge=1)
    seed: int = 0
    rate_hz: float = Field(default=30.0, gt=0)
    jitter: float = Field(default=0.04, ge=0)


class SynthRecordingResponse(BaseModel):
    out: str
    frames: int
    dim: int


class ExtractRequest(BaseModel):
    recording: str
    out: str
    bandwidth: Optional[float] = Field(default=None, gt=0)
    max_iter: int = Field(default=500, ge=1)
    tol: float = Field(default=1e-7, gt=0)


class ExtractResponse(BaseModel):
    out: str
    landmarks: int
    bandwidth: float
    dropped_degenerate: int
    merged_after_renormalize: int


class BuildRequest(BaseModel):
    landmarks: str
    out: str
    k: int = Field(default=10, ge=1)
    regularization: float = Field(default=1e-8, ge=0)
    seed: int = 0


class BuildResponse(BaseModel):
    out: str
    landmarks: int
    k: int


class EngineCreateRequest(BaseModel):
    store: str
    n_candidates: int = Field(default=10, ge=1)
    n_backward: int = Field(default=10, ge=1)
    mode: Literal["relaxed", "exact"] = "relaxed"


class EngineInfo(BaseModel):
    engine_id: str
    store: str
    landmarks: int
    k: int
    human_dim: int
    humanoid_dim: int
    n_candidates: int
    n_backward: int
    mode: str
    schema_name: str


class ProjectRequest(BaseModel):
    pose: Optional[list[float]] = None
    poses: Optional[list[list[float]]] = None

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.pose is None) == (self.poses is None):
            raise ValueError("provide exactly one of 'pose' or 'poses'")
        return self


class ProjectResponse(BaseModel):
    configs: list[list[float]]
    deviations: list[float]
    clusters: list[int]
    elapsed_ms: list[float]


class SessionCreateRequest(BaseModel):
    alpha: float = Field(default=0.75, ge=0.0, le=1.0)
    gamma: float = Field(default=0.3, ge=0.0, le=1.0)
    eta: float = Field(default=0.15, ge=0.0)


class SessionInfo(BaseModel):
    session_id: str
    engine_id: str
    alpha: float
    gamma: float
    eta: float
    frames: int


class StepRequest(BaseModel):
    pose: list[float]


class StepResponse(BaseModel):
    config: list[float]
    raw_config: list[float]
    deviation: float


class ReplayRequest(BaseModel):
    recording: str
    out_configs: str
    metrics_csv: Optional[str] = None
    smooth: bool = True
    alpha: float = Field(default=0.75, ge=0.0, le=1.0)
    gamma: float = Field(default=0.3, ge=0.0, le=1.0)
    eta: float = Field(default=0.15, ge=0.0)


class ReplayResponse(BaseModel):
    out_configs: str
    metrics_csv: Optional[str]
    frames: int
    mean_m_max_deg: float
    mean_m_avg_deg: float
    max_m_max_deg: float


class BenchRequest(BaseModel):
    store: Optional[str] = None
    out: Optional[str] = None
    traces_csv: Optional[str] = None
    suites: list[str] = ["poses", "motions", "sweep", "latency", "similarity"]
    schema_name: str = "desk10"
    landmark_sizes: list[int] = [50, 250, 1000]
    motion_frames: int = Field(default=120, ge=2)
    latency_queries: int = Field(default=100_000, ge=1)
    latency_queries_wide: int = Field(default=5_000, ge=1)
    k: int = Field(default=10, ge=1)
    regularization: float = Field(default=1e-8, ge=0)
    n_candidates: int = Field(default=10, ge=1)
    n_backward: int = Field(default=10, ge=1)
    seed: int = 11


class BenchSummary(BaseModel):
    all_ok: bool
    assertions: list[dict]
    out: Optional[str]
