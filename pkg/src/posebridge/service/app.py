"""HTTP service wrapping the projection pipeline.

Engines are loaded once and served to any number of clients; smoothing
state lives in per-stream sessions so concurrent streams never share a
smoother.  File-path arguments refer to the server's filesystem: this is a
local-first tool, the service exists so capture clients and operator UIs
can talk to one warm engine.
"""

from __future__ import annotations

import threading
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__, bench
from ..errors import PoseBridgeError
from ..io import read_recording, write_recording, atomic_write_text
from ..kernelstore import build_store, load_store, save_store
from ..kinematics import inverse_kinematics, load_schema
from ..landmarks import build_landmarks, load_landmarks, save_landmarks
from ..metrics import CSV_HEADER, csv_row, deviation
from ..projection import ProjectionEngine
from ..smoothing import Smoother
from ..synth import synthetic_recording
from . import schemas as sc


class _Registry:
    def __init__(self):
        self._lock = threading.Lock()
        self._items = {}

    def add(self, value):
        key = uuid.uuid4().hex[:12]
        with self._lock:
            self._items[key] = value
        return key

    def get(self, key, kind):
        with self._lock:
            item = self._items.get(key)
        if item is None:
            raise HTTPException(status_code=404, detail=f"unknown {kind}: {key}")
        return item

    def remove(self, key, kind):
        with self._lock:
            if self._items.pop(key, None) is None:
                raise HTTPException(status_code=404, detail=f"unknown {kind}: {key}")

    def keys(self):
        with self._lock:
            return list(self._items)


class _EngineEntry:
    def __init__(self, engine, store_path, schema):
        self.engine = engine
        self.store_path = store_path
        self.schema = schema


class _SessionEntry:
    def __init__(self, engine_id, entry, smoother):
        self.engine_id = engine_id
        self.entry = entry
        self.smoother = smoother
        self.frames = 0
        self.lock = threading.Lock()


def _require_parent(path_str):
    parent = Path(path_str).parent
    if not parent.is_dir():
        raise HTTPException(status_code=400, detail=f"output directory does not exist: {parent}")


def _require_file(path_str):
    if not Path(path_str).is_file():
        raise HTTPException(status_code=400, detail=f"no such file: {path_str}")


def create_app():
    app = FastAPI(title="posebridge", version=__version__)
    engines = _Registry()
    sessions = _Registry()
    app.state.engines = engines
    app.state.sessions = sessions

    @app.exception_handler(PoseBridgeError)
    async def _domain_error(request, exc):
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def _value_error(request, exc):
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.get("/health", response_model=sc.HealthResponse)
    def health():
        return sc.HealthResponse(status="ok", name="posebridge", version=__version__)

    @app.post("/recordings/synthetic", response_model=sc.SynthRecordingResponse)
    def synth_recording(req: sc.SynthRecordingRequest):
        _require_parent(req.out)
        schema = load_schema(req.schema_name)
        timestamps, poses = synthetic_recording(
            schema, req.frames, req.seed, rate_hz=req.rate_hz, jitter=req.jitter
        )
        write_recording(req.out, timestamps, poses, schema.name)
        return sc.SynthRecordingResponse(out=req.out, frames=len(poses), dim=poses.shape[1])

    @app.post("/landmarks/extract", response_model=sc.ExtractResponse)
    def extract(req: sc.ExtractRequest):
        _require_file(req.recording)
        _require_parent(req.out)
        _, frames, header = read_recording(req.recording)
        schema = load_schema(header.get("human_schema", "desk10"))
        from ..io import digest_file

        ls = build_landmarks(
            frames, req.bandwidth, schema,
            max_iter=req.max_iter, tol=req.tol,
            source_digest=digest_file(req.recording),
        )
        save_landmarks(req.out, ls)
        return sc.ExtractResponse(
            out=req.out,
            landmarks=len(ls),
            bandwidth=ls.bandwidth,
            dropped_degenerate=ls.dropped_degenerate,
            merged_after_renormalize=ls.merged_after_renormalize,
        )

    @app.post("/stores/build", response_model=sc.BuildResponse)
    def build(req: sc.BuildRequest):
        _require_file(req.landmarks)
        _require_parent(req.out)
        ls = load_landmarks(req.landmarks)
        store = build_store(ls, req.k, regularization=req.regularization, seed=req.seed)
        save_store(req.out, store)
        return sc.BuildResponse(out=req.out, landmarks=len(ls), k=store.k)

    @app.post("/engines", response_model=sc.EngineInfo, status_code=201)
    def create_engine(req: sc.EngineCreateRequest):
        _require_file(req.store)
        store = load_store(req.store)
        engine = ProjectionEngine(
            store,
            n_candidates=req.n_candidates,
            n_backward=req.n_backward,
            mode=req.mode,
        )
        schema = load_schema(store.landmarks.schema_name)
        entry = _EngineEntry(engine, req.store, schema)
        engine_id = engines.add(entry)
        return _engine_info(engine_id, entry)

    def _engine_info(engine_id, entry):
        engine = entry.engine
        return sc.EngineInfo(
            engine_id=engine_id,
            store=entry.store_path,
            landmarks=len(engine.store),
            k=engine.store.k,
            human_dim=engine.store.human_dim,
            humanoid_dim=engine.store.humanoid_dim,
            n_candidates=engine.n_candidates,
            n_backward=engine.n_backward,
            mode=engine.mode,
            schema_name=entry.schema.name,
        )

    @app.get("/engines", response_model=list[sc.EngineInfo])
    def list_engines():
        return [_engine_info(k, engines.get(k, "engine")) for k in engines.keys()]

    @app.get("/engines/{engine_id}", response_model=sc.EngineInfo)
    def get_engine(engine_id: str):
        return _engine_info(engine_id, engines.get(engine_id, "engine"))

    @app.delete("/engines/{engine_id}", status_code=204)
    def delete_engine(engine_id: str):
        engines.remove(engine_id, "engine")

    @app.post("/engines/{engine_id}/project", response_model=sc.ProjectResponse)
    def project(engine_id: str, req: sc.ProjectRequest):
        entry = engines.get(engine_id, "engine")
        rows = [req.pose] if req.pose is not None else req.poses
        configs, deviations, clusters, elapsed = [], [], [], []
        for row in rows:
            res = entry.engine.project(np.asarray(row, dtype=np.float64))
            configs.append(res.config.tolist())
            deviations.append(res.deviation)
            clusters.append(res.chosen_cluster)
            elapsed.append(res.elapsed * 1e3)
        return sc.ProjectResponse(
            configs=configs, deviations=deviations, clusters=clusters, elapsed_ms=elapsed
        )

    @app.post("/engines/{engine_id}/sessions", response_model=sc.SessionInfo, status_code=201)
    def create_session(engine_id: str, req: sc.SessionCreateRequest):
        entry = engines.get(engine_id, "engine")
        smoother = Smoother(
            entry.engine.store.humanoid_dim, alpha=req.alpha, gamma=req.gamma, eta=req.eta
        )
        session = _SessionEntry(engine_id, entry, smoother)
        session_id = sessions.add(session)
        return sc.SessionInfo(
            session_id=session_id, engine_id=engine_id,
            alpha=req.alpha, gamma=req.gamma, eta=req.eta, frames=0,
        )

    @app.post("/sessions/{session_id}/step", response_model=sc.StepResponse)
    def step(session_id: str, req: sc.StepRequest):
        session = sessions.get(session_id, "session")
        with session.lock:  # one stream per session; steps are ordered
            res = session.entry.engine.project(np.asarray(req.pose, dtype=np.float64))
            smoothed = session.smoother.step(res.config)
            session.frames += 1
        return sc.StepResponse(
            config=smoothed.tolist(),
            raw_config=res.config.tolist(),
            deviation=res.deviation,
        )

    @app.delete("/sessions/{session_id}", status_code=204)
    def delete_session(session_id: str):
        sessions.remove(session_id, "session")

    @app.post("/engines/{engine_id}/replay", response_model=sc.ReplayResponse)
    def replay(engine_id: str, req: sc.ReplayRequest):
        entry = engines.get(engine_id, "engine")
        _require_file(req.recording)
        _require_parent(req.out_configs)
        if req.metrics_csv:
            _require_parent(req.metrics_csv)
        timestamps, frames, _ = read_recording(req.recording)
        schema = entry.schema
        smoother = (
            Smoother(schema.humanoid_dim, alpha=req.alpha, gamma=req.gamma, eta=req.eta)
            if req.smooth else None
        )
        outputs = []
        reports = []
        for pose in frames:
            res = entry.engine.project(pose)
            out = smoother.step(res.config) if smoother is not None else res.config
            outputs.append(out)
            truth = inverse_kinematics(pose, schema) if schema.has_analytic_chain else None
            if truth is not None:
                reports.append(deviation(out, truth))
        write_recording(req.out_configs, timestamps, np.asarray(outputs), schema.name)
        if req.metrics_csv:
            lines = [CSV_HEADER] + [csv_row(i, rep) for i, rep in enumerate(reports)]
            atomic_write_text(req.metrics_csv, "\n".join(lines) + "\n")
        m_max = [r.m_max for r in reports] or [0.0]
        m_avg = [r.m_avg for r in reports] or [0.0]
        return sc.ReplayResponse(
            out_configs=req.out_configs,
            metrics_csv=req.metrics_csv,
            frames=len(outputs),
            mean_m_max_deg=float(np.mean(m_max)),
            mean_m_avg_deg=float(np.mean(m_avg)),
            max_m_max_deg=float(np.max(m_max)),
        )

    @app.post("/bench", response_model=sc.BenchSummary)
    def run_bench(req: sc.BenchRequest):
        if req.out:
            _require_parent(req.out)
        config = bench.EvaluationConfig(
            landmark_sizes=tuple(req.landmark_sizes),
            k=req.k,
            regularization=req.regularization,
            n_candidates=req.n_candidates,
            n_backward=req.n_backward,
            motion_frames=req.motion_frames,
            latency_queries=req.latency_queries,
            latency_queries_wide=req.latency_queries_wide,
            seed=req.seed,
        )
        engine = None
        schema = load_schema(req.schema_name)
        if req.store:
            _require_file(req.store)
            store = load_store(req.store)
            schema = load_schema(store.landmarks.schema_name)
            engine = ProjectionEngine(
                store,
                n_candidates=min(req.n_candidates, len(store)),
                n_backward=min(req.n_backward, len(store)),
            )
        report = bench.run_bench(schema, config, suites=tuple(req.suites), engine=engine)
        if req.out:
            bench.write_report(req.out, report, traces_csv=req.traces_csv)
        return sc.BenchSummary(all_ok=report["all_ok"], assertions=report["assertions"], out=req.out)

    return app
