"""Synchronous client for the posebridge service.

Talks to a remote server when given a base URL, or runs the ASGI app
in-process otherwise, so CLI commands go through the same validated HTTP
contracts whether or not a server is running.
"""

from __future__ import annotations

import asyncio
import threading

import httpx


class ServiceError(RuntimeError):
    def __init__(self, status_code, reason):
        super().__init__(f"service error {status_code}: {reason}")
        self.status_code = status_code
        self.reason = reason


class _Portal:
    """Background event loop that lets sync code drive an async client."""

    def __init__(self):
        self._loop = asyncio.new_event_loop()
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def _run(self):
        asyncio.set_event_loop(self._loop)
        self._loop.run_forever()

    def call(self, coro):
        return asyncio.run_coroutine_threadsafe(coro, self._loop).result()

    def close(self):
        self._loop.call_soon_threadsafe(self._loop.stop)
        self._thread.join(timeout=5)


class ServiceClient:
    """Thin wrapper over the service endpoints.

    Exactly one of ``base_url`` (remote server) or ``app`` (in-process ASGI
    application) is used; with neither given, a fresh in-process app is
    created.
    """

    def __init__(self, base_url=None, app=None, timeout=600.0):
        self._portal = _Portal()
        if base_url is not None:
            self._client = httpx.AsyncClient(base_url=base_url, timeout=timeout)
        else:
            if app is None:
                from .service import create_app

                app = create_app()
            transport = httpx.ASGITransport(app=app)
            self._client = httpx.AsyncClient(
                transport=transport, base_url="http://posebridge.local", timeout=timeout
            )

    def close(self):
        self._portal.call(self._client.aclose())
        self._portal.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _request(self, method, path, json_body=None):
        async def go():
            return await self._client.request(method, path, json=json_body)

        response = self._portal.call(go())
        if response.status_code >= 400:
            try:
                reason = response.json().get("detail", response.text)
            except ValueError:
                reason = response.text
            raise ServiceError(response.status_code, reason)
        if response.status_code == 204:
            return None
        return response.json()

    # endpoint facade -----------------------------------------------------

    def health(self):
        return self._request("GET", "/health")

    def synth_recording(self, **kw):
        return self._request("POST", "/recordings/synthetic", kw)

    def extract(self, **kw):
        return self._request("POST", "/landmarks/extract", kw)

    def build(self, **kw):
        return self._request("POST", "/stores/build", kw)

    def create_engine(self, **kw):
        return self._request("POST", "/engines", kw)

    def list_engines(self):
        return self._request("GET", "/engines")

    def delete_engine(self, engine_id):
        return self._request("DELETE", f"/engines/{engine_id}")

    def project(self, engine_id, **kw):
        return self._request("POST", f"/engines/{engine_id}/project", kw)

    def create_session(self, engine_id, **kw):
        return self._request("POST", f"/engines/{engine_id}/sessions", kw)

    def step(self, session_id, pose):
        return self._request("POST", f"/sessions/{session_id}/step", {"pose": pose})

    def delete_session(self, session_id):
        return self._request("DELETE", f"/sessions/{session_id}")

    def replay(self, engine_id, **kw):
        return self._request("POST", f"/engines/{engine_id}/replay", kw)

    def bench(self, **kw):
        return self._request("POST", "/bench", kw)
