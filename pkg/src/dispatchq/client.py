"""Thin client for the dispatchq service.

By default requests are routed in-process through the ASGI app (no server
needed); pass a base URL to talk to a running instance instead.
"""
from __future__ import annotations

import httpx

# Exit codes surfaced by the CLI for each service error code.
EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INFEASIBLE = 3
EXIT_ASSERTION = 4

_ERROR_EXIT_CODES = {
    "invalid-input": EXIT_INVALID,
    "infeasible": EXIT_INFEASIBLE,
    "assertion": EXIT_ASSERTION,
}


class ClientError(Exception):
    def __init__(self, code: str, detail: str, exit_code: int):
        super().__init__(detail)
        self.code = code
        self.detail = detail
        self.exit_code = exit_code


class ServiceClient:
    def __init__(self, server: str | None = None):
        self._in_process = server is None
        if server is None:
            # Deferred import: starts nothing, requests are routed in-process.
            import warnings

            with warnings.catch_warnings():
                warnings.simplefilter("ignore", DeprecationWarning)
                from fastapi.testclient import TestClient

            from .app import app

            self._client = TestClient(app, raise_server_exceptions=False)
        else:
            self._client = httpx.Client(base_url=server)

    def close(self):
        self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def post(self, path: str, payload: dict) -> dict:
        if self._in_process:
            resp = self._client.post(path, json=payload)
        else:
            resp = self._client.post(path, json=payload, timeout=600.0)
        if resp.status_code == 200:
            return resp.json()
        try:
            body = resp.json()
        except ValueError:
            raise ClientError("internal", resp.text, EXIT_ASSERTION)
        if isinstance(body.get("error"), dict):
            code = body["error"].get("code", "internal")
            detail = body["error"].get("detail", "")
        else:
            # pydantic request validation from FastAPI itself
            code = "invalid-input"
            detail = str(body.get("detail", body))
        raise ClientError(code, detail, _ERROR_EXIT_CODES.get(code, EXIT_ASSERTION))

    def analyze(self, payload: dict) -> dict:
        return self.post("/analyze", payload)

    def optimize(self, payload: dict) -> dict:
        return self.post("/optimize", payload)

    def improve(self, payload: dict) -> dict:
        return self.post("/improve", payload)

    def simulate(self, payload: dict) -> dict:
        return self.post("/simulate", payload)

    def fig3(self, payload: dict) -> dict:
        return self.post("/experiments/fig3", payload)

    def fig4(self, payload: dict) -> dict:
        return self.post("/experiments/fig4", payload)

    def sweep(self, payload: dict) -> dict:
        return self.post("/experiments/sweep", payload)
