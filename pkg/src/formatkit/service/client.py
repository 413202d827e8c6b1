"""Synchronous client for the checker service.

The CLI talks to the service through this class in both modes: in-process
(the default, no sockets involved) or against a remote base URL. Either way
the CLI stays a thin client with no checking logic of its own.
"""

from __future__ import annotations

from typing import Any, Sequence

import httpx

from ..checkers import CheckerRegistry
from ..errors import BackendError
from ..model import FormatError, Verdict


class ServiceClient:
    def __init__(self, http: Any):
        # anything with .get/.post returning httpx-style responses
        self._http = http

    @classmethod
    def local(cls, registry: CheckerRegistry | None = None) -> "ServiceClient":
        import warnings

        with warnings.catch_warnings():
            # the in-process ASGI client pulls in starlette.testclient, whose
            # import-time deprecation chatter has no business on CLI stderr
            warnings.simplefilter("ignore")
            from fastapi.testclient import TestClient

        from .app import create_app

        return cls(TestClient(create_app(registry)))

    @classmethod
    def remote(cls, base_url: str, timeout: float = 60.0) -> "ServiceClient":
        return cls(httpx.Client(base_url=base_url, timeout=timeout))

    def _unwrap(self, response) -> Any:
        if response.status_code != 200:
            detail: Any = None
            try:
                detail = response.json().get("detail")
            except Exception:
                detail = response.text[:200]
            raise BackendError(response.status_code, f"{detail}")
        return response.json()

    def version(self) -> str:
        return self._unwrap(self._http.get("/version"))["version"]

    def tasks(self) -> list[str]:
        return self._unwrap(self._http.get("/tasks"))["tasks"]

    def check(self, task: str, instance_doc: dict, response_text: str) -> Verdict:
        data = self._unwrap(
            self._http.post(
                "/check",
                json={"task": task, "instance": instance_doc, "response": response_text},
            )
        )
        return _verdict_from_payload(data)

    def check_batch(self, items: Sequence[dict]) -> list[Verdict]:
        data = self._unwrap(self._http.post("/check/batch", json={"items": list(items)}))
        return [_verdict_from_payload(v) for v in data["verdicts"]]

    def reward(self, score: int, logp_phi: float, logp_theta: float, beta: float) -> float:
        data = self._unwrap(
            self._http.post(
                "/reward",
                json={
                    "score": score,
                    "logp_phi": logp_phi,
                    "logp_theta": logp_theta,
                    "beta": beta,
                },
            )
        )
        return data["reward"]


def _verdict_from_payload(data: dict) -> Verdict:
    errors = tuple(
        FormatError(
            code=e["code"],
            message=e["message"],
            span=tuple(e["span"]) if e.get("span") is not None else None,
        )
        for e in data.get("errors", ())
    )
    return Verdict(score=data["score"], errors=errors)
