"""A read-only JSON HTTP service over a loaded pipeline."""
from __future__ import annotations

import json
import logging
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any

from .pipeline import Pipeline, StageError

logger = logging.getLogger(__name__)

MAX_BODY = 1 << 20


def make_handler(pipeline: Pipeline) -> type[BaseHTTPRequestHandler]:
    class Handler(BaseHTTPRequestHandler):
        server_version = "hybridrag/0.1"

        def _send(self, status: int, payload: dict[str, Any]) -> None:
            body = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, fmt: str, *args: Any) -> None:
            logger.info("%s %s", self.address_string(), fmt % args)

        def do_GET(self) -> None:
            if self.path == "/health":
                self._send(200, {"status": "ok"})
            else:
                self._send(404, {"error": "not found"})

        def do_POST(self) -> None:
            if self.path != "/query":
                self._send(404, {"error": "not found"})
                return
            if "application/json" not in self.headers.get("Content-Type", ""):
                self._send(415, {"error": "Content-Type must be application/json"})
                return
            length = int(self.headers.get("Content-Length") or 0)
            if length <= 0 or length > MAX_BODY:
                self._send(400, {"error": "missing or oversized body"})
                return
            try:
                body = json.loads(self.rfile.read(length))
                question = body["question"]
                if not isinstance(question, str) or not question.strip():
                    raise ValueError("question must be a non-empty string")
            except (ValueError, KeyError, TypeError) as exc:
                self._send(400, {"error": f"bad request: {exc}"})
                return
            try:
                trace = pipeline.answer(question)
            except StageError as exc:
                self._send(502, {"error": str(exc), "stage": exc.stage})
                return
            self._send(200, {
                "answer": trace.answer,
                "route": trace.route.route.value,
                "expanded": trace.expanded.expanded,
                "contexts": ([trace.context.kg_result_text] if trace.context.kg_result_text else [])
                + [h.text for h in trace.context.vector_hits],
            })

    return Handler


def make_server(pipeline: Pipeline, host: str = "127.0.0.1", port: int = 8080) -> ThreadingHTTPServer:
    return ThreadingHTTPServer((host, port), make_handler(pipeline))
