"""Local JSON service for running live sequential sessions and sizing
queries over HTTP.

All statistics are computed by library calls; this module only parses
requests, holds per-session state, and serializes the results. Sessions
live in process memory and are keyed by an opaque id.
"""

from __future__ import annotations

import json
import math
import threading
import uuid
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .design import DesignParams, n_star_group, optimal_group_size
from .errors import GtseqError
from .sequential import SequentialConfig, SequentialState, advance, initial_state

MAX_BODY_BYTES = 1 << 20


class _HttpError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


class _Session:
    __slots__ = ("cfg", "state", "lock")

    def __init__(self, cfg: SequentialConfig):
        self.cfg = cfg
        self.state = initial_state()
        self.lock = threading.Lock()  # one mutation at a time per session


class SessionRegistry:
    """In-memory session store; safe for concurrent request handlers."""

    def __init__(self):
        self._sessions: dict[str, _Session] = {}
        self._lock = threading.Lock()

    def create(self, cfg: SequentialConfig) -> str:
        sid = uuid.uuid4().hex
        with self._lock:
            self._sessions[sid] = _Session(cfg)
        return sid

    def get(self, sid: str) -> _Session:
        with self._lock:
            session = self._sessions.get(sid)
        if session is None:
            raise _HttpError(404, f"no session {sid!r}")
        return session


def state_payload(state: SequentialState) -> dict:
    """JSON-safe view of a session state; infinite threshold maps to null."""
    return {
        "n": state.n,
        "s": state.s,
        "xbar": state.xbar if state.n > 0 else None,
        "p_hat": state.p_hat,
        "threshold": state.threshold if math.isfinite(state.threshold) else None,
        "stopped": state.stopped,
    }


def _field_float(data: dict, name: str, default: float) -> float:
    value = data.get(name, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _HttpError(400, f"{name} must be a number")
    return float(value)


def _field_int(data: dict, name: str, default: int) -> int:
    value = data.get(name, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _HttpError(400, f"{name} must be an integer")
    if isinstance(value, float):
        if not value.is_integer():
            raise _HttpError(400, f"{name} must be an integer")
        value = int(value)
    return int(value)


def _query_scalar(query: dict, name: str) -> str | None:
    values = query.get(name)
    if not values:
        return None
    return values[-1]


class Handler(BaseHTTPRequestHandler):
    server_version = "gtseq"
    protocol_version = "HTTP/1.1"

    # --- plumbing -----------------------------------------------------

    def log_message(self, fmt, *args):  # keep the terminal quiet
        pass

    def _cors(self):
        self.send_header("Access-Control-Allow-Origin", "*")

    def _reply(self, status: int, payload: dict):
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self._cors()
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY_BYTES:
            raise _HttpError(400, "request body too large")
        raw = self.rfile.read(length) if length > 0 else b""
        if not raw:
            return {}
        try:
            data = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, ValueError):
            raise _HttpError(400, "body must be UTF-8 JSON")
        if not isinstance(data, dict):
            raise _HttpError(400, "body must be a JSON object")
        return data

    def _dispatch(self, handler):
        try:
            status, payload = handler()
        except _HttpError as err:
            status, payload = err.status, {"error": err.message}
        except GtseqError as err:
            status, payload = 400, {"error": str(err)}
        except Exception:  # pragma: no cover - defensive catch-all
            status, payload = 500, {"error": "internal error"}
        self._reply(status, payload)

    # --- methods ------------------------------------------------------

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_POST(self):
        path = urlparse(self.path).path
        parts = [p for p in path.split("/") if p]
        if parts == ["session"]:
            self._dispatch(self._create_session)
        elif len(parts) == 3 and parts[0] == "session" and parts[2] == "result":
            self._dispatch(lambda: self._post_result(parts[1]))
        else:
            self._reply(404, {"error": f"no route for POST {path}"})

    def do_GET(self):
        parsed = urlparse(self.path)
        parts = [p for p in parsed.path.split("/") if p]
        if len(parts) == 2 and parts[0] == "session":
            self._dispatch(lambda: self._get_session(parts[1]))
        elif parts == ["design"]:
            self._dispatch(lambda: self._get_design(parse_qs(parsed.query)))
        else:
            self._reply(404, {"error": f"no route for GET {parsed.path}"})

    # --- endpoints ----------------------------------------------------

    def _create_session(self):
        data = self._read_json()
        design = DesignParams(alpha=_field_float(data, "alpha", 0.05),
                              gamma=_field_float(data, "gamma", 0.1))
        cfg = SequentialConfig(k=_field_int(data, "k", 2),
                               m=_field_int(data, "m", 250),
                               design=design)
        sid = self.server.registry.create(cfg)
        return 200, {"id": sid}

    def _post_result(self, sid: str):
        data = self._read_json()
        if "positive" not in data or not isinstance(data["positive"], bool):
            raise _HttpError(400, "positive must be a JSON boolean")
        session = self.server.registry.get(sid)
        with session.lock:
            if session.state.stopped:
                raise _HttpError(409, "session already stopped")
            session.state = advance(session.state, int(data["positive"]), session.cfg)
            return 200, state_payload(session.state)

    def _get_session(self, sid: str):
        session = self.server.registry.get(sid)
        with session.lock:
            return 200, state_payload(session.state)

    def _get_design(self, query: dict):
        p_raw = _query_scalar(query, "p")
        if p_raw is None:
            raise _HttpError(400, "p is required")
        try:
            p = float(p_raw)
            design = DesignParams(alpha=float(_query_scalar(query, "alpha") or 0.05),
                                  gamma=float(_query_scalar(query, "gamma") or 0.1))
        except ValueError:
            raise _HttpError(400, "p, alpha, gamma must be numbers")
        k_raw = _query_scalar(query, "k") or "auto"
        if k_raw == "auto":
            plan = optimal_group_size(p, design)
        else:
            try:
                k = int(k_raw)
            except ValueError:
                raise _HttpError(400, "k must be an integer or 'auto'")
            plan = n_star_group(p, k, design)
        return 200, {"k": plan.k, "n_required": plan.n_required, "n_ceil": plan.n_ceil}


def create_server(port: int = 0, host: str = "127.0.0.1") -> ThreadingHTTPServer:
    """Bind the service; port 0 picks a free ephemeral port."""
    server = ThreadingHTTPServer((host, port), Handler)
    server.registry = SessionRegistry()
    return server


def serve(port: int = 8765, host: str = "127.0.0.1") -> None:
    """Run the service until interrupted, announcing the bound address."""
    server = create_server(port=port, host=host)
    print(f"gtseq serve listening on http://{host}:{server.server_address[1]}",
          flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
