"""Newline-delimited JSON protocol for driving the environment externally.

One request per line, one response per line, processed in order.  A session
owns at most one environment; `reset` builds it, `step` advances it with a
raw action vector, `close` tears it down.  Malformed requests produce an
error record and the session continues.  Responses are serialized with
sorted keys and no whitespace so transcripts are byte-stable.
"""
from __future__ import annotations

import json
import socketserver
import sys

from .config import ConfigError, config_from_dict
from .env import ActionError, EnvError, Observation, SimEnv


def encode_observation(obs: Observation) -> dict:
    return {
        "nodes": {
            "vehicle": [row.tolist() for row in obs.vehicle_features],
            "bs": obs.bs_features.tolist(),
            "ris": obs.ris_features.tolist(),
        },
        "edges": [[src, dst, kind] for src, dst, kind in obs.edges],
    }


def dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


class Session:
    """State machine for one protocol session."""

    def __init__(self):
        self._env: SimEnv | None = None

    def handle_line(self, line: str) -> str:
        try:
            request = json.loads(line)
        except json.JSONDecodeError:
            return dumps({"ok": False, "error": "bad_request: invalid JSON"})
        if not isinstance(request, dict) or "cmd" not in request:
            return dumps({"ok": False, "error": "bad_request: missing cmd"})
        cmd = request["cmd"]
        if cmd == "reset":
            return dumps(self._do_reset(request))
        if cmd == "step":
            return dumps(self._do_step(request))
        if cmd == "close":
            self._env = None
            return dumps({"ok": True})
        return dumps({"ok": False, "error": f"bad_request: unknown cmd {cmd!r}"})

    def _do_reset(self, request: dict) -> dict:
        try:
            config = config_from_dict(request.get("config", {}) or {})
            env = SimEnv(config)
            obs = env.reset(request.get("seed"))
        except (ConfigError, ValueError) as exc:
            return {"ok": False, "error": str(exc)}
        self._env = env
        return {"ok": True, "obs": encode_observation(obs)}

    def _do_step(self, request: dict) -> dict:
        if self._env is None:
            return {"ok": False, "error": "not_initialized"}
        if self._env.done:
            return {"ok": False, "error": "episode_finished"}
        raw = request.get("raw_action")
        if raw is None:
            return {"ok": False, "error": "bad_request: missing raw_action"}
        try:
            action = self._env.decode(raw)
            result = self._env.step(action)
        except (ActionError, EnvError, ValueError) as exc:
            return {"ok": False, "error": str(exc)}
        return {
            "ok": True,
            "obs": encode_observation(result.observation),
            "reward": result.reward,
            "done": result.done,
            "info": {
                "psi_v": result.info["psi_v"],
                "psi_j": result.info["psi_j"],
                "payload_frac": result.info["payload_frac"],
                "delivered": result.info["delivered"],
            },
        }


def serve_stdio(stdin=None, stdout=None) -> None:
    """Serve one session over stdin/stdout until EOF."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    session = Session()
    for line in stdin:
        if not line.strip():
            continue
        stdout.write(session.handle_line(line) + "\n")
        stdout.flush()


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        session = Session()
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace")
            if not line.strip():
                continue
            self.wfile.write((session.handle_line(line) + "\n").encode("utf-8"))
            self.wfile.flush()


class EnvTCPServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


def serve_tcp(host: str, port: int) -> None:
    """Serve independent sessions, one per TCP connection."""
    with EnvTCPServer((host, port), _Handler) as server:
        server.serve_forever()


def serve(transport: str) -> None:
    """Dispatch on a transport spec: 'stdio' or 'tcp:host:port'."""
    if transport == "stdio":
        serve_stdio()
        return
    if transport.startswith("tcp:"):
        rest = transport[4:]
        host, _, port = rest.rpartition(":")
        if not host:
            host = "127.0.0.1"
        serve_tcp(host, int(port))
        return
    raise ValueError(f"unknown transport {transport!r}")
