"""A local HTTP job server speaking the remote-sampler protocol.

Jobs are solved with simulated annealing (or exhaustively when small) in the
request thread. Useful for exercising the remote backend without hardware.
"""

from __future__ import annotations

import json
import threading
from dataclasses import replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .qubo import QuboMatrix
from .sampler import SamplerConfig, exhaustive_solve, sample


class MockSamplerServer:
    """``with MockSamplerServer() as srv: srv.url`` serves on a free local port.

    ``pending_polls`` makes every job answer ``pending`` that many times before
    ``done``; ``corrupt_energy`` adds an offset to reported energies; ``fail``
    marks every job failed.
    """

    def __init__(self, host: str = "127.0.0.1", port: int = 0, pending_polls: int = 1,
                 exhaustive_up_to: int = 12, sweeps: int = 100, corrupt_energy: float = 0.0,
                 fail: bool = False):
        self.pending_polls = pending_polls
        self.exhaustive_up_to = exhaustive_up_to
        self.sweeps = sweeps
        self.corrupt_energy = corrupt_energy
        self.fail = fail
        self.jobs: dict[str, dict] = {}
        self._lock = threading.Lock()
        self._server = ThreadingHTTPServer((host, port), self._handler())
        self._thread: threading.Thread | None = None

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def start(self) -> "MockSamplerServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()

    # -- job handling ----------------------------------------------------------------

    def solve(self, job: dict) -> list[dict]:
        Q = QuboMatrix.from_entries(int(job["dim"]), [tuple(e) for e in job["entries"]])
        reads = int(job.get("num_reads", 1))
        if Q.dim <= self.exhaustive_up_to:
            s = exhaustive_solve(Q, keep=reads)
        else:
            cfg = replace(SamplerConfig(sweeps_per_read=self.sweeps), num_reads=reads,
                          seed=int(job.get("seed", 0)))
            s = sample(Q, cfg)
        return [{"bits": "".join(str(int(b)) for b in bits), "energy": float(e) + self.corrupt_energy}
                for bits, e in s]

    def _submit(self, job: dict) -> str:
        with self._lock:
            job_id = f"job-{len(self.jobs)}"
            self.jobs[job_id] = {"job": job, "polls": 0, "samples": None}
        return job_id

    def _status(self, job_id: str):
        with self._lock:
            entry = self.jobs.get(job_id)
            if entry is None:
                return None
            entry["polls"] += 1
            polls = entry["polls"]
        if self.fail:
            return {"status": "failed", "error": "mock failure"}
        if polls <= self.pending_polls:
            return {"status": "pending"}
        if entry["samples"] is None:
            entry["samples"] = self.solve(entry["job"])
        return {"status": "done", "samples": entry["samples"]}

    def _handler(self):
        server = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def _send(self, code, body):
                data = json.dumps(body).encode()
                self.send_response(code)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def do_POST(self):
                if self.path.rstrip("/") != "/jobs":
                    return self._send(404, {"error": "not found"})
                length = int(self.headers.get("Content-Length", 0))
                try:
                    job = json.loads(self.rfile.read(length))
                    job["dim"], job["entries"]
                except (ValueError, KeyError, TypeError):
                    return self._send(400, {"error": "malformed job"})
                self._send(200, {"job_id": server._submit(job)})

            def do_GET(self):
                parts = self.path.strip("/").split("/")
                if len(parts) != 2 or parts[0] != "jobs":
                    return self._send(404, {"error": "not found"})
                body = server._status(parts[1])
                if body is None:
                    return self._send(404, {"error": "unknown job"})
                self._send(200, body)

        return Handler
