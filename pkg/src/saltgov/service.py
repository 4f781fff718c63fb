"""Live scenario service: one simulation thread, JSON-over-HTTP around it.

The simulation thread owns every piece of control-loop state. Network
handlers never touch the loop directly: commands go through a locked queue
and are applied at tick boundaries in sequence order; telemetry flows out
through per-subscriber bounded queues (slow stream consumers drop frames,
the loop never blocks). Because command application is tick-aligned and all
randomness is seeded, a served run with its recorded command log replays
bit-exactly through the headless runner.

Endpoints (all JSON):
    GET  /state                 current snapshot + run status
    GET  /stream                server-sent events, one telemetry frame per tick
    GET  /history?from=&to=     slice of the telemetry history by tick index
    GET  /schema                frame and command schema description
    POST /command               CommandMessage; 400 malformed, 409 stale/fault
"""

import json
import queue
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

import numpy as np

from .orchestrator import ControlLoop, MEASUREMENT_NAMES

SCHEMA = {
    "schema_version": 1,
    "frame": {
        "tick": "int", "t": "seconds",
        "states": {"raw": "map name->value", "denoised": "map name->value"},
        "governor": {"r": "MW", "v": "MW", "kappa": "[0,1]",
                     "band": "[lo_MW, hi_MW] or null", "binding": "string",
                     "alarm": "bool"},
        "constraints": [{"output": "name", "sense": "le|ge", "bound": "degC"}],
        "power_mw": "MW",
    },
    "command": {
        "kind": ["set-reference", "update-constraint", "toggle-governor",
                 "pause", "resume", "set-speed"],
        "payload": {
            "set-reference": {"target_mw": [64.0, 320.0]},
            "update-constraint": {"output": "constraint output name",
                                  "bound": "degC"},
            "toggle-governor": {"enabled": "bool"},
            "set-speed": {"speed": ">= 0, 0 = free-running"},
        },
        "client": "string id", "seq": "monotone int per client",
    },
}

COMMAND_KINDS = set(SCHEMA["command"]["kind"])


class CommandRejected(Exception):
    def __init__(self, status, reason):
        super().__init__(reason)
        self.status = status
        self.reason = reason


def validate_command(cmd):
    if not isinstance(cmd, dict):
        raise CommandRejected(400, "command must be a JSON object")
    kind = cmd.get("kind")
    if kind not in COMMAND_KINDS:
        raise CommandRejected(400, f"unknown command kind {kind!r}")
    payload = cmd.get("payload", {})
    if not isinstance(payload, dict):
        raise CommandRejected(400, "payload must be an object")
    if kind == "set-reference":
        target = payload.get("target_mw")
        if not isinstance(target, (int, float)) or not np.isfinite(target):
            raise CommandRejected(400, "set-reference needs numeric target_mw")
        lo, hi = SCHEMA["command"]["payload"]["set-reference"]["target_mw"]
        if not lo <= target <= hi:
            raise CommandRejected(400, f"target_mw outside [{lo}, {hi}]")
    elif kind == "update-constraint":
        if not isinstance(payload.get("output"), str):
            raise CommandRejected(400, "update-constraint needs output name")
        bound = payload.get("bound")
        if not isinstance(bound, (int, float)) or not np.isfinite(bound):
            raise CommandRejected(400, "update-constraint needs finite bound")
    elif kind == "toggle-governor":
        if not isinstance(payload.get("enabled"), bool):
            raise CommandRejected(400, "toggle-governor needs boolean enabled")
    elif kind == "set-speed":
        speed = payload.get("speed")
        if not isinstance(speed, (int, float)) or speed < 0:
            raise CommandRejected(400, "set-speed needs speed >= 0")
    if "seq" in cmd and not isinstance(cmd["seq"], int):
        raise CommandRejected(400, "seq must be an integer")
    return cmd


class SimulationService:
    """Owns the loop thread, the command queue and the telemetry fan-out."""

    def __init__(self, cfg, model=None, speed=0.0, max_ticks=None):
        self.loop = ControlLoop(cfg, model=model)
        self.dt = self.loop.dt
        self.speed = float(speed)
        self.max_ticks = max_ticks if max_ticks is not None else self.loop.n_ticks
        self._lock = threading.Lock()
        self._pending = []
        self._last_seq = {}
        self._paused = False
        self._stop = False
        self._latest = None
        self.history = []
        self._subscribers = []
        self.finished = threading.Event()
        self._thread = threading.Thread(target=self._run, daemon=True)

    # ------------------------------------------------------------ #
    # simulation thread
    # ------------------------------------------------------------ #
    def start(self):
        self._thread.start()
        return self

    def _run(self):
        while not self._stop and self.loop.tick < self.max_ticks:
            if self._paused:
                time.sleep(0.005)
                continue
            with self._lock:
                commands = self._pending
                self._pending = []
            t_wall = time.perf_counter()
            try:
                self.loop.step_tick(commands)
            except Exception:
                break
            frame = self._frame()
            with self._lock:
                self._latest = frame
                self.history.append(frame)
                for sub in self._subscribers:
                    try:
                        sub.put_nowait(frame)
                    except queue.Full:
                        pass   # slow client drops this frame, never stalls us
            if self.speed > 0:
                budget = self.dt / self.speed - (time.perf_counter() - t_wall)
                if budget > 0:
                    time.sleep(budget)
        self.finished.set()

    def stop(self):
        self._stop = True
        self._thread.join(timeout=5.0)

    def _frame(self):
        loop = self.loop
        row = loop.rows[-1]
        cols = loop.log_columns()

        def col(name):
            v = row[cols.index(name)]
            return v if isinstance(v, str) else float(v)

        raw = {nm: col(f"meas_{nm}") for nm in MEASUREMENT_NAMES}
        den = {nm: col(f"den_{nm}") for nm in MEASUREMENT_NAMES}
        for i in (1, 2, 3):
            den[f"C{i}"] = col(f"chat{i}")
        band = [col("band_lo"), col("band_hi")]
        if not np.isfinite(band[0]) or not np.isfinite(band[1]):
            band = None
        t_now = col("t")
        constraints = [
            {"output": r.output, "sense": r.sense, "bound": r.bound_at(t_now)}
            for r in loop.constraints.rows
        ]
        return {
            "schema_version": 1,
            "tick": int(col("tick")),
            "t": t_now,
            "states": {"raw": raw, "denoised": den},
            "governor": {
                "r": col("r"), "v": col("v"), "kappa": col("kappa"),
                "band": band, "binding": col("binding"),
                "alarm": bool(col("alarm")),
                "enabled": bool(loop.governor.enabled) if loop.governor else False,
            },
            "constraints": constraints,
            "power_mw": col("Qdot_RX"),
        }

    # ------------------------------------------------------------ #
    # handler-side API (runs on HTTP threads)
    # ------------------------------------------------------------ #
    def snapshot(self):
        with self._lock:
            return {
                "tick": self.loop.tick,
                "paused": self._paused,
                "finished": self.finished.is_set(),
                "fault": self.loop.fault,
                "frame": self._latest,
                "schema_version": 1,
            }

    def submit(self, cmd):
        validate_command(cmd)
        if self.loop.fault is not None:
            raise CommandRejected(409, f"loop is in fault state: {self.loop.fault}")
        client = str(cmd.get("client", ""))
        seq = cmd.get("seq")
        with self._lock:
            if seq is not None:
                last = self._last_seq.get(client)
                if last is not None and seq <= last:
                    raise CommandRejected(
                        409, f"stale sequence {seq} (last {last}) for {client!r}")
                self._last_seq[client] = seq
            kind = cmd["kind"]
            if kind == "pause":
                self._paused = True
            elif kind == "resume":
                self._paused = False
            elif kind == "set-speed":
                self.speed = float(cmd["payload"]["speed"])
            self._pending.append(cmd)
            apply_tick = self.loop.tick
        return {"accepted": True, "kind": cmd["kind"], "seq": seq,
                "will_apply_at_tick": apply_tick}

    def history_slice(self, start, end):
        with self._lock:
            return [f for f in self.history
                    if start <= f["tick"] and (end is None or f["tick"] <= end)]

    def subscribe(self):
        q = queue.Queue(maxsize=256)
        with self._lock:
            self._subscribers.append(q)
        return q

    def unsubscribe(self, q):
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def command_log(self):
        with self._lock:
            return list(self.loop.command_log)


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"

    def log_message(self, *args):   # keep test output clean
        pass

    @property
    def service(self):
        return self.server.service

    def _json(self, status, payload):
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        url = urlparse(self.path)
        if url.path == "/state":
            self._json(200, self.service.snapshot())
        elif url.path == "/schema":
            self._json(200, SCHEMA)
        elif url.path == "/history":
            params = parse_qs(url.query)
            start = int(params.get("from", ["0"])[0])
            end = int(params["to"][0]) if "to" in params else None
            self._json(200, {"frames": self.service.history_slice(start, end)})
        elif url.path == "/commands":
            self._json(200, {"commands": [
                {"tick": t, "command": c} for t, c in self.service.command_log()]})
        elif url.path == "/stream":
            self._stream()
        else:
            self._json(404, {"error": f"no such endpoint {url.path}"})

    def _stream(self):
        q = self.service.subscribe()
        try:
            self.send_response(200)
            self.send_header("Content-Type", "text/event-stream")
            self.send_header("Cache-Control", "no-cache")
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            while True:
                try:
                    frame = q.get(timeout=1.0)
                except queue.Empty:
                    if self.service.finished.is_set():
                        break
                    self.wfile.write(b": keepalive\n\n")
                    self.wfile.flush()
                    continue
                self.wfile.write(b"data: " + json.dumps(frame).encode() + b"\n\n")
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError):
            pass
        finally:
            self.service.unsubscribe(q)

    def do_POST(self):
        url = urlparse(self.path)
        if url.path != "/command":
            self._json(404, {"error": f"no such endpoint {url.path}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            cmd = json.loads(self.rfile.read(length) or b"{}")
        except (ValueError, json.JSONDecodeError) as exc:
            self._json(400, {"error": f"malformed command: {exc}"})
            return
        try:
            ack = self.service.submit(cmd)
        except CommandRejected as exc:
            self._json(exc.status, {"error": exc.reason})
            return
        self._json(200, ack)


def make_server(cfg, model=None, host="127.0.0.1", port=0, speed=0.0,
                max_ticks=None):
    """Create (service, http server); the caller starts/stops both."""
    service = SimulationService(cfg, model=model, speed=speed,
                                max_ticks=max_ticks)
    httpd = ThreadingHTTPServer((host, port), _Handler)
    httpd.service = service
    return service, httpd


def serve(cfg, model=None, host="127.0.0.1", port=8008, speed=0.0,
          max_ticks=None, log_dir=None):
    """Blocking entry point used by the CLI."""
    import os

    service, httpd = make_server(cfg, model=model, host=host, port=port,
                                 speed=speed, max_ticks=max_ticks)
    http_thread = threading.Thread(target=httpd.serve_forever, daemon=True)
    http_thread.start()
    service.start()
    print(f"serving on http://{host}:{httpd.server_address[1]} "
          f"({service.max_ticks} ticks, speed={speed or 'free-running'})",
          flush=True)
    try:
        service.finished.wait()
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
            service.loop.write_csv(os.path.join(log_dir, "served_run.csv"))
            with open(os.path.join(log_dir, "command_log.json"), "w") as fh:
                json.dump([{"tick": t, "command": c}
                           for t, c in service.command_log()], fh, indent=1)
        # the run is over but its state and history stay queryable so
        # clients can reconstruct views (analyst mode) until interrupted
        print("run finished; serving state/history until interrupted",
              flush=True)
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
        httpd.shutdown()
    return service
