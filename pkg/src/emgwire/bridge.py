"""Control/stream bridge: a WebSocket endpoint for operator front panels.

Messages are UTF-8 JSON, one object per WebSocket text message.

Inbound commands:
    {"cmd": "start", "duration_s": 6.0}
    {"cmd": "stop"}
    {"cmd": "set_notch", "on": true}
    {"cmd": "save", "path": "optional.csv"}
    {"cmd": "status"}

Outbound messages:
    {"type": "ack", "cmd": ..., ...}            command accepted (save adds "path")
    {"type": "error", "cmd": ..., "message"}    command rejected; session unaffected
    {"type": "state", "state": "idle"|"acquiring"|"stopped", "notch": bool,
     "duration_s": float, "reason": str|null, "samples": int}
    {"type": "batch", "start_index": int, "mv": [[ch1..ch8], ...]}

Batches carry the live (post-notch when enabled) signal, 50 samples per
message at the nominal rate.  Each client has a bounded send queue; when a
consumer stalls its batches are dropped, never the recording.
"""

from __future__ import annotations

import json
import queue
import socket
import threading
from dataclasses import dataclass
from typing import Optional

import numpy as np
from websockets.sync.server import serve

from .errors import SyncLost
from .host import ChannelBlock, DecodePipeline, record_csv
from .signal_chain import NotchSpec

BATCH_SAMPLES = 50
CLIENT_QUEUE_MAX = 64
RECORDER_QUEUE_MAX = 8192

IDLE = "idle"
ACQUIRING = "acquiring"
STOPPED = "stopped"


@dataclass
class SessionState:
    state: str = IDLE
    duration_s: float = 6.0
    reason: Optional[str] = None
    samples: int = 0


class Recorder(threading.Thread):
    """Sole file writer: accumulates blocks from a bounded queue.

    The decoder submits with a blocking put, so recording is never dropped
    (the decoder would stall before a sample is lost).  Writes and
    snapshots go through the same queue, which doubles as a flush barrier.
    """

    def __init__(self, maxsize: int = RECORDER_QUEUE_MAX):
        super().__init__(name="recorder", daemon=True)
        self._queue: queue.Queue = queue.Queue(maxsize=maxsize)
        self._blocks: list[ChannelBlock] = []

    def run(self) -> None:
        while True:
            item = self._queue.get()
            if item is None:
                return
            kind, payload = item
            if kind == "block":
                self._blocks.append(payload)
            elif kind == "reset":
                self._blocks = []
                payload.set()
            elif kind == "call":
                fn, result, done = payload
                try:
                    result["value"] = fn(self._blocks)
                except Exception as exc:
                    result["error"] = exc
                done.set()

    def submit(self, block: ChannelBlock) -> None:
        self._queue.put(("block", block))

    def reset(self) -> None:
        done = threading.Event()
        self._queue.put(("reset", done))
        done.wait()

    def _call(self, fn, timeout: float = 10.0):
        result: dict = {}
        done = threading.Event()
        self._queue.put(("call", (fn, result, done)))
        if not done.wait(timeout):
            raise TimeoutError("recorder did not respond")
        if "error" in result:
            raise result["error"]
        return result["value"]

    def snapshot(self) -> list[ChannelBlock]:
        return self._call(lambda blocks: list(blocks))

    def write_file(self, path: str) -> tuple[str, int]:
        return self._call(lambda blocks: (record_csv(blocks, path), len(blocks)))

    def close(self) -> None:
        self._queue.put(None)
        self.join(timeout=5)


class SessionController:
    """Session state machine fed by the decoder; thread-safe commands.

    Recording keeps the pre-notch signal unless record_notched is set;
    the stream callback receives the live signal for broadcasting.
    """

    def __init__(self, sample_rate: int = 1000, notch: NotchSpec = NotchSpec(),
                 record_notched: bool = False, default_output: str = "recording.csv",
                 on_event=None, recorder: Optional[Recorder] = None):
        self.sample_rate = sample_rate
        self.default_output = default_output
        self.pipeline = DecodePipeline(sample_rate, notch, record_notched=record_notched)
        self.recorder = recorder if recorder is not None else Recorder()
        if not self.recorder.is_alive():
            self.recorder.start()
        self._state = SessionState()
        self._batch: list[ChannelBlock] = []
        self._batch_start = 0
        self._lock = threading.Lock()
        self._on_event = on_event or (lambda kind, payload: None)

    # -- command surface (any thread) ----------------------------------

    def start(self, duration_s: float = 6.0) -> dict:
        with self._lock:
            if self._state.state == ACQUIRING:
                return {"type": "error", "cmd": "start", "message": "busy"}
            if duration_s <= 0:
                return {"type": "error", "cmd": "start", "message": "duration must be positive"}
            self._state = SessionState(ACQUIRING, duration_s)
            self._batch = []
            self._batch_start = 0
        self.recorder.reset()
        self._emit_state()
        return {"type": "ack", "cmd": "start"}

    def stop(self) -> dict:
        self._finish("stop command")
        return {"type": "ack", "cmd": "stop"}

    def set_notch(self, on: bool) -> dict:
        self.pipeline.set_notch(bool(on))
        self._emit_state()
        return {"type": "ack", "cmd": "set_notch", "on": bool(on)}

    def save(self, path: Optional[str] = None) -> dict:
        try:
            out, n = self.recorder.write_file(path or self.default_output)
        except ValueError:
            return {"type": "error", "cmd": "save", "message": "nothing recorded"}
        except OSError as exc:
            return {"type": "error", "cmd": "save", "message": f"write failed: {exc}"}
        return {"type": "ack", "cmd": "save", "path": out, "samples": n}

    def status(self) -> dict:
        return {"type": "ack", "cmd": "status", **self._state_payload()}

    def recorded_blocks(self) -> list[ChannelBlock]:
        return self.recorder.snapshot()

    # -- decoder surface (reader thread) --------------------------------

    def push_bytes(self, data: bytes) -> None:
        try:
            decoded = self.pipeline.push_bytes(data)
        except SyncLost as exc:
            self._finish(str(exc))
            return
        if not decoded:
            return
        to_record: list[ChannelBlock] = []
        with self._lock:
            acquiring = self._state.state == ACQUIRING
            if acquiring:
                target = int(round(self._state.duration_s * self.sample_rate))
                done = False
                for rec, live in decoded:
                    if self._state.samples >= target:
                        done = True
                        break
                    to_record.append(rec)
                    self._batch.append(live)
                    self._state.samples += 1
                    if self._state.samples >= target:
                        done = True
                batch = self._take_batch_locked(flush=done)
            else:
                batch, done = None, False
        for rec in to_record:
            self.recorder.submit(rec)
        if batch:
            self._on_event("batch", batch)
        if done:
            self._finish("duration reached")

    def _take_batch_locked(self, flush: bool) -> Optional[dict]:
        if not self._batch or (len(self._batch) < BATCH_SAMPLES and not flush):
            return None
        chunk, self._batch = self._batch[:], []
        start = self._batch_start
        self._batch_start += len(chunk)
        return {
            "type": "batch",
            "start_index": chunk[0].index,
            "mv": [np.round(b.volts * 1e3, 6).tolist() for b in chunk],
        }

    # -- internals -------------------------------------------------------

    def _finish(self, reason: str) -> None:
        with self._lock:
            if self._state.state != ACQUIRING:
                return
            self._state.state = STOPPED
            self._state.reason = reason
            batch = self._take_batch_locked(flush=True)
        if batch:
            self._on_event("batch", batch)
        self._emit_state()

    def _state_payload(self) -> dict:
        s = self._state
        return {
            "state": s.state,
            "duration_s": s.duration_s,
            "reason": s.reason,
            "notch": self.pipeline.notch_enabled,
            "samples": s.samples,
        }

    def _emit_state(self) -> None:
        self._on_event("state", {"type": "state", **self._state_payload()})


def handle_command(controller: SessionController, text: str) -> dict:
    """Decode one inbound message and run it; errors never leak state."""
    try:
        msg = json.loads(text)
        if not isinstance(msg, dict):
            raise ValueError("expected a JSON object")
        cmd = msg["cmd"]
        if cmd == "start":
            return controller.start(float(msg.get("duration_s", 6.0)))
        if cmd == "stop":
            return controller.stop()
        if cmd == "set_notch":
            return controller.set_notch(bool(msg["on"]))
        if cmd == "save":
            return controller.save(msg.get("path"))
        if cmd == "status":
            return controller.status()
        return {"type": "error", "cmd": str(cmd), "message": f"unknown command {cmd!r}"}
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        return {"type": "error", "cmd": None, "message": f"malformed command: {exc}"}


class _Client:
    def __init__(self, ws):
        self.ws = ws
        self.queue: queue.Queue[Optional[str]] = queue.Queue(maxsize=CLIENT_QUEUE_MAX)
        self.dropped = 0

    def offer(self, text: str) -> None:
        try:
            self.queue.put_nowait(text)
        except queue.Full:
            self.dropped += 1  # consumer stalled; drop the stream message

    def sender_loop(self) -> None:
        while True:
            item = self.queue.get()
            if item is None:
                return
            try:
                self.ws.send(item)
            except Exception:
                return


class BridgeServer:
    """WebSocket fan-out for one SessionController."""

    def __init__(self, controller: SessionController, host: str = "127.0.0.1", port: int = 0):
        self.controller = controller
        controller._on_event = self._on_event
        self._clients: set[_Client] = set()
        self._clients_lock = threading.Lock()
        self._server = serve(self._handler, host, port)
        self.port = self._server.socket.getsockname()[1]
        self._thread = threading.Thread(target=self._server.serve_forever,
                                        name="bridge", daemon=True)

    def start(self) -> "BridgeServer":
        self._thread.start()
        return self

    def close(self) -> None:
        with self._clients_lock:
            clients = list(self._clients)
        for c in clients:
            try:
                c.queue.put_nowait(None)
            except queue.Full:
                pass
        self._server.shutdown()

    def _on_event(self, kind: str, payload: dict) -> None:
        text = json.dumps(payload)
        with self._clients_lock:
            clients = list(self._clients)
        for c in clients:
            c.offer(text)

    def _handler(self, ws) -> None:
        client = _Client(ws)
        sender = threading.Thread(target=client.sender_loop, daemon=True)
        sender.start()
        with self._clients_lock:
            self._clients.add(client)
        try:
            client.offer(json.dumps({"type": "state",
                                     **self.controller._state_payload()}))
            for message in ws:
                if isinstance(message, bytes):
                    message = message.decode("utf-8", errors="replace")
                reply = handle_command(self.controller, message)
                ws.send(json.dumps(reply))
        except Exception:
            pass
        finally:
            with self._clients_lock:
                self._clients.discard(client)
            try:
                client.queue.put_nowait(None)
            except queue.Full:
                pass


class LiveHost:
    """Reader/decoder + recorder + bridge, serving an operator panel.

    Listens for one device connection at a time on the data port and
    re-accepts after a disconnect, so the panel survives device restarts.
    """

    def __init__(self, data_host: str = "127.0.0.1", data_port: int = 0,
                 bridge_host: str = "127.0.0.1", bridge_port: int = 0,
                 sample_rate: int = 1000, notch: NotchSpec = NotchSpec(),
                 record_notched: bool = False, default_output: str = "recording.csv"):
        self.controller = SessionController(sample_rate, notch, record_notched,
                                            default_output)
        self.bridge = BridgeServer(self.controller, bridge_host, bridge_port)
        self._listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._listener.bind((data_host, data_port))
        self._listener.listen(1)
        self._listener.settimeout(0.5)
        self.data_port = self._listener.getsockname()[1]
        self._stop = threading.Event()
        self._reader = threading.Thread(target=self._reader_loop,
                                        name="stream-reader", daemon=True)

    def start(self) -> "LiveHost":
        self.bridge.start()
        self._reader.start()
        return self

    def _reader_loop(self) -> None:
        while not self._stop.is_set():
            try:
                conn, _addr = self._listener.accept()
            except TimeoutError:
                continue
            except OSError:
                return
            conn.settimeout(0.5)
            with conn:
                while not self._stop.is_set():
                    try:
                        data = conn.recv(4096)
                    except TimeoutError:
                        continue
                    except OSError:
                        break
                    if not data:
                        break
                    self.controller.push_bytes(data)

    def close(self) -> None:
        self._stop.set()
        try:
            self._listener.close()
        except OSError:
            pass
        self._reader.join(timeout=5)
        self.bridge.close()
        self.controller.recorder.close()
