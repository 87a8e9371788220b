"""Newline-delimited JSON inference service over a stream socket.

One request per line: {"id": "...", "window": [[...4x9x9...]]}. Each
response line echoes the id and adds probs, bits, emotion, avatar, and
latency_ms. Responses keep request order per connection. A malformed
line yields {"error": "parse"} without dropping the connection; lines
over the size cap yield {"error": "too_large"}.
"""

from __future__ import annotations

import json
import socket
import threading
import time

import numpy as np

from .emotions import AvatarManifest, EmotionTable, classify_window

MAX_LINE_BYTES = 1 << 20


class ServeError(RuntimeError):
    """Server could not start (e.g. bind failure)."""


def _error_obj(code, req_id=None):
    obj = {"error": code}
    if req_id is not None:
        obj["id"] = req_id
    return obj


def handle_request_line(line, model, table, manifest):
    """One NDJSON request line to one response object."""
    try:
        obj = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError):
        return _error_obj("parse")
    if not isinstance(obj, dict):
        return _error_obj("parse")
    req_id = obj.get("id")
    window = obj.get("window")
    try:
        arr = np.asarray(window, dtype=np.float32)
    except (TypeError, ValueError):
        return _error_obj("shape", req_id)
    if arr.shape != (4, 9, 9):
        return _error_obj("shape", req_id)
    if not np.isfinite(arr).all():
        return _error_obj("shape", req_id)
    t0 = time.perf_counter()
    record = classify_window(model, arr, table, manifest)
    latency_ms = (time.perf_counter() - t0) * 1e3
    return {
        "id": req_id,
        "probs": list(record.probs),
        "bits": list(record.bits),
        "emotion": record.emotion,
        "avatar": record.avatar,
        "latency_ms": latency_ms,
    }


class InferenceServer:
    """TCP acceptor with one worker thread per connection.

    The model is read-only during serving, so concurrent forward passes
    across connections are safe; within a connection requests run
    sequentially, which guarantees response order.
    """

    def __init__(self, model, table=None, manifest=None, host="127.0.0.1", port=0,
                 max_line_bytes=MAX_LINE_BYTES):
        self.model = model
        self.table = table or EmotionTable.default()
        self.manifest = (manifest or AvatarManifest.default(self.table)).check_covers(self.table)
        self.max_line_bytes = max_line_bytes
        self._shutdown = threading.Event()
        self._threads = []
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            self._sock.bind((host, port))
        except OSError as exc:
            self._sock.close()
            raise ServeError(f"cannot bind {host}:{port}: {exc}") from None
        self._sock.listen(16)
        self._sock.settimeout(0.2)
        self._acceptor = None

    @property
    def address(self):
        return self._sock.getsockname()

    def start(self):
        self._acceptor = threading.Thread(target=self._accept_loop, daemon=True)
        self._acceptor.start()
        return self

    def _accept_loop(self):
        while not self._shutdown.is_set():
            try:
                conn, _ = self._sock.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            t = threading.Thread(target=self._serve_connection, args=(conn,), daemon=True)
            t.start()
            self._threads.append(t)
        self._sock.close()

    def _serve_connection(self, conn):
        conn.settimeout(0.2)
        buf = bytearray()
        discarding = False
        try:
            while True:
                if self._shutdown.is_set():
                    # Finish whatever complete lines are already in flight.
                    self._drain(conn, buf, discarding)
                    return
                try:
                    chunk = conn.recv(65536)
                except socket.timeout:
                    continue
                except OSError:
                    return
                if not chunk:
                    self._drain(conn, buf, discarding)
                    return
                buf.extend(chunk)
                discarding = self._process_buffer(conn, buf, discarding)
        finally:
            try:
                conn.close()
            except OSError:
                pass

    def _process_buffer(self, conn, buf, discarding):
        while True:
            nl = buf.find(b"\n")
            if nl < 0:
                if discarding:
                    buf.clear()
                elif len(buf) > self.max_line_bytes:
                    self._send(conn, _error_obj("too_large"))
                    buf.clear()
                    discarding = True
                return discarding
            line = bytes(buf[:nl])
            del buf[: nl + 1]
            if discarding:
                discarding = False  # tail of the oversized line
                continue
            if len(line) > self.max_line_bytes:
                self._send(conn, _error_obj("too_large"))
                continue
            if not line.strip():
                continue
            self._send(conn, handle_request_line(line, self.model, self.table, self.manifest))

    def _drain(self, conn, buf, discarding):
        if not discarding and buf:
            self._process_buffer(conn, buf, discarding)

    def _send(self, conn, obj):
        try:
            conn.sendall(json.dumps(obj).encode("utf-8") + b"\n")
        except OSError:
            pass

    def shutdown(self):
        """Signal-handler safe: stop accepting and let handlers drain."""
        self._shutdown.set()

    def stop(self, timeout=5.0):
        self._shutdown.set()
        if self._acceptor is not None:
            self._acceptor.join(timeout)
        for t in self._threads:
            t.join(timeout)

    def wait(self, poll=0.2):
        """Block the caller until stop() or a signal handler shuts down."""
        while not self._shutdown.is_set():
            time.sleep(poll)
        self.stop()
