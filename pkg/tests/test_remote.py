"""Wire-protocol tests against an in-process HTTP stub (no sidecar needed)."""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from polyseg.backends import (
    Mask2D,
    RemoteBackend,
    decode_mask_reply,
    encode_mask_reply,
    encode_segment_request,
    flood_oracle,
    segment2d,
)
from polyseg.errors import BackendUnavailable, ProtocolError
from polyseg.geometry import PromptPoint2D

from .test_backends import disk_image, make_task, pt


class _StubHandler(BaseHTTPRequestHandler):
    mode = "flood"  # flood | short_reply | not_json | http_500

    def log_message(self, *args):
        pass

    def do_GET(self):
        if self.path == "/health":
            body = json.dumps({"status": "ok", "model": "stub"}).encode()
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.end_headers()
            self.wfile.write(body)
        else:
            self.send_response(404)
            self.end_headers()

    def do_POST(self):
        if self.path != "/segment":
            self.send_response(404)
            self.end_headers()
            return
        length = int(self.headers["Content-Length"])
        req = json.loads(self.rfile.read(length))
        mode = type(self).mode
        if mode == "http_500":
            self.send_response(500)
            self.end_headers()
            return
        if mode == "not_json":
            self.send_response(200)
            self.end_headers()
            self.wfile.write(b"definitely not json")
            return
        import base64

        w, h = req["width"], req["height"]
        pixels = np.frombuffer(base64.b64decode(req["pixels_b64"]), np.uint8).reshape(h, w)
        positives = [PromptPoint2D(x=p[0], y=p[1], label="positive") for p in req["positive"]]
        negatives = [PromptPoint2D(x=p[0], y=p[1], label="negative") for p in req["negative"]]
        mask = flood_oracle(pixels, 128, positives, negatives)
        reply = encode_mask_reply(mask)
        if mode == "short_reply":
            import base64 as b64

            reply = {"mask_b64": b64.b64encode(b"\x00" * 5).decode()}
        body = json.dumps(reply).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(body)


@pytest.fixture()
def stub_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _StubHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _StubHandler.mode = "flood"
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()
    thread.join(timeout=5)


class TestRemoteBackend:
    def test_remote_matches_local_oracle(self, stub_server):
        backend = RemoteBackend(stub_server, timeout=10)
        rng = np.random.default_rng(0)
        for _ in range(10):
            img = (rng.random((20, 24)) * 255).astype(np.uint8)
            positives = [pt(rng.uniform(0, 23), rng.uniform(0, 19))]
            negatives = [pt(rng.uniform(0, 23), rng.uniform(0, 19), "negative")]
            task = make_task(img, positives, negatives)
            remote = segment2d(backend, task)
            local = flood_oracle(img, 128, positives, negatives)
            np.testing.assert_array_equal(remote.bits, local.bits)

    def test_wrong_length_reply(self, stub_server):
        _StubHandler.mode = "short_reply"
        backend = RemoteBackend(stub_server, timeout=10)
        with pytest.raises(ProtocolError):
            backend.segment(make_task(disk_image(), [pt(32, 32)]))

    def test_non_json_reply(self, stub_server):
        _StubHandler.mode = "not_json"
        backend = RemoteBackend(stub_server, timeout=10)
        with pytest.raises(ProtocolError):
            backend.segment(make_task(disk_image(), [pt(32, 32)]))

    def test_unreachable_after_retry(self):
        backend = RemoteBackend("http://127.0.0.1:1", timeout=0.5)
        with pytest.raises(BackendUnavailable):
            backend.segment(make_task(disk_image(), [pt(32, 32)]))

    def test_server_error_retries_then_unavailable(self, stub_server):
        _StubHandler.mode = "http_500"
        backend = RemoteBackend(stub_server, timeout=5)
        with pytest.raises(BackendUnavailable):
            backend.segment(make_task(disk_image(), [pt(32, 32)]))

    def test_health(self, stub_server):
        assert RemoteBackend(stub_server).health()["status"] == "ok"


class TestProtocolCodec:
    def test_mask_round_trip_lossless(self):
        rng = np.random.default_rng(1)
        for _ in range(25):
            w, h = int(rng.integers(1, 40)), int(rng.integers(1, 40))
            bits = rng.random((h, w)) > 0.5
            mask = Mask2D(width=w, height=h, bits=bits)
            back = decode_mask_reply(encode_mask_reply(mask), w, h)
            np.testing.assert_array_equal(back.bits, bits)

    def test_request_fields(self):
        task = make_task(disk_image(), [pt(3, 4)], [pt(5, 6, "negative")])
        req = encode_segment_request(task)
        assert set(req) == {"width", "height", "pixels_b64", "positive", "negative"}
        assert req["positive"] == [[3.0, 4.0]]
        assert req["negative"] == [[5.0, 6.0]]

    def test_decode_rejects_non_binary_bytes(self):
        import base64

        doc = {"mask_b64": base64.b64encode(bytes([0, 255, 7, 0])).decode()}
        with pytest.raises(ProtocolError):
            decode_mask_reply(doc, 2, 2)
