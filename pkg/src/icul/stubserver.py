"""Local completion-endpoint stub.

Replays a fixed top-logprobs payload for every request and records the
prompts it receives, so backend behavior can be tested without a real
model server. Also runnable standalone:

    python -m icul.stubserver --port 8731 --logprobs '{" positive": -0.3}'
"""

import argparse
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class StubServer:
    """Wraps ThreadingHTTPServer; use as a context manager in tests."""

    def __init__(self, logprobs: dict, port: int = 0, path: str = "/v1/completions"):
        self.logprobs = dict(logprobs)
        self.requests = []          # parsed JSON bodies, in arrival order
        self._lock = threading.Lock()
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length) or b"{}")
                with stub._lock:
                    stub.requests.append(body)
                if self.path != path:
                    self.send_response(404)
                    self.end_headers()
                    return
                top = stub.logprobs
                best = max(top, key=top.get) if top else ""
                payload = {
                    "choices": [{
                        "text": best,
                        "logprobs": {"top_logprobs": [top]},
                    }],
                    "model": body.get("model", "stub"),
                }
                data = json.dumps(payload).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", port), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def endpoint(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}"

    def prompts(self) -> list:
        with self._lock:
            return [r.get("prompt") for r in self.requests]

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._server.shutdown()
        self._server.server_close()
        return False


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="completion-endpoint stub")
    parser.add_argument("--port", type=int, default=8731)
    parser.add_argument("--path", default="/v1/completions")
    parser.add_argument(
        "--logprobs",
        default='{"positive": -0.35667494393873245, "negative": -1.2039728043259361}',
        help="JSON map token -> logprob replayed for every request",
    )
    args = parser.parse_args(argv)
    server = StubServer(json.loads(args.logprobs), port=args.port, path=args.path)
    with server:
        print(f"stub listening on {server.endpoint}{args.path}")
        try:
            threading.Event().wait()
        except KeyboardInterrupt:
            pass
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
