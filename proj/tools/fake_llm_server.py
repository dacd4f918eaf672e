#!/usr/bin/env python3
"""Local chat-completion stand-in used to record replay fixtures.

Answers the step-1 definitions prompt with one canned file and every other
prompt with another. Run it, point `alphalab mine --live` at it, and the
session log directory becomes a replay fixture:

    python3 tools/fake_llm_server.py --port 8765 \
        --definitions tests/fixtures/replay/src/definitions_response.md \
        --response tests/fixtures/replay/src/iqs_response.md &
    ALPHALAB_API_KEY=dummy build/tools/alphalab -c run.cfg mine --live \
        --set endpoint=http://127.0.0.1:8765/v1/chat/completions \
        --set session_log=tests/fixtures/replay/iqs_demo_seed7
"""

import argparse
import json
from http.server import BaseHTTPRequestHandler, HTTPServer

DEFINITIONS_PREFIX = "For each financial signal listed below"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--port", type=int, default=8765)
    ap.add_argument("--definitions", required=True)
    ap.add_argument("--response", required=True)
    ap.add_argument("--key", default=None, help="reject requests whose bearer token differs")
    args = ap.parse_args()

    with open(args.definitions, encoding="utf-8") as f:
        definitions = f.read()
    with open(args.response, encoding="utf-8") as f:
        response = f.read()

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            body = json.loads(self.rfile.read(int(self.headers.get("Content-Length", 0))))
            if args.key is not None and self.headers.get("Authorization") != "Bearer " + args.key:
                self.send_response(401)
                self.end_headers()
                return
            prompt = body["messages"][-1]["content"]
            text = definitions if prompt.startswith(DEFINITIONS_PREFIX) else response
            out = json.dumps({
                "id": "local",
                "object": "chat.completion",
                "model": body.get("model", ""),
                "choices": [{"index": 0, "message": {"role": "assistant", "content": text},
                             "finish_reason": "stop"}],
            }).encode()
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(out)))
            self.end_headers()
            self.wfile.write(out)

        def log_message(self, *a):
            pass

    HTTPServer(("127.0.0.1", args.port), Handler).serve_forever()


if __name__ == "__main__":
    main()
