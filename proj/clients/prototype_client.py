#!/usr/bin/env python3
"""Minimal prototype client: connects to the woe prototype listener, renders
each prediction as a check or cross, and acks it.

    python3 clients/prototype_client.py --host 127.0.0.1 --port 9090
"""

import argparse
import json
import socket
import sys


def render(frame):
    kind = frame["type"]
    if kind == "session_start":
        return f"session {frame['session_id']} started (target {frame['target_accuracy']:.0f}%)"
    if kind == "session_end":
        return f"session {frame['session_id']} ended at {frame['final_accuracy']:.2f}%"
    if kind == "prediction":
        label = frame["predicted_label"]
        if label is None:
            return "  ?  nothing recognized"
        mark = {True: "  ✓ ", False: "  ✗ "}.get(frame.get("correct"), "    ")
        return f"{mark} {label} ({frame['confidence']}%)"
    return None


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=9090)
    args = parser.parse_args()

    with socket.create_connection((args.host, args.port)) as sock:
        reader = sock.makefile("r", encoding="utf-8", newline="\n")
        for line in reader:
            frame = json.loads(line)
            text = render(frame)
            if text:
                print(text, flush=True)
            if frame["type"] == "prediction":
                ack = json.dumps({"type": "ack", "seq": frame["seq"]}, separators=(",", ":"))
                sock.sendall((ack + "\n").encode("utf-8"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
