"""Protocol loop: hello first, then predict/prediction/error lines."""

from __future__ import annotations

import json
import socket
from typing import IO

from .model import PROTOCOL_VERSION, MaskedTokenRanker


def _hello() -> str:
    return json.dumps(
        {
            "type": "hello",
            "protocol": PROTOCOL_VERSION,
            "mask_behavior": "single-token",
        }
    )


def _handle_line(ranker: MaskedTokenRanker, line: str) -> str:
    request_id = ""
    try:
        msg = json.loads(line)
        if isinstance(msg, dict):
            request_id = str(msg.get("id", ""))
        if not isinstance(msg, dict) or msg.get("type") != "predict":
            raise ValueError("expected a predict message")
        left = msg["left"]
        right = msg["right"]
        k = int(msg["k"])
        if not (
            isinstance(left, list)
            and isinstance(right, list)
            and all(isinstance(t, str) for t in left + right)
        ):
            raise ValueError("left/right must be lists of strings")
        substitutes = ranker.rank(left, right, k)
        return json.dumps(
            {"type": "prediction", "id": request_id, "substitutes": substitutes},
            ensure_ascii=False,
        )
    except Exception as exc:  # malformed request: error out, keep serving
        return json.dumps(
            {"type": "error", "id": request_id, "message": str(exc)},
            ensure_ascii=False,
        )


def serve_stream(ranker: MaskedTokenRanker, reader: IO[str], writer: IO[str]) -> None:
    writer.write(_hello() + "\n")
    writer.flush()
    for line in reader:
        line = line.strip()
        if not line:
            continue
        writer.write(_handle_line(ranker, line) + "\n")
        writer.flush()


def serve_tcp(ranker: MaskedTokenRanker, host: str, port: int) -> None:
    """Accept protocol connections one at a time."""
    server = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    server.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    server.bind((host, port))
    server.listen(1)
    print(f"listening on {host}:{server.getsockname()[1]}", flush=True)
    try:
        while True:
            conn, _ = server.accept()
            with conn:
                reader = conn.makefile("r", encoding="utf-8")
                writer = conn.makefile("w", encoding="utf-8")
                try:
                    serve_stream(ranker, reader, writer)
                except (BrokenPipeError, ConnectionResetError):
                    pass
    finally:
        server.close()
