"""Substituter backends and the JSON-lines wire protocol client.

A backend receives predict requests (masked context plus an id) and
answers with ranked candidate substitutes. Two in-process backends exist
for testing: a seeded synthetic sampler driven by per-term categorical
distributions, and a constant-ranking echo. Real model backends are
reached over the wire protocol, one JSON object per line:

  hello (backend first): {"type":"hello","protocol":1,"mask_behavior":"single-token"}
  request:  {"type":"predict","id":"...","left":[...],"right":[...],"k":N}
  response: {"type":"prediction","id":"...","substitutes":[...]}
  error:    {"type":"error","id":"...","message":"..."}

Responses may arrive out of order; ids carry identity.
"""

from __future__ import annotations

import json
import socket
import subprocess
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from . import _rng
from .corpus import Occurrence
from .errors import BackendError, DataError, ProtocolError

PROTOCOL_VERSION = 1
DISTRIBUTION_TOLERANCE = 1e-9


@dataclass(frozen=True)
class PredictRequest:
    """One masked position to predict. term/corpus_id are in-process
    metadata for synthetic backends; they never cross the wire."""

    id: str
    left: tuple[str, ...]
    right: tuple[str, ...]
    k: int
    term: str | None = None
    corpus_id: str | None = None


@dataclass(frozen=True)
class PredictResponse:
    id: str
    substitutes: tuple[str, ...]


@dataclass(frozen=True)
class PredictFailure:
    id: str
    message: str


PredictResult = PredictResponse | PredictFailure


def make_request_id(occ: Occurrence) -> str:
    """Serialize (corpus_id, doc_id, token_position) as a stable string id."""
    return json.dumps(
        [occ.corpus_id, occ.doc_id, occ.token_position],
        ensure_ascii=False,
        separators=(",", ":"),
    )


class SubstituterBackend(Protocol):
    def predict(self, requests: Sequence[PredictRequest]) -> list[PredictResult]:
        ...


class FixedRankingBackend:
    """Echoes one fixed ranking for every request (test fixture)."""

    def __init__(self, ranking: Iterable[str]):
        self.ranking = tuple(ranking)

    def predict(self, requests: Sequence[PredictRequest]) -> list[PredictResult]:
        return [PredictResponse(r.id, self.ranking) for r in requests]


class SyntheticSubstituter:
    """Seeded sampler over per-(term, corpus) categorical distributions.

    For each request the returned ranking is a Plackett-Luce draw from
    spec[term][corpus] (Gumbel top-k), so the top-k entries are k
    successive without-replacement draws. The noise is derived from the
    (occurrence id, seed) pair alone: results do not depend on batching.
    """

    def __init__(
        self,
        spec: Mapping[str, Mapping[str, Mapping[str, float]]],
        seed: int,
        candidate_factor: int = 4,
    ):
        self.seed = seed
        self.candidate_factor = candidate_factor
        self._tables: dict[tuple[str, str], tuple[list[str], np.ndarray]] = {}
        for term, per_corpus in spec.items():
            for corpus_id, dist in per_corpus.items():
                total = float(sum(dist.values()))
                if abs(total - 1.0) > DISTRIBUTION_TOLERANCE:
                    raise DataError(
                        f"distribution for ({term!r}, {corpus_id!r}) sums to {total}"
                    )
                words = sorted(dist)
                probs = np.array([dist[w] for w in words], dtype=np.float64)
                with np.errstate(divide="ignore"):
                    logp = np.log(probs)
                self._tables[(term, corpus_id)] = (words, logp)

    def predict(self, requests: Sequence[PredictRequest]) -> list[PredictResult]:
        by_key: dict[tuple[str, str], list[int]] = {}
        for i, req in enumerate(requests):
            if req.term is None or req.corpus_id is None:
                raise DataError("synthetic backend needs term/corpus metadata")
            key = (req.term, req.corpus_id)
            if key not in self._tables:
                raise DataError(
                    f"term {req.term!r} in corpus {req.corpus_id!r} missing "
                    "from the synthetic distribution spec"
                )
            by_key.setdefault(key, []).append(i)

        results: list[PredictResult | None] = [None] * len(requests)
        for key, idxs in by_key.items():
            words, logp = self._tables[key]
            seeds = np.array(
                [_rng.derive_seed(self.seed, "synthetic", requests[i].id) for i in idxs],
                dtype=np.uint64,
            )
            noise = _rng.gumbel_matrix(seeds, len(words))
            scores = logp[None, :] + noise
            order = np.argsort(-scores, axis=1, kind="stable")
            for row, i in enumerate(idxs):
                want = min(self.candidate_factor * requests[i].k, len(words))
                ranking = tuple(words[j] for j in order[row, :want])
                results[i] = PredictResponse(requests[i].id, ranking)
        return [r for r in results if r is not None]


def _parse_message(line: str) -> dict:
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"malformed protocol line: {exc}") from None
    if not isinstance(msg, dict) or "type" not in msg:
        raise ProtocolError(f"protocol message lacks a type: {line!r}")
    return msg


def _check_hello(msg: dict) -> None:
    if msg.get("type") != "hello":
        raise ProtocolError(f"expected hello, got {msg.get('type')!r}")
    if msg.get("protocol") != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported protocol version {msg.get('protocol')!r}")
    if msg.get("mask_behavior") != "single-token":
        raise ProtocolError(
            f"unsupported mask behavior {msg.get('mask_behavior')!r}"
        )


class _WireSubstituter:
    """Shared framing for backends reached over a line stream."""

    _reader = None
    _writer = None

    def _handshake(self) -> None:
        line = self._reader.readline()
        if not line:
            raise BackendError("backend closed the stream before the handshake")
        _check_hello(_parse_message(line))

    def predict(self, requests: Sequence[PredictRequest]) -> list[PredictResult]:
        if not requests:
            raise DataError("empty request batch")
        pending = {r.id for r in requests}
        if len(pending) != len(requests):
            raise DataError("duplicate request ids in batch")
        for req in requests:
            payload = {
                "type": "predict",
                "id": req.id,
                "left": list(req.left),
                "right": list(req.right),
                "k": req.k,
            }
            self._writer.write(json.dumps(payload, ensure_ascii=False) + "\n")
        self._writer.flush()

        results: dict[str, PredictResult] = {}
        while pending:
            line = self._reader.readline()
            if not line:
                raise BackendError(
                    f"backend stream ended with {len(pending)} responses outstanding"
                )
            msg = _parse_message(line)
            kind = msg.get("type")
            if kind not in ("prediction", "error"):
                raise ProtocolError(f"unexpected message type {kind!r} mid-batch")
            msg_id = msg.get("id")
            if msg_id not in pending:
                raise ProtocolError(f"response id {msg_id!r} not in request batch")
            pending.discard(msg_id)
            if kind == "prediction":
                subs = msg.get("substitutes")
                if not isinstance(subs, list) or not all(
                    isinstance(s, str) for s in subs
                ):
                    raise ProtocolError(f"bad substitutes payload for id {msg_id!r}")
                results[msg_id] = PredictResponse(msg_id, tuple(subs))
            else:
                results[msg_id] = PredictFailure(msg_id, str(msg.get("message", "")))
        return [results[r.id] for r in requests]

    def close(self) -> None:  # pragma: no cover - overridden
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


class StdioSubstituter(_WireSubstituter):
    """Backend spoken to over a subprocess's stdin/stdout."""

    def __init__(self, argv: Sequence[str]):
        try:
            self._proc = subprocess.Popen(
                list(argv),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
            )
        except OSError as exc:
            raise BackendError(f"backend unreachable: {exc}") from None
        self._reader = self._proc.stdout
        self._writer = self._proc.stdin
        try:
            self._handshake()
        except Exception:
            self._proc.kill()
            raise

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
                self._proc.wait(timeout=10)
            except Exception:
                self._proc.kill()


class TcpSubstituter(_WireSubstituter):
    """Backend spoken to over a TCP socket."""

    def __init__(self, host: str, port: int):
        try:
            self._sock = socket.create_connection((host, port), timeout=60)
        except OSError as exc:
            raise BackendError(f"backend unreachable: {exc}") from None
        self._reader = self._sock.makefile("r", encoding="utf-8")
        self._writer = self._sock.makefile("w", encoding="utf-8")
        try:
            self._handshake()
        except Exception:
            self._sock.close()
            raise

    def close(self) -> None:
        try:
            self._writer.close()
            self._reader.close()
        finally:
            self._sock.close()


def synthetic_substituter(
    spec: Mapping[str, Mapping[str, Mapping[str, float]]],
    seed: int,
    candidate_factor: int = 4,
) -> SyntheticSubstituter:
    """Deterministic in-process oracle backend for tests and simulations."""
    return SyntheticSubstituter(spec, seed, candidate_factor=candidate_factor)
