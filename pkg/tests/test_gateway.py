"""Masked contexts, substitute filtering, and the wire protocol."""

from __future__ import annotations

import json
import socket
import sys
import threading
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from driftscope.backends import (
    FixedRankingBackend,
    PredictRequest,
    PredictResponse,
    StdioSubstituter,
    SyntheticSubstituter,
    TcpSubstituter,
    make_request_id,
    synthetic_substituter,
)
from driftscope.corpus import Document, Occurrence
from driftscope.errors import BackendError, DataError, ProtocolError
from driftscope.gateway import (
    MaskedContext,
    SubstituterConfig,
    extract_context_window,
    filter_substitutes,
    load_substitute_sets,
    request_substitutes,
    save_substitute_sets,
)
from driftscope.metric import count_replacements, jsd

FAKE_BACKEND = Path(__file__).parent / "fixtures" / "fake_backend.py"


def make_context(i: int = 0, term: str = "plane", corpus_id: str = "C1") -> MaskedContext:
    return MaskedContext(
        occurrence=Occurrence(corpus_id, f"d{i:04d}", 0),
        left=("a",),
        right=("b",),
        masked_surface=term,
        term=term,
    )


class TestContextWindow:
    def test_interior_window(self):
        doc = Document("d0", tuple(f"t{i}" for i in range(200)))
        ctx = extract_context_window(doc, Occurrence("C1", "d0", 60), window=50)
        assert ctx.left == tuple(f"t{i}" for i in range(10, 60))
        assert ctx.right == tuple(f"t{i}" for i in range(61, 111))
        assert ctx.masked_surface == "t60"
        assert len(ctx.left) == len(ctx.right) == 50

    def test_left_truncation(self):
        doc = Document("d0", tuple(f"t{i}" for i in range(200)))
        ctx = extract_context_window(doc, Occurrence("C1", "d0", 3), window=50)
        assert ctx.left == ("t0", "t1", "t2")

    def test_single_token_document(self):
        doc = Document("d0", ("only",))
        ctx = extract_context_window(doc, Occurrence("C1", "d0", 0), window=50)
        assert ctx.left == () and ctx.right == ()
        assert ctx.masked_surface == "only"

    def test_out_of_range(self):
        doc = Document("d0", ("a", "b"))
        with pytest.raises(DataError, match="outside"):
            extract_context_window(doc, Occurrence("C1", "d0", 5), window=50)


class TestFilterSubstitutes:
    def test_rules_applied_in_order(self):
        ranked = ["of", "##s", "plane", "plane", "jet"]
        assert filter_substitutes(ranked, frozenset({"of"}), "##", 2) == [
            "plane",
            "jet",
        ]

    def test_exclude_target(self):
        assert filter_substitutes(
            ["plane", "jet", "car"], frozenset(), "##", 2, exclude="plane"
        ) == ["jet", "car"]

    def test_empty_input(self):
        assert filter_substitutes([], frozenset(), "##", 5) == []

    def test_stopwords_case_insensitive(self):
        assert filter_substitutes(["The", "sky"], frozenset({"the"}), "##", 5) == [
            "sky"
        ]

    @given(
        ranked=st.lists(st.text(alphabet="ab#", min_size=1, max_size=4), max_size=30),
        k_keep=st.integers(min_value=1, max_value=8),
    )
    @settings(max_examples=60, deadline=None)
    def test_idempotent(self, ranked, k_keep):
        stop = frozenset({"a"})
        once = filter_substitutes(ranked, stop, "##", k_keep)
        twice = filter_substitutes(once, stop, "##", k_keep)
        assert once == twice


class TestRequestSubstitutes:
    def test_filters_backend_ranking(self):
        backend = FixedRankingBackend(
            ["the", "##ing", "aircraft", "jet", "plane", "car", "sky"]
        )
        cfg = SubstituterConfig(k=5, stopwords=frozenset({"the"}))
        sets, failures = request_substitutes([make_context()], backend, cfg)
        assert failures == []
        assert sets[0].substitutes == ("aircraft", "jet", "plane", "car", "sky")

    def test_constant_backend_constant_sets(self):
        backend = FixedRankingBackend(["x", "y", "z"])
        cfg = SubstituterConfig(k=2)
        contexts = [make_context(i) for i in range(5)]
        sets, _ = request_substitutes(contexts, backend, cfg)
        assert all(s.substitutes == ("x", "y") for s in sets)

    def test_batch_equals_singletons(self):
        spec = {
            "plane": {
                "C1": {"jet": 0.4, "wing": 0.3, "sky": 0.2, "air": 0.1},
            }
        }
        backend = SyntheticSubstituter(spec, seed=5)
        cfg = SubstituterConfig(k=3)
        contexts = [make_context(i) for i in range(7)]
        batch_sets, _ = request_substitutes(contexts, backend, cfg)
        single_sets = []
        for ctx in contexts:
            got, _ = request_substitutes([ctx], backend, cfg)
            single_sets.extend(got)
        assert batch_sets == single_sets

    def test_unknown_response_id_is_protocol_violation(self):
        class RogueBackend:
            def predict(self, requests):
                return [PredictResponse("not-a-real-id", ("x",)) for _ in requests]

        with pytest.raises(ProtocolError, match="not in request batch"):
            request_substitutes(
                [make_context()], RogueBackend(), SubstituterConfig(k=1)
            )

    def test_short_sets_kept(self):
        backend = FixedRankingBackend(["only"])
        cfg = SubstituterConfig(k=5)
        sets, failures = request_substitutes([make_context()], backend, cfg)
        assert sets[0].substitutes == ("only",)
        assert failures == []

    def test_empty_batch_rejected(self):
        with pytest.raises(DataError):
            request_substitutes([], FixedRankingBackend(["x"]), SubstituterConfig())


class TestSyntheticBackend:
    def test_point_mass(self):
        backend = synthetic_substituter({"t": {"C1": {"x": 1.0}}}, seed=0)
        cfg = SubstituterConfig(k=1)
        sets, _ = request_substitutes(
            [make_context(i, term="t") for i in range(10)], backend, cfg
        )
        assert all(s.substitutes == ("x",) for s in sets)

    def test_bad_distribution_rejected(self):
        with pytest.raises(DataError, match="sums to"):
            SyntheticSubstituter({"t": {"C1": {"x": 0.7, "y": 0.2}}}, seed=0)

    def test_unknown_term_rejected(self):
        backend = synthetic_substituter({"t": {"C1": {"x": 1.0}}}, seed=0)
        with pytest.raises(DataError, match="missing"):
            backend.predict(
                [PredictRequest("r0", (), (), 1, term="other", corpus_id="C1")]
            )

    def test_determinism_per_occurrence(self):
        spec = {"t": {"C1": {w: 0.25 for w in ("a", "b", "c", "d")}}}
        first = synthetic_substituter(spec, seed=9)
        second = synthetic_substituter(spec, seed=9)
        reqs = [
            PredictRequest(f"id{i}", (), (), 2, term="t", corpus_id="C1")
            for i in range(20)
        ]
        assert first.predict(reqs) == second.predict(list(reversed(reqs)))[::-1]

    def _simulate_raw_jsd(self, spec, n: int, seed: int) -> float:
        backend = synthetic_substituter(spec, seed=seed)
        cfg = SubstituterConfig(k=5)
        dists = {}
        for corpus_id in ("C1", "C2"):
            contexts = [
                make_context(i, term="t", corpus_id=corpus_id) for i in range(n)
            ]
            sets, _ = request_substitutes(contexts, backend, cfg)
            dists[corpus_id] = count_replacements(sets)
        return jsd(dists["C1"], dists["C2"])

    def test_identical_spec_drives_jsd_toward_zero(self):
        shared = {f"w{i}": 0.1 for i in range(10)}
        spec = {"t": {"C1": shared, "C2": shared}}
        small = self._simulate_raw_jsd(spec, n=40, seed=3)
        large = self._simulate_raw_jsd(spec, n=4000, seed=3)
        assert large < small
        assert large < 0.05

    def test_disjoint_spec_drives_jsd_to_one(self):
        spec = {
            "t": {
                "C1": {f"a{i}": 0.2 for i in range(5)},
                "C2": {f"b{i}": 0.2 for i in range(5)},
            }
        }
        assert self._simulate_raw_jsd(spec, n=200, seed=4) == pytest.approx(1.0)


class TestStorage:
    def test_roundtrip_and_contract(self, tmp_path):
        backend = FixedRankingBackend(["jet", "wing", "sky"])
        cfg = SubstituterConfig(k=2, keep_extra_for_senses=True)
        contexts = [make_context(i) for i in range(4)]
        sets, _ = request_substitutes(contexts, backend, cfg)
        path = tmp_path / "subs.jsonl"
        save_substitute_sets(sets, path)
        loaded = load_substitute_sets(path)
        assert loaded == sets
        # storage contract: occurrence references and <= k+1 strings, no numbers
        for line in path.read_text().splitlines():
            row = json.loads(line)
            assert set(row) == {"term", "corpus", "doc", "pos", "subs"}
            assert len(row["subs"]) <= cfg.k + 1
            assert all(isinstance(s, str) for s in row["subs"])


class TestWireProtocol:
    def _stdio(self, *flags: str) -> StdioSubstituter:
        return StdioSubstituter([sys.executable, str(FAKE_BACKEND), *flags])

    def _requests(self, n: int) -> list[PredictRequest]:
        return [
            PredictRequest(
                make_request_id(Occurrence("C1", f"d{i}", i)),
                ("left",),
                ("right",),
                5,
            )
            for i in range(n)
        ]

    def test_stdio_roundtrip(self):
        with self._stdio() as backend:
            results = backend.predict(self._requests(4))
        assert len(results) == 4
        assert all(isinstance(r, PredictResponse) for r in results)
        assert results[0].substitutes[0] == "the"

    def test_out_of_order_responses_rematched(self):
        with self._stdio("--reverse-order") as backend:
            requests = self._requests(4)
            results = backend.predict(requests)
        assert [r.id for r in results] == [r.id for r in requests]

    def test_per_item_error_does_not_abort_batch(self):
        requests = self._requests(3)
        with self._stdio("--error-id", requests[1].id) as backend:
            contexts = [make_context(i) for i in range(3)]
            # build contexts whose ids match the scripted error id
            sets, failures = request_substitutes(
                [
                    MaskedContext(Occurrence("C1", f"d{i}", i), ("l",), ("r",), "plane")
                    for i in range(3)
                ],
                backend,
                SubstituterConfig(k=2),
            )
        assert len(sets) == 2
        assert len(failures) == 1
        assert failures[0].message == "backend boom"

    def test_bad_id_raises_protocol_error(self):
        with self._stdio("--bad-id") as backend:
            with pytest.raises(ProtocolError, match="not in request batch"):
                backend.predict(self._requests(2))

    def test_missing_hello_raises(self):
        with pytest.raises(ProtocolError, match="hello"):
            self._stdio("--no-hello").predict(self._requests(1))

    def test_unreachable_backend(self):
        with pytest.raises(BackendError, match="unreachable"):
            StdioSubstituter(["/nonexistent/backend/binary"])

    def test_tcp_roundtrip(self):
        ranking = ["alpha", "beta", "gamma", "delta", "epsilon"]

        def serve(server_sock: socket.socket):
            conn, _ = server_sock.accept()
            with conn, conn.makefile("r", encoding="utf-8") as reader, conn.makefile(
                "w", encoding="utf-8"
            ) as writer:
                writer.write(
                    json.dumps(
                        {"type": "hello", "protocol": 1, "mask_behavior": "single-token"}
                    )
                    + "\n"
                )
                writer.flush()
                for line in reader:
                    msg = json.loads(line)
                    writer.write(
                        json.dumps(
                            {
                                "type": "prediction",
                                "id": msg["id"],
                                "substitutes": ranking,
                            }
                        )
                        + "\n"
                    )
                    writer.flush()

        server = socket.socket()
        server.bind(("127.0.0.1", 0))
        server.listen(1)
        port = server.getsockname()[1]
        thread = threading.Thread(target=serve, args=(server,), daemon=True)
        thread.start()
        try:
            with TcpSubstituter("127.0.0.1", port) as backend:
                results = backend.predict(self._requests(3))
            assert all(r.substitutes == tuple(ranking) for r in results)
        finally:
            server.close()
