"""Masked-context extraction, substitute requests, and filtering.

The gateway owns the representation rules: the masked window is up to
50 tokens each side, a backend's raw ranking is filtered of stopwords,
partial word pieces and duplicates, and only the top few surviving
strings are ever stored - occurrence references plus strings, never
probabilities.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .backends import (
    PredictFailure,
    PredictRequest,
    SubstituterBackend,
    make_request_id,
)
from .corpus import Document, Occurrence
from .errors import DataError, ProtocolError


@dataclass(frozen=True)
class MaskedContext:
    """One occurrence with its clipped left/right context.

    ``term`` is the indexed term the occurrence belongs to (the lemma,
    when alignment is in play); it defaults to the masked surface form.
    """

    occurrence: Occurrence
    left: tuple[str, ...]
    right: tuple[str, ...]
    masked_surface: str
    term: str | None = None

    @property
    def term_or_surface(self) -> str:
        return self.term if self.term is not None else self.masked_surface


@dataclass(frozen=True)
class SubstituteSet:
    """Ordered top substitutes for one masked occurrence (strings only)."""

    occurrence: Occurrence
    term: str
    substitutes: tuple[str, ...]


@dataclass(frozen=True)
class SubstituterConfig:
    k: int = 5
    keep_extra_for_senses: bool = False
    window: int = 50
    stopword_path: str | None = None
    wordpiece_prefix: str = "##"
    exclude_target: bool = False
    candidate_factor: int = 4
    stopwords: frozenset[str] = field(default_factory=frozenset)  # lowercased

    def __post_init__(self) -> None:
        if self.k < 1:
            raise DataError(f"k must be >= 1, got {self.k}")
        if self.window < 1:
            raise DataError(f"window must be >= 1, got {self.window}")

    @property
    def k_keep(self) -> int:
        """Substitutes stored per occurrence: k, plus one spare for the
        sense stage to drop the target from."""
        return self.k + 1 if self.keep_extra_for_senses else self.k

    @classmethod
    def from_stopword_file(cls, path: str | Path | None, **kwargs) -> "SubstituterConfig":
        stopwords = load_stopwords(path) if path else frozenset()
        return cls(
            stopword_path=str(path) if path else None, stopwords=stopwords, **kwargs
        )


@dataclass(frozen=True)
class BatchFailure:
    context: MaskedContext
    message: str


def load_stopwords(path: str | Path) -> frozenset[str]:
    """One stopword per line; matching is case-insensitive so the set is
    lowercased here, once."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"stopword file does not exist: {path}")
    words = set()
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)


def extract_context_window(
    doc: Document, occurrence: Occurrence, window: int
) -> MaskedContext:
    """Clip up to ``window`` tokens to either side of the occurrence."""
    p = occurrence.token_position
    if not 0 <= p < len(doc.raw_tokens):
        raise DataError(
            f"position {p} outside document {doc.doc_id!r} "
            f"({len(doc.raw_tokens)} tokens)"
        )
    return MaskedContext(
        occurrence=occurrence,
        left=tuple(doc.raw_tokens[max(0, p - window) : p]),
        right=tuple(doc.raw_tokens[p + 1 : p + window + 1]),
        masked_surface=doc.raw_tokens[p],
    )


def filter_substitutes(
    ranked: Sequence[str],
    stopwords: frozenset[str],
    wordpiece_prefix: str,
    k_keep: int,
    exclude: str | None = None,
) -> list[str]:
    """Order-preserving filter of a backend ranking.

    Drops stopwords (case-insensitive; ``stopwords`` must already be
    lowercased), partial word pieces, duplicates, and the excluded term;
    truncates to ``k_keep``.
    """
    exclude_lower = exclude.lower() if exclude is not None else None
    out: list[str] = []
    seen: set[str] = set()
    for candidate in ranked:
        if candidate in seen:
            continue
        if wordpiece_prefix and candidate.startswith(wordpiece_prefix):
            continue
        lower = candidate.lower()
        if lower in stopwords:
            continue
        if exclude_lower is not None and lower == exclude_lower:
            continue
        seen.add(candidate)
        out.append(candidate)
        if len(out) >= k_keep:
            break
    return out


def request_substitutes(
    contexts: Sequence[MaskedContext],
    backend: SubstituterBackend,
    config: SubstituterConfig,
) -> tuple[list[SubstituteSet], list[BatchFailure]]:
    """Fetch and filter substitutes for a batch of masked contexts.

    Backend item errors become ``BatchFailure`` records without aborting
    the batch; protocol violations raise. Backends that yield fewer than
    ``k`` valid candidates after filtering produce short sets, not
    errors.
    """
    if not contexts:
        raise DataError("empty context batch")
    requests = []
    by_id: dict[str, MaskedContext] = {}
    for ctx in contexts:
        rid = make_request_id(ctx.occurrence)
        if rid in by_id:
            raise DataError(f"duplicate occurrence in batch: {rid}")
        by_id[rid] = ctx
        requests.append(
            PredictRequest(
                id=rid,
                left=ctx.left,
                right=ctx.right,
                k=config.k_keep,
                term=ctx.term_or_surface,
                corpus_id=ctx.occurrence.corpus_id,
            )
        )
    responses = backend.predict(requests)
    matched: dict[str, object] = {}
    for response in responses:
        if response.id not in by_id:
            raise ProtocolError(f"response id {response.id!r} not in request batch")
        if response.id in matched:
            raise ProtocolError(f"duplicate response for id {response.id!r}")
        matched[response.id] = response
    unanswered = [r.id for r in requests if r.id not in matched]
    if unanswered:
        raise ProtocolError(f"{len(unanswered)} requests left unanswered")

    sets: list[SubstituteSet] = []
    failures: list[BatchFailure] = []
    for req, ctx in zip(requests, contexts):
        response = matched[req.id]
        if isinstance(response, PredictFailure):
            failures.append(BatchFailure(ctx, response.message))
            continue
        term = ctx.term_or_surface
        kept = filter_substitutes(
            response.substitutes,
            config.stopwords,
            config.wordpiece_prefix,
            config.k_keep,
            exclude=term if config.exclude_target else None,
        )
        sets.append(
            SubstituteSet(
                occurrence=ctx.occurrence, term=term, substitutes=tuple(kept)
            )
        )
    return sets, failures


def save_substitute_sets(sets: Iterable[SubstituteSet], path: str | Path) -> None:
    """Append-style JSONL persistence:
    ``{"term":...,"corpus":...,"doc":...,"pos":...,"subs":[...]}``."""
    with open(path, "a", encoding="utf-8") as fh:
        for s in sets:
            fh.write(
                json.dumps(
                    {
                        "term": s.term,
                        "corpus": s.occurrence.corpus_id,
                        "doc": s.occurrence.doc_id,
                        "pos": s.occurrence.token_position,
                        "subs": list(s.substitutes),
                    },
                    ensure_ascii=False,
                    separators=(",", ":"),
                )
                + "\n"
            )


def load_substitute_sets(path: str | Path) -> list[SubstituteSet]:
    sets = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"malformed substitutes row at {path}:{lineno}: {exc}")
            sets.append(
                SubstituteSet(
                    occurrence=Occurrence(row["corpus"], row["doc"], int(row["pos"])),
                    term=row["term"],
                    substitutes=tuple(row["subs"]),
                )
            )
    return sets
