"""Two-period corpus storage: loading, occurrence indexing, sampling, counts.

Corpora are assumed pre-tokenized; tokenization here is whitespace
splitting. Document and occurrence orderings are deterministic so that
seeded sampling is reproducible run to run.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping

from . import _rng
from .errors import DataError

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, types only
    from .align import AlignmentConfig, AlignmentMap

logger = logging.getLogger(__name__)

# corpus_id -> doc_id -> AlignmentMap
AlignmentCollection = Mapping[str, Mapping[str, "AlignmentMap"]]


@dataclass(frozen=True)
class Document:
    """One document: surface tokens plus an optional parallel lemma sequence."""

    doc_id: str
    raw_tokens: tuple[str, ...]
    lemma_tokens: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.raw_tokens:
            raise DataError(f"document {self.doc_id!r} has no tokens")
        if any(t == "" for t in self.raw_tokens):
            raise DataError(f"document {self.doc_id!r} contains an empty token")
        if self.lemma_tokens is not None and any(t == "" for t in self.lemma_tokens):
            raise DataError(f"document {self.doc_id!r} contains an empty lemma token")


@dataclass(frozen=True)
class Corpus:
    """An ordered collection of documents for one time period."""

    corpus_id: str
    documents: tuple[Document, ...]
    _by_id: dict[str, Document] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        by_id: dict[str, Document] = {}
        for doc in self.documents:
            if doc.doc_id in by_id:
                raise DataError(
                    f"duplicate doc_id {doc.doc_id!r} in corpus {self.corpus_id!r}"
                )
            by_id[doc.doc_id] = doc
        object.__setattr__(self, "_by_id", by_id)

    def document(self, doc_id: str) -> Document:
        try:
            return self._by_id[doc_id]
        except KeyError:
            raise DataError(
                f"unknown doc_id {doc_id!r} in corpus {self.corpus_id!r}"
            ) from None


@dataclass(frozen=True, order=True)
class Occurrence:
    """One position where a term occurs: (corpus, document, token index)."""

    corpus_id: str
    doc_id: str
    token_position: int


@dataclass
class OccurrenceIndex:
    """term -> occurrences, each list sorted by (doc_id, token_position)."""

    entries: dict[str, list[Occurrence]]

    def occurrences(self, term: str) -> list[Occurrence]:
        try:
            return self.entries[term]
        except KeyError:
            raise DataError(f"term {term!r} unknown to the index") from None

    def terms(self) -> list[str]:
        return sorted(self.entries)


@dataclass
class FrequencyTable:
    """Raw term counts per corpus plus the union count across both."""

    per_corpus: dict[str, dict[str, int]]  # term -> corpus_id -> count
    union: dict[str, int]

    def count(self, term: str, corpus_id: str) -> int:
        return self.per_corpus.get(term, {}).get(corpus_id, 0)

    def union_count(self, term: str) -> int:
        return self.union.get(term, 0)

    def terms(self) -> list[str]:
        return sorted(self.union)

    def corpus_ids(self) -> list[str]:
        ids: set[str] = set()
        for counts in self.per_corpus.values():
            ids.update(counts)
        return sorted(ids)


def _read_lines(path: Path) -> list[str]:
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DataError(f"empty corpus: {path}")
    return lines


def _tokens_from_line(line: str, where: str) -> tuple[str, ...]:
    tokens = tuple(line.split())
    if not tokens:
        raise DataError(f"empty document at {where}")
    return tokens


def load_corpus(
    path: str | Path,
    corpus_id: str,
    format: str = "lines",
    lemma_path: str | Path | None = None,
) -> Corpus:
    """Load a corpus from disk.

    ``format`` is ``"lines"`` (one document per line) or ``"dir"`` (each
    file in a directory is one document). When ``lemma_path`` is given it
    must parallel the raw source document for document.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus path does not exist: {path}")
    if format == "lines":
        raw_lines = _read_lines(path)
        lemma_lines: list[str] | None = None
        if lemma_path is not None:
            lemma_lines = _read_lines(Path(lemma_path))
            if len(lemma_lines) != len(raw_lines):
                raise DataError(
                    "document count mismatch: "
                    f"{len(raw_lines)} raw lines vs {len(lemma_lines)} lemma lines"
                )
        docs = []
        for i, line in enumerate(raw_lines):
            lemma = None
            if lemma_lines is not None:
                lemma = _tokens_from_line(lemma_lines[i], f"{lemma_path}:{i + 1}")
            docs.append(
                Document(
                    doc_id=f"{path.name}:{i:08d}",
                    raw_tokens=_tokens_from_line(line, f"{path}:{i + 1}"),
                    lemma_tokens=lemma,
                )
            )
        return Corpus(corpus_id=corpus_id, documents=tuple(docs))
    if format == "dir":
        if not path.is_dir():
            raise DataError(f"not a directory: {path}")
        names = sorted(p.name for p in path.iterdir() if p.is_file())
        if not names:
            raise DataError(f"empty corpus: {path}")
        lemma_dir = Path(lemma_path) if lemma_path is not None else None
        if lemma_dir is not None:
            lemma_names = sorted(p.name for p in lemma_dir.iterdir() if p.is_file())
            if lemma_names != names:
                raise DataError(
                    f"document count mismatch between {path} and {lemma_dir}"
                )
        docs = []
        for name in names:
            raw = _tokens_from_line((path / name).read_text(encoding="utf-8"), name)
            lemma = None
            if lemma_dir is not None:
                lemma = _tokens_from_line(
                    (lemma_dir / name).read_text(encoding="utf-8"), name
                )
            docs.append(Document(doc_id=name, raw_tokens=raw, lemma_tokens=lemma))
        return Corpus(corpus_id=corpus_id, documents=tuple(docs))
    raise DataError(f"unknown corpus format {format!r}")


def build_index(
    corpora: Iterable[Corpus],
    terms: Iterable[str],
    alignments: AlignmentCollection | None = None,
    alignment_config: "AlignmentConfig | None" = None,
) -> OccurrenceIndex:
    """Index every occurrence of every requested term.

    Documents carrying lemma tokens are indexed on the lemma sequence and
    the positions are then mapped to raw positions through ``alignments``
    (required in that case); raw-only documents are indexed directly.
    """
    corpora = list(corpora)
    term_set = set(terms)
    has_lemmas = any(
        doc.lemma_tokens is not None for c in corpora for doc in c.documents
    )
    if has_lemmas and alignments is None:
        raise DataError("alignment required: corpora carry lemma tokens")

    entries: dict[str, list[Occurrence]] = {t: [] for t in term_set}
    for corpus in corpora:
        for doc in corpus.documents:
            stream = doc.lemma_tokens if doc.lemma_tokens is not None else doc.raw_tokens
            for pos, token in enumerate(stream):
                if token in term_set:
                    entries[token].append(
                        Occurrence(corpus.corpus_id, doc.doc_id, pos)
                    )
    for occs in entries.values():
        occs.sort(key=lambda o: (o.corpus_id, o.doc_id, o.token_position))
    index = OccurrenceIndex(entries=entries)

    if has_lemmas:
        from .align import map_term_indices  # deferred: align imports corpus types

        index = map_term_indices(
            index,
            alignments,
            alignment_config,
            corpora={c.corpus_id: c for c in corpora},
        )
    return index


def sample_occurrences(
    index: OccurrenceIndex,
    term: str,
    corpus_id: str,
    cap: int,
    seed: int,
) -> list[Occurrence]:
    """Sample up to ``cap`` occurrences of ``term`` in one corpus.

    Uniform without replacement, deterministic for a fixed seed; the
    result is sorted by (doc_id, token_position).
    """
    if cap < 1:
        raise DataError(f"sampling cap must be >= 1, got {cap}")
    occs = [o for o in index.occurrences(term) if o.corpus_id == corpus_id]
    if len(occs) <= cap:
        return occs
    rng = _rng.generator(seed, "sample", term, corpus_id)
    chosen = rng.choice(len(occs), size=cap, replace=False)
    return sorted(
        (occs[i] for i in chosen), key=lambda o: (o.doc_id, o.token_position)
    )


def select_background_terms(
    freq: FrequencyTable,
    n: int,
    targets: Iterable[str],
    min_count: int,
    seed: int,
    stopwords: Iterable[str] = (),
) -> set[str]:
    """Pick ``n`` background terms for score calibration.

    Eligible terms have union count >= ``min_count``, occur at least once
    in every corpus, and are neither targets nor stopwords. Degenerate
    pools are returned whole with a warning rather than failing.
    """
    target_set = set(targets)
    stop_lower = {s.lower() for s in stopwords}
    corpus_ids = freq.corpus_ids()
    pool = sorted(
        term
        for term in freq.union
        if freq.union_count(term) >= min_count
        and term not in target_set
        and term.lower() not in stop_lower
        and all(freq.count(term, c) >= 1 for c in corpus_ids)
    )
    if len(pool) <= n:
        if len(pool) < n:
            logger.warning(
                "background pool has only %d eligible terms (requested %d)",
                len(pool),
                n,
            )
        return set(pool)
    rng = _rng.generator(seed, "background")
    chosen = rng.choice(len(pool), size=n, replace=False)
    return {pool[i] for i in chosen}


def term_frequencies(index: OccurrenceIndex) -> FrequencyTable:
    """Frequency table whose counts are the index's occurrence-list lengths."""
    per_corpus: dict[str, dict[str, int]] = {}
    union: dict[str, int] = {}
    for term, occs in index.entries.items():
        counts: dict[str, int] = {}
        for occ in occs:
            counts[occ.corpus_id] = counts.get(occ.corpus_id, 0) + 1
        per_corpus[term] = counts
        union[term] = len(occs)
    return FrequencyTable(per_corpus=per_corpus, union=union)


def vocabulary_frequencies(corpora: Iterable[Corpus]) -> FrequencyTable:
    """Full-vocabulary counts from a linear corpus scan.

    Counts the lemma stream when lemma tokens are present, the raw stream
    otherwise, so background candidates live in the same vocabulary kind
    as the targets.
    """
    per_corpus: dict[str, dict[str, int]] = {}
    union: dict[str, int] = {}
    for corpus in corpora:
        for doc in corpus.documents:
            stream = doc.lemma_tokens if doc.lemma_tokens is not None else doc.raw_tokens
            for token in stream:
                counts = per_corpus.setdefault(token, {})
                counts[corpus.corpus_id] = counts.get(corpus.corpus_id, 0) + 1
                union[token] = union.get(token, 0) + 1
    return FrequencyTable(per_corpus=per_corpus, union=union)


def save_index(index: OccurrenceIndex, path: str | Path) -> None:
    """Persist as sorted ``term<TAB>corpus_id<TAB>doc_id<TAB>position`` rows."""
    with open(path, "w", encoding="utf-8") as fh:
        for term in sorted(index.entries):
            for occ in sorted(index.entries[term]):
                fh.write(
                    f"{term}\t{occ.corpus_id}\t{occ.doc_id}\t{occ.token_position}\n"
                )


def load_index(path: str | Path) -> OccurrenceIndex:
    entries: dict[str, list[Occurrence]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DataError(f"malformed index row at {path}:{lineno}")
            term, corpus_id, doc_id, pos = parts
            entries.setdefault(term, []).append(
                Occurrence(corpus_id, doc_id, int(pos))
            )
    for occs in entries.values():
        occs.sort(key=lambda o: (o.corpus_id, o.doc_id, o.token_position))
    return OccurrenceIndex(entries=entries)


def save_frequencies(
    freq: FrequencyTable,
    path: str | Path,
    corpus_order: tuple[str, str],
    terms: Iterable[str] | None = None,
) -> None:
    """Persist as sorted ``term<TAB>c1_count<TAB>c2_count<TAB>union`` rows."""
    c1, c2 = corpus_order
    rows = sorted(freq.union if terms is None else terms)
    with open(path, "w", encoding="utf-8") as fh:
        for term in rows:
            fh.write(
                f"{term}\t{freq.count(term, c1)}\t{freq.count(term, c2)}"
                f"\t{freq.union_count(term)}\n"
            )


def load_frequencies(path: str | Path, corpus_order: tuple[str, str]) -> FrequencyTable:
    c1, c2 = corpus_order
    per_corpus: dict[str, dict[str, int]] = {}
    union: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DataError(f"malformed frequency row at {path}:{lineno}")
            term, n1, n2, total = parts[0], int(parts[1]), int(parts[2]), int(parts[3])
            per_corpus[term] = {c1: n1, c2: n2}
            union[term] = total
    return FrequencyTable(per_corpus=per_corpus, union=union)
