"""Lemma-to-raw token alignment.

Maps each position of a lemmatized document onto the corresponding
position of the raw document so an index built over lemmas can point at
surface tokens. The cascade: unique-token anchoring (order conflicts
resolved by longest increasing subsequence), recursive re-anchoring
inside each gap, minimum-cost edit alignment of the leftovers with
normalized character Levenshtein as substitution cost, and a final
single-pad off-by-one correction pass.
"""

from __future__ import annotations

import functools
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .corpus import Corpus, Occurrence, OccurrenceIndex
from .errors import DataError

PAD = None  # in-memory marker; persisted as -1
PAD_COST = 1.0


@dataclass(frozen=True)
class AlignmentConfig:
    """Filters applied to aligned surface forms before indexing."""

    min_token_length: int = 2
    min_form_share: float = 0.0002
    enforce_first_letter: bool = True
    first_letter_exceptions: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        if not 0.0 <= self.min_form_share <= 1.0:
            raise DataError(
                f"min_form_share must be in [0, 1], got {self.min_form_share}"
            )


@dataclass(frozen=True)
class AlignmentMap:
    """Per-document map: lemma index -> raw index, or PAD (no counterpart)."""

    doc_id: str
    lemma_to_raw: tuple[int | None, ...]

    def __post_init__(self) -> None:
        prev = -1
        for entry in self.lemma_to_raw:
            if entry is None:
                continue
            if entry <= prev:
                raise DataError(
                    f"alignment for {self.doc_id!r} is not strictly monotone"
                )
            prev = entry

    @property
    def aligned_fraction(self) -> float:
        if not self.lemma_to_raw:
            return 0.0
        hits = sum(1 for e in self.lemma_to_raw if e is not None)
        return hits / len(self.lemma_to_raw)


@functools.lru_cache(maxsize=1 << 20)
def levenshtein(a: str, b: str) -> int:
    """Character-level edit distance."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def token_cost(a: str, b: str) -> float:
    """Substitution cost in [0, 1]: Levenshtein over the longer length."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return levenshtein(a, b) / longest


def _lis_pairs(pairs: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Longest subsequence of (raw, lemma) pairs increasing in raw position.

    ``pairs`` is sorted by lemma position; the LIS drops the minority of
    order-inconsistent anchors deterministically (earliest predecessor
    wins ties).
    """
    n = len(pairs)
    if n == 0:
        return []
    best = [1] * n
    back = [-1] * n
    for i in range(n):
        for j in range(i):
            if pairs[j][0] < pairs[i][0] and best[j] + 1 > best[i]:
                best[i] = best[j] + 1
                back[i] = j
    end = max(range(n), key=lambda i: (best[i], -i))
    out = []
    while end != -1:
        out.append(pairs[end])
        end = back[end]
    out.reverse()
    return out


def _anchor_pairs(
    raw: Sequence[str],
    lemma: Sequence[str],
    r_lo: int,
    r_hi: int,
    l_lo: int,
    l_hi: int,
) -> list[tuple[int, int]]:
    raw_counts = Counter(raw[r_lo:r_hi])
    lemma_counts = Counter(lemma[l_lo:l_hi])
    raw_pos = {
        tok: r_lo + i
        for i, tok in enumerate(raw[r_lo:r_hi])
        if raw_counts[tok] == 1 and lemma_counts.get(tok) == 1
    }
    candidates = [
        (raw_pos[tok], l_lo + j)
        for j, tok in enumerate(lemma[l_lo:l_hi])
        if tok in raw_pos
    ]
    return _lis_pairs(candidates)


def _edit_align(
    raw: Sequence[str],
    lemma: Sequence[str],
    r_lo: int,
    r_hi: int,
    l_lo: int,
    l_hi: int,
    result: list[int | None],
) -> None:
    """Minimum-cost monotone alignment of one gap segment (DP + traceback)."""
    nr, nl = r_hi - r_lo, l_hi - l_lo
    cost = [[0.0] * (nl + 1) for _ in range(nr + 1)]
    for i in range(1, nr + 1):
        cost[i][0] = i * PAD_COST
    for j in range(1, nl + 1):
        cost[0][j] = j * PAD_COST
    for i in range(1, nr + 1):
        row, above = cost[i], cost[i - 1]
        tok_r = raw[r_lo + i - 1]
        for j in range(1, nl + 1):
            row[j] = min(
                above[j - 1] + token_cost(tok_r, lemma[l_lo + j - 1]),
                above[j] + PAD_COST,
                row[j - 1] + PAD_COST,
            )
    i, j = nr, nl
    while i > 0 and j > 0:
        here = cost[i][j]
        sub = cost[i - 1][j - 1] + token_cost(raw[r_lo + i - 1], lemma[l_lo + j - 1])
        if here == sub:  # prefer pairing, then skipping a raw token
            result[l_lo + j - 1] = r_lo + i - 1
            i -= 1
            j -= 1
        elif here == cost[i - 1][j] + PAD_COST:
            i -= 1
        else:
            j -= 1


def _alignment_cost(
    raw: Sequence[str], lemma: Sequence[str], mapping: Sequence[int | None]
) -> float:
    total = 0.0
    matched = 0
    for j, ri in enumerate(mapping):
        if ri is None:
            total += PAD_COST
        else:
            total += token_cost(raw[ri], lemma[j])
            matched += 1
    return total + PAD_COST * (len(raw) - matched)


def _shift_variant(
    mapping: list[int | None], start: int, delta: int, raw_len: int
) -> list[int | None] | None:
    """Shift every assignment from lemma position ``start`` by ``delta``.

    Models inserting one padding token on either side at that position;
    returns None when the shift breaks bounds or monotonicity.
    """
    out = list(mapping)
    prev = max((ri for ri in mapping[:start] if ri is not None), default=-1)
    first = True
    for j in range(start, len(mapping)):
        ri = mapping[j]
        if ri is None:
            continue
        moved = ri + delta
        if moved < 0 or moved >= raw_len:
            return None
        if first and moved <= prev:
            return None
        out[j] = moved
        first = False
    return out


def _offbyone_correction(
    raw: Sequence[str], lemma: Sequence[str], mapping: list[int | None]
) -> list[int | None]:
    best = mapping
    best_cost = _alignment_cost(raw, lemma, mapping)
    for start in range(len(mapping)):
        for delta in (1, -1):
            variant = _shift_variant(mapping, start, delta, len(raw))
            if variant is None:
                continue
            c = _alignment_cost(raw, lemma, variant)
            if c < best_cost - 1e-12:
                best, best_cost = variant, c
    return list(best)


def align_document(
    raw: Sequence[str], lemma: Sequence[str]
) -> list[int | None]:
    """Align a lemma token sequence to its raw counterpart.

    Both sequences are expected to be punctuation-free (see
    ``build_alignment`` for the wrapper that handles that). Returns one
    entry per lemma token: a raw index or PAD.
    """
    if not raw or not lemma:
        raise DataError("align_document requires two non-empty token sequences")
    result: list[int | None] = [PAD] * len(lemma)
    stack: list[tuple[int, int, int, int]] = [(0, len(raw), 0, len(lemma))]
    while stack:
        r_lo, r_hi, l_lo, l_hi = stack.pop()
        if r_lo >= r_hi or l_lo >= l_hi:
            continue
        anchors = _anchor_pairs(raw, lemma, r_lo, r_hi, l_lo, l_hi)
        if anchors:
            prev_r, prev_l = r_lo, l_lo
            for ri, lj in anchors:
                result[lj] = ri
                stack.append((prev_r, ri, prev_l, lj))
                prev_r, prev_l = ri + 1, lj + 1
            stack.append((prev_r, r_hi, prev_l, l_hi))
        else:
            _edit_align(raw, lemma, r_lo, r_hi, l_lo, l_hi, result)
    return _offbyone_correction(raw, lemma, result)


def is_punctuation(token: str) -> bool:
    """Default predicate: the token has no alphanumeric characters."""
    return all(not ch.isalnum() for ch in token)


def build_alignment(
    doc_id: str,
    raw_tokens: Sequence[str],
    lemma_tokens: Sequence[str],
    punctuation: Callable[[str], bool] = is_punctuation,
) -> AlignmentMap:
    """Full alignment of one document, on original token indices.

    Punctuation is removed from both sides before the cascade, with index
    maps retained so the result points back into the unfiltered raw
    sequence; punctuation lemma positions map to PAD.
    """
    raw_keep = [i for i, t in enumerate(raw_tokens) if not punctuation(t)]
    lemma_keep = [j for j, t in enumerate(lemma_tokens) if not punctuation(t)]
    full: list[int | None] = [PAD] * len(lemma_tokens)
    if raw_keep and lemma_keep:
        core = align_document(
            [raw_tokens[i] for i in raw_keep],
            [lemma_tokens[j] for j in lemma_keep],
        )
        for fj, ri in enumerate(core):
            if ri is not None:
                full[lemma_keep[fj]] = raw_keep[ri]
    return AlignmentMap(doc_id=doc_id, lemma_to_raw=tuple(full))


def filter_aligned_tokens(
    term: str,
    aligned_forms: Mapping[str, int],
    config: AlignmentConfig,
) -> set[str]:
    """Keep surface forms that look like genuine realizations of the lemma.

    A form survives when it is long enough, carries a minimum share of
    the lemma's aligned occurrences, and starts with the lemma's first
    letter (unless an exception pair such as i->j applies).
    """
    if any(c <= 0 for c in aligned_forms.values()):
        raise DataError("aligned form counts must be positive")
    total = sum(aligned_forms.values())
    if total == 0:
        return set()
    term_lower = term.lower()
    accepted = set()
    for form, count in aligned_forms.items():
        if len(form) < config.min_token_length:
            continue
        if count / total < config.min_form_share:
            continue
        if config.enforce_first_letter and term_lower:
            form_lower = form.lower()
            if form_lower[: 1] != term_lower[: 1] and not any(
                term_lower.startswith(lp.lower()) and form_lower.startswith(ap.lower())
                for lp, ap in config.first_letter_exceptions
            ):
                continue
        accepted.add(form)
    return accepted


def map_term_indices(
    index_on_lemmas: OccurrenceIndex,
    alignments: Mapping[str, Mapping[str, AlignmentMap]],
    config: AlignmentConfig | None,
    corpora: Mapping[str, Corpus],
) -> OccurrenceIndex:
    """Rewrite a lemma-position index into raw positions.

    Occurrences landing on PAD, or whose surface form fails
    ``filter_aligned_tokens``, are dropped; survivors point at raw
    token positions.
    """
    cfg = config or AlignmentConfig()
    entries: dict[str, list[Occurrence]] = {}
    for term, occs in index_on_lemmas.entries.items():
        mapped: list[tuple[Occurrence, str]] = []
        for occ in occs:
            doc_maps = alignments.get(occ.corpus_id, {})
            amap = doc_maps.get(occ.doc_id)
            if amap is None:
                raise DataError(
                    f"missing alignment for document {occ.doc_id!r} "
                    f"in corpus {occ.corpus_id!r}"
                )
            if occ.token_position >= len(amap.lemma_to_raw):
                raise DataError(
                    f"occurrence position {occ.token_position} outside alignment "
                    f"for document {occ.doc_id!r}"
                )
            raw_idx = amap.lemma_to_raw[occ.token_position]
            if raw_idx is None:
                continue
            form = corpora[occ.corpus_id].document(occ.doc_id).raw_tokens[raw_idx]
            mapped.append((Occurrence(occ.corpus_id, occ.doc_id, raw_idx), form))
        if mapped:
            accepted = filter_aligned_tokens(
                term, Counter(form for _, form in mapped), cfg
            )
            kept = [o for o, form in mapped if form in accepted]
        else:
            kept = []
        kept.sort(key=lambda o: (o.corpus_id, o.doc_id, o.token_position))
        entries[term] = kept
    return OccurrenceIndex(entries=entries)


def save_alignments(
    alignments: Iterable[AlignmentMap], path: str | Path
) -> None:
    """Persist as ``doc_id<TAB>lemma_index<TAB>raw_index_or_-1`` rows."""
    with open(path, "w", encoding="utf-8") as fh:
        for amap in sorted(alignments, key=lambda a: a.doc_id):
            for j, ri in enumerate(amap.lemma_to_raw):
                fh.write(f"{amap.doc_id}\t{j}\t{-1 if ri is None else ri}\n")


def load_alignments(path: str | Path) -> dict[str, AlignmentMap]:
    rows: dict[str, dict[int, int | None]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"malformed alignment row at {path}:{lineno}")
            doc_id, j, ri = parts[0], int(parts[1]), int(parts[2])
            rows.setdefault(doc_id, {})[j] = None if ri < 0 else ri
    out = {}
    for doc_id, entries in rows.items():
        seq = tuple(entries[j] for j in range(len(entries)))
        out[doc_id] = AlignmentMap(doc_id=doc_id, lemma_to_raw=seq)
    return out


def load_exceptions(path: str | Path) -> tuple[tuple[str, str], ...]:
    """Read ``lemma_prefix<TAB>allowed_prefix`` pairs, one per line."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"malformed exception row at {path}:{lineno}")
            pairs.append((parts[0], parts[1]))
    return tuple(pairs)
