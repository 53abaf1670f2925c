"""Replacement distributions and semantic change scores.

A term's representation per period is the normalized count of how often
each vocabulary word appears among its top-k masked substitutes. The raw
change score is the base-2 Jensen-Shannon divergence between the two
period distributions, which lands in [0, 1]. Because raw JSD is strongly
confounded with term frequency, the final score is the quantile of the
raw score among background terms of similar frequency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import FrequencyTable
from .errors import DataError
from .gateway import SubstituteSet

UNDEFINED = "UNDEFINED"


@dataclass(frozen=True)
class ReplacementDistribution:
    """Sparse substitute -> probability map for one (term, corpus)."""

    term: str
    corpus_id: str
    probs: dict[str, float]
    support_count: int

    @property
    def is_empty(self) -> bool:
        return self.support_count == 0


@dataclass(frozen=True)
class ChangeScore:
    """Raw and frequency-scaled change for one term.

    ``raw`` and ``scaled`` are None when the term lacks samples in either
    corpus (flagged UNDEFINED in reports, never silently dropped).
    """

    term: str
    raw: float | None
    frequency: int
    scaled: float | None
    window_size: int
    widen_steps: int

    @property
    def is_defined(self) -> bool:
        return self.raw is not None and self.scaled is not None


def count_replacements(
    substitute_sets: Sequence[SubstituteSet],
    term: str | None = None,
    corpus_id: str | None = None,
) -> ReplacementDistribution:
    """Normalized counts of substitute appearances across sets.

    All sets must share one (term, corpus). Empty input yields an empty
    distribution that downstream scoring skips; in that case ``term`` and
    ``corpus_id`` must be given explicitly.
    """
    if not substitute_sets:
        if term is None or corpus_id is None:
            raise DataError(
                "empty substitute-set collection needs explicit term and corpus"
            )
        return ReplacementDistribution(term, corpus_id, {}, 0)
    term = substitute_sets[0].term if term is None else term
    corpus_id = (
        substitute_sets[0].occurrence.corpus_id if corpus_id is None else corpus_id
    )
    counts: dict[str, int] = {}
    total = 0
    for s in substitute_sets:
        if s.term != term or s.occurrence.corpus_id != corpus_id:
            raise DataError(
                "substitute sets mix terms/corpora: "
                f"({s.term!r}, {s.occurrence.corpus_id!r}) vs "
                f"({term!r}, {corpus_id!r})"
            )
        for sub in s.substitutes:
            counts[sub] = counts.get(sub, 0) + 1
            total += 1
    if total == 0:
        return ReplacementDistribution(term, corpus_id, {}, 0)
    probs = {w: c / total for w, c in counts.items()}
    return ReplacementDistribution(term, corpus_id, probs, total)


def jsd(p: ReplacementDistribution, q: ReplacementDistribution) -> float:
    """Base-2 Jensen-Shannon divergence over the union of supports.

    Symmetric by construction (fixed key order, per-key symmetric terms)
    and clamped into [0, 1] against last-ulp rounding.
    """
    if p.is_empty or q.is_empty:
        raise DataError("cannot take the divergence of an empty distribution")
    total = 0.0
    for key in sorted(p.probs.keys() | q.probs.keys()):
        pv = p.probs.get(key, 0.0)
        qv = q.probs.get(key, 0.0)
        m = (pv + qv) / 2.0
        term = 0.0
        if pv > 0.0:
            term += pv * math.log2(pv / m)
        if qv > 0.0:
            term += qv * math.log2(qv / m)
        total += term
    return min(max(total / 2.0, 0.0), 1.0)


def frequency_window(
    freq: FrequencyTable,
    term: str,
    candidates: Iterable[str],
    factor: float,
) -> set[str]:
    """Candidates whose frequency is within ``factor`` of the target's,
    bounds inclusive, the target itself excluded."""
    if factor <= 1.0:
        raise DataError(f"window factor must exceed 1, got {factor}")
    if term not in freq.union:
        raise DataError(f"term {term!r} missing from the frequency table")
    ft = freq.union_count(term)
    return {
        s
        for s in candidates
        if s != term and ft / factor <= freq.union_count(s) <= ft * factor
    }


def scaled_score(
    raw_t: float,
    raw_background: Mapping[str, float],
    window: Iterable[str],
) -> float:
    """Quantile of the target's raw score within its frequency window:
    the fraction of window terms whose raw score it meets or exceeds."""
    window = set(window)
    if not window:
        raise DataError("empty frequency window")
    missing = [s for s in window if s not in raw_background]
    if missing:
        raise DataError(f"window terms lack raw scores: {sorted(missing)[:5]}")
    hits = sum(1 for s in window if raw_t >= raw_background[s])
    return hits / len(window)


def score_all(
    targets: Iterable[str],
    background: Iterable[str],
    distributions: Mapping[str, Mapping[str, ReplacementDistribution]],
    freq: FrequencyTable,
    window_factor: float = 2.0,
    min_window: int = 50,
) -> list[ChangeScore]:
    """Score every target against the background population.

    Raw JSD is computed for targets and background alike; each target's
    window is drawn from background terms only. Thin windows widen by
    doubling the factor (recorded in ``widen_steps``) until
    ``min_window`` terms are inside or the whole background is. Targets
    without samples in both corpora come back flagged UNDEFINED. Rows
    are sorted by scaled then raw descending, ties lexicographic.
    """
    targets = sorted(set(targets))
    background = sorted(set(background))
    corpus_ids = sorted(
        {d.corpus_id for per in distributions.values() for d in per.values()}
    )
    if len(corpus_ids) != 2:
        raise DataError(f"expected exactly two corpora, found {corpus_ids}")
    c1, c2 = corpus_ids

    def raw_of(term: str) -> float | None:
        per = distributions.get(term, {})
        p, q = per.get(c1), per.get(c2)
        if p is None or q is None or p.is_empty or q.is_empty:
            return None
        return jsd(p, q)

    raw_background = {}
    for term in background:
        value = raw_of(term)
        if value is not None:
            raw_background[term] = value

    scores = []
    for term in targets:
        raw_t = raw_of(term)
        frequency = freq.union_count(term)
        if raw_t is None or not raw_background:
            scores.append(ChangeScore(term, raw_t, frequency, None, 0, 0))
            continue
        factor = window_factor
        widen = 0
        full = set(raw_background) - {term}
        window = frequency_window(freq, term, raw_background, factor)
        # widen until the window is thick enough or cannot grow; the step
        # cap only guards degenerate zero-frequency targets
        while len(window) < min_window and window != full and widen < 64:
            factor *= 2.0
            widen += 1
            window = frequency_window(freq, term, raw_background, factor)
        if not window:
            scores.append(ChangeScore(term, raw_t, frequency, None, 0, widen))
            continue
        scores.append(
            ChangeScore(
                term,
                raw_t,
                frequency,
                scaled_score(raw_t, raw_background, window),
                len(window),
                widen,
            )
        )
    defined = [s for s in scores if s.is_defined]
    undefined = [s for s in scores if not s.is_defined]
    defined.sort(key=lambda s: (-s.scaled, -s.raw, s.term))
    undefined.sort(key=lambda s: s.term)
    return defined + undefined


def _fmt(value: float | None) -> str:
    return UNDEFINED if value is None else f"{value:.12g}"


def save_scores(scores: Sequence[ChangeScore], path: str | Path) -> None:
    """Tab-separated report:
    ``term<TAB>frequency<TAB>raw_jsd<TAB>scaled<TAB>window_size<TAB>widen_steps``."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in scores:
            fh.write(
                f"{s.term}\t{s.frequency}\t{_fmt(s.raw)}\t{_fmt(s.scaled)}"
                f"\t{s.window_size}\t{s.widen_steps}\n"
            )


def load_scores(path: str | Path) -> list[ChangeScore]:
    scores = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 6:
                raise DataError(f"malformed score row at {path}:{lineno}")
            term, frequency, raw, scaled, window, widen = parts
            scores.append(
                ChangeScore(
                    term=term,
                    raw=None if raw == UNDEFINED else float(raw),
                    frequency=int(frequency),
                    scaled=None if scaled == UNDEFINED else float(scaled),
                    window_size=int(window),
                    widen_steps=int(widen),
                )
            )
    return scores
