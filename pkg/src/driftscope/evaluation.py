"""Evaluation against gold human change ratings.

Handles multi-annotator averaging, per-dataset exclusion lists, rank
correlations, and cross-dataset aggregation (plain mean plus a mean
weighted by evaluated-word counts).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import DataError


@dataclass(frozen=True)
class GoldRatings:
    dataset_id: str
    ratings: dict[str, float]
    exclusions_applied: tuple[str, ...]


@dataclass(frozen=True)
class EvalResult:
    dataset_id: str
    spearman: float
    pearson: float
    n: int


def average_annotations(
    raw_ratings: Mapping[str, Sequence[float]],
) -> dict[str, float]:
    """Arithmetic mean of each term's annotator scores."""
    out = {}
    for term, values in raw_ratings.items():
        if not values:
            raise DataError(f"term {term!r} has no annotations")
        out[term] = sum(values) / len(values)
    return out


def apply_exclusions(
    ratings: Mapping[str, float],
    exclusion_list: Iterable[str],
    dataset_id: str = "",
) -> GoldRatings:
    """Remove excluded terms, recording which ones were actually present."""
    excluded = sorted(set(exclusion_list) & set(ratings))
    kept = {t: r for t, r in ratings.items() if t not in set(excluded)}
    return GoldRatings(
        dataset_id=dataset_id,
        ratings=kept,
        exclusions_applied=tuple(excluded),
    )


def _check_pair(x: Sequence[float], y: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    if len(x) != len(y):
        raise DataError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 3:
        raise DataError(f"need at least 3 pairs, got {len(x)}")
    ax = np.asarray(x, dtype=np.float64)
    ay = np.asarray(y, dtype=np.float64)
    if np.all(ax == ax[0]) or np.all(ay == ay[0]):
        raise DataError("correlation undefined for constant input")
    return ax, ay


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Product-moment correlation; constant input is an error, not zero."""
    ax, ay = _check_pair(x, y)
    dx = ax - ax.mean()
    dy = ay - ay.mean()
    denominator = np.sqrt(np.dot(dx, dx) * np.dot(dy, dy))
    if denominator == 0.0:  # also catches variance underflow
        raise DataError("correlation undefined for constant input")
    return float(np.dot(dx, dy) / denominator)


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of midranks (ties get average ranks)."""
    ax, ay = _check_pair(x, y)
    return pearson(stats.rankdata(ax), stats.rankdata(ay))


def evaluate_dataset(
    dataset_id: str,
    gold: GoldRatings,
    system_scores: Mapping[str, float],
) -> tuple[EvalResult, list[str]]:
    """Correlate system scores with gold ratings on the shared terms.

    Gold terms missing from the system are returned (second element),
    never silently dropped.
    """
    shared = sorted(set(gold.ratings) & set(system_scores))
    missing = sorted(set(gold.ratings) - set(system_scores))
    if len(shared) < 3:
        raise DataError(
            f"dataset {dataset_id!r}: only {len(shared)} terms shared "
            "between gold and system scores"
        )
    gold_values = [gold.ratings[t] for t in shared]
    system_values = [system_scores[t] for t in shared]
    result = EvalResult(
        dataset_id=dataset_id,
        spearman=spearman(system_values, gold_values),
        pearson=pearson(system_values, gold_values),
        n=len(shared),
    )
    return result, missing


def aggregate(
    results: Sequence[EvalResult],
    weights: Mapping[str, float] | None = None,
) -> tuple[float, float | None]:
    """Unweighted and word-count-weighted means of Spearman values."""
    if not results:
        raise DataError("nothing to aggregate")
    values = [r.spearman for r in results]
    unweighted = sum(values) / len(values)
    if weights is None:
        return unweighted, None
    missing = [r.dataset_id for r in results if r.dataset_id not in weights]
    if missing:
        raise DataError(f"missing weights for datasets: {missing}")
    total = sum(weights[r.dataset_id] for r in results)
    weighted = sum(r.spearman * weights[r.dataset_id] for r in results) / total
    return unweighted, weighted


def load_gold_ratings(
    path: str | Path, lowercase: bool = False
) -> dict[str, float]:
    """Read ``term<TAB>rating`` or ``term<TAB>r1,r2,...`` rows; multiple
    annotations are averaged."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"gold ratings file does not exist: {path}")
    raw: dict[str, list[float]] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"malformed gold row at {path}:{lineno}")
        term = parts[0].lower() if lowercase else parts[0]
        try:
            values = [float(v) for v in parts[1].split(",")]
        except ValueError:
            raise DataError(f"non-numeric rating at {path}:{lineno}") from None
        raw.setdefault(term, []).extend(values)
    if not raw:
        raise DataError(f"gold ratings file is empty: {path}")
    return average_annotations(raw)


def load_exclusions(path: str | Path) -> set[str]:
    """One excluded term per line."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"exclusion file does not exist: {path}")
    return {
        line.strip()
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.strip().startswith("#")
    }
