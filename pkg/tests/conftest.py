"""Shared fixtures and independent oracles for the test suite.

Oracles here stay deliberately naive (dense vectors, exhaustive
enumeration, full rescans) so they cannot share a bug with the
implementations they check.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np
import pytest

from driftscope.corpus import Occurrence
from driftscope.gateway import SubstituteSet


def make_sets(
    term: str,
    corpus_id: str,
    groups: Sequence[Sequence[str]],
    doc_prefix: str = "d",
) -> list[SubstituteSet]:
    """Build substitute sets with synthetic occurrence identities."""
    return [
        SubstituteSet(
            occurrence=Occurrence(corpus_id, f"{doc_prefix}{i:06d}", 0),
            term=term,
            substitutes=tuple(subs),
        )
        for i, subs in enumerate(groups)
    ]


def dense_jsd(p: dict[str, float], q: dict[str, float]) -> float:
    """Dense-vector JSD oracle over the union support, base 2."""
    keys = sorted(set(p) | set(q))
    pv = np.array([p.get(k, 0.0) for k in keys])
    qv = np.array([q.get(k, 0.0) for k in keys])
    m = (pv + qv) / 2.0
    total = 0.0
    for i in range(len(keys)):
        if pv[i] > 0:
            total += pv[i] * math.log2(pv[i] / m[i])
        if qv[i] > 0:
            total += qv[i] * math.log2(qv[i] / m[i])
    return total / 2.0


def random_sparse_distribution(
    rng: np.random.Generator, vocab: Sequence[str], max_support: int = 50
) -> dict[str, float]:
    support = rng.choice(
        len(vocab), size=rng.integers(1, max_support + 1), replace=False
    )
    weights = rng.random(len(support)) + 1e-3
    weights /= weights.sum()
    return {vocab[i]: float(w) for i, w in zip(support, weights)}


def ks_uniform_statistic(values: Iterable[float]) -> float:
    """Kolmogorov-Smirnov distance between the sample and Uniform[0, 1]."""
    xs = np.sort(np.asarray(list(values), dtype=float))
    n = len(xs)
    upper = np.max(np.arange(1, n + 1) / n - xs)
    lower = np.max(xs - np.arange(0, n) / n)
    return float(max(upper, lower))


def set_partitions(items: Sequence[str]):
    """Yield every partition of ``items`` (Bell-number many)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for partial in set_partitions(rest):
        for i in range(len(partial)):
            yield partial[:i] + [partial[i] | {first}] + partial[i + 1 :]
        yield partial + [{first}]


def brute_modularity(
    nodes: Sequence[str],
    edges: dict[tuple[str, str], int],
    partition: Sequence[set[str]],
    resolution: float = 1.0,
) -> float:
    """Textbook modularity from the adjacency definition."""
    index = {n: i for i, n in enumerate(nodes)}
    n = len(nodes)
    A = np.zeros((n, n))
    for (u, v), w in edges.items():
        A[index[u], index[v]] += w
        A[index[v], index[u]] += w
    k = A.sum(axis=1)
    two_m = A.sum()
    if two_m == 0:
        return 0.0
    comm = {}
    for ci, cluster in enumerate(partition):
        for node in cluster:
            comm[index[node]] = ci
    q = 0.0
    for i in range(n):
        for j in range(n):
            if comm[i] == comm[j]:
                q += A[i, j] - resolution * k[i] * k[j] / two_m
    return q / two_m


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
