"""Substitute-graph sense induction.

For one target term, substitutes become graph nodes and edge weights
count how many top-k substitute sets contain both endpoints. Louvain
community detection over that weighted graph yields sense clusters;
each mention is then attached to the cluster with the highest Jaccard
overlap against its own substitute set, and per-period cluster counts
profile how sense prevalence moved between the corpora.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from . import _rng
from .corpus import Occurrence
from .errors import DataError
from .gateway import SubstituteSet

GAIN_THRESHOLD = 1e-7

UNASSIGNED = None


@dataclass(frozen=True)
class SubstituteGraph:
    """Weighted co-occurrence graph of one term's substitutes."""

    term: str
    nodes: tuple[str, ...]
    edges: dict[tuple[str, str], int]  # key (u, v) with u < v, weight >= 1

    def degree(self, node: str) -> int:
        return sum(w for (u, v), w in self.edges.items() if node in (u, v))


@dataclass(frozen=True)
class SensePartition:
    """Disjoint sense clusters covering all graph nodes.

    ``modularity_history`` holds the modularity after each aggregation
    round; cluster order is provisional (size, then smallest member)
    until mention counts are known (see ``order_clusters_by_mentions``).
    """

    term: str
    clusters: tuple[frozenset[str], ...]
    modularity: float
    modularity_history: tuple[float, ...] = ()


@dataclass(frozen=True)
class MentionAssignment:
    occurrence: Occurrence
    cluster_index: int | None  # None = UNASSIGNED
    jaccard: float


@dataclass(frozen=True)
class SenseProfile:
    term: str
    counts: dict[tuple[str, int], int]  # (corpus_id, cluster_index) -> mentions
    unassigned: dict[str, int]

    def corpus_total(self, corpus_id: str) -> int:
        inside = sum(
            n for (c, _), n in self.counts.items() if c == corpus_id
        )
        return inside + self.unassigned.get(corpus_id, 0)


def exclude_target_from_sets(
    substitute_sets: Iterable[SubstituteSet], term: str, k: int
) -> list[SubstituteSet]:
    """Drop the target from stored (k+1)-substitute lists and re-truncate
    to k, the sense-stage view of the persisted substitutes."""
    term_lower = term.lower()
    out = []
    for s in substitute_sets:
        kept = tuple(x for x in s.substitutes if x.lower() != term_lower)[:k]
        out.append(SubstituteSet(s.occurrence, s.term, kept))
    return out


def build_cooccurrence_graph(
    substitute_sets: Sequence[SubstituteSet],
) -> SubstituteGraph:
    """Edge weight (u, v) = number of substitute sets containing both."""
    if not substitute_sets:
        raise DataError("cannot build a graph from zero substitute sets")
    term = substitute_sets[0].term
    nodes: set[str] = set()
    edges: dict[tuple[str, str], int] = {}
    for s in substitute_sets:
        if s.term != term:
            raise DataError(f"substitute sets mix terms: {s.term!r} vs {term!r}")
        members = sorted(set(s.substitutes))
        nodes.update(members)
        for i, u in enumerate(members):
            for v in members[i + 1 :]:
                edges[(u, v)] = edges.get((u, v), 0) + 1
    return SubstituteGraph(term=term, nodes=tuple(sorted(nodes)), edges=edges)


class _LouvainState:
    """Mutable working graph for one aggregation level."""

    def __init__(
        self,
        n: int,
        adj: list[dict[int, float]],
        self_w: list[float],
    ):
        self.n = n
        self.adj = adj
        self.self_w = self_w
        self.degree = [
            sum(adj[i].values()) + 2.0 * self_w[i] for i in range(n)
        ]
        self.two_m = sum(self.degree)
        self.comm = list(range(n))
        self.sum_tot = list(self.degree)
        self.sum_in = [2.0 * self_w[i] for i in range(n)]

    def remove(self, i: int) -> None:
        c = self.comm[i]
        self.sum_tot[c] -= self.degree[i]
        self.sum_in[c] -= 2.0 * self._links_to(i, c) + 2.0 * self.self_w[i]
        self.comm[i] = -1

    def insert(self, i: int, c: int) -> None:
        self.sum_tot[c] += self.degree[i]
        self.sum_in[c] += 2.0 * self._links_to(i, c) + 2.0 * self.self_w[i]
        self.comm[i] = c

    def _links_to(self, i: int, c: int) -> float:
        return sum(
            w for j, w in self.adj[i].items() if self.comm[j] == c
        )

    def neighbor_communities(self, i: int) -> dict[int, float]:
        links: dict[int, float] = {}
        for j, w in self.adj[i].items():
            c = self.comm[j]
            if c >= 0:
                links[c] = links.get(c, 0.0) + w
        return links

    def modularity(self, resolution: float) -> float:
        if self.two_m == 0:
            return 0.0
        q = 0.0
        for c in set(self.comm):
            q += self.sum_in[c] / self.two_m - resolution * (
                self.sum_tot[c] / self.two_m
            ) ** 2
        return q


def _local_moves(
    state: _LouvainState, resolution: float, rng
) -> bool:
    """Phase 1: greedy single-node moves until no gain above threshold."""
    if state.two_m == 0:
        return False
    improved = False
    order = list(rng.permutation(state.n))
    while True:
        moved = False
        for i in order:
            old = state.comm[i]
            state.remove(i)
            links = state.neighbor_communities(i)
            ki = state.degree[i]

            def gain_of(c: int) -> float:
                return (
                    2.0 * links.get(c, 0.0) / state.two_m
                    - 2.0 * resolution * state.sum_tot[c] * ki / state.two_m**2
                )

            # staying put is the baseline; a move must clear the threshold
            best_c, best_gain = old, gain_of(old)
            for c in sorted(links):
                if c == old:
                    continue
                gain = gain_of(c)
                if gain > best_gain + GAIN_THRESHOLD:
                    best_c, best_gain = c, gain
            state.insert(i, best_c)
            if best_c != old:
                moved = True
                improved = True
        if not moved:
            break
    return improved


def _aggregate(state: _LouvainState) -> tuple[_LouvainState, dict[int, int]]:
    """Phase 2: collapse communities into supernodes."""
    labels = sorted(set(state.comm))
    relabel = {c: i for i, c in enumerate(labels)}
    n = len(labels)
    adj: list[dict[int, float]] = [dict() for _ in range(n)]
    self_w = [0.0] * n
    for i in range(state.n):
        ci = relabel[state.comm[i]]
        self_w[ci] += state.self_w[i]
        for j, w in state.adj[i].items():
            if j <= i:
                continue  # each undirected edge once
            cj = relabel[state.comm[j]]
            if ci == cj:
                self_w[ci] += w
            else:
                adj[ci][cj] = adj[ci].get(cj, 0.0) + w
                adj[cj][ci] = adj[cj].get(ci, 0.0) + w
    return _LouvainState(n, adj, self_w), relabel


def louvain_partition(
    graph: SubstituteGraph,
    resolution: float = 1.0,
    seed: int = 0,
) -> SensePartition:
    """Two-phase Louvain over the weighted substitute graph.

    Local moves accept only gains above 1e-7; node visitation order is a
    seeded shuffle; isolated nodes stay singleton clusters. Modularity
    after each aggregation round is recorded and never decreases.
    """
    if not graph.nodes:
        raise DataError("cannot partition an empty graph")
    names = list(graph.nodes)
    pos = {name: i for i, name in enumerate(names)}
    n = len(names)
    adj: list[dict[int, float]] = [dict() for _ in range(n)]
    for (u, v), w in graph.edges.items():
        if u == v:
            raise DataError(f"self-loop on node {u!r}")
        if w < 1:
            raise DataError(f"edge ({u!r}, {v!r}) has non-positive weight {w}")
        i, j = pos[u], pos[v]
        adj[i][j] = adj[i].get(j, 0.0) + w
        adj[j][i] = adj[j].get(i, 0.0) + w
    state = _LouvainState(n, adj, [0.0] * n)

    rng = _rng.generator(seed, "louvain", graph.term)
    node_comm = list(range(n))  # original node -> node index at current level
    history: list[float] = []
    while True:
        improved = _local_moves(state, resolution, rng)
        history.append(state.modularity(resolution))
        if not improved:
            break
        new_state, relabel = _aggregate(state)
        node_comm = [relabel[state.comm[c]] for c in node_comm]
        state = new_state

    groups: dict[int, set[str]] = {}
    for idx, current_node in enumerate(node_comm):
        groups.setdefault(state.comm[current_node], set()).add(names[idx])
    clusters = sorted(groups.values(), key=lambda g: (-len(g), min(g)))
    return SensePartition(
        term=graph.term,
        clusters=tuple(frozenset(g) for g in clusters),
        modularity=history[-1],
        modularity_history=tuple(history),
    )


def assign_mentions(
    substitute_sets: Sequence[SubstituteSet],
    partition: SensePartition,
) -> list[MentionAssignment]:
    """Attach each mention to the cluster maximizing Jaccard overlap with
    its substitute set; ties go to the lower cluster index, zero overlap
    everywhere means UNASSIGNED."""
    out = []
    for s in substitute_sets:
        members = set(s.substitutes)
        best_idx: int | None = UNASSIGNED
        best_j = 0.0
        for idx, cluster in enumerate(partition.clusters):
            inter = len(members & cluster)
            if inter == 0:
                continue
            j = inter / len(members | cluster)
            if j > best_j:
                best_idx, best_j = idx, j
        out.append(MentionAssignment(s.occurrence, best_idx, best_j))
    return out


def order_clusters_by_mentions(
    partition: SensePartition,
    assignments: Sequence[MentionAssignment],
) -> tuple[SensePartition, list[MentionAssignment]]:
    """Reorder clusters by descending assigned-mention count (ties by
    smallest member) and remap assignment indices to match."""
    counts = [0] * len(partition.clusters)
    for a in assignments:
        if a.cluster_index is not None:
            counts[a.cluster_index] += 1
    order = sorted(
        range(len(partition.clusters)),
        key=lambda i: (-counts[i], min(partition.clusters[i])),
    )
    remap = {old: new for new, old in enumerate(order)}
    reordered = SensePartition(
        term=partition.term,
        clusters=tuple(partition.clusters[i] for i in order),
        modularity=partition.modularity,
        modularity_history=partition.modularity_history,
    )
    remapped = [
        MentionAssignment(
            a.occurrence,
            a.cluster_index if a.cluster_index is None else remap[a.cluster_index],
            a.jaccard,
        )
        for a in assignments
    ]
    return reordered, remapped


def sense_profile(
    term: str, assignments: Sequence[MentionAssignment]
) -> SenseProfile:
    """Tabulate mention counts per (corpus, cluster); totals conserved."""
    counts: dict[tuple[str, int], int] = {}
    unassigned: dict[str, int] = {}
    for a in assignments:
        corpus = a.occurrence.corpus_id
        if a.cluster_index is None:
            unassigned[corpus] = unassigned.get(corpus, 0) + 1
        else:
            key = (corpus, a.cluster_index)
            counts[key] = counts.get(key, 0) + 1
    return SenseProfile(term=term, counts=counts, unassigned=unassigned)


def sense_report(
    graph: SubstituteGraph,
    partition: SensePartition,
    assignments: Sequence[MentionAssignment],
    profile: SenseProfile,
    corpus_order: Sequence[str],
    top_members: int = 10,
    examples_per_cluster: int = 3,
) -> dict:
    """JSON-ready sense summary: top members by degree, per-period
    counts, and example occurrence references per cluster."""
    examples: dict[int, list[Occurrence]] = {}
    for a in sorted(
        (a for a in assignments if a.cluster_index is not None),
        key=lambda a: (-a.jaccard, a.occurrence),
    ):
        bucket = examples.setdefault(a.cluster_index, [])
        if len(bucket) < examples_per_cluster:
            bucket.append(a.occurrence)
    clusters = []
    for idx, cluster in enumerate(partition.clusters):
        members = sorted(cluster, key=lambda node: (-graph.degree(node), node))
        clusters.append(
            {
                "index": idx,
                "size": len(cluster),
                "top_members": members[:top_members],
                "counts": {
                    c: profile.counts.get((c, idx), 0) for c in corpus_order
                },
                "examples": [
                    {"corpus": o.corpus_id, "doc": o.doc_id, "pos": o.token_position}
                    for o in examples.get(idx, [])
                ],
            }
        )
    return {
        "term": partition.term,
        "modularity": partition.modularity,
        "clusters": clusters,
        "unassigned": {
            c: profile.unassigned.get(c, 0) for c in corpus_order
        },
    }
