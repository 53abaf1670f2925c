"""Corpus indexing and seeded occurrence sampling.

Builds a tiny two-period corpus in memory, indexes a couple of terms,
prints their frequencies, and shows that capped sampling is uniform,
deterministic per seed, and sorted.
"""

from driftscope.corpus import (
    Corpus,
    Document,
    build_index,
    sample_occurrences,
    term_frequencies,
)

early = Corpus(
    "C1",
    tuple(
        Document(f"doc{i}", tuple(text.split()))
        for i, text in enumerate(
            [
                "the plane cut the wood flat and true",
                "a plane is a flat surface in geometry",
                "the carpenter used a plane on the plank",
                "points on a plane satisfy one linear equation",
            ]
        )
    ),
)
late = Corpus(
    "C2",
    tuple(
        Document(f"doc{i}", tuple(text.split()))
        for i, text in enumerate(
            [
                "the plane landed after a long flight",
                "she boarded the plane to visit family",
                "the plane taxied onto the runway",
                "a small plane circled above the field",
            ]
        )
    ),
)

index = build_index([early, late], {"plane", "flat", "runway"})
freq = term_frequencies(index)

print("occurrences per term and period:")
for term in index.terms():
    print(
        f"  {term!r:10} C1={freq.count(term, 'C1')}  C2={freq.count(term, 'C2')}"
        f"  union={freq.union_count(term)}"
    )

print("\nevery 'plane' occurrence (corpus, document, token position):")
for occ in index.occurrences("plane"):
    print(f"  {occ.corpus_id} {occ.doc_id} @{occ.token_position}")

print("\nsampling 3 of the C1 occurrences, twice with seed 7 and once with 8:")
for seed in (7, 7, 8):
    sample = sample_occurrences(index, "plane", "C1", cap=3, seed=seed)
    print(f"  seed {seed}: {[(o.doc_id, o.token_position) for o in sample]}")
print("same seed, same sample; new seed, new sample.")
