"""Raw JSD and the frequency-matched quantile, on planted drift.

Each term is represented per period by the distribution of its top-5
masked substitutes. One term drifts between the periods, one does not;
both are scored against a background population whose own drift spans
the full range. The demo also shows why raw JSD alone misleads: a rare
stable term out-scores a frequent stable one on raw JSD, and the
quantile repairs that.
"""

import numpy as np

from driftscope.backends import PredictRequest, SyntheticSubstituter
from driftscope.corpus import FrequencyTable, Occurrence
from driftscope.gateway import SubstituteSet
from driftscope.metric import count_replacements, frequency_window, jsd, scaled_score

rng = np.random.default_rng(42)


def zipf(words: list[str]) -> dict[str, float]:
    weights = 1.0 / np.arange(1, len(words) + 1)
    weights /= weights.sum()
    return {w: float(p) for w, p in zip(words, weights)}


OLD = zipf(
    "surface line point geometry edge angle curve axis grid slope arc chord".split()
)
NEW = zipf(
    "aircraft jet airplane runway pilot flight wing cockpit hangar cargo crew sky".split()
)


def mixture(m: float) -> dict[str, float]:
    out = {w: p * (1 - m) for w, p in OLD.items()}
    out.update({w: p * m for w, p in NEW.items()})
    return {w: p for w, p in out.items() if p > 0}


# plane drifts almost entirely; tree stays put; rare/common are stable
# background-style terms at very different frequencies
terms = {
    "plane": (0.9, 400),
    "tree": (0.0, 400),
    "rare_stable": (0.0, 60),
    "common_stable": (0.0, 3000),
}
background = {f"bg{i:03d}": (float(rng.uniform(0, 1)), int(rng.integers(50, 3000)))
              for i in range(300)}

spec = {}
for name, (m, _) in {**terms, **background}.items():
    spec[name] = {"C1": mixture(0.0), "C2": mixture(m)}
backend = SyntheticSubstituter(spec, seed=1)


def period_distribution(term: str, corpus: str, n: int):
    requests = [
        PredictRequest(f"{term}/{corpus}/{i}", (), (), 5, term=term, corpus_id=corpus)
        for i in range(n)
    ]
    sets = [
        SubstituteSet(Occurrence(corpus, f"d{i}", 0), term, r.substitutes[:5])
        for i, r in enumerate(backend.predict(requests))
    ]
    return count_replacements(sets, term=term, corpus_id=corpus)


raw_scores, union = {}, {}
for name, (m, n) in {**terms, **background}.items():
    raw_scores[name] = jsd(
        period_distribution(name, "C1", n), period_distribution(name, "C2", n)
    )
    union[name] = 2 * n

table = FrequencyTable(
    per_corpus={t: {"C1": n // 2, "C2": n // 2} for t, n in union.items()},
    union=union,
)
bg_raw = {t: raw_scores[t] for t in background}

print(f"{'term':<14} {'freq':>6} {'raw JSD':>9} {'scaled':>7}")
for name in terms:
    window = frequency_window(table, name, bg_raw, factor=2.0)
    scaled = scaled_score(raw_scores[name], bg_raw, window)
    print(f"{name:<14} {union[name]:>6} {raw_scores[name]:>9.4f} {scaled:>7.2f}")

print(
    "\nraw JSD ranks 'rare_stable' above 'common_stable' purely because it"
    "\nis rarer; the frequency-matched quantile sends both stable terms to"
    "\nthe bottom while the planted drift in 'plane' stays on top."
)
