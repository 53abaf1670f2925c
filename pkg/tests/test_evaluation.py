"""Gold-rating evaluation: averaging, exclusions, correlations, aggregation."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from driftscope.errors import DataError
from driftscope.evaluation import (
    EvalResult,
    aggregate,
    apply_exclusions,
    average_annotations,
    evaluate_dataset,
    load_exclusions,
    load_gold_ratings,
    pearson,
    spearman,
)

# Reported scaled-JSD Spearman values and evaluated word counts for five
# standard change-detection datasets; pins the aggregation arithmetic.
SCALED_JSD_ROW = [0.535, 0.547, 0.563, 0.533, 0.310]
WORD_COUNTS = [96, 37, 40, 48, 31]


class TestAverageAnnotations:
    def test_mean(self):
        assert average_annotations({"t": [1, 2, 3]}) == {"t": 2.0}

    def test_singleton(self):
        assert average_annotations({"t": [0.7]}) == {"t": 0.7}

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            average_annotations({"t": []})

    def test_brute_force_oracle(self, rng):
        raw = {
            f"t{i}": list(rng.random(int(rng.integers(1, 8))))
            for i in range(50)
        }
        averaged = average_annotations(raw)
        for term, values in raw.items():
            total = 0.0
            for v in values:
                total += v
            assert averaged[term] == pytest.approx(total / len(values), abs=1e-12)


class TestApplyExclusions:
    def setup_method(self):
        self.ratings = {f"term{i:03d}": i / 100 for i in range(100)}

    def test_four_term_exclusion(self):
        excl = {"term000", "term001", "term002", "term003"}
        gold = apply_exclusions(self.ratings, excl, "gems")
        assert len(gold.ratings) == 96
        assert gold.exclusions_applied == tuple(sorted(excl))

    def test_single_exclusion(self):
        gold = apply_exclusions(self.ratings, {"term050"}, "gems")
        assert len(gold.ratings) == 99

    def test_absent_term_noop(self):
        gold = apply_exclusions(self.ratings, {"nonexistent"}, "gems")
        assert len(gold.ratings) == 100
        assert gold.exclusions_applied == ()


class TestCorrelations:
    def test_spearman_perfect(self):
        assert spearman([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)

    def test_spearman_reversal(self):
        assert spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_spearman_one_swap(self):
        # 1 - 6 * sum(d^2) / (n(n^2-1)) with d^2 = (0, 1, 1, 0)
        assert spearman([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8)

    def test_pearson_affine(self):
        x = [1.0, 2.0, 5.0, 9.0]
        assert pearson(x, [2 * v + 1 for v in x]) == pytest.approx(1.0)

    def test_pearson_negation(self):
        x = [1.0, 2.0, 5.0]
        assert pearson(x, [-v for v in x]) == pytest.approx(-1.0)

    def test_length_mismatch(self):
        with pytest.raises(DataError, match="length mismatch"):
            pearson([1, 2, 3], [1, 2])

    def test_too_short(self):
        with pytest.raises(DataError, match="at least 3"):
            spearman([1, 2], [1, 2])

    def test_constant_input_is_error_not_zero(self):
        with pytest.raises(DataError, match="constant"):
            spearman([1, 1, 1], [1, 2, 3])
        with pytest.raises(DataError, match="constant"):
            pearson([1, 2, 3], [5, 5, 5])

    def test_pearson_matches_two_pass_covariance_oracle(self, rng):
        for _ in range(50):
            n = int(rng.integers(3, 40))
            x = rng.random(n) * 10
            y = rng.random(n) * 10 + x * rng.random()
            mx = sum(x) / n
            my = sum(y) / n
            cov = sum((a - mx) * (b - my) for a, b in zip(x, y))
            vx = sum((a - mx) ** 2 for a in x)
            vy = sum((b - my) ** 2 for b in y)
            expected = cov / (vx * vy) ** 0.5
            assert pearson(x, y) == pytest.approx(expected, abs=1e-12)

    def test_matches_scipy_with_ties(self, rng):
        for _ in range(30):
            n = int(rng.integers(5, 50))
            x = rng.integers(0, 8, size=n).astype(float)  # plenty of ties
            y = x + rng.random(n)
            if len(set(x)) < 2:
                continue
            ours = spearman(x, y)
            theirs = stats.spearmanr(x, y).statistic
            assert ours == pytest.approx(theirs, abs=1e-12)

    @given(
        data=st.lists(
            st.tuples(
                st.floats(min_value=-100, max_value=100, allow_nan=False),
                st.floats(min_value=-100, max_value=100, allow_nan=False),
            ),
            min_size=3,
            max_size=40,
        )
    )
    @settings(max_examples=80, deadline=None)
    def test_rank_invariance_and_symmetry(self, data):
        x = [a for a, _ in data]
        y = [b for _, b in data]
        if len(set(x)) < 2 or len(set(y)) < 2:
            return
        base = spearman(x, y)
        # any strictly increasing transform of x leaves spearman unchanged;
        # skip cases where rounding makes the transform collide values
        transform = lambda v: np.expm1(v / 50) + 3 * v
        ordered = sorted(set(x))
        mapped = [transform(v) for v in ordered]
        if any(b <= a for a, b in zip(mapped, mapped[1:])):
            return
        assert spearman([transform(v) for v in x], y) == pytest.approx(base, abs=1e-9)
        assert spearman(y, x) == pytest.approx(base, abs=1e-12)
        try:
            assert pearson(x, y) == pytest.approx(pearson(y, x), abs=1e-12)
        except DataError:
            pass  # variance underflow counts as constant input


class TestAggregate:
    def _results(self):
        datasets = ["gems", "se_eng", "se_ger", "se_lat", "se_swe"]
        return [
            EvalResult(d, s, 0.0, n)
            for d, s, n in zip(datasets, SCALED_JSD_ROW, WORD_COUNTS)
        ]

    def test_reported_row_averages(self):
        results = self._results()
        weights = {r.dataset_id: n for r, n in zip(results, WORD_COUNTS)}
        unweighted, weighted = aggregate(results, weights)
        assert unweighted == pytest.approx(0.498, abs=0.0005)
        assert weighted == pytest.approx(0.514, abs=0.001)

    def test_single_dataset(self):
        (result,) = [EvalResult("gems", 0.535, 0.5, 96)]
        unweighted, weighted = aggregate([result], {"gems": 96})
        assert unweighted == weighted == 0.535

    def test_missing_weight(self):
        with pytest.raises(DataError, match="missing weights"):
            aggregate(self._results(), {"gems": 96})

    def test_no_weights_requested(self):
        unweighted, weighted = aggregate(self._results())
        assert weighted is None
        assert unweighted == pytest.approx(sum(SCALED_JSD_ROW) / 5)


class TestEvaluateDataset:
    def test_join_and_missing_report(self):
        gold = apply_exclusions(
            {"a": 1.0, "b": 2.0, "c": 3.0, "ghost": 4.0}, set(), "ds"
        )
        system = {"a": 0.1, "b": 0.5, "c": 0.9, "extra": 0.2}
        result, missing = evaluate_dataset("ds", gold, system)
        assert result.n == 3
        assert missing == ["ghost"]
        assert result.spearman == pytest.approx(1.0)


class TestLoaders:
    def test_pre_averaged(self, tmp_path):
        path = tmp_path / "gold.tsv"
        path.write_text("plane\t0.88\ntip\t0.68\n", encoding="utf-8")
        assert load_gold_ratings(path) == {"plane": 0.88, "tip": 0.68}

    def test_multi_annotator(self, tmp_path):
        path = tmp_path / "gold.tsv"
        path.write_text("plane\t1,2,3\n", encoding="utf-8")
        assert load_gold_ratings(path) == {"plane": 2.0}

    def test_lowercase_flag(self, tmp_path):
        path = tmp_path / "gold.tsv"
        path.write_text("Plane\t0.5\n", encoding="utf-8")
        assert load_gold_ratings(path, lowercase=True) == {"plane": 0.5}

    def test_exclusion_file(self, tmp_path):
        path = tmp_path / "exclude.txt"
        path.write_text("assay\nextracellular\nmediaeval\nsulphate\n", encoding="utf-8")
        assert load_exclusions(path) == {
            "assay",
            "extracellular",
            "mediaeval",
            "sulphate",
        }
