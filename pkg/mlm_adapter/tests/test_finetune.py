"""Continued-pretraining contracts: zero-epoch no-op, loadable output."""

from __future__ import annotations

import torch
from transformers import AutoModelForMaskedLM

from mlm_adapter.finetune import _read_union, finetune
from mlm_adapter.model import AdapterConfig, MaskedTokenRanker


class TestEpochsZero:
    def test_output_identical_to_input(self, fixture_model_dir, fixture_corpus,
                                       tmp_path):
        out_dir = finetune(
            AdapterConfig(model=fixture_model_dir, epochs=0),
            fixture_corpus,
            tmp_path / "adapted",
        )
        before = AutoModelForMaskedLM.from_pretrained(fixture_model_dir)
        after = AutoModelForMaskedLM.from_pretrained(out_dir)
        before_state = before.state_dict()
        after_state = after.state_dict()
        assert before_state.keys() == after_state.keys()
        for name, tensor in before_state.items():
            assert torch.equal(tensor, after_state[name]), name


class TestTrainingRun:
    def test_five_epochs_produce_a_loadable_model(self, fixture_model_dir,
                                                  fixture_corpus, tmp_path):
        out_dir = finetune(
            AdapterConfig(model=fixture_model_dir, epochs=5, batch_size=32),
            fixture_corpus,
            tmp_path / "adapted",
        )
        ranker = MaskedTokenRanker(AdapterConfig(model=str(out_dir)))
        ranking = ranker.rank(["the", "plane"], ["sky"], k=5)
        assert len(ranking) >= 5
        # training moved the weights
        before = AutoModelForMaskedLM.from_pretrained(fixture_model_dir)
        after = AutoModelForMaskedLM.from_pretrained(out_dir)
        moved = any(
            not torch.equal(a, b)
            for (_, a), (_, b) in zip(
                sorted(before.state_dict().items()),
                sorted(after.state_dict().items()),
            )
        )
        assert moved


class TestUnion:
    def test_training_set_is_the_union_of_both_corpora(self, fixture_corpus):
        a, b = fixture_corpus
        lines = _read_union([a, b])
        n_a = len(a.read_text().splitlines())
        n_b = len(b.read_text().splitlines())
        assert len(lines) == n_a + n_b
