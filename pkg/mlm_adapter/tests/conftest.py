"""Tiny randomly initialized BERT fixture, built once per session."""

from __future__ import annotations

import pytest
import torch
from transformers import BertConfig, BertForMaskedLM, BertTokenizer

WORDS = [
    "plane", "jet", "wing", "sky", "pilot", "flight", "air", "car",
    "runway", "fly", "land", "tree", "plant", "vine", "stock", "graft",
    "the", "a", "of", "and", "to", "in", "on", "was", "is",
]
PIECES = ["##craft", "##ing", "##s", "##ed", "##er"]
FILLER = [f"word{i:02d}" for i in range(60)]


def build_fixture_model(target_dir) -> str:
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + WORDS + PIECES + FILLER
    vocab_path = target_dir / "vocab.txt"
    vocab_path.write_text("".join(tok + "\n" for tok in vocab), encoding="utf-8")
    tokenizer = BertTokenizer(str(vocab_path))
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=128,
    )
    torch.manual_seed(1234)
    model = BertForMaskedLM(config)
    model.save_pretrained(target_dir)
    tokenizer.save_pretrained(target_dir)
    return str(target_dir)


@pytest.fixture(scope="session")
def fixture_model_dir(tmp_path_factory) -> str:
    return build_fixture_model(tmp_path_factory.mktemp("tiny_bert"))


@pytest.fixture(scope="session")
def fixture_corpus(tmp_path_factory):
    """Two period corpora totalling 1,000 lines."""
    import numpy as np

    rng = np.random.default_rng(55)
    root = tmp_path_factory.mktemp("corpus")
    paths = []
    for name, n_lines in (("c1.txt", 600), ("c2.txt", 400)):
        lines = [
            " ".join(rng.choice(WORDS + FILLER, size=rng.integers(4, 12)))
            for _ in range(n_lines)
        ]
        path = root / name
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        paths.append(path)
    return paths
