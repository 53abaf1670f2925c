"""Continued masked-LM pretraining on the union of two period corpora."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence

import torch
from torch.utils.data import DataLoader, TensorDataset
from transformers import AutoModelForMaskedLM, AutoTokenizer

from .model import AdapterConfig

logger = logging.getLogger(__name__)

MASK_PROBABILITY = 0.15


def _read_union(corpus_paths: Sequence[str | Path]) -> list[str]:
    lines: list[str] = []
    for path in corpus_paths:
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"corpus does not exist: {path}")
        lines.extend(
            line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()
        )
    if not lines:
        raise ValueError("the training corpora are empty")
    return lines


def _mask_batch(input_ids, special_mask, tokenizer, generator):
    """Standard MLM corruption: 15% of tokens, of which 80% become the
    mask token, 10% a random token, 10% stay put."""
    labels = input_ids.clone()
    prob = torch.full(labels.shape, MASK_PROBABILITY)
    prob.masked_fill_(special_mask, 0.0)
    chosen = torch.bernoulli(prob, generator=generator).bool()
    labels[~chosen] = -100

    replace = (
        torch.bernoulli(torch.full(labels.shape, 0.8), generator=generator).bool()
        & chosen
    )
    input_ids[replace] = tokenizer.mask_token_id
    randomize = (
        torch.bernoulli(torch.full(labels.shape, 0.5), generator=generator).bool()
        & chosen
        & ~replace
    )
    random_tokens = torch.randint(
        len(tokenizer), labels.shape, dtype=torch.long, generator=generator
    )
    input_ids[randomize] = random_tokens[randomize]
    return input_ids, labels


def finetune(
    config: AdapterConfig,
    corpus_paths: Sequence[str | Path],
    output_dir: str | Path,
    max_length: int = 64,
) -> Path:
    """Adapt the model to the corpora; write a directory ``serve`` can load.

    ``epochs == 0`` skips training entirely and re-saves the input model
    unchanged.
    """
    output_dir = Path(output_dir)
    tokenizer = AutoTokenizer.from_pretrained(config.model)
    model = AutoModelForMaskedLM.from_pretrained(config.model)

    if config.epochs > 0:
        lines = _read_union(corpus_paths)
        torch.manual_seed(config.seed)
        generator = torch.Generator().manual_seed(config.seed)
        encoded = tokenizer(
            lines,
            truncation=True,
            max_length=max_length,
            padding="max_length",
            return_tensors="pt",
            return_special_tokens_mask=True,
        )
        dataset = TensorDataset(
            encoded["input_ids"],
            encoded["attention_mask"],
            encoded["special_tokens_mask"],
        )
        loader = DataLoader(dataset, batch_size=config.batch_size, shuffle=True,
                            generator=generator)
        device = torch.device(config.device)
        model.to(device)
        model.train()
        optimizer = torch.optim.AdamW(model.parameters(), lr=config.learning_rate)
        for epoch in range(config.epochs):
            total = 0.0
            for input_ids, attention_mask, special in loader:
                input_ids, labels = _mask_batch(
                    input_ids.clone(), special.bool(), tokenizer, generator
                )
                optimizer.zero_grad()
                out = model(
                    input_ids=input_ids.to(device),
                    attention_mask=attention_mask.to(device),
                    labels=labels.to(device),
                )
                out.loss.backward()
                optimizer.step()
                total += out.loss.item()
            logger.info("epoch %d/%d loss %.4f", epoch + 1, config.epochs,
                        total / max(len(loader), 1))
        model.to("cpu")

    output_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(output_dir)
    tokenizer.save_pretrained(output_dir)
    return output_dir
