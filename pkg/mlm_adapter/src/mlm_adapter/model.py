"""Model loading and masked-position ranking."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import torch
from transformers import AutoModelForMaskedLM, AutoTokenizer

PROTOCOL_VERSION = 1


@dataclass(frozen=True)
class AdapterConfig:
    model: str
    device: str = "cpu"
    # candidates returned per request: factor * requested k
    candidate_factor: int = 4
    max_length: int | None = None
    epochs: int = 5
    batch_size: int = 16
    learning_rate: float = 5e-5
    seed: int = 0


def encode_with_mask(
    tokenizer,
    left: Sequence[str],
    right: Sequence[str],
    max_length: int,
) -> tuple[list[int], int]:
    """Token ids for ``[CLS] left [MASK] right [SEP]`` plus the mask index.

    The masked word is replaced by exactly one mask token no matter how
    many word pieces its surface form would need; long contexts are
    truncated so the mask stays centered.
    """
    left_ids = tokenizer.encode(" ".join(left), add_special_tokens=False)
    right_ids = tokenizer.encode(" ".join(right), add_special_tokens=False)
    budget = max_length - 3  # CLS, MASK, SEP
    keep_right = min(len(right_ids), budget // 2)
    keep_left = min(len(left_ids), budget - keep_right)
    keep_right = min(len(right_ids), budget - keep_left)
    left_ids = left_ids[len(left_ids) - keep_left :] if keep_left else []
    right_ids = right_ids[:keep_right]
    ids = (
        [tokenizer.cls_token_id]
        + left_ids
        + [tokenizer.mask_token_id]
        + right_ids
        + [tokenizer.sep_token_id]
    )
    return ids, 1 + len(left_ids)


class MaskedTokenRanker:
    """Ranks vocabulary tokens for one masked position in context."""

    def __init__(self, config: AdapterConfig):
        torch.manual_seed(config.seed)
        self.config = config
        self.tokenizer = AutoTokenizer.from_pretrained(config.model)
        self.model = AutoModelForMaskedLM.from_pretrained(config.model)
        self.model.to(config.device)
        self.model.eval()
        limit = self.tokenizer.model_max_length
        if limit is None or limit > 100_000:  # some tokenizers report a sentinel
            limit = self.model.config.max_position_embeddings
        self.max_length = min(config.max_length or limit, limit)
        self._special_ids = set(self.tokenizer.all_special_ids)

    def rank(self, left: Sequence[str], right: Sequence[str], k: int) -> list[str]:
        """Raw top-(factor*k) candidate strings, most probable first.

        No stopword or word-piece filtering happens here; that is the
        consumer's job. Only the tokenizer's special tokens (mask,
        padding, separators) are withheld.
        """
        ids, mask_pos = encode_with_mask(
            self.tokenizer, left, right, self.max_length
        )
        batch = torch.tensor([ids], device=self.config.device)
        with torch.no_grad():
            logits = self.model(batch).logits[0, mask_pos]
        want = self.config.candidate_factor * max(k, 1)
        top = torch.topk(logits, min(want + len(self._special_ids), logits.shape[-1]))
        out = []
        for token_id in top.indices.tolist():
            if token_id in self._special_ids:
                continue
            out.append(self.tokenizer.convert_ids_to_tokens(token_id))
            if len(out) >= want:
                break
        return out
