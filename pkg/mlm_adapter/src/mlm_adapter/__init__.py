"""Masked-language-model backend for the substituter wire protocol.

Serves a HuggingFace masked LM over JSON lines (stdio or TCP): each
predict request carries left/right context tokens, the target word is
replaced by exactly one mask token, and the response is the model's raw
top candidate ranking (strings only - probabilities never cross the
wire). Also provides continued masked-LM pretraining on the union of
two period corpora.
"""

from .model import AdapterConfig, MaskedTokenRanker, encode_with_mask

__version__ = "0.1.0"
