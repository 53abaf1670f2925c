"""Run configuration: one JSON file drives every pipeline stage.

Defaults: top-5 substitutes, a 4,000-occurrence sampling cap, 10,000
background terms, a factor-2 frequency window, and 50-token context to
either side.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import ConfigError


@dataclass(frozen=True)
class CorpusSpec:
    corpus_id: str
    raw_path: str
    lemma_path: str | None = None
    format: str = "lines"


@dataclass(frozen=True)
class RunConfig:
    corpora: tuple[CorpusSpec, CorpusSpec]
    targets_path: str
    artifact_dir: str
    gold_path: str | None = None
    gold_exclusions_path: str | None = None
    gold_lowercase: bool = False
    k: int = 5
    occurrence_cap: int = 4000
    background_count: int = 10000
    window_factor: float = 2.0
    window: int = 50
    min_window: int = 50
    min_background_frequency: int = 20
    seed: int = 0
    backend: str | None = None
    stopword_path: str | None = None
    exceptions_path: str | None = None
    keep_extra_for_senses: bool = True
    exclude_target: bool = False
    candidate_factor: int = 4
    louvain_resolution: float = 1.0
    min_token_length: int = 2
    min_form_share: float = 0.0002
    enforce_first_letter: bool = True

    def __post_init__(self) -> None:
        if len(self.corpora) != 2:
            raise ConfigError("exactly two corpora (one per period) are required")
        ids = [c.corpus_id for c in self.corpora]
        if len(set(ids)) != 2:
            raise ConfigError(f"corpus ids must be distinct, got {ids}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.occurrence_cap < 1:
            raise ConfigError(f"occurrence_cap must be >= 1, got {self.occurrence_cap}")
        if self.window_factor <= 1.0:
            raise ConfigError(
                f"window_factor must exceed 1, got {self.window_factor}"
            )

    @property
    def corpus_ids(self) -> tuple[str, str]:
        return (self.corpora[0].corpus_id, self.corpora[1].corpus_id)

    def echo(self) -> dict:
        """Canonical dict embedded into every artifact for reproducibility."""
        return asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(self.echo(), sort_keys=True).encode("utf-8")
        ).hexdigest()


def load_config(path: str | Path, seed_override: int | None = None) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file does not exist: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")

    corpora_raw = data.pop("corpora", None)
    if not isinstance(corpora_raw, list) or len(corpora_raw) != 2:
        raise ConfigError("config needs a 'corpora' list with two entries")
    corpora = []
    for entry in corpora_raw:
        try:
            corpora.append(CorpusSpec(**entry))
        except TypeError as exc:
            raise ConfigError(f"bad corpus entry {entry!r}: {exc}") from None

    if seed_override is not None:
        data["seed"] = seed_override
    known = {f for f in RunConfig.__dataclass_fields__} - {"corpora"}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    missing = [
        f for f in ("targets_path", "artifact_dir") if f not in data
    ]
    if missing:
        raise ConfigError(f"config lacks required fields: {missing}")
    try:
        return RunConfig(corpora=tuple(corpora), **data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
