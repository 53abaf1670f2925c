"""End-to-end: the driftscope pipeline scoring through this adapter.

Drives the primary toolkit purely through its external interfaces (the
``driftscope`` CLI and its JSON config), with this package serving the
model over stdio.
"""

from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

pytest.importorskip("driftscope")

WORDS = ["plane", "jet", "wing", "sky", "pilot", "flight", "tree", "plant",
         "vine", "stock"]


def test_driftscope_scores_through_stdio_adapter(fixture_model_dir, tmp_path):
    rng = np.random.default_rng(17)
    targets = ["plane", "tree"]
    background = [f"word{i:02d}" for i in range(12)]
    for corpus_id in ("c1", "c2"):
        stream = []
        for term in targets + background:
            stream.extend([term] * 30)
        stream.extend(rng.choice(WORDS, size=200))
        stream = [stream[i] for i in rng.permutation(len(stream))]
        lines = [" ".join(stream[i : i + 10]) for i in range(0, len(stream), 10)]
        (tmp_path / f"{corpus_id}.txt").write_text(
            "".join(line + "\n" for line in lines), encoding="utf-8"
        )
    (tmp_path / "targets.txt").write_text("plane\ntree\n", encoding="utf-8")
    (tmp_path / "stopwords.txt").write_text(
        "the\na\nof\nand\nto\nin\non\nwas\nis\n", encoding="utf-8"
    )
    backend = (
        f"stdio:{sys.executable} -m mlm_adapter.cli serve "
        f"--model {fixture_model_dir}"
    )
    config = {
        "corpora": [
            {"corpus_id": "C1", "raw_path": str(tmp_path / "c1.txt")},
            {"corpus_id": "C2", "raw_path": str(tmp_path / "c2.txt")},
        ],
        "targets_path": str(tmp_path / "targets.txt"),
        "stopword_path": str(tmp_path / "stopwords.txt"),
        "artifact_dir": str(tmp_path / "artifacts"),
        "backend": backend,
        "occurrence_cap": 25,
        "background_count": 12,
        "min_background_frequency": 20,
        "min_window": 3,
        "seed": 17,
    }
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps(config), encoding="utf-8")

    result = subprocess.run(
        [sys.executable, "-m", "driftscope.cli", "score", "--config",
         str(config_path)],
        capture_output=True,
        text=True,
        timeout=540,
    )
    assert result.returncode == 0, result.stderr

    rows = (tmp_path / "artifacts" / "scores.tsv").read_text().splitlines()
    assert len(rows) == 2
    for row in rows:
        term, freq, raw, scaled, window, widen = row.split("\t")
        assert term in targets
        assert raw != "UNDEFINED" and 0.0 <= float(raw) <= 1.0
        assert scaled != "UNDEFINED" and 0.0 <= float(scaled) <= 1.0

    subs = (tmp_path / "artifacts" / "substitutes.jsonl").read_text().splitlines()
    stopwords = {"the", "a", "of", "and", "to", "in", "on", "was", "is"}
    for line in subs:
        row = json.loads(line)
        assert len(row["subs"]) <= 6  # k + 1 spare for the sense stage
        assert not any(s.lower() in stopwords for s in row["subs"])
        assert not any(s.startswith("##") for s in row["subs"])
