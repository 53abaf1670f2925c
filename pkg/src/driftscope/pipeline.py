"""Pipeline stages over persisted artifacts.

Each stage writes its outputs into the artifact directory together with
a manifest entry keyed by a hash of the configuration and every input
file, so rerunning with an identical setup skips completed stages.
Artifact files carry no timestamps; a fixed seed makes every stage
byte-reproducible. A lock file keeps two pipeline instances out of the
same artifact directory.
"""

from __future__ import annotations

import contextlib
import dataclasses
import hashlib
import json
import logging
import os
import shlex
from pathlib import Path
from typing import Iterable

from . import _rng, align, backends, corpus, evaluation, gateway, metric, senses
from .config import RunConfig
from .errors import BackendError, ConfigError, DataError

logger = logging.getLogger(__name__)

BATCH_SIZE = 256


# ---------------------------------------------------------------------------
# artifact store: paths, locking, manifest


class ArtifactStore:
    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.root = Path(cfg.artifact_dir)
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        return self.root / name

    @contextlib.contextmanager
    def lock(self):
        lock_path = self.root / ".lock"
        try:
            fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise DataError(
                f"artifact directory {self.root} is locked by another pipeline "
                f"instance (remove {lock_path} if that run is dead)"
            ) from None
        try:
            os.write(fd, str(os.getpid()).encode())
            os.close(fd)
            yield
        finally:
            with contextlib.suppress(FileNotFoundError):
                lock_path.unlink()

    def _manifest_path(self) -> Path:
        return self.root / "manifest.json"

    def _read_manifest(self) -> dict:
        path = self._manifest_path()
        if not path.exists():
            return {"stages": {}}
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            return {"stages": {}}

    def stage_current(self, stage: str, key: str) -> bool:
        entry = self._read_manifest()["stages"].get(stage)
        if entry is None or entry.get("key") != key:
            return False
        return all((self.root / out).exists() for out in entry.get("outputs", []))

    def mark_stage(self, stage: str, key: str, outputs: Iterable[str]) -> None:
        manifest = self._read_manifest()
        manifest["stages"][stage] = {"key": key, "outputs": sorted(outputs)}
        self._manifest_path().write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        meta = {
            "stage": stage,
            "key": key,
            "outputs": sorted(outputs),
            "config": self.cfg.echo(),
        }
        self.path(f"{stage}.meta.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )


def _hash_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _referenced_inputs(cfg: RunConfig) -> list[Path]:
    paths = [Path(cfg.targets_path)]
    for spec in cfg.corpora:
        paths.append(Path(spec.raw_path))
        if spec.lemma_path:
            paths.append(Path(spec.lemma_path))
    for extra in (cfg.stopword_path, cfg.exceptions_path, cfg.gold_path,
                  cfg.gold_exclusions_path):
        if extra:
            paths.append(Path(extra))
    if cfg.backend and cfg.backend.startswith("synthetic:"):
        paths.append(Path(cfg.backend.split(":", 1)[1]))
    return paths


def _stage_key(cfg: RunConfig, stage: str, extra: str = "") -> str:
    h = hashlib.sha256()
    h.update(cfg.digest().encode())
    h.update(stage.encode())
    h.update(extra.encode())
    for path in sorted(_referenced_inputs(cfg)):
        h.update(str(path).encode())
        if path.exists() and path.is_file():
            h.update(_hash_file(path).encode())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# shared loading helpers


def _load_corpora(cfg: RunConfig) -> dict[str, corpus.Corpus]:
    out = {}
    for spec in cfg.corpora:
        out[spec.corpus_id] = corpus.load_corpus(
            spec.raw_path,
            spec.corpus_id,
            format=spec.format,
            lemma_path=spec.lemma_path,
        )
    return out


def _load_targets(cfg: RunConfig) -> list[str]:
    path = Path(cfg.targets_path)
    if not path.exists():
        raise DataError(f"targets file does not exist: {path}")
    targets = [
        line.strip()
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.strip().startswith("#")
    ]
    if not targets:
        raise DataError(f"targets file is empty: {path}")
    return sorted(set(targets))


def _alignment_config(cfg: RunConfig) -> align.AlignmentConfig:
    exceptions = (
        align.load_exceptions(cfg.exceptions_path) if cfg.exceptions_path else ()
    )
    return align.AlignmentConfig(
        min_token_length=cfg.min_token_length,
        min_form_share=cfg.min_form_share,
        enforce_first_letter=cfg.enforce_first_letter,
        first_letter_exceptions=exceptions,
    )


def _substituter_config(cfg: RunConfig) -> gateway.SubstituterConfig:
    stopwords = (
        gateway.load_stopwords(cfg.stopword_path)
        if cfg.stopword_path
        else frozenset()
    )
    return gateway.SubstituterConfig(
        k=cfg.k,
        keep_extra_for_senses=cfg.keep_extra_for_senses,
        window=cfg.window,
        stopword_path=cfg.stopword_path,
        exclude_target=cfg.exclude_target,
        candidate_factor=cfg.candidate_factor,
        stopwords=stopwords,
    )


def resolve_backend(cfg: RunConfig):
    """Instantiate the configured substituter backend.

    Forms: ``synthetic:<spec.json>``, ``stdio:<command line>``,
    ``tcp:<host>:<port>``.
    """
    if not cfg.backend:
        raise BackendError(
            "no substituter backend configured and no persisted substitutes found"
        )
    kind, _, rest = cfg.backend.partition(":")
    if kind == "synthetic":
        spec_path = Path(rest)
        if not spec_path.exists():
            raise BackendError(f"synthetic spec does not exist: {spec_path}")
        spec = json.loads(spec_path.read_text(encoding="utf-8"))
        return backends.SyntheticSubstituter(
            spec,
            seed=_rng.derive_seed(cfg.seed, "backend"),
            candidate_factor=cfg.candidate_factor,
        )
    if kind == "stdio":
        if not rest:
            raise ConfigError("stdio backend needs a command line")
        return backends.StdioSubstituter(shlex.split(rest))
    if kind == "tcp":
        host, _, port = rest.rpartition(":")
        if not host or not port.isdigit():
            raise ConfigError(f"bad tcp backend address: {rest!r}")
        return backends.TcpSubstituter(host, int(port))
    raise ConfigError(f"unknown backend kind {kind!r}")


def _alignment_artifact(cfg: RunConfig, corpus_id: str) -> str:
    return f"alignments_{corpus_id}.tsv"


def _needs_alignment(cfg: RunConfig) -> bool:
    return any(spec.lemma_path for spec in cfg.corpora)


# ---------------------------------------------------------------------------
# stages


def cmd_align(cfg: RunConfig, store: ArtifactStore | None = None) -> dict:
    """Align every lemmatized document to its raw counterpart."""
    store = store or ArtifactStore(cfg)
    if not _needs_alignment(cfg):
        raise DataError("cmd_align needs at least one corpus with a lemma_path")
    key = _stage_key(cfg, "align")
    outputs = [
        _alignment_artifact(cfg, spec.corpus_id)
        for spec in cfg.corpora
        if spec.lemma_path
    ]
    if store.stage_current("align", key):
        logger.info("align: up to date, skipping")
        return {"skipped": True}

    corpora = _load_corpora(cfg)
    stats = {}
    for spec in cfg.corpora:
        if not spec.lemma_path:
            continue
        maps = []
        total_positions = 0
        padded = 0
        for doc in corpora[spec.corpus_id].documents:
            amap = align.build_alignment(doc.doc_id, doc.raw_tokens, doc.lemma_tokens)
            maps.append(amap)
            total_positions += len(amap.lemma_to_raw)
            padded += sum(1 for e in amap.lemma_to_raw if e is None)
        align.save_alignments(maps, store.path(_alignment_artifact(cfg, spec.corpus_id)))
        aligned_pct = 100.0 * (total_positions - padded) / max(total_positions, 1)
        stats[spec.corpus_id] = {
            "documents": len(maps),
            "aligned_pct": aligned_pct,
            "pad_pct": 100.0 - aligned_pct,
        }
        print(
            f"align[{spec.corpus_id}]: {len(maps)} documents, "
            f"{aligned_pct:.1f}% aligned, {100.0 - aligned_pct:.1f}% PAD"
        )
    store.mark_stage("align", key, outputs)
    return {"skipped": False, "stats": stats}


def _load_alignments(cfg: RunConfig, store: ArtifactStore) -> dict:
    collections = {}
    for spec in cfg.corpora:
        if spec.lemma_path:
            collections[spec.corpus_id] = align.load_alignments(
                store.path(_alignment_artifact(cfg, spec.corpus_id))
            )
    return collections


def cmd_index(cfg: RunConfig, store: ArtifactStore | None = None) -> dict:
    """Index target and background occurrences; write frequency table."""
    store = store or ArtifactStore(cfg)
    if _needs_alignment(cfg):
        cmd_align(cfg, store)
    key = _stage_key(cfg, "index")
    outputs = ["index.tsv", "frequencies.tsv", "background.txt"]
    if store.stage_current("index", key):
        logger.info("index: up to date, skipping")
        return {"skipped": True}

    corpora = _load_corpora(cfg)
    targets = _load_targets(cfg)
    vocab_freq = corpus.vocabulary_frequencies(corpora.values())
    stopwords = (
        gateway.load_stopwords(cfg.stopword_path) if cfg.stopword_path else frozenset()
    )
    background = corpus.select_background_terms(
        vocab_freq,
        cfg.background_count,
        targets,
        cfg.min_background_frequency,
        seed=cfg.seed,
        stopwords=stopwords,
    )
    alignments = _load_alignments(cfg, store) if _needs_alignment(cfg) else None
    index = corpus.build_index(
        corpora.values(),
        set(targets) | background,
        alignments=alignments,
        alignment_config=_alignment_config(cfg),
    )
    corpus.save_index(index, store.path("index.tsv"))
    corpus.save_frequencies(
        vocab_freq,
        store.path("frequencies.tsv"),
        cfg.corpus_ids,
        terms=set(targets) | background,
    )
    store.path("background.txt").write_text(
        "".join(f"{t}\n" for t in sorted(background)), encoding="utf-8"
    )
    print(
        f"index: {len(targets)} targets, {len(background)} background terms, "
        f"{sum(len(v) for v in index.entries.values())} occurrences"
    )
    store.mark_stage("index", key, outputs)
    return {"skipped": False, "targets": len(targets), "background": len(background)}


def cmd_substitute(cfg: RunConfig, store: ArtifactStore | None = None) -> dict:
    """Sample occurrences and fetch filtered substitutes from the backend."""
    store = store or ArtifactStore(cfg)
    cmd_index(cfg, store)
    key = _stage_key(cfg, "substitute")
    outputs = ["substitutes.jsonl"]
    if store.stage_current("substitute", key):
        logger.info("substitute: up to date, skipping")
        return {"skipped": True}

    corpora = _load_corpora(cfg)
    targets = _load_targets(cfg)
    background = sorted(
        line.strip()
        for line in store.path("background.txt").read_text(encoding="utf-8").splitlines()
        if line.strip()
    )
    index = corpus.load_index(store.path("index.tsv"))
    subst_cfg = _substituter_config(cfg)
    backend = resolve_backend(cfg)

    out_path = store.path("substitutes.jsonl")
    fail_path = store.path("substitute_failures.jsonl")
    for path in (out_path, fail_path):
        with contextlib.suppress(FileNotFoundError):
            path.unlink()

    n_sets = 0
    n_failures = 0
    try:
        for term in sorted(set(targets) | set(background)):
            if term not in index.entries:
                continue
            for corpus_id in cfg.corpus_ids:
                occs = corpus.sample_occurrences(
                    index, term, corpus_id, cfg.occurrence_cap, cfg.seed
                )
                if not occs:
                    continue
                contexts = []
                for occ in occs:
                    ctx = gateway.extract_context_window(
                        corpora[corpus_id].document(occ.doc_id), occ, cfg.window
                    )
                    contexts.append(dataclasses.replace(ctx, term=term))
                for start in range(0, len(contexts), BATCH_SIZE):
                    batch = contexts[start : start + BATCH_SIZE]
                    sets, failures = gateway.request_substitutes(
                        batch, backend, subst_cfg
                    )
                    gateway.save_substitute_sets(sets, out_path)
                    n_sets += len(sets)
                    if failures:
                        n_failures += len(failures)
                        with open(fail_path, "a", encoding="utf-8") as fh:
                            for f in failures:
                                fh.write(
                                    json.dumps(
                                        {
                                            "id": backends.make_request_id(
                                                f.context.occurrence
                                            ),
                                            "message": f.message,
                                        },
                                        ensure_ascii=False,
                                    )
                                    + "\n"
                                )
    finally:
        close = getattr(backend, "close", None)
        if close:
            close()
    print(f"substitute: stored {n_sets} substitute sets ({n_failures} failures)")
    store.mark_stage("substitute", key, outputs)
    return {"skipped": False, "sets": n_sets, "failures": n_failures}


def cmd_score(
    cfg: RunConfig,
    store: ArtifactStore | None = None,
    emit_plot_data: bool = False,
) -> dict:
    """Raw JSD plus frequency-scaled change scores for every target."""
    store = store or ArtifactStore(cfg)
    cmd_substitute(cfg, store)
    key = _stage_key(cfg, "score", extra=f"plot={emit_plot_data}")
    outputs = ["scores.tsv", "summary.json"]
    if emit_plot_data:
        outputs.append("plot_count_vs_raw.tsv")
        if cfg.gold_path:
            outputs.append("plot_gold_vs_scaled.tsv")
    if store.stage_current("score", key):
        logger.info("score: up to date, skipping")
        return {"skipped": True}

    targets = _load_targets(cfg)
    background = [
        line.strip()
        for line in store.path("background.txt").read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    freq = corpus.load_frequencies(store.path("frequencies.tsv"), cfg.corpus_ids)
    sets = gateway.load_substitute_sets(store.path("substitutes.jsonl"))

    grouped: dict[str, dict[str, list[gateway.SubstituteSet]]] = {}
    for s in sets:
        # stored lists may carry the k+1 spare for the sense stage;
        # change scoring always uses the top-k
        truncated = gateway.SubstituteSet(
            s.occurrence, s.term, s.substitutes[: cfg.k]
        )
        grouped.setdefault(s.term, {}).setdefault(
            s.occurrence.corpus_id, []
        ).append(truncated)

    distributions: dict[str, dict[str, metric.ReplacementDistribution]] = {}
    for term in set(targets) | set(background):
        per = {}
        for corpus_id in cfg.corpus_ids:
            term_sets = grouped.get(term, {}).get(corpus_id, [])
            per[corpus_id] = metric.count_replacements(
                term_sets, term=term, corpus_id=corpus_id
            )
        distributions[term] = per

    scores = metric.score_all(
        targets,
        background,
        distributions,
        freq,
        window_factor=cfg.window_factor,
        min_window=cfg.min_window,
    )
    metric.save_scores(scores, store.path("scores.tsv"))

    summary = {
        "config": cfg.echo(),
        "n_targets": len(targets),
        "n_background": len(background),
        "n_undefined": sum(1 for s in scores if not s.is_defined),
        "undefined_terms": sorted(s.term for s in scores if not s.is_defined),
        "report": "scores.tsv",
    }
    store.path("summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )

    if emit_plot_data:
        rows = []
        for term in sorted(set(targets) | set(background)):
            per = distributions.get(term, {})
            pair = [per.get(c) for c in cfg.corpus_ids]
            if any(d is None or d.is_empty for d in pair):
                continue
            kind = "target" if term in set(targets) else "background"
            rows.append(
                f"{term}\t{kind}\t{freq.union_count(term)}"
                f"\t{metric.jsd(pair[0], pair[1]):.12g}\n"
            )
        store.path("plot_count_vs_raw.tsv").write_text(
            "".join(rows), encoding="utf-8"
        )
        if cfg.gold_path:
            gold = evaluation.load_gold_ratings(cfg.gold_path, cfg.gold_lowercase)
            lines = []
            for s in scores:
                if s.is_defined and s.term in gold:
                    lines.append(f"{s.term}\t{gold[s.term]:.12g}\t{s.scaled:.12g}\n")
            store.path("plot_gold_vs_scaled.tsv").write_text(
                "".join(lines), encoding="utf-8"
            )
    n_defined = sum(1 for s in scores if s.is_defined)
    print(
        f"score: {n_defined}/{len(scores)} targets scored "
        f"({len(scores) - n_defined} UNDEFINED)"
    )
    store.mark_stage("score", key, outputs)
    return {"skipped": False, "scores": len(scores)}


def cmd_senses(
    cfg: RunConfig, term: str, store: ArtifactStore | None = None
) -> dict:
    """Induce and profile sense clusters for one target term."""
    store = store or ArtifactStore(cfg)
    cmd_substitute(cfg, store)
    safe = "".join(c if c.isalnum() or c in "-_" else "_" for c in term)
    out_name = f"senses_{safe}.json"
    key = _stage_key(cfg, "senses", extra=term)
    if store.stage_current(f"senses:{term}", key):
        logger.info("senses[%s]: up to date, skipping", term)
        return {"skipped": True}

    all_sets = gateway.load_substitute_sets(store.path("substitutes.jsonl"))
    term_sets = [s for s in all_sets if s.term == term]
    if not term_sets:
        raise DataError(f"term {term!r} has no stored substitutes")
    excluded = senses.exclude_target_from_sets(term_sets, term, cfg.k)
    nonempty = [s for s in excluded if s.substitutes]
    if not nonempty:
        raise DataError(f"term {term!r} has no non-target substitutes")
    graph = senses.build_cooccurrence_graph(nonempty)
    partition = senses.louvain_partition(
        graph, resolution=cfg.louvain_resolution, seed=cfg.seed
    )
    assignments = senses.assign_mentions(excluded, partition)
    partition, assignments = senses.order_clusters_by_mentions(partition, assignments)
    profile = senses.sense_profile(term, assignments)
    report = senses.sense_report(
        graph, partition, assignments, profile, cfg.corpus_ids
    )
    report["config"] = cfg.echo()
    store.path(out_name).write_text(
        json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    print(
        f"senses[{term}]: {len(partition.clusters)} clusters, "
        f"modularity {partition.modularity:.3f}"
    )
    store.mark_stage(f"senses:{term}", key, [out_name])
    return {"skipped": False, "clusters": len(partition.clusters)}


def cmd_eval(cfg: RunConfig, store: ArtifactStore | None = None) -> dict:
    """Correlate scaled scores with gold ratings."""
    store = store or ArtifactStore(cfg)
    cmd_score(cfg, store)
    if not cfg.gold_path:
        raise ConfigError("cmd_eval needs gold_path in the configuration")
    key = _stage_key(cfg, "eval")
    if store.stage_current("eval", key):
        logger.info("eval: up to date, skipping")
        return {"skipped": True}

    ratings = evaluation.load_gold_ratings(cfg.gold_path, cfg.gold_lowercase)
    exclusions = (
        evaluation.load_exclusions(cfg.gold_exclusions_path)
        if cfg.gold_exclusions_path
        else set()
    )
    dataset_id = Path(cfg.gold_path).stem
    gold = evaluation.apply_exclusions(ratings, exclusions, dataset_id=dataset_id)
    scores = metric.load_scores(store.path("scores.tsv"))
    system = {s.term: s.scaled for s in scores if s.is_defined}
    result, missing = evaluation.evaluate_dataset(dataset_id, gold, system)
    unweighted, weighted = evaluation.aggregate([result], {dataset_id: result.n})
    payload = {
        "config": cfg.echo(),
        "datasets": [
            {
                "dataset_id": result.dataset_id,
                "spearman": result.spearman,
                "pearson": result.pearson,
                "n": result.n,
                "excluded": list(gold.exclusions_applied),
                "missing_in_system": missing,
            }
        ],
        "aggregate": {"spearman_mean": unweighted, "spearman_weighted": weighted},
    }
    store.path("eval.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    print(
        f"eval[{dataset_id}]: spearman {result.spearman:.3f}, "
        f"pearson {result.pearson:.3f}, n={result.n}"
    )
    store.mark_stage("eval", key, ["eval.json"])
    return {"skipped": False, "spearman": result.spearman}
