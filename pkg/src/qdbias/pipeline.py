"""End-to-end analysis runs: ingest, cluster, score, and write reports.

A run computes everything in memory first and only then touches the output
directory, so a failed run never leaves a partial report tree behind.  The
manifest is written before the tables it describes and carries a sha256
digest of every rendered file, which lets verify_manifest detect any
post-hoc edit or truncation.

Failure taxonomy: ConfigError for an invalid configuration (every problem
is collected, not just the first), PipelineError for data problems at run
time (unreadable inputs, empty alignment, embedding coverage below the
floor).
"""

from __future__ import annotations

import hashlib
import io
import json
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from . import __version__
from .bland_altman import ba_condition_contrast, ba_label_rates
from .clustering import ClusterResult, HdbscanParams, cluster_points
from .corpus import (
    AlignmentError,
    JudgmentMatrix,
    QrelsGradeError,
    QrelsParseError,
    align_judgments,
    corpus_stats,
    matrix_to_tsv,
    parse_qrels,
)
from .embeddings import QdvError, missing_keys, parse_qdv_tsv, read_qdv
from .reports import (
    Table,
    ba_tables,
    cluster_assignment_table,
    cluster_diagnostics_table,
    corpus_stats_table,
    fig_cluster_metrics_table,
    fig_delta_table,
    fig_top_queries_table,
    purity_summary_table,
    ranking_table,
    render_tsv,
    table_to_json,
    variation_table,
)
from .variation import BiasReport, HeuristicConfig, analyze_variation

__all__ = [
    "ConfigError",
    "PipelineError",
    "RunConfig",
    "RunOutcome",
    "run_pipeline",
    "validate_config",
    "verify_manifest",
]

MANIFEST_NAME = "manifest.json"

_EMBEDDING_FORMATS = ("auto", "qdv", "tsv")
_METRICS = ("euclidean", "euclidean_on_normalized")
_BSS_POLICIES = ("zero", "skip")


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


class PipelineError(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    human_qrels: str
    judge_qrels: dict[str, str]
    embeddings: str
    out_dir: str
    embeddings_format: str = "auto"
    binarize_threshold: int = 2
    min_coverage: float = 0.99
    metric: str = "euclidean"
    min_cluster_size: int = 15
    min_samples: int = 5
    min_cell_size: int = 3
    tau_abs: float = 0.5
    iqr_multiplier: float = 1.5
    extreme_high: float = 0.8
    extreme_low: float = 0.2
    min_judges_flagged: int = 2
    include_noise_cells: bool = False
    missing_bss_policy: str = "zero"
    ba_min_pairs: int = 2
    purity_coverage: float = 0.8
    emit_json: bool = False
    emit_plots: bool = True

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "RunConfig":
        known = set(cls.field_names())
        errors = [f"unknown config key {k!r}" for k in sorted(set(data) - known)]
        missing = [k for k in ("human_qrels", "judge_qrels", "embeddings", "out_dir") if k not in data]
        errors.extend(f"missing required config key {k!r}" for k in missing)
        if errors:
            raise ConfigError(errors)
        config = cls(**data)
        if base_dir is not None:
            config = config.resolve_paths(base_dir)
        return config

    @classmethod
    def from_file(cls, path: Path | str) -> "RunConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError([f"cannot read config file: {exc}"]) from exc
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config file is not valid JSON: {exc}"]) from exc
        if not isinstance(data, dict):
            raise ConfigError(["config file must hold a JSON object"])
        return cls.from_dict(data, base_dir=path.parent)

    def resolve_paths(self, base_dir: Path) -> "RunConfig":
        def resolve(p: str) -> str:
            return str((base_dir / p).resolve()) if p and not Path(p).is_absolute() else p

        return replace(
            self,
            human_qrels=resolve(self.human_qrels),
            judge_qrels={j: resolve(p) for j, p in self.judge_qrels.items()},
            embeddings=resolve(self.embeddings),
            out_dir=resolve(self.out_dir),
        )

    def with_overrides(self, overrides: dict) -> "RunConfig":
        unknown = sorted(set(overrides) - set(self.field_names()))
        if unknown:
            raise ConfigError([f"unknown config key {k!r}" for k in unknown])
        return replace(self, **overrides)

    def heuristics(self) -> HeuristicConfig:
        return HeuristicConfig(
            min_cell_size=self.min_cell_size,
            tau_abs=self.tau_abs,
            iqr_multiplier=self.iqr_multiplier,
            extreme_high=self.extreme_high,
            extreme_low=self.extreme_low,
            min_judges_flagged=self.min_judges_flagged,
            include_noise_cells=self.include_noise_cells,
            missing_bss_policy=self.missing_bss_policy,
        )

    def hdbscan_params(self) -> HdbscanParams:
        return HdbscanParams(
            min_cluster_size=self.min_cluster_size,
            min_samples=self.min_samples,
            metric=self.metric,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def validate_config(config: RunConfig) -> list[str]:
    """Every problem with the configuration, in a stable order."""
    errors: list[str] = []

    def check_path(label: str, value: str) -> None:
        if not isinstance(value, str) or not value:
            errors.append(f"{label} must be a non-empty path")
        elif not Path(value).is_file():
            errors.append(f"{label} does not exist: {value}")

    check_path("human_qrels", config.human_qrels)
    if not isinstance(config.judge_qrels, dict) or not config.judge_qrels:
        errors.append("judge_qrels must map at least one judge id to a qrels path")
    else:
        for judge_id in sorted(config.judge_qrels):
            if not judge_id or judge_id == "human":
                errors.append(f"invalid judge id {judge_id!r}")
            check_path(f"judge_qrels[{judge_id}]", config.judge_qrels[judge_id])
    check_path("embeddings", config.embeddings)
    if not config.out_dir:
        errors.append("out_dir must be a non-empty path")
    if config.embeddings_format not in _EMBEDDING_FORMATS:
        errors.append(f"embeddings_format must be one of {_EMBEDDING_FORMATS}")
    if not 1 <= config.binarize_threshold <= 3:
        errors.append(f"binarize_threshold must lie in [1, 3], got {config.binarize_threshold}")
    if not 0.0 < config.min_coverage <= 1.0:
        errors.append(f"min_coverage must lie in (0, 1], got {config.min_coverage}")
    if config.metric not in _METRICS:
        errors.append(f"metric must be one of {_METRICS}")
    if config.min_cluster_size < 2:
        errors.append(f"min_cluster_size must be >= 2, got {config.min_cluster_size}")
    if config.min_samples < 1:
        errors.append(f"min_samples must be >= 1, got {config.min_samples}")
    if config.min_cell_size < 2:
        errors.append(f"min_cell_size must be >= 2, got {config.min_cell_size}")
    if config.tau_abs < 0:
        errors.append(f"tau_abs must be >= 0, got {config.tau_abs}")
    if config.iqr_multiplier < 0:
        errors.append(f"iqr_multiplier must be >= 0, got {config.iqr_multiplier}")
    if not config.extreme_low < config.extreme_high:
        errors.append(
            f"extreme_low must be below extreme_high, got {config.extreme_low} >= {config.extreme_high}"
        )
    if config.min_judges_flagged < 1:
        errors.append(f"min_judges_flagged must be >= 1, got {config.min_judges_flagged}")
    if config.missing_bss_policy not in _BSS_POLICIES:
        errors.append(f"missing_bss_policy must be one of {_BSS_POLICIES}")
    if config.ba_min_pairs < 1:
        errors.append(f"ba_min_pairs must be >= 1, got {config.ba_min_pairs}")
    if not 0.0 < config.purity_coverage <= 1.0:
        errors.append(f"purity_coverage must lie in (0, 1], got {config.purity_coverage}")
    return errors


@dataclass
class RunOutcome:
    out_dir: Path
    manifest: dict
    matrix: JudgmentMatrix
    clusters: ClusterResult
    report: BiasReport


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _digest_file(path: str) -> dict:
    raw = Path(path).read_bytes()
    return {"path": path, "sha256": _sha256(raw), "bytes": len(raw)}


def _load_embeddings(config: RunConfig):
    path = Path(config.embeddings)
    fmt = config.embeddings_format
    if fmt == "auto":
        with path.open("rb") as fh:
            fmt = "qdv" if fh.read(4) == b"QDV1" else "tsv"
    if fmt == "qdv":
        with path.open("rb") as fh:
            return read_qdv(fh)
    return parse_qdv_tsv(path.read_text(encoding="utf-8"))


def run_pipeline(config: RunConfig) -> RunOutcome:
    errors = validate_config(config)
    if errors:
        raise ConfigError(errors)

    timings: list[dict] = []

    class stage:
        def __init__(self, name: str):
            self.name = name

        def __enter__(self):
            self.start = time.perf_counter()

        def __exit__(self, exc_type, exc, tb):
            if exc_type is None:
                timings.append({"name": self.name, "seconds": time.perf_counter() - self.start})
            return False

    warnings = {
        "duplicate_judgments": {},
        "dropped_unaligned_pairs": 0,
        "missing_embeddings": 0,
        "undefined_kappa": 0,
    }

    with stage("ingest"):
        try:
            with open(config.human_qrels, encoding="utf-8") as fh:
                human = parse_qrels(fh)
            judges = {}
            for judge_id in sorted(config.judge_qrels):
                with open(config.judge_qrels[judge_id], encoding="utf-8") as fh:
                    judges[judge_id] = parse_qrels(fh)
        except (QrelsParseError, QrelsGradeError, OSError, UnicodeDecodeError) as exc:
            raise PipelineError(f"ingest failed: {exc}") from exc
        if human.duplicate_keys:
            warnings["duplicate_judgments"]["human"] = human.duplicate_keys
        for judge_id, parsed in judges.items():
            if parsed.duplicate_keys:
                warnings["duplicate_judgments"][judge_id] = parsed.duplicate_keys
        try:
            matrix = align_judgments(
                human.judgments,
                {j: p.judgments for j, p in judges.items()},
                threshold=config.binarize_threshold,
            )
        except AlignmentError as exc:
            raise PipelineError(f"alignment failed: {exc}") from exc
        warnings["dropped_unaligned_pairs"] = matrix.dropped_count

    with stage("embeddings"):
        try:
            embeddings = _load_embeddings(config)
        except (QdvError, OSError, UnicodeDecodeError, ValueError) as exc:
            raise PipelineError(f"embedding load failed: {exc}") from exc
        missing = missing_keys(embeddings, matrix.pairs)
        coverage = 1.0 - len(missing) / matrix.n_pairs
        if coverage < config.min_coverage:
            raise PipelineError(
                f"embedding coverage {coverage:.4f} below min_coverage {config.min_coverage}"
                f" ({len(missing)} of {matrix.n_pairs} pairs missing)"
            )
        warnings["missing_embeddings"] = len(missing)
        if missing:
            gone = set(missing)
            keep = [i for i, key in enumerate(matrix.pairs) if key not in gone]
            matrix = JudgmentMatrix(
                pairs=tuple(matrix.pairs[i] for i in keep),
                human=matrix.human[keep],
                judges={j: v[keep] for j, v in matrix.judges.items()},
                dropped_count=matrix.dropped_count,
            )
        points = embeddings.vectors_for(matrix.pairs)

    with stage("cluster"):
        clusters = cluster_points(points, config.hdbscan_params())

    with stage("metrics"):
        stats = corpus_stats(matrix)
        diagnostics, undefined_kappa = cluster_diagnostics_table(matrix, clusters)
        warnings["undefined_kappa"] = undefined_kappa
        purity = purity_summary_table(matrix, clusters, config.purity_coverage)

    with stage("variation"):
        report = analyze_variation(matrix, clusters.labels, config.heuristics())

    with stage("bland_altman"):
        named_points = {}
        named_results = {}
        for judge_id in matrix.judge_ids:
            pts, res = ba_label_rates(matrix, clusters.labels, judge_id, config.ba_min_pairs)
            named_points[f"label_rates_{judge_id}"] = pts
            named_results[f"label_rates_{judge_id}"] = res
        pts, res = ba_condition_contrast(matrix, clusters.labels, config.heuristics())
        named_points["condition_contrast"] = pts
        named_results["condition_contrast"] = res
        ba_points_table, ba_summary_table = ba_tables(named_points, named_results)

    with stage("render"):
        tables: list[tuple[str, Table]] = [
            ("corpus_stats", corpus_stats_table(stats)),
            ("cluster_assignments", cluster_assignment_table(matrix, clusters)),
            ("cluster_diagnostics", diagnostics),
            ("purity_summary", purity),
            ("variation", variation_table(report)),
            ("ranking", ranking_table(report)),
            ("ba_points", ba_points_table),
            ("ba_summary", ba_summary_table),
        ]
        if config.emit_plots:
            for judge_id in matrix.judge_ids:
                tables.append(
                    (f"fig_cluster_metrics_{judge_id}", fig_cluster_metrics_table(matrix, clusters, judge_id))
                )
            tables.append(("fig_delta", fig_delta_table(report)))
            tables.append(("fig_top_queries", fig_top_queries_table(report)))

        outputs: dict[str, bytes] = {}
        buf = io.StringIO()
        matrix_to_tsv(matrix, buf)
        outputs["judgments.tsv"] = buf.getvalue().encode("utf-8")
        for name, table in tables:
            outputs[f"{name}.tsv"] = render_tsv(table).encode("utf-8")
            if config.emit_json:
                outputs[f"{name}.json"] = table_to_json(table).encode("utf-8")

    inputs = {"human_qrels": _digest_file(config.human_qrels)}
    for judge_id in sorted(config.judge_qrels):
        inputs[f"judge_qrels:{judge_id}"] = _digest_file(config.judge_qrels[judge_id])
    inputs["embeddings"] = _digest_file(config.embeddings)

    manifest = {
        "version": __version__,
        "config": config.to_dict(),
        "inputs": inputs,
        "alignment": {
            "n_pairs": matrix.n_pairs,
            "n_queries": len(matrix.query_ids()),
            "n_judges": len(matrix.judge_ids),
            "embedding_coverage": coverage,
        },
        "clustering": {
            "n_clusters": clusters.n_clusters,
            "noise_count": clusters.noise_count,
            "cluster_sizes": list(clusters.cluster_sizes),
        },
        "warnings": warnings,
        "outputs": {
            name: {"sha256": _sha256(data), "bytes": len(data)}
            for name, data in sorted(outputs.items())
        },
        "stages": timings,
    }

    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_bytes = (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8")
    (out_dir / MANIFEST_NAME).write_bytes(manifest_bytes)
    for name in sorted(outputs):
        (out_dir / name).write_bytes(outputs[name])

    return RunOutcome(out_dir=out_dir, manifest=manifest, matrix=matrix, clusters=clusters, report=report)


def verify_manifest(out_dir: Path | str, check_inputs: bool = False) -> list[str]:
    """Compare files on disk against the manifest's digests.

    Returns a list of problems; an empty list means every recorded output
    (and, optionally, every input) is present and byte-identical.
    """
    out_dir = Path(out_dir)
    manifest_path = out_dir / MANIFEST_NAME
    if not manifest_path.is_file():
        return [f"missing {MANIFEST_NAME} in {out_dir}"]
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    problems = []
    for name, meta in sorted(manifest.get("outputs", {}).items()):
        path = out_dir / name
        if not path.is_file():
            problems.append(f"missing output {name}")
            continue
        raw = path.read_bytes()
        if _sha256(raw) != meta["sha256"]:
            problems.append(f"digest mismatch for {name}")
    if check_inputs:
        for role, meta in sorted(manifest.get("inputs", {}).items()):
            path = Path(meta["path"])
            if not path.is_file():
                problems.append(f"missing input {role}: {meta['path']}")
                continue
            if _sha256(path.read_bytes()) != meta["sha256"]:
                problems.append(f"digest mismatch for input {role}")
    return problems
