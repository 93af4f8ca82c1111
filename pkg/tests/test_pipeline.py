"""Pipeline runs: config validation, outputs, failure modes, CLI exit codes."""

import json
from pathlib import Path

import pytest

from qdbias.cli import main
from qdbias.pipeline import (
    ConfigError,
    MANIFEST_NAME,
    PipelineError,
    RunConfig,
    run_pipeline,
    validate_config,
    verify_manifest,
)
from qdbias.synth import ScenarioCell, JudgeSpec, ScenarioSpec, generate, write_corpus

EXPECTED_TSVS = {
    "corpus_stats.tsv",
    "judgments.tsv",
    "cluster_assignments.tsv",
    "cluster_diagnostics.tsv",
    "purity_summary.tsv",
    "variation.tsv",
    "ranking.tsv",
    "ba_points.tsv",
    "ba_summary.tsv",
}


def tiny_scenario():
    cells = []
    for qi in range(6):
        cells.append(ScenarioCell(f"q{qi}", qi % 3, 20))
        cells.append(ScenarioCell(f"q{qi}", (qi + 1) % 3, 20))
    return ScenarioSpec(
        dimension=8,
        sigma=0.05,
        separation=1.0,
        human_relevant_rate=0.5,
        cells=tuple(cells),
        judges=(JudgeSpec("j1", 0.05, 0.05), JudgeSpec("j2", 0.3, 0.3)),
        noise_points=10,
    )


@pytest.fixture()
def corpus_dir(tmp_path):
    result = generate(tiny_scenario(), seed=20)
    write_corpus(result, tmp_path / "corpus")
    return tmp_path / "corpus"


def make_config(corpus_dir, out_dir, **overrides):
    base = dict(
        human_qrels=str(corpus_dir / "human.qrels"),
        judge_qrels={"j1": str(corpus_dir / "j1.qrels"), "j2": str(corpus_dir / "j2.qrels")},
        embeddings=str(corpus_dir / "embeddings.qdv"),
        out_dir=str(out_dir),
        min_cluster_size=10,
        min_samples=3,
    )
    base.update(overrides)
    return RunConfig(**base)


def test_run_writes_expected_tree_and_manifest(corpus_dir, tmp_path):
    config = make_config(corpus_dir, tmp_path / "reports")
    outcome = run_pipeline(config)
    names = {p.name for p in (tmp_path / "reports").iterdir()}
    assert EXPECTED_TSVS <= names
    assert MANIFEST_NAME in names
    assert "fig_delta.tsv" in names and "fig_top_queries.tsv" in names
    assert {f"fig_cluster_metrics_{j}.tsv" for j in ("j1", "j2")} <= names
    manifest = outcome.manifest
    assert manifest["alignment"]["n_pairs"] == 250
    assert set(manifest["outputs"]) == names - {MANIFEST_NAME}
    assert [s["name"] for s in manifest["stages"]] == [
        "ingest", "embeddings", "cluster", "metrics", "variation", "bland_altman", "render",
    ]
    assert verify_manifest(tmp_path / "reports") == []


def test_rerun_is_byte_identical_except_manifest(corpus_dir, tmp_path):
    config_a = make_config(corpus_dir, tmp_path / "a")
    config_b = make_config(corpus_dir, tmp_path / "b")
    run_pipeline(config_a)
    run_pipeline(config_b)
    names = sorted(p.name for p in (tmp_path / "a").iterdir() if p.name != MANIFEST_NAME)
    assert names
    for name in names:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    # manifests agree on everything deterministic
    ma = json.loads((tmp_path / "a" / MANIFEST_NAME).read_text())
    mb = json.loads((tmp_path / "b" / MANIFEST_NAME).read_text())
    for key in ("version", "inputs", "alignment", "clustering", "warnings", "outputs"):
        assert ma[key] == mb[key]


def test_emit_json_mirrors_tables(corpus_dir, tmp_path):
    config = make_config(corpus_dir, tmp_path / "reports", emit_json=True, emit_plots=False)
    run_pipeline(config)
    names = {p.name for p in (tmp_path / "reports").iterdir()}
    assert "variation.json" in names
    assert not any(n.startswith("fig_") for n in names)
    payload = json.loads((tmp_path / "reports" / "variation.json").read_text())
    assert payload["columns"][0] == "query_id"


def test_validate_config_collects_every_error(tmp_path):
    config = RunConfig(
        human_qrels=str(tmp_path / "missing.qrels"),
        judge_qrels={},
        embeddings=str(tmp_path / "missing.qdv"),
        out_dir="",
        binarize_threshold=9,
        min_coverage=0.0,
        metric="cosine",
        min_cluster_size=1,
        min_samples=0,
        min_cell_size=1,
        tau_abs=-1.0,
        extreme_high=0.1,
        extreme_low=0.5,
        missing_bss_policy="drop",
        ba_min_pairs=0,
        purity_coverage=2.0,
    )
    errors = validate_config(config)
    assert len(errors) >= 13
    with pytest.raises(ConfigError):
        run_pipeline(config)


def test_from_dict_rejects_unknown_and_missing_keys():
    with pytest.raises(ConfigError) as exc:
        RunConfig.from_dict({"human_qrels": "x", "judge_qrels": {}, "embeddings": "y", "out_dir": "z", "bogus": 1})
    assert any("bogus" in e for e in exc.value.errors)
    with pytest.raises(ConfigError) as exc2:
        RunConfig.from_dict({"human_qrels": "x"})
    assert len(exc2.value.errors) == 3


def test_config_file_resolves_relative_paths(corpus_dir, tmp_path):
    config_path = corpus_dir / "run.json"
    config_path.write_text(
        json.dumps(
            {
                "human_qrels": "human.qrels",
                "judge_qrels": {"j1": "j1.qrels", "j2": "j2.qrels"},
                "embeddings": "embeddings.qdv",
                "out_dir": str(tmp_path / "reports"),
                "min_cluster_size": 10,
                "min_samples": 3,
            }
        )
    )
    config = RunConfig.from_file(config_path)
    assert validate_config(config) == []
    assert Path(config.human_qrels).is_absolute()


def test_coverage_floor_aborts_without_partial_outputs(corpus_dir, tmp_path):
    # strip half the embedding records
    from qdbias.embeddings import read_qdv, write_qdv, EmbeddingSet
    import numpy as np

    with (corpus_dir / "embeddings.qdv").open("rb") as fh:
        emb = read_qdv(fh)
    half = EmbeddingSet.from_records(
        emb.dimension,
        [(q, d, np.asarray(emb.vector((q, d)))) for q, d in emb.keys[: len(emb.keys) // 2]],
    )
    with (corpus_dir / "embeddings.qdv").open("wb") as fh:
        write_qdv(half, fh)
    out_dir = tmp_path / "reports"
    config = make_config(corpus_dir, out_dir)
    with pytest.raises(PipelineError) as exc:
        run_pipeline(config)
    assert "coverage" in str(exc.value)
    assert not out_dir.exists()


def test_small_missing_fraction_is_dropped_and_counted(corpus_dir, tmp_path):
    from qdbias.embeddings import read_qdv, write_qdv, EmbeddingSet
    import numpy as np

    with (corpus_dir / "embeddings.qdv").open("rb") as fh:
        emb = read_qdv(fh)
    trimmed = EmbeddingSet.from_records(
        emb.dimension,
        [(q, d, np.asarray(emb.vector((q, d)))) for q, d in emb.keys[:-2]],
    )
    with (corpus_dir / "embeddings.qdv").open("wb") as fh:
        write_qdv(trimmed, fh)
    config = make_config(corpus_dir, tmp_path / "reports", min_coverage=0.9)
    outcome = run_pipeline(config)
    assert outcome.manifest["warnings"]["missing_embeddings"] == 2
    assert outcome.manifest["alignment"]["n_pairs"] == 248


def test_corrupt_qrels_raises_pipeline_error(corpus_dir, tmp_path):
    (corpus_dir / "j1.qrels").write_text("garbage line\n")
    config = make_config(corpus_dir, tmp_path / "reports")
    with pytest.raises(PipelineError):
        run_pipeline(config)


def test_cli_round_trip_and_exit_codes(corpus_dir, tmp_path, capsys):
    config_path = tmp_path / "run.json"
    config_path.write_text(
        json.dumps(
            {
                "human_qrels": str(corpus_dir / "human.qrels"),
                "judge_qrels": {"j1": str(corpus_dir / "j1.qrels"), "j2": str(corpus_dir / "j2.qrels")},
                "embeddings": str(corpus_dir / "embeddings.qdv"),
                "out_dir": str(tmp_path / "reports"),
                "min_cluster_size": 10,
                "min_samples": 3,
            }
        )
    )
    assert main(["validate", "--config", str(config_path)]) == 0
    assert main(["analyze", "--config", str(config_path)]) == 0
    out = capsys.readouterr().out
    assert "reports:" in out
    assert main(["verify", str(tmp_path / "reports")]) == 0
    # tamper with one table: verify must fail
    target = tmp_path / "reports" / "ranking.tsv"
    target.write_bytes(target.read_bytes() + b"tampered\n")
    assert main(["verify", str(tmp_path / "reports")]) == 1
    # bad config key -> exit 2
    assert main(["analyze", "--config", str(config_path), "--set", "bogus=1"]) == 2
    # broken metric value -> collected config error, exit 2
    assert main(["analyze", "--config", str(config_path), "--set", "metric=cosine"]) == 2


def test_cli_synth_generates_runnable_corpus(tmp_path, capsys):
    out = tmp_path / "demo"
    assert main(["synth", "--seed", "3", "--out", str(out)]) == 0
    assert main(["analyze", "--config", str(out / "config.json"), "--set", "min_coverage=0.99"]) == 0
    captured = capsys.readouterr().out
    assert "pairs: 640" in captured
    assert (out / "reports" / "ranking.tsv").exists()


def test_cli_override_values_parse_as_json(corpus_dir, tmp_path):
    config_path = tmp_path / "run.json"
    config_path.write_text(
        json.dumps(
            {
                "human_qrels": str(corpus_dir / "human.qrels"),
                "judge_qrels": {"j1": str(corpus_dir / "j1.qrels"), "j2": str(corpus_dir / "j2.qrels")},
                "embeddings": str(corpus_dir / "embeddings.qdv"),
                "out_dir": str(tmp_path / "r1"),
                "min_cluster_size": 10,
                "min_samples": 3,
            }
        )
    )
    assert (
        main(
            [
                "analyze",
                "--config",
                str(config_path),
                "--set",
                "emit_plots=false",
                "--out",
                str(tmp_path / "r2"),
            ]
        )
        == 0
    )
    assert not (tmp_path / "r1").exists()
    names = {p.name for p in (tmp_path / "r2").iterdir()}
    assert not any(n.startswith("fig_") for n in names)
