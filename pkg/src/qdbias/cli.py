"""Command line entry points.

Exit codes: 0 on success, 1 for data/pipeline failures, 2 for configuration
or usage problems.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .pipeline import ConfigError, PipelineError, RunConfig, run_pipeline, validate_config, verify_manifest
from .synth import ScenarioSpec, generate, planted_bias_scenario, write_corpus

__all__ = ["entrypoint", "main"]


def _parse_override(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise ConfigError([f"override {text!r} is not KEY=VALUE"])
    key, raw = text.split("=", 1)
    try:
        value: object = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdbias",
        description="Cluster-level agreement and bias diagnostics for LLM relevance judgments.",
    )
    parser.add_argument("--version", action="version", version=f"qdbias {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="run the full analysis pipeline")
    analyze.add_argument("--config", required=True, help="JSON run configuration")
    analyze.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key (VALUE parsed as JSON when possible)",
    )
    analyze.add_argument("--out", help="override the output directory")

    validate = sub.add_parser("validate", help="check a configuration without running")
    validate.add_argument("--config", required=True)

    verify = sub.add_parser("verify", help="check a report tree against its manifest")
    verify.add_argument("out_dir")
    verify.add_argument("--inputs", action="store_true", help="also verify input digests")

    synth = sub.add_parser("synth", help="generate a synthetic corpus with planted bias")
    synth.add_argument("--scenario", default="planted", help='"planted" or a scenario JSON file')
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True, help="directory for the generated corpus")
    return parser


def _load_config(args: argparse.Namespace) -> RunConfig:
    config = RunConfig.from_file(args.config)
    overrides = dict(_parse_override(t) for t in args.overrides)
    if args.out:
        overrides["out_dir"] = args.out
    if overrides:
        config = config.with_overrides(overrides)
    return config


def _cmd_analyze(args: argparse.Namespace) -> int:
    config = _load_config(args)
    outcome = run_pipeline(config)
    m = outcome.manifest
    print(f"pairs: {m['alignment']['n_pairs']}  queries: {m['alignment']['n_queries']}")
    print(f"clusters: {m['clustering']['n_clusters']}  noise: {m['clustering']['noise_count']}")
    if outcome.report.queries:
        top = outcome.report.queries[0]
        print(f"top query: {top.query_id}  mean_bss: {top.mean_bss:.4f}  bias_prone: {top.bias_prone}")
    print(f"reports: {outcome.out_dir}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    config = RunConfig.from_file(args.config)
    errors = validate_config(config)
    if errors:
        for err in errors:
            print(f"error: {err}", file=sys.stderr)
        return 2
    print("config ok")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    problems = verify_manifest(args.out_dir, check_inputs=args.inputs)
    if problems:
        for p in problems:
            print(f"error: {p}", file=sys.stderr)
        return 1
    print("manifest ok")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    if args.scenario == "planted":
        spec = planted_bias_scenario()
    else:
        path = Path(args.scenario)
        if not path.is_file():
            raise ConfigError([f"scenario file does not exist: {path}"])
        spec = ScenarioSpec.from_json(path.read_text(encoding="utf-8"))
    result = generate(spec, seed=args.seed)
    out = Path(args.out)
    paths = write_corpus(result, out)
    (out / "scenario.json").write_text(spec.to_json() + "\n", encoding="utf-8")
    run_config = {
        "human_qrels": paths["human"].name,
        "judge_qrels": {
            j.judge_id: paths[j.judge_id].name for j in spec.judges
        },
        "embeddings": paths["embeddings"].name,
        "out_dir": "reports",
    }
    (out / "config.json").write_text(
        json.dumps(run_config, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote corpus for seed {args.seed} under {out}")
    print(f"next: qdbias analyze --config {out / 'config.json'}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "analyze": _cmd_analyze,
        "validate": _cmd_validate,
        "verify": _cmd_verify,
        "synth": _cmd_synth,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return 2
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())
