"""Command-line front end for the whole pipeline.

Subcommands mirror the pipeline stages: generate, features, analyze, train,
evaluate, sweep, ablate, predict, serve. Report-producing commands write
JSON plus an aligned plain-text table, and render PNG figures alongside
unless ``--no-figures`` is given.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import baselines, evaluation, figures, model as model_mod, stats
from .features import (
    assemble_matrix,
    read_encoders,
    read_matrix_csv,
    write_encoders,
    write_matrix_csv,
)
from .logs import (
    LogParseError,
    SyntheticConfig,
    generate_synthetic,
    read_logs,
    synthetic_manifest,
    write_logs,
)
from .service import PredictionService, run_server


def _manifest_path(output: Path) -> Path:
    return output.with_suffix(".manifest.json")


def _encoders_path(matrix_path: Path) -> Path:
    return matrix_path.with_suffix(".encoders.json")


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _load_matrix(args) -> "evaluation.FeatureMatrix":
    matrix_path = Path(args.input)
    encoders_path = Path(args.encoders) if getattr(args, "encoders", None) else _encoders_path(matrix_path)
    encoders = read_encoders(encoders_path) if encoders_path.exists() else None
    return read_matrix_csv(matrix_path, encoders=encoders)


def _split_sets(matrix, train_fraction: float, seed: int):
    train_m, test_m = evaluation.time_split(matrix, train_fraction)
    balanced = evaluation.balance_test_set(test_m, seed=seed)
    return train_m, test_m, balanced


def cmd_generate(args) -> int:
    if args.config:
        config = SyntheticConfig.from_dict(json.loads(Path(args.config).read_text(encoding="utf-8")))
    else:
        config = SyntheticConfig()
    overrides: dict = {}
    if args.events is not None:
        overrides["event_count"] = args.events
    if args.developers is not None:
        overrides["developer_count"] = args.developers
    if args.projects is not None:
        overrides["project_count"] = args.projects
    if args.days is not None:
        overrides["duration_days"] = args.days
    if args.base_accept_rate is not None:
        overrides["base_accept_rate"] = args.base_accept_rate
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.no_texts:
        overrides["include_texts"] = False
    if overrides:
        config = SyntheticConfig.from_dict({**config.as_dict(), **overrides})
    logs = generate_synthetic(config)
    output = Path(args.output)
    write_logs(logs, output)
    _write_json(_manifest_path(output), synthetic_manifest(config, logs))
    print(f"wrote {len(logs)} events to {output} (manifest: {_manifest_path(output)})")
    return 0


def cmd_features(args) -> int:
    logs = read_logs(args.input)
    matrix = assemble_matrix(logs, window_days=args.window_days,
                             train_fraction=args.train_fraction)
    output = Path(args.output)
    write_matrix_csv(matrix, output)
    write_encoders(matrix.encoders, _encoders_path(output))
    print(f"wrote {len(matrix)} x {matrix.n_features} matrix to {output} "
          f"(encoders: {_encoders_path(output)})")
    return 0


def cmd_analyze(args) -> int:
    matrix = _load_matrix(args)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)

    entries = stats.significance_pipeline(matrix)
    significant = [e.feature for e in entries if e.significant]
    report = stats.correlation_prune(matrix, significant)

    _write_json(out_dir / "significance.json", [e.to_dict() for e in entries])
    (out_dir / "significance.txt").write_text(stats.render_significance_table(entries), encoding="utf-8")
    _write_json(out_dir / "correlation.json", report.to_dict())
    (out_dir / "correlation.txt").write_text(stats.render_correlation_report(report), encoding="utf-8")
    _write_json(out_dir / "retained.json", list(report.retained))

    if not args.no_figures:
        figures.significance_figure(entries, out_dir / "significance.png")
        if len(significant) >= 2:
            rho = stats.spearman_matrix(matrix, significant)
            figures.correlation_figure(significant, rho, report, out_dir / "correlation.png")
    print(f"{len(significant)} significant features, {len(report.retained)} retained; "
          f"reports in {out_dir}")
    return 0


def _train_config(args) -> model_mod.TrainConfig:
    if args.config:
        config = model_mod.TrainConfig.from_dict(
            json.loads(Path(args.config).read_text(encoding="utf-8")))
    else:
        config = model_mod.TrainConfig()
    updates: dict = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if getattr(args, "threshold", None) is not None:
        updates["threshold"] = args.threshold
    if updates:
        config = model_mod.TrainConfig.from_dict({**config.as_dict(), **updates})
    return config


def _feature_subset(args, matrix):
    if getattr(args, "features", None):
        names = json.loads(Path(args.features).read_text(encoding="utf-8"))
        return matrix.select(names)
    return matrix


def cmd_train(args) -> int:
    matrix = _feature_subset(args, _load_matrix(args))
    config = _train_config(args)
    train_m, _ = evaluation.time_split(matrix, args.train_fraction)
    trained = model_mod.train(train_m, config)
    model_mod.write_model(trained, args.output)
    history = trained.history
    print(f"trained on {len(train_m)} rows, {train_m.n_features} features; "
          f"loss {history.initial_loss:.4f} -> {history.final_loss:.4f}; model: {args.output}")
    return 0


def cmd_evaluate(args) -> int:
    matrix = _load_matrix(args)
    trained = model_mod.read_model(args.model)
    train_m, test_m, balanced = _split_sets(matrix, args.train_fraction, args.seed)

    sets = {"imbalanced": test_m, "balanced": balanced}
    reports: dict[str, dict[str, evaluation.EvalReport]] = {name: {} for name in sets}
    for set_name, subset in sets.items():
        probs = trained.predict_proba_matrix(subset.select(trained.feature_names))
        reports[set_name]["model"] = evaluation.compute_metrics(
            probs, subset.labels, threshold=trained.threshold)

    breaker = baselines.circuit_breaker_train(train_m, trained.config)
    for set_name, subset in sets.items():
        probs = breaker.predict_proba_matrix(subset.select(breaker.feature_names))
        reports[set_name]["circuit_breaker"] = evaluation.compute_metrics(
            probs, subset.labels, threshold=breaker.threshold)

    excluded = None
    if args.llm_fixtures:
        transport = baselines.RecordedTransport.from_file(args.llm_fixtures)
        for set_name, subset in sets.items():
            report, excluded = baselines.llm_evaluate(
                transport, subset.select(trained.feature_names))
            reports[set_name]["direct_llm"] = report

    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        set_name: {method: r.to_dict() for method, r in methods.items()}
        for set_name, methods in reports.items()
    }
    if excluded is not None:
        payload["llm_excluded_responses"] = excluded
    _write_json(out_dir / "evaluation.json", payload)
    (out_dir / "evaluation.txt").write_text(evaluation.render_method_table(reports), encoding="utf-8")
    if not args.no_figures:
        figures.method_figure(reports, out_dir / "methods.png")
    model_acc = reports["imbalanced"]["model"].accuracy
    print(f"imbalanced accuracy {model_acc:.3f}, "
          f"balanced accuracy {reports['balanced']['model'].accuracy:.3f}; reports in {out_dir}")
    return 0


def cmd_sweep(args) -> int:
    matrix = _load_matrix(args)
    trained = model_mod.read_model(args.model)
    _, test_m, balanced = _split_sets(matrix, args.train_fraction, args.seed)
    sweeps = {
        "imbalanced": evaluation.threshold_sweep(trained, test_m.select(trained.feature_names)),
        "balanced": evaluation.threshold_sweep(trained, balanced.select(trained.feature_names)),
    }
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "sweep.json", evaluation.sweep_grid(sweeps))
    (out_dir / "sweep.txt").write_text(evaluation.render_sweep_table(sweeps), encoding="utf-8")
    if not args.no_figures:
        figures.sweep_figure(sweeps, out_dir / "sweep.png")
    print(f"sweep over {len(evaluation.DEFAULT_THRESHOLDS)} thresholds; reports in {out_dir}")
    return 0


def cmd_ablate(args) -> int:
    matrix = _feature_subset(args, _load_matrix(args))
    config = _train_config(args)
    train_m, test_m, balanced = _split_sets(matrix, args.train_fraction, args.seed)

    units = []
    if args.units in ("groups", "all"):
        units += evaluation.group_units(matrix.feature_names)
    if args.units in ("features", "all"):
        units += evaluation.individual_units(matrix.feature_names)
    full_metrics, results = evaluation.ablate(
        train_m, {"imbalanced": test_m, "balanced": balanced}, config, units)

    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_json(out_dir / "ablation.json", {
        "full_model": {k: v.to_dict() for k, v in full_metrics.items()},
        "results": [r.to_dict() for r in results],
    })
    (out_dir / "ablation.txt").write_text(evaluation.render_ablation_table(results), encoding="utf-8")
    if not args.no_figures and results:
        figures.ablation_figure(results, out_dir / "ablation.png")
    print(f"{len(results)} ablation units; reports in {out_dir}")
    return 0


def cmd_predict(args) -> int:
    matrix = _load_matrix(args)
    trained = model_mod.read_model(args.model)
    subset = matrix.select(trained.feature_names)
    probs = trained.predict_proba_matrix(subset)
    output = Path(args.output)
    with open(output, "w", encoding="utf-8") as handle:
        handle.write("event_id,probability,decision\n")
        for event_id, p in zip(matrix.event_ids, probs):
            decision = "accept" if p >= trained.threshold else "reject"
            handle.write(f"{event_id},{float(p)!r},{decision}\n")
    print(f"wrote {len(matrix)} predictions to {output}")
    return 0


def cmd_serve(args) -> int:
    trained = model_mod.read_model(args.model)
    service = PredictionService(trained, window_days=args.window_days,
                                persist_path=args.persist)
    if args.history:
        service.warm(read_logs(args.history))
    print(f"serving model {trained.fingerprint} on {args.host}:{args.port}")
    run_server(service, host=args.host, port=args.port)
    return 0


def _add_common_matrix_args(parser, with_model=False):
    parser.add_argument("--input", required=True, help="feature matrix CSV")
    parser.add_argument("--encoders", help="encoders JSON (default: sibling of --input)")
    parser.add_argument("--train-fraction", type=float, default=0.8)
    parser.add_argument("--seed", type=int, default=0)
    if with_model:
        parser.add_argument("--model", required=True, help="trained model file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ghostfilter",
        description="Predict developer acceptance of AI code suggestions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic interaction-log stream")
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--events", type=int, default=None)
    p.add_argument("--developers", type=int, default=None)
    p.add_argument("--projects", type=int, default=None)
    p.add_argument("--days", type=float, default=None)
    p.add_argument("--base-accept-rate", type=float, default=None)
    p.add_argument("--config", help="JSON file with generator settings")
    p.add_argument("--no-texts", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("features", help="build the feature matrix from a log file")
    p.add_argument("--input", required=True, help="JSON-lines log file")
    p.add_argument("--output", required=True, help="matrix CSV path")
    p.add_argument("--window-days", type=float, default=7.0)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("analyze", help="significance tests and correlation pruning")
    p.add_argument("--input", required=True)
    p.add_argument("--encoders")
    p.add_argument("--output", required=True, help="report directory")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("train", help="train the acceptance model on the time-ordered train split")
    _add_common_matrix_args(p)
    p.add_argument("--output", required=True, help="model file path")
    p.add_argument("--config", help="JSON file with training settings")
    p.add_argument("--features", help="JSON list restricting the feature set")
    p.add_argument("--threshold", type=float, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate the model and baselines on the test split")
    _add_common_matrix_args(p, with_model=True)
    p.add_argument("--output", required=True, help="report directory")
    p.add_argument("--llm-fixtures", help="recorded-response JSON for the LLM baseline")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="metrics across decision thresholds")
    _add_common_matrix_args(p, with_model=True)
    p.add_argument("--output", required=True, help="report directory")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("ablate", help="retrain without feature groups or single features")
    _add_common_matrix_args(p)
    p.add_argument("--output", required=True, help="report directory")
    p.add_argument("--config", help="JSON file with training settings")
    p.add_argument("--features", help="JSON list restricting the feature set")
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--units", choices=("groups", "features", "all"), default="all")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("predict", help="batch probabilities for a feature matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--encoders")
    p.add_argument("--model", required=True)
    p.add_argument("--output", required=True, help="predictions CSV path")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("serve", help="run the live prediction endpoint")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--window-days", type=float, default=7.0)
    p.add_argument("--history", help="JSON-lines log file to preload")
    p.add_argument("--persist", help="append-only file for completed events")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, LogParseError, KeyError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
