"""Command-line interface.

Verbs: train, evaluate, sweep, sensitivity, coverage, protocol-serve,
report.  Config paths may be real files or "default:florida" /
"default:zaragoza" for the bundled configs.  Exit codes: 0 success,
1 runtime failure, 2 usage, 3 config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import config as config_mod
from . import evaluation, ppo, protocol, trainer
from .errors import ConfigurationError
from .surrogate import FixedManagementPolicy, ObservedEnv, scenario_by_name

OUTPUT_ROOT_ENV = "CROPRL_OUTPUT_ROOT"


def _load_config(spec: str) -> config_mod.RunConfig:
    if spec.startswith("default:"):
        return config_mod.default_config(spec.split(":", 1)[1])
    return config_mod.load_config(spec)


def _out_dir(args, verb: str) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "runs"))
    return root / f"{time.strftime('%Y%m%d-%H%M%S')}-{verb}"


def _parse_seeds(raw: str | None, cfg: config_mod.RunConfig) -> list[int]:
    if raw:
        return [int(s) for s in raw.replace(",", " ").split()]
    return list(cfg.seeds)


def _load_eval_policy(path: str):
    if path == "fixed-management":
        return FixedManagementPolicy()
    return ppo.load_policy(path)


def _scenario(cfg: config_mod.RunConfig):
    return scenario_by_name(cfg.scenario, **cfg.scenario_overrides)


def cmd_train(args) -> int:
    cfg = _load_config(args.config)
    seeds = _parse_seeds(args.seeds, cfg)
    out = _out_dir(args, "train")
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.cfg").write_text(config_mod.dump_config(cfg))

    def one(seed: int):
        run_cfg = cfg.with_seed(seed)
        return trainer.train(run_cfg, out / str(seed))

    if args.workers > 1 and len(seeds) > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            futures = {pool.submit(_train_worker, config_mod.dump_config(cfg), seed,
                                   str(out / str(seed))): seed for seed in seeds}
            for fut in futures:
                seed = futures[fut]
                artifacts = fut.result()
                print(f"seed {seed}: best validation "
                      f"{max(s for _, s in artifacts['validation_history']):.2f} "
                      f"-> {artifacts['out_dir']}")
    else:
        for seed in seeds:
            artifacts = one(seed)
            best = max(s for _, s in artifacts.validation_history)
            print(f"seed {seed}: best validation {best:.2f} -> {artifacts.out_dir}")
    print(f"artifacts under {out}")
    return 0


def _train_worker(config_text: str, seed: int, out_dir: str) -> dict:
    cfg = config_mod.parse_config(config_text).with_seed(seed)
    artifacts = trainer.train(cfg, out_dir)
    return {"validation_history": artifacts.validation_history,
            "out_dir": str(artifacts.out_dir)}


def cmd_evaluate(args) -> int:
    cfg = _load_config(args.config)
    policy = _load_eval_policy(args.policy)
    seeds = _parse_seeds(args.seeds, cfg)
    record = evaluation.evaluate(policy, _scenario(cfg), args.condition,
                                 args.episodes, seeds, cfg.weights)
    print(f"condition={record.condition} score={record.score_mean:.2f}"
          f"+-{record.score_std:.2f} yield={record.yield_mean:.1f}"
          f" n={record.n_samples}")
    if args.json:
        evaluation.write_json(args.json, {
            "condition": record.condition,
            "score_mean": record.score_mean, "score_std": record.score_std,
            "yield_mean": record.yield_mean, "yield_std": record.yield_std,
            "wue_mean": record.wue_mean, "nue_mean": record.nue_mean,
            "n_samples": record.n_samples,
        })
    if args.trace:
        from .surrogate import run_traced_episode
        env = ObservedEnv(_scenario(cfg), cfg.weights)
        run_traced_episode(env, policy, seeds[0], args.trace)
        print(f"trace written to {args.trace}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    seeds = _parse_seeds(args.seeds, cfg)
    policy_a = _load_eval_policy(args.policy)
    policy_b = _load_eval_policy(args.policy_b) if args.policy_b else policy_a
    labels = (args.label or "policy", args.label_b or ("baseline" if args.policy_b else "policy"))
    report = evaluation.robustness_report(policy_a, policy_b, _scenario(cfg), seeds,
                                          args.episodes, cfg.weights, labels)
    print(report.text())
    if args.json:
        evaluation.write_json(args.json, report.to_json())
    return 0


def cmd_sensitivity(args) -> int:
    cfg = _load_config(args.config)
    seeds = _parse_seeds(args.seeds, cfg)
    policy = _load_eval_policy(args.policy)
    table = evaluation.sensitivity_analysis(policy, _scenario(cfg), seeds,
                                            args.episodes, cfg.weights)
    print(table.text())
    if args.json:
        evaluation.write_json(args.json, {
            "clean_score": table.clean.score_mean,
            "rows": [{"condition": r.condition, "magnitude": r.magnitude,
                      "score_reduction_pct": r.score_reduction_pct,
                      "yield_reduction_pct": r.yield_reduction_pct} for r in table.rows],
        })
    return 0


def cmd_coverage(args) -> int:
    grids = {}
    for spec in args.runs:
        if "=" in spec:
            label, paths = spec.split("=", 1)
            run_dirs = paths.split(":")
        else:
            label, run_dirs = spec, [spec]
        grids[label] = [trainer.load_coverage(Path(d) / "coverage.json") for d in run_dirs]
    result = evaluation.coverage_comparison(grids)
    for label, cov in result.items():
        print(f"{label}: union coverage {100.0 * cov:.2f}%")
    if args.json:
        evaluation.write_json(args.json, result)
    return 0


def cmd_protocol_serve(args) -> int:
    cfg = _load_config(args.config)
    env = ObservedEnv(_scenario(cfg), cfg.weights)
    protocol.serve_environment(env, sys.stdin.buffer, sys.stdout.buffer)
    return 0


def cmd_report(args) -> int:
    out_lines = []
    for run_dir in args.runs:
        run = Path(run_dir)
        manifest_path = run / "ensemble.json"
        if not manifest_path.exists():
            raise ConfigurationError(f"{run} has no ensemble.json")
        manifest = json.loads(manifest_path.read_text())
        out_lines.append(f"run {run} (seed {manifest['seed']},"
                         f" config {manifest['config_sha256'][:12]})")
        members = manifest["members"]
        for m in members:
            out_lines.append(f"  episode {m['episode']:>5}: validation "
                             f"{m['validation_score']:.2f}")
        mean = sum(m["validation_score"] for m in members) / len(members)
        out_lines.append(f"  ensemble mean validation: {mean:.2f}")
        if manifest.get("stopped_at"):
            out_lines.append(f"  early-stopped at episode {manifest['stopped_at']}")
    text = "\n".join(out_lines)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="croprl",
        description="Train and evaluate robust crop-management policies.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("train", help="run training for one or more seeds")
    p.add_argument("--config", required=True, help="config file or default:<scenario>")
    p.add_argument("--out", help="output directory (default: run-stamped)")
    p.add_argument("--seeds", help="comma-separated seed override")
    p.add_argument("--workers", type=int, default=1, help="parallel seed workers")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a policy under one condition")
    p.add_argument("--config", required=True)
    p.add_argument("--policy", required=True,
                   help="checkpoint path or 'fixed-management'")
    p.add_argument("--condition", default="clean",
                   choices=["clean", "temp", "rain", "moisture", "solar", "combined"])
    p.add_argument("--episodes", type=int, default=evaluation.EVAL_EPISODES_DEFAULT)
    p.add_argument("--seeds")
    p.add_argument("--json", help="write a machine-readable result")
    p.add_argument("--trace", help="write a per-day CSV trace of the first episode")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="robustness sweep over noise conditions")
    p.add_argument("--config", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--policy-b", dest="policy_b", help="optional comparison policy")
    p.add_argument("--label", help="label for --policy")
    p.add_argument("--label-b", dest="label_b", help="label for --policy-b")
    p.add_argument("--episodes", type=int, default=evaluation.EVAL_EPISODES_DEFAULT)
    p.add_argument("--seeds")
    p.add_argument("--json")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("sensitivity", help="per-channel noise sensitivity table")
    p.add_argument("--config", required=True)
    p.add_argument("--policy", required=True)
    p.add_argument("--episodes", type=int, default=evaluation.EVAL_EPISODES_DEFAULT)
    p.add_argument("--seeds")
    p.add_argument("--json")
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("coverage", help="union exploration coverage across runs")
    p.add_argument("runs", nargs="+",
                   help="run dirs, or label=dir1:dir2 groups")
    p.add_argument("--json")
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("protocol-serve",
                       help="serve the surrogate environment over stdio (protocol v1)")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_protocol_serve)

    p = sub.add_parser("report", help="render tables from stored run artifacts")
    p.add_argument("runs", nargs="+")
    p.add_argument("--out", help="also write the report to a file")
    p.set_defaults(func=cmd_report)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:
        print(f"error: runtime: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
