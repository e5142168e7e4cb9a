"""Command line entry points for environment generation, runs, and reports.

Exit codes: 0 success, 2 bad arguments (argparse), 3 configuration or
input-file problems, 4 runtime failure inside a trial (the message names
the agent, replicate, and step).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .core import ObservationLog
from .environments import (
    ClusterEnvConfig,
    generate_cluster_env,
    load_env_json,
    save_env_json,
)
from .errors import BatchSearchError, ConfigError, DatasetParseError, EnvironmentInvalid
from .harness import (
    aggregate,
    load_run_config,
    read_results_csv,
    run_benchmark,
    write_summary_csv,
)
from .surrogate import SurrogateConfig, export_embeddings, fit_surrogate


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="batchsearch",
        description="Batch active-search benchmark over sequence pools.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser(
        "generate-env", help="sample a clustered synthetic environment to JSON"
    )
    gen.add_argument("--clusters", type=int, required=True)
    gen.add_argument("--per-cluster", type=int, required=True)
    gen.add_argument("--sigma", type=float, default=0.1)
    gen.add_argument("--c", type=float, default=0.2, help="concentration exponent")
    gen.add_argument("--length", type=int, default=100)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--batch-size", type=int, default=100)
    gen.add_argument("--out", type=Path, required=True)
    gen.set_defaults(func=_cmd_generate_env)

    run = sub.add_parser("run", help="run a benchmark described by a config file")
    run.add_argument("--config", type=Path, required=True, help="JSON or TOML run spec")
    run.add_argument("--out", type=Path, required=True, help="output directory")
    run.add_argument("--workers", type=int, default=None, help="override config workers")
    run.add_argument("--progress", action="store_true", help="per-trial progress lines")
    run.set_defaults(func=_cmd_run)

    rep = sub.add_parser("report", help="aggregate a results.csv into a summary table")
    rep.add_argument("--results", type=Path, required=True)
    rep.add_argument("--out", type=Path, default=None, help="also write summary CSV here")
    rep.add_argument("--confidence", type=float, default=0.9)
    rep.set_defaults(func=_cmd_report)

    exp = sub.add_parser(
        "export-embedding",
        help="fit a surrogate on part of an environment and dump embeddings",
    )
    exp.add_argument("--env", type=Path, required=True, help="environment JSON")
    exp.add_argument("--out", type=Path, required=True, help="embedding CSV")
    exp.add_argument("--train-fraction", type=float, default=0.5)
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--epochs", type=int, default=None)
    exp.add_argument("--learning-rate", type=float, default=None)
    exp.add_argument("--embedding-dim", type=int, default=None)
    exp.set_defaults(func=_cmd_export_embedding)
    return parser


def _cmd_generate_env(args: argparse.Namespace) -> int:
    cfg = ClusterEnvConfig(
        n_clusters=args.clusters,
        per_cluster=args.per_cluster,
        sigma=args.sigma,
        concentration=args.c,
        length=args.length,
        seed=args.seed,
        batch_size=args.batch_size,
    )
    env, truth = generate_cluster_env(cfg)
    save_env_json(args.out, env, truth, cfg)
    print(f"wrote {env.size} sequences to {args.out}")
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    spec = load_run_config(args.config)
    results_path, summary_path = run_benchmark(
        spec, args.out, progress=args.progress, workers=args.workers
    )
    print(f"results: {results_path}")
    print(f"summary: {summary_path}")
    if spec.replicates >= 2:
        _print_table(aggregate(read_results_csv(results_path)))
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    records = read_results_csv(args.results)
    if not records:
        raise ConfigError(f"no rows in {args.results}")
    rows = aggregate(records, confidence=args.confidence)
    _print_table(rows)
    if args.out is not None:
        write_summary_csv(rows, args.out)
        print(f"summary written to {args.out}")
    return 0


def _cmd_export_embedding(args: argparse.Namespace) -> int:
    if not 0.0 < args.train_fraction <= 1.0:
        raise ConfigError("train-fraction must lie in (0, 1]")
    env, _ = load_env_json(args.env)
    overrides = {
        key: value
        for key, value in (
            ("epochs", args.epochs),
            ("learning_rate", args.learning_rate),
            ("embedding_dim", args.embedding_dim),
        )
        if value is not None
    }
    cfg = SurrogateConfig(**overrides)
    cfg.validate()
    rng = np.random.default_rng(args.seed)
    n_train = max(1, int(args.train_fraction * env.size))
    train_idx = np.sort(rng.choice(env.size, size=n_train, replace=False))
    log = ObservationLog(train_idx, env.reveal(train_idx), step=0)
    model = fit_surrogate(log, env.pool, cfg, rng)
    export_embeddings(args.out, model, env.pool, env.all_labels())
    print(f"wrote {env.size} embeddings to {args.out}")
    return 0


def _print_table(rows) -> None:
    header = f"{'agent':<12} {'config':<18} {'n':>4} {'mean_final_regret':>18} {'ci_halfwidth':>13} {'wallclock_s':>12}"
    print(header)
    print("-" * len(header))
    for row in rows:
        print(
            f"{row.agent_name:<12} {row.agent_config:<18} {row.n_trials:>4} "
            f"{row.mean_final_regret:>18.6f} {row.ci_halfwidth:>13.6f} "
            f"{row.mean_step_wallclock:>12.4f}"
        )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DatasetParseError, EnvironmentInvalid) as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except (FileNotFoundError, IsADirectoryError, PermissionError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except BatchSearchError as err:
        context = getattr(err, "trial_context", None)
        where = (
            f" (agent={context['agent']}, replicate={context['replicate']}, step={context['step']})"
            if context
            else ""
        )
        print(f"error: {err}{where}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
