"""Benchmark harness: seeded trials, regret accounting, CSV reporting.

A trial walks one agent through T batches on one environment.  Regret at
each step compares the top fraction of the chosen batch against the top
fraction of everything the agent could still have chosen.  Replicates
re-run the trial under different seeds; aggregation reports mean final
cumulative regret with a normal-approximation confidence interval.

Randomness is hierarchical: a root seed spawns one stream per
(replicate, step), so every agent sees identical streams at the same
replicate and step no matter what any other agent consumed.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .agents import (
    EpsilonGreedyAgent,
    GPUCBAgent,
    GPUCBConfig,
    GreedyAgent,
    HBBSAgent,
    HBBSConfig,
)
from .bandit import NormalGammaPrior
from .core import Environment, initial_log, observe
from .environments import (
    ClusterEnvConfig,
    generate_cluster_env,
    load_dataset_env,
    load_env_json,
)
from .errors import BatchSearchError, ConfigError, HarnessError
from .gp import GPConfig
from .surrogate import SurrogateConfig


def top_q_sum(values: np.ndarray, q: int) -> float:
    """Exact sum of the q largest entries (fsum, so order cannot perturb it)."""
    values = np.asarray(values, dtype=np.float64)
    if q > values.shape[0]:
        raise HarnessError(
            "SIZE_MISMATCH", f"asked for top {q} of {values.shape[0]} values"
        )
    top = np.partition(values, values.shape[0] - q)[values.shape[0] - q :]
    return math.fsum(top.tolist())


def step_regret(
    batch_labels: np.ndarray,
    remaining_labels: np.ndarray,
    batch_size: int,
    rho: float,
) -> float:
    """Best-possible minus achieved top-floor(rho*B) label sum for one step.

    ``remaining_labels`` are the labels of every sequence that was still
    unobserved when the batch was chosen (the batch itself included).
    Zero exactly when the batch contains a best-possible top fraction.
    """
    batch_labels = np.asarray(batch_labels, dtype=np.float64)
    if batch_labels.shape[0] != batch_size:
        raise HarnessError(
            "SIZE_MISMATCH",
            f"batch has {batch_labels.shape[0]} labels, expected {batch_size}",
        )
    q = int(math.floor(rho * batch_size + 1e-9))
    if q < 1:
        raise HarnessError(
            "RHO_DEGENERATE", f"floor(rho * batch_size) = 0 for rho={rho}"
        )
    achieved = top_q_sum(batch_labels, q)
    best = top_q_sum(remaining_labels, q)
    return best - achieved


def cumulative_regret(step_regrets: list[float] | np.ndarray) -> np.ndarray:
    """Prefix sums of per-step regrets; rejects negative entries."""
    arr = np.asarray(step_regrets, dtype=np.float64)
    if arr.size and float(arr.min()) < 0.0:
        raise HarnessError("NEGATIVE_STEP", "step regrets cannot be negative")
    return np.cumsum(arr)


@dataclass
class TrialRecord:
    """Everything one trial produced, ready for CSV rows."""

    agent_name: str
    agent_config: str
    seed: int
    env_id: str
    batches: list[list[int]]
    step_regrets: list[float]
    cumulative_regrets: list[float]
    wallclock_s: list[float]

    @property
    def final_regret(self) -> float:
        return self.cumulative_regrets[-1]


def _step_stream(base: np.random.SeedSequence, step: int) -> np.random.Generator:
    child = np.random.SeedSequence(
        entropy=base.entropy, spawn_key=(*base.spawn_key, step)
    )
    return np.random.default_rng(child)


def trial_seed_sequence(root_seed: int, replicate: int) -> np.random.SeedSequence:
    """The per-replicate randomness root shared by all agents."""
    return np.random.SeedSequence(entropy=root_seed, spawn_key=(replicate,))


def run_trial(
    env: Environment,
    agent,
    steps: int,
    rho: float,
    seed: int | np.random.SeedSequence,
    env_id: str = "",
    replicate: int = 0,
) -> TrialRecord:
    """One agent, one environment, T acts from a random bootstrap batch.

    Step t consumes its own rng stream spawned from the seed, so agents
    that burn different amounts of randomness stay comparable step for
    step.  Agent errors propagate with a ``trial_context`` attribute
    naming the agent, replicate, and step.
    """
    if steps < 1:
        raise HarnessError("SIZE_MISMATCH", "steps must be >= 1")
    batch_size = env.batch_size
    if (steps + 1) * batch_size > env.size:
        raise HarnessError(
            "POOL_EXHAUSTED",
            f"{steps} steps of {batch_size} plus bootstrap exceed pool of {env.size}",
        )
    base = (
        seed
        if isinstance(seed, np.random.SeedSequence)
        else np.random.SeedSequence(seed)
    )
    boot_rng = _step_stream(base, 0)
    bootstrap = boot_rng.choice(env.size, size=batch_size, replace=False)
    log = initial_log(env, bootstrap)
    truth = env.all_labels()

    batches: list[list[int]] = []
    regrets: list[float] = []
    walls: list[float] = []
    for t in range(1, steps + 1):
        rng = _step_stream(base, t)
        started = time.perf_counter()
        try:
            batch = agent.act(env.pool, log, batch_size, rng)
        except BatchSearchError as err:
            err.trial_context = {
                "agent": agent.info.config_string() or agent.name,
                "replicate": replicate,
                "step": t,
            }
            raise
        walls.append(time.perf_counter() - started)
        remaining = truth[~log.observed_mask(env.size)]
        regrets.append(step_regret(truth[batch], remaining, batch_size, rho))
        log = observe(env, log, batch)
        batches.append([int(i) for i in batch])

    return TrialRecord(
        agent_name=agent.name,
        agent_config=agent.info.config_string(),
        seed=replicate,
        env_id=env_id,
        batches=batches,
        step_regrets=regrets,
        cumulative_regrets=[float(x) for x in cumulative_regret(regrets)],
        wallclock_s=walls,
    )


@dataclass
class AggregateRow:
    agent_name: str
    agent_config: str
    n_trials: int
    mean_final_regret: float
    ci_halfwidth: float
    mean_step_wallclock: float


def aggregate(records: list[TrialRecord], confidence: float = 0.9) -> list[AggregateRow]:
    """Per-agent mean final cumulative regret with a z confidence interval.

    Needs at least two replicates per agent for the interval to exist.
    Rows come out in first-appearance order of (agent, config).
    """
    if not 0.0 < confidence < 1.0:
        raise ConfigError(f"confidence must lie in (0, 1), got {confidence}")
    groups: dict[tuple[str, str], list[TrialRecord]] = {}
    for rec in records:
        groups.setdefault((rec.agent_name, rec.agent_config), []).append(rec)
    z = float(norm.ppf(0.5 + confidence / 2.0))
    rows = []
    for (name, config), group in groups.items():
        n = len(group)
        if n < 2:
            raise HarnessError(
                "INSUFFICIENT_TRIALS",
                f"agent {name}({config}) has {n} trial(s); need >= 2",
            )
        finals = np.array([g.final_regret for g in group])
        spread = float(finals.std(ddof=1))
        walls = np.concatenate([np.asarray(g.wallclock_s) for g in group])
        rows.append(
            AggregateRow(
                agent_name=name,
                agent_config=config,
                n_trials=n,
                mean_final_regret=float(finals.mean()),
                ci_halfwidth=z * spread / math.sqrt(n),
                mean_step_wallclock=float(walls.mean()),
            )
        )
    return rows


RESULT_COLUMNS = ["agent", "config", "seed", "step", "regret_step", "regret_cum", "wallclock_s"]


def write_results_csv(records: list[TrialRecord], path: str | Path) -> None:
    """One row per (trial, step); floats via repr for exact round-trips."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULT_COLUMNS)
        for rec in records:
            for t in range(len(rec.step_regrets)):
                writer.writerow(
                    [
                        rec.agent_name,
                        rec.agent_config,
                        rec.seed,
                        t + 1,
                        repr(rec.step_regrets[t]),
                        repr(rec.cumulative_regrets[t]),
                        repr(rec.wallclock_s[t]),
                    ]
                )


def read_results_csv(path: str | Path) -> list[TrialRecord]:
    """Rebuild per-trial records (without batches) from a results file."""
    trials: dict[tuple[str, str, int], TrialRecord] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RESULT_COLUMNS:
            raise ConfigError(f"unexpected results header in {path}")
        for row in reader:
            key = (row["agent"], row["config"], int(row["seed"]))
            rec = trials.get(key)
            if rec is None:
                rec = TrialRecord(
                    agent_name=row["agent"],
                    agent_config=row["config"],
                    seed=int(row["seed"]),
                    env_id="",
                    batches=[],
                    step_regrets=[],
                    cumulative_regrets=[],
                    wallclock_s=[],
                )
                trials[key] = rec
            rec.step_regrets.append(float(row["regret_step"]))
            rec.cumulative_regrets.append(float(row["regret_cum"]))
            rec.wallclock_s.append(float(row["wallclock_s"]))
    return list(trials.values())


def write_summary_csv(rows: list[AggregateRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["agent", "config", "n_trials", "mean_final_regret", "ci_halfwidth", "mean_step_wallclock"]
        )
        for row in rows:
            writer.writerow(
                [
                    row.agent_name,
                    row.agent_config,
                    row.n_trials,
                    repr(row.mean_final_regret),
                    repr(row.ci_halfwidth),
                    repr(row.mean_step_wallclock),
                ]
            )


@dataclass
class RunSpec:
    """Parsed benchmark configuration (see load_run_config for the schema)."""

    environment: dict
    agents: list[dict]
    steps: int
    rho: float = 0.2
    replicates: int = 2
    root_seed: int = 0
    workers: int = 1
    env_mode: str = "per-seed"
    surrogate: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if not 0.0 < self.rho <= 1.0:
            raise ConfigError("rho must lie in (0, 1]")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.env_mode not in ("per-seed", "fixed"):
            raise ConfigError(f"unknown env_mode {self.env_mode!r}")
        if not self.agents:
            raise ConfigError("at least one agent is required")
        if "kind" not in self.environment:
            raise ConfigError("environment block needs a 'kind'")


def load_run_config(path: str | Path) -> RunSpec:
    """Read a run spec from JSON or TOML (picked by file extension)."""
    path = Path(path)
    try:
        if path.suffix == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:
                import tomli as tomllib
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        else:
            with open(path) as fh:
                raw = json.load(fh)
    except (json.JSONDecodeError, ValueError) as err:
        raise ConfigError(f"could not parse {path}: {err}") from err
    known = {f for f in RunSpec.__dataclass_fields__}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        spec = RunSpec(**raw)
    except TypeError as err:
        raise ConfigError(f"bad run config: {err}") from err
    spec.validate()
    return spec


def expand_agent_grid(entries: list[dict]) -> list[dict]:
    """Cartesian-expand list-valued hyperparameters into concrete specs."""
    out = []
    for entry in entries:
        if "name" not in entry:
            raise ConfigError(f"agent entry missing 'name': {entry}")
        sweep_keys = [
            k for k, v in entry.items() if isinstance(v, list) and k != "conv_layers"
        ]
        if not sweep_keys:
            out.append(dict(entry))
            continue
        for combo in itertools.product(*(entry[k] for k in sweep_keys)):
            concrete = dict(entry)
            concrete.update(dict(zip(sweep_keys, combo)))
            out.append(concrete)
    return out


def _surrogate_from(shared: dict, local: dict) -> SurrogateConfig:
    merged = {**shared, **local}
    if "conv_layers" in merged:
        merged["conv_layers"] = tuple(tuple(layer) for layer in merged["conv_layers"])
    try:
        cfg = SurrogateConfig(**merged)
    except TypeError as err:
        raise ConfigError(f"bad surrogate settings: {err}") from err
    cfg.validate()
    return cfg


def build_agent(spec: dict, shared_surrogate: dict | None = None):
    """Instantiate an agent from a config entry like {"name": "hbbs", "k": 10}."""
    spec = dict(spec)
    name = spec.pop("name")
    surrogate = _surrogate_from(shared_surrogate or {}, spec.pop("surrogate", {}))
    try:
        if name == "greedy":
            _reject_extras(name, spec)
            return GreedyAgent(surrogate)
        if name == "eps-greedy":
            epsilon = spec.pop("epsilon")
            _reject_extras(name, spec)
            return EpsilonGreedyAgent(epsilon, surrogate)
        if name == "hbbs":
            k = spec.pop("k")
            prior = NormalGammaPrior(
                mu0=spec.pop("mu0", 0.5),
                n0=spec.pop("n0", 10.0),
                alpha=spec.pop("alpha", 1.0),
                beta=spec.pop("beta", 1.0),
            )
            resample_tau = spec.pop("resample_tau", False)
            _reject_extras(name, spec)
            cfg = HBBSConfig(
                k=k, prior=prior, surrogate=surrogate, resample_tau=resample_tau
            )
            return HBBSAgent(cfg)
        if name == "gp-ucb":
            gp = GPConfig(
                length_scale=spec.pop("length_scale", 1.0),
                signal_variance=spec.pop("signal_variance", 1.0),
                noise_variance=spec.pop("noise_variance", 1e-4),
                beta=spec.pop("beta", 1.0),
                refit_interval=spec.pop("m", 5),
            )
            _reject_extras(name, spec)
            return GPUCBAgent(GPUCBConfig(gp=gp, surrogate=surrogate))
    except KeyError as err:
        raise ConfigError(f"agent {name!r} is missing required key {err}") from err
    raise ConfigError(f"unknown agent name {name!r}")


def _reject_extras(name: str, leftover: dict) -> None:
    if leftover:
        raise ConfigError(f"agent {name!r} got unknown keys {sorted(leftover)}")


def build_environment(
    block: dict, env_mode: str, replicate: int
) -> tuple[Environment, str]:
    """Materialize the environment for one replicate.

    Cluster environments in per-seed mode shift their generation seed by
    the replicate index; file and dataset environments are fixed.
    """
    block = dict(block)
    kind = block.pop("kind")
    if kind == "cluster":
        seed = int(block.pop("seed", 0))
        if env_mode == "per-seed":
            seed = seed + replicate
        try:
            cfg = ClusterEnvConfig(
                n_clusters=block.pop("clusters"),
                per_cluster=block.pop("per_cluster"),
                sigma=block.pop("sigma", 0.1),
                concentration=block.pop("c", 0.2),
                length=block.pop("length", 100),
                seed=seed,
                batch_size=block.pop("batch_size", 100),
            )
        except KeyError as err:
            raise ConfigError(f"cluster environment missing key {err}") from err
        if block:
            raise ConfigError(f"cluster environment got unknown keys {sorted(block)}")
        env, _ = generate_cluster_env(cfg)
        return env, f"cluster(seed={seed})"
    if kind == "file":
        try:
            path = block.pop("path")
        except KeyError as err:
            raise ConfigError(f"file environment missing key {err}") from err
        env, _ = load_env_json(path)
        if "batch_size" in block:
            env = Environment(env.pool, env.all_labels(), block.pop("batch_size"))
        if block:
            raise ConfigError(f"file environment got unknown keys {sorted(block)}")
        return env, f"file({Path(path).name})"
    if kind == "dataset":
        try:
            path = block.pop("path")
            batch_size = block.pop("batch_size")
        except KeyError as err:
            raise ConfigError(f"dataset environment missing key {err}") from err
        env = load_dataset_env(
            path,
            batch_size=batch_size,
            normalize=block.pop("normalize", True),
        )
        if block:
            raise ConfigError(f"dataset environment got unknown keys {sorted(block)}")
        return env, f"dataset({Path(path).name})"
    raise ConfigError(f"unknown environment kind {kind!r}")


def _worker_run(args: tuple) -> TrialRecord:
    env_block, env_mode, shared_surrogate, agent_spec, steps, rho, root_seed, replicate = args
    env, env_id = build_environment(env_block, env_mode, replicate)
    agent = build_agent(agent_spec, shared_surrogate)
    return run_trial(
        env,
        agent,
        steps,
        rho,
        trial_seed_sequence(root_seed, replicate),
        env_id=env_id,
        replicate=replicate,
    )


def run_benchmark(
    spec: RunSpec,
    out_dir: str | Path,
    progress: bool = False,
    workers: int | None = None,
) -> tuple[Path, Path]:
    """Run every (agent, replicate) trial and write results/summary CSVs.

    Output row order is fixed by the config (agent order, then
    replicate), so identical configs produce identical files apart from
    the wall-clock column.  Returns the two output paths.
    """
    spec.validate()
    workers = spec.workers if workers is None else workers
    agent_specs = expand_agent_grid(spec.agents)
    tasks = [
        (
            spec.environment,
            spec.env_mode,
            spec.surrogate,
            agent_spec,
            spec.steps,
            spec.rho,
            spec.root_seed,
            replicate,
        )
        for agent_spec in agent_specs
        for replicate in range(spec.replicates)
    ]
    records: list[TrialRecord] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for i, record in enumerate(pool.map(_worker_run, tasks)):
                records.append(record)
                if progress:
                    _print_progress(i, len(tasks), record)
    else:
        for i, task in enumerate(tasks):
            record = _worker_run(task)
            records.append(record)
            if progress:
                _print_progress(i, len(tasks), record)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results_path = out_dir / "results.csv"
    summary_path = out_dir / "summary.csv"
    write_results_csv(records, results_path)
    write_summary_csv(aggregate(records) if spec.replicates >= 2 else [], summary_path)
    return results_path, summary_path


def _print_progress(done: int, total: int, record: TrialRecord) -> None:
    label = record.agent_config or record.agent_name
    print(
        f"[{done + 1}/{total}] {record.agent_name}({label}) "
        f"replicate={record.seed} final_regret={record.final_regret:.4f}",
        file=sys.stderr,
        flush=True,
    )
