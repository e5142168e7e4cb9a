"""Small head-to-head benchmark: greedy vs epsilon-greedy vs clustered Thompson.

Writes results.csv / summary.csv under demo_results/ and prints the
aggregate table.  Scaled way down from a real run so it finishes in
about a minute; bump replicates/steps for anything you want to trust.
"""

from batchsearch import RunSpec, aggregate, read_results_csv, run_benchmark

spec = RunSpec(
    environment={
        "kind": "cluster",
        "clusters": 5,
        "per_cluster": 120,
        "length": 30,
        "batch_size": 10,
        "seed": 50,
    },
    agents=[
        {"name": "greedy"},
        {"name": "eps-greedy", "epsilon": 0.2},
        {"name": "hbbs", "k": [2, 5]},  # list values sweep
    ],
    steps=8,
    rho=0.2,
    replicates=3,
    root_seed=123,
    surrogate={
        "conv_layers": [[16, 5]],
        "dense_hidden": 32,
        "epochs": 8,
        "learning_rate": 0.1,
    },
)

results_path, summary_path = run_benchmark(spec, "demo_results", progress=True)
print(f"\nwrote {results_path} and {summary_path}\n")

rows = aggregate(read_results_csv(results_path))
for row in rows:
    label = f"{row.agent_name}({row.agent_config})" if row.agent_config else row.agent_name
    print(
        f"{label:<22} final regret {row.mean_final_regret:7.3f} "
        f"+- {row.ci_halfwidth:6.3f}   {row.mean_step_wallclock * 1000:6.1f} ms/act"
    )
