"""Normal-gamma posteriors over three arms, and where Thompson draws land.

Arm 1 has the best observed labels, so it should win most draws; arm 2
has a single observation, so a wide posterior keeps it in the running.
"""

import numpy as np

from batchsearch import (
    NormalGammaPrior,
    draw_precision,
    posterior_params,
    sample_cluster_value,
    thompson_select,
)

prior = NormalGammaPrior()  # mu0 0.5, n0 10, alpha 1, beta 1
arm_samples = [
    np.array([0.45, 0.52, 0.48, 0.50, 0.47]),   # mediocre, well observed
    np.array([0.71, 0.68, 0.74, 0.70]),         # strong, well observed
    np.array([0.62]),                           # promising, barely observed
]

posteriors = [posterior_params(prior, s) for s in arm_samples]
for i, post in enumerate(posteriors):
    print(
        f"arm {i}: n={len(arm_samples[i])} mean={post.normal_mean:.4f} "
        f"gamma(shape={post.gamma_shape:.1f}, rate={post.gamma_rate:.4f})"
    )

rng = np.random.default_rng(2)
wins = np.zeros(3, dtype=int)
for _ in range(5000):
    wins[thompson_select(posteriors, rng)] += 1
print("\nwin rates over 5000 draws:", wins / wins.sum())

# the value draw spreads with 1/sqrt(weight * tau): more data, tighter draws
print()
for i, post in enumerate(posteriors):
    draws = [
        sample_cluster_value(post, rng, precision=draw_precision(post, rng))
        for _ in range(2000)
    ]
    print(f"arm {i}: draw sd {np.std(draws):.4f}")
