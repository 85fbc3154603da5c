"""
Searching for projector weights
===============================

Nelder-Mead with random restarts maximises the fidelity of the heralded
state with a target, over complex projector weights on D and A.
"""

import time

from oam_noon import Projector, SearchSpace, named_target, optimize
from oam_noon.protocol import default_config

cfg = default_config(2, Projector.of("D", {-1: 1, -2: 1}), Projector.of("A", {-1: 1, -2: 1}))
target = named_target("two-mode-noon")

for seed in range(3):
    t0 = time.perf_counter()
    res = optimize(cfg, target, budget=2000, seed=seed)
    took = time.perf_counter() - t0
    d, a = dict(res.best_weights["D"]), dict(res.best_weights["A"])
    # the sign may sit on D or on A; only the products f g matter
    ratio = (d[-2] * a[-2]) / (d[-1] * a[-1])
    print(f"seed {seed}: fidelity {res.best_objective:.12f} after {res.evaluations} evals "
          f"({took:.2f} s), f_n g_n / f_m g_m = {ratio.real:+.4f}")

# three modes, and the all-positive target that needs complex weights
cfg3 = default_config(3, Projector.of("D", {-1: 1, -2: 1, -3: 1}), Projector.of("A", {-1: 1, -2: 1, -3: 1}))
for name in ("three-mode-gr", "three-mode-gr-positive"):
    res = optimize(cfg3, named_target(name), budget=5000, seed=0)
    print(f"{name}: {res.best_objective:.8f} in {res.evaluations} evals, restarts {res.restarts}")
    for path, ws in res.best_weights.items():
        print("   ", path, [f"{w:.3f}" for _, w in ws])

# the parameter vector: magnitudes then phases, first weight of each block real
space = SearchSpace.from_config(cfg3)
print("dimension", space.dimension, "bounds", space.bounds()[:4])
