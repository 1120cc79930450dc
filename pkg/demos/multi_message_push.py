# %% [markdown]
# # Many messages: MOBILE PUSH against RANDOM PUSH
#
# Every node is a source (k = n). MOBILE PUSH spends odd slots advertising the
# sender's own message and even slots relaying what it has heard. We compare
# the slowest message and the number of wasted (already-known) deliveries.

# %%
import math

import numpy as np

from mobgossip import SimConfig, run

n = 256
for protocol in ("mobile_push", "random_push"):
    worst, waste = [], []
    for s in range(3):
        m = run(SimConfig(n=n, k=n, v=1 / 3, protocol=protocol, phy_mode="bernoulli", seed=s))
        worst.append(m.completion.max())
        waste.append(m.wasted.sum() / m.throughput.sum())
    print(f"{protocol:12s} max T={np.median(worst):7.0f}  max T/(k log^2 n)={np.median(worst) / (n * math.log(n) ** 2):.3f}"
          f"  wasted fraction={np.mean(waste):.2f}")

# %% SINR reception instead of the constant-probability abstraction
m = run(SimConfig(n=n, k=32, v=1 / 3, phy_mode="sinr", seed=0))
print("sinr, k=32: median T =", np.median(m.completion), " deliveries/slot =", m.throughput.mean().round(1))
