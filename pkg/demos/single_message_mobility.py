# %% [markdown]
# # One message, mobile nodes
#
# A single source pushes its message while nodes wander over an s x s grid of
# subsquares. Faster movement (larger v, smaller grid) mixes the population
# and shortens the spreading time.

# %%
import math

import numpy as np

from mobgossip import SimConfig, run

# %% Spreading time against n at full mobility (v = 1/3)
for n in (256, 512, 1024, 2048):
    T = [run(SimConfig(n=n, k=1, v=1 / 3, phy_mode="bernoulli", seed=s)).completion[0] for s in range(10)]
    print(f"n={n:5d}  median T={np.median(T):6.1f}  T/log n={np.median(T) / math.log(n):5.2f}")

# %% Velocity sweep at n=1024
for v in (1 / 32, 1 / 16, 1 / 8, 1 / 3):
    T = [run(SimConfig(n=1024, k=1, v=v, phy_mode="bernoulli", seed=s)).completion[0] for s in range(10)]
    print(f"v=1/{round(1 / v):<3d} median T={np.median(T):6.1f}")

# %% The growth curve N(t) of one run
m = run(SimConfig(n=1024, k=1, v=1 / 8, sample_stride=5, seed=1))
for t, c in zip(m.sample_slots[::4], m.counts[::4, 0]):
    print(f"t={t:4d} {'#' * int(60 * c / 1024)}")
