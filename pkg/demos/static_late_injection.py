# %% [markdown]
# # Static network, late message
#
# With frozen positions the network behaves like a random geometric graph.
# The last message M* is only injected once every node already holds w other
# messages, so it competes with a full backlog and creeps outward strip by
# strip. Smaller than the acceptance setting so it runs in under a minute.

# %%
import numpy as np

from mobgossip import SimConfig, init_world, run_slot, strip_profile
from mobgossip.engine import strip_width
from mobgossip.fastpath import fast_forward

cfg = SimConfig(n=256, k=16, mobility="static", protocol="random_push", injection="late:8", seed=3)
world = init_world(cfg)
# the compiled loop gives the same trajectory as run_slot, only faster
while world.inject_time[world.probe] < 0:
    fast_forward(world, world.t + 100_000)
inj = int(world.inject_time[world.probe])
print(f"M* injected at slot {inj}; strip width {strip_width(cfg.n):.3f}")

# %% Holders of M* per strip (folded around the source strip) as time passes
for offset in (0, 3, 10, 30, 100, 300):
    while world.t < inj + offset:
        run_slot(world)
    print(f"+{offset:4d} slots: {strip_profile(world).tolist()}  total={world.counts[world.probe]}")

# %% Compare with the same population moving at full speed
mobile = init_world(cfg.replace(mobility="edge_stay", v=1 / 3))
while mobile.inject_time[mobile.probe] < 0:
    run_slot(mobile)
start = mobile.t
while mobile.completion[mobile.probe] < 0:
    run_slot(mobile)
print("mobile: M* done", mobile.t - start, "slots after injection")
