# %% [markdown]
# # Oracles for the probabilistic building blocks
#
# Exact and Monte Carlo checks on the quantities the spreading-time bounds
# rest on: walk mixing, boundary hitting, returns to the origin, occupancy
# concentration, graph conductance and the SINR success rate.

# %%
import math

from mobgossip import analysis as an
from mobgossip.core import SimConfig, derive_stream, validate
from mobgossip.phy import estimate_success_constant

rng = derive_stream(0, "demo")

# %% Mixing time of the subsquare walk, exactly, for both boundary rules
for s in (4, 8, 16):
    row = {b: an.exact_mixing(s, b) for b in ("torus_wrap", "edge_stay")}
    print(f"s={s:2d} m={s * s:4d}", row, f"m log m={s * s * math.log(s * s):.0f}")

# %% Relative walk: boundary hits are rare before m/(c_h log n)
h = an.hitting_horizon(32, 1024)
print("P(hit before", h, ") =", an.hitting_time_mc(32, h, 20_000, rng).mean)

# %% Returns to the origin grow like log t
for t, e in an.return_count_curve([10, 100, 1000], 20_000, rng).items():
    print(f"t={t:5d} returns={e.mean:.3f}  /log t={e.mean / math.log(t):.3f}")

# %% Balls into subsquares stay within [b/6m, 7b/3m]
print(an.concentration_check(int(40 * 64 * math.log(4096)), 64, 200, rng, n=4096))

# %% Conductance: small graphs and random geometric graphs
print("cycle4", an.conductance_exact(an.cycle_graph(4)), "K4", an.conductance_exact(an.complete_graph(4)))
# at these sizes sqrt(32 log n / n) exceeds sqrt(2), so the graphs are complete
for row in an.rgg_conductance_scaling([10, 14], range(3)):
    print(row)
# a tighter radius gives sparser graphs with smaller conductance
for row in an.rgg_conductance_scaling([14], range(3), radius=lambda n: 0.45):
    print(row)

# %% SINR success probability barely moves with n under the default power rule
for n, slots in ((256, 100), (1024, 30)):
    print(n, estimate_success_constant(validate(SimConfig(n=n, phy_mode="sinr")), slots, rng))
