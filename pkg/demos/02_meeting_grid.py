# %% [markdown]
# # Meeting on a grid
#
# Two agents start in opposite corners of a square grid. Moves fail with a
# small probability. Two reward conventions are available: paying the
# chance of sharing a cell after the joint move, or paying 1 when the
# current cells already coincide.

# %%
import time

from decmdp import SolveConfig, solve
from decmdp.bench import gen_meeting_grid

# %% [markdown]
# ## Value against horizon on a 3x3 grid

# %%
print(" T   after(slip .1)   before(slip .1)   seconds")
for horizon in range(2, 6):
    row = []
    t0 = time.perf_counter()
    for reward_on in ("after", "before"):
        model = gen_meeting_grid(3, 0.1, horizon=horizon, reward_on=reward_on)
        row.append(solve(model, SolveConfig(epsilon=1e-6)).lower)
    print(f"{horizon:2d}   {row[0]:14.4f}   {row[1]:15.4f}   {time.perf_counter() - t0:7.2f}")

# %% [markdown]
# With "before", nothing can be earned until the agents could have walked
# the four steps between the corners, so the value is zero for T = 2.
#
# ## A larger grid under a time limit
#
# On an 8x8 grid short horizons still solve quickly, but the search grows
# fast with the horizon. It can be stopped early: both bounds stay valid
# and the returned policy achieves the lower one.

# %%
for horizon, limit in ((7, None), (9, 10.0)):
    sol = solve(gen_meeting_grid(8, 0.1, horizon=horizon), SolveConfig(time_limit=limit))
    print(f"8x8, T={horizon}: lower={sol.lower:.4f} upper={sol.upper:.4f} "
          f"converged={sol.converged} in {sol.wall_seconds:.1f}s")
