# %% [markdown]
# # Random interaction teams and the file formats
#
# Recycling robots share rewards through random interaction events. The
# class ``k`` sets the quartile band that the number of events is drawn
# from, so higher classes couple the robots more tightly.

# %%
import tempfile
import time
from pathlib import Path

import numpy as np

from decmdp import (PolicyFile, SolveConfig, parse_policy, parse_problem, serialize_policy,
                    serialize_problem, solve)
from decmdp.bench import gen_random_team, interaction_events

for klass in range(4):
    counts = [len(interaction_events(2, klass, seed)) for seed in range(20)]
    print(f"class {klass}: events per instance {min(counts)}..{max(counts)}")

# %% [markdown]
# ## Solving teams of growing size

# %%
for n_agents in (2, 3, 4):
    model = gen_random_team(n_agents, 2, seed=0, horizon=4)
    t0 = time.perf_counter()
    sol = solve(model, SolveConfig(epsilon=1e-4))
    print(f"n={n_agents}: value {sol.lower:.4f}, gap {sol.gap:.1e}, "
          f"{sol.backups} backups, {time.perf_counter() - t0:.2f}s")

# %% [markdown]
# ## Writing and reading files
#
# A problem file lists each agent's transitions and the sparse joint
# rewards. Floats are written with 17 significant digits, so reading the
# file back reproduces every table exactly.

# %%
model = gen_random_team(2, 1, seed=3, horizon=5)
text = serialize_problem(model)
print("\n".join(text.splitlines()[:12]), "\n...")
back = parse_problem(text)
print("identical tables:", np.array_equal(back.reward_matrix, model.reward_matrix))

sol = solve(back, SolveConfig(epsilon=1e-6, seed=1))
out = Path(tempfile.mkdtemp()) / "team.policy"
out.write_text(serialize_policy(PolicyFile(sol.policy, sol.lower, sol.upper, 1e-6, 1)))
print(out.read_text().splitlines()[:8])
print("policy survives the round trip:", parse_policy(out.read_text(), back).policy == sol.policy)
