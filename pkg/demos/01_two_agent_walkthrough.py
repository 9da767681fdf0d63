# %% [markdown]
# # Two agents, two cells
#
# Each agent sits in cell 0 or 1 and can either flip to the other cell or
# stay. The team earns 1 whenever both agents share a cell. They start apart
# and see only their own cell, so coordination has to be planned in advance.

# %%
import numpy as np

from decmdp import (DecisionRule, LocalAgentModel, SolveConfig, advance, build_mdp_heuristic,
                    expected_reward, initial_occupancy, make_model, rule_count, solve)
from decmdp.oracle import best_markov

P = np.zeros((2, 2, 2))
P[0, 0, 1] = P[1, 0, 0] = 1.0     # flip
P[0, 1, 0] = P[1, 1, 1] = 1.0     # stay
agent = LocalAgentModel(("left", "right"), ("flip", "stay"), P)
rewards = {((z, z), (a, b)): 1.0 for z in range(2) for a in range(2) for b in range(2)}
model = make_model([agent, agent], rewards, horizon=3,
                   initial_factors=[np.array([1.0, 0.0]), np.array([0.0, 1.0])])
print(model.n_states, "joint states,", model.n_actions, "joint actions,",
      rule_count(model), "decision rules per stage")

# %% [markdown]
# ## Occupancies
#
# A decision rule maps each agent's own cell to an action. Applied to the
# distribution over joint states it yields the next distribution, and the
# expected reward is linear in that distribution.

# %%
eta = initial_occupancy(model)
only_first_flips = DecisionRule([[0, 0], [1, 1]])
print("start       ", eta.probs)
print("reward now  ", expected_reward(model, eta, only_first_flips))
nxt = advance(model, eta, only_first_flips)
print("after a flip", nxt.probs, "reward", expected_reward(model, nxt, only_first_flips))

# %% [markdown]
# ## Bounds
#
# The centralized MDP, where one controller sees both cells, gives an upper
# bound on what the decentralized team can achieve.

# %%
heuristic = build_mdp_heuristic(model)
print("centralized bound at the start:", float(eta.probs @ heuristic.values[0]))

# %% [markdown]
# ## Search
#
# Both backups should reach the brute-force optimum.

# %%
for mode in ("exhaustive", "cop"):
    sol = solve(model, SolveConfig(mode=mode, epsilon=1e-9))
    print(f"{mode:10s} lower={sol.lower:.3f} upper={sol.upper:.3f} trials={sol.trials}")
    for tau, rule in enumerate(sol.policy.rules):
        print("   stage", tau, rule.actions)
print("brute force:", best_markov(model)[0])
