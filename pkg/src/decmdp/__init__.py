"""Exact planning for transition-independent decentralized MDPs."""
from .exceptions import CapacityError, DecMdpError, HorizonError, ModelError
from .model import (FactoredDecMdp, LocalAgentModel, ValidationReport, joint_transition,
                    make_model, reward, validate)
from .occupancy import (FactoredOccupancy, Occupancy, advance, advance_factored,
                        expected_reward, initial_occupancy, key_of)
from .policy import (DecisionRule, MarkovPolicy, StateValueTable, enumerate_rules,
                     evaluate_policy, random_policy, rule_count, value_at)
from .heuristics import BoundStore, MdpHeuristic, build_mdp_heuristic
from .cop import CopProblem, CopSolution, build_backup_cop, exhaustive_backup, solve_cop
from .mps import Planner, Solution, SolveConfig, solve
from .fileio import (FormatError, PolicyFile, parse_policy, parse_problem, serialize_policy,
                     serialize_problem)
from .oracle import best_history, best_markov
from .bench import gen_meeting_grid, gen_random_team, gen_recycling

__all__ = [
    "CapacityError", "DecMdpError", "HorizonError", "ModelError",
    "FactoredDecMdp", "LocalAgentModel", "ValidationReport", "joint_transition",
    "make_model", "reward", "validate",
    "FactoredOccupancy", "Occupancy", "advance", "advance_factored", "expected_reward",
    "initial_occupancy", "key_of",
    "DecisionRule", "MarkovPolicy", "StateValueTable", "enumerate_rules", "evaluate_policy",
    "random_policy", "rule_count", "value_at",
    "BoundStore", "MdpHeuristic", "build_mdp_heuristic",
    "CopProblem", "CopSolution", "build_backup_cop", "exhaustive_backup", "solve_cop",
    "Planner", "Solution", "SolveConfig", "solve",
    "FormatError", "PolicyFile", "parse_policy", "parse_problem", "serialize_policy",
    "serialize_problem",
    "best_history", "best_markov",
    "gen_meeting_grid", "gen_random_team", "gen_recycling",
]
