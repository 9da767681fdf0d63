import numpy as np
import pytest

from decmdp import LocalAgentModel, make_model


def flip_stay_agent():
    """Two observations; ``flip`` swaps them, ``stay`` keeps them."""
    P = np.zeros((2, 2, 2))
    P[0, 0, 1] = P[1, 0, 0] = 1.0
    P[0, 1, 0] = P[1, 1, 1] = 1.0
    return LocalAgentModel(("0", "1"), ("flip", "stay"), P)


def toy(horizon=2):
    """Reward 1 whenever both observations agree; start at (0, 1)."""
    agent = flip_stay_agent()
    rewards = {((z, z), (a, b)): 1.0 for z in range(2) for a in range(2) for b in range(2)}
    start = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    return make_model([agent, agent], rewards, horizon, initial_factors=start, name="toy")


def zero_reward(horizon=3):
    agent = flip_stay_agent()
    return make_model([agent, agent], {}, horizon, initial_factors=[np.full(2, 0.5)] * 2)


@pytest.fixture
def toy_model():
    return toy()


# acceptance verdicts, printed once at the end of the run
VERDICTS = {}


def record(criterion, passed, detail):
    status = passed if isinstance(passed, str) else ("PASS" if passed else "FAIL")
    line = f"criterion {criterion}: {status}: {detail}"
    VERDICTS[criterion] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for key in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[key])
