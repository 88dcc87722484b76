import numpy as np
import pytest

from volleygraph.rally import Block, Hit, HitType, Level, Pass, Rally, Round, ServeType, Set, Team, WinReason
from volleygraph.synth import college_profile, generate, professional_profile


def make_rally(rounds, winner=Team.A, rally_id="r1", level=Level.COLLEGE):
    """Build a rally from ``[(team, [contacts...]), ...]`` with rounds numbered 1, 2, ..."""
    return Rally(
        match_id="m1",
        level=level,
        rally_id=rally_id,
        rounds=tuple(Round(team, k, tuple(cs)) for k, (team, cs) in enumerate(rounds, start=1)),
        winner=winner,
        win_reason=WinReason.KILL,
    )


@pytest.fixture
def three_round_rally():
    return make_rally(
        [
            (Team.A, [Pass(6, 2, ServeType.JUMP), Set(2, 3, 4), Hit(4, HitType.POWER), Block(2, True)]),
            (Team.B, [Pass(5, 3), Set(3, 2, 3), Hit(3, HitType.TIP), Block(1, False)]),
            (Team.A, [Pass(1, 1), Set(2, 1, 5), Hit(5, HitType.ROLL)]),
        ],
        winner=Team.A,
    )


@pytest.fixture(scope="session")
def college():
    return college_profile()


@pytest.fixture(scope="session")
def professional():
    return professional_profile()


@pytest.fixture(scope="session")
def college_rallies(college):
    return generate(college, 400, seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
