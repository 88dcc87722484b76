"""Hypothesis strategies for arbitrary valid rallies."""

from hypothesis import strategies as st

from volleygraph.rally import Block, Hit, HitType, Level, Pass, Rally, Round, ServeType, Set, Team, WinReason

zones = st.integers(1, 9)
ratings = st.integers(0, 3)


def contact(kind, first_round):
    if kind == "pass":
        serve = st.one_of(st.none(), st.sampled_from(ServeType)) if first_round else st.none()
        return st.builds(Pass, zones, ratings, serve)
    if kind == "set":
        return st.builds(Set, zones, ratings, zones)
    if kind == "hit":
        return st.builds(Hit, zones, st.sampled_from(HitType))
    return st.builds(Block, st.integers(0, 3), st.booleans())


@st.composite
def rounds(draw, team, number):
    kinds = draw(
        st.lists(st.sampled_from(["pass", "set", "hit", "block"]), min_size=1, max_size=4, unique=True).map(
            lambda ks: sorted(ks, key=["pass", "set", "hit", "block"].index)
        )
    )
    contacts = tuple(draw(contact(k, number == 1)) for k in kinds)
    return Round(team, number, contacts)


@st.composite
def rallies(draw, max_rounds=6):
    n = draw(st.integers(1, max_rounds))
    team = draw(st.sampled_from(Team))
    rs = []
    for k in range(1, n + 1):
        rs.append(draw(rounds(team, k)))
        team = team.other
    return Rally(
        match_id=draw(st.text(min_size=1, max_size=8)),
        level=draw(st.sampled_from(Level)),
        rally_id=draw(st.text(min_size=1, max_size=8)),
        rounds=tuple(rs),
        winner=draw(st.sampled_from(Team)),
        win_reason=draw(st.sampled_from(WinReason)),
    )
