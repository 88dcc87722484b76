import numpy as np
import pytest
from hypothesis import given, settings

from volleygraph.encoding import (
    DESTINATION,
    HIT_TYPE,
    KIND,
    N_FEATURES,
    ONE_HOT_GROUPS,
    RATING,
    ROUND,
    SERVE,
    TEAM,
    ZONE,
    dump_graphs,
    encode_dataset,
    encode_hit_graph,
    encode_node,
    encode_outcome_graph,
    encode_set_graph,
    load_graphs,
    n_classes,
)
from volleygraph.rally import Block, Hit, HitType, Pass, ServeType, Set, Team

from conftest import make_rally
from strategies import rallies


def ones(x, group):
    return np.flatnonzero(x[group]).tolist()


def test_pre_set_hides_rating_and_destination():
    x = encode_node(Set(3, 2, 4), Team.A, 1, "pre_set")
    assert ones(x, ZONE) == [2]
    assert x[RATING].sum() == 0 and x[DESTINATION].sum() == 0
    assert sum(x[g].sum() for g in ONE_HOT_GROUPS.values()) == 2


def test_full_set_shows_rating_and_destination():
    x = encode_node(Set(3, 2, 4), Team.A, 1, "full")
    assert ones(x, RATING) == [2] and ones(x, DESTINATION) == [3]


def test_full_hit_layout():
    x = encode_node(Hit(4, HitType.POWER), Team.B, 3, "full")
    assert ones(x, KIND) == [2]
    assert ones(x, ZONE) == [3]
    assert ones(x, HIT_TYPE) == [0]
    assert x[TEAM] == 1.0 and x[ROUND] == pytest.approx(0.3)


def test_pre_hit_hides_only_hit_type():
    x = encode_node(Hit(4, HitType.TOOL), Team.A, 1, "pre_hit")
    assert x[HIT_TYPE].sum() == 0 and ones(x, ZONE) == [3]


def test_serve_type_only_in_round_one():
    p = Pass(6, 3, ServeType.JUMP)
    assert ones(encode_node(p, Team.A, 1), SERVE) == [ServeType.JUMP.index]
    assert encode_node(p, Team.A, 2)[SERVE].sum() == 0


def test_masks_do_not_touch_other_kinds():
    for c in (Pass(6, 3), Block(2, True)):
        base = encode_node(c, Team.A, 2, "full")
        for m in ("pre_set", "pre_hit"):
            assert np.array_equal(encode_node(c, Team.A, 2, m), base)
    h = Hit(4, HitType.DUMP)
    assert np.array_equal(encode_node(h, Team.A, 2, "pre_set"), encode_node(h, Team.A, 2, "full"))


def test_round_feature_clamps():
    assert encode_node(Pass(6, 3), Team.A, 14)[ROUND] == 1.0


def test_outcome_graph_four_contacts(three_round_rally):
    g = encode_outcome_graph(three_round_rally, 0)
    assert g.n_nodes == 4 and g.edges == ((0, 1), (1, 2), (2, 3))
    assert g.label == 1.0
    assert encode_outcome_graph(three_round_rally, 1).label == 0.0


def test_outcome_graph_single_pass():
    rally = make_rally([(Team.A, [Pass(6, 0)])], winner=Team.B)
    g = encode_outcome_graph(rally, 0)
    assert g.n_nodes == 1 and g.edges == () and g.label == 0.0


def test_outcome_features_ignore_winner(three_round_rally):
    flipped = make_rally(
        [(r.team, list(r.contacts)) for r in three_round_rally.rounds], winner=Team.B
    )
    for i in range(3):
        assert np.array_equal(encode_outcome_graph(three_round_rally, i).nodes, encode_outcome_graph(flipped, i).nodes)


def test_set_graph_first_round(three_round_rally):
    g = encode_set_graph(three_round_rally, 0)
    assert g.n_nodes == 2 and g.label == 3


def test_set_graph_mid_rally(three_round_rally):
    g = encode_set_graph(three_round_rally, 1)
    assert g.n_nodes == 4 and g.edges == ((0, 1), (1, 2), (2, 3))
    assert [ones(row, KIND) for row in g.nodes] == [[2], [3], [0], [1]]
    assert g.label == 2


def test_set_destination_five_is_label_four(three_round_rally):
    assert encode_set_graph(three_round_rally, 2).label == 4


def test_set_graph_absent_without_set():
    rally = make_rally([(Team.A, [Pass(6, 2), Hit(4, HitType.DUMP)])])
    assert encode_set_graph(rally, 0) is None


def test_hit_graph_with_previous_block(three_round_rally):
    g = encode_hit_graph(three_round_rally, 1)
    assert g.n_nodes == 4
    assert [ones(row, KIND) for row in g.nodes] == [[3], [0], [1], [2]]
    assert g.label == HitType.TIP.index
    assert g.nodes[2][RATING].sum() == 1  # set shown in full


def test_hit_graph_first_round(three_round_rally):
    assert encode_hit_graph(three_round_rally, 0).n_nodes == 3


def test_blocked_hit_excluded():
    rally = make_rally([(Team.A, [Pass(6, 2), Set(2, 3, 4), Hit(4, HitType.BLOCKED)])])
    assert encode_hit_graph(rally, 0, include_blocked=False) is None
    assert encode_hit_graph(rally, 0, include_blocked=True).label == 7
    assert n_classes("hit", False) == 7 and n_classes("hit", True) == 8 and n_classes("set") == 9


def test_dataset_one_graph_per_round(three_round_rally):
    ds = encode_dataset([three_round_rally], "outcome")
    assert len(ds) == 3
    assert [g.round_number for g in ds] == [1, 2, 3]


def test_dataset_skips_rounds_without_sets():
    rally = make_rally([(Team.A, [Pass(6, 2)]), (Team.B, [Pass(5, 2), Set(3, 2, 2)])])
    ds = encode_dataset([rally], "set")
    assert len(ds) == 1 and ds[0].round_number == 2


@pytest.mark.parametrize("task, blocked", [("outcome", True), ("set", True), ("hit", True), ("hit", False)])
def test_class_histogram_sums_to_graph_count(college_rallies, task, blocked):
    ds = encode_dataset(college_rallies, task, blocked)
    assert sum(ds.class_counts.values()) == len(ds)
    assert len(ds.class_counts) == max(n_classes(task, blocked), 2)


@pytest.mark.parametrize("task", ["outcome", "set", "hit"])
def test_encoding_is_deterministic(college_rallies, task):
    a, b = encode_dataset(college_rallies, task), encode_dataset(college_rallies, task)
    assert len(a) == len(b)
    for ga, gb in zip(a, b):
        assert np.array_equal(ga.nodes, gb.nodes) and ga.edges == gb.edges and ga.label == gb.label


def check_graph(g):
    assert 1 <= g.n_nodes <= 4 and g.nodes.shape[1] == N_FEATURES
    assert g.edges == tuple((i, i + 1) for i in range(g.n_nodes - 1))
    assert np.all((g.nodes >= 0) & (g.nodes <= 1))
    for row in g.nodes:
        assert row[KIND].sum() == 1
        for sl in ONE_HOT_GROUPS.values():
            assert row[sl].sum() in (0.0, 1.0)


@settings(max_examples=150, deadline=None)
@given(rallies())
def test_graph_invariants_on_arbitrary_rallies(rally):
    for task in ("outcome", "set", "hit"):
        for g in encode_dataset([rally], task, include_blocked=True):
            check_graph(g)
            if task == "set":
                assert g.nodes[-1][RATING].sum() == 0 and g.nodes[-1][DESTINATION].sum() == 0
            if task == "hit":
                assert g.nodes[-1][HIT_TYPE].sum() == 0


def test_dump_and_load_round_trip(tmp_path, college_rallies):
    graphs = encode_dataset(college_rallies[:30], "hit").graphs
    path = tmp_path / "g.txt"
    dump_graphs(path, graphs)
    back = load_graphs(path)
    assert len(back) == len(graphs)
    for a, b in zip(graphs, back):
        assert np.array_equal(a.nodes, b.nodes)
        assert (a.edges, a.label, a.rally_id, a.round_number, a.task, a.level) == (
            b.edges,
            b.label,
            b.rally_id,
            b.round_number,
            b.task,
            b.level,
        )
