"""Contact-level graph encoding of rounds.

Each contact becomes a node with a fixed-width feature vector; consecutive
contacts are joined by one-way unit-weight edges. Three task encoders choose
which contacts enter the graph and hide the information being predicted.

Feature layout (``N_FEATURES`` = 44)::

    0..3    contact kind one-hot (pass, set, hit, block)
    4       team flag (0 = A, 1 = B)
    5       round number / 10, clamped to 1
    6..14   contact zone one-hot (passer / setter / hitter zone)
    15..18  rating one-hot (pass or set rating)
    19..26  hit type one-hot
    27..30  number of blockers one-hot
    31..33  serve type one-hot (first-round pass only)
    34..42  set destination one-hot
    43      block touched flag
"""

from __future__ import annotations

import enum
import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .rally import (
    CONTACT_ORDER,
    N_ZONES,
    Block,
    Contact,
    Hit,
    HitType,
    Pass,
    Rally,
    Round,
    ServeType,
    Set,
    Team,
)

log = logging.getLogger(__name__)

KIND = slice(0, 4)
TEAM = 4
ROUND = 5
ZONE = slice(6, 15)
RATING = slice(15, 19)
HIT_TYPE = slice(19, 27)
BLOCKERS = slice(27, 31)
SERVE = slice(31, 34)
DESTINATION = slice(34, 43)
TOUCHED = 43
N_FEATURES = 44

ONE_HOT_GROUPS = {
    "kind": KIND,
    "zone": ZONE,
    "rating": RATING,
    "hit_type": HIT_TYPE,
    "blockers": BLOCKERS,
    "serve": SERVE,
    "destination": DESTINATION,
}

N_HIT_CLASSES = len(HitType)
N_SET_CLASSES = N_ZONES


class Mask(str, enum.Enum):
    FULL = "full"
    PRE_SET = "pre_set"
    PRE_HIT = "pre_hit"


class Task(str, enum.Enum):
    OUTCOME = "outcome"
    SET = "set"
    HIT = "hit"


def n_classes(task: Union[Task, str], include_blocked: bool = True) -> int:
    """Output width for a task; 1 for the binary outcome task."""
    task = Task(task)
    if task is Task.OUTCOME:
        return 1
    if task is Task.SET:
        return N_SET_CLASSES
    return N_HIT_CLASSES if include_blocked else N_HIT_CLASSES - 1


@dataclass(frozen=True)
class ContactGraph:
    nodes: np.ndarray  # (n, N_FEATURES)
    edges: tuple[tuple[int, int], ...]
    label: Union[int, float]
    rally_id: str = ""
    round_number: int = 0
    task: str = ""
    level: str = ""

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_nodes, self.n_nodes))
        for s, d in self.edges:
            a[s, d] = 1.0
        return a


def encode_node(contact: Contact, team: Team, round_number: int, mask: Union[Mask, str] = Mask.FULL) -> np.ndarray:
    """Feature vector of one contact.

    ``pre_set`` hides a Set's rating and destination, ``pre_hit`` hides a
    Hit's type; either mask leaves other contact kinds untouched. The serve
    type is only encoded on a first-round pass.
    """
    mask = Mask(mask)
    x = np.zeros(N_FEATURES)
    kind = next(k for k, cls in enumerate(CONTACT_ORDER) if isinstance(contact, cls))
    x[KIND.start + kind] = 1.0
    x[TEAM] = 1.0 if team == Team.B else 0.0
    x[ROUND] = min(round_number / 10.0, 1.0)

    if isinstance(contact, Pass):
        x[ZONE.start + contact.zone - 1] = 1.0
        x[RATING.start + contact.rating] = 1.0
        if contact.serve_type is not None and round_number == 1:
            x[SERVE.start + ServeType(contact.serve_type).index] = 1.0
    elif isinstance(contact, Set):
        x[ZONE.start + contact.zone - 1] = 1.0
        if mask is not Mask.PRE_SET:
            x[RATING.start + contact.rating] = 1.0
            x[DESTINATION.start + contact.destination - 1] = 1.0
    elif isinstance(contact, Hit):
        x[ZONE.start + contact.zone - 1] = 1.0
        if mask is not Mask.PRE_HIT:
            x[HIT_TYPE.start + contact.hit_type.index] = 1.0
    elif isinstance(contact, Block):
        x[BLOCKERS.start + contact.blockers] = 1.0
        x[TOUCHED] = 1.0 if contact.touched else 0.0
    return x


def _chain(
    items: Sequence[tuple[Contact, Round, Mask]],
    label,
    rally: Rally,
    rnd: Round,
    task: Task,
) -> ContactGraph:
    nodes = np.stack([encode_node(c, r.team, r.number, m) for c, r, m in items])
    edges = tuple((i, i + 1) for i in range(len(items) - 1))
    return ContactGraph(nodes, edges, label, rally.rally_id, rnd.number, task.value, rally.level.value)


def encode_outcome_graph(rally: Rally, round_index: int) -> ContactGraph:
    rnd = rally.rounds[round_index]
    items = [(c, rnd, Mask.FULL) for c in rnd.contacts]
    label = 1.0 if rally.winner == rnd.team else 0.0
    return _chain(items, label, rally, rnd, Task.OUTCOME)


def encode_set_graph(rally: Rally, round_index: int) -> Optional[ContactGraph]:
    rnd = rally.rounds[round_index]
    st = rnd.find(Set)
    if st is None:
        return None
    items = []
    if round_index > 0:
        prev = rally.rounds[round_index - 1]
        for kind in (Hit, Block):
            c = prev.find(kind)
            if c is not None:
                items.append((c, prev, Mask.FULL))
    ps = rnd.find(Pass)
    if ps is not None:
        items.append((ps, rnd, Mask.FULL))
    items.append((st, rnd, Mask.PRE_SET))
    return _chain(items, st.destination - 1, rally, rnd, Task.SET)


def encode_hit_graph(rally: Rally, round_index: int, include_blocked: bool = True) -> Optional[ContactGraph]:
    rnd = rally.rounds[round_index]
    hit = rnd.find(Hit)
    if hit is None:
        return None
    if not include_blocked and hit.hit_type is HitType.BLOCKED:
        return None
    items = []
    if round_index > 0:
        prev = rally.rounds[round_index - 1]
        blk = prev.find(Block)
        if blk is not None:
            items.append((blk, prev, Mask.FULL))
    for kind in (Pass, Set):
        c = rnd.find(kind)
        if c is not None:
            items.append((c, rnd, Mask.FULL))
    items.append((hit, rnd, Mask.PRE_HIT))
    # blocked is the last class, so the excluded-mode labels need no remapping
    return _chain(items, hit.hit_type.index, rally, rnd, Task.HIT)


@dataclass
class GraphDataset:
    """Encoded graphs for one task plus their class histogram."""

    graphs: list[ContactGraph]
    task: Task
    include_blocked: bool = True
    class_counts: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.graphs)

    def __iter__(self):
        return iter(self.graphs)

    def __getitem__(self, i):
        return self.graphs[i]

    @property
    def n_classes(self) -> int:
        return n_classes(self.task, self.include_blocked)


def encode_dataset(rallies: Sequence[Rally], task: Union[Task, str], include_blocked: bool = True) -> GraphDataset:
    """Encode every round of every rally, in rally then round order."""
    task = Task(task)
    graphs = []
    for rally in rallies:
        for i in range(len(rally.rounds)):
            if task is Task.OUTCOME:
                g = encode_outcome_graph(rally, i)
            elif task is Task.SET:
                g = encode_set_graph(rally, i)
            else:
                g = encode_hit_graph(rally, i, include_blocked)
            if g is not None:
                graphs.append(g)
    counts = Counter(int(g.label) for g in graphs)
    k = max(n_classes(task, include_blocked), 2)
    class_counts = {c: counts.get(c, 0) for c in range(k)}
    log.info("encoded %d %s graphs from %d rallies; class counts %s", len(graphs), task.value, len(rallies), class_counts)
    return GraphDataset(graphs, task, include_blocked, class_counts)


def format_graph(g: ContactGraph, index: int) -> str:
    """Plain-text block for one graph; layout described in docs/graphs.md."""
    label = f"{g.label:g}" if isinstance(g.label, float) else str(g.label)
    lines = [
        f"graph {index} rally={g.rally_id} round={g.round_number} task={g.task} level={g.level} label={label}",
        f"nodes {g.n_nodes}",
    ]
    lines += [" ".join(f"{v:g}" for v in row) for row in g.nodes]
    lines.append(f"edges {len(g.edges)}")
    lines += [f"{s} {d}" for s, d in g.edges]
    return "\n".join(lines)


def dump_graphs(path: Union[str, os.PathLike], graphs: Sequence[ContactGraph]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for i, g in enumerate(graphs):
            fh.write(format_graph(g, i))
            fh.write("\n\n")


def load_graphs(path: Union[str, os.PathLike]) -> list[ContactGraph]:
    """Inverse of :func:`dump_graphs`."""
    graphs = []
    with open(path, encoding="utf-8") as fh:
        blocks = [b for b in fh.read().split("\n\n") if b.strip()]
    for block in blocks:
        lines = block.strip().split("\n")
        meta = dict(tok.split("=", 1) for tok in lines[0].split()[2:])
        n = int(lines[1].split()[1])
        nodes = np.array([[float(v) for v in ln.split()] for ln in lines[2 : 2 + n]]).reshape(n, N_FEATURES)
        m = int(lines[2 + n].split()[1])
        edges = tuple(tuple(int(v) for v in ln.split()) for ln in lines[3 + n : 3 + n + m])
        label = float(meta["label"]) if meta["task"] == Task.OUTCOME.value else int(meta["label"])
        graphs.append(
            ContactGraph(nodes, edges, label, meta["rally"], int(meta["round"]), meta["task"], meta["level"])
        )
    return graphs
