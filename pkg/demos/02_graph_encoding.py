# %% [markdown]
# # From rounds to graphs
# Every contact is a node; consecutive contacts are joined by one-way edges.
# Each task picks its own nodes and hides the answer it asks for.

# %%
import numpy as np

from volleygraph.encoding import DESTINATION, HIT_TYPE, RATING, encode_dataset, encode_hit_graph, encode_outcome_graph, encode_set_graph
from volleygraph.rally import Block, Hit, HitType, Level, Pass, Rally, Round, ServeType, Set, Team

rally = Rally(
    "demo",
    Level.COLLEGE,
    "demo-1",
    (
        Round(Team.A, 1, (Pass(6, 2, ServeType.JUMP), Set(2, 3, 4), Hit(4, HitType.POWER), Block(2, True))),
        Round(Team.B, 2, (Pass(5, 3), Set(3, 2, 3), Hit(3, HitType.TIP), Block(1, False))),
    ),
    Team.B,
)

kinds = ["pass", "set", "hit", "block"]
names = lambda g: [kinds[int(np.argmax(row[:4]))] for row in g.nodes]

# %%
g = encode_outcome_graph(rally, 1)
print("outcome:", names(g), "edges", g.edges, "label", g.label)

# %% [markdown]
# The set graph of round 2 starts with the previous round's hit and block.
# The set node keeps the setter zone but not its rating or destination.

# %%
g = encode_set_graph(rally, 1)
print("set:", names(g), "label (destination - 1)", g.label)
print("set node rating/destination features:", g.nodes[-1][RATING], g.nodes[-1][DESTINATION])

# %%
g = encode_hit_graph(rally, 1)
print("hit:", names(g), "label", g.label, "=", HitType.from_index(g.label).value)
print("hit node hit-type features:", g.nodes[-1][HIT_TYPE])

# %% [markdown]
# A whole dataset, with its class histogram.

# %%
from volleygraph.synth import college_profile, generate

ds = encode_dataset(generate(college_profile(), 500, seed=1), "hit", include_blocked=False)
print(len(ds), "graphs;", ds.class_counts)
