# %% [markdown]
# # Inside the graph layers
# A 4-node path graph: pass -> set -> hit -> block.

# %%
import numpy as np

from volleygraph.autodiff import Tensor
from volleygraph.layers import gcn_norm, graph_transformer_layer
from volleygraph.models import ModelSpec, build_model

A = np.diag(np.ones(3), k=1)
print(A)

# %% [markdown]
# Graph convolution ignores direction and adds self-loops before normalizing.

# %%
print(np.round(gcn_norm(A), 3))

# %% [markdown]
# Edge attention: each node attends to itself and its successor, so the
# last node only sees itself.

# %%
model = build_model(ModelSpec.for_task("graph_transformer", "outcome"), seed=0)
conv = model.conv_params(model.params)
x = Tensor(np.random.default_rng(0).random((4, 44)))
out, attention, gate = graph_transformer_layer(x, A, conv, heads=4, return_details=True)
print("head 0 attention:\n", np.round(attention[0], 3))
print("gate range:", gate.min().round(3), gate.max().round(3))
