# %% [markdown]
# # The autodiff engine
# Values are 2-D float64 arrays; `backward` fills `.grad` on every leaf.

# %%
import numpy as np

from volleygraph import autodiff as ad

x = ad.parameter([[0.0, 1.0, -2.0]])
y = ad.sum_all(ad.sigmoid(x))
ad.backward(y)
print("sigmoid'(x):", x.grad)   # 0.25 at zero

# %% [markdown]
# Gradients accumulate on leaves until they are cleared.

# %%
ad.backward(ad.sum_all(ad.sigmoid(x)))
print("after a second backward:", x.grad)
x.zero_grad()

# %% [markdown]
# `grad_check` compares backprop with central differences.

# %%
rng = np.random.default_rng(0)
a = rng.standard_normal((3, 3))
f = lambda v: ad.cross_entropy(ad.softmax_rows(ad.matmul(v, ad.Tensor(a))), [2])
print("max relative error:", ad.grad_check(f, rng.standard_normal((1, 3))))

# %% [markdown]
# The same check on a whole model, as `volleygraph gradcheck` does.

# %%
from volleygraph.cli import gradcheck_error

for arch in ("gcn", "graph_gru", "graph_transformer"):
    print(arch, f"{gradcheck_error(arch, task='set'):.2e}")
