"""Graph layers built on :mod:`volleygraph.autodiff`.

Graphs in a batch are stacked into one node matrix with a block-diagonal
adjacency, so every layer here works on a single dense ``(n, n)`` matrix
with ``A[i, j] = 1`` for an edge ``i -> j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .encoding import ContactGraph


@dataclass
class GraphBatch:
    x: np.ndarray  # (n, features)
    adjacency: np.ndarray  # (n, n)
    offsets: np.ndarray  # (graphs + 1,)
    labels: np.ndarray

    @property
    def n_graphs(self) -> int:
        return len(self.offsets) - 1

    @classmethod
    def from_graphs(cls, graphs: Sequence[ContactGraph]) -> "GraphBatch":
        if not graphs:
            raise ValueError("cannot batch zero graphs")
        sizes = [g.n_nodes for g in graphs]
        if min(sizes) == 0:
            raise ValueError("empty graph in batch")
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        n = int(offsets[-1])
        adj = np.zeros((n, n))
        for g, lo in zip(graphs, offsets[:-1]):
            for s, d in g.edges:
                adj[lo + s, lo + d] = 1.0
        x = np.concatenate([g.nodes for g in graphs], axis=0)
        labels = np.array([g.label for g in graphs])
        return cls(x, adj, offsets, labels)


def gcn_norm(adjacency: np.ndarray) -> np.ndarray:
    """``D^-1/2 (sym(A) + I) D^-1/2`` for a directed adjacency ``A``."""
    a_hat = ((adjacency + adjacency.T) > 0).astype(np.float64)
    np.fill_diagonal(a_hat, 1.0)
    d = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return a_hat * d[:, None] * d[None, :]


def gcn_layer(x: Tensor, adjacency: np.ndarray, w: Tensor, b: Tensor) -> Tensor:
    norm = Tensor(gcn_norm(adjacency), op="const")
    return ad.relu(ad.add(ad.matmul(norm, ad.matmul(x, w)), b))


def gru_cell(m: Tensor, h: Tensor, p: dict) -> Tensor:
    """Standard GRU update with input ``m`` and state ``h``.

    ``z = s(m Wz + h Uz + bz)``, ``r = s(m Wr + h Ur + br)``,
    ``n = tanh(m Wh + (r*h) Uh + bh)``, ``h' = (1 - z) h + z n``.
    """
    z = ad.sigmoid(ad.add(ad.add(m @ p["w_z"], h @ p["u_z"]), p["b_z"]))
    r = ad.sigmoid(ad.add(ad.add(m @ p["w_r"], h @ p["u_r"]), p["b_r"]))
    n = ad.tanh(ad.add(ad.add(m @ p["w_h"], ad.mul(r, h) @ p["u_h"]), p["b_h"]))
    return ad.add(h, ad.mul(z, ad.sub(n, h)))


def gated_graph_layer(x: Tensor, adjacency: np.ndarray, p: dict, steps: int) -> Tensor:
    """Gated graph convolution: lift, then ``steps`` rounds of message + GRU.

    Node ``i`` receives ``sum_j W_m h_j`` over its in-edges ``j -> i``.
    """
    if steps < 1:
        raise ValueError("gated_graph_layer needs steps >= 1")
    incoming = Tensor(adjacency.T, op="const")
    h = ad.add(x @ p["w_in"], p["b_in"])
    for _ in range(steps):
        m = incoming @ (h @ p["w_m"])
        h = gru_cell(m, h, p)
    return h


def attention_mask(adjacency: np.ndarray) -> np.ndarray:
    """Row ``i`` marks node ``i`` itself and the terminals of its out-edges."""
    mask = adjacency > 0
    np.fill_diagonal(mask, True)
    return mask


def attention_edges(adjacency: np.ndarray):
    """Edges of the attention mask sorted by origin, plus per-origin offsets.

    Every node owns at least its self-loop, so the offsets partition the
    edge list into one non-empty block per node.
    """
    src, dst = np.nonzero(attention_mask(adjacency))
    offsets = np.concatenate([[0], np.cumsum(np.bincount(src, minlength=adjacency.shape[0]))])
    return src, dst, offsets


def graph_transformer_layer(x: Tensor, adjacency: np.ndarray, p: dict, heads: int, return_details: bool = False):
    """Edge self-attention with a gated residual.

    The origin of each edge supplies the query and the terminal supplies key
    and value, so node ``i`` aggregates over itself and its successors.
    With ``u`` the concatenated head outputs and ``r = x W_r + b_r``::

        g  = sigmoid([u, r, u - r] W_g + b_g)
        h' = g * u + (1 - g) * r

    Scores are computed per edge (self-loops included) and normalized within
    each origin's block of edges. With ``return_details`` the dense per-head
    attention matrices and the gate values are returned alongside the output.
    """
    q = ad.add(x @ p["w_q"], p["b_q"])
    k = ad.add(x @ p["w_k"], p["b_k"])
    v = ad.add(x @ p["w_v"], p["b_v"])
    res = ad.add(x @ p["w_r"], p["b_r"])
    dim = q.shape[1]
    if heads < 1 or dim % heads:
        raise ValueError(f"hidden dim {dim} is not divisible by {heads} heads")
    dh = dim // heads
    src, dst, offsets = attention_edges(adjacency)

    # (dim, heads) indicator summing each head's slice of columns
    blocks = np.kron(np.eye(heads), np.ones((dh, 1)))
    per_edge = ad.mul(ad.take_rows(q, src), ad.take_rows(k, dst))
    scores = ad.scale(ad.matmul(per_edge, Tensor(blocks, op="const")), 1.0 / math.sqrt(dh))
    alpha = ad.segment_softmax(scores, offsets)
    weights = ad.matmul(alpha, Tensor(blocks.T, op="const"))
    u = ad.segment_reduce(ad.mul(weights, ad.take_rows(v, dst)), offsets, "sum")

    gate_in = ad.concat_cols(u, res, ad.sub(u, res))
    g = ad.sigmoid(ad.add(gate_in @ p["w_g"], p["b_g"]))
    out = ad.add(res, ad.mul(g, ad.sub(u, res)))
    if return_details:
        n = adjacency.shape[0]
        dense = np.zeros((heads, n, n))
        dense[:, src, dst] = alpha.value.T
        return out, list(dense), g.value
    return out


def global_pool(x: Tensor, offsets: Sequence[int], mode: str = "mean") -> Tensor:
    """One row per graph; ``offsets`` delimit each graph's node rows."""
    return ad.segment_reduce(x, offsets, mode)
