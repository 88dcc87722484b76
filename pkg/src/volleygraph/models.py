"""The three graph models: one graph layer, global pooling, dense head."""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, field
from typing import Optional, Union

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .encoding import N_FEATURES, Task, n_classes
from .layers import GraphBatch, gated_graph_layer, gcn_layer, global_pool, graph_transformer_layer


class Architecture(str, enum.Enum):
    GCN = "gcn"
    GRAPH_GRU = "graph_gru"
    GRAPH_TRANSFORMER = "graph_transformer"


OUTPUTS = {"sigmoid_scalar": 1, "softmax_9": 9, "softmax_8": 8, "softmax_7": 7}
POOLINGS = ("mean", "sum", "max")

# hidden widths of the dense head; the output layer comes on top
DEFAULT_HEADS = {
    Architecture.GCN: (64, 32),
    Architecture.GRAPH_GRU: (64,),
    Architecture.GRAPH_TRANSFORMER: (64,),
}


def output_for(task: Union[Task, str], include_blocked: bool = True) -> str:
    k = n_classes(task, include_blocked)
    return "sigmoid_scalar" if k == 1 else f"softmax_{k}"


@dataclass(frozen=True)
class ModelSpec:
    architecture: Architecture
    output: str
    hidden_dim: int = 64
    head_layout: Optional[tuple[int, ...]] = None
    pooling: str = "mean"
    attention_heads: int = 4
    gru_steps: int = 2
    n_features: int = N_FEATURES

    def __post_init__(self):
        object.__setattr__(self, "architecture", Architecture(self.architecture))
        if self.head_layout is None:
            object.__setattr__(self, "head_layout", DEFAULT_HEADS[self.architecture])
        else:
            object.__setattr__(self, "head_layout", tuple(int(w) for w in self.head_layout))
        self.validate()

    @classmethod
    def for_task(cls, architecture, task, include_blocked: bool = True, **kw) -> "ModelSpec":
        return cls(Architecture(architecture), output_for(task, include_blocked), **kw)

    @property
    def n_outputs(self) -> int:
        return OUTPUTS[self.output]

    def validate(self) -> None:
        if self.output not in OUTPUTS:
            raise ValueError(f"unknown output {self.output!r}")
        if self.pooling not in POOLINGS:
            raise ValueError(f"unknown pooling {self.pooling!r}")
        if self.hidden_dim < 1 or self.n_features < 1:
            raise ValueError("hidden_dim and n_features must be positive")
        want = len(DEFAULT_HEADS[self.architecture])
        if len(self.head_layout) != want:
            raise ValueError(
                f"{self.architecture.value} uses {want + 1} dense layers; head_layout needs {want} hidden widths"
            )
        if self.architecture is Architecture.GRAPH_TRANSFORMER:
            if self.attention_heads < 1 or self.hidden_dim % self.attention_heads:
                raise ValueError("hidden_dim must be divisible by attention_heads")
        if self.architecture is Architecture.GRAPH_GRU and self.gru_steps < 1:
            raise ValueError("gru_steps must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["architecture"] = self.architecture.value
        d["head_layout"] = list(self.head_layout)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(**d)


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=(fan_in, fan_out))


def _init_params(spec: ModelSpec, rng: np.random.Generator) -> dict[str, np.ndarray]:
    f, h = spec.n_features, spec.hidden_dim
    p: dict[str, np.ndarray] = {}

    def dense(name, n_in, n_out):
        p[f"{name}.w"] = _glorot(rng, n_in, n_out)
        p[f"{name}.b"] = np.zeros((1, n_out))

    arch = spec.architecture
    if arch is Architecture.GCN:
        dense("conv", f, h)
    elif arch is Architecture.GRAPH_GRU:
        p["conv.w_in"] = _glorot(rng, f, h)
        p["conv.b_in"] = np.zeros((1, h))
        p["conv.w_m"] = _glorot(rng, h, h)
        for gate in ("z", "r", "h"):
            p[f"conv.w_{gate}"] = _glorot(rng, h, h)
            p[f"conv.u_{gate}"] = _glorot(rng, h, h)
            p[f"conv.b_{gate}"] = np.zeros((1, h))
    else:
        for name in ("q", "k", "v", "r"):
            p[f"conv.w_{name}"] = _glorot(rng, f, h)
            p[f"conv.b_{name}"] = np.zeros((1, h))
        p["conv.w_g"] = _glorot(rng, 3 * h, h)
        p["conv.b_g"] = np.zeros((1, h))

    width = h
    for i, w in enumerate(spec.head_layout):
        dense(f"dense{i}", width, w)
        width = w
    dense("out", width, spec.n_outputs)
    return p


@dataclass
class Model:
    spec: ModelSpec
    seed: int
    params: dict[str, Tensor] = field(default_factory=dict)

    def conv_params(self, params: dict[str, Tensor]) -> dict[str, Tensor]:
        return {k.split(".", 1)[1]: v for k, v in params.items() if k.startswith("conv.")}

    def forward(self, batch: GraphBatch, params: Optional[dict[str, Tensor]] = None) -> Tensor:
        """Per-graph output rows: probabilities (sigmoid or softmax)."""
        p = self.params if params is None else params
        spec = self.spec
        x = Tensor(batch.x, op="input")
        conv = self.conv_params(p)
        if spec.architecture is Architecture.GCN:
            h = gcn_layer(x, batch.adjacency, conv["w"], conv["b"])
        elif spec.architecture is Architecture.GRAPH_GRU:
            h = gated_graph_layer(x, batch.adjacency, conv, spec.gru_steps)
        else:
            h = graph_transformer_layer(x, batch.adjacency, conv, spec.attention_heads)
        z = global_pool(h, batch.offsets, spec.pooling)
        for i in range(len(spec.head_layout)):
            z = ad.relu(ad.add(z @ p[f"dense{i}.w"], p[f"dense{i}.b"]))
        logits = ad.add(z @ p["out.w"], p["out.b"])
        if spec.output == "sigmoid_scalar":
            return ad.sigmoid(logits)
        return ad.softmax_rows(logits)

    def loss(self, batch: GraphBatch, params: Optional[dict[str, Tensor]] = None) -> Tensor:
        """MSE for the sigmoid output, cross-entropy for softmax outputs."""
        out = self.forward(batch, params)
        if self.spec.output == "sigmoid_scalar":
            return ad.mse(out, batch.labels.reshape(-1, 1))
        return ad.cross_entropy(out, batch.labels)

    def predict(self, batch: GraphBatch) -> np.ndarray:
        out = self.forward(batch).value
        return out[:, 0] if self.spec.output == "sigmoid_scalar" else out

    def parameters(self) -> list[Tensor]:
        return list(self.params.values())

    def n_parameters(self) -> int:
        return sum(t.value.size for t in self.params.values())

    def flat(self) -> np.ndarray:
        return np.concatenate([t.value.reshape(-1) for t in self.params.values()])

    def unflatten(self, vec: Tensor) -> dict[str, Tensor]:
        """Split a ``(1, P)`` tensor into parameter-shaped views that stay on the tape."""
        out, pos = {}, 0
        for name, t in self.params.items():
            n = t.value.size
            out[name] = ad.reshape(ad.slice_cols(vec, pos, pos + n), t.shape)
            pos += n
        return out

    def state(self) -> dict[str, np.ndarray]:
        return {k: t.value.copy() for k, t in self.params.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        for k, t in self.params.items():
            v = np.asarray(state[k], dtype=np.float64)
            if v.shape != t.shape:
                raise ValueError(f"parameter {k}: shape {v.shape} != {t.shape}")
            t.value = v.copy()


def build_model(spec: ModelSpec, seed: int = 0) -> Model:
    rng = np.random.default_rng(seed)
    values = _init_params(spec, rng)
    params = {k: ad.parameter(v, name=k) for k, v in values.items()}
    return Model(spec, seed, params)


def model_grad_check(model: Model, batch: GraphBatch, step: float = 1e-5) -> float:
    """Max relative error of backprop vs central differences over all parameters."""
    return ad.grad_check(lambda vec: model.loss(batch, model.unflatten(vec)), model.flat().reshape(1, -1), step)
