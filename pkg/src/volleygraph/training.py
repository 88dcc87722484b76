"""Dataset splitting, the training loop, and evaluation."""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import asdict, dataclass, fields
from typing import Optional, Sequence, Union

import numpy as np

from . import autodiff as ad
from . import metrics
from .checkpoint import Checkpoint
from .encoding import ContactGraph, Task, n_classes
from .layers import GraphBatch
from .models import Architecture, Model, ModelSpec, build_model
from .rally import Rally

log = logging.getLogger(__name__)

EVAL_BATCH = 128


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    task: str = "outcome"
    architecture: str = "graph_transformer"
    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 10
    seed: int = 0
    include_blocked: bool = True
    hidden_dim: int = 64
    attention_heads: int = 4
    gru_steps: int = 2
    pooling: str = "mean"

    def __post_init__(self):
        self.task = Task(self.task).value
        self.architecture = Architecture(self.architecture).value
        if self.learning_rate <= 0 or self.batch_size < 1 or self.patience < 1:
            raise ValueError("learning_rate, batch_size and patience must be positive")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")

    def model_spec(self) -> ModelSpec:
        return ModelSpec.for_task(
            self.architecture,
            self.task,
            self.include_blocked,
            hidden_dim=self.hidden_dim,
            attention_heads=self.attention_heads,
            gru_steps=self.gru_steps,
            pooling=self.pooling,
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path: Union[str, os.PathLike], **overrides) -> "TrainConfig":
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        d.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(d)


def split_dataset(rallies: Sequence[Rally], ratios=(0.8, 0.1, 0.1), seed: int = 0):
    """Shuffle rallies and cut them into train/val/test lists.

    Validation and test sizes are floored; the remainder goes to training.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or min(ratios) <= 0 or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("ratios must be three positive numbers summing to 1")
    n = len(rallies)
    n_val = int(math.floor(n * ratios[1] + 1e-9))
    n_test = int(math.floor(n * ratios[2] + 1e-9))
    n_train = n - n_val - n_test
    if min(n_train, n_val, n_test) < 1:
        raise ValueError(f"{n} rallies are too few for non-empty splits with ratios {ratios}")
    order = np.random.default_rng(seed).permutation(n)
    pick = lambda idx: [rallies[i] for i in idx]
    return pick(order[:n_train]), pick(order[n_train : n_train + n_val]), pick(order[n_train + n_val :])


class Adam:
    """Adaptive moment estimation over a fixed list of parameter tensors."""

    def __init__(self, params: Sequence[ad.Tensor], lr: float = 1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]
        self.t = 0

    def step(self) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.value = p.value - self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _batches(graphs: Sequence[ContactGraph], size: int, order=None):
    idx = np.arange(len(graphs)) if order is None else order
    for lo in range(0, len(idx), size):
        yield GraphBatch.from_graphs([graphs[i] for i in idx[lo : lo + size]])


def dataset_loss(model: Model, graphs: Sequence[ContactGraph], batch_size: int = EVAL_BATCH) -> float:
    total = 0.0
    for b in _batches(graphs, batch_size):
        total += model.loss(b).item() * b.n_graphs
    return total / len(graphs)


def predict(model: Model, graphs: Sequence[ContactGraph], batch_size: int = EVAL_BATCH) -> np.ndarray:
    return np.concatenate([model.predict(b) for b in _batches(graphs, batch_size)], axis=0)


def train(config: TrainConfig, train_graphs: Sequence[ContactGraph], val_graphs: Sequence[ContactGraph]):
    """Minibatch Adam with early stopping on validation loss.

    Returns ``(checkpoint, history)``; the checkpoint holds the parameters of
    the epoch with the lowest validation loss (the initialization when
    ``max_epochs`` is 0).
    """
    if not train_graphs or not val_graphs:
        raise ValueError("train and validation sets must be non-empty")
    expected = config.task
    for g in (train_graphs[0], val_graphs[0]):
        if g.task and g.task != expected:
            raise ValueError(f"graphs encode task {g.task!r}, config trains {expected!r}")

    spec = config.model_spec()
    model = build_model(spec, config.seed)
    opt = Adam(model.parameters(), lr=config.learning_rate)
    rng = np.random.default_rng(config.seed + 1)

    best_state, best_loss, best_epoch = model.state(), math.inf, None
    stale = 0
    history: list[dict] = []
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(train_graphs))
        total = 0.0
        for k, batch in enumerate(_batches(train_graphs, config.batch_size, order)):
            ad.zero_grad(model.parameters())
            try:
                loss = model.loss(batch)
                ad.backward(loss)
            except FloatingPointError as exc:
                raise TrainingDiverged(f"non-finite values at epoch {epoch}, batch {k}: {exc}") from None
            if not math.isfinite(loss.item()):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}, batch {k}")
            opt.step()
            total += loss.item() * batch.n_graphs
        train_loss = total / len(train_graphs)
        val_loss = dataset_loss(model, val_graphs)
        history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
        log.info("epoch %d train %.5f val %.5f", epoch, train_loss, val_loss)
        if val_loss < best_loss:
            best_loss, best_epoch, best_state, stale = val_loss, epoch, model.state(), 0
        else:
            stale += 1
            if stale >= config.patience:
                break

    ckpt = Checkpoint(
        spec=spec,
        seed=config.seed,
        params=best_state,
        task=config.task,
        include_blocked=config.include_blocked,
        config=config.to_dict(),
        history=history,
        best_epoch=best_epoch,
    )
    return ckpt, history


MODEL_NAMES = {
    "gcn": "GCN",
    "graph_gru": "Graph GRU",
    "graph_transformer": "Graph Transformer",
}


@dataclass
class MetricsReport:
    task: str
    level: str
    model: str
    n: int
    metrics: dict
    include_blocked: bool = True
    confusion: Optional[list] = None

    def to_dict(self) -> dict:
        return asdict(self)


def compute_metrics(task: str, probs: np.ndarray, labels: np.ndarray, include_blocked: bool = True) -> tuple[dict, Optional[list]]:
    if Task(task) is Task.OUTCOME:
        labels = labels.astype(float)
        try:
            auc = metrics.auc(probs, labels)
        except ValueError:
            auc = float("nan")
        return {
            "binary_accuracy": metrics.binary_accuracy(probs, labels),
            "auc": auc,
            "brier": metrics.brier(probs, labels),
            "mae": metrics.mae(probs, labels),
        }, None
    k = n_classes(task, include_blocked)
    cm = metrics.confusion_matrix(probs, labels, k)
    return {"categorical_accuracy": metrics.categorical_accuracy(probs, labels)}, cm.tolist()


def evaluate(ckpt: Checkpoint, graphs: Sequence[ContactGraph], group_by: Optional[str] = None) -> list[MetricsReport]:
    """Metrics for a checkpoint on test graphs.

    With ``group_by="level"`` one report per level of play is produced;
    otherwise a single pooled report tagged ``all`` (or the one level present).
    The checkpoint itself is never modified.
    """
    if not graphs:
        raise ValueError("no graphs to evaluate")
    for g in graphs:
        if g.task and g.task != ckpt.task:
            raise ValueError(f"checkpoint predicts {ckpt.task!r} but graphs encode {g.task!r}")
    model = ckpt.model()
    probs = predict(model, graphs)
    labels = np.array([g.label for g in graphs])
    levels = np.array([g.level for g in graphs])
    name = MODEL_NAMES[ckpt.spec.architecture.value]

    if group_by == "level":
        groups = [(lv, levels == lv) for lv in sorted(set(levels))]
    elif group_by is None:
        uniq = sorted(set(levels))
        groups = [(uniq[0] if len(uniq) == 1 else "all", np.ones(len(graphs), dtype=bool))]
    else:
        raise ValueError(f"unknown group_by {group_by!r}")

    reports = []
    for level, sel in groups:
        vals, cm = compute_metrics(ckpt.task, probs[sel], labels[sel], ckpt.include_blocked)
        reports.append(MetricsReport(ckpt.task, level, name, int(sel.sum()), vals, ckpt.include_blocked, cm))
    return reports


COLUMNS = {
    "outcome": ["Level of game", "Model", "Binary Accuracy(%)", "AUC", "Brier Score", "Mean Absolute Error"],
    "set": ["Level of game", "Model", "Categorical Accuracy(%)"],
    "hit": ["Level of game", "Blocked hits", "Model", "Categorical accuracy(%)"],
}


def _fmt(x: float) -> str:
    return "n/a" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:.2f}"


def report_row(r: MetricsReport) -> list[str]:
    m = r.metrics
    if r.task == "outcome":
        return [r.level, r.model, _fmt(100 * m["binary_accuracy"]), _fmt(m["auc"]), _fmt(m["brier"]), _fmt(m["mae"])]
    acc = _fmt(100 * m["categorical_accuracy"])
    if r.task == "set":
        return [r.level, r.model, acc]
    return [r.level, "included" if r.include_blocked else "excluded", r.model, acc]


def format_table(reports: Sequence[MetricsReport]) -> str:
    """Plain-text table with the column layout of the published result tables."""
    if not reports:
        return ""
    task = reports[0].task
    if any(r.task != task for r in reports):
        raise ValueError("a table holds a single task")
    header = COLUMNS[task]
    rows = [report_row(r) for r in reports]
    widths = [max(len(h), *(len(row[i]) for row in rows)) for i, h in enumerate(header)]
    line = lambda cells: " | ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()
    sep = "-+-".join("-" * w for w in widths)
    return "\n".join([line(header), sep, *(line(r) for r in rows)])


def majority_baseline(train_graphs: Sequence[ContactGraph], test_graphs: Sequence[ContactGraph]) -> float:
    """Accuracy of always predicting the most frequent training label."""
    train_labels = np.array([int(g.label) for g in train_graphs])
    test_labels = np.array([int(g.label) for g in test_graphs])
    majority = np.bincount(train_labels).argmax()
    return float(np.mean(test_labels == majority))


def accuracy(task: str, probs: np.ndarray, graphs: Sequence[ContactGraph]) -> float:
    labels = np.array([g.label for g in graphs])
    if Task(task) is Task.OUTCOME:
        return metrics.binary_accuracy(probs, labels)
    return metrics.categorical_accuracy(probs, labels)
