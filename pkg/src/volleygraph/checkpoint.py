"""Versioned JSON checkpoints.

Layout (keys sorted on disk, so equal contents give equal bytes)::

    {
      "format": "volleygraph-checkpoint",
      "version": 1,
      "spec": {...ModelSpec fields...},
      "seed": 0,
      "task": "outcome", "include_blocked": true,
      "config": {...TrainConfig fields...},
      "best_epoch": 12,
      "params": {"conv.w": {"shape": [44, 64], "data": [...]}, ...},
      "history": [{"epoch": 1, "train_loss": ..., "val_loss": ...}, ...]
    }
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .models import Model, ModelSpec, build_model

FORMAT = "volleygraph-checkpoint"
VERSION = 1


@dataclass
class Checkpoint:
    spec: ModelSpec
    seed: int
    params: dict[str, np.ndarray]
    task: str
    include_blocked: bool = True
    config: dict = field(default_factory=dict)
    history: list[dict] = field(default_factory=list)
    best_epoch: Optional[int] = None

    def model(self) -> Model:
        """A fresh model carrying copies of the stored parameters."""
        m = build_model(self.spec, self.seed)
        m.load_state(self.params)
        return m

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "version": VERSION,
            "spec": self.spec.to_dict(),
            "seed": self.seed,
            "task": self.task,
            "include_blocked": self.include_blocked,
            "config": self.config,
            "best_epoch": self.best_epoch,
            "params": {k: {"shape": list(v.shape), "data": v.reshape(-1).tolist()} for k, v in self.params.items()},
            "history": self.history,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "Checkpoint":
        if d.get("format") != FORMAT:
            raise ValueError("not a volleygraph checkpoint")
        if d.get("version") != VERSION:
            raise ValueError(f"unsupported checkpoint version {d.get('version')!r}")
        params = {k: np.array(v["data"], dtype=np.float64).reshape(v["shape"]) for k, v in d["params"].items()}
        return cls(
            spec=ModelSpec.from_dict(d["spec"]),
            seed=d["seed"],
            params=params,
            task=d["task"],
            include_blocked=d["include_blocked"],
            config=d.get("config", {}),
            history=d.get("history", []),
            best_epoch=d.get("best_epoch"),
        )


def save(ckpt: Checkpoint, path: Union[str, os.PathLike]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(ckpt.dumps())


def load(path: Union[str, os.PathLike]) -> Checkpoint:
    with open(path, encoding="utf-8") as fh:
        return Checkpoint.from_dict(json.load(fh))
