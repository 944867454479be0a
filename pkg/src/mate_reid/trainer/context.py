from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from mate_reid.config import TrainConfig
from mate_reid.net import ModelParams, OptimState
from mate_reid.schemas import AssociationPair, IcsDataset, Identity, MultiLabelSet, TrainLog
from mate_reid.trainer.sampler import IdentityIndex


@dataclass(slots=True)
class TrainingContext:
    """Mutable state that flows through the training stages of one model."""

    dataset: IcsDataset
    cfg: TrainConfig
    params: ModelParams
    opt: OptimState
    rng: np.random.Generator
    index: IdentityIndex
    log: TrainLog
    member: int = 0
    round: int = 0
    tick: int = 0
    tau: Optional[float] = None
    pairs: set[AssociationPair] = field(default_factory=set)
    multilabels: Optional[dict[Identity, MultiLabelSet]] = None
    warned_no_ground_truth: bool = False

    @property
    def is_final_round(self) -> bool:
        return self.round == self.cfg.rounds - 1

    def next_tick(self) -> int:
        """Logical timestamp: one increment per logged event."""
        self.tick += 1
        return self.tick
