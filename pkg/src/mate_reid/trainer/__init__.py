from mate_reid.trainer.baselines import TrainingPlan, build_baseline, merged_label_space, single_camera_view
from mate_reid.trainer.log import (
    STATS_COLUMNS,
    association_stats_from_log,
    read_train_log,
    write_association_stats,
    write_train_log,
)
from mate_reid.trainer.pipeline import build_round_stages, train
from mate_reid.trainer.sampler import balanced_minibatch

__all__ = [
    "STATS_COLUMNS",
    "TrainingPlan",
    "association_stats_from_log",
    "balanced_minibatch",
    "build_baseline",
    "build_round_stages",
    "merged_label_space",
    "read_train_log",
    "single_camera_view",
    "train",
    "write_association_stats",
    "write_train_log",
]
