from __future__ import annotations

import time

from mate_reid.config import TrainConfig
from mate_reid.net import BaselineEnsemble, Model, ModelParams, OptimState, init_params
from mate_reid.schemas import IcsDataset, TrainLog, TrainMode
from mate_reid.trainer.baselines import MemberPlan, TrainingPlan, build_baseline
from mate_reid.trainer.context import TrainingContext
from mate_reid.trainer.sampler import IdentityIndex
from mate_reid.trainer.stages import AssociationStage, CurriculumStage, EpochStage, FixedThresholdStage, Stage
from mate_reid.utils import get_logger, rng_stream

logger = get_logger(__name__)


def build_round_stages(mode: TrainMode) -> list[Stage]:
    """Stages executed, in order, in every training round."""
    if mode is TrainMode.MATE:
        return [CurriculumStage(), AssociationStage(), EpochStage()]
    if mode is TrainMode.MATE_NO_CT:
        return [FixedThresholdStage(), AssociationStage(), EpochStage()]
    return [EpochStage()]


def plan_training(dataset: IcsDataset, cfg: TrainConfig) -> TrainingPlan:
    if cfg.mode.is_baseline:
        return build_baseline(dataset, cfg.mode, cfg)
    return TrainingPlan(mode=cfg.mode, members=[MemberPlan(member=0, dataset=dataset, cfg=cfg)])


def train_member(plan: MemberPlan, stages: list[Stage], log: TrainLog) -> ModelParams:
    """Train one model; the init and sampler streams are keyed by the member index."""
    cfg = plan.cfg
    params = init_params(
        plan.dataset.input_dim,
        plan.dataset.label_space_sizes,
        cfg.network,
        rng_stream(cfg.seed, "init", plan.member),
    )
    context = TrainingContext(
        dataset=plan.dataset,
        cfg=cfg,
        params=params,
        opt=OptimState.from_config(cfg.optimizer),
        rng=rng_stream(cfg.seed, "sampler", plan.member),
        index=IdentityIndex.build(plan.dataset),
        log=log,
        member=plan.member,
        tick=log.records[-1].tick if log.records else 0,
    )
    for r in range(cfg.rounds):
        context.round = r
        for stage in stages:
            stage.handle(context)
    return context.params


def train(dataset: IcsDataset, cfg: TrainConfig) -> tuple[Model, TrainLog]:
    """Train a model for ``cfg.mode`` and return it with its training log.

    The result is a pure function of (dataset, cfg); only ``elapsed_seconds``
    depends on the wall clock.
    """
    dataset.validate()
    started = time.perf_counter()
    plan = plan_training(dataset, cfg)
    stages = build_round_stages(plan.mode)
    log = TrainLog(seed=cfg.seed, mode=cfg.mode)
    logger.info(
        "training %s: %d member(s), %d rounds, lambda=%.3f, seed %d",
        plan.mode.label,
        len(plan.members),
        cfg.rounds,
        plan.members[0].cfg.lam,
        cfg.seed,
    )

    members = [train_member(member, stages, log) for member in plan.members]
    model: Model = BaselineEnsemble(members=members) if plan.ensemble else members[0]
    log.elapsed_seconds = time.perf_counter() - started
    logger.info("finished %s in %.2fs", plan.mode.label, log.elapsed_seconds)
    return model, log
