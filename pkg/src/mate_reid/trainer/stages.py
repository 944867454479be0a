"""Training stages.

A round is a fixed sequence of stages sharing one TrainingContext: the threshold
stage picks tau, the association stage rebuilds the multi-label sets and the
epoch stage runs the SGD epochs of the round. Baselines only run the epoch stage.
"""

from __future__ import annotations

import math

from mate_reid.assoc import associate_cycles, association_metrics, curriculum_threshold
from mate_reid.errors import NumericError
from mate_reid.net import loss_and_gradients, sgd_step
from mate_reid.schemas import LogRecord
from mate_reid.trainer.context import TrainingContext
from mate_reid.trainer.sampler import balanced_minibatch, batch_size
from mate_reid.utils import get_logger

logger = get_logger(__name__)


class Stage:
    """Base class; subclasses implement ``handle``."""

    def __init__(self, id: str) -> None:
        self.id = id

    def handle(self, context: TrainingContext) -> None:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}(id={self.id!r})"


class CurriculumStage(Stage):
    """Anneals tau from tau_lower towards tau_upper across rounds."""

    def __init__(self, id: str = "curriculum") -> None:
        super().__init__(id=id)

    def handle(self, context: TrainingContext) -> None:
        context.tau = curriculum_threshold(context.cfg.schedule, context.round)


class FixedThresholdStage(Stage):
    """Keeps tau at tau_lower in every round (no curriculum)."""

    def __init__(self, id: str = "fixed-threshold") -> None:
        super().__init__(id=id)

    def handle(self, context: TrainingContext) -> None:
        context.tau = context.cfg.tau_lower


class AssociationStage(Stage):
    def __init__(self, id: str = "association") -> None:
        super().__init__(id=id)

    def handle(self, context: TrainingContext) -> None:
        if context.tau is None:
            raise RuntimeError("association stage reached without a threshold")
        pairs, multilabels = associate_cycles(
            context.params,
            context.dataset,
            context.cfg.cycle_length,
            context.tau,
            max_workers=context.cfg.association_workers,
        )
        context.pairs, context.multilabels = pairs, multilabels

        record = LogRecord(
            member=context.member,
            kind="association",
            round=context.round,
            tick=context.next_tick(),
            tau=context.tau,
            predicted_pairs=len(pairs),
        )
        if context.dataset.has_ground_truth():
            report = association_metrics(pairs, context.dataset)
            record.correct_pairs = report.correct_pairs
            record.ground_truth_pairs = report.ground_truth_pairs
            record.precision = report.precision
            record.recall = report.recall
            logger.info(
                "round %d: tau=%.4f, %d pairs, precision %.3f, recall %.3f",
                context.round,
                context.tau,
                len(pairs),
                report.precision,
                report.recall,
            )
        else:
            if not context.warned_no_ground_truth:
                logger.warning("dataset has no global ids; association precision/recall are not logged")
                context.warned_no_ground_truth = True
            logger.info("round %d: tau=%.4f, %d pairs", context.round, context.tau, len(pairs))
        context.log.records.append(record)


class EpochStage(Stage):
    """Runs the round's epochs of balanced mini-batch SGD on L_mt + lambda * L_ml."""

    def __init__(self, id: str = "epochs") -> None:
        super().__init__(id=id)

    def handle(self, context: TrainingContext) -> None:
        cfg = context.cfg
        dataset = context.dataset
        expected = cfg.sampler.identities_per_camera * cfg.sampler.images_per_identity
        batches = math.ceil(len(dataset.train_samples()) / batch_size(dataset, cfg.sampler))
        lam = cfg.lam if context.multilabels is not None else 0.0

        for epoch in range(cfg.epochs_in_round(context.round)):
            totals = [0.0, 0.0, 0.0]
            for b in range(batches):
                batch = balanced_minibatch(dataset, cfg.sampler, context.rng, context.index)
                counts = batch.per_camera_counts
                if len(counts) != dataset.M or any(n != expected for n in counts.values()):
                    raise RuntimeError(f"unbalanced mini-batch composition {counts}")
                try:
                    breakdown, grads = loss_and_gradients(context.params, batch, context.multilabels, lam)
                except NumericError as exc:
                    coordinates = {"member": context.member, "round": context.round, "epoch": epoch, "batch": b}
                    raise NumericError(
                        f"{exc} at member {context.member}, round {context.round}, epoch {epoch}, batch {b}",
                        layer=exc.layer,
                        coordinates=coordinates,
                    ) from exc
                context.params = sgd_step(context.params, grads, context.opt)
                totals[0] += breakdown.total
                totals[1] += breakdown.mt
                totals[2] += breakdown.ml or 0.0

            record = LogRecord(
                member=context.member,
                kind="epoch",
                round=context.round,
                tick=context.next_tick(),
                epoch=epoch,
                tau=context.tau,
                loss_total=totals[0] / batches,
                loss_mt=totals[1] / batches,
                loss_ml=totals[2] / batches if lam > 0.0 else None,
                batches=batches,
            )
            context.log.records.append(record)
            logger.debug(
                "member %d round %d epoch %d: loss %.5f", context.member, context.round, epoch, record.loss_total
            )
