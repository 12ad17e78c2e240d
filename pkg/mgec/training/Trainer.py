import logging

import numpy as np

from mgec.losses.loss_functions import ce_loss, expert_load
from mgec.losses.totals import Batch, routed_total, shared_total
from mgec.models.ModelPair import ModelPair, evaluate_pair
from mgec.models.RoutedModel import RoutedModel
from mgec.models.SharedModel import SharedModel
from mgec.numerics.AdamOptimizer import AdamOptimizer
from mgec.training.alignment import alignment_errors
from mgec.training.history import EarlyStopping, EpochRecord, TrainResult, coefficient_of_variation
from mgec.training.pairing import jel_batch_pairs
from mgec.utils.errors import ConfigurationError, TrainingAbort
from mgec.utils.rng import keyed_rng

logger = logging.getLogger(__name__)

# sub-streams of the run seed
INIT_STREAM, SHUFFLE_STREAM, AUGMENT_STREAM, REINIT_STREAM = 0, 1, 2, 3


class _EpochStats(object):
    """Running sums over the batches of one epoch."""

    def __init__(self, n_experts):
        self.n = 0
        self.shared = {}
        self.routed = {}
        self.selected = np.zeros(n_experts)
        self.subject_weights = {}
        self.subject_counts = {}
        self.temporal = 0

    @staticmethod
    def _add(sums, report, n):
        for name in report.active:
            sums[name] = sums.get(name, 0.0) + report.components[name] * n
        sums["total"] = sums.get("total", 0.0) + report.total * n
        sums["plain_ce"] = sums.get("plain_ce", 0.0) + report.plain_ce * n

    def add(self, batch, shared_report, routed_report, n_temporal):
        n = len(batch)
        self.n += n
        self.temporal += n_temporal
        if shared_report is not None:
            self._add(self.shared, shared_report, n)
        if routed_report is not None:
            self._add(self.routed, routed_report, n)
            weights = routed_report.routing.weights
            self.selected += (weights > 0).sum(axis=0)
            for dom in np.unique(batch.domain_ids).tolist():
                rows = batch.domain_ids == dom
                self.subject_weights[dom] = self.subject_weights.get(dom, 0.0) + weights[rows].sum(axis=0)
                self.subject_counts[dom] = self.subject_counts.get(dom, 0) + int(rows.sum())

    def means(self, sums):
        return {name: value / self.n for name, value in sorted(sums.items())}

    def subject_entropy(self):
        entropies = []
        for dom in sorted(self.subject_weights):
            p = self.subject_weights[dom] / self.subject_counts[dom]
            p = p[p > 0]
            entropies.append(float(-np.sum(p * np.log(p))))
        return float(np.mean(entropies))


class Trainer(object):
    """Co-trains the shared-expert and routed-expert models.

    Parameters
    ----------
    train_set : Dataset
    val_set : Dataset
        Early-stopping and diagnostic set, never used for updates
    config : TrainConfig
    teacher : TeacherRecord or None
        Enables the alignment-error diagnostics
    epoch_callback : callable or None
        Called with every EpochRecord as soon as the epoch ends
    """

    def __init__(self, train_set, val_set, config, teacher=None, epoch_callback=None):
        config.validate()
        if len(val_set) == 0:
            raise ConfigurationError("validation set is empty")
        if len(train_set.domains) < 2:
            raise ConfigurationError(f"training needs at least 2 domains, got {train_set.domains}")
        if train_set.input_width != val_set.input_width:
            raise ConfigurationError("training and validation samples have different widths")
        self.train_set = train_set
        self.val_set = val_set
        self.config = config
        self.teacher = teacher
        self.epoch_callback = epoch_callback
        self.pair = self.build_models()
        self.optimizers = {name: AdamOptimizer(model.parameters(), lr=config.lr, weight_decay=config.weight_decay)
                           for name, model in self.models().items()}
        self.reinitialised = 0

    def build_models(self):
        cfg = self.config
        width, classes = self.train_set.input_width, self.train_set.class_count
        shared = routed = None
        if cfg.trains_shared:
            shared = SharedModel.build(width, classes, keyed_rng(cfg.seed, INIT_STREAM, 1), hidden=cfg.hidden)
        if cfg.trains_routed:
            routed = RoutedModel.build(width, classes, keyed_rng(cfg.seed, INIT_STREAM, 2), hidden=cfg.hidden,
                                       n_experts=cfg.n_experts, top_k=cfg.top_k, gate_dim=cfg.gate_dim)
        return ModelPair(shared, routed)

    def models(self):
        out = {}
        if self.pair.shared is not None:
            out["shared"] = self.pair.shared
        if self.pair.routed is not None:
            out["routed"] = self.pair.routed
        return out

    def make_batch(self, positions, epoch_rng):
        data = self.train_set
        x_pair, n_temporal = None, 0
        if self.pair.shared is not None and self.config.use_jel:
            x_pair, n_temporal = jel_batch_pairs(positions, data, self.config.augment, epoch_rng)
        batch = Batch(data.flat_features(positions), data.labels[positions], data.domain_ids[positions], x_pair)
        return batch, n_temporal

    def step_batch(self, batch, phase, epoch, batch_index, last_good):
        """Objectives of both models on one batch; both are evaluated before either model moves."""
        shared, routed = self.pair.shared, self.pair.routed
        guide_for_shared = guide_for_routed = None
        if phase == "mutual":
            guide_for_shared = ce_loss(routed.forward(batch.x)[0], batch.labels)[1]
            guide_for_routed = ce_loss(shared.forward(batch.x)[0], batch.labels)[1]

        shared_report = routed_report = None
        grads = {}
        if shared is not None:
            shared_report, grads["shared"] = shared_total(batch, shared, guide_for_shared, phase,
                                                          use_jel=self.config.use_jel)
        if routed is not None:
            routed_report, grads["routed"] = routed_total(batch, routed, guide_for_routed, phase,
                                                          use_sl=self.config.use_sl, use_bl=self.config.use_bl)
        for name, report in (("shared", shared_report), ("routed", routed_report)):
            if report is not None and not np.isfinite(report.total):
                raise TrainingAbort(f"non-finite {name} loss", epoch, batch_index, checkpoint=last_good)

        for name, optimizer in self.optimizers.items():
            optimizer.step(grads[name])
        return shared_report, routed_report

    def reinitialise_prototypes(self, epoch, batch_index):
        routed = self.pair.routed
        if routed is None:
            return 0
        columns = routed.router.degenerate_prototypes()
        if columns:
            routed.router.reinitialize(columns, keyed_rng(self.config.seed, REINIT_STREAM, epoch, batch_index))
            self.optimizers["routed"].reset_moments("router.D", (slice(None), columns))
            logger.warning("epoch %d batch %d: re-initialised degenerate prototypes %s", epoch, batch_index,
                           columns)
        return len(columns)

    def evaluate(self):
        metrics = evaluate_pair(self.pair, self.val_set)
        accuracy = {head: m["accuracy"] for head, m in metrics.items()}
        alignment = alignment_errors(self.pair, self.val_set, self.teacher) if self.teacher is not None else None
        return accuracy, alignment

    def run_epoch(self, epoch, last_good):
        cfg, data = self.config, self.train_set
        phase = cfg.phase(epoch)
        order = keyed_rng(cfg.seed, SHUFFLE_STREAM, epoch).permutation(len(data))
        augment_rng = keyed_rng(cfg.seed, AUGMENT_STREAM, epoch)
        stats = _EpochStats(cfg.n_experts)
        reinitialised = 0
        for b, start in enumerate(range(0, len(data), cfg.batch_size)):
            batch, n_temporal = self.make_batch(order[start:start + cfg.batch_size], augment_rng)
            shared_report, routed_report = self.step_batch(batch, phase, epoch, b, last_good)
            stats.add(batch, shared_report, routed_report, n_temporal)
            reinitialised += self.reinitialise_prototypes(epoch, b)
        self.reinitialised += reinitialised

        accuracy, alignment = self.evaluate()
        record = EpochRecord(epoch=epoch, phase=phase, shared_losses=stats.means(stats.shared),
                             routed_losses=stats.means(stats.routed), val_accuracy=accuracy, alignment=alignment,
                             reinitialised=reinitialised)
        if self.pair.shared is not None and cfg.use_jel:
            record.temporal_pairs = stats.temporal / stats.n
        if self.pair.routed is not None:
            load = stats.selected / stats.n
            record.expert_load = load.tolist()
            record.load_cv = coefficient_of_variation(load)
            record.subject_entropy = stats.subject_entropy()
        return record

    def run(self):
        """Train until early stopping and return the best-validation models.

        Returns
        -------
        result : TrainResult
        """
        cfg = self.config
        initial_alignment = self.evaluate()[1]
        stopper = EarlyStopping(cfg.patience)
        best = self.pair.copy()
        history = []
        epoch = -1
        for epoch in range(cfg.max_epochs):
            record = self.run_epoch(epoch, best)
            history.append(record)
            if self.epoch_callback is not None:
                self.epoch_callback(record)
            score = record.val_accuracy["fused"]
            if stopper.update(score, epoch):
                best = self.pair.copy()
            logger.info("epoch %d (%s) shared %.4f routed %.4f val acc %s alignment %s", epoch, record.phase,
                        record.shared_losses.get("total", float("nan")),
                        record.routed_losses.get("total", float("nan")),
                        {k: round(v, 4) for k, v in record.val_accuracy.items()}, record.alignment)
            if stopper.should_stop:
                logger.info("early stop at epoch %d, best epoch %d (fused val acc %.4f)", epoch,
                            stopper.best_epoch, stopper.best_score)
                break
        return TrainResult(pair=best, history=history, best_epoch=stopper.best_epoch, stop_epoch=epoch,
                           best_score=stopper.best_score, initial_alignment=initial_alignment)


def train(train_set, val_set, config, teacher=None, epoch_callback=None):
    """Run the co-training loop; see Trainer.

    Returns
    -------
    result : TrainResult
        result.pair holds the best-validation models and result.history the EpochRecords
    """
    return Trainer(train_set, val_set, config, teacher, epoch_callback).run()
