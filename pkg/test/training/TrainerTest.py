import unittest
from dataclasses import replace

import numpy as np

from mgec.data.augment import AugmentSpec
from mgec.data.synthetic import SyntheticSpec, generate_synthetic
from mgec.evaluation.FoldRunner import validation_split
from mgec.losses.loss_functions import ce_loss
from mgec.numerics.layers import softmax
from mgec.training.Trainer import Trainer, train
from mgec.training.alignment import alignment_error, alignment_errors
from mgec.training.config import TrainConfig
from mgec.utils.errors import ConfigurationError, TrainingAbort
from mgec.utils.processing import canonical_json
from mgec.utils.rng import derive_seed


class TrainerTest(unittest.TestCase):
    dataset, teacher = generate_synthetic(SyntheticSpec(domains_per_group=(2, 1), samples_per_domain=60, dim=8,
                                                        ordered=True, seed=1))
    train_pos, val_pos = validation_split(dataset, 0.2, seed=0)
    train_set, val_set = dataset.subset(train_pos), dataset.subset(val_pos)
    config = TrainConfig(batch_size=32, max_epochs=4, patience=3, lr=1e-2, warmup_epochs=1, n_experts=3,
                         top_k=1, gate_dim=4, hidden=(16,), seed=7)

    def test_history_and_phases(self):
        records = []
        result = train(self.train_set, self.val_set, self.config, self.teacher, epoch_callback=records.append)
        self.assertEqual(len(result.history), len(records))
        self.assertEqual(["warmup", "mutual"], [r.phase for r in records[:2]])
        self.assertIn("s_from_r", records[1].shared_losses)
        self.assertIn("erm", records[0].shared_losses)
        self.assertLessEqual(result.stop_epoch, 3)
        self.assertEqual(max(r.val_accuracy["fused"] for r in result.history), result.best_score)
        self.assertAlmostEqual(1.0, sum(records[0].expert_load))
        self.assertEqual({"shared", "routed"}, set(result.initial_alignment))

    def test_deterministic(self):
        a = train(self.train_set, self.val_set, self.config, self.teacher)
        b = train(self.train_set, self.val_set, self.config, self.teacher)
        self.assertEqual(canonical_json([r.to_dict() for r in a.history]),
                         canonical_json([r.to_dict() for r in b.history]))
        self.assertEqual(canonical_json(a.pair.to_dict()), canonical_json(b.pair.to_dict()))

    def test_seed_changes_run(self):
        a = train(self.train_set, self.val_set, replace(self.config, max_epochs=1))
        b = train(self.train_set, self.val_set, replace(self.config, max_epochs=1, seed=8))
        self.assertNotEqual(canonical_json(a.pair.to_dict()), canonical_json(b.pair.to_dict()))

    def test_one_step_lowers_training_loss(self):
        config = replace(self.config, ablation="shared_only", batch_size=1000, lr=1e-3, use_jel=False)
        trainer = Trainer(self.train_set, self.val_set, config)
        x, y = self.train_set.flat_features(), self.train_set.labels
        before = ce_loss(trainer.pair.shared.forward(x)[0], y)[0]
        trainer.run_epoch(0, trainer.pair.copy())
        after = ce_loss(trainer.pair.shared.forward(x)[0], y)[0]
        self.assertLess(after, before)

    def test_one_warmup_epoch_lowers_both_losses(self):
        dataset, _ = generate_synthetic(SyntheticSpec(seed=0))
        config = TrainConfig(max_epochs=1, warmup_epochs=1)
        train_pos, val_pos = validation_split(dataset, config.validation_fraction, derive_seed(config.seed, 0))
        trainer = Trainer(dataset.subset(train_pos), dataset.subset(val_pos), config)
        reports = []
        step_batch = trainer.step_batch

        def recording_step(*args):
            out = step_batch(*args)
            reports.append(out)
            return out

        trainer.step_batch = recording_step
        record = trainer.run_epoch(0, None)
        self.assertEqual("warmup", record.phase)
        self.assertGreater(len(reports), 2)
        (shared_first, routed_first), (shared_last, routed_last) = reports[0], reports[-1]
        self.assertLess(shared_last.total, shared_first.total)
        self.assertLess(routed_last.total, routed_first.total)

    def test_patience_one_stops_after_plateau(self):
        trainer = Trainer(self.train_set, self.val_set, replace(self.config, max_epochs=10, patience=1))
        scores = iter([0.0, 0.1, 0.2, 0.3, 0.4] + [0.4] * 10)
        trainer.evaluate = lambda: ({"fused": next(scores)}, None)
        result = trainer.run()
        self.assertEqual(3, result.best_epoch)
        self.assertEqual(4, result.stop_epoch)
        self.assertEqual(5, len(result.history))

    def test_validation_never_updates(self):
        config = replace(self.config, max_epochs=1)
        other_val = self.val_set.subset(np.arange(len(self.val_set))[::-1][:5])
        a = Trainer(self.train_set, self.val_set, config)
        b = Trainer(self.train_set, other_val, config)
        a.run_epoch(0, None)
        b.run_epoch(0, None)
        self.assertEqual(canonical_json(a.pair.to_dict()), canonical_json(b.pair.to_dict()))

    def test_shared_only(self):
        result = train(self.train_set, self.val_set, replace(self.config, ablation="shared_only", max_epochs=2))
        self.assertIsNone(result.pair.routed)
        self.assertIsNone(result.history[0].expert_load)
        self.assertEqual({"shared", "fused"}, set(result.history[0].val_accuracy))

    def test_routed_only(self):
        result = train(self.train_set, self.val_set, replace(self.config, ablation="routed_only", max_epochs=2))
        self.assertIsNone(result.pair.shared)
        self.assertEqual(["warmup", "warmup"], [r.phase for r in result.history])
        self.assertIsNone(result.history[0].temporal_pairs)

    def test_temporal_pairs_on_ordered_data(self):
        result = train(self.train_set, self.val_set, replace(self.config, max_epochs=1))
        self.assertGreater(result.history[0].temporal_pairs, 0.0)

    def test_non_finite_loss_aborts(self):
        trainer = Trainer(self.train_set, self.val_set, self.config)
        trainer.pair.shared.head.weights[0][...] = np.inf
        with self.assertRaises(TrainingAbort) as ctx:
            trainer.run_epoch(0, "last-good")
        self.assertEqual((0, 0), (ctx.exception.epoch, ctx.exception.batch))
        self.assertEqual("last-good", ctx.exception.checkpoint)

    def test_degenerate_prototype_reinitialised(self):
        trainer = Trainer(self.train_set, self.val_set, self.config)
        trainer.pair.routed.router.D[:, 1] = 0.0
        with self.assertLogs("mgec.training.Trainer", level="WARNING"):
            self.assertEqual(1, trainer.reinitialise_prototypes(0, 0))
        self.assertAlmostEqual(1.0, np.linalg.norm(trainer.pair.routed.router.D[:, 1]))

    def test_needs_two_domains(self):
        with self.assertRaises(ConfigurationError):
            Trainer(self.train_set.select_domains([0]), self.val_set, self.config)

    def test_self_mask_config(self):
        config = replace(self.config, max_epochs=1, augment=AugmentSpec(mode="self-mask"))
        result = train(self.train_set, self.val_set, config)
        self.assertEqual(0.0, result.history[0].temporal_pairs)


class AlignmentTest(unittest.TestCase):
    dataset, teacher = TrainerTest.dataset, TrainerTest.teacher

    def test_alignment_error(self):
        p = np.array([[0.5, 0.5], [1.0, 0.0]])
        self.assertEqual(0.0, alignment_error(p, p))
        self.assertAlmostEqual(1.0, alignment_error(p, np.array([[0.0, 1.0], [1.0, 0.0]])))

    def test_uniform_against_one_hot(self):
        uniform = np.full((4, 2), 0.5)
        one_hot = np.tile([1.0, 0.0], (4, 1))
        self.assertAlmostEqual(0.5, alignment_error(uniform, one_hot), delta=1e-12)

    def test_matches_per_sample_loop(self):
        result = train(TrainerTest.train_set, TrainerTest.val_set, replace(TrainerTest.config, max_epochs=1))
        errors = alignment_errors(result.pair, self.dataset, self.teacher)
        x = self.dataset.flat_features()
        probs = result.pair.predict(x)
        for name in ("shared", "routed"):
            total = 0.0
            for i in range(len(self.dataset)):
                target = softmax(self.teacher.domain_logits(x[i], int(self.dataset.domain_ids[i]))[0])
                for c in range(self.dataset.class_count):
                    total += (probs[name][i, c] - target[c]) ** 2
            self.assertAlmostEqual(total / len(self.dataset), errors[name], delta=1e-12)

    def test_errors_per_model(self):
        result = train(TrainerTest.train_set, TrainerTest.val_set,
                       replace(TrainerTest.config, ablation="shared_only", max_epochs=1))
        errors = alignment_errors(result.pair, self.dataset, self.teacher)
        self.assertIsNone(errors["routed"])
        self.assertTrue(0.0 <= errors["shared"] <= 2.0)

    def test_class_count_mismatch(self):
        dataset, teacher = generate_synthetic(SyntheticSpec(domains_per_group=(2, 1), samples_per_domain=30, dim=8,
                                                            class_count=3, seed=1))
        result = train(TrainerTest.train_set, TrainerTest.val_set,
                       replace(TrainerTest.config, ablation="shared_only", max_epochs=1))
        with self.assertRaises(ConfigurationError):
            alignment_errors(result.pair, dataset, teacher)


if __name__ == '__main__':
    unittest.main()
