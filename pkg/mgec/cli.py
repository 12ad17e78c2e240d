"""
Command line: gen, train, eval, sweep, gradcheck and plot.

Every command resolves its settings as defaults < --config json file < flags, and echoes the resolved
settings as config.json next to its outputs. Exit codes: 0 success, 1 invalid input, 2 runtime failure.
"""
import argparse
import logging
import os
import sys
from dataclasses import dataclass, field

import pandas as pd
from joblib import Parallel, delayed

from mgec import __version__, conf
from mgec.data.LoadData import FORMATS, LoadData, save_dataset
from mgec.data.synthetic import SyntheticSpec, generate_synthetic
from mgec.evaluation.FoldRunner import fit_with_validation, fusion_check, run_fold
from mgec.evaluation.LambdaSweep import lambda_sweep
from mgec.evaluation.folds import Fold, kfold_by_domain, lodo_folds
from mgec.evaluation.metrics import case_study
from mgec.losses.gradcheck_suite import run_gradcheck
from mgec.models.ModelPair import evaluate_pair
from mgec.models.checkpoint import save_checkpoint
from mgec.training.config import TrainConfig
from mgec.utils.errors import ConfigurationError, DatasetParseError, TrainingAbort
from mgec.utils.processing import append_json_line, ensure_dir, load_json, save_csv, save_json

logger = logging.getLogger(__name__)

COMMANDS = ("gen", "train", "eval", "sweep", "gradcheck", "plot")

# flag dest -> SyntheticSpec field
SYNTHETIC_FLAGS = {"lam": "lam", "domains_per_group": "domains_per_group",
                   "samples_per_domain": "samples_per_domain", "dim": "dim", "classes": "class_count",
                   "sigma_group": "sigma_group", "sigma_domain": "sigma_domain", "sigma_sample": "sigma_sample",
                   "sigma_w_base": "sigma_w_base", "sigma_w_group": "sigma_w_group",
                   "sigma_w_domain": "sigma_w_domain", "ordered": "ordered"}
# flag dest -> TrainConfig field
TRAIN_FLAGS = {"batch_size": "batch_size", "max_epochs": "max_epochs", "patience": "patience", "lr": "lr",
               "weight_decay": "weight_decay", "warmup_epochs": "warmup_epochs", "experts": "n_experts",
               "top_k": "top_k", "gate_dim": "gate_dim", "hidden": "hidden", "ablation": "ablation",
               "validation_fraction": "validation_fraction", "no_jel": "use_jel", "no_sl": "use_sl",
               "no_bl": "use_bl"}
AUGMENT_FLAGS = {"augment_mode": "mode", "rho": "rho", "offset": "offset"}
RUN_KEYS = ("grid", "seeds", "ablations", "large_spread", "cv", "k", "jobs", "format", "probes", "tol",
            "corrupt", "test_domains")


class ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors as ConfigurationError so they share the validation exit code."""

    def error(self, message):
        raise ConfigurationError(f"{self.prog}: {message}")


def int_list(text):
    return tuple(int(v) for v in str(text).split(",") if v.strip())


def float_list(text):
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def str_list(text):
    return tuple(v.strip() for v in str(text).split(",") if v.strip())


@dataclass
class RunConfig:
    """Resolved settings of one command invocation."""

    command: str
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)
    train: TrainConfig = field(default_factory=TrainConfig)
    grid: tuple = conf.LAMBDA_GRID
    seeds: tuple = conf.SEEDS
    ablations: tuple = None
    large_spread: bool = False
    cv: str = "lodo"
    k: int = None
    jobs: int = 1
    format: str = "csv"
    probes: int = conf.GRADCHECK_PROBES
    tol: float = conf.GRADCHECK_TOL
    corrupt: bool = False
    test_domains: tuple = None
    data: str = None
    out: str = None

    def validate(self):
        self.synthetic.validate()
        self.train.validate()
        if self.cv not in ("lodo", "kfold"):
            raise ConfigurationError(f"cv must be lodo or kfold, got {self.cv!r}")
        if self.cv == "kfold" and self.k is None:
            raise ConfigurationError("k is required with cv kfold")
        if self.format not in FORMATS:
            raise ConfigurationError(f"format must be one of {FORMATS}, got {self.format!r}")
        if int(self.jobs) < 1:
            raise ConfigurationError(f"jobs must be >= 1, got {self.jobs}")
        if self.ablations is not None:
            unknown = set(self.ablations) - set(conf.ABLATIONS)
            if unknown:
                raise ConfigurationError(f"unknown ablation(s): {sorted(unknown)}")
        return self

    @property
    def effective_jobs(self):
        cap = os.environ.get(conf.THREADS_ENV)
        if cap:
            try:
                return max(1, min(int(self.jobs), int(cap)))
            except ValueError:
                raise ConfigurationError(f"{conf.THREADS_ENV} must be an integer, got {cap!r}")
        return int(self.jobs)

    def to_dict(self):
        return {"command": self.command, "synthetic": self.synthetic.to_dict(), "train": self.train.to_dict(),
                "grid": list(self.grid), "seeds": list(self.seeds),
                "ablations": list(self.ablations) if self.ablations is not None else None,
                "large_spread": self.large_spread, "cv": self.cv, "k": self.k, "jobs": self.jobs,
                "format": self.format, "probes": self.probes, "tol": self.tol, "corrupt": self.corrupt,
                "test_domains": list(self.test_domains) if self.test_domains is not None else None,
                "data": self.data, "out": self.out}

    @classmethod
    def resolve(cls, args):
        """Merge defaults, the optional json config file and the flags actually given."""
        file_cfg = {}
        if getattr(args, "config", None):
            file_cfg = load_json(args.config)
            if not isinstance(file_cfg, dict):
                raise ConfigurationError(f"{args.config}: config file must hold a json object")
            unknown = set(file_cfg) - {"synthetic", "train"} - set(RUN_KEYS)
            if unknown:
                raise ConfigurationError(f"{args.config}: unknown config key(s) {sorted(unknown)}")

        synthetic = SyntheticSpec().to_dict()
        synthetic.update(file_cfg.get("synthetic", {}))
        train = TrainConfig().to_dict()
        file_train = dict(file_cfg.get("train", {}))
        train["augment"].update(file_train.pop("augment", {}))
        train.update(file_train)

        for dest, name in SYNTHETIC_FLAGS.items():
            value = getattr(args, dest, None)
            if value is not None:
                synthetic[name] = value
        for dest, name in TRAIN_FLAGS.items():
            value = getattr(args, dest, None)
            if value is not None:
                train[name] = not value if dest.startswith("no_") else value
        for dest, name in AUGMENT_FLAGS.items():
            value = getattr(args, dest, None)
            if value is not None:
                train["augment"][name] = value
        if getattr(args, "seed", None) is not None:
            if args.command == "gen":
                synthetic["seed"] = args.seed
            else:
                train["seed"] = args.seed

        run = {key: file_cfg[key] for key in RUN_KEYS if key in file_cfg}
        for key in RUN_KEYS:
            value = getattr(args, key, None)
            if value is not None and value is not False:
                run[key] = value
        for key in ("grid", "seeds", "ablations", "test_domains"):
            if run.get(key) is not None:
                run[key] = tuple(run[key])
        config = cls(args.command, SyntheticSpec.from_dict(synthetic), TrainConfig.from_dict(train),
                     data=getattr(args, "data", None), out=getattr(args, "out", None), **run)
        if config.large_spread:
            config.synthetic = config.synthetic.large_spread()
        return config.validate()


def _add_synthetic_flags(parser):
    group = parser.add_argument_group("synthetic data")
    group.add_argument("--lam", type=float, help="weight of the domain-independent teacher, in [0, 1]")
    group.add_argument("--domains-per-group", type=int_list, help="comma separated, e.g. 3,2")
    group.add_argument("--samples-per-domain", type=int)
    group.add_argument("--dim", type=int)
    group.add_argument("--classes", type=int)
    for name in ("group", "domain", "sample", "w-base", "w-group", "w-domain"):
        group.add_argument(f"--sigma-{name}", type=float)
    group.add_argument("--ordered", action="store_const", const=True,
                       help="give samples a temporal index inside their domain")
    group.add_argument("--large-spread", action="store_true",
                       help="spread the per-domain teachers 10x further from the shared one")


def _add_train_flags(parser):
    group = parser.add_argument_group("training")
    group.add_argument("--batch-size", type=int)
    group.add_argument("--max-epochs", type=int)
    group.add_argument("--patience", type=int)
    group.add_argument("--lr", type=float)
    group.add_argument("--weight-decay", type=float)
    group.add_argument("--warmup-epochs", type=int)
    group.add_argument("--experts", type=int, help="number of routed experts M")
    group.add_argument("--top-k", type=int, help="experts active per sample K")
    group.add_argument("--gate-dim", type=int)
    group.add_argument("--hidden", type=int_list, help="extractor widths, e.g. 128,64")
    group.add_argument("--ablation", choices=conf.ABLATIONS)
    group.add_argument("--validation-fraction", type=float)
    group.add_argument("--augment-mode", choices=conf.AUGMENT_MODES)
    group.add_argument("--rho", type=float, help="masking probability")
    group.add_argument("--offset", type=int, help="temporal neighbor offset T")
    for name in ("jel", "sl", "bl"):
        group.add_argument(f"--no-{name}", action="store_const", const=True, help=f"drop the {name} loss term")
    group.add_argument("--jobs", type=int, help=f"parallel workers, capped by {conf.THREADS_ENV}")


def build_parser():
    common = ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    common.add_argument("-c", "--config", help="json file with synthetic, train and run settings")
    common.add_argument("-s", "--seed", type=int)

    parser = ArgumentParser(prog="mgec", description="Shared and routed expert co-training on synthetic domains")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    gen = sub.add_parser("gen", parents=[common], help="generate a synthetic dataset")
    gen.add_argument("-o", "--out", required=True, help="dataset base path, e.g. data/synth")
    gen.add_argument("-f", "--format", choices=FORMATS)
    _add_synthetic_flags(gen)

    train = sub.add_parser("train", parents=[common], help="train one model pair on a dataset")
    train.add_argument("-i", "--data", required=True, help="dataset base path")
    train.add_argument("-o", "--out", required=True, help="run directory")
    train.add_argument("--test-domains", type=int_list, help="held-out domains for a final test report")
    _add_train_flags(train)

    ev = sub.add_parser("eval", parents=[common], help="cross-validate over the domains of a dataset")
    ev.add_argument("-i", "--data", required=True, help="dataset base path")
    ev.add_argument("-o", "--out", required=True, help="results directory")
    ev.add_argument("--cv", choices=("lodo", "kfold"))
    ev.add_argument("--k", type=int)
    ev.add_argument("--ablations", type=str_list, help="comma separated subset of " + ",".join(conf.ABLATIONS))
    _add_train_flags(ev)

    sweep = sub.add_parser("sweep", parents=[common], help="lambda sweep over freshly generated datasets")
    sweep.add_argument("-o", "--out", required=True, help="results directory")
    sweep.add_argument("--grid", type=float_list, help="comma separated lambdas")
    sweep.add_argument("--seeds", type=int_list, help="comma separated dataset seeds")
    sweep.add_argument("--ablations", type=str_list)
    _add_synthetic_flags(sweep)
    _add_train_flags(sweep)

    grad = sub.add_parser("gradcheck", parents=[common], help="finite-difference check of every loss")
    grad.add_argument("-o", "--out", help="directory for gradcheck.json")
    grad.add_argument("--probes", type=int)
    grad.add_argument("--tol", type=float)
    grad.add_argument("--corrupt", action="store_true", help="plant a 1%% gradient error, the check must fail")

    plot = sub.add_parser("plot", parents=[common], help="render figures from sweep.csv and folds.csv")
    plot.add_argument("-i", "--data", required=True, help="results directory of sweep or eval")
    plot.add_argument("-o", "--out", help="figure directory, defaults to the results directory")
    return parser


def _write_config(run, directory):
    return save_json(run.to_dict(), os.path.join(directory, "config.json"))


def _load(run):
    loader = LoadData(run.data)
    return loader.load_dataset(), loader.load_teacher()


def cmd_gen(run):
    dataset, teacher = generate_synthetic(run.synthetic)
    base = save_dataset(dataset, run.out, run.format, teacher)
    summary = dataset.summary()
    summary["effective_seed"] = teacher.effective_seed
    print(f"wrote {base} ({run.format})")
    for key, value in summary.items():
        print(f"  {key}: {value}")
    return 0


def cmd_train(run):
    dataset, teacher = _load(run)
    ensure_dir(run.out)
    _write_config(run, run.out)
    epochs_path = os.path.join(run.out, "epochs.jsonl")
    if os.path.exists(epochs_path):
        os.remove(epochs_path)

    def stream(record):
        append_json_line(record.to_dict(), epochs_path)

    cfg = run.train
    if run.test_domains:
        missing = set(run.test_domains) - set(dataset.domains)
        if missing:
            raise ConfigurationError(f"test domains {sorted(missing)} are not in the dataset")
        fold = Fold(0, tuple(d for d in dataset.domains if d not in run.test_domains), tuple(run.test_domains))
        report = run_fold(dataset, fold, cfg, teacher=teacher, epoch_callback=stream)
        save_json(report.to_dict(), os.path.join(run.out, "fold_report.json"))
        pair, summary = report.pair, {"best_epoch": report.best_epoch, "stop_epoch": report.stop_epoch,
                                      "test": report.metrics, "initial_alignment": report.initial_alignment}
    else:
        result, val_set = fit_with_validation(dataset, cfg.validate(), teacher, stream)
        pair, summary = result.pair, result.summary()
        summary["validation"] = evaluate_pair(pair, val_set)
    save_checkpoint(pair, os.path.join(run.out, "checkpoint.json"), spec=cfg.to_dict(), metadata=summary,
                    seed=cfg.seed)
    save_json(summary, os.path.join(run.out, "summary.json"))
    print(f"run written to {run.out}: best epoch {summary['best_epoch']}, stopped at {summary['stop_epoch']}")
    return 0


def _fold_rows(reports):
    return pd.DataFrame([{"fold": r.fold_id, "held_out": ",".join(str(d) for d in r.held_out),
                          "ablation": r.ablation, "accuracy": r.headline_accuracy,
                          "balanced_accuracy": r.headline_balanced_accuracy} for r in reports],
                        columns=["fold", "held_out", "ablation", "accuracy", "balanced_accuracy"])


def _eval_one(dataset, fold, config, ablation, teacher):
    report = run_fold(dataset, fold, config, ablation=ablation, teacher=teacher)
    report.pair = None
    return report


def cmd_eval(run):
    dataset, teacher = _load(run)
    folds = lodo_folds(dataset) if run.cv == "lodo" else kfold_by_domain(dataset, run.k, run.train.seed)
    ablations = run.ablations or (run.train.ablation,)
    ensure_dir(run.out)
    _write_config(run, run.out)
    reports = Parallel(n_jobs=run.effective_jobs)(
        delayed(_eval_one)(dataset, fold, run.train, ablation, teacher) for ablation in ablations for fold in folds)
    reports.sort(key=lambda r: (r.fold_id, r.ablation))

    save_json([r.to_dict() for r in reports], os.path.join(run.out, "folds.json"))
    rows = _fold_rows(reports)
    save_csv(rows, run.out, "folds.csv")
    print(rows.groupby("ablation")[["accuracy", "balanced_accuracy"]].mean().to_string())

    holds, violations = fusion_check(reports)
    if holds is not None:
        logger.info("fusion vs worse branch over folds: %s, folds below both branches: %s", holds, violations)
    if {"full", "shared_only", "routed_only"} <= set(ablations):
        table, wins = case_study(reports)
        print(table.to_string(index=False))
        print(f"full beats both ablations on {wins} of {len(table)} held-out domains")
    return 0


def cmd_sweep(run):
    ensure_dir(run.out)
    _write_config(run, run.out)
    report, fold_reports = lambda_sweep(run.synthetic, run.grid, run.seeds, run.train,
                                        run.ablations or conf.SWEEP_ABLATIONS, run.effective_jobs)
    save_csv(report.rows, run.out, "sweep.csv")
    save_csv(report.summary, run.out, "sweep_summary.csv")
    save_json(report.to_dict(), os.path.join(run.out, "sweep.json"))
    save_json([r.to_dict() for r in fold_reports], os.path.join(run.out, "folds.json"))
    print(report.summary.to_string(index=False))
    return 0


def cmd_gradcheck(run):
    reports = run_gradcheck(seed=run.train.seed, n_probes=run.probes, tol=run.tol, corrupt=run.corrupt)
    width = max(len(name) for name in reports)
    for name, rep in reports.items():
        print(f"{name:<{width}}  max_rel_err {rep.max_rel_err:.3e}  probes {rep.n_probes:>3}  "
              f"{'pass' if rep.passed else 'FAIL'}")
    passed = all(rep.passed for rep in reports.values())
    if run.out:
        ensure_dir(run.out)
        save_json({"pass": passed, "tol": run.tol, "corrupt": run.corrupt,
                   "reports": {name: rep.to_dict() for name, rep in reports.items()}},
                  os.path.join(run.out, "gradcheck.json"))
    print("all gradients agree" if passed else "gradient check failed")
    return 0 if passed else 1


def cmd_plot(run):
    from mgec.plot.figures import plot_case_study, plot_lambda_sweep

    out = run.out or run.data
    written = []
    sweep_csv = os.path.join(run.data, "sweep.csv")
    folds_csv = os.path.join(run.data, "folds.csv")
    if os.path.exists(sweep_csv):
        written.append(plot_lambda_sweep(pd.read_csv(sweep_csv), os.path.join(out, "lambda_sweep.png")))
    if os.path.exists(folds_csv):
        written.append(plot_case_study(pd.read_csv(folds_csv), os.path.join(out, "case_study.png")))
    if not written:
        raise ConfigurationError(f"{run.data} holds neither sweep.csv nor folds.csv")
    for path in written:
        print(f"wrote {path}")
    return 0


HANDLERS = {"gen": cmd_gen, "train": cmd_train, "eval": cmd_eval, "sweep": cmd_sweep,
            "gradcheck": cmd_gradcheck, "plot": cmd_plot}


def configure_logging(verbosity):
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.verbose)
        run = RunConfig.resolve(args)
        return HANDLERS[args.command](run)
    except (ConfigurationError, DatasetParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except TrainingAbort as e:
        print(f"training aborted: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"io error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
