import logging
from dataclasses import asdict, dataclass, field, fields

from mgec import conf
from mgec.data.augment import AugmentSpec
from mgec.utils.errors import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """Hyper-parameters of one co-training run.

    ablation selects which models train and how: "full" (warm-up then mutual guidance),
    "no_mutual" (both models, warm-up objectives only), "shared_only" or "routed_only".

    validate() accepts warmup_epochs == max_epochs, a run that never leaves warm-up (a one-epoch
    warm-up pass has max_epochs = warmup_epochs = 1). patience >= max_epochs only logs a warning:
    early stopping then never fires, so short runs can keep the default patience.
    """

    batch_size: int = conf.BATCH_SIZE
    max_epochs: int = conf.MAX_EPOCHS
    patience: int = conf.PATIENCE
    lr: float = conf.LEARNING_RATE
    weight_decay: float = conf.WEIGHT_DECAY
    warmup_epochs: int = conf.WARMUP_EPOCHS
    n_experts: int = conf.N_EXPERTS
    top_k: int = conf.TOP_K
    gate_dim: int = conf.GATE_DIM
    hidden: tuple = conf.EXTRACTOR_HIDDEN
    augment: AugmentSpec = field(default_factory=AugmentSpec)
    seed: int = 0
    use_jel: bool = True
    use_sl: bool = True
    use_bl: bool = True
    ablation: str = "full"
    validation_fraction: float = conf.VALIDATION_FRACTION

    def validate(self):
        for name in ("batch_size", "max_epochs", "patience", "n_experts", "top_k", "gate_dim"):
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.warmup_epochs < 0 or self.warmup_epochs > self.max_epochs:
            raise ConfigurationError(
                f"warmup_epochs must lie in [0, max_epochs={self.max_epochs}], got {self.warmup_epochs}")
        if self.top_k > self.n_experts:
            raise ConfigurationError(f"top_k={self.top_k} exceeds n_experts={self.n_experts}")
        if not self.lr > 0:
            raise ConfigurationError(f"lr must be > 0, got {self.lr}")
        if self.weight_decay < 0:
            raise ConfigurationError(f"weight_decay must be >= 0, got {self.weight_decay}")
        if not self.hidden or any(int(h) < 1 for h in self.hidden):
            raise ConfigurationError(f"hidden must list positive widths, got {self.hidden}")
        if self.ablation not in conf.ABLATIONS:
            raise ConfigurationError(f"ablation must be one of {conf.ABLATIONS}, got {self.ablation!r}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigurationError(f"validation_fraction must lie in (0, 1), got {self.validation_fraction}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        self.augment.validate()
        if self.patience >= self.max_epochs:
            logger.warning("patience %d >= max_epochs %d, early stopping can never trigger",
                           self.patience, self.max_epochs)
        return self

    @property
    def trains_shared(self):
        return self.ablation != "routed_only"

    @property
    def trains_routed(self):
        return self.ablation != "shared_only"

    def phase(self, epoch):
        if self.ablation == "full" and epoch >= self.warmup_epochs:
            return "mutual"
        return "warmup"

    def to_dict(self):
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        d["augment"] = self.augment.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigurationError(f"unknown training field(s): {sorted(unknown)}")
        d = dict(d)
        if "hidden" in d:
            d["hidden"] = tuple(int(h) for h in d["hidden"])
        if isinstance(d.get("augment"), dict):
            d["augment"] = AugmentSpec.from_dict(d["augment"])
        return cls(**d)
