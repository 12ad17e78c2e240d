from mgec.training.config import TrainConfig
from mgec.training.history import EarlyStopping, EpochRecord, TrainResult
from mgec.training.alignment import alignment_errors
from mgec.training.pairing import jel_batch_pairs
from mgec.training.Trainer import Trainer, train
