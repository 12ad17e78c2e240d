# FoldRunner and LambdaSweep import the trainer, which imports the models; keep them out of here so
# that mgec.models can import the metrics.
from mgec.evaluation.metrics import accuracy, balanced_accuracy, case_study
from mgec.evaluation.folds import Fold, kfold_by_domain, lodo_folds
