from mgec.losses.loss_functions import (bl_loss, ce_loss, jel_loss, mutual_weighted_loss, mutual_weights,
                                         sl_loss)
from mgec.losses.totals import Batch, BatchLossReport, routed_total, shared_total
