from mgec.numerics.layers import MlpParams, mlp_forward, mlp_backward, softmax, log_softmax
from mgec.numerics.AdamOptimizer import AdamOptimizer, AdamState, adam_step
from mgec.numerics.gradcheck import GradCheckReport, finite_diff_check
