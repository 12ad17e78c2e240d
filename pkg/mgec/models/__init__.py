from mgec.models.SharedModel import SharedModel, shared_forward
from mgec.models.RoutedModel import RoutedModel, RouterState, RoutingResult, route, route_batch, routed_forward
from mgec.models.fusion import fuse_predictions
from mgec.models.ModelPair import ModelPair, evaluate_pair
from mgec.models.checkpoint import load_checkpoint, save_checkpoint
