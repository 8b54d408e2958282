"""Skeleton action recognition with a many-to-many LSTM, latent-feature SVMs,
region-selected appearance streams and late score fusion."""

from .errors import DeepTemporalError
from .fusion import FusionConfig, fuse
from .latent_features import extract_latents, to_classifier_vector
from .linear_svm import ClassScores, SvmModel, train_ovr
from .lstm_core import LstmParams, TrainConfig, forward_sequence, train
from .normalization import normalize_sequence
from .region_streams import maxmin_pool, select_best_region
from .skeleton_data import JointRoleMap, SkeletonSequence

__version__ = "0.1.0"

__all__ = [
    "ClassScores", "DeepTemporalError", "FusionConfig", "JointRoleMap", "LstmParams", "SkeletonSequence",
    "SvmModel", "TrainConfig", "extract_latents", "forward_sequence", "fuse", "maxmin_pool", "normalize_sequence",
    "select_best_region", "to_classifier_vector", "train", "train_ovr",
]
