"""Behavior-cloning trainer: hashed text features and a linear softmax action model."""
from .features import DEFAULT_DIM, feature_strings, featurize, parse_obs_text, tokenize
from .model import ACTION_NAMES, CheckpointError, LinearSoftmaxModel
from .sft import (
    CUMULATIVE,
    NON_CUMULATIVE,
    Dataset,
    Decision,
    EmptyDatasetError,
    TrainConfig,
    TrainingDiverged,
    accuracy,
    assemble_dataset,
    dataset_hash,
    decisions,
    export_training_file,
    grad,
    l2_term,
    load_training_file,
    record_key,
    sft_loss,
    train,
)
