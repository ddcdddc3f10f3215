from .objectives import (ContextPair, SparseGrads, context_loss_and_grads, path_loss_and_grads,
                         sample_negative_paths, sample_negative_words, sgd_step)
from .params import (ModelParams, compose_path, init_params, load_params, ranking_score,
                     save_params)
from .query import nearest_neighbors
from .train import TrainConfig, TrainResult, TrainingError, train, train_model

__all__ = [
    "ContextPair", "ModelParams", "SparseGrads", "TrainConfig", "TrainResult", "TrainingError",
    "compose_path", "context_loss_and_grads", "init_params", "load_params", "nearest_neighbors",
    "path_loss_and_grads", "ranking_score", "sample_negative_paths", "sample_negative_words",
    "save_params", "sgd_step", "train", "train_model",
]
