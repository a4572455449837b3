"""Neural regression trees: regression via learned response-variable partitions."""

__version__ = "0.1.0"

from .core import Bin, Dataset, EvalReport, Sample, TrainConfig, partition_of, split_dataset
from .inference import leaf_posteriors, predict_batch, predict_hard, predict_soft
from .tree import NrtModel, build_tree, leaves_of

__all__ = [
    "Bin", "Dataset", "EvalReport", "Sample", "TrainConfig", "partition_of", "split_dataset",
    "leaf_posteriors", "predict_batch", "predict_hard", "predict_soft",
    "NrtModel", "build_tree", "leaves_of",
]
