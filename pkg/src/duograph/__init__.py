"""Dual-stage attention models over two-class multi-relational graphs."""

from .errors import Error
from .graph import (BiGraph, NodeType, RelationClass, RelationSpec, build_graph,
                    load_graph_tsv, mean_neighbor_features, save_graph_tsv)
from .model import (ModelConfig, RankInstance, TaskKind, TaskSpec, forward,
                    task_loss, VARIANTS, ORDERINGS)
from .params import ParamSet, build_params
from .synth import SynthConfig, export_dataset, generate, import_dataset
from .tensor import Tensor, Tape, backward, load_tensors, save_tensors
from .train import TrainResult, evaluate, train, write_log

__version__ = "0.1.0"

__all__ = [
    "Error", "BiGraph", "NodeType", "RelationClass", "RelationSpec",
    "build_graph", "load_graph_tsv", "save_graph_tsv", "mean_neighbor_features",
    "ModelConfig", "RankInstance", "TaskKind", "TaskSpec", "forward",
    "task_loss", "VARIANTS", "ORDERINGS", "ParamSet", "build_params",
    "SynthConfig", "generate", "export_dataset", "import_dataset",
    "Tensor", "Tape", "backward", "save_tensors", "load_tensors",
    "TrainResult", "train", "evaluate", "write_log", "__version__",
]
