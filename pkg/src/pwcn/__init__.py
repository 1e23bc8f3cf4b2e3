"""Proximity-weighted convolution network for aspect-level sentiment.

A BiLSTM encodes the sentence, each hidden state is scaled by a proximity
weight derived from the aspect term (linear positional decay or
dependency-tree distance), and a windowed convolution with max-over-time
pooling feeds a softmax over three polarities.  All numerics are plain
NumPy with hand-derived gradients.
"""

from .corpus import (
    LABELS,
    ROOT,
    AspectRecord,
    DepForest,
    Instance,
    Vocabulary,
    instances_from_records,
    load_embeddings,
    parse_conllu,
    parse_semeval_xml,
    tokenize,
    tokenize_and_align,
    write_conllu,
)
from .errors import (
    AlignmentError,
    DataError,
    FormatError,
    NumericError,
    PwcnError,
    ShapeError,
    StructureError,
    XmlError,
)
from .nn import (
    HyperParams,
    ModelParams,
    apply_proximity,
    backward,
    batch_loss,
    bilstm_forward,
    classify,
    forward,
    load_checkpoint,
    loss,
    max_pool,
    pwconv_forward,
    save_checkpoint,
)
from .proximity import (
    dependency_proximity,
    match_forests,
    position_proximity,
    proximity_for_instance,
    tree_distances,
)
from .train import (
    AdamState,
    Batch,
    EvalReport,
    Example,
    TrainConfig,
    TrainResult,
    adam_step,
    collate,
    encode_examples,
    evaluate,
    init_params,
    make_batches,
    metrics_from_confusion,
    predict,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "AlignmentError",
    "AspectRecord",
    "Batch",
    "DataError",
    "DepForest",
    "EvalReport",
    "Example",
    "FormatError",
    "HyperParams",
    "Instance",
    "LABELS",
    "ModelParams",
    "NumericError",
    "PwcnError",
    "ROOT",
    "ShapeError",
    "StructureError",
    "TrainConfig",
    "TrainResult",
    "Vocabulary",
    "XmlError",
    "adam_step",
    "apply_proximity",
    "backward",
    "batch_loss",
    "bilstm_forward",
    "classify",
    "collate",
    "dependency_proximity",
    "encode_examples",
    "evaluate",
    "forward",
    "init_params",
    "instances_from_records",
    "load_checkpoint",
    "load_embeddings",
    "loss",
    "make_batches",
    "match_forests",
    "max_pool",
    "metrics_from_confusion",
    "parse_conllu",
    "parse_semeval_xml",
    "position_proximity",
    "predict",
    "proximity_for_instance",
    "pwconv_forward",
    "save_checkpoint",
    "tokenize",
    "tokenize_and_align",
    "train",
    "tree_distances",
    "write_conllu",
]
