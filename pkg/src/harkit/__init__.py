"""harkit: human-activity recognition on the UCI HAR dataset, from scratch.

Classical models on the 561 expert features (one-vs-rest logistic
regression, one-vs-rest linear SVM, one-vs-one RBF-kernel SVM via SMO,
CART decision tree), recurrent networks on the raw 9-channel windows
(RNN / LSTM / GRU / bidirectional LSTM with hand-derived BPTT), an exact
t-SNE embedding, and the ``har`` command line for end-to-end runs.
"""

__version__ = "0.1.0"

from .data import (
    ACTIVITY_NAMES,
    CHANNEL_NAMES,
    DYNAMIC_CODES,
    N_CHANNELS,
    N_CLASSES,
    N_FEATURES,
    STATIC_CODES,
    WINDOW_LEN,
    HarDataset,
    HarSplit,
    class_distribution,
    load_dataset,
    load_split,
    make_synthetic,
)
from .evaluation import (
    ConfusionMatrix,
    GridSpec,
    Report,
    build_report,
    confusion,
    grid_search,
    per_class_recall,
    stratified_folds,
)
from .exceptions import (
    DataError,
    HarError,
    ModelError,
    SchemaViolation,
    ShapeMismatch,
    TrainingError,
)
from .kernel_svm import RbfSvmOvO, rbf_kernel, rbf_kernel_matrix, smo_solve
from .linear import LinearSvmOvR, LogisticRegressionOvR
from .persist import (
    deserialize_model,
    deserialize_report,
    load_model,
    load_report,
    save_model,
    save_report,
    serialize_model,
    serialize_report,
)
from .recurrent import RecurrentClassifier, TrainConfig, count_params
from .tree import DecisionTreeModel
from .tsne import Embedding, TsneConfig, embed, stratified_sample

__all__ = [
    "__version__",
    "ACTIVITY_NAMES",
    "CHANNEL_NAMES",
    "DYNAMIC_CODES",
    "N_CHANNELS",
    "N_CLASSES",
    "N_FEATURES",
    "STATIC_CODES",
    "WINDOW_LEN",
    "HarDataset",
    "HarSplit",
    "class_distribution",
    "load_dataset",
    "load_split",
    "make_synthetic",
    "ConfusionMatrix",
    "GridSpec",
    "Report",
    "build_report",
    "confusion",
    "grid_search",
    "per_class_recall",
    "stratified_folds",
    "DataError",
    "HarError",
    "ModelError",
    "SchemaViolation",
    "ShapeMismatch",
    "TrainingError",
    "RbfSvmOvO",
    "rbf_kernel",
    "rbf_kernel_matrix",
    "smo_solve",
    "LinearSvmOvR",
    "LogisticRegressionOvR",
    "deserialize_model",
    "deserialize_report",
    "load_model",
    "load_report",
    "save_model",
    "save_report",
    "serialize_model",
    "serialize_report",
    "RecurrentClassifier",
    "TrainConfig",
    "count_params",
    "DecisionTreeModel",
    "Embedding",
    "TsneConfig",
    "embed",
    "stratified_sample",
]
