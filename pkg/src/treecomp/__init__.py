"""Tree-structured gated encoders (Tree-LSTM, Tree-GRU, tag-enhanced variants) for
classifying the discourse relation between two parsed text spans."""
from .corpus import Instance, Vocab, build_vocab, expand_multilabel, load_glove, load_instances
from .encoder import encode_argument, encoder_backward
from .errors import (
    DataError,
    InvalidArgument,
    IoError,
    ModeError,
    NumericsError,
    ParseError,
    ShapeError,
    StateError,
    TreecompError,
)
from .kernels import BACKEND
from .model import MODES, ModelParams
from .trainer import TrainingConfig, evaluate, gradient_check, train
from .treebank import (
    BinaryTree,
    ParseTree,
    binarize_right,
    collapse_unary_chains,
    join_multisentence,
    parse_ptb,
    serialize,
)

__version__ = "0.1.0"
