"""Kernel logistic regression with multilevel circulant kernel matrices."""

from ._core import (
    BinaryModel,
    CapExceededError,
    Dataset,
    DimensionError,
    Error,
    FormatError,
    LevelOrder,
    MinMaxScaler,
    MulticlassModel,
    MultilevelCirculant,
    NumericalError,
    ParseError,
    ShiftedSolve,
    TrainConfig,
    ValidationError,
    accuracy,
    confusion_matrix,
    construct_column,
    exact_gram,
    generate_blobs,
    generate_checkerboard,
    generate_fig1_synthetic,
    load_model,
    load_sparse_text,
    macro_f1,
    mcc,
    mfft,
    mfft_adjoint,
    roc_auc,
    save_model,
    train,
    train_ova,
)

__all__ = [name for name in dir() if not name.startswith("_")]
