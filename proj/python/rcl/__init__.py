"""Conflict detection for AI-driven RAN control.

Thin Python view of the C++ core: synthetic data generation, two-tower
training, sparsemax binarization, conflict identification and sweeps.
"""

from ._core import (
    ArgumentError,
    ChecksumError,
    ConflictModelSpec,
    Dataset,
    EntityDims,
    Hyperparams,
    IoError,
    ModelParams,
    RclError,
    SchemaError,
    StructuralError,
    TrainingError,
    UndefinedMetricError,
    binarize,
    boxplus_augment,
    default_topology,
    detect,
    generate,
    gradient_check,
    ground_truth_conflicts,
    identify,
    read_dataset,
    run_sweep,
    score,
    sparsemax_row,
    train,
    write_dataset,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
