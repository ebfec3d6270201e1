"""Oversampling for imbalanced classification, with a CV benchmark harness."""

from .core import DataError, Dataset, class_counts, load_csv, write_csv
from .harness import run_experiment, stratified_folds, timing_scan
from .metrics import MetricReport, confusion, evaluate
from .samplers import (DISPLAY_NAMES, SAMPLER_IDS, SamplerConfig, oversample, transform,
                       transform_detailed)

__version__ = "0.1.0"

__all__ = [
    "DISPLAY_NAMES", "DataError", "Dataset", "MetricReport", "SAMPLER_IDS", "SamplerConfig",
    "class_counts", "confusion", "evaluate", "load_csv", "oversample", "run_experiment",
    "stratified_folds", "timing_scan", "transform", "transform_detailed", "write_csv",
]
