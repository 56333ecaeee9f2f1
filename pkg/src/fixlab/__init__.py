"""Fixed-point iteration laboratory for strictly nonexpansive maps."""
from .classifier import (
    CLASS_IDS,
    ClassSpec,
    ContractionCertificate,
    check_class,
    classify_all,
    sample_pairs,
)
from .iteration import (
    IterationReport,
    OrbitTrace,
    StoppingConfig,
    boundedness_transfer_bound,
    monotone_max_series,
    multi_start_uniqueness,
    run,
    tail_bound,
)
from .mappings import (
    MappingSpec,
    ModulusSpec,
    apply,
    apply_n,
    closed_form,
    evaluate_modulus,
)
from .metric import Point, RejectedInput, SpaceDescriptor, contains, distance, sample

__version__ = "0.1.0"

__all__ = [
    "CLASS_IDS", "ClassSpec", "ContractionCertificate", "check_class", "classify_all", "sample_pairs",
    "IterationReport", "OrbitTrace", "StoppingConfig", "boundedness_transfer_bound", "monotone_max_series",
    "multi_start_uniqueness", "run", "tail_bound",
    "MappingSpec", "ModulusSpec", "apply", "apply_n", "closed_form", "evaluate_modulus",
    "Point", "RejectedInput", "SpaceDescriptor", "contains", "distance", "sample",
]
