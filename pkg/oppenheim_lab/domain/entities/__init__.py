from .chain_path import ChainPath
from .distribution import DistributionSpec
from .expansion_family import ExpansionFamily
from .experiment import ExperimentConfig
from .good_sequence import GoodSequence, RuleSequence, ScaledIntegerSequence
from .plan import TrimTruncPlan
from .rng_stream import RngStream
from .trimmed_sum import ExactMoments, TrimmedSumBreakdown

__all__ = [
    "ChainPath",
    "DistributionSpec",
    "ExactMoments",
    "ExpansionFamily",
    "ExperimentConfig",
    "GoodSequence",
    "RngStream",
    "RuleSequence",
    "ScaledIntegerSequence",
    "TrimTruncPlan",
    "TrimmedSumBreakdown",
]
