"""Regularity partitions by energy and entropy increment, with graph partitions and cut-norm oracles."""
from .errors import CapacityError, InputError, PreconditionError, RegLabError, StructuralError
from .growth import GrowthFunction, parse_growth
from .probability import (FactorSide, Partition, RandomVariable, SampleSpace, conditional_expectation,
                          energy, join, join_all, lift_event, pythagoras_residual)
from .witness import Witness, find_witness_exact, find_witness_heuristic
from .regularize import (RegularizationConfig, RegularizationResult, refine_by_witness, regularize)
from .graph import (BipartiteGraph, RegularityReport, SzemerediPartition, build_product_space,
                    check_pair_regularity, derive_vertex_partition, regularize_graph)
from .entropy import (DiscreteRV, conditional_entropy, conditional_mutual_information, entropy,
                      entropy_regularize, pinsker_gap)

__version__ = "0.1.0"
