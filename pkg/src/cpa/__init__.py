"""Uncertainty propagation for locally-coupled dynamics.

Deterministic site dynamics with a finite neighborhood stencil are
translated into a probabilistic automaton over a partitioned state space:
a preprocessing step estimates per-window transition densities from the
flow map, and the simulation step evolves sparse per-site pattern
densities under deterministic or white-noise boundary conditions.
"""

from .automaton import Automaton, Deterministic, WhiteNoise
from .debruijn import (PatternGeometry, is_extendable, is_factorizable,
                       localize, reconstruct, reconstruct_anchored)
from .densities import (DeBruijnDensity, SparseDensity, l1_distance, marginal,
                        normalize, prune)
from .models import (ArsenateFlow, ArsenateParams, AveragingFlow,
                     CoarseSimulator, IdentityFlow, LinearAdvectionFlow)
from .oracle import (GlobalTransition, apply_global_transition,
                     build_global_transition, mc_reference, restrict_function,
                     restrict_samples)
from .partition import Box, RectilinearPartition, UniformPartition
from .translator import (LocalFunction, SampleBank, compose_local_function,
                         estimate_local_function, load_local_function,
                         save_local_function)
from .windows import Interval

__all__ = [
    "Automaton", "Deterministic", "WhiteNoise",
    "PatternGeometry", "is_extendable", "is_factorizable", "localize",
    "reconstruct", "reconstruct_anchored",
    "DeBruijnDensity", "SparseDensity", "l1_distance", "marginal",
    "normalize", "prune",
    "ArsenateFlow", "ArsenateParams", "AveragingFlow", "CoarseSimulator",
    "IdentityFlow", "LinearAdvectionFlow",
    "GlobalTransition", "apply_global_transition", "build_global_transition",
    "mc_reference", "restrict_function", "restrict_samples",
    "Box", "RectilinearPartition", "UniformPartition",
    "LocalFunction", "SampleBank", "compose_local_function",
    "estimate_local_function", "load_local_function", "save_local_function",
    "Interval",
]

__version__ = "0.1.0"
