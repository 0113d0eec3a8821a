from .ea import (
    EAConfig,
    EvolutionHistory,
    HistoryRecord,
    Individual,
    evolve,
    extended_segment_crossover,
    gaussian_mutation,
    genotype_hash,
    sphere,
    tournament_select,
)
from .fitness import LocomotionFitness, fitness_relative_velocity
from .representations import (
    BODY_MATERIALS,
    SENSING_TEMPLATE,
    EvoDevoController,
    GaussianMixtureBody,
    PhaseController,
    SensingMLP,
    body_dimensions,
    material_map,
    mixture_values,
    shape_grid,
)
