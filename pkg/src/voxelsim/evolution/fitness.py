from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DecodeFailure, InvalidDescription
from ..tasks.locomotion import LocomotionConfig, MeasureKind, run_locomotion
from ..vsr import VSRDescription
from .representations import body_dimensions


def fitness_relative_velocity(description: VSRDescription, config: LocomotionConfig) -> float:
    """Negated travel velocity per voxel of the body's largest dimension."""
    cfg = LocomotionConfig(config.duration, config.control_step_interval, config.settings,
                           config.terrain, [MeasureKind.TRAVEL_VELOCITY])
    outcome = run_locomotion(description, cfg)
    if outcome.diverged:
        return math.inf
    return -outcome.values[0] / max(body_dimensions(description))


@dataclass
class LocomotionFitness:
    """Picklable genotype -> fitness callable for a representation."""

    representation: object
    config: LocomotionConfig

    def __call__(self, genotype: np.ndarray) -> float:
        try:
            description = self.representation.decode(genotype)
        except (DecodeFailure, InvalidDescription):
            return math.inf
        return fitness_relative_velocity(description, self.config)
