from .augment import AugmentationPlan, augment, count_audit, iter_augment
from .clean import clean
from .extractors import (
    DataRecord,
    Modality,
    extract_all,
    forward_reasoning_samples,
    goal_interpretation_samples,
    goal_planning_samples,
    grounding_samples,
    world_modeling_samples,
)
from .trajectory import Trajectory, TrajectoryStep, read_trajectories, write_trajectories

__all__ = [
    "AugmentationPlan",
    "DataRecord",
    "Modality",
    "Trajectory",
    "TrajectoryStep",
    "augment",
    "clean",
    "count_audit",
    "extract_all",
    "forward_reasoning_samples",
    "goal_interpretation_samples",
    "goal_planning_samples",
    "grounding_samples",
    "iter_augment",
    "read_trajectories",
    "world_modeling_samples",
    "write_trajectories",
]
