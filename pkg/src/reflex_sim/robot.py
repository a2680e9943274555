"""Robot bundle: the arm model plus its muscle set and reflex grouping."""

from __future__ import annotations

from dataclasses import dataclass

from .arm import ArmModel
from .muscles import MuscleParams


@dataclass(frozen=True)
class Robot:
    model: ArmModel
    muscles: MuscleParams  # array-valued: one entry per muscle
    joint_names: tuple[str, ...]
    muscle_names: tuple[str, ...]
    groups: tuple[tuple[int, ...], ...]  # reflex inhibition groups
