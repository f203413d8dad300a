"""Task registry: shape-keyed task identification, frozen per-task state,
and composition of local class predictions into global labels.

The classifier emits a fixed number of logits (13, the largest class count
any task may declare); a task with fewer classes uses the leading logits.
Global labels offset local ones by task_id * 13, so tasks own disjoint
global ranges. Note the two distinct counts: the classifier output width
(always 13) and the configured number of tasks (the redistribution grid).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .encoder import Encoder
from .errors import (
    AmbiguousShapeError,
    CapacityError,
    LabelError,
    UnknownTaskError,
)
from .redistribution import Normalizer, RedistributionConfig, normalize, redistribute

N_OUT = 13


@dataclass
class TaskDescriptor:
    task_id: int
    name: str
    shape_key: tuple[int, int]  # (window, channels)
    class_count: int
    encoder: Encoder
    normalizer: Normalizer
    manual_id: bool = False

    def __post_init__(self) -> None:
        if not 1 <= self.class_count <= N_OUT:
            raise LabelError(
                f"class_count {self.class_count} outside [1, {N_OUT}] for task {self.name!r}"
            )


def globalize(task_id: int, local: int) -> int:
    if not 0 <= local < N_OUT:
        raise LabelError(f"local class {local} outside [0, {N_OUT})")
    return task_id * N_OUT + local


def localize(global_label: int) -> tuple[int, int]:
    return divmod(global_label, N_OUT)


class TaskRegistry:
    """Owns every registered task's frozen encoder and normalizer."""

    def __init__(self, redistribution: RedistributionConfig):
        self.redistribution = redistribution
        self.tasks: list[TaskDescriptor] = []
        self._by_shape: dict[tuple[int, int], int] = {}
        self._ambiguous: set[tuple[int, int]] = set()

    @property
    def capacity(self) -> int:
        return self.redistribution.n_tasks

    def register_task(
        self,
        name: str,
        class_count: int,
        encoder: Encoder,
        normalizer: Normalizer,
        manual_id: bool = False,
    ) -> int:
        if len(self.tasks) >= self.capacity:
            raise CapacityError(
                f"registry already holds {self.capacity} tasks; cannot add {name!r}"
            )
        if not encoder.frozen:
            raise StateErrorNotFrozen(name)
        shape_key = (encoder.spec.window, encoder.spec.channels)
        if shape_key in self._by_shape and not manual_id:
            raise AmbiguousShapeError(
                f"shape {shape_key} already registered; pass manual_id=True "
                f"and route inputs with an explicit task id"
            )
        task_id = len(self.tasks)
        desc = TaskDescriptor(
            task_id=task_id,
            name=name,
            shape_key=shape_key,
            class_count=class_count,
            encoder=encoder,
            normalizer=normalizer,
            manual_id=manual_id,
        )
        self.tasks.append(desc)
        if shape_key in self._by_shape:
            self._ambiguous.add(shape_key)
        else:
            self._by_shape[shape_key] = task_id
        return task_id

    def identify_task(self, shape_key: tuple[int, int]) -> int:
        if shape_key in self._ambiguous:
            raise AmbiguousShapeError(
                f"shape {shape_key} maps to multiple tasks; an explicit id is required"
            )
        if shape_key not in self._by_shape:
            raise UnknownTaskError(f"no registered task with input shape {shape_key}")
        return self._by_shape[shape_key]

    def task_features(
        self, task_id: int, windows: np.ndarray, redistributed: bool = True
    ) -> np.ndarray:
        """Frozen-encoder features, normalized and (optionally) shifted into
        the task's grid sub-interval."""
        desc = self.tasks[task_id]
        feats = normalize(desc.normalizer, desc.encoder.forward(windows))
        if redistributed:
            feats = redistribute(self.redistribution, task_id, feats)
        return feats

    def predict_local(
        self,
        classifier,
        task_id: int,
        windows: np.ndarray,
        redistributed: bool = True,
    ) -> np.ndarray:
        """Local class indices via masked argmax over the task's classes.

        Ties resolve to the lowest index (argmax convention).
        """
        feats = self.task_features(task_id, windows, redistributed=redistributed)
        logits = classifier.forward(feats)
        masked = logits[:, : self.tasks[task_id].class_count]
        return masked.argmax(axis=1)

    def predict(
        self,
        classifier,
        windows: np.ndarray,
        task_id: int | None = None,
        redistributed: bool = True,
    ) -> np.ndarray:
        """Global labels for a batch of same-shape windows.

        The task is identified from the window shape unless ``task_id`` is
        given (required for shapes registered more than once).
        """
        if task_id is None:
            task_id = self.identify_task((windows.shape[2], windows.shape[3]))
        local = self.predict_local(classifier, task_id, windows, redistributed=redistributed)
        return task_id * N_OUT + local


def StateErrorNotFrozen(name: str):
    from .errors import StateError

    return StateError(f"encoder for task {name!r} must be frozen before registration")
