"""Feature/target container shared by all trainers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..domain import PARAMETERS, ParameterKind
from ..errors import ValidationError
from ..thresholds import LabeledSeries


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix plus health labels for one target parameter.

    Columns follow the canonical parameter order; in univariate mode only
    the target parameter's column is present.
    """

    features: np.ndarray
    targets: np.ndarray
    target_parameter: ParameterKind
    feature_parameters: tuple[ParameterKind, ...] = tuple(PARAMETERS)

    def __post_init__(self) -> None:
        features = np.asarray(self.features, dtype=float)
        targets = np.asarray(self.targets, dtype=np.int8)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "targets", targets)
        if features.ndim != 2 or features.shape[0] < 1:
            raise ValidationError("features must be a non-empty 2-D matrix")
        if not self.feature_parameters or any(
            p not in PARAMETERS for p in self.feature_parameters
        ):
            raise ValidationError("feature_parameters must name known parameters")
        if features.shape[1] != len(self.feature_parameters):
            raise ValidationError(
                f"feature matrix has {features.shape[1]} columns for "
                f"{len(self.feature_parameters)} named parameters"
            )
        if targets.shape != (features.shape[0],):
            raise ValidationError("targets must align with feature rows")
        if not np.isfinite(features).all():
            raise ValidationError("features contain non-finite values")
        if targets.min(initial=0) < 0 or targets.max(initial=0) > 2:
            raise ValidationError("targets must be health labels 0..2")

    @property
    def n(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_features(self) -> int:
        return int(self.features.shape[1])

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.targets, minlength=3)

    def subset(self, indices: Sequence[int] | np.ndarray) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(
            features=self.features[idx],
            targets=self.targets[idx],
            target_parameter=self.target_parameter,
            feature_parameters=self.feature_parameters,
        )


def make_datasets(
    labeled: LabeledSeries, *, univariate: bool = False
) -> dict[ParameterKind, Dataset]:
    """One dataset per target parameter from a labeled series.

    Every dataset shares the same five-column feature matrix (or the
    single target column in univariate mode); targets are that
    parameter's health labels.
    """
    full = labeled.base.feature_matrix()
    out: dict[ParameterKind, Dataset] = {}
    for i, parameter in enumerate(PARAMETERS):
        if univariate:
            features = full[:, i : i + 1]
            columns: tuple[ParameterKind, ...] = (parameter,)
        else:
            features = full
            columns = tuple(PARAMETERS)
        out[parameter] = Dataset(
            features=features,
            targets=np.asarray(labeled.labels[parameter], dtype=np.int8),
            target_parameter=parameter,
            feature_parameters=columns,
        )
    return out
