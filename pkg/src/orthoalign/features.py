"""Feature-tensor and region data model shared by every other module.

Feature maps hold one column per spatial location, flattened row-major:
column index = y * W + x. All in-memory numerics are float64; the 32-bit
on-disk representation lives in :mod:`orthoalign.tensorio`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DanglingLabel, IndexOutOfRange, ShapeMismatch

__all__ = [
    "FeatureMap",
    "LabelMap",
    "RegionKind",
    "RegionSpec",
    "ProjectionPair",
    "column",
    "validate_regions",
]


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class FeatureMap:
    """A C x (W*H) matrix of feature vectors with spatial shape metadata."""

    channels: int
    width: int
    height: int
    data: np.ndarray

    def __post_init__(self):
        if self.channels < 1 or self.width < 1 or self.height < 1:
            raise ShapeMismatch(
                f"non-positive dimensions C={self.channels} W={self.width} H={self.height}"
            )
        data = np.asarray(self.data, dtype=np.float64)
        if data.shape != (self.channels, self.width * self.height):
            raise ShapeMismatch(
                f"data shape {data.shape} != ({self.channels}, {self.width * self.height})"
            )
        if not np.all(np.isfinite(data)):
            raise ShapeMismatch("feature data contains non-finite entries")
        object.__setattr__(self, "data", _readonly(data))

    @property
    def n_locations(self) -> int:
        return self.width * self.height


def column(feature_map: FeatureMap, index: int) -> np.ndarray:
    """Return the feature vector at the given flattened spatial index."""
    if not 0 <= index < feature_map.n_locations:
        raise IndexOutOfRange(
            f"index {index} out of range [0, {feature_map.n_locations})"
        )
    return feature_map.data[:, index].copy()


@dataclass(frozen=True)
class LabelMap:
    """Integer region labels over a W x H grid, flattened row-major.

    Label 0 means unlabeled; labels >= 1 name regions.
    """

    width: int
    height: int
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if labels.shape != (self.width * self.height,):
            raise ShapeMismatch(
                f"label array length {labels.size} != W*H = {self.width * self.height}"
            )
        if np.any(labels < 0):
            raise ShapeMismatch("labels must be nonnegative (0 = unlabeled)")
        object.__setattr__(self, "labels", _readonly(labels))


class RegionKind(enum.Enum):
    USER_CORRESPONDENCE = "user_correspondence"
    SEMANTIC_SEGMENTATION = "semantic_segmentation"


@dataclass(frozen=True)
class RegionSpec:
    """Paired spatial masks: same nonzero label on both sides = one correspondence."""

    kind: RegionKind
    content_labels: np.ndarray
    style_labels: np.ndarray

    def __post_init__(self):
        for name in ("content_labels", "style_labels"):
            arr = np.asarray(getattr(self, name), dtype=np.int64).ravel()
            if np.any(arr < 0):
                raise ShapeMismatch(f"{name} must be nonnegative")
            object.__setattr__(self, name, _readonly(arr))

    def nonzero_labels(self) -> list[int]:
        """Sorted union of nonzero labels appearing on either side."""
        both = np.union1d(self.content_labels, self.style_labels)
        return [int(v) for v in both if v != 0]


def validate_regions(
    spec: RegionSpec, content: FeatureMap, style: FeatureMap
) -> RegionSpec:
    """Check a RegionSpec against the spatial sizes of two feature maps.

    Returns the spec unchanged on success; raises ShapeMismatch or
    DanglingLabel otherwise.
    """
    if spec.content_labels.size != content.n_locations:
        raise ShapeMismatch(
            f"content label length {spec.content_labels.size} != "
            f"W*H = {content.n_locations}"
        )
    if spec.style_labels.size != style.n_locations:
        raise ShapeMismatch(
            f"style label length {spec.style_labels.size} != "
            f"W*H = {style.n_locations}"
        )
    c_set = set(np.unique(spec.content_labels)) - {0}
    s_set = set(np.unique(spec.style_labels)) - {0}
    dangling = c_set.symmetric_difference(s_set)
    if dangling:
        raise DanglingLabel(
            f"labels present on only one side: {sorted(int(v) for v in dangling)}"
        )
    return spec


@dataclass(frozen=True)
class ProjectionPair:
    """Two square orthogonal matrices mapping features into a common subspace."""

    p_c: np.ndarray
    p_s: np.ndarray

    def __post_init__(self):
        for name in ("p_c", "p_s"):
            m = np.asarray(getattr(self, name), dtype=np.float64)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ShapeMismatch(f"{name} is not square: shape {m.shape}")
            if not np.all(np.isfinite(m)):
                raise ShapeMismatch(f"{name} contains non-finite entries")
            object.__setattr__(self, name, _readonly(m))
        if self.p_c.shape != self.p_s.shape:
            raise ShapeMismatch(
                f"projection shapes differ: {self.p_c.shape} vs {self.p_s.shape}"
            )

    @property
    def channels(self) -> int:
        return self.p_c.shape[0]

    def orthogonality_residuals(self) -> tuple[float, float]:
        """Frobenius norms of P^T P - I for both matrices."""
        eye = np.eye(self.channels)
        return (
            float(np.linalg.norm(self.p_c.T @ self.p_c - eye)),
            float(np.linalg.norm(self.p_s.T @ self.p_s - eye)),
        )


def identity_pair(channels: int) -> ProjectionPair:
    return ProjectionPair(np.eye(channels), np.eye(channels))
