"""Cross-domain correspondence construction.

Builds the sparse binary affinity between content and style locations from
mutual/one-sided k-NN relations under cosine similarity, optionally merged
with user-drawn region correspondences or restricted to matching semantic
segmentation regions, and normalizes it into the matrices consumed by the
solver.

Zero-norm feature columns are excluded from neighbor search entirely: they
are never selected as neighbors and select none themselves, so they produce
no correspondences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import (
    ChannelMismatch,
    EmptyAffinity,
    KTooLarge,
    KTooLargeForRegion,
    ShapeMismatch,
)
from .features import FeatureMap, RegionKind, RegionSpec, validate_regions

__all__ = [
    "AffinityMatrix",
    "NormalizedAffinity",
    "normalize_columns",
    "knn_affinity",
    "merge_user_regions",
    "semantic_affinity",
    "normalize_affinity",
]

DEFAULT_K = 5


@dataclass(frozen=True)
class AffinityMatrix:
    """Sparse binary correspondence matrix between content and style locations."""

    n_content: int
    n_style: int
    entries: frozenset

    def __post_init__(self):
        for i, j in self.entries:
            if not (0 <= i < self.n_content and 0 <= j < self.n_style):
                raise ShapeMismatch(
                    f"entry ({i}, {j}) outside "
                    f"{self.n_content} x {self.n_style} bounds"
                )
        object.__setattr__(self, "entries", frozenset(self.entries))

    @property
    def pair_count(self) -> int:
        return len(self.entries)

    def sorted_pairs(self) -> np.ndarray:
        """Entries as an (N, 2) int array in lexicographic order."""
        if not self.entries:
            return np.empty((0, 2), dtype=np.int64)
        pairs = np.array(sorted(self.entries), dtype=np.int64)
        return pairs


@dataclass(frozen=True)
class NormalizedAffinity:
    """1/N-scaled affinity plus its row and column degree vectors."""

    u_cs: sp.csr_matrix
    d_c: np.ndarray
    d_s: np.ndarray

    @property
    def n_content(self) -> int:
        return self.u_cs.shape[0]

    @property
    def n_style(self) -> int:
        return self.u_cs.shape[1]


def normalize_columns(feature_map: FeatureMap) -> tuple[FeatureMap, list[int]]:
    """Scale every column to unit Euclidean norm.

    Zero-norm columns are left as all-zeros; their indices are returned in
    the second element.
    """
    norms = np.linalg.norm(feature_map.data, axis=0)
    zero = np.flatnonzero(norms == 0.0)
    safe = np.where(norms == 0.0, 1.0, norms)
    out = FeatureMap(
        feature_map.channels,
        feature_map.width,
        feature_map.height,
        feature_map.data / safe,
    )
    return out, [int(i) for i in zero]


def _unit_and_zero(feature_map: FeatureMap) -> tuple[np.ndarray, np.ndarray]:
    normalized, zero = normalize_columns(feature_map)
    return normalized.data, np.asarray(zero, dtype=np.int64)


def _knn_pairs(
    unit_c: np.ndarray,
    unit_s: np.ndarray,
    zero_c: np.ndarray,
    zero_s: np.ndarray,
    k: int,
) -> set:
    """Union of both k-NN directions over the given unit-normalized columns.

    ``unit_c`` and ``unit_s`` are C x n matrices; returned pairs use local
    column indices. Ties break toward the lower index (stable argsort).
    """
    sims = unit_c.T @ unit_s  # n_c x n_s
    pairs: set = set()

    # content queries select style neighbors; zero style columns never selected
    sel = sims.copy()
    if zero_s.size:
        sel[:, zero_s] = -np.inf
    order = np.argsort(-sel, axis=1, kind="stable")[:, :k]
    zero_c_set = set(int(i) for i in zero_c)
    for i in range(sel.shape[0]):
        if i in zero_c_set:
            continue
        for j in order[i]:
            if sel[i, j] == -np.inf:
                break
            pairs.add((i, int(j)))

    # style queries select content neighbors
    sel = sims.T.copy()
    if zero_c.size:
        sel[:, zero_c] = -np.inf
    order = np.argsort(-sel, axis=1, kind="stable")[:, :k]
    zero_s_set = set(int(j) for j in zero_s)
    for j in range(sel.shape[0]):
        if j in zero_s_set:
            continue
        for i in order[j]:
            if sel[j, i] == -np.inf:
                break
            pairs.add((int(i), j))

    return pairs


def _check_channels(content: FeatureMap, style: FeatureMap):
    if content.channels != style.channels:
        raise ChannelMismatch(
            f"content has {content.channels} channels, style {style.channels}"
        )


def knn_affinity(content: FeatureMap, style: FeatureMap, k: int) -> AffinityMatrix:
    """Binary affinity from the OR of both cosine k-NN directions.

    Entry (i, j) is present iff content column i is among the k most
    similar content columns to style column j, or style column j is among
    the k most similar style columns to content column i.
    """
    _check_channels(content, style)
    if k < 1:
        raise KTooLarge(f"k must be positive, got {k}")
    if k > min(content.n_locations, style.n_locations):
        raise KTooLarge(
            f"k={k} exceeds min side size "
            f"{min(content.n_locations, style.n_locations)}"
        )
    unit_c, zero_c = _unit_and_zero(content)
    unit_s, zero_s = _unit_and_zero(style)
    pairs = _knn_pairs(unit_c, unit_s, zero_c, zero_s, k)
    return AffinityMatrix(content.n_locations, style.n_locations, frozenset(pairs))


def merge_user_regions(base: AffinityMatrix, spec: RegionSpec) -> AffinityMatrix:
    """OR the affinity with the cross-product of user-drawn region pairs."""
    if spec.kind is not RegionKind.USER_CORRESPONDENCE:
        raise ShapeMismatch(f"expected user-correspondence spec, got {spec.kind}")
    if spec.content_labels.size != base.n_content:
        raise ShapeMismatch(
            f"content labels length {spec.content_labels.size} != {base.n_content}"
        )
    if spec.style_labels.size != base.n_style:
        raise ShapeMismatch(
            f"style labels length {spec.style_labels.size} != {base.n_style}"
        )
    pairs = set(base.entries)
    for label in spec.nonzero_labels():
        c_idx = np.flatnonzero(spec.content_labels == label)
        s_idx = np.flatnonzero(spec.style_labels == label)
        for i in c_idx:
            for j in s_idx:
                pairs.add((int(i), int(j)))
    return AffinityMatrix(base.n_content, base.n_style, frozenset(pairs))


def semantic_affinity(
    content: FeatureMap, style: FeatureMap, k: int, spec: RegionSpec
) -> AffinityMatrix:
    """k-NN affinity with neighbor search restricted to matching regions.

    Each labeled region pair runs its own two-directional k-NN; unlabeled
    locations produce no entries, and cross-label entries never occur.
    """
    _check_channels(content, style)
    if spec.kind is not RegionKind.SEMANTIC_SEGMENTATION:
        raise ShapeMismatch(f"expected semantic-segmentation spec, got {spec.kind}")
    validate_regions(spec, content, style)
    if k < 1:
        raise KTooLarge(f"k must be positive, got {k}")

    unit_c, zero_c = _unit_and_zero(content)
    unit_s, zero_s = _unit_and_zero(style)
    zero_c_set = set(int(i) for i in zero_c)
    zero_s_set = set(int(j) for j in zero_s)

    pairs: set = set()
    for label in spec.nonzero_labels():
        c_idx = np.flatnonzero(spec.content_labels == label)
        s_idx = np.flatnonzero(spec.style_labels == label)
        if k > min(c_idx.size, s_idx.size):
            raise KTooLargeForRegion(
                label,
                f"k={k} exceeds region {label} sizes "
                f"({c_idx.size} content, {s_idx.size} style)",
            )
        local_zero_c = np.flatnonzero(np.isin(c_idx, list(zero_c_set)))
        local_zero_s = np.flatnonzero(np.isin(s_idx, list(zero_s_set)))
        local = _knn_pairs(
            unit_c[:, c_idx], unit_s[:, s_idx], local_zero_c, local_zero_s, k
        )
        for li, lj in local:
            pairs.add((int(c_idx[li]), int(s_idx[lj])))
    return AffinityMatrix(content.n_locations, style.n_locations, frozenset(pairs))


def normalize_affinity(a: AffinityMatrix) -> NormalizedAffinity:
    """Scale entries to 1/N and compute row/column degree vectors."""
    n = a.pair_count
    if n == 0:
        raise EmptyAffinity("affinity matrix has no entries; alignment is undefined")
    pairs = a.sorted_pairs()
    u = sp.csr_matrix(
        (np.full(n, 1.0 / n), (pairs[:, 0], pairs[:, 1])),
        shape=(a.n_content, a.n_style),
    )
    d_c = np.asarray(u.sum(axis=1)).ravel()
    d_s = np.asarray(u.sum(axis=0)).ravel()
    return NormalizedAffinity(u, d_c, d_s)
