"""Move features between spaces with the learned orthogonal projections.

The composite map is a single C x C orthogonal matrix, so both directions
are isometries: Gram matrices and pairwise column distances pass through
unchanged.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NonOrthogonalPair
from .features import FeatureMap, ProjectionPair

__all__ = ["transfer_to_style", "transfer_to_content"]

ORTHOGONALITY_TOLERANCE = 1e-6


def _check(feature_map: FeatureMap, pair: ProjectionPair):
    if feature_map.channels != pair.channels:
        raise DimensionMismatch(
            f"feature channels {feature_map.channels} != "
            f"projection dimension {pair.channels}"
        )
    res_c, res_s = pair.orthogonality_residuals()
    if max(res_c, res_s) > ORTHOGONALITY_TOLERANCE:
        raise NonOrthogonalPair(
            f"projection pair has drifted off the orthogonal group "
            f"(residuals {res_c:.3e}, {res_s:.3e})"
        )


def transfer_to_style(content: FeatureMap, pair: ProjectionPair) -> FeatureMap:
    """Express content features in the style feature space."""
    _check(content, pair)
    composite = pair.p_s @ pair.p_c.T
    return FeatureMap(
        content.channels, content.width, content.height, composite @ content.data
    )


def transfer_to_content(style: FeatureMap, pair: ProjectionPair) -> FeatureMap:
    """Express style features in the content feature space (reverse direction)."""
    _check(style, pair)
    composite = pair.p_c @ pair.p_s.T
    return FeatureMap(
        style.channels, style.width, style.height, composite @ style.data
    )
