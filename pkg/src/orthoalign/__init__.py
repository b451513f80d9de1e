"""Cross-domain feature alignment with orthogonal projections.

Builds sparse k-NN correspondences between two feature maps, learns a pair
of orthogonal projections by alternating Cayley-retraction optimization,
and transfers features between the two spaces through the resulting
orthogonal composite map.
"""

from .affinity import (
    AffinityMatrix,
    NormalizedAffinity,
    knn_affinity,
    merge_user_regions,
    normalize_affinity,
    normalize_columns,
    semantic_affinity,
)
from .features import (
    FeatureMap,
    LabelMap,
    ProjectionPair,
    RegionKind,
    RegionSpec,
    column,
    validate_regions,
)
from .pipeline import JobManifest, JobResult, run_job
from .solver import (
    CrossKernel,
    SolverConfig,
    SolverReport,
    Termination,
    align,
    build_kernel,
    cayley_retract,
    curvilinear_search,
    gradient_pc,
    gradient_ps,
    objective_cross,
    objective_full,
    procrustes_oracle,
    skew_step,
)
from .transfer import transfer_to_content, transfer_to_style

__version__ = "0.1.0"
