"""Command-line surface tying the pipeline together.

Exit codes:
    0  success (Converged or MaxIterations)
    2  manifest / argument validation errors
    3  tensor file errors (bad header, truncation, unsupported dtype, IO)
    4  shape, channel or dimension mismatches
    5  region label errors (dangling labels)
    6  k too large (globally or for a labeled region)
    7  empty affinity: no correspondences exist between the inputs
    8  numerical failure or non-orthogonal projection pair
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import errors
from .affinity import (
    AffinityMatrix,
    DEFAULT_K,
    knn_affinity,
    merge_user_regions,
    normalize_affinity,
    semantic_affinity,
)
from .features import FeatureMap, ProjectionPair, RegionKind, RegionSpec, validate_regions
from .pipeline import MODES, JobManifest, format_report, run_job, write_report
from .solver import align
from .tensorio import (
    read_feature_map,
    read_label_map,
    read_matrix,
    read_raw,
    write_feature_map,
    write_matrix,
)
from .transfer import transfer_to_content, transfer_to_style

EXIT_CODES = [
    ((errors.ManifestError,), 2),
    (
        (
            errors.BadHeader,
            errors.TruncatedPayload,
            errors.UnsupportedDtype,
            errors.IoFailure,
        ),
        3,
    ),
    (
        (
            errors.ShapeMismatch,
            errors.ChannelMismatch,
            errors.DimensionMismatch,
            errors.IndexOutOfRange,
        ),
        4,
    ),
    ((errors.DanglingLabel,), 5),
    ((errors.KTooLarge,), 6),
    ((errors.EmptyAffinity,), 7),
    ((errors.NumericalFailure, errors.NonOrthogonalPair), 8),
]


def _exit_code(exc: Exception) -> int:
    for classes, code in EXIT_CODES:
        if isinstance(exc, classes):
            return code
    return 1


def _load_region_spec(mode: str, content_mask: str, style_mask: str) -> RegionSpec:
    kind = (
        RegionKind.USER_CORRESPONDENCE
        if mode == "user_edit"
        else RegionKind.SEMANTIC_SEGMENTATION
    )
    c = read_label_map(content_mask)
    s = read_label_map(style_mask)
    return RegionSpec(kind, c.labels, s.labels)


def _build_affinity(content, style, args) -> AffinityMatrix:
    if args.mode != "unsupervised" and not (args.content_mask and args.style_mask):
        raise errors.ManifestError(
            f"mode {args.mode!r} requires --content-mask and --style-mask"
        )
    if args.mode == "unsupervised":
        return knn_affinity(content, style, args.k)
    spec = _load_region_spec(args.mode, args.content_mask, args.style_mask)
    if args.mode == "user_edit":
        validate_regions(spec, content, style)
        return merge_user_regions(knn_affinity(content, style, args.k), spec)
    return semantic_affinity(content, style, args.k, spec)


def _write_affinity_json(affinity: AffinityMatrix, path: str):
    doc = {
        "n_content": affinity.n_content,
        "n_style": affinity.n_style,
        "pairs": [[int(i), int(j)] for i, j in affinity.sorted_pairs()],
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n")


def _read_affinity_json(path: str) -> AffinityMatrix:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise errors.IoFailure(f"cannot read affinity {path}: {exc}") from exc
    return AffinityMatrix(
        int(doc["n_content"]),
        int(doc["n_style"]),
        frozenset((int(i), int(j)) for i, j in doc["pairs"]),
    )


def cmd_inspect(args) -> int:
    tf = read_raw(args.path)
    kind = {"f": "float32", "i": "int32"}[tf.dtype.kind]
    values = tf.values.astype(np.float64)
    print(f"path: {args.path}")
    print(f"dtype: {kind}")
    print(f"shape: {list(tf.shape)}")
    print(f"min: {values.min():.6g}")
    print(f"max: {values.max():.6g}")
    print(f"mean: {values.mean():.6g}")
    return 0


def cmd_affinity(args) -> int:
    content = read_feature_map(args.content)
    style = read_feature_map(args.style)
    affinity = _build_affinity(content, style, args)
    _write_affinity_json(affinity, args.output)
    print(f"pairs={affinity.pair_count}")
    return 0


def cmd_align(args) -> int:
    content = read_feature_map(args.content)
    style = read_feature_map(args.style)
    affinity = _read_affinity_json(args.affinity)
    na = normalize_affinity(affinity)
    manifest = JobManifest(
        content_features=args.content,
        style_features=args.style,
        k=DEFAULT_K,
        iterations=args.iters,
        epsilon=args.epsilon,
    )
    pair, report = align(content, style, na, manifest.solver_config())
    write_matrix(pair.p_c, args.projection_c)
    write_matrix(pair.p_s, args.projection_s)
    if args.report:
        write_report(report, manifest, affinity.pair_count, args.report)
    else:
        sys.stdout.write(format_report(report, manifest, affinity.pair_count))
    return 0


def _nearest_orthogonal(m: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(m)
    return u @ vt


def cmd_transfer(args) -> int:
    features = read_feature_map(args.features)
    # float32 storage perturbs orthogonality; snap back to the nearest
    # orthogonal matrix before applying the pair
    p_c = _nearest_orthogonal(read_matrix(args.projection_c))
    p_s = _nearest_orthogonal(read_matrix(args.projection_s))
    pair = ProjectionPair(p_c, p_s)
    out = (
        transfer_to_content(features, pair)
        if args.reverse
        else transfer_to_style(features, pair)
    )
    write_feature_map(out, args.output)
    return 0


def cmd_run(args) -> int:
    manifest = JobManifest.from_json(args.manifest)
    manifest = manifest.with_overrides(
        mode=args.mode,
        k=args.k,
        iterations=args.iters,
        epsilon=args.epsilon,
        content_mask=args.content_mask,
        style_mask=args.style_mask,
        bidirectional=True if args.bidirectional else None,
    )
    result = run_job(manifest)
    print(
        f"termination={result.report.termination.value} "
        f"iterations={result.report.iterations_run} "
        f"pairs={result.affinity_pairs}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orthoalign",
        description="Cross-domain feature alignment with orthogonal projections",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="print tensor header and basic stats")
    p.add_argument("path")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("affinity", help="build a correspondence matrix")
    p.add_argument("--content", required=True)
    p.add_argument("--style", required=True)
    p.add_argument("--k", type=int, default=DEFAULT_K)
    p.add_argument("--mode", choices=MODES, default="unsupervised")
    p.add_argument("--content-mask")
    p.add_argument("--style-mask")
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_affinity)

    p = sub.add_parser("align", help="solve for the orthogonal projection pair")
    p.add_argument("--content", required=True)
    p.add_argument("--style", required=True)
    p.add_argument("--affinity", required=True)
    p.add_argument("--iters", type=int, default=100)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--projection-c", required=True)
    p.add_argument("--projection-s", required=True)
    p.add_argument("--report")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("transfer", help="apply a projection pair to features")
    p.add_argument("--features", required=True)
    p.add_argument("--projection-c", required=True)
    p.add_argument("--projection-s", required=True)
    p.add_argument("--reverse", action="store_true", help="style-to-content direction")
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(func=cmd_transfer)

    p = sub.add_parser("run", help="full pipeline from a job manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--k", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--content-mask")
    p.add_argument("--style-mask")
    p.add_argument("--bidirectional", action="store_true")
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except errors.EmptyAffinity as exc:
        print(f"error: empty affinity: {exc}", file=sys.stderr)
        return 7
    except errors.OrthoAlignError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
