"""Synthetic tensor generation for tests and regression fixtures.

Run as a module to materialize a fixture job on disk:

    python -m orthoalign.fixtures --seed 7 --out-dir fixtures/
"""

from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

from .affinity import knn_affinity, normalize_affinity
from .features import FeatureMap, LabelMap
from .solver import build_kernel
from .tensorio import write_feature_map, write_label_map


def random_feature_map(
    rng: np.random.Generator,
    channels: int,
    width: int,
    height: int,
    nonnegative: bool = True,
) -> FeatureMap:
    """Random features; nonnegative by default, matching post-ReLU activations."""
    data = rng.standard_normal((channels, width * height))
    if nonnegative:
        data = np.abs(data)
    return FeatureMap(channels, width, height, data)


def two_cluster_map(
    rng: np.random.Generator, channels: int, width: int, height: int
) -> FeatureMap:
    """Two well-separated feature clusters split across the spatial grid."""
    n = width * height
    centers = np.abs(rng.standard_normal((channels, 2))) * 4.0
    data = np.empty((channels, n))
    half = n // 2
    data[:, :half] = centers[:, :1] + 0.1 * np.abs(rng.standard_normal((channels, half)))
    data[:, half:] = centers[:, 1:] + 0.1 * np.abs(
        rng.standard_normal((channels, n - half))
    )
    return FeatureMap(channels, width, height, data)


def well_conditioned_instance(
    seed: int,
    channels: int = 8,
    n_content: int = 50,
    n_style: int = 50,
    k: int = 5,
    min_gap: float = 5e-3,
    max_resample: int = 200,
):
    """Random instance whose cross kernel the alternating solver can drive
    to the closed-form optimum.

    Requires distinct singular values (relative gap above min_gap) and an
    orientation-compatible optimum: the Cayley retraction keeps both
    projections at determinant +1, so the optimal composite map must also
    have determinant +1 to be reachable from the identity start.
    """
    rng = np.random.default_rng(seed)
    for _ in range(max_resample):
        wc, hc = n_content, 1
        ws, hs = n_style, 1
        content = random_feature_map(rng, channels, wc, hc)
        style = random_feature_map(rng, channels, ws, hs)
        na = normalize_affinity(knn_affinity(content, style, k))
        kernel = build_kernel(content, style, na)
        u, sigma, vt = np.linalg.svd(kernel.k_matrix)
        if sigma[-1] <= 0:
            continue
        if np.min(np.abs(np.diff(sigma))) / sigma[0] < min_gap:
            continue
        if np.linalg.det(u @ vt) < 0:
            continue
        return content, style, na, kernel
    raise RuntimeError(f"no well-conditioned instance found from seed {seed}")


def write_fixture_job(out_dir: Path, seed: int) -> Path:
    """Write a small deterministic two-cluster job (tensors + manifest)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    content = two_cluster_map(rng, 8, 6, 5)
    style = two_cluster_map(rng, 8, 5, 4)
    write_feature_map(content, out_dir / "content.oatf")
    write_feature_map(style, out_dir / "style.oatf")

    half_c = content.n_locations // 2
    half_s = style.n_locations // 2
    c_labels = np.where(np.arange(content.n_locations) < half_c, 1, 2)
    s_labels = np.where(np.arange(style.n_locations) < half_s, 1, 2)
    write_label_map(
        LabelMap(content.width, content.height, c_labels), out_dir / "content_mask.oatf"
    )
    write_label_map(
        LabelMap(style.width, style.height, s_labels), out_dir / "style_mask.oatf"
    )

    manifest = {
        "content_features": str(out_dir / "content.oatf"),
        "style_features": str(out_dir / "style.oatf"),
        "mode": "unsupervised",
        "k": 3,
        "iterations": 100,
        "output_features": str(out_dir / "stylized.oatf"),
        "output_projection_c": str(out_dir / "p_c.oatf"),
        "output_projection_s": str(out_dir / "p_s.oatf"),
        "report_path": str(out_dir / "report.txt"),
    }
    manifest_path = out_dir / "job.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="generate synthetic fixture tensors")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out-dir", type=Path, required=True)
    args = parser.parse_args(argv)
    path = write_fixture_job(args.out_dir, args.seed)
    print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
