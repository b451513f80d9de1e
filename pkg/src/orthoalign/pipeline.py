"""Job manifests and the end-to-end feature alignment pipeline.

A manifest names the input tensors, the affinity mode, and the output
artifacts. run_job reads tensors, builds and normalizes the affinity,
solves for the projection pair, transfers features, and writes every
artifact plus a line-delimited report of the solve.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .affinity import (
    DEFAULT_K,
    knn_affinity,
    merge_user_regions,
    normalize_affinity,
    semantic_affinity,
)
from .errors import ManifestError
from .features import RegionKind, RegionSpec, validate_regions
from .solver import SolverConfig, SolverReport, Termination, align
from .tensorio import (
    read_feature_map,
    read_label_map,
    write_feature_map,
    write_matrix,
)
from .transfer import transfer_to_content, transfer_to_style

__all__ = ["JobManifest", "JobResult", "run_job", "write_report", "MODES"]

MODES = ("unsupervised", "user_edit", "semantic")


@dataclass(frozen=True)
class JobManifest:
    content_features: str
    style_features: str
    mode: str = "unsupervised"
    content_mask: str | None = None
    style_mask: str | None = None
    k: int = DEFAULT_K
    iterations: int = 100
    epsilon: float = 1e-6
    tau_init: float = 1e-2
    bidirectional: bool = False
    output_features: str = "stylized.oatf"
    output_reverse_features: str | None = None
    output_projection_c: str | None = None
    output_projection_s: str | None = None
    report_path: str | None = None

    _FIELD_ALIASES = {
        "iters": "iterations",
    }

    @classmethod
    def from_dict(cls, raw: dict) -> "JobManifest":
        known = {f for f in cls.__dataclass_fields__ if not f.startswith("_")}
        kwargs = {}
        for key, value in raw.items():
            key = cls._FIELD_ALIASES.get(key, key)
            if key not in known:
                raise ManifestError(f"unknown manifest field {key!r}")
            kwargs[key] = value
        try:
            manifest = cls(**kwargs)
        except TypeError as exc:
            raise ManifestError(str(exc)) from exc
        manifest.validate()
        return manifest

    @classmethod
    def from_json(cls, path) -> "JobManifest":
        try:
            raw = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ManifestError(f"manifest {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ManifestError(f"manifest {path} must be a JSON object")
        return cls.from_dict(raw)

    def validate(self) -> "JobManifest":
        if self.mode not in MODES:
            raise ManifestError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode in ("user_edit", "semantic"):
            if not self.content_mask or not self.style_mask:
                raise ManifestError(
                    f"mode {self.mode!r} requires both content_mask and style_mask"
                )
        if self.k < 1:
            raise ManifestError(f"k must be positive, got {self.k}")
        if self.iterations < 1:
            raise ManifestError(f"iterations must be positive, got {self.iterations}")
        if self.bidirectional and not self.output_reverse_features:
            raise ManifestError(
                "bidirectional jobs require output_reverse_features"
            )
        return self

    def with_overrides(self, **overrides) -> "JobManifest":
        """Apply non-None overrides (CLI flags beat manifest values)."""
        effective = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **effective).validate()

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            max_iterations=self.iterations,
            epsilon=self.epsilon,
            tau_init=self.tau_init,
        )


@dataclass
class JobResult:
    manifest: JobManifest
    report: SolverReport
    affinity_pairs: int


def _region_spec(manifest: JobManifest, kind: RegionKind) -> RegionSpec:
    content_mask = read_label_map(manifest.content_mask)
    style_mask = read_label_map(manifest.style_mask)
    return RegionSpec(kind, content_mask.labels, style_mask.labels)


def run_job(manifest: JobManifest) -> JobResult:
    """Execute a manifest end to end and write its artifacts."""
    manifest.validate()
    content = read_feature_map(manifest.content_features)
    style = read_feature_map(manifest.style_features)

    if manifest.mode == "unsupervised":
        affinity = knn_affinity(content, style, manifest.k)
    elif manifest.mode == "user_edit":
        spec = _region_spec(manifest, RegionKind.USER_CORRESPONDENCE)
        validate_regions(spec, content, style)
        base = knn_affinity(content, style, manifest.k)
        affinity = merge_user_regions(base, spec)
    else:
        spec = _region_spec(manifest, RegionKind.SEMANTIC_SEGMENTATION)
        affinity = semantic_affinity(content, style, manifest.k, spec)

    na = normalize_affinity(affinity)
    pair, report = align(content, style, na, manifest.solver_config())

    stylized = transfer_to_style(content, pair)
    write_feature_map(stylized, manifest.output_features)
    if manifest.bidirectional:
        reverse = transfer_to_content(style, pair)
        write_feature_map(reverse, manifest.output_reverse_features)
    if manifest.output_projection_c:
        write_matrix(pair.p_c, manifest.output_projection_c)
    if manifest.output_projection_s:
        write_matrix(pair.p_s, manifest.output_projection_s)
    if manifest.report_path:
        write_report(report, manifest, affinity.pair_count, manifest.report_path)
    return JobResult(manifest, report, affinity.pair_count)


def format_report(
    report: SolverReport, manifest: JobManifest | None = None, pairs: int | None = None
) -> str:
    """Line-delimited key=value report: config header, one line per iteration."""
    lines = []
    if manifest is not None:
        lines.append(
            "config"
            f" mode={manifest.mode}"
            f" k={manifest.k}"
            f" iters={manifest.iterations}"
            f" epsilon={manifest.epsilon:.6e}"
            f" tau_init={manifest.tau_init:.6e}"
            f" bidirectional={str(manifest.bidirectional).lower()}"
        )
    if pairs is not None:
        lines.append(f"affinity pairs={pairs}")
    for t in range(report.iterations_run + 1):
        parts = [f"iter={t}", f"objective={report.objective_trace[t]:.17e}"]
        if t < len(report.residual_c_trace):
            parts.append(f"residual_c={report.residual_c_trace[t]:.17e}")
            parts.append(f"residual_s={report.residual_s_trace[t]:.17e}")
        if t >= 1:
            tau_c, tau_s = report.tau_trace[t - 1]
            parts.append(f"tau_c={tau_c:.17e}")
            parts.append(f"tau_s={tau_s:.17e}")
            stall_c, stall_s = report.stall_trace[t - 1]
            if stall_c or stall_s:
                parts.append(f"stall_c={str(stall_c).lower()}")
                parts.append(f"stall_s={str(stall_s).lower()}")
        lines.append(" ".join(parts))
    lines.append(
        f"termination={report.termination.value} iterations={report.iterations_run}"
    )
    return "\n".join(lines) + "\n"


def write_report(
    report: SolverReport, manifest: JobManifest, pairs: int, path
) -> None:
    Path(path).write_text(format_report(report, manifest, pairs))
