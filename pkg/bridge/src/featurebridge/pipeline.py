"""File-level encode/decode plus end-to-end stylization orchestration.

The bridge never aligns features itself: stylize encodes both images,
writes a job manifest, invokes the core CLI as a subprocess, and decodes
the resulting tensors.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from .codec import (
    BadImage,
    DecoderSpec,
    EncoderSpec,
    ShapeIncompatible,
    decode_array,
    default_decoder,
    default_encoder,
    encode_array,
    load_image,
    save_image,
    write_sidecar,
)
from .tensorfile import read_tensor, write_tensor

__all__ = ["encode", "decode", "encode_mask", "stylize", "CoreInvocationError"]


class CoreInvocationError(Exception):
    def __init__(self, exit_code: int, stderr: str):
        super().__init__(f"core CLI failed with exit code {exit_code}: {stderr.strip()}")
        self.exit_code = exit_code


def encode(image_path, output_path, spec: EncoderSpec | None = None) -> np.ndarray:
    """Image file -> feature tensor file plus a .meta.json sidecar."""
    spec = spec or default_encoder()
    image, preprocessing = load_image(image_path, spec.factor)
    features = encode_array(image, spec)
    write_tensor(features, output_path)
    write_sidecar(output_path, spec, preprocessing)
    return features


def decode(features_path, image_path, spec: DecoderSpec | None = None) -> None:
    """Feature tensor file -> 8-bit image file."""
    spec = spec or default_decoder()
    features = read_tensor(features_path)
    if features.ndim != 3:
        raise ShapeIncompatible(f"{features_path}: expected [C, H, W] tensor")
    save_image(decode_array(np.asarray(features, dtype=np.float64), spec), image_path)


def encode_mask(mask_path, output_path, feature_hw: tuple, factor: int) -> None:
    """Label image -> int32 [H, W] label map at feature resolution.

    Pixel values are region labels (0 = unlabeled); downsampling is
    nearest-neighbor so labels are never blended.
    """
    try:
        img = Image.open(mask_path).convert("I")
    except OSError as exc:
        raise BadImage(f"cannot read mask {mask_path}: {exc}") from exc
    h, w = feature_hw
    img = img.resize((w, h), Image.NEAREST)
    labels = np.asarray(img, dtype=np.int32)
    if np.any(labels < 0):
        raise BadImage(f"mask {mask_path} contains negative labels")
    write_tensor(labels, output_path)


def _core_command() -> list:
    override = os.environ.get("FEATUREBRIDGE_CORE_CLI")
    if override:
        return override.split()
    return [sys.executable, "-m", "orthoalign.cli"]


def stylize(
    content_image,
    style_image,
    output_image,
    mode: str = "unsupervised",
    content_mask=None,
    style_mask=None,
    k: int = 5,
    iterations: int = 100,
    bidirectional: bool = False,
    reverse_output_image=None,
    work_dir=None,
    encoder: EncoderSpec | None = None,
    decoder: DecoderSpec | None = None,
) -> dict:
    """Encode both images, run the core alignment job, decode the outputs.

    Returns a dict of the intermediate artifact paths.
    """
    encoder = encoder or default_encoder()
    decoder = decoder or default_decoder()
    work = Path(work_dir) if work_dir else Path(str(output_image) + ".work")
    work.mkdir(parents=True, exist_ok=True)

    paths = {
        "content_features": work / "content.oatf",
        "style_features": work / "style.oatf",
        "stylized_features": work / "stylized.oatf",
        "report": work / "report.txt",
    }
    content_features = encode(content_image, paths["content_features"], encoder)
    style_features = encode(style_image, paths["style_features"], encoder)

    manifest = {
        "content_features": str(paths["content_features"]),
        "style_features": str(paths["style_features"]),
        "mode": mode,
        "k": k,
        "iterations": iterations,
        "output_features": str(paths["stylized_features"]),
        "report_path": str(paths["report"]),
    }
    if mode in ("user_edit", "semantic"):
        if not content_mask or not style_mask:
            raise BadImage(f"mode {mode!r} requires both masks")
        paths["content_mask"] = work / "content_mask.oatf"
        paths["style_mask"] = work / "style_mask.oatf"
        encode_mask(
            content_mask, paths["content_mask"], content_features.shape[1:], encoder.factor
        )
        encode_mask(
            style_mask, paths["style_mask"], style_features.shape[1:], encoder.factor
        )
        manifest["content_mask"] = str(paths["content_mask"])
        manifest["style_mask"] = str(paths["style_mask"])
    if bidirectional:
        paths["reverse_features"] = work / "reverse.oatf"
        manifest["bidirectional"] = True
        manifest["output_reverse_features"] = str(paths["reverse_features"])

    manifest_path = work / "job.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    paths["manifest"] = manifest_path

    proc = subprocess.run(
        [*_core_command(), "run", "--manifest", str(manifest_path)],
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise CoreInvocationError(proc.returncode, proc.stderr)

    decode(paths["stylized_features"], output_image, decoder)
    if bidirectional:
        if not reverse_output_image:
            reverse_output_image = str(output_image) + ".reverse.png"
        decode(paths["reverse_features"], reverse_output_image, decoder)
        paths["reverse_image"] = Path(reverse_output_image)
    paths["image"] = Path(output_image)
    return paths
