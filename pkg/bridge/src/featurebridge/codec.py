"""Image <-> feature codecs.

Two backends:

* ``identity-pyramid`` (default): space-to-depth by a fixed factor followed
  by a frozen orthogonal channel mixing. The decoder is the exact inverse,
  so reconstruction is lossless up to float32 tensor storage. The mixing
  matrix is derived deterministically from a frozen seed recorded in the
  spec metadata, playing the role of a pretrained checkpoint that ships
  with the package.

* ``vgg19``: the classical pretrained-encoder path (truncated at relu4_1,
  mirror decoder); requires user-supplied checkpoint files and torch. See
  :mod:`featurebridge.vgg`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

__all__ = [
    "BadImage",
    "ShapeIncompatible",
    "EncoderSpec",
    "DecoderSpec",
    "default_encoder",
    "default_decoder",
    "load_image",
    "save_image",
    "encode_array",
    "decode_array",
]

PYRAMID_FACTOR = 4
PYRAMID_SEED = 24333
PYRAMID_CHANNELS = 3 * PYRAMID_FACTOR * PYRAMID_FACTOR


class BadImage(Exception):
    pass


class ShapeIncompatible(Exception):
    pass


@dataclass(frozen=True)
class EncoderSpec:
    backend: str = "identity-pyramid"
    factor: int = PYRAMID_FACTOR
    channels: int = PYRAMID_CHANNELS
    weights: str | None = None
    metadata: dict = field(
        default_factory=lambda: {
            "architecture": f"identity-pyramid-f{PYRAMID_FACTOR}",
            "truncation_layer": "mix1",
            "mixing_seed": PYRAMID_SEED,
        }
    )


@dataclass(frozen=True)
class DecoderSpec:
    backend: str = "identity-pyramid"
    factor: int = PYRAMID_FACTOR
    channels: int = PYRAMID_CHANNELS
    weights: str | None = None
    metadata: dict = field(
        default_factory=lambda: {
            "architecture": f"identity-pyramid-f{PYRAMID_FACTOR}-inverse",
            "mixing_seed": PYRAMID_SEED,
        }
    )


def default_encoder() -> EncoderSpec:
    return EncoderSpec()


def default_decoder() -> DecoderSpec:
    return DecoderSpec()


def mixing_matrix(seed: int = PYRAMID_SEED, n: int = PYRAMID_CHANNELS) -> np.ndarray:
    """Frozen orthogonal channel-mixing matrix (the shipped 'checkpoint')."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def load_image(path, factor: int = PYRAMID_FACTOR) -> tuple[np.ndarray, dict]:
    """Image file -> float array (3, H, W) in [0, 1], H and W multiples of factor.

    Returns the array plus the preprocessing record for the sidecar manifest.
    """
    try:
        img = Image.open(path)
        img = img.convert("RGB")
    except (OSError, UnidentifiedImageError) as exc:
        raise BadImage(f"cannot read image {path}: {exc}") from exc
    w, h = img.size
    w_fit = max(factor, (w // factor) * factor)
    h_fit = max(factor, (h // factor) * factor)
    resized = (w_fit, h_fit) != (w, h)
    if resized:
        img = img.resize((w_fit, h_fit), Image.BILINEAR)
    arr = np.asarray(img, dtype=np.float32) / 255.0  # (H, W, 3)
    record = {
        "source_size": [w, h],
        "input_size": [w_fit, h_fit],
        "resized": resized,
        "resample": "bilinear",
        "scale": "1/255",
    }
    return arr.transpose(2, 0, 1), record


def save_image(arr: np.ndarray, path) -> None:
    """(3, H, W) float array in [0, 1] -> 8-bit image file."""
    clipped = np.clip(arr, 0.0, 1.0)
    pixels = np.round(clipped * 255.0).astype(np.uint8).transpose(1, 2, 0)
    Image.fromarray(pixels, mode="RGB").save(path)


def _space_to_depth(x: np.ndarray, factor: int) -> np.ndarray:
    c, h, w = x.shape
    if h % factor or w % factor:
        raise ShapeIncompatible(
            f"spatial size {h}x{w} not divisible by downsampling factor {factor}"
        )
    x = x.reshape(c, h // factor, factor, w // factor, factor)
    x = x.transpose(0, 2, 4, 1, 3)
    return x.reshape(c * factor * factor, h // factor, w // factor)


def _depth_to_space(y: np.ndarray, factor: int) -> np.ndarray:
    cf, h, w = y.shape
    c = cf // (factor * factor)
    if c * factor * factor != cf:
        raise ShapeIncompatible(
            f"channel count {cf} is not a multiple of factor^2 = {factor * factor}"
        )
    y = y.reshape(c, factor, factor, h, w)
    y = y.transpose(0, 3, 1, 4, 2)
    return y.reshape(c, h * factor, w * factor)


def encode_array(image: np.ndarray, spec: EncoderSpec) -> np.ndarray:
    """(3, H, W) image array -> (C, H/f, W/f) feature tensor."""
    if spec.backend == "identity-pyramid":
        stacked = _space_to_depth(image, spec.factor)
        mix = mixing_matrix(spec.metadata["mixing_seed"], spec.channels)
        flat = stacked.reshape(spec.channels, -1)
        return (mix @ flat).reshape(stacked.shape).astype(np.float32)
    if spec.backend == "vgg19":
        from . import vgg

        return vgg.encode_array(image, spec)
    raise ShapeIncompatible(f"unknown encoder backend {spec.backend!r}")


def decode_array(features: np.ndarray, spec: DecoderSpec) -> np.ndarray:
    """(C, H, W) feature tensor -> (3, H*f, W*f) image array."""
    if spec.backend == "identity-pyramid":
        if features.shape[0] != spec.channels:
            raise ShapeIncompatible(
                f"feature tensor has {features.shape[0]} channels, "
                f"decoder expects {spec.channels}"
            )
        mix = mixing_matrix(spec.metadata["mixing_seed"], spec.channels)
        flat = features.reshape(spec.channels, -1).astype(np.float64)
        stacked = (mix.T @ flat).reshape(features.shape)
        return _depth_to_space(stacked, spec.factor)
    if spec.backend == "vgg19":
        from . import vgg

        return vgg.decode_array(features, spec)
    raise ShapeIncompatible(f"unknown decoder backend {spec.backend!r}")


def write_sidecar(path, spec: EncoderSpec, preprocessing: dict) -> None:
    doc = {
        "backend": spec.backend,
        "metadata": spec.metadata,
        "preprocessing": preprocessing,
    }
    Path(str(path) + ".meta.json").write_text(json.dumps(doc, indent=2) + "\n")
