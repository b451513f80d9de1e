"""VGG-19 encoder/decoder backend (requires torch and checkpoint files).

The encoder is VGG-19 truncated at relu4_1, the first activation of the
fourth down-sampling stage; the decoder mirrors it with nearest-neighbor
upsampling. Both consume pretrained checkpoints supplied by the user via
EncoderSpec/DecoderSpec.weights — nothing is trained here. Feature channel
count at relu4_1 is 512; spatial downsampling factor is 8.
"""

from __future__ import annotations

import numpy as np

TRUNCATION_LAYER = "relu4_1"
VGG_FACTOR = 8
VGG_CHANNELS = 512

# conv output channels up to relu4_1; "M" = 2x2 max pool
_ENCODER_PLAN = [64, 64, "M", 128, 128, "M", 256, 256, 256, 256, "M", 512]

_IMAGENET_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float32)
_IMAGENET_STD = np.array([0.229, 0.224, 0.225], dtype=np.float32)


def _torch():
    try:
        import torch
        import torch.nn as nn
    except ImportError as exc:  # pragma: no cover - exercised only without torch
        raise RuntimeError(
            "the vgg19 backend requires torch; install featurebridge[vgg]"
        ) from exc
    return torch, nn


def build_encoder():
    torch, nn = _torch()
    layers = []
    in_ch = 3
    for item in _ENCODER_PLAN:
        if item == "M":
            layers.append(nn.MaxPool2d(2, 2))
        else:
            layers.append(nn.Conv2d(in_ch, item, 3, padding=1))
            layers.append(nn.ReLU(inplace=True))
            in_ch = item
    return nn.Sequential(*layers)


def build_decoder():
    torch, nn = _torch()
    layers = []
    in_ch = VGG_CHANNELS
    for item in reversed(_ENCODER_PLAN):
        if item == "M":
            layers.append(nn.Upsample(scale_factor=2, mode="nearest"))
        else:
            layers.append(nn.Conv2d(in_ch, item, 3, padding=1))
            layers.append(nn.ReLU(inplace=True))
            in_ch = item
    layers.append(nn.Conv2d(in_ch, 3, 3, padding=1))
    return nn.Sequential(*layers)


def _load(module, weights_path):
    torch, _ = _torch()
    if not weights_path:
        raise RuntimeError("vgg19 backend needs a checkpoint path in spec.weights")
    state = torch.load(weights_path, map_location="cpu", weights_only=True)
    module.load_state_dict(state)
    module.eval()
    return module


def encode_array(image: np.ndarray, spec) -> np.ndarray:
    torch, _ = _torch()
    encoder = _load(build_encoder(), spec.weights)
    x = (image.astype(np.float32) - _IMAGENET_MEAN[:, None, None]) / _IMAGENET_STD[
        :, None, None
    ]
    with torch.no_grad():
        features = encoder(torch.from_numpy(x).unsqueeze(0))
    return features.squeeze(0).numpy().astype(np.float32)


def decode_array(features: np.ndarray, spec) -> np.ndarray:
    torch, _ = _torch()
    decoder = _load(build_decoder(), spec.weights)
    with torch.no_grad():
        image = decoder(torch.from_numpy(features.astype(np.float32)).unsqueeze(0))
    return image.squeeze(0).numpy()
