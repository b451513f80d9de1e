"""Image <-> feature tensor bridge for the orthoalign alignment core."""

from .codec import (
    BadImage,
    DecoderSpec,
    EncoderSpec,
    ShapeIncompatible,
    decode_array,
    default_decoder,
    default_encoder,
    encode_array,
)
from .pipeline import CoreInvocationError, decode, encode, encode_mask, stylize
from .tensorfile import TensorFormatError, read_tensor, write_tensor

__version__ = "0.1.0"
