import numpy as np
import pytest

from featurebridge.codec import (
    PYRAMID_CHANNELS,
    PYRAMID_FACTOR,
    ShapeIncompatible,
    _depth_to_space,
    _space_to_depth,
    decode_array,
    default_decoder,
    default_encoder,
    encode_array,
    load_image,
    mixing_matrix,
    save_image,
)


def test_mixing_matrix_is_orthogonal_and_frozen():
    m1 = mixing_matrix()
    m2 = mixing_matrix()
    assert np.array_equal(m1, m2)
    assert m1.shape == (PYRAMID_CHANNELS, PYRAMID_CHANNELS)
    err = np.abs(m1.T @ m1 - np.eye(PYRAMID_CHANNELS)).max()
    assert err < 1e-12


def test_space_to_depth_inverts():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((3, 16, 20))
    y = _space_to_depth(x, PYRAMID_FACTOR)
    assert y.shape == (PYRAMID_CHANNELS, 4, 5)
    assert np.array_equal(_depth_to_space(y, PYRAMID_FACTOR), x)


def test_space_to_depth_rejects_indivisible():
    with pytest.raises(ShapeIncompatible):
        _space_to_depth(np.zeros((3, 10, 12)), PYRAMID_FACTOR)


def test_encode_decode_array_round_trip():
    rng = np.random.default_rng(4)
    image = rng.uniform(size=(3, 24, 32))
    features = encode_array(image, default_encoder())
    assert features.shape == (PYRAMID_CHANNELS, 6, 8)
    assert features.dtype == np.float32
    back = decode_array(features.astype(np.float64), default_decoder())
    assert np.abs(back - image).max() < 1e-6


def test_decoder_rejects_channel_mismatch():
    with pytest.raises(ShapeIncompatible):
        decode_array(np.zeros((7, 4, 4)), default_decoder())


def test_load_image_pads_to_factor(tmp_path):
    from PIL import Image

    Image.new("RGB", (33, 26), (10, 20, 30)).save(tmp_path / "odd.png")
    arr, record = load_image(tmp_path / "odd.png")
    assert arr.shape == (3, 24, 32)
    assert record["resized"] is True
    assert record["source_size"] == [33, 26]


def test_save_load_image_round_trip(tmp_path):
    rng = np.random.default_rng(5)
    arr = rng.uniform(size=(3, 8, 12))
    save_image(arr, tmp_path / "x.png")
    back, record = load_image(tmp_path / "x.png")
    assert record["resized"] is False
    assert np.abs(back - arr).max() <= 0.5 / 255.0 + 1e-9
