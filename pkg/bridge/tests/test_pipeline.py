import json

import numpy as np
import pytest

from featurebridge.codec import BadImage
from featurebridge.pipeline import CoreInvocationError, decode, encode, encode_mask, stylize
from featurebridge.tensorfile import read_tensor


def test_encode_writes_tensor_and_sidecar(fixture_images, tmp_path):
    out = tmp_path / "c.oatf"
    features = encode(fixture_images["content"], out)
    on_disk = read_tensor(out)
    assert np.array_equal(on_disk, features)
    assert on_disk.shape == (48, 6, 8)
    sidecar = json.loads((tmp_path / "c.oatf.meta.json").read_text())
    assert sidecar["backend"] == "identity-pyramid"
    assert sidecar["preprocessing"]["resized"] is False


def test_decode_round_trips_image(fixture_images, tmp_path):
    from PIL import Image

    out = tmp_path / "c.oatf"
    encode(fixture_images["content"], out)
    decode(out, tmp_path / "back.png")
    orig = np.asarray(Image.open(fixture_images["content"]))
    back = np.asarray(Image.open(tmp_path / "back.png"))
    assert np.array_equal(orig, back)


def test_encode_mask_downsamples_without_blending(fixture_images, tmp_path):
    out = tmp_path / "m.oatf"
    encode_mask(fixture_images["content_mask"], out, (6, 8), 4)
    labels = read_tensor(out)
    assert labels.shape == (6, 8)
    assert labels.dtype == np.int32
    assert set(np.unique(labels)) == {1, 2}
    assert np.all(labels[:, :4] == 1) and np.all(labels[:, 4:] == 2)


def test_stylize_requires_masks_for_masked_modes(fixture_images, tmp_path):
    with pytest.raises(BadImage):
        stylize(
            fixture_images["content"],
            fixture_images["style"],
            tmp_path / "out.png",
            mode="semantic",
            work_dir=tmp_path / "w",
        )


def test_stylize_propagates_core_exit_code(fixture_images, tmp_path):
    # k larger than the location count makes the core exit with code 6
    with pytest.raises(CoreInvocationError) as info:
        stylize(
            fixture_images["content"],
            fixture_images["style"],
            tmp_path / "out.png",
            k=10_000,
            work_dir=tmp_path / "w",
        )
    assert info.value.exit_code == 6


def test_stylize_bidirectional_writes_reverse_image(fixture_images, tmp_path):
    paths = stylize(
        fixture_images["content"],
        fixture_images["style"],
        tmp_path / "out.png",
        k=3,
        iterations=15,
        bidirectional=True,
        reverse_output_image=tmp_path / "rev.png",
        work_dir=tmp_path / "w",
    )
    assert paths["image"].exists()
    assert paths["reverse_image"].exists()
    assert read_tensor(paths["reverse_features"]).shape == (48, 6, 8)
