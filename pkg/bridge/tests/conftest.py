import numpy as np
import pytest
from PIL import Image


def _write_noise_png(path, seed, width, height):
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
    Image.fromarray(pixels, "RGB").save(path)


def _write_mask_png(path, width, height):
    # two vertical halves, labels 1 and 2
    labels = np.ones((height, width), dtype=np.uint8)
    labels[:, width // 2 :] = 2
    Image.fromarray(labels, "L").save(path)


@pytest.fixture(scope="session")
def fixture_images(tmp_path_factory):
    """Deterministic fixture images; sizes are multiples of the pyramid factor."""
    root = tmp_path_factory.mktemp("images")
    paths = {
        "content": root / "content.png",
        "style": root / "style.png",
        "content_mask": root / "content_mask.png",
        "style_mask": root / "style_mask.png",
    }
    _write_noise_png(paths["content"], 101, 32, 24)
    _write_noise_png(paths["style"], 202, 32, 24)
    _write_mask_png(paths["content_mask"], 32, 24)
    _write_mask_png(paths["style_mask"], 32, 24)
    return paths
