"""Shared fixtures: a small folder-per-class toy dataset."""

import numpy as np
import pytest
from PIL import Image

CLASS_NAMES = ("bacterialblight", "blast", "brownspot", "tungro")
CLASS_COLORS = ((230, 25, 25), (25, 230, 25), (25, 25, 230), (205, 205, 25))


def write_toy_dataset(root, per_class=4, size=20, seed=0):
    rng = np.random.default_rng(seed)
    for name, color in zip(CLASS_NAMES, CLASS_COLORS):
        folder = root / name
        folder.mkdir(parents=True)
        for i in range(per_class):
            img = np.array(color, dtype=np.float64) + rng.normal(
                0, 20, size=(size, size, 3)
            )
            arr = np.clip(img, 0, 255).astype(np.uint8)
            Image.fromarray(arr).save(folder / f"img_{i:02d}.png")
    return root


@pytest.fixture(scope="session")
def toy_dataset(tmp_path_factory):
    root = tmp_path_factory.mktemp("toyset")
    return write_toy_dataset(root)
