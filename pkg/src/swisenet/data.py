"""Folder-per-class dataset indexing and stratified train/validation split."""

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError

DEFAULT_CLASS_NAMES = ("bacterialblight", "blast", "brownspot", "tungro")
IMAGE_SUFFIXES = (".jpg", ".jpeg", ".png")


@dataclass
class DatasetIndex:
    samples: list  # (path, class_index), lexicographically ordered per class
    class_names: tuple
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.counts:
            self.counts = {name: 0 for name in self.class_names}
            for _, ci in self.samples:
                self.counts[self.class_names[ci]] += 1

    def __len__(self):
        return len(self.samples)


@dataclass
class SplitConfig:
    train_fraction: float = 0.75
    seed: int = 0
    stratified: bool = True


def index_dataset(root_dir, class_names=DEFAULT_CLASS_NAMES, verify=True):
    """Enumerate <root>/<class>/**.{jpg,jpeg,png} deterministically.

    Raises DataError for missing class folders, zero images, or (when
    verify is on) undecodable files, listing every offender.
    """
    root = Path(root_dir)
    if not root.is_dir():
        raise DataError(f"dataset root {root} is not a directory")
    missing = [name for name in class_names if not (root / name).is_dir()]
    if missing:
        raise DataError(f"missing class folder(s): {', '.join(missing)}")
    samples = []
    for ci, name in enumerate(class_names):
        files = sorted(
            p for p in (root / name).rglob("*")
            if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
        )
        if not files:
            raise DataError(f"class folder {name!r} contains no images")
        samples.extend((str(p), ci) for p in files)
    if verify:
        bad = []
        for path, _ in samples:
            try:
                with Image.open(path) as im:
                    im.verify()
            except Exception as exc:
                bad.append(f"{path}: {exc}")
        if bad:
            raise DataError("undecodable file(s):\n" + "\n".join(bad))
    return DatasetIndex(samples=samples, class_names=tuple(class_names))


def split(index, cfg):
    """Seeded stratified partition into (train, validation).

    Per class, train takes ceil(train_fraction * n) samples of a seeded
    permutation, so per-class fractions are within one sample of target.
    """
    if not 0.0 < cfg.train_fraction < 1.0:
        raise ValueError(
            f"train_fraction must be in (0,1), got {cfg.train_fraction}"
        )
    rng = np.random.default_rng(cfg.seed)
    train, val = [], []
    if cfg.stratified:
        groups = [[s for s in index.samples if s[1] == ci]
                  for ci in range(len(index.class_names))]
    else:
        groups = [list(index.samples)]
    for group in groups:
        n = len(group)
        perm = rng.permutation(n)
        n_train = math.ceil(cfg.train_fraction * n)
        if cfg.stratified and (n_train == 0 or n_train == n):
            raise ValueError(
                "stratified split leaves an empty partition for a class"
            )
        for j, k in enumerate(perm):
            (train if j < n_train else val).append(group[k])
    names = index.class_names
    return (DatasetIndex(samples=train, class_names=names),
            DatasetIndex(samples=val, class_names=names))
