"""Dataset manifests and the published split protocols."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .types import TEST, TRAIN


@dataclass(frozen=True)
class Entry:
    path: str
    class_name: str
    split: str  # "train" | "test"


@dataclass(frozen=True)
class Manifest:
    name: str
    entries: tuple[Entry, ...]

    def check(self) -> None:
        paths = [e.path for e in self.entries]
        if len(set(paths)) != len(paths):
            raise ValueError("manifest paths must be unique")
        train_classes = {e.class_name for e in self.entries if e.split == "train"}
        all_classes = {e.class_name for e in self.entries}
        missing = sorted(all_classes - train_classes)
        if missing:
            raise ValueError(f"classes absent from the training split: {missing}")
        splits = {e.split for e in self.entries}
        if splits - {"train", "test"}:
            raise ValueError(f"unknown split tags: {sorted(splits - {'train', 'test'})}")
        if "train" not in splits or "test" not in splits:
            raise ValueError("both train and test splits must be non-empty")

    def label_map(self) -> dict[str, int]:
        """Dense class indices 0..C-1 by first appearance order."""
        out: dict[str, int] = {}
        for e in self.entries:
            if e.class_name not in out:
                out[e.class_name] = len(out)
        return out

    def labels(self) -> np.ndarray:
        lm = self.label_map()
        return np.array([lm[e.class_name] for e in self.entries], dtype=np.int64)

    def split_tags(self) -> np.ndarray:
        return np.array(
            [TRAIN if e.split == "train" else TEST for e in self.entries],
            dtype=np.int64,
        )


def read_manifest(path: str | Path, name: str = "") -> Manifest:
    entries = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected path<TAB>class<TAB>split")
        entries.append(Entry(path=parts[0], class_name=parts[1], split=parts[2]))
    m = Manifest(name=name or Path(path).stem, entries=tuple(entries))
    m.check()
    return m


def write_manifest(m: Manifest, path: str | Path) -> None:
    lines = [f"{e.path}\t{e.class_name}\t{e.split}" for e in m.entries]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def split_coil_protocol(manifest: Manifest, seed: int) -> Manifest:
    """25 randomly selected classes; per class, 11% of images (rounded to
    nearest, at least one) tagged train, the rest test."""
    by_class: dict[str, list[Entry]] = {}
    for e in manifest.entries:
        by_class.setdefault(e.class_name, []).append(e)
    classes = sorted(by_class)
    if len(classes) < 25:
        raise ValueError(f"protocol requires >= 25 classes, manifest has {len(classes)}")
    rng = np.random.Generator(np.random.PCG64(seed))
    chosen = sorted(rng.choice(len(classes), size=25, replace=False).tolist())
    entries = []
    for ci in chosen:
        cls = classes[ci]
        items = by_class[cls]
        n_train = max(1, round(0.11 * len(items)))
        order = rng.permutation(len(items))
        train_set = set(order[:n_train].tolist())
        for idx, e in enumerate(items):
            entries.append(Entry(
                path=e.path, class_name=cls,
                split="train" if idx in train_set else "test",
            ))
    m = Manifest(name=manifest.name, entries=tuple(entries))
    m.check()
    return m


def split_eth_protocol(manifest: Manifest, seed: int) -> Manifest:
    """Per class: 4 randomly chosen objects x 10 views train; 60 test images
    per class drawn as 15 views from each of 4 other objects. Paths must
    encode .../<class>/<object>/<view>."""
    structure: dict[str, dict[str, list[Entry]]] = {}
    for e in manifest.entries:
        parts = Path(e.path).parts
        if len(parts) < 3:
            raise ValueError(
                f"path {e.path!r} does not encode class/object/view structure"
            )
        obj = parts[-2]
        structure.setdefault(e.class_name, {}).setdefault(obj, []).append(e)
    rng = np.random.Generator(np.random.PCG64(seed))
    entries = []
    for cls in sorted(structure):
        objects = sorted(structure[cls])
        if len(objects) < 8:
            raise ValueError(f"class {cls}: needs >= 8 objects, found {len(objects)}")
        order = rng.permutation(len(objects))
        train_objs = [objects[i] for i in sorted(order[:4].tolist())]
        test_objs = [objects[i] for i in sorted(order[4:8].tolist())]
        missing = []
        for obj in train_objs:
            views = sorted(structure[cls][obj], key=lambda e: e.path)
            if len(views) < 10:
                missing.append(f"{cls}/{obj}: {len(views)} views < 10")
                continue
            pick = sorted(rng.choice(len(views), size=10, replace=False).tolist())
            for i in pick:
                entries.append(Entry(views[i].path, cls, "train"))
        for obj in test_objs:
            views = sorted(structure[cls][obj], key=lambda e: e.path)
            if len(views) < 15:
                missing.append(f"{cls}/{obj}: {len(views)} views < 15")
                continue
            pick = sorted(rng.choice(len(views), size=15, replace=False).tolist())
            for i in pick:
                entries.append(Entry(views[i].path, cls, "test"))
        if missing:
            raise ValueError("insufficient views: " + "; ".join(missing))
    n_classes = len(structure)
    n_train = sum(1 for e in entries if e.split == "train")
    n_test = sum(1 for e in entries if e.split == "test")
    if n_train != 40 * n_classes or n_test != 60 * n_classes:
        raise ValueError(
            f"protocol counts off: {n_train} train / {n_test} test "
            f"for {n_classes} classes"
        )
    m = Manifest(name=manifest.name, entries=tuple(entries))
    m.check()
    return m


def limit_classes(manifest: Manifest, n: int) -> Manifest:
    keep = list(manifest.label_map())[:n]
    keep_set = set(keep)
    m = Manifest(
        name=manifest.name,
        entries=tuple(e for e in manifest.entries if e.class_name in keep_set),
    )
    m.check()
    return m
