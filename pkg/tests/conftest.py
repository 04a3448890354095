import numpy as np
import pytest

from grembed_fastgcn.types import Arsrg, Descriptor, Region


def unit_vectors(rng, count, dim):
    v = rng.normal(size=(count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def make_toy_graph(rng, n_regions=2, desc_per_region=5, dim=8, image_id="g",
                   vectors=None):
    """A valid Arsrg with random unit descriptors, one chain of region edges."""
    total = n_regions * desc_per_region
    if vectors is None:
        vectors = unit_vectors(rng, total, dim)
    descriptors = []
    regions = []
    for r in range(n_regions):
        ids = tuple(range(r * desc_per_region, (r + 1) * desc_per_region))
        for d in ids:
            descriptors.append(Descriptor(
                vector=vectors[d],
                position=(float(rng.uniform(0, 100)), float(rng.uniform(0, 100))),
                scale=2.0, orientation=0.0,
            ))
        color = tuple(np.round(rng.uniform(0, 1, size=3), 3).tolist())
        regions.append(Region(
            id=r, pixel_count=int(rng.integers(10, 100)),
            centroid=(float(rng.uniform(0, 100)), float(rng.uniform(0, 100))),
            mean_color=color, descriptor_ids=ids,
        ))
    edges = frozenset((r, r + 1) for r in range(n_regions - 1))
    return Arsrg(image_id=image_id, label=None, regions=tuple(regions),
                 region_edges=edges, descriptors=tuple(descriptors))


@pytest.fixture(scope="session")
def toy_dataset(tmp_path_factory):
    """Generated toy image set, shared by the slower end-to-end tests."""
    from grembed_fastgcn.toydata import generate_toy_dataset

    out = tmp_path_factory.mktemp("toyimgs")
    manifest = generate_toy_dataset(out, seed=7)
    return out, manifest
