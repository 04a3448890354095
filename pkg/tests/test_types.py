import numpy as np
import pytest

from grembed_fastgcn.types import Arsrg, Descriptor, DistanceMatrix, GcnModel, Region, validate_arsrg

from conftest import make_toy_graph


def _desc(vec=(1.0, 0.0)):
    return Descriptor(vector=np.array(vec), position=(1.0, 1.0), scale=1.0,
                      orientation=0.0)


def test_edge_to_missing_region_is_reported():
    g = Arsrg(
        image_id="x", label=None,
        regions=(Region(id=1, pixel_count=4, centroid=(0, 0),
                        mean_color=(0.5, 0.5, 0.5), descriptor_ids=()),),
        region_edges=frozenset({(1, 2)}),
        descriptors=(),
    )
    violations = validate_arsrg(g)
    assert violations == ["edge references missing region 2"]


def test_minimal_single_region_graph_is_valid():
    descs = tuple(_desc() for _ in range(3))
    g = Arsrg(
        image_id="x", label=0,
        regions=(Region(id=0, pixel_count=1, centroid=(0, 0),
                        mean_color=(0, 0, 0), descriptor_ids=(0, 1, 2)),),
        region_edges=frozenset(),
        descriptors=descs,
    )
    assert validate_arsrg(g) == []


def test_descriptor_in_two_regions_is_reported():
    descs = (_desc(),)
    g = Arsrg(
        image_id="x", label=None,
        regions=(
            Region(id=0, pixel_count=1, centroid=(0, 0), mean_color=(0, 0, 0),
                   descriptor_ids=(0,)),
            Region(id=1, pixel_count=1, centroid=(0, 0), mean_color=(0, 0, 0),
                   descriptor_ids=(0,)),
        ),
        region_edges=frozenset({(0, 1)}),
        descriptors=descs,
    )
    violations = validate_arsrg(g)
    assert len(violations) == 1
    assert "descriptor 0" in violations[0]


@pytest.mark.parametrize("mutate", ["pixel_count", "mean_color", "unassigned", "self_loop"])
def test_single_invariant_mutations_are_caught(mutate):
    rng = np.random.default_rng(3)
    g = make_toy_graph(rng, n_regions=3, desc_per_region=2)
    assert validate_arsrg(g) == []
    regions = list(g.regions)
    edges = set(g.region_edges)
    descriptors = g.descriptors
    if mutate == "pixel_count":
        r = regions[0]
        regions[0] = Region(r.id, 0, r.centroid, r.mean_color, r.descriptor_ids)
    elif mutate == "mean_color":
        r = regions[1]
        regions[1] = Region(r.id, r.pixel_count, r.centroid, (1.5, 0.0, 0.0),
                            r.descriptor_ids)
    elif mutate == "unassigned":
        r = regions[2]
        regions[2] = Region(r.id, r.pixel_count, r.centroid, r.mean_color,
                            r.descriptor_ids[:-1])
    elif mutate == "self_loop":
        edges.add((1, 1))
    bad = Arsrg(image_id=g.image_id, label=g.label, regions=tuple(regions),
                region_edges=frozenset(edges), descriptors=descriptors)
    assert validate_arsrg(bad) != []


def test_distance_matrix_check_rejects_asymmetry():
    values = np.array([[0.0, 0.2], [0.3, 0.0]])
    with pytest.raises(ValueError, match="symmetric"):
        DistanceMatrix(names=("a", "b"), values=values).check()


def test_distance_matrix_check_rejects_nonzero_diagonal():
    values = np.array([[0.1, 0.2], [0.2, 0.0]])
    with pytest.raises(ValueError, match="diagonal"):
        DistanceMatrix(names=("a", "b"), values=values).check()


def test_gcn_model_shape_check():
    model = GcnModel(layer_dims=(3, 2), weights=[np.zeros((3, 3))],
                     activations=("identity",))
    with pytest.raises(ValueError, match="shape"):
        model.check()
