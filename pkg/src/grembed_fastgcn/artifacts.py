"""Bit-exact serialization of every inter-stage artifact.

Binary layout: magic ``GFG1``, format version (u16 LE), artifact tag (u8),
32-byte hash of the producing RunConfig, then a per-artifact payload with
row-major 64-bit little-endian floats. The ARSRG structure uses a structured
text format instead (one record per line) so graphs stay diff-able.
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .config import RunConfig, config_from_text, config_hash, config_to_text
from .types import Arsrg, DatasetGraph, Descriptor, DistanceMatrix, GcnModel, Region, validate_arsrg

MAGIC = b"GFG1"
VERSION = 1

TAG_DISTANCE_MATRIX = 1
TAG_DATASET_GRAPH = 2
TAG_GCN_MODEL = 3
TAG_RUN_CONFIG = 4
TAG_MATRIX = 5

_TAG_NAMES = {
    TAG_DISTANCE_MATRIX: "DistanceMatrix",
    TAG_DATASET_GRAPH: "DatasetGraph",
    TAG_GCN_MODEL: "GcnModel",
    TAG_RUN_CONFIG: "RunConfig",
    TAG_MATRIX: "Matrix",
}


class ArtifactError(Exception):
    pass


class BadMagicError(ArtifactError):
    pass


class VersionMismatchError(ArtifactError):
    pass


class TruncatedError(ArtifactError):
    def __init__(self, offset: int, wanted: int, available: int):
        super().__init__(
            f"truncated payload at byte offset {offset}: "
            f"wanted {wanted} bytes, {available} available"
        )
        self.offset = offset


class InvariantError(ArtifactError):
    pass


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedError(self.pos, n, len(self.data) - self.pos)
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("<H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def f64_array(self, count: int, shape=None) -> np.ndarray:
        raw = self.take(8 * count)
        arr = np.frombuffer(raw, dtype="<f8").astype(np.float64)
        return arr.reshape(shape) if shape is not None else arr

    def string(self) -> str:
        n = self.u32()
        return self.take(n).decode("utf-8")

    def done(self) -> None:
        if self.pos != len(self.data):
            raise InvariantError(
                f"{len(self.data) - self.pos} trailing bytes after payload "
                f"(offset {self.pos})"
            )


class _Writer:
    def __init__(self):
        self.parts: list[bytes] = []

    def raw(self, b: bytes):
        self.parts.append(b)

    def u8(self, v: int):
        self.raw(struct.pack("<B", v))

    def u16(self, v: int):
        self.raw(struct.pack("<H", v))

    def u32(self, v: int):
        self.raw(struct.pack("<I", v))

    def u64(self, v: int):
        self.raw(struct.pack("<Q", v))

    def f64_array(self, arr: np.ndarray):
        self.raw(np.ascontiguousarray(arr, dtype="<f8").tobytes())

    def string(self, s: str):
        b = s.encode("utf-8")
        self.u32(len(b))
        self.raw(b)

    def bytes_out(self) -> bytes:
        return b"".join(self.parts)


def _write_sparse(w: _Writer, m: sp.csr_matrix) -> None:
    coo = m.tocoo()
    order = np.lexsort((coo.col, coo.row))
    w.u32(m.shape[0])
    w.u32(m.shape[1])
    w.u64(coo.nnz)
    w.raw(np.ascontiguousarray(coo.row[order], dtype="<u4").tobytes())
    w.raw(np.ascontiguousarray(coo.col[order], dtype="<u4").tobytes())
    w.f64_array(coo.data[order])


def _read_sparse(r: _Reader) -> sp.csr_matrix:
    rows = r.u32()
    cols = r.u32()
    nnz = r.u64()
    ri = np.frombuffer(r.take(4 * nnz), dtype="<u4").astype(np.int64)
    ci = np.frombuffer(r.take(4 * nnz), dtype="<u4").astype(np.int64)
    data = r.f64_array(nnz)
    return sp.csr_matrix((data, (ri, ci)), shape=(rows, cols))


def _payload_distance_matrix(dm: DistanceMatrix) -> bytes:
    dm.check()
    w = _Writer()
    w.u32(dm.n)
    for name in dm.names:
        w.string(name)
    w.f64_array(dm.values)
    return w.bytes_out()


def _parse_distance_matrix(r: _Reader) -> DistanceMatrix:
    n = r.u32()
    names = tuple(r.string() for _ in range(n))
    values = r.f64_array(n * n, shape=(n, n))
    r.done()
    dm = DistanceMatrix(names=names, values=values)
    try:
        dm.check()
    except ValueError as e:
        raise InvariantError(str(e)) from e
    return dm


def _payload_dataset_graph(g: DatasetGraph) -> bytes:
    w = _Writer()
    n, m = g.X.shape
    w.u32(n)
    w.u32(m)
    _write_sparse(w, g.A)
    _write_sparse(w, g.A_hat)
    w.f64_array(g.X)
    w.raw(np.ascontiguousarray(g.Y, dtype="<u4").tobytes())
    w.raw(np.ascontiguousarray(g.split, dtype="<u1").tobytes())
    return w.bytes_out()


def _parse_dataset_graph(r: _Reader) -> DatasetGraph:
    n = r.u32()
    m = r.u32()
    A = _read_sparse(r)
    A_hat = _read_sparse(r)
    X = r.f64_array(n * m, shape=(n, m))
    Y = np.frombuffer(r.take(4 * n), dtype="<u4").astype(np.int64)
    split = np.frombuffer(r.take(n), dtype="<u1").astype(np.int64)
    r.done()
    if A.shape != (n, n) or A_hat.shape != (n, n):
        raise InvariantError("adjacency shape does not match node count")
    if (A != A.T).nnz != 0:
        raise InvariantError("adjacency must be symmetric")
    if A.diagonal().any():
        raise InvariantError("adjacency diagonal must be zero")
    g = DatasetGraph(A=A, A_hat=A_hat, X=X, Y=Y, split=split)
    g.compute_stats()
    return g


_ACT_TAGS = {"relu": 0, "identity": 1}
_ACT_NAMES = {v: k for k, v in _ACT_TAGS.items()}


def _payload_gcn_model(model: GcnModel) -> bytes:
    model.check()
    w = _Writer()
    w.u32(len(model.layer_dims))
    for d in model.layer_dims:
        w.u32(d)
    for act in model.activations:
        w.u8(_ACT_TAGS[act])
    for weight in model.weights:
        w.f64_array(weight)
    return w.bytes_out()


def _parse_gcn_model(r: _Reader) -> GcnModel:
    n_dims = r.u32()
    dims = tuple(r.u32() for _ in range(n_dims))
    acts = []
    for _ in range(n_dims - 1):
        tag = r.u8()
        if tag not in _ACT_NAMES:
            raise InvariantError(f"unknown activation tag {tag}")
        acts.append(_ACT_NAMES[tag])
    weights = [
        r.f64_array(dims[l] * dims[l + 1], shape=(dims[l], dims[l + 1]))
        for l in range(n_dims - 1)
    ]
    r.done()
    model = GcnModel(layer_dims=dims, weights=weights, activations=tuple(acts))
    try:
        model.check()
    except ValueError as e:
        raise InvariantError(str(e)) from e
    return model


def _payload_run_config(cfg: RunConfig) -> bytes:
    w = _Writer()
    w.string(config_to_text(cfg))
    return w.bytes_out()


def _parse_run_config(r: _Reader) -> RunConfig:
    text = r.string()
    r.done()
    try:
        return config_from_text(text)
    except ValueError as e:
        raise InvariantError(str(e)) from e


def _payload_matrix(m: np.ndarray) -> bytes:
    w = _Writer()
    w.u32(m.shape[0])
    w.u32(m.shape[1])
    w.f64_array(m)
    return w.bytes_out()


def _parse_matrix(r: _Reader) -> np.ndarray:
    rows = r.u32()
    cols = r.u32()
    m = r.f64_array(rows * cols, shape=(rows, cols))
    r.done()
    return m


def _tag_of(artifact) -> int:
    if isinstance(artifact, DistanceMatrix):
        return TAG_DISTANCE_MATRIX
    if isinstance(artifact, DatasetGraph):
        return TAG_DATASET_GRAPH
    if isinstance(artifact, GcnModel):
        return TAG_GCN_MODEL
    if isinstance(artifact, RunConfig):
        return TAG_RUN_CONFIG
    if isinstance(artifact, np.ndarray):
        return TAG_MATRIX
    raise TypeError(f"unsupported artifact type {type(artifact).__name__}")


_PAYLOAD = {
    TAG_DISTANCE_MATRIX: _payload_distance_matrix,
    TAG_DATASET_GRAPH: _payload_dataset_graph,
    TAG_GCN_MODEL: _payload_gcn_model,
    TAG_RUN_CONFIG: _payload_run_config,
    TAG_MATRIX: _payload_matrix,
}
_PARSE = {
    TAG_DISTANCE_MATRIX: _parse_distance_matrix,
    TAG_DATASET_GRAPH: _parse_dataset_graph,
    TAG_GCN_MODEL: _parse_gcn_model,
    TAG_RUN_CONFIG: _parse_run_config,
    TAG_MATRIX: _parse_matrix,
}


def write_artifact(path: str | Path, artifact, cfg: Optional[RunConfig] = None) -> None:
    tag = _tag_of(artifact)
    w = _Writer()
    w.raw(MAGIC)
    w.u16(VERSION)
    w.u8(tag)
    if cfg is None and isinstance(artifact, RunConfig):
        cfg = artifact
    w.raw(config_hash(cfg) if cfg is not None else b"\x00" * 32)
    w.raw(_PAYLOAD[tag](artifact))
    Path(path).write_bytes(w.bytes_out())


def read_artifact(path: str | Path, expect_tag: Optional[int] = None,
                  expect_config: Optional[RunConfig] = None):
    """Returns (artifact, embedded config hash)."""
    r = _Reader(Path(path).read_bytes())
    if r.take(4) != MAGIC:
        raise BadMagicError(f"{path}: bad magic bytes (expected {MAGIC!r})")
    version = r.u16()
    if version != VERSION:
        raise VersionMismatchError(f"{path}: format version {version}, expected {VERSION}")
    tag = r.u8()
    if tag not in _PARSE:
        raise InvariantError(f"{path}: unknown artifact tag {tag}")
    if expect_tag is not None and tag != expect_tag:
        raise InvariantError(
            f"{path}: artifact is {_TAG_NAMES[tag]}, expected {_TAG_NAMES[expect_tag]}"
        )
    embedded_hash = r.take(32)
    artifact = _PARSE[tag](r)
    if expect_config is not None and embedded_hash != config_hash(expect_config):
        raise ConfigHashMismatch(f"{path}: artifact was produced under a different RunConfig")
    return artifact, embedded_hash


class ConfigHashMismatch(ArtifactError):
    pass


# ---------------------------------------------------------------------------
# ARSRG text format


def _fmt(x: float) -> str:
    # repr() is the shortest decimal that round-trips the exact double
    return repr(float(x))


def write_arsrg(path: str | Path, g: Arsrg, cfg: Optional[RunConfig] = None) -> None:
    violations = validate_arsrg(g)
    if violations:
        raise InvariantError(f"refusing to write invalid Arsrg: {violations[0]}")
    if any(c.isspace() for c in g.image_id):
        raise InvariantError("image_id must not contain whitespace")
    dim = len(g.descriptors[0].vector) if g.descriptors else 0
    lines = [
        "GFGA 1",
        "config " + (config_hash(cfg).hex() if cfg is not None else "0" * 64),
        f"image {g.image_id} {g.label if g.label is not None else '-'}",
        f"counts {len(g.regions)} {len(g.region_edges)} {len(g.descriptors)} {dim}",
    ]
    for reg in g.regions:
        fields = [
            "region", str(reg.id), str(reg.pixel_count),
            _fmt(reg.centroid[0]), _fmt(reg.centroid[1]),
            _fmt(reg.mean_color[0]), _fmt(reg.mean_color[1]), _fmt(reg.mean_color[2]),
        ] + [str(d) for d in reg.descriptor_ids]
        lines.append(" ".join(fields))
    for i, j in sorted(g.region_edges):
        lines.append(f"edge {i} {j}")
    for desc in g.descriptors:
        fields = [
            "desc",
            _fmt(desc.position[0]), _fmt(desc.position[1]),
            _fmt(desc.scale), _fmt(desc.orientation),
        ] + [_fmt(v) for v in desc.vector]
        lines.append(" ".join(fields))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_arsrg(path: str | Path, expect_config: Optional[RunConfig] = None) -> Arsrg:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "GFGA 1":
        raise BadMagicError(f"{path}: bad ARSRG header")
    if len(lines) < 4 or not lines[1].startswith("config "):
        raise InvariantError(f"{path}: missing config line")
    if expect_config is not None:
        if lines[1].split()[1] != config_hash(expect_config).hex():
            raise ConfigHashMismatch(f"{path}: artifact was produced under a different RunConfig")
    _, image_id, label_s = lines[2].split()
    label = None if label_s == "-" else int(label_s)
    _, n_reg, n_edge, n_desc, dim = lines[3].split()
    n_reg, n_edge, n_desc, dim = int(n_reg), int(n_edge), int(n_desc), int(dim)
    regions, edges, descriptors = [], set(), []
    for lineno, line in enumerate(lines[4:], start=5):
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "region":
            regions.append(Region(
                id=int(parts[1]), pixel_count=int(parts[2]),
                centroid=(float(parts[3]), float(parts[4])),
                mean_color=(float(parts[5]), float(parts[6]), float(parts[7])),
                descriptor_ids=tuple(int(d) for d in parts[8:]),
            ))
        elif parts[0] == "edge":
            i, j = int(parts[1]), int(parts[2])
            edges.add((min(i, j), max(i, j)))
        elif parts[0] == "desc":
            if len(parts) != 5 + dim:
                raise InvariantError(
                    f"{path}:{lineno}: descriptor line has {len(parts) - 5} "
                    f"components, expected {dim}"
                )
            vec = np.array([float(v) for v in parts[5:]], dtype=np.float64)
            descriptors.append(Descriptor(
                vector=vec,
                position=(float(parts[1]), float(parts[2])),
                scale=float(parts[3]), orientation=float(parts[4]),
            ))
        else:
            raise InvariantError(f"{path}:{lineno}: unknown record {parts[0]!r}")
    if len(regions) != n_reg or len(edges) != n_edge or len(descriptors) != n_desc:
        raise InvariantError(f"{path}: record counts do not match header")
    g = Arsrg(
        image_id=image_id, label=label, regions=tuple(regions),
        region_edges=frozenset(edges), descriptors=tuple(descriptors),
    )
    violations = validate_arsrg(g)
    if violations:
        raise InvariantError(f"{path}: {violations[0]}")
    return g
