"""Fixed-length feature vectors from persistence diagrams.

Two featurizations are provided: five symmetric polynomial functionals of the
(birth, death) pairs, and template functions realized as products of Lagrange
basis polynomials on a birth-lifetime mesh.  Both map the empty diagram to the
zero vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional

import numpy as np

from .persistence import PersistenceDiagram

CARLSSON_METHOD = "carlsson"
TEMPLATE_METHOD = "template"
FULL_MASK = 0b11111


def _finite_pairs(diagram) -> np.ndarray:
    pairs = diagram.pairs if isinstance(diagram, PersistenceDiagram) else diagram
    pairs = np.asarray(pairs, dtype=np.float64).reshape(-1, 2)
    if pairs.size and not np.all(np.isfinite(pairs)):
        raise ValueError("diagram has infinite deaths; drop essential classes first")
    return pairs


@dataclass(frozen=True)
class CarlssonFeatures:
    """The five polynomial diagram features and an active-subset mask.

    Bit k of ``subset_mask`` selects feature f{k+1}.  All five values are zero
    for the empty diagram by convention.
    """

    f1: float
    f2: float
    f3: float
    f4: float
    f5: float
    subset_mask: int = FULL_MASK

    def __post_init__(self):
        if not 1 <= self.subset_mask <= FULL_MASK:
            raise ValueError("subset_mask must be a non-empty 5-bit selector")
        if self.f5 < 0:
            raise ValueError("f5 is a maximum lifetime and cannot be negative")

    def as_array(self) -> np.ndarray:
        return np.array([self.f1, self.f2, self.f3, self.f4, self.f5])

    def select(self, mask: Optional[int] = None) -> np.ndarray:
        mask = self.subset_mask if mask is None else mask
        values = self.as_array()
        return values[[bool(mask >> k & 1) for k in range(5)]]


def carlsson_coordinates(diagram) -> CarlssonFeatures:
    """Polynomial features of a finite persistence diagram.

    With lifetimes l_i = d_i - b_i and d_max the largest death in the diagram:
    f1 = sum b_i*l_i, f2 = sum (d_max - d_i)*l_i, f3 = sum b_i^2*l_i^4,
    f4 = sum (d_max - d_i)^2*l_i^4, f5 = max l_i.
    """
    pairs = _finite_pairs(diagram)
    if pairs.shape[0] == 0:
        return CarlssonFeatures(0.0, 0.0, 0.0, 0.0, 0.0)
    births = pairs[:, 0]
    deaths = pairs[:, 1]
    lives = deaths - births
    d_max = float(deaths.max())
    return CarlssonFeatures(
        f1=float(np.sum(births * lives)),
        f2=float(np.sum((d_max - deaths) * lives)),
        f3=float(np.sum(births ** 2 * lives ** 4)),
        f4=float(np.sum((d_max - deaths) ** 2 * lives ** 4)),
        f5=float(lives.max()),
    )


def enumerate_subsets() -> list:
    """All 31 non-empty feature-subset masks, smallest subsets first.

    Deterministic order: ascending cardinality, then ascending mask value.
    """
    masks = [sum(1 << k for k in combo)
             for size in range(1, 6)
             for combo in combinations(range(5), size)]
    return sorted(masks, key=lambda m: (bin(m).count("1"), m))


def to_birth_lifetime(diagram) -> np.ndarray:
    """Map finite (birth, death) pairs to (birth, death - birth)."""
    pairs = _finite_pairs(diagram)
    if pairs.shape[0] == 0:
        return pairs.reshape(0, 2)
    return np.stack([pairs[:, 0], pairs[:, 1] - pairs[:, 0]], axis=1)


def lagrange_basis(mesh, j: int, x):
    """Lagrange basis polynomial of node j on ``mesh``, evaluated at ``x``."""
    mesh = np.asarray(mesh, dtype=np.float64)
    if mesh.ndim != 1 or mesh.size < 2:
        raise ValueError("mesh must hold at least two nodes")
    if np.unique(mesh).size != mesh.size:
        raise ValueError("mesh nodes must be distinct")
    if not 0 <= j < mesh.size:
        raise ValueError("node index out of range")
    x = np.asarray(x, dtype=np.float64)
    others = np.delete(mesh, j)
    value = np.prod((x[..., None] - others) / (mesh[j] - others), axis=-1)
    return float(value) if value.ndim == 0 else value


@dataclass(frozen=True)
class TemplateMesh:
    """Birth and lifetime mesh nodes spanning the feature support box.

    The support is the bounding box of the nodes; diagram points outside it
    contribute nothing (or are rejected when ``padding_fraction`` is zero).
    """

    mesh_a: np.ndarray
    mesh_b: np.ndarray
    padding_fraction: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "mesh_a", np.asarray(self.mesh_a, dtype=np.float64))
        object.__setattr__(self, "mesh_b", np.asarray(self.mesh_b, dtype=np.float64))
        for name, mesh in (("mesh_a", self.mesh_a), ("mesh_b", self.mesh_b)):
            if mesh.ndim != 1 or mesh.size < 2:
                raise ValueError(f"{name} must hold at least two nodes")
            if not np.all(np.diff(mesh) > 0):
                raise ValueError(f"{name} must be strictly increasing")
        if not np.all(self.mesh_b > 0):
            raise ValueError("lifetime mesh nodes must be positive")
        if self.padding_fraction < 0:
            raise ValueError("padding_fraction must be non-negative")

    @property
    def box(self) -> tuple:
        return (float(self.mesh_a[0]), float(self.mesh_a[-1]),
                float(self.mesh_b[0]), float(self.mesh_b[-1]))

    def size(self) -> int:
        return self.mesh_a.size * self.mesh_b.size

    def descriptor(self) -> str:
        a = self.mesh_a
        b = self.mesh_b
        return (f"A[{a[0]:.6g}..{a[-1]:.6g}x{a.size}]"
                f"B[{b[0]:.6g}..{b[-1]:.6g}x{b.size}]")


def _padded_interval(lo: float, hi: float, padding: float) -> tuple:
    span = hi - lo
    if span > 0:
        pad = padding * span
        if pad == 0:
            return lo, hi
        return lo - pad, hi + pad
    # Degenerate range: open a window around the single value.
    width = max(abs(lo), 1.0) * max(padding, 1e-6)
    return lo - width, hi + width


def build_template_mesh(bl_point_sets: Iterable[np.ndarray], size_a: int = 5,
                        size_b: int = 5,
                        padding_fraction: float = 0.05) -> TemplateMesh:
    """Uniform mesh over the padded bounding box of birth-lifetime points.

    ``bl_point_sets`` is any iterable of (k, 2) arrays (typically one per
    diagram of a training set).  With no points at all, a unit box is used;
    empty diagrams featurize to zero vectors regardless of the mesh.
    """
    if size_a < 2 or size_b < 2:
        raise ValueError("mesh sizes must be >= 2")
    stacked = [np.asarray(p, dtype=np.float64).reshape(-1, 2)
               for p in bl_point_sets]
    stacked = [p for p in stacked if p.size]
    if not stacked:
        return TemplateMesh(np.linspace(0.0, 1.0, size_a),
                            np.linspace(1e-6, 1.0, size_b),
                            padding_fraction)
    allp = np.vstack(stacked)
    lo_a, hi_a = _padded_interval(float(allp[:, 0].min()), float(allp[:, 0].max()),
                                  padding_fraction)
    lo_b, hi_b = _padded_interval(float(allp[:, 1].min()), float(allp[:, 1].max()),
                                  padding_fraction)
    if lo_b <= 0:
        # Lifetimes are strictly positive; keep the mesh on that half-plane.
        lo_b = float(allp[:, 1].min()) / 2.0
    return TemplateMesh(np.linspace(lo_a, hi_a, size_a),
                        np.linspace(lo_b, hi_b, size_b),
                        padding_fraction)


@dataclass(frozen=True)
class FeatureVector:
    """Ordered feature values with (method, homology dims, descriptor)."""

    values: np.ndarray
    provenance: tuple

    def __post_init__(self):
        object.__setattr__(self, "values",
                           np.asarray(self.values, dtype=np.float64).ravel())
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature values must be finite")
        method, dims, descriptor = self.provenance
        if not isinstance(dims, tuple):
            raise ValueError("provenance dims must be a tuple")

    @property
    def method(self) -> str:
        return self.provenance[0]

    @property
    def dims(self) -> tuple:
        return self.provenance[1]


def template_features(diagram, mesh: TemplateMesh,
                      dims_label: str = "") -> FeatureVector:
    """Sum of |basis_i(birth) * basis_j(lifetime)| over the diagram points.

    One feature per (birth node, lifetime node) pair, row-major in the birth
    node.  Points outside the mesh box contribute zero; with
    ``padding_fraction == 0`` they are rejected instead, since then the mesh
    was built without any enclosure margin.
    """
    bl = to_birth_lifetime(diagram)
    x_lo, x_hi, y_lo, y_hi = mesh.box
    if bl.shape[0]:
        inside = ((bl[:, 0] >= x_lo) & (bl[:, 0] <= x_hi)
                  & (bl[:, 1] >= y_lo) & (bl[:, 1] <= y_hi))
        if mesh.padding_fraction == 0 and not np.all(inside):
            raise ValueError("diagram point outside the unpadded mesh box")
        bl = bl[inside]
    if bl.shape[0] == 0:
        values = np.zeros(mesh.size())
    else:
        basis_a = np.abs(np.stack(
            [lagrange_basis(mesh.mesh_a, i, bl[:, 0])
             for i in range(mesh.mesh_a.size)], axis=1))
        basis_b = np.abs(np.stack(
            [lagrange_basis(mesh.mesh_b, j, bl[:, 1])
             for j in range(mesh.mesh_b.size)], axis=1))
        values = (basis_a.T @ basis_b).ravel()
    return FeatureVector(values=values,
                         provenance=(TEMPLATE_METHOD, (dims_label,) if dims_label else (),
                                     mesh.descriptor()))


def carlsson_vector(diagram, mask: int = FULL_MASK,
                    dims_label: str = "") -> FeatureVector:
    """Carlsson features as a FeatureVector restricted to ``mask``."""
    features = carlsson_coordinates(diagram)
    return FeatureVector(values=features.select(mask),
                         provenance=(CARLSSON_METHOD,
                                     (dims_label,) if dims_label else (),
                                     f"mask={mask:05b}"))


def concat_features(first: FeatureVector, second: FeatureVector) -> FeatureVector:
    """Concatenate two same-method feature vectors (e.g. the H1 and H2 blocks)."""
    if first.method != second.method:
        raise ValueError(
            f"cannot concatenate {first.method!r} with {second.method!r} features")
    descriptor = f"{first.provenance[2]}+{second.provenance[2]}"
    return FeatureVector(values=np.concatenate([first.values, second.values]),
                         provenance=(first.method, first.dims + second.dims,
                                     descriptor))
