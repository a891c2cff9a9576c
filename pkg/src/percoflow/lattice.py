"""Rescaled lattice Z^d/n restricted to a domain, with its marked boundary sets."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import GeometryError, MeshTooCoarse
from .geometry import Domain


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class _KeyIndex:
    """Vectorized lookup of integer points in a lexicographically sorted array."""

    def __init__(self, points: np.ndarray):
        self.lo = points.min(axis=0) - 1
        span = points.max(axis=0) - self.lo + 2
        self.shape = span
        self.strides = np.concatenate([np.cumprod(span[::-1])[::-1][1:], [1]]).astype(np.int64)
        self.keys = self.encode(points)
        if np.any(np.diff(self.keys) <= 0):
            raise ValueError("points must be unique and lexicographically sorted")

    def encode(self, pts: np.ndarray) -> np.ndarray:
        return (pts - self.lo) @ self.strides

    def find(self, pts: np.ndarray) -> np.ndarray:
        """Indices of ``pts`` in the sorted array, -1 where absent."""
        pts = np.atleast_2d(pts)
        inside = np.all((pts > self.lo) & (pts < self.lo + self.shape - 1), axis=1)
        keys = np.where(inside, self.encode(np.where(inside[:, None], pts, self.lo + 1)), -1)
        pos = np.searchsorted(self.keys, keys)
        pos = np.minimum(pos, len(self.keys) - 1)
        return np.where(inside & (self.keys[pos] == keys), pos, -1)


def build_edges(vertices: np.ndarray):
    """Nearest-neighbour edges among ``vertices``, canonical (lower endpoint, axis) order.

    Returns ``(edges, axes, index)`` where ``edges[k] = (u, v)`` with
    ``vertices[v] = vertices[u] + e_axis``.
    """
    index = _KeyIndex(vertices)
    d = vertices.shape[1]
    us, vs, axes = [], [], []
    for axis in range(d):
        nb = vertices.copy()
        nb[:, axis] += 1
        j = index.find(nb)
        ok = j >= 0
        us.append(np.flatnonzero(ok))
        vs.append(j[ok])
        axes.append(np.full(ok.sum(), axis))
    u = np.concatenate(us)
    v = np.concatenate(vs)
    ax = np.concatenate(axes)
    order = np.lexsort((ax, u))
    edges = np.column_stack([u[order], v[order]]).astype(np.int64)
    return edges, ax[order].astype(np.int8), index


@dataclass(frozen=True, eq=False)
class Lattice:
    """Vertices of Z^d/n (stored as integer coordinates) with nearest-neighbour edges.

    ``gamma`` holds the vertices with a neighbour outside the vertex set;
    ``gamma1`` and ``gamma2`` are the source and sink sets.
    """

    n: int
    vertices: np.ndarray
    edges: np.ndarray
    edge_axes: np.ndarray
    gamma: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def positions(self) -> np.ndarray:
        return self.vertices / self.n

    def find(self, points) -> np.ndarray:
        """Vertex indices of integer points (-1 when not a vertex)."""
        return _KeyIndex(self.vertices).find(np.asarray(points, dtype=np.int64))

    def is_connected(self) -> bool:
        V = self.n_vertices
        if V == 0:
            return False
        adj = coo_matrix((np.ones(self.n_edges), (self.edges[:, 0], self.edges[:, 1])), shape=(V, V))
        return connected_components(adj, directed=False)[0] == 1

    def summary(self) -> dict:
        return {
            "n": self.n,
            "dim": self.dim,
            "vertices": self.n_vertices,
            "edges": self.n_edges,
            "gamma": len(self.gamma),
            "gamma1": len(self.gamma1),
            "gamma2": len(self.gamma2),
        }

    def to_dict(self) -> dict:
        out = self.summary()
        out.update(
            vertex_coords=self.vertices.tolist(),
            edge_list=self.edges.tolist(),
            gamma_ids=self.gamma.tolist(),
            gamma1_ids=self.gamma1.tolist(),
            gamma2_ids=self.gamma2.tolist(),
        )
        return out


def make_lattice(n: int, vertices: np.ndarray, gamma1_mask=None, gamma2_mask=None, gamma_mask=None) -> Lattice:
    """Assemble a lattice from sorted integer vertices and boolean marker arrays."""
    vertices = np.asarray(vertices, dtype=np.int64)
    edges, axes, _ = build_edges(vertices)
    V = len(vertices)
    empty = np.zeros(V, dtype=bool)

    def ids(mask):
        return _readonly(np.flatnonzero(empty if mask is None else mask).astype(np.int64))

    return Lattice(
        n=n,
        vertices=_readonly(vertices),
        edges=_readonly(edges),
        edge_axes=_readonly(axes),
        gamma=ids(gamma_mask),
        gamma1=ids(gamma1_mask),
        gamma2=ids(gamma2_mask),
    )


def scan_box(lo, hi, n: int) -> np.ndarray:
    """All integer points k with k/n in the box [lo - 1/n, hi + 1/n], lexicographic."""
    kmin = np.floor(np.asarray(lo) * n).astype(np.int64) - 1
    kmax = np.ceil(np.asarray(hi) * n).astype(np.int64) + 1
    axes = [np.arange(a, b + 1) for a, b in zip(kmin, kmax)]
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grid], axis=1), [len(a) for a in axes]


def neighbour_outside(inside: np.ndarray, shape) -> np.ndarray:
    """For each scanned point, whether some lattice neighbour is not in ``inside``.

    Points beyond the scan box count as outside.
    """
    grid = np.pad(inside.reshape(shape), 1, constant_values=False)
    core = tuple(slice(1, -1) for _ in shape)
    out = np.zeros(tuple(shape), dtype=bool)
    for axis in range(len(shape)):
        for step in (-1, 1):
            out |= ~np.roll(grid, -step, axis=axis)[core]
    return out.ravel()


def discretize(domain: Domain, n: int, require_patches: bool = True) -> Lattice:
    """Discrete version of the domain at mesh 1/n.

    Vertices are the points of Z^d/n at L-inf distance < 1/n from the domain;
    the boundary set holds vertices with a lattice neighbour outside; the
    patch sets keep boundary vertices within 1/n of one patch and at least
    1/n away from the other.
    """
    if int(n) != n or n < 1:
        raise GeometryError("mesh n must be a positive integer")
    n = int(n)
    r = 1.0 / n
    lo, hi = domain.bbox
    pts, shape = scan_box(lo, hi, n)
    inside = domain.omega_mask(pts / n, r)
    if not inside.any():
        raise MeshTooCoarse(f"mesh too coarse: no lattice point near the domain at n={n}")
    outside_nb = neighbour_outside(inside, shape)[inside]
    vertices = pts[inside]
    pos = vertices / n
    near1 = domain.near_patch_mask(pos, 1, r)
    near2 = domain.near_patch_mask(pos, 2, r)
    g1 = outside_nb & near1 & ~near2
    g2 = outside_nb & near2 & ~near1
    if require_patches:
        for i, g in ((1, g1), (2, g2)):
            if not g.any():
                raise MeshTooCoarse(f"mesh too coarse: gamma{i}_n is empty at n={n}")
    return make_lattice(n, vertices, g1, g2, outside_nb)


@dataclass(frozen=True)
class SignedPermutation:
    """Affine lattice symmetry ``x -> S x + shift`` with ``(S x)_i = signs[i] * x[perm[i]]``."""

    perm: tuple
    signs: tuple
    shift: tuple = None

    def __post_init__(self):
        d = len(self.perm)
        if sorted(self.perm) != list(range(d)) or len(self.signs) != d:
            raise GeometryError("not a signed permutation")
        if any(s not in (-1, 1) for s in self.signs):
            raise GeometryError("signs must be +1 or -1")
        if self.shift is None:
            object.__setattr__(self, "shift", (0.0,) * d)

    @property
    def matrix(self) -> np.ndarray:
        d = len(self.perm)
        S = np.zeros((d, d))
        S[np.arange(d), list(self.perm)] = self.signs
        return S

    def apply(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.matrix.T + np.asarray(self.shift)

    def apply_int(self, k: np.ndarray, n: int) -> np.ndarray:
        nshift = np.asarray(self.shift, dtype=float) * n
        if np.any(np.abs(nshift - np.round(nshift)) > 1e-9):
            raise GeometryError("symmetry shift is not a lattice translation at this mesh")
        S = self.matrix.astype(np.int64)
        return k @ S.T + np.round(nshift).astype(np.int64)

    @classmethod
    def all(cls, d: int):
        """All 2^d d! origin-fixing signed permutations."""
        for perm in itertools.permutations(range(d)):
            for signs in itertools.product((1, -1), repeat=d):
                yield cls(tuple(perm), tuple(signs))


def _map_vertices(lat: Lattice, sym: SignedPermutation) -> np.ndarray:
    mapped = sym.apply_int(lat.vertices, lat.n)
    idx = lat.find(mapped)
    if np.any(idx < 0) or len(np.unique(idx)) != lat.n_vertices:
        raise GeometryError("symmetry does not preserve the vertex set")
    return idx


def edge_permutation(lat: Lattice, sym: SignedPermutation) -> np.ndarray:
    """``perm[k]`` is the index of the image of edge ``k`` under ``sym``."""
    vmap = _map_vertices(lat, sym)
    u = vmap[lat.edges[:, 0]]
    v = vmap[lat.edges[:, 1]]
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    key = lo * lat.n_vertices + hi
    ref = lat.edges[:, 0] * lat.n_vertices + lat.edges[:, 1]
    order = np.argsort(ref)
    pos = np.searchsorted(ref[order], key)
    pos = np.minimum(pos, len(ref) - 1)
    if np.any(ref[order][pos] != key):
        raise GeometryError("symmetry does not preserve the edge set")
    return order[pos]


def automorphism_apply(lat: Lattice, sym: SignedPermutation) -> Lattice:
    """Relabel ``lat`` through a symmetry of the domain.

    The patches must be preserved or exchanged; the result has the same
    vertex and edge arrays with the mapped marker sets.
    """
    vmap = _map_vertices(lat, sym)
    edge_permutation(lat, sym)

    def image(ids):
        return np.sort(vmap[ids])

    g1, g2 = image(lat.gamma1), image(lat.gamma2)
    same = np.array_equal(g1, lat.gamma1) and np.array_equal(g2, lat.gamma2)
    swapped = np.array_equal(g1, lat.gamma2) and np.array_equal(g2, lat.gamma1)
    if not (same or swapped):
        raise GeometryError("symmetry does not preserve the boundary patches")
    return Lattice(
        n=lat.n,
        vertices=lat.vertices,
        edges=lat.edges,
        edge_axes=lat.edge_axes,
        gamma=_readonly(image(lat.gamma)),
        gamma1=_readonly(g1),
        gamma2=_readonly(g2),
    )
