"""Continuous min-cut side: capacities of polyhedral cuts weighted by nu.

``i_omega`` integrates ``nu`` of the outward normal over the part of a
separating polyhedral boundary that lies in the domain. Flat cuts give
computable upper bounds for the continuous min cut; nothing here claims
to compute the infimum itself.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize_scalar
from scipy.spatial import ConvexHull

from .capacity import DEFAULT_PC_TABLE, CapacityLaw
from .errors import ConfigError, GeometryError
from .geometry import TOL, ConvexPolytope, Domain, Face
from .lattice import SignedPermutation

PARALLEL_TOL = 1e-9


class NuModel:
    """Direction-dependent surface capacity; callable on unit vectors or (N, d) arrays."""

    def values(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        single = v.ndim == 1
        V = np.atleast_2d(v)
        V = V / np.linalg.norm(V, axis=1, keepdims=True)
        out = self.values(V)
        return float(out[0]) if single else out

    def homogeneous(self, w) -> float:
        """1-homogeneous extension: |w| nu(w / |w|), zero at the origin."""
        w = np.asarray(w, dtype=float)
        r = float(np.linalg.norm(w))
        return 0.0 if r == 0 else r * self(w / r)

    def _sphere(self, d: int) -> np.ndarray:
        if d == 2:
            th = np.linspace(0, 2 * np.pi, 20001)[:-1]
            return np.column_stack([np.cos(th), np.sin(th)])
        # fixed random directions for d >= 3
        m = 20000
        pts = np.random.default_rng(0).normal(size=(m, d))
        return pts / np.linalg.norm(pts, axis=1, keepdims=True)

    def extremes(self, d: int) -> tuple[float, float]:
        vals = self.values(self._sphere(d))
        return float(vals.min()), float(vals.max())


@dataclass(frozen=True)
class ConstantNu(NuModel):
    value: float

    def __post_init__(self):
        if self.value < 0:
            raise ConfigError("nu must be nonnegative")

    def values(self, v):
        return np.full(len(v), float(self.value))

    def extremes(self, d):
        return float(self.value), float(self.value)

    def to_dict(self):
        return {"type": "constant", "value": self.value}


@dataclass(frozen=True)
class L1Nu(NuModel):
    """``nu(v) = c * sum |v_i|``."""

    c: float = 1.0

    def __post_init__(self):
        if self.c < 0:
            raise ConfigError("nu must be nonnegative")

    def values(self, v):
        return self.c * np.abs(v).sum(axis=1)

    def extremes(self, d):
        return float(self.c), float(self.c * math.sqrt(d))

    def to_dict(self):
        return {"type": "l1", "c": self.c}


class TableNu(NuModel):
    """Interpolated table of sampled directions.

    The samples are closed under ``v -> -v`` and all signed coordinate
    permutations (repeated directions are averaged). The homogeneous
    extension is then linear on each cone over a facet of the convex hull
    of the sampled unit vectors.
    """

    def __init__(self, directions, values):
        D = np.atleast_2d(np.asarray(directions, dtype=float))
        vals = np.asarray(values, dtype=float).ravel()
        if len(D) != len(vals) or len(D) == 0:
            raise ConfigError("table needs one value per direction")
        if np.any(vals < 0):
            raise ConfigError("nu must be nonnegative")
        self.raw_directions = D / np.linalg.norm(D, axis=1, keepdims=True)
        self.raw_values = vals
        d = D.shape[1]
        images, image_vals = [], []
        for sym in SignedPermutation.all(d):
            images.append(self.raw_directions @ sym.matrix.T)
            image_vals.append(vals)
        P = np.vstack(images)
        Pv = np.concatenate(image_vals)
        keys = np.round(P, 9)
        _, inverse = np.unique(keys, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        sums = np.bincount(inverse, weights=Pv)
        counts = np.bincount(inverse)
        self.directions = P[np.unique(inverse, return_index=True)[1]]
        self.table = sums / counts
        hull = ConvexHull(self.directions)
        self._eq = hull.equations
        # nu_0 is linear on the cone over each hull facet: nu_0(w) = w . weights[f]
        self._weights = np.array([
            np.linalg.solve(self.directions[simplex], self.table[simplex]) for simplex in hull.simplices
        ])
        self.dim = d

    def values(self, v):
        N, c = self._eq[:, :-1], self._eq[:, -1]
        dots = v @ N.T
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(dots > 1e-15, -c[None, :] / dots, np.inf)
        k = np.argmin(s, axis=1)
        return np.einsum("ij,ij->i", v, self._weights[k])

    def to_dict(self):
        return {"type": "table", "directions": self.raw_directions.tolist(), "values": self.raw_values.tolist()}


def nu_from_dict(spec: dict) -> NuModel:
    try:
        kind = spec["type"].lower()
        if kind == "constant":
            return ConstantNu(float(spec["value"]))
        if kind in ("l1", "l1scaled"):
            return L1Nu(float(spec.get("c", 1.0)))
        if kind == "table":
            return TableNu(spec["directions"], spec["values"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad nu spec: {exc}") from None
    raise ConfigError(f"unknown nu model type {spec.get('type')!r}")


def nu_table_from_estimates(estimates) -> TableNu:
    """Table model from ``NuEstimate`` objects, using each finest-mesh estimate."""
    return TableNu([e.direction for e in estimates], [e.point for e in estimates])


@dataclass(frozen=True, eq=False)
class PolyhedralCut:
    """Candidate cut set P given as an intersection of halfspaces (may be unbounded)."""

    polytope: ConvexPolytope

    @classmethod
    def halfspace(cls, normal, offset) -> "PolyhedralCut":
        return cls(ConvexPolytope([normal], [offset]))

    @classmethod
    def from_dict(cls, spec: dict) -> "PolyhedralCut":
        try:
            hs = spec["halfspaces"]
            return cls(ConvexPolytope([h["normal"] for h in hs], [h["offset"] for h in hs]))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad cut spec: {exc}") from None

    def facet(self, k: int) -> Face:
        return self.polytope.facet(k)


@dataclass
class CapacityFunctionalValue:
    value: float
    pieces: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "pieces": [
                {"cut_facet": k, "domain_piece": i, "area": a, "normal": list(map(float, nrm)), "nu": nu}
                for k, i, a, nrm, nu in self.pieces
            ],
        }


def _disjoint_from(face: Face, P: ConvexPolytope) -> bool:
    """Whether the closed face stays at positive distance from the closure of P."""
    d = face.dim
    res = linprog(
        np.zeros(d),
        A_ub=np.vstack([face.A, P.normals]),
        b_ub=np.concatenate([face.B, P.offsets + TOL]),
        A_eq=face.normal[None, :],
        b_eq=[face.offset],
        bounds=[(None, None)] * d,
        method="highs",
    )
    return res.status == 2


def is_separating(P: PolyhedralCut, domain: Domain) -> bool:
    """Closure of gamma1 inside the interior of P, closure of gamma2 away from P."""
    for face in domain.faces(1):
        if len(face.vertices) == 0 or not np.all(P.polytope.contains(face.vertices, strict=True)):
            return False
    return all(_disjoint_from(face, P.polytope) for face in domain.faces(2))


def _same_plane(n1, b1, n2, b2) -> bool:
    dot = float(n1 @ n2)
    if abs(abs(dot) - 1.0) > PARALLEL_TOL:
        return False
    return abs(b1 - math.copysign(1.0, dot) * b2) <= PARALLEL_TOL


def _fragments(P: PolyhedralCut, domain: Domain, k: int):
    """Yield ``(piece index, face, weight)`` for facet k of P clipped to each piece.

    Fragments lying on a piece facet get weight 1/2 so that interior shared
    walls are counted once; a fragment on the outer boundary is rejected.
    """
    facet = P.facet(k)
    n, b = facet.normal, facet.offset
    for i, piece in enumerate(domain.pieces):
        frag = facet.restricted(piece.normals, piece.offsets)
        on_wall = any(_same_plane(n, b, m, c) for m, c in zip(piece.normals, piece.offsets))
        if not on_wall:
            yield i, frag, 1.0
            continue
        area = frag.measure()
        if area <= TOL:
            continue
        covered = sum(
            frag.restricted(other.normals, other.offsets).measure()
            for j, other in enumerate(domain.pieces)
            if j != i
        )
        if area - covered > 1e-9:
            raise GeometryError("cut is not transverse to the domain boundary")
        yield i, frag, 0.5


def _split_measure(face: Face, splits) -> float:
    if not splits:
        return face.measure()
    total = 0.0
    for signs in itertools.product((1.0, -1.0), repeat=len(splits)):
        normals = [s * np.asarray(c, float) for s, (c, _) in zip(signs, splits)]
        offsets = [s * e for s, (_, e) in zip(signs, splits)]
        total += face.restricted(normals, offsets).measure()
    return total


def i_omega(P: PolyhedralCut, domain: Domain, nu: NuModel, splits=None) -> CapacityFunctionalValue:
    """Capacity of the separating polyhedral set P inside the domain.

    ``splits`` optionally lists hyperplanes ``(c, e)``; every fragment is
    then measured cell by cell, which must not change the result.
    """
    if not is_separating(P, domain):
        raise GeometryError("not a separating polyhedral set")
    value = 0.0
    pieces = []
    for k in range(len(P.polytope)):
        normal = P.polytope.normals[k]
        nu_k = nu(normal)
        for i, frag, weight in _fragments(P, domain, k):
            area = weight * _split_measure(frag, splits)
            if area <= 0:
                continue
            value += area * nu_k
            pieces.append((k, i, area, normal.copy(), nu_k))
    return CapacityFunctionalValue(value, pieces)


@dataclass
class FlatCut:
    offset: float
    value: float
    axis: np.ndarray
    evaluated: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"axis": self.axis.tolist(), "best_offset": self.offset, "value": self.value,
                "evaluated": [{"offset": o, "value": v} for o, v in self.evaluated]}


def flat_cut_bound(domain: Domain, nu: NuModel, axis, offsets=None, grid: int = 64) -> FlatCut:
    """Best flat cut ``{x . axis < offset}`` over a grid of offsets.

    The default grid splits the domain's extent along ``axis`` into ``grid``
    equal parts. Offsets that do not separate or are not transverse are
    skipped; ties go to the smallest offset.
    """
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    if offsets is None:
        proj = np.concatenate([p.vertices @ axis for p in domain.pieces])
        lo, hi = proj.min(), proj.max()
        offsets = lo + (hi - lo) * np.arange(1, grid) / grid
    best = None
    evaluated = []
    for off in sorted(float(o) for o in offsets):
        try:
            val = i_omega(PolyhedralCut.halfspace(axis, off), domain, nu).value
        except GeometryError:
            continue
        evaluated.append((off, val))
        if best is None or val < best[1] - 1e-12:
            best = (off, val)
    if best is None:
        raise GeometryError("no offset in the grid separates gamma1 from gamma2")
    return FlatCut(best[0], best[1], axis, evaluated)


def positivity(law: CapacityLaw, d: int, pc_table: dict | None = None) -> bool:
    """Whether the limit flow is positive: atom at zero below 1 - p_c(d)."""
    table = DEFAULT_PC_TABLE if pc_table is None else pc_table
    if d < 2:
        raise ConfigError("dimension must be at least 2")
    if d not in table:
        raise ConfigError(f"no percolation threshold configured for d={d}")
    return law.atom_at_zero() < 1.0 - table[d]


def tilted_limit_2d(v, alpha: float, nu: NuModel, step: float = 1e-4) -> float:
    """``inf nu(w) / (v . w)`` over unit ``w`` within angle ``alpha`` of ``v`` (d = 2)."""
    v = np.asarray(v, dtype=float)
    if v.size != 2:
        raise GeometryError("tilted limit formula is two-dimensional")
    v = v / np.linalg.norm(v)
    if not 0 <= alpha <= math.pi / 2 + 1e-15:
        raise ValueError("alpha must lie in [0, pi/2]")
    if alpha == 0:
        return nu(v)

    def rotate(th):
        th = np.atleast_1d(th)
        c, s = np.cos(th), np.sin(th)
        return np.column_stack([c * v[0] - s * v[1], s * v[0] + c * v[1]])

    def ratio(th):
        th = np.atleast_1d(th)
        cos = np.cos(th)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(cos > 1e-12, nu(rotate(th)) / cos, np.inf)
        return r

    m = max(2, int(math.ceil(2 * alpha / step)) + 1)
    grid = np.linspace(-alpha, alpha, m)
    r = ratio(grid)
    j = int(np.argmin(r))
    best = float(r[j])
    lo = max(-alpha, grid[j] - 2 * alpha / (m - 1))
    hi = min(alpha, grid[j] + 2 * alpha / (m - 1))
    if hi > lo:
        res = minimize_scalar(lambda th: float(ratio(th)[0]), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        best = min(best, float(res.fun))
    return best


def convex_set_capacity_2d(A: ConvexPolytope, nu: NuModel) -> float:
    """Boundary integral of nu over a convex polygon: sum of edge length times nu(outward normal)."""
    if A.dim != 2:
        raise GeometryError("convex set capacity is two-dimensional")
    try:
        A.validate()
    except GeometryError as exc:
        raise GeometryError(f"degenerate polygon: {exc}") from None
    return float(sum(A.facet(j).measure() * nu(A.normals[j]) for j in range(len(A))))
