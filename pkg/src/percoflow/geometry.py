"""Convex polytopes, flat faces, cylinders and polytopal domains.

Everything here is immutable after construction. Halfspaces are stored as
``normals @ x <= offsets`` with unit normals. Predicates use the absolute
tolerance ``TOL`` on coordinates of order one.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

from .errors import GeometryError

TOL = 1e-9
# offset used to probe points sitting on shared piece boundaries
_PROBE = 1e-7
_BIG = 1e6


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise GeometryError("zero vector has no direction")
    return v / norm


def orthonormal_complement(a) -> np.ndarray:
    """Return a (d, d-1) matrix whose columns span the orthogonal complement of ``a``."""
    a = unit(a)
    d = a.size
    # QR of [a | I] gives a deterministic basis with a as first column
    q, _ = np.linalg.qr(np.column_stack([a, np.eye(d)]))
    return q[:, 1:d]


def _chebyshev(A: np.ndarray, b: np.ndarray):
    """Largest inscribed ball of {A y <= b}; returns (center, radius) or None if empty."""
    k = A.shape[1]
    norms = np.linalg.norm(A, axis=1)
    c = np.zeros(k + 1)
    c[-1] = -1.0
    res = linprog(
        c,
        A_ub=np.column_stack([A, norms]),
        b_ub=b,
        bounds=[(None, None)] * k + [(0, _BIG)],
        method="highs",
    )
    if res.status != 0:
        return None
    return res.x[:k], res.x[-1]


def _frame_vertices(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Vertices of the bounded polytope {y : A y <= b} in R^k (empty array if degenerate)."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    k = A.shape[1]
    norms = np.linalg.norm(A, axis=1)
    flat = norms <= 1e-12
    if np.any(b[flat] < -TOL):
        return np.empty((0, k))
    A, b = A[~flat], b[~flat]
    if k == 1:
        a = A[:, 0]
        pos, neg = a > 0, a < 0
        if not pos.any() or not neg.any():
            raise GeometryError("unbounded face")
        hi = np.min(b[pos] / a[pos])
        lo = np.max(b[neg] / a[neg])
        if hi - lo <= TOL:
            return np.empty((0, 1))
        return np.array([[lo], [hi]])
    cheb = _chebyshev(A, b)
    if cheb is None or cheb[1] <= TOL:
        return np.empty((0, k))
    if cheb[1] >= _BIG * (1 - 1e-9):
        raise GeometryError("unbounded polytope")
    try:
        hs = HalfspaceIntersection(np.column_stack([A, -b]), cheb[0])
    except QhullError:
        return np.empty((0, k))
    pts = hs.intersections
    if not np.all(np.isfinite(pts)):
        raise GeometryError("unbounded polytope")
    _, idx = np.unique(np.round(pts, 10), axis=0, return_index=True)
    return pts[np.sort(idx)]


def _linf_hull(vertices: np.ndarray, r: float):
    """Halfspaces of conv(vertices) + [-r, r]^d (the closed L-inf r-neighbourhood)."""
    d = vertices.shape[1]
    corners = np.array(list(itertools.product((-r, r), repeat=d)))
    pts = (vertices[:, None, :] + corners[None, :, :]).reshape(-1, d)
    hull = ConvexHull(pts)
    eq = hull.equations
    return eq[:, :d], -eq[:, d]


@dataclass(frozen=True, eq=False)
class Face:
    """A flat convex set ``{x : normal.x = offset, A x <= B}`` of dimension d-1."""

    normal: np.ndarray
    offset: float
    A: np.ndarray
    B: np.ndarray

    @property
    def dim(self) -> int:
        return self.normal.size

    @cached_property
    def frame(self):
        x0 = self.normal * self.offset / float(self.normal @ self.normal)
        return x0, orthonormal_complement(self.normal)

    def _reduced(self):
        x0, U = self.frame
        return self.A @ U, self.B - self.A @ x0

    @cached_property
    def vertices(self) -> np.ndarray:
        x0, U = self.frame
        y = _frame_vertices(*self._reduced())
        return _readonly(x0 + y @ U.T)

    def measure(self) -> float:
        """(d-1)-dimensional volume; 0 for degenerate faces."""
        y = _frame_vertices(*self._reduced())
        if len(y) == 0:
            return 0.0
        if y.shape[1] == 1:
            return float(y[1, 0] - y[0, 0])
        try:
            # Qhull triangulates the face; volume is the sum over simplices
            return float(ConvexHull(y).volume)
        except QhullError:
            return 0.0

    def restricted(self, normals, offsets) -> "Face":
        return Face(
            self.normal,
            self.offset,
            np.vstack([self.A, np.atleast_2d(normals)]),
            np.concatenate([self.B, np.atleast_1d(offsets)]),
        )

    def relative_center(self) -> np.ndarray | None:
        """A point in the relative interior, or None if degenerate."""
        x0, U = self.frame
        A, b = self._reduced()
        keep = np.linalg.norm(A, axis=1) > 1e-12
        if A.shape[1] == 1:
            y = _frame_vertices(A, b)
            return None if len(y) == 0 else x0 + U[:, 0] * y.mean()
        cheb = _chebyshev(A[keep], b[keep])
        if cheb is None or cheb[1] <= TOL:
            return None
        return x0 + U @ cheb[0]

    @cached_property
    def _neigh_cache(self) -> dict:
        return {}

    def linf_neighbourhood(self, r: float):
        if r not in self._neigh_cache:
            self._neigh_cache[r] = _linf_hull(self.vertices, r)
        return self._neigh_cache[r]


@dataclass(frozen=True, eq=False)
class ConvexPolytope:
    """Intersection of halfspaces ``normals @ x <= offsets``.

    Normals given with unit norm are stored exactly; others are rescaled
    together with their offsets. Boundedness is only enforced by
    :meth:`validate`, so the same type also describes halfspace cuts.
    """

    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        N = np.array(self.normals, dtype=float, ndmin=2)
        b = np.array(self.offsets, dtype=float, ndmin=1)
        if N.shape[0] != b.shape[0]:
            raise GeometryError("normals and offsets differ in length")
        if N.shape[1] < 2:
            raise GeometryError("dimension must be at least 2")
        norms = np.linalg.norm(N, axis=1)
        if np.any(norms == 0):
            raise GeometryError("zero halfspace normal")
        rescale = np.abs(norms - 1.0) > 1e-12
        N[rescale] /= norms[rescale, None]
        b[rescale] /= norms[rescale]
        object.__setattr__(self, "normals", _readonly(N))
        object.__setattr__(self, "offsets", _readonly(b))

    @classmethod
    def from_halfspaces(cls, pairs: Iterable) -> "ConvexPolytope":
        pairs = list(pairs)
        return cls([p[0] for p in pairs], [p[1] for p in pairs])

    @classmethod
    def box(cls, lo, hi) -> "ConvexPolytope":
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        d = lo.size
        eye = np.eye(d)
        return cls(np.vstack([-eye, eye]), np.concatenate([-lo, hi]))

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    def __len__(self) -> int:
        return self.offsets.size

    def slack(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return x @ self.normals.T - self.offsets

    def contains(self, x, strict: bool = False, tol: float = TOL) -> np.ndarray:
        s = self.slack(x)
        ok = np.all(s < -tol, axis=1) if strict else np.all(s <= tol, axis=1)
        return ok if np.ndim(x) > 1 else bool(ok[0])

    def facet(self, j: int, restriction: "ConvexPolytope | None" = None) -> Face:
        if not 0 <= j < len(self):
            raise GeometryError(f"facet index {j} out of range")
        others = np.arange(len(self)) != j
        face = Face(self.normals[j], float(self.offsets[j]), self.normals[others], self.offsets[others])
        if restriction is not None:
            face = face.restricted(restriction.normals, restriction.offsets)
        return face

    @cached_property
    def vertices(self) -> np.ndarray:
        return _readonly(_frame_vertices(self.normals, self.offsets))

    def validate(self) -> "ConvexPolytope":
        cheb = _chebyshev(self.normals, self.offsets)
        if cheb is None or cheb[1] <= TOL:
            raise GeometryError("polytope has empty interior")
        if cheb[1] >= _BIG * (1 - 1e-9) or len(self.vertices) == 0:
            raise GeometryError("polytope is unbounded")
        for axis in range(self.dim):
            for sign in (-1.0, 1.0):
                c = np.zeros(self.dim)
                c[axis] = sign
                res = linprog(c, A_ub=self.normals, b_ub=self.offsets, bounds=[(None, None)] * self.dim, method="highs")
                if res.status == 3:
                    raise GeometryError("polytope is unbounded")
        return self

    @property
    def bbox(self):
        v = self.vertices
        return v.min(axis=0), v.max(axis=0)

    @cached_property
    def _neigh_cache(self) -> dict:
        return {}

    def linf_neighbourhood(self, r: float):
        """Halfspaces of the closed L-inf r-neighbourhood (polytope must be bounded)."""
        if r not in self._neigh_cache:
            self._neigh_cache[r] = _linf_hull(self.vertices, r)
        return self._neigh_cache[r]

    def segment_inside(self, p, q, closed: bool = False, tol: float = TOL) -> bool:
        """Whether the open segment (p, q) lies in the polytope (open or closed)."""
        fp = self.normals @ np.asarray(p, float) - self.offsets
        fq = self.normals @ np.asarray(q, float) - self.offsets
        if np.any(np.maximum(fp, fq) > tol):
            return False
        if closed:
            return True
        # a facet containing both endpoints contains the whole segment
        return not np.any((fp > -tol) & (fq > -tol))


def hd_measure_facet(polytope: ConvexPolytope, facet: int, restriction: ConvexPolytope | None = None) -> float:
    """(d-1)-volume of a polytope facet, optionally clipped by another polytope."""
    return polytope.facet(facet, restriction).measure()


@dataclass(frozen=True)
class BoundaryPatch:
    piece: int
    facet: int
    region: ConvexPolytope | None = None


@dataclass(frozen=True, eq=False)
class Domain:
    """Open domain: the interior of a finite union of convex polytopes.

    ``gamma1`` and ``gamma2`` are the source and sink boundary patches.
    """

    pieces: tuple
    gamma1: tuple = ()
    gamma2: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "pieces", tuple(self.pieces))
        object.__setattr__(self, "gamma1", tuple(self.gamma1))
        object.__setattr__(self, "gamma2", tuple(self.gamma2))
        if not self.pieces:
            raise GeometryError("domain has no pieces")
        dims = {p.dim for p in self.pieces}
        if len(dims) != 1:
            raise GeometryError("pieces have mixed dimensions")

    @property
    def dim(self) -> int:
        return self.pieces[0].dim

    @property
    def bbox(self):
        lows, highs = zip(*(p.bbox for p in self.pieces))
        return np.min(lows, axis=0), np.max(highs, axis=0)

    def patch_face(self, patch: BoundaryPatch) -> Face:
        if not 0 <= patch.piece < len(self.pieces):
            raise GeometryError(f"patch refers to missing piece {patch.piece}")
        return self.pieces[patch.piece].facet(patch.facet, patch.region)

    def faces(self, which: int) -> list[Face]:
        patches = self.gamma1 if which == 1 else self.gamma2
        return [self.patch_face(p) for p in patches]

    def contains(self, x) -> np.ndarray:
        """Membership in the closure of the domain."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.any([p.contains(x) for p in self.pieces], axis=0)

    def contains_open(self, x) -> np.ndarray:
        """Membership in the open domain.

        Points on shared boundaries between pieces are resolved by probing
        a small cross of neighbouring points against the closed union.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        inside = np.any([p.contains(x, strict=True) for p in self.pieces], axis=0)
        todo = np.flatnonzero(~inside & self.contains(x))
        if todo.size:
            d = self.dim
            dirs = np.vstack([np.eye(d), -np.eye(d), np.array(list(itertools.product((-1.0, 1.0), repeat=d)))])
            for i in todo:
                probes = x[i] + _PROBE * dirs
                inside[i] = bool(np.all(self.contains(probes)))
        return inside

    def segment_inside(self, p, q) -> bool:
        p = np.asarray(p, float)
        q = np.asarray(q, float)
        step = q - p
        cuts = [0.0, 1.0]
        for piece in self.pieces:
            fp = piece.normals @ p - piece.offsets
            df = piece.normals @ step
            nz = np.abs(df) > 1e-15
            cuts.extend((-fp[nz] / df[nz]).tolist())
        ts = np.unique(np.clip(cuts, 0.0, 1.0))
        mids = (ts[:-1] + ts[1:]) / 2
        probe = np.concatenate([ts[(ts > 0) & (ts < 1)], mids])
        return bool(np.all(self.contains_open(p + probe[:, None] * step)))

    def omega_mask(self, points: np.ndarray, r: float) -> np.ndarray:
        """Points at L-inf distance < r from the domain."""
        out = np.zeros(len(points), dtype=bool)
        for piece in self.pieces:
            N, b = piece.linf_neighbourhood(r)
            out |= np.all(points @ N.T - b < -TOL, axis=1)
        return out

    def near_patch_mask(self, points: np.ndarray, which: int, r: float) -> np.ndarray:
        """Points at L-inf distance < r from Gamma^which."""
        out = np.zeros(len(points), dtype=bool)
        for face in self.faces(which):
            N, b = face.linf_neighbourhood(r)
            out |= np.all(points @ N.T - b < -TOL, axis=1)
        return out

    def validate(self) -> "Domain":
        for piece in self.pieces:
            piece.validate()
        if not self.gamma1 or not self.gamma2:
            raise GeometryError("both boundary patches must be given")
        for which in (1, 2):
            for face in self.faces(which):
                if face.measure() <= TOL:
                    raise GeometryError(f"gamma{which} patch has empty relative interior")
                c = face.relative_center()
                if c is not None and self.contains_open(c)[0]:
                    raise GeometryError(f"gamma{which} patch is not on the domain boundary")
        for f1 in self.faces(1):
            for f2 in self.faces(2):
                if face_distance_linf(f1, f2) <= TOL:
                    raise GeometryError("gamma1 and gamma2 must be at positive distance")
        return self


Region = Union[ConvexPolytope, Face, Domain, Sequence]


def _pieces(region) -> list:
    """Split a region into convex parts as (A_ub, b_ub, A_eq, b_eq) constraint tuples."""
    if isinstance(region, Domain):
        return [_pieces(p)[0] for p in region.pieces]
    if isinstance(region, ConvexPolytope):
        return [(region.normals, region.offsets, None, None)]
    if isinstance(region, Face):
        return [(region.A, region.B, region.normal[None, :], np.array([region.offset]))]
    out = []
    for r in region:
        out.extend(_pieces(r))
    return out


def _linf_lp(x, A, b, Aeq, beq) -> float:
    d = x.size
    eye = np.eye(d)
    ones = np.ones((d, 1))
    A_ub = np.vstack([np.hstack([eye, -ones]), np.hstack([-eye, -ones])])
    b_ub = np.concatenate([x, -x])
    if len(A):
        A_ub = np.vstack([A_ub, np.hstack([A, np.zeros((len(A), 1))])])
        b_ub = np.concatenate([b_ub, b])
    kw = {}
    if Aeq is not None:
        kw = dict(A_eq=np.hstack([Aeq, np.zeros((len(Aeq), 1))]), b_eq=beq)
    c = np.zeros(d + 1)
    c[-1] = 1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * d + [(0, None)], method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}, **kw)
    if res.status != 0:
        raise GeometryError("distance to an empty set")
    return float(res.fun)


def _l2_active_set(x, A, b, Aeq, beq) -> float:
    """Exact Euclidean projection by enumerating active constraint sets."""
    d = x.size
    n_eq = 0 if Aeq is None else len(Aeq)
    if n_eq == 0 and np.all(A @ x - b <= TOL):
        return 0.0
    best = np.inf
    for k in range(0, d - n_eq + 1):
        for S in itertools.combinations(range(len(A)), k):
            rows = [A[list(S)]] if k else []
            vals = [b[list(S)]] if k else []
            if n_eq:
                rows.insert(0, Aeq)
                vals.insert(0, beq)
            if not rows:
                continue
            M = np.vstack(rows)
            c = np.concatenate(vals)
            if np.linalg.matrix_rank(M) < M.shape[0]:
                continue
            y = x - M.T @ np.linalg.solve(M @ M.T, M @ x - c)
            if np.all(A @ y - b <= TOL):
                best = min(best, float(np.linalg.norm(x - y)))
    if not np.isfinite(best):
        raise GeometryError("distance to an empty set")
    return best


def dist_linf(x, region: Region) -> float:
    """L-inf distance from a point to a convex region or a union of them."""
    x = np.asarray(x, dtype=float)
    return min(_linf_lp(x, *c) for c in _pieces(region))


def dist_l2(x, region: Region) -> float:
    """Euclidean distance from a point to a convex region or a union of them."""
    x = np.asarray(x, dtype=float)
    return min(_l2_active_set(x, *c) for c in _pieces(region))


def face_distance_linf(f: Face, g: Face) -> float:
    """L-inf distance between two faces (LP over pairs of points)."""
    d = f.dim
    eye = np.eye(d)
    ones = np.ones((d, 1))
    zf = np.zeros((len(f.A), d))
    zg = np.zeros((len(g.A), d))
    A_ub = np.vstack([
        np.hstack([eye, -eye, -ones]),
        np.hstack([-eye, eye, -ones]),
        np.hstack([f.A, zf, np.zeros((len(f.A), 1))]),
        np.hstack([zg, g.A, np.zeros((len(g.A), 1))]),
    ])
    b_ub = np.concatenate([np.zeros(2 * d), f.B, g.B])
    A_eq = np.vstack([
        np.concatenate([f.normal, np.zeros(d), [0.0]]),
        np.concatenate([np.zeros(d), g.normal, [0.0]]),
    ])
    b_eq = np.array([f.offset, g.offset])
    c = np.zeros(2 * d + 1)
    c[-1] = 1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=[(None, None)] * (2 * d) + [(0, None)], method="highs")
    if res.status != 0:
        raise GeometryError("distance between empty faces")
    return float(res.fun)


def edge_in_set(p, q, region, closed: bool = False) -> bool:
    """Whether the open segment (p, q) is included in ``region``.

    A ``ConvexPolytope`` is read as its interior unless ``closed`` is set;
    a ``Domain`` is always the open union of its pieces.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if np.allclose(p, q):
        raise GeometryError("segment endpoints coincide")
    if isinstance(region, Domain):
        return region.segment_inside(p, q)
    return region.segment_inside(p, q, closed=closed)


@dataclass(frozen=True, eq=False)
class Hyperrectangle:
    """A (d-1)-dimensional box ``corner + sum_i s_i * sides[i]`` with ``s_i`` in [0, 1]."""

    corner: np.ndarray
    sides: np.ndarray

    def __post_init__(self):
        corner = np.array(self.corner, dtype=float)
        sides = np.array(self.sides, dtype=float, ndmin=2)
        if sides.shape != (corner.size - 1, corner.size):
            raise GeometryError("a hyperrectangle in R^d needs d-1 side vectors")
        lengths = np.linalg.norm(sides, axis=1)
        if np.any(lengths <= TOL):
            raise GeometryError("degenerate hyperrectangle")
        gram = sides @ sides.T / np.outer(lengths, lengths)
        if np.max(np.abs(gram - np.eye(len(sides)))) > 1e-9:
            raise GeometryError("hyperrectangle sides must be orthogonal")
        object.__setattr__(self, "corner", _readonly(corner))
        object.__setattr__(self, "sides", _readonly(sides))

    @classmethod
    def centered(cls, center, axes, side: float) -> "Hyperrectangle":
        """Box of equal side lengths around ``center`` along the unit columns of ``axes``."""
        axes = np.asarray(axes, dtype=float).reshape(len(center), -1)
        sides = side * axes.T
        return cls(np.asarray(center, float) - sides.sum(axis=0) / 2, sides)

    @property
    def center(self) -> np.ndarray:
        return self.corner + self.sides.sum(axis=0) / 2

    @property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.sides, axis=1)

    @property
    def measure(self) -> float:
        return float(np.prod(self.lengths))


@dataclass(frozen=True, eq=False)
class CylinderSpec:
    """``cyl(A, h) = {x + t v : x in A, |t| <= h}`` as a closed convex polytope."""

    base: Hyperrectangle
    normal: np.ndarray
    half_height: float
    polytope: ConvexPolytope

    @property
    def base_center(self) -> np.ndarray:
        return self.base.center

    @property
    def dim(self) -> int:
        return self.normal.size

    def height(self, x) -> np.ndarray:
        """Signed distance along the normal from the base hyperplane."""
        return (np.atleast_2d(x) - self.base_center) @ self.normal

    def lateral(self) -> tuple[np.ndarray, np.ndarray]:
        """Unit side directions of the base and their half lengths."""
        return self.base.sides / self.base.lengths[:, None], self.base.lengths / 2

    def end_face(self, sign: int) -> Face:
        """Top face ``A + h v`` for sign=+1, bottom face ``A - h v`` for sign=-1."""
        u, half = self.lateral()
        c = self.base_center
        A = np.vstack([u, -u])
        B = np.concatenate([u @ c + half, -(u @ c) + half])
        off = float(self.normal @ c + sign * self.half_height)
        return Face(self.normal, off, A, B)


def make_cylinder(base: Hyperrectangle, h: float, v) -> CylinderSpec:
    """Closed cylinder of half height ``h`` over ``base`` along the unit normal ``v``."""
    if not h > 0:
        raise GeometryError("cylinder half height must be positive")
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        v = unit(v)
    if v.size != base.corner.size:
        raise GeometryError("normal and base live in different dimensions")
    if np.any(np.abs(base.sides @ v) / base.lengths > 1e-9):
        raise GeometryError("cylinder normal is not orthogonal to the base")
    c = base.center
    u = base.sides / base.lengths[:, None]
    half = base.lengths / 2
    normals = np.vstack([u, -u, v, -v])
    offsets = np.concatenate([u @ c + half, -(u @ c) + half, [v @ c + h, -(v @ c) + h]])
    return CylinderSpec(base, _readonly(v.copy()), float(h), ConvexPolytope(normals, offsets))
