"""Flows through cylinders and Monte-Carlo estimation of the limit capacity nu(v).

``tau`` is the maximal flow between the two halves of the cylinder
boundary separated by the base hyperplane; ``phi_cyl`` runs from bottom to
top. Normalising ``tau`` by ``n^(d-1)`` times the base area and letting
``n`` grow gives ``nu(v)``.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ._parallel import run_ordered
from .capacity import CapacityLaw, from_fixed, sample
from .errors import GeometryError, MeshTooCoarse
from .flow import max_flow
from .geometry import TOL, CylinderSpec, Face, Hyperrectangle, make_cylinder, orthonormal_complement, unit
from .lattice import Lattice, make_lattice, neighbour_outside, scan_box

Z95 = 1.96


@dataclass(frozen=True, eq=False)
class CylinderInstance:
    spec: CylinderSpec
    n: int
    lattice: Lattice
    top: np.ndarray
    bottom: np.ndarray

    @property
    def lower(self) -> np.ndarray:
        """Boundary vertices strictly below the base hyperplane."""
        return self.lattice.gamma1

    @property
    def upper(self) -> np.ndarray:
        return self.lattice.gamma2


def _meets_face(P: np.ndarray, Q: np.ndarray, face: Face) -> np.ndarray:
    """Whether each closed segment [P_k, Q_k] intersects the flat face."""
    f0 = P @ face.normal - face.offset
    f1 = Q @ face.normal - face.offset
    on_plane = np.abs(f0) <= TOL
    crosses = ~on_plane & (f0 * f1 <= 0) & (np.abs(f0 - f1) > TOL)
    t = np.where(crosses, f0 / np.where(crosses, f0 - f1, 1.0), 0.0)
    Z = P + t[:, None] * (Q - P)
    lateral_ok = np.all(Z @ face.A.T - face.B <= TOL, axis=1)
    return (on_plane | crosses) & lateral_ok


def build_cylinder_instance(spec: CylinderSpec, n: int) -> CylinderInstance:
    """Lattice inside the closed cylinder with its marked boundary sets."""
    if int(n) != n or n < 1:
        raise GeometryError("mesh n must be a positive integer")
    n = int(n)
    lo, hi = spec.polytope.bbox
    pts, shape = scan_box(lo, hi, n)
    inside = spec.polytope.contains(pts / n)
    if not inside.any():
        raise MeshTooCoarse(f"cylinder too thin for mesh n={n}: no lattice point inside")
    boundary = neighbour_outside(inside, shape)[inside]
    vertices = pts[inside]
    pos = vertices / n
    height = spec.height(pos)
    lower = boundary & (height < -TOL)
    upper = boundary & (height > TOL)

    # vertices whose edge to an outside neighbour meets the top or bottom face
    top = np.zeros(len(vertices), bool)
    bottom = np.zeros(len(vertices), bool)
    faces = (spec.end_face(+1), spec.end_face(-1))
    d = spec.dim
    for axis in range(d):
        for step in (-1, 1):
            nb = vertices.copy()
            nb[:, axis] += step
            out = ~spec.polytope.contains(nb / n)
            if not out.any():
                continue
            P, Q = pos[out], nb[out] / n
            top[out] |= _meets_face(P, Q, faces[0])
            bottom[out] |= _meets_face(P, Q, faces[1])
    for name, mask in (("top", top), ("bottom", bottom), ("upper half-boundary", upper), ("lower half-boundary", lower)):
        if not mask.any():
            raise MeshTooCoarse(f"cylinder too thin for mesh n={n}: empty {name}")
    lattice = make_lattice(n, vertices, lower, upper, boundary)
    return CylinderInstance(spec, n, lattice, np.flatnonzero(top), np.flatnonzero(bottom))


def tau(instance: CylinderInstance, caps, method: str = "push_relabel") -> int:
    """Max flow between the lower and upper half-boundaries (fixed point)."""
    return max_flow(instance.lattice, caps, instance.lower, instance.upper, method=method).value


def phi_cyl(instance: CylinderInstance, caps, method: str = "push_relabel") -> int:
    """Max flow from the bottom to the top of the cylinder (fixed point)."""
    return max_flow(instance.lattice, caps, instance.bottom, instance.top, method=method).value


def flat_cut_edges(instance: CylinderInstance) -> np.ndarray:
    """Edges from strictly below the base hyperplane to on-or-above it."""
    h = instance.spec.height(instance.lattice.positions)
    u, v = instance.lattice.edges.T
    lo = np.minimum(h[u], h[v])
    hi = np.maximum(h[u], h[v])
    return np.flatnonzero((lo < -TOL) & (hi >= -TOL))


def centered_cylinder(v, base_size: float, h: float, center=None) -> CylinderSpec:
    """Cylinder over a cube-shaped base of side ``base_size`` orthogonal to ``v``."""
    v = unit(v)
    center = np.zeros(v.size) if center is None else np.asarray(center, float)
    base = Hyperrectangle.centered(center, orthonormal_complement(v), base_size)
    return make_cylinder(base, h, v)


@dataclass
class NuEstimate:
    direction: np.ndarray
    n_values: list
    estimates: list
    stds: list
    ci95: list
    trials: int
    law: CapacityLaw
    seconds: list = field(default_factory=list)
    samples: list = field(default_factory=list)

    @property
    def point(self) -> float:
        """Estimate at the finest mesh."""
        return self.estimates[-1]

    @property
    def point_ci(self) -> float:
        return self.ci95[-1]

    @property
    def point_se(self) -> float:
        return self.stds[-1] / np.sqrt(self.trials)

    def rows(self) -> list[dict]:
        return [
            {"n": n, "mean": m, "ci95": c, "trials": self.trials, "seconds": s}
            for n, m, c, s in zip(self.n_values, self.estimates, self.ci95, self.seconds)
        ]


def summarize(x: np.ndarray) -> tuple[float, float, float]:
    """Mean, sample std (0 for one trial) and normal 95% half width."""
    x = np.asarray(x, dtype=float)
    mean = float(x.mean())
    std = float(x.std(ddof=1)) if x.size > 1 else 0.0
    return mean, std, Z95 * std / np.sqrt(x.size)


def estimate_nu(
    v,
    law: CapacityLaw,
    base_size: float = 4.0,
    h: float | None = None,
    n_list=(4, 8, 16, 32),
    trials: int = 100,
    seed: int = 0,
    threads: int | None = None,
    spec: CylinderSpec | None = None,
) -> NuEstimate:
    """Monte-Carlo estimate of nu(v) from tau over a centred cylinder.

    Trial ``k`` uses capacities seeded with ``seed ^ k``; the height
    defaults to ``base_size / 4``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    n_list = [int(n) for n in n_list]
    if any(b < a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be nondecreasing")
    if spec is None:
        if not base_size > 0:
            raise GeometryError("degenerate cylinder base")
        spec = centered_cylinder(v, base_size, base_size / 4 if h is None else h)
    d = spec.dim
    area = spec.base.measure
    est = NuEstimate(np.asarray(spec.normal), n_list, [], [], [], trials, law)
    for n in n_list:
        t0 = time.perf_counter()
        inst = build_cylinder_instance(spec, n)
        norm = n ** (d - 1) * area

        def one(k, inst=inst):
            return tau(inst, sample(law, inst.lattice, seed ^ k))

        values = np.array(run_ordered(one, range(trials), threads), dtype=np.int64)
        x = from_fixed(values) / norm
        mean, std, ci = summarize(x)
        est.estimates.append(mean)
        est.stds.append(std)
        est.ci95.append(ci)
        est.samples.append(x)
        est.seconds.append(time.perf_counter() - t0)
    return est
