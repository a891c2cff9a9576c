"""JSON loaders for domains, laws, cuts and nu models, plus CLI list parsing."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .capacity import law_from_dict
from .continuum import PolyhedralCut, nu_from_dict
from .errors import ConfigError, GeometryError
from .geometry import BoundaryPatch, ConvexPolytope, Domain


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def polytope_from_dict(spec: dict) -> ConvexPolytope:
    try:
        hs = spec["halfspaces"]
        return ConvexPolytope([h["normal"] for h in hs], [h["offset"] for h in hs])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad polytope spec: missing {exc}") from None


def polytope_to_dict(P: ConvexPolytope) -> dict:
    return {"halfspaces": [{"normal": n.tolist(), "offset": float(b)} for n, b in zip(P.normals, P.offsets)]}


def _patch(spec: dict) -> BoundaryPatch:
    try:
        region = spec.get("region")
        return BoundaryPatch(int(spec["piece"]), int(spec["facet"]),
                             None if region is None else polytope_from_dict(region))
    except (KeyError, TypeError, AttributeError) as exc:
        raise ConfigError(f"bad boundary patch spec {spec!r}: {exc}") from None


def domain_from_dict(spec: dict, validate: bool = True) -> Domain:
    """Domain from ``{"dim", "pieces", "gamma1", "gamma2"}``."""
    try:
        pieces = [polytope_from_dict(p) for p in spec["pieces"]]
        g1 = [_patch(p) for p in spec["gamma1"]]
        g2 = [_patch(p) for p in spec["gamma2"]]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad domain spec: missing {exc}") from None
    if "dim" in spec and any(p.dim != int(spec["dim"]) for p in pieces):
        raise ConfigError("piece dimension does not match 'dim'")
    domain = Domain(pieces, g1, g2)
    return domain.validate() if validate else domain


def domain_to_dict(domain: Domain) -> dict:
    def patch(p):
        out = {"piece": p.piece, "facet": p.facet}
        if p.region is not None:
            out["region"] = polytope_to_dict(p.region)
        return out

    return {
        "dim": domain.dim,
        "pieces": [polytope_to_dict(p) for p in domain.pieces],
        "gamma1": [patch(p) for p in domain.gamma1],
        "gamma2": [patch(p) for p in domain.gamma2],
    }


def load_domain(path) -> Domain:
    return domain_from_dict(load_json(path))


def load_law(path):
    return law_from_dict(load_json(path))


def load_nu(path):
    return nu_from_dict(load_json(path))


def load_cut(path) -> PolyhedralCut:
    return PolyhedralCut.from_dict(load_json(path))


def parse_vector(text: str) -> np.ndarray:
    try:
        v = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise ConfigError(f"cannot parse vector {text!r}") from None
    if v.size < 2 or not np.any(v):
        raise ConfigError(f"need a nonzero vector of dimension >= 2, got {text!r}")
    return v


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse integer list {text!r}") from None


def parse_float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse number list {text!r}") from None


def unit_square(gamma1: int = 0, gamma2: int = 2) -> Domain:
    """(0,1)^2 with patches on two of its sides (facets: 0 left, 1 bottom, 2 right, 3 top)."""
    return Domain([ConvexPolytope.box([0, 0], [1, 1])], [BoundaryPatch(0, gamma1)], [BoundaryPatch(0, gamma2)])


def l_shape() -> Domain:
    """(0,1)^2 U (1,2)x(0,1/2), left side of the square to the right side of the foot."""
    try:
        return Domain(
            [ConvexPolytope.box([0, 0], [1, 1]), ConvexPolytope.box([1, 0], [2, 0.5])],
            [BoundaryPatch(0, 0)],
            [BoundaryPatch(1, 2)],
        ).validate()
    except GeometryError:  # pragma: no cover - fixed geometry
        raise
