"""Exact maximal flows and minimal cuts between two vertex sets of a lattice.

The undirected edge ``k = (u, v)`` with capacity ``t`` becomes a pair of
mutually reverse arcs of capacity ``t`` each, so the net flow through the
edge ranges over ``[-t, t]``. An auxiliary source feeds every vertex of
``F1`` and every vertex of ``F2`` drains into an auxiliary sink; those arcs
carry ``1 + sum(t)``, which no minimal cut can afford.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .capacity import CapacityAssignment, from_fixed

METHODS = {"push_relabel": _kernels.push_relabel, "dinic": _kernels.dinic}


@dataclass(frozen=True, eq=False)
class Stream:
    """Per-edge amount ``g >= 0`` and orientation (True means lower endpoint to upper)."""

    g: np.ndarray
    forward: np.ndarray

    @classmethod
    def from_net(cls, net) -> "Stream":
        net = np.asarray(net, dtype=np.int64)
        return cls(np.abs(net), net >= 0)

    @classmethod
    def zero(cls, n_edges: int) -> "Stream":
        return cls(np.zeros(n_edges, np.int64), np.ones(n_edges, bool))

    @property
    def net(self) -> np.ndarray:
        return np.where(self.forward, self.g, -self.g)


@dataclass(frozen=True, eq=False)
class Cut:
    edges: np.ndarray
    source_side: np.ndarray

    def __len__(self) -> int:
        return len(self.edges)


@dataclass(frozen=True, eq=False)
class FlowResult:
    value: int
    stream: Stream
    cut: Cut
    cut_capacity: int
    runtime_ms: float = 0.0

    @property
    def value_real(self) -> float:
        return from_fixed(self.value)


@dataclass
class StreamCheck:
    valid: bool
    flow: int
    violations: list = field(default_factory=list)


def _ids(vertices, n_vertices: int) -> np.ndarray:
    ids = np.unique(np.asarray(vertices, dtype=np.int64))
    if ids.size and (ids[0] < 0 or ids[-1] >= n_vertices):
        raise ValueError("terminal vertex out of range")
    return ids


def _capacities(caps) -> np.ndarray:
    return np.asarray(caps.values if isinstance(caps, CapacityAssignment) else caps, dtype=np.int64)


def build_network(n_vertices: int, edges: np.ndarray, caps: np.ndarray, F1: np.ndarray, F2: np.ndarray):
    """CSR residual network; returns ``(start, head, rev, cap, edge_arc, s, t)``."""
    E = len(edges)
    s, t = n_vertices, n_vertices + 1
    big = int(caps.sum()) + 1
    u, v = edges[:, 0], edges[:, 1]
    tail = np.concatenate([u, v, np.full(F1.size, s), F1, F2, np.full(F2.size, t)])
    head = np.concatenate([v, u, F1, np.full(F1.size, s), np.full(F2.size, t), F2])
    cap = np.concatenate([caps, caps, np.full(F1.size, big), np.zeros(F1.size, np.int64),
                          np.full(F2.size, big), np.zeros(F2.size, np.int64)]).astype(np.int64)
    n1, n2 = F1.size, F2.size
    rev = np.concatenate([
        np.arange(E, 2 * E), np.arange(E),
        2 * E + n1 + np.arange(n1), 2 * E + np.arange(n1),
        2 * E + 2 * n1 + n2 + np.arange(n2), 2 * E + 2 * n1 + np.arange(n2),
    ])
    order = np.argsort(tail, kind="stable")
    pos = np.empty_like(order)
    pos[order] = np.arange(order.size)
    start = np.searchsorted(tail[order], np.arange(n_vertices + 3)).astype(np.int64)
    return (start, head[order].astype(np.int64), pos[rev[order]].astype(np.int64),
            cap[order], pos[:E], s, t)


def solve(n_vertices: int, edges, caps, F1, F2, method: str = "push_relabel") -> FlowResult:
    """Max flow on an arbitrary undirected graph given by its edge array."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    caps = _capacities(caps)
    if len(caps) != len(edges):
        raise ValueError("one capacity per edge is required")
    if np.any(caps < 0):
        raise ValueError("capacities must be nonnegative")
    F1 = _ids(F1, n_vertices)
    F2 = _ids(F2, n_vertices)
    if F1.size == 0 or F2.size == 0:
        raise ValueError("both terminal sets must be nonempty")
    if np.intersect1d(F1, F2).size:
        raise ValueError("terminal sets must be disjoint")
    t0 = time.perf_counter()
    start, head, rev, cap, edge_arc, s, t = build_network(n_vertices, edges, caps, F1, F2)
    value, residual = METHODS[method](start, head, rev, cap, s, t)
    reach = _kernels.residual_reachable(start, head, residual, s)
    side = reach[:n_vertices]
    net = caps - residual[edge_arc]
    cut_edges = np.flatnonzero(side[edges[:, 0]] != side[edges[:, 1]])
    cut_cap = int(caps[cut_edges].sum())
    runtime = (time.perf_counter() - t0) * 1e3
    side.setflags(write=False)
    return FlowResult(int(value), Stream.from_net(net), Cut(cut_edges, side), cut_cap, runtime)


def max_flow(lattice, caps, F1, F2, method: str = "push_relabel") -> FlowResult:
    """Maximal flow from ``F1`` to ``F2`` (vertex index arrays) in the lattice."""
    return solve(lattice.n_vertices, lattice.edges, caps, F1, F2, method=method)


def cut_capacity(E, caps) -> int:
    """Exact total capacity of the edge set ``E`` (edge indices)."""
    values = _capacities(caps)
    E = np.asarray(E, dtype=np.int64).ravel()
    if E.size and (E.min() < 0 or E.max() >= len(values)):
        raise KeyError("unknown edge in cut")
    return int(values[np.unique(E)].sum())


def check_stream(lattice, caps, F1, F2, stream: Stream) -> StreamCheck:
    """Verify capacity bounds and conservation off the terminals.

    The flow is the net amount delivered into ``F2``; the net export out
    of ``F1`` must agree with it.
    """
    values = _capacities(caps)
    edges = lattice.edges
    V = lattice.n_vertices
    violations = []
    g = np.asarray(stream.g, dtype=np.int64)
    bad = np.flatnonzero((g < 0) | (g > values))
    violations += [("capacity", int(k), int(g[k]), int(values[k])) for k in bad]
    net = stream.net
    out = np.zeros(V, np.int64)
    np.add.at(out, edges[:, 0], net)
    np.add.at(out, edges[:, 1], -net)
    F1 = _ids(F1, V)
    F2 = _ids(F2, V)
    interior = np.ones(V, bool)
    interior[F1] = False
    interior[F2] = False
    violations += [("conservation", int(v), int(out[v])) for v in np.flatnonzero(interior & (out != 0))]
    into_f2 = -int(out[F2].sum())
    from_f1 = int(out[F1].sum())
    if into_f2 != from_f1:
        violations.append(("flow_mismatch", from_f1, into_f2))
    return StreamCheck(not violations, into_f2, violations)


def min_cut_is_cutset(lattice, cut, F1, F2) -> bool:
    """True iff no path joins ``F1`` to ``F2`` once the cut edges are removed."""
    edges = lattice.edges
    V = lattice.n_vertices
    cut_edges = cut.edges if isinstance(cut, Cut) else cut
    keep = np.ones(len(edges), bool)
    keep[np.asarray(cut_edges, dtype=np.int64)] = False
    e = edges[keep]
    adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(V, V))
    _, label = connected_components(adj, directed=False)
    return not np.intersect1d(label[_ids(F1, V)], label[_ids(F2, V)]).size
