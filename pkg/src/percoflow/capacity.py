"""Capacity laws and reproducible i.i.d. sampling of edge capacities.

Capacities are fixed-point integers with ``SCALE`` units per capacity unit,
so max-flow/min-cut identities hold exactly. Edge ``k`` always receives the
``k``-th output of a Philox stream keyed by the seed, which makes a value
depend only on ``(seed, k)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError

SCALE_BITS = 20
SCALE = 1 << SCALE_BITS
_MASK64 = (1 << 64) - 1

# bond percolation thresholds; only d=2 is exact, the rest is configuration
DEFAULT_PC_TABLE = {2: 0.5, 3: 0.2488}


def to_fixed(x) -> np.ndarray:
    """Quantize capacities to the fixed-point grid (round half to even)."""
    return np.rint(np.asarray(x, dtype=float) * SCALE).astype(np.int64)


def from_fixed(v):
    return np.asarray(v, dtype=np.float64) / SCALE if np.ndim(v) else int(v) / SCALE


class CapacityLaw:
    """Base class; subclasses map uniforms in [0, 1) to capacities."""

    kind = ""

    def transform(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def atom_at_zero(self) -> float:
        raise NotImplementedError

    def has_exponential_moment(self) -> bool:
        return True

    def to_dict(self) -> dict:
        raise NotImplementedError

    def scaled(self, c: float) -> "CapacityLaw":
        raise NotImplementedError


def _check_nonneg(**values):
    for name, v in values.items():
        if not (v >= 0 and math.isfinite(v)):
            raise ConfigError(f"{name} must be a finite nonnegative number, got {v!r}")


@dataclass(frozen=True)
class Constant(CapacityLaw):
    value: float
    kind = "constant"

    def __post_init__(self):
        _check_nonneg(value=self.value)

    def transform(self, u):
        return np.full(np.shape(u), float(self.value))

    def atom_at_zero(self):
        return 1.0 if self.value == 0 else 0.0

    def to_dict(self):
        return {"type": self.kind, "value": self.value}

    def scaled(self, c):
        return Constant(self.value * c)


@dataclass(frozen=True)
class Bernoulli(CapacityLaw):
    """``hi`` with probability ``p``, otherwise 0."""

    p: float
    hi: float = 1.0
    kind = "bernoulli"

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError(f"bernoulli p must lie in [0, 1], got {self.p!r}")
        _check_nonneg(hi=self.hi)

    def transform(self, u):
        return np.where(np.asarray(u) < self.p, float(self.hi), 0.0)

    def atom_at_zero(self):
        return 1.0 if self.hi == 0 else 1.0 - self.p

    def to_dict(self):
        return {"type": self.kind, "p": self.p, "hi": self.hi}

    def scaled(self, c):
        return Bernoulli(self.p, self.hi * c)


@dataclass(frozen=True)
class Uniform(CapacityLaw):
    a: float = 0.0
    b: float = 1.0
    kind = "uniform"

    def __post_init__(self):
        _check_nonneg(a=self.a, b=self.b)
        if self.b < self.a:
            raise ConfigError("uniform law needs a <= b")

    def transform(self, u):
        return self.a + (self.b - self.a) * np.asarray(u)

    def atom_at_zero(self):
        return 1.0 if self.b == 0 else 0.0

    def to_dict(self):
        return {"type": self.kind, "a": self.a, "b": self.b}

    def scaled(self, c):
        return Uniform(self.a * c, self.b * c)


@dataclass(frozen=True)
class Exponential(CapacityLaw):
    rate: float = 1.0
    kind = "exponential"

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise ConfigError("exponential rate must be positive")

    def transform(self, u):
        return -np.log1p(-np.asarray(u)) / self.rate

    def atom_at_zero(self):
        return 0.0

    def to_dict(self):
        return {"type": self.kind, "rate": self.rate}

    def scaled(self, c):
        if c <= 0:
            raise ConfigError("exponential law can only be scaled by c > 0")
        return Exponential(self.rate / c)


@dataclass(frozen=True)
class DiscreteTable(CapacityLaw):
    values: tuple
    probs: tuple
    kind = "table"

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if not self.values or len(self.values) != len(self.probs):
            raise ConfigError("table law needs matching nonempty values and probs")
        for v in self.values:
            _check_nonneg(value=v)
        if any(p < 0 for p in self.probs) or abs(sum(self.probs) - 1.0) > 1e-12:
            raise ConfigError("table probabilities must be nonnegative and sum to 1")

    def transform(self, u):
        cdf = np.cumsum(self.probs)
        k = np.searchsorted(cdf, np.asarray(u), side="right")
        return np.asarray(self.values)[np.minimum(k, len(self.values) - 1)]

    def atom_at_zero(self):
        return float(sum(p for v, p in zip(self.values, self.probs) if v == 0))

    def to_dict(self):
        return {"type": self.kind, "values": list(self.values), "probs": list(self.probs)}

    def scaled(self, c):
        return DiscreteTable(tuple(v * c for v in self.values), self.probs)


def atom_at_zero(law: CapacityLaw) -> float:
    return law.atom_at_zero()


def has_exponential_moment(law: CapacityLaw) -> bool:
    return law.has_exponential_moment()


_LAWS = {
    "constant": lambda d: Constant(float(d["value"])),
    "bernoulli": lambda d: Bernoulli(float(d["p"]), float(d.get("hi", 1.0))),
    "uniform": lambda d: Uniform(float(d.get("a", 0.0)), float(d.get("b", 1.0))),
    "exponential": lambda d: Exponential(float(d.get("rate", 1.0))),
    "table": lambda d: DiscreteTable(tuple(d["values"]), tuple(d["probs"])),
}


def law_from_dict(spec: dict) -> CapacityLaw:
    try:
        kind = spec["type"].lower()
        return _LAWS[kind](spec)
    except KeyError as exc:
        raise ConfigError(f"bad capacity law spec {spec!r}: missing {exc}") from None
    except (TypeError, ValueError, AttributeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad capacity law spec {spec!r}: {exc}") from None


def load_law(path) -> CapacityLaw:
    try:
        return law_from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read law file {path}: {exc}") from None


def load_pc_table(path=None) -> dict:
    """Default thresholds, overridden by a JSON object ``{"d": p_c}`` when given."""
    table = dict(DEFAULT_PC_TABLE)
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
            table.update({int(k): float(v) for k, v in raw.items()})
        except (OSError, ValueError, AttributeError) as exc:
            raise ConfigError(f"cannot read p_c table {path}: {exc}") from None
    return table


def _uniforms_from_raw(raw: np.ndarray) -> np.ndarray:
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53


def edge_uniforms(seed: int, count: int) -> np.ndarray:
    """Uniforms for edges ``0..count-1``: edge k gets output k of Philox keyed by ``seed``."""
    bitgen = np.random.Philox(key=int(seed) & _MASK64)
    return _uniforms_from_raw(bitgen.random_raw(count))


def edge_uniform_at(seed: int, k: int) -> float:
    """Uniform of a single edge, computed by jumping the counter (same value as ``edge_uniforms``)."""
    bitgen = np.random.Philox(key=int(seed) & _MASK64, counter=k // 4)
    return float(_uniforms_from_raw(bitgen.random_raw(4))[k % 4])


@dataclass(frozen=True, eq=False)
class CapacityAssignment:
    law: CapacityLaw | None
    seed: int | None
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    def scaled(self, factor: int) -> "CapacityAssignment":
        """Exact integer rescaling of every capacity."""
        return CapacityAssignment(None, self.seed, self.values * int(factor))


def sample(law: CapacityLaw, lattice, seed: int) -> CapacityAssignment:
    """Draw one capacity per lattice edge, in canonical edge order."""
    n_edges = lattice if isinstance(lattice, int) else lattice.n_edges
    u = edge_uniforms(seed, n_edges)
    values = to_fixed(law.transform(u))
    values.setflags(write=False)
    return CapacityAssignment(law, int(seed), values)


def fixed_assignment(values) -> CapacityAssignment:
    """Assignment from explicit capacities (in capacity units)."""
    v = to_fixed(values)
    v.setflags(write=False)
    return CapacityAssignment(None, None, v)
