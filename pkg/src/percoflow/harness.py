"""Experiment orchestration: repeated trials, summaries and CSV/JSON output.

Every trial capacity draw is keyed by ``derive_seed(master, n, trial)`` so a
single record can be regenerated in isolation, and thread count never
changes the numbers.
"""
from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from ._parallel import run_ordered
from .capacity import Bernoulli, CapacityLaw, from_fixed, sample
from .continuum import FlatCut, NuModel, flat_cut_bound
from .cylinder import Z95
from .errors import ConfigError, GeometryError, MeshTooCoarse
from .flow import max_flow
from .geometry import Domain
from .lattice import Lattice, discretize

MASK64 = (1 << 64) - 1
SUMMARY_HEADER = ["n", "mean", "std", "ci95", "trials", "seconds"]
KINDS = ("converge", "phase", "nu", "flow")

# derive_seed(0, 0, 0); pinned by the tests
SEED_000 = 0x238275BC38FCBE91


def _splitmix64(x):
    """splitmix64 step on python ints or uint64 arrays (wraps mod 2^64)."""
    if isinstance(x, np.ndarray):
        with np.errstate(over="ignore"):
            z = x + np.uint64(0x9E3779B97F4A7C15)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
            return z ^ (z >> np.uint64(31))
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master, n, trial):
    """64-bit trial seed: chained splitmix64 over master, n and trial.

    Each stage is a bijection of the running state xor the next input, so
    for fixed (master, n) distinct trials give distinct seeds. Accepts
    integers or uint64 arrays.
    """
    if any(isinstance(a, np.ndarray) for a in (master, n, trial)):
        m, k, t = (np.asarray(a).astype(np.uint64) for a in (master, n, trial))
        return _splitmix64(_splitmix64(_splitmix64(m) ^ k) ^ t)
    h = _splitmix64(int(master) & MASK64)
    h = _splitmix64(h ^ (int(n) & MASK64))
    return _splitmix64(h ^ (int(trial) & MASK64))


@dataclass
class ExperimentConfig:
    domain: Domain | None
    law: CapacityLaw | None
    n_list: list
    trials: int = 1
    seed: int = 0
    kind: str = "converge"
    out: str | None = None
    json_out: str | None = None
    threads: int | None = None
    nu: NuModel | None = None
    axis: tuple | None = None
    timing: bool = True

    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        if not self.n_list:
            raise ConfigError("n_list is empty")
        if any(int(n) != n or n < 1 for n in self.n_list):
            raise ConfigError("mesh sizes must be positive integers")
        if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
            raise ConfigError("n_list must be strictly increasing")
        if int(self.trials) < 1:
            raise ConfigError("trials must be at least 1")
        if self.threads is not None and int(self.threads) < 1:
            raise ConfigError("threads must be at least 1")
        return self


@dataclass(frozen=True)
class TrialRecord:
    n: int
    trial: int
    seed: int
    value: int
    normalized: float
    cut_size: int
    seconds: float


@dataclass(frozen=True)
class SummaryRow:
    n: int
    mean: float
    std: float
    ci95: float
    trials: int
    seconds: float = 0.0


def summarize_records(n: int, records: list[TrialRecord]) -> SummaryRow:
    recs = sorted(records, key=lambda r: r.trial)
    x = np.array([r.normalized for r in recs], dtype=float)
    std = float(x.std(ddof=1)) if x.size > 1 else 0.0
    return SummaryRow(
        n=n,
        mean=float(x.mean()),
        std=std,
        ci95=float(Z95 * std / np.sqrt(x.size)),
        trials=len(recs),
        seconds=float(sum(r.seconds for r in recs)),
    )


def _discretize(domain: Domain, n: int) -> Lattice:
    try:
        return discretize(domain, n)
    except MeshTooCoarse as exc:
        raise MeshTooCoarse(f"discretization failed at n={n}: {exc}") from None


def run_trial(lattice: Lattice, law: CapacityLaw, master: int, trial: int) -> TrialRecord:
    """One trial; depends only on (lattice, law, master seed, trial index)."""
    n, d = lattice.n, lattice.dim
    seed = derive_seed(master, n, trial)
    t0 = time.perf_counter()
    res = max_flow(lattice, sample(law, lattice, seed), lattice.gamma1, lattice.gamma2)
    return TrialRecord(
        n=n,
        trial=trial,
        seed=seed,
        value=res.value,
        normalized=float(from_fixed(res.value)) / n ** (d - 1),
        cut_size=len(res.cut),
        seconds=time.perf_counter() - t0,
    )


def default_axis(domain: Domain) -> np.ndarray:
    """Mean outward normal of the gamma2 patches minus that of the gamma1 patches."""
    def normal(which):
        return np.mean([f.normal for f in domain.faces(which)], axis=0)

    a = normal(2) - normal(1)
    if np.linalg.norm(a) < 1e-12:
        raise GeometryError("cannot infer a cut axis from the patch normals; pass one explicitly")
    return a / np.linalg.norm(a)


@dataclass
class ConvergeResult:
    rows: list
    records: list
    lattices: list
    flat_cut: FlatCut | None = None

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "rows": [_row_dict(r, timing) for r in self.rows],
            "lattices": self.lattices,
            "flat_cut_bound": None if self.flat_cut is None else self.flat_cut.to_dict(),
        }


def _row_dict(row: SummaryRow, timing: bool) -> dict:
    out = asdict(row)
    if not timing:
        out["seconds"] = None
    return out


def run_converge(cfg: ExperimentConfig) -> ConvergeResult:
    """Mean of phi_n / n^(d-1) over the trials, for each n in order."""
    cfg.validate()
    if cfg.domain is None or cfg.law is None:
        raise ConfigError("converge needs a domain and a capacity law")
    rows, records, lats = [], [], []
    lattice = None
    for n in cfg.n_list:
        lattice = _discretize(cfg.domain, n)
        recs = run_ordered(lambda k, lat=lattice: run_trial(lat, cfg.law, cfg.seed, k),
                           range(cfg.trials), cfg.threads)
        records += recs
        rows.append(summarize_records(n, recs))
        lats.append(lattice.summary())
    if lattice is not None and not lattice.is_connected():
        raise GeometryError(f"discretized domain is disconnected at n={cfg.n_list[-1]}")
    bound = None
    if cfg.nu is not None:
        axis = default_axis(cfg.domain) if cfg.axis is None else cfg.axis
        bound = flat_cut_bound(cfg.domain, cfg.nu, axis)
    return ConvergeResult(rows, records, lats, bound)


@dataclass
class PhaseResult:
    p_grid: list
    n_list: list
    means: np.ndarray  # shape (len(p_grid), len(n_list))
    rows: dict  # p -> list of SummaryRow
    threshold: float
    transition: float | None

    def to_dict(self, timing: bool = True) -> dict:
        return {
            "p_grid": self.p_grid,
            "n_list": self.n_list,
            "means": self.means.tolist(),
            "threshold": self.threshold,
            "transition": self.transition,
            "rows": [dict(p=p, **_row_dict(r, timing)) for p in self.p_grid for r in self.rows[p]],
        }


def flag_transition(p_grid, last_means, threshold: float):
    """Largest p whose mean at the finest mesh is below the threshold."""
    below = [p for p, m in zip(p_grid, last_means) if m < threshold]
    return max(below) if below else None


def run_phase(cfg: ExperimentConfig, p_grid, hi: float = 1.0, threshold: float | None = None) -> PhaseResult:
    """Bernoulli(p, hi) sweep. Seeds depend on (n, trial) only, so samples are coupled across p."""
    cfg.validate()
    if cfg.domain is None:
        raise ConfigError("phase needs a domain")
    p_grid = sorted(float(p) for p in p_grid)
    if not p_grid:
        raise ConfigError("empty p grid")
    laws = [Bernoulli(p, hi) for p in p_grid]
    threshold = 0.02 * hi if threshold is None else float(threshold)
    means = np.zeros((len(p_grid), len(cfg.n_list)))
    rows = {p: [] for p in p_grid}
    for j, n in enumerate(cfg.n_list):
        lattice = _discretize(cfg.domain, n)
        for i, (p, law) in enumerate(zip(p_grid, laws)):
            recs = run_ordered(lambda k, lat=lattice, law=law: run_trial(lat, law, cfg.seed, k),
                               range(cfg.trials), cfg.threads)
            row = summarize_records(n, recs)
            rows[p].append(row)
            means[i, j] = row.mean
    transition = flag_transition(p_grid, means[:, -1], threshold)
    return PhaseResult(p_grid, list(cfg.n_list), means, rows, threshold, transition)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def summary_csv(rows, timing: bool = True, prefix: dict | None = None) -> str:
    """CSV text with header ``n,mean,std,ci95,trials,seconds``.

    Without timing the seconds column is left empty so that output is
    byte-identical across runs. ``prefix`` maps a leading column name to
    one value per row.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    pre = list(prefix or {})
    w.writerow(pre + SUMMARY_HEADER)
    for i, r in enumerate(rows):
        lead = [_fmt(prefix[k][i]) for k in pre]
        w.writerow(lead + [_fmt(r.n), _fmt(r.mean), _fmt(r.std), _fmt(r.ci95), _fmt(r.trials),
                           _fmt(r.seconds if timing else None)])
    return buf.getvalue()


def phase_csv(result: PhaseResult, timing: bool = True) -> str:
    flat = [(p, r) for p in result.p_grid for r in result.rows[p]]
    return summary_csv([r for _, r in flat], timing, {"p": [p for p, _ in flat]})


def write_text(path, text: str) -> None:
    if path in (None, "-"):
        print(text, end="")
    else:
        Path(path).write_text(text)


def write_json(path, obj) -> None:
    write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")

