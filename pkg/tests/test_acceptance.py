"""Acceptance criteria 1-10, each at its stated tolerance.

Master seeds are fixed constants chosen before any run.
"""
import itertools
import math
import time

import numpy as np
import pytest

from percoflow.capacity import Bernoulli, Constant, DiscreteTable, Exponential, Uniform, sample
from percoflow.config import l_shape, unit_square
from percoflow.continuum import ConstantNu, L1Nu, PolyhedralCut, TableNu, flat_cut_bound, i_omega, is_separating
from percoflow.cylinder import estimate_nu
from percoflow.errors import MeshTooCoarse
from percoflow.flow import check_stream, cut_capacity, max_flow, min_cut_is_cutset
from percoflow.geometry import BoundaryPatch, ConvexPolytope, Domain
from percoflow.harness import ExperimentConfig, derive_seed, run_converge, run_phase
from percoflow.lattice import SignedPermutation, discretize

from oracles import bipartition_min_cut

SEED_DUALITY = 1001
SEED_BRUTE = 2002
SEED_NU_CONST = 5005
SEED_PHASE = 2026
SEED_SANDWICH = 7007
SEED_SANDWICH_NU = 7008
SEED_CONVEX = 8000
SEED_CAUCHY = 9009
SEED_CUTS = 1010


def _random_instances():
    square = unit_square()
    lats = {n: discretize(square, n) for n in (2, 4, 8)}
    laws = [Bernoulli(0.5, 1.0), Uniform(0, 1), Exponential(1.0)]
    for i in range(500):
        n = (2, 4, 8)[i % 3]
        law = laws[(i // 3) % 3]
        lat = lats[n]
        yield lat, sample(law, lat, derive_seed(SEED_DUALITY, n, i))


def _tiny_lattices():
    """Lattices with at most 12 edges from small boxes and the L-shape."""
    sides = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
    doms = []
    for a, b in itertools.product(sides, sides):
        box = ConvexPolytope.box([0, 0], [a, b])
        doms.append(Domain([box], [BoundaryPatch(0, 0)], [BoundaryPatch(0, 2)]))
        doms.append(Domain([box], [BoundaryPatch(0, 1)], [BoundaryPatch(0, 3)]))
    doms.append(l_shape())
    cube = ConvexPolytope.box([0, 0, 0], [1, 1, 1])
    for f in range(3):
        doms.append(Domain([cube], [BoundaryPatch(0, f)], [BoundaryPatch(0, f + 3)]))
    out = []
    for dom in doms:
        for n in (1, 2, 3):
            try:
                lat = discretize(dom, n)
            except MeshTooCoarse:
                continue
            if lat.n_edges <= 12:
                out.append(lat)
    return out


TINY_LAWS = [Constant(1), Bernoulli(0.5, 1), Uniform(0, 1), Exponential(1), DiscreteTable((0, 1, 2), (0.3, 0.4, 0.3))]


def test_c1_duality_exactness(criterion):
    t0 = time.perf_counter()
    bad = 0
    for lat, caps in _random_instances():
        res = max_flow(lat, caps, lat.gamma1, lat.gamma2)
        ok = res.value == cut_capacity(res.cut.edges, caps) and min_cut_is_cutset(lat, res.cut, lat.gamma1, lat.gamma2)
        bad += not ok
    elapsed = time.perf_counter() - t0
    ok = bad == 0 and elapsed < 60
    criterion(1, ok, f"500 instances, {bad} mismatches, {elapsed:.1f}s (limit 60s)")
    assert ok


def test_c2_brute_force_equivalence(criterion):
    lats = _tiny_lattices()
    total = agree = 0
    for j, lat in enumerate(lats):
        for k, law in enumerate(TINY_LAWS):
            for trial in range(4):
                caps = sample(law, lat, derive_seed(SEED_BRUTE, 1000 * j + k, trial))
                got = max_flow(lat, caps, lat.gamma1, lat.gamma2).value
                want = bipartition_min_cut(lat.n_vertices, lat.edges, caps.values, lat.gamma1, lat.gamma2)
                total += 1
                agree += got == want
    ok = total > 0 and agree == total and len(lats) >= 10
    criterion(2, ok, f"{len(lats)} lattices (<=12 edges), {agree}/{total} agree with exhaustive bipartition")
    assert ok


def test_c3_stream_certification(criterion):
    checked = bad = 0
    instances = list(_random_instances())
    for lat in _tiny_lattices():
        for k, law in enumerate(TINY_LAWS):
            instances.append((lat, sample(law, lat, derive_seed(SEED_BRUTE, 77, k))))
    for lat, caps in instances:
        for method in ("push_relabel", "dinic"):
            res = max_flow(lat, caps, lat.gamma1, lat.gamma2, method=method)
            chk = check_stream(lat, caps, lat.gamma1, lat.gamma2, res.stream)
            checked += 1
            bad += not (chk.valid and not chk.violations and chk.flow == res.value)
    ok = bad == 0
    criterion(3, ok, f"{checked} solver outputs certified, {bad} with violations or flow != value")
    assert ok


def test_c4_deterministic_lln(criterion):
    ns = [2, 4, 8, 16, 32]
    rows = run_converge(ExperimentConfig(unit_square(), Constant(1), ns, trials=1)).rows
    exact = all(r.mean == (r.n + 1) / r.n and r.std == 0 for r in rows)
    bound = flat_cut_bound(unit_square(), ConstantNu(1), (1, 0)).value
    gaps = [r.mean - bound for r in rows]
    ok = exact and bound == pytest.approx(1.0, abs=1e-12) and all(g == pytest.approx(1 / n) for g, n in zip(gaps, ns))
    criterion(4, ok, f"phi_n/n = (n+1)/n exactly for n={ns}; flat cut bound {bound:.12g}")
    assert ok


def test_c5_nu_constant(criterion):
    est = estimate_nu((0, 1), Constant(1), base_size=4, n_list=(4, 8, 16, 32), trials=50, seed=SEED_NU_CONST)
    errs = [abs(m - 1) for m in est.estimates]
    ok = all(e <= 2 / n for e, n in zip(errs, est.n_values)) and all(s == 0 for s in est.stds)
    detail = ", ".join(f"n={n}: {m:.6f}" for n, m in zip(est.n_values, est.estimates))
    criterion(5, ok, f"{detail}; stds {est.stds}")
    assert ok


def test_c6_phase_bracketing(criterion):
    grid = [0.30, 0.40, 0.45, 0.50, 0.55, 0.60, 0.70]
    cfg = ExperimentConfig(unit_square(), None, [8, 16, 32], trials=100, seed=SEED_PHASE, kind="phase")
    res = run_phase(cfg, grid, hi=1.0)
    last = dict(zip(grid, res.means[:, -1]))
    ok = last[0.30] < 0.03 and last[0.70] > 0.15 and res.transition is not None and 0.45 <= res.transition <= 0.60
    criterion(6, ok, f"mean(0.30)={last[0.30]:.4f} mean(0.70)={last[0.70]:.4f} transition={res.transition}")
    assert ok


def test_c7_sandwich(criterion):
    row = run_converge(ExperimentConfig(unit_square(), Exponential(1), [32], trials=200, seed=SEED_SANDWICH)).rows[0]
    est = estimate_nu((1, 0), Exponential(1), base_size=4, n_list=(32,), trials=200, seed=SEED_SANDWICH_NU)
    nu_hat = TableNu([est.direction], [est.point])
    fc = flat_cut_bound(unit_square(), nu_hat, (1, 0))
    # the flat cut has unit length, so its CI is that of nu_hat
    pooled = math.hypot(row.ci95, est.point_ci * 1.0)
    rhs = fc.value + 3 * pooled + 10 / 32
    ok = row.mean <= rhs
    criterion(7, ok, f"mean={row.mean:.4f} <= bound {fc.value:.4f} + 3*{pooled:.4f} + 10/32 = {rhs:.4f}")
    assert ok


def test_c8_convexity_symmetry(criterion):
    angles = [0, math.pi / 8, math.pi / 4, 3 * math.pi / 8, math.pi / 2]
    law = Uniform(0, 1)
    cache = {}

    def nu_at(w):
        key = tuple(np.round(w, 9) + 0.0)
        if key not in cache:
            e = estimate_nu(w, law, base_size=4, n_list=(16,), trials=100, seed=SEED_CONVEX + len(cache))
            cache[key] = (e.point, e.point_ci, e.point_se)
        return cache[key]

    worst_sym = 0.0
    sym_ok = True
    for a in angles:
        v = np.array([math.cos(a), math.sin(a)])
        m, c, _ = nu_at(v)
        for sym in SignedPermutation.all(2):
            m2, c2, _ = nu_at(sym.apply(v))
            gap = abs(m - m2) - (c + c2)
            worst_sym = max(worst_sym, abs(m - m2))
            sym_ok &= gap <= 0
    # midpoint convexity of the homogeneous extension over the sampled circle
    worst = -np.inf
    conv_ok = True
    triples = 0
    for i in range(16):
        for step in (1, 2, 3):
            a, b = i * math.pi / 8, (i + 2 * step) * math.pi / 8
            u = np.array([math.cos(a), math.sin(a)])
            w = np.array([math.cos(b), math.sin(b)])
            s = u + w
            r = np.linalg.norm(s)
            mu, _, su = nu_at(u)
            mw, _, sw = nu_at(w)
            ms, _, ss = nu_at(s / r)
            excess = r * ms - mu - mw
            pooled = math.sqrt((r * ss) ** 2 + su ** 2 + sw ** 2)
            worst = max(worst, excess / pooled)
            conv_ok &= excess <= 3 * pooled
            triples += 1
    ok = sym_ok and conv_ok
    criterion(8, ok, f"{len(cache)} directions; symmetry CIs overlap={sym_ok} (max gap {worst_sym:.4f}); "
                     f"{triples} triples, worst convexity excess {worst:.2f} pooled SE (limit 3)")
    assert ok


def test_c9_cauchy_trend(criterion):
    rows = run_converge(ExperimentConfig(unit_square(), Exponential(1), [8, 16, 32], trials=200,
                                         seed=SEED_CAUCHY)).rows
    m8, m16, m32 = (r.mean for r in rows)
    pooled = math.sqrt(rows[1].ci95 ** 2 + rows[2].ci95 ** 2)
    ok = abs(m32 - m16) < abs(m16 - m8) + 2 * pooled
    criterion(9, ok, f"|m32-m16|={abs(m32 - m16):.4f} < |m16-m8|={abs(m16 - m8):.4f} + 2*{pooled:.4f}")
    assert ok


def _cut_for(rng, domain, left, right):
    while True:
        th = rng.uniform(-1.2, 1.2) if rng.random() < 0.8 else 0.0
        n = np.array([math.cos(th), math.sin(th)])
        lo = max(n @ p for p in left)
        hi = min(n @ p for p in right)
        if hi - lo > 1e-3:
            P = PolyhedralCut.halfspace(n, rng.uniform(lo + 1e-4, hi - 1e-4))
            if is_separating(P, domain):
                try:
                    i_omega(P, domain, ConstantNu(1))
                except Exception:
                    continue
                return P


def test_c10_continuum_evaluator(criterion):
    rng = np.random.default_rng(SEED_CUTS)
    table = TableNu([[1, 0], [1, 1]], [0.7, 0.9])
    nus = [ConstantNu(1), L1Nu(1), table]
    worst = 0.0
    count = 0
    for domain, right in ((unit_square(), ([1, 0], [1, 1])), (l_shape(), ([2, 0], [2, 0.5]))):
        for _ in range(50):
            P = _cut_for(rng, domain, ([0, 0], [0, 1]), right)
            splits = [(rng.normal(size=2), rng.uniform(-0.5, 2.0)) for _ in range(rng.integers(1, 5))]
            for nu in nus:
                a = i_omega(P, domain, nu).value
                b = i_omega(P, domain, nu, splits=splits).value
                worst = max(worst, abs(a - b))
            count += 1
    inv_ok = worst <= 1e-9
    lshape_ok = True
    for nu in nus:
        fc = flat_cut_bound(l_shape(), nu, (1, 0))
        lshape_ok &= 1 < fc.offset < 2 and abs(fc.value - 0.5 * nu((1, 0))) <= 1e-9
    ok = inv_ok and lshape_ok
    criterion(10, ok, f"{count} random cuts, max re-triangulation gap {worst:.2e} (tol 1e-9); "
                      f"L-shape flat cut = nu(1,0)/2 at offset in (1,2): {lshape_ok}")
    assert ok
