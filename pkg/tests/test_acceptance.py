"""
Acceptance suite: ten criteria, each printing one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the lines are also
collected into the terminal summary.
"""

import random
import time
from fractions import Fraction as F

import numpy as np
import pytest

from conftest import ACCEPTANCE_KEY
from doflab.channel_model import CsitQuality, SnrPoint, leakage_moment
from doflab.cli import main
from doflab.dof_analysis import analytic_scheme_dof, contains, corner_points, reconcile, region
from doflab.powers import P
from doflab.scheme_builder import (Scheme, build_hybrid_case_i, build_hybrid_case_ii,
                                   build_sc_zf)
from doflab.sic_evaluator import evaluate_plan, evaluate_sweep

SWEEP = [SnrPoint(p) for p in (50, 65, 80)]


@pytest.fixture
def record(request):
    def _record(n, ok, detail):
        line = f"ACCEPTANCE {n:>2} {'PASS' if ok else 'FAIL'}: {detail}"
        print(line)
        request.config.stash[ACCEPTANCE_KEY].append(line)
        assert ok, line
    return _record


def rational_grid(n, seed):
    rng = random.Random(seed)
    out = [CsitQuality(0, 0), CsitQuality(0, 1), CsitQuality(1, 1), CsitQuality("1/5", "1/2")]
    while len(out) < n:
        x = F(rng.randint(0, 24), 24)
        y = F(rng.randint(0, 30), 30)
        q = CsitQuality(min(x, y), max(x, y))
        if q not in out:
            out.append(q)
    return out


def eq5_by_hand(a, b):
    # each corner written out separately, mixed point by cases
    if b >= (2 + a) / 3:
        c = ((2 + a) / 3, (2 + a) / 3)
    else:
        c = (b, (2 - b + a) / 2)
    return {(F(1), F(0)), (F(0), F(1)), (F(1), a), (a, F(1)), c, (c[1], c[0])}


def test_01_exact_region_oracle(record):
    t0 = time.perf_counter()
    grid = rational_grid(50, 1)
    bad = [q for q in grid
           if {(p.d1, p.d2) for p in corner_points(q)} != eq5_by_hand(q.alpha, q.beta)]
    dt = time.perf_counter() - t0
    record(1, not bad and dt < 1, f"{len(grid)} grid points, {len(bad)} mismatches, {dt:.3f}s")


def test_02_saturation_identity(record):
    t0 = time.perf_counter()
    checked, bad = 0, []
    for a in (F(0), F(1, 4), F(1, 2), F(3, 4)):
        sat = (2 + a) / 3
        ref = set(corner_points(CsitQuality(a, sat)))
        ref_hull = set(region(CsitQuality(a, sat)).hull)
        betas = [sat + (1 - sat) * F(k, 12) for k in range(13)]
        for b in betas:
            q = CsitQuality(a, b)
            checked += 1
            if set(corner_points(q)) != ref or set(region(q).hull) != ref_hull:
                bad.append(q)
    dt = time.perf_counter() - t0
    record(2, not bad and dt < 1, f"{checked} beta >= (2+alpha)/3 points, {len(bad)} differ, {dt:.3f}s")


def test_03_ledger_identities(record):
    t0 = time.perf_counter()
    rng = random.Random(3)
    failures = []
    n_case_i = 0
    while n_case_i < 100:
        a = F(rng.randint(0, 60), 60)
        b = F(rng.randint(0, 60), 60)
        if not a <= b <= (2 + a) / 3:
            continue
        n_case_i += 1
        plan = build_hybrid_case_i(CsitQuality(a, b))
        if any(plan.subband_power(k) != P(1) for k in (1, 2)):
            failures.append(("power", a, b))
        d1, d2 = plan.prelog_totals()
        if (d1, d2) != ((2 + a - b) / 2 * 2, 2 * b):
            failures.append(("prelog", a, b))
    n_case_ii = 0
    for a in (F(0), F(1, 10), F(1, 4), F(1, 3), F(1, 2), F(2, 3)):
        for L in range(1, 7):
            b = ((1 - a) / L + a + 2) / 3
            plan = build_hybrid_case_ii(CsitQuality(a, b))
            n_case_ii += 1
            target = (2 * L + 1) * (2 + a) / 3
            if plan.prelog_totals() != (target, target):
                failures.append(("case ii", a, b))
            if any(plan.subband_power(k) != P(1) for k in range(1, 2 * L + 2)):
                failures.append(("case ii power", a, b))
    dt = time.perf_counter() - t0
    record(3, not failures and dt < 1,
           f"{n_case_i} Case I + {n_case_ii} Case II plans, {len(failures)} failures, {dt:.3f}s")


def test_04_csit_scaling_law(record):
    t0 = time.perf_counter()
    slopes = {}
    snrs = [SnrPoint(p) for p in (40, 60, 80)]
    for beta in (0, F(1, 2), 1):
        q = CsitQuality(0, beta)
        y = [np.log2(leakage_moment(q, s, 100_000, "beta_side", rng_seed=4)) for s in snrs]
        slopes[beta] = float(np.polyfit([s.log2_p for s in snrs], y, 1)[0])
    dt = time.perf_counter() - t0
    ok = all(abs(slopes[b] + float(b)) <= 0.05 for b in slopes) and dt < 60
    detail = ", ".join(f"beta={b}: {s:+.4f}" for b, s in slopes.items())
    record(4, ok, f"slopes {detail}, {dt:.1f}s")


def test_05_case_i_prelogs(record):
    t0 = time.perf_counter()
    q = CsitQuality("0.2", "0.5")
    reps = evaluate_sweep(build_hybrid_case_i(q, "user1"), q, SWEEP, 10_000, rng_seed=2024)
    v = reconcile(reps, (F(85, 100), F(1, 2)), 0.05)
    dt = time.perf_counter() - t0
    record(5, v.passed and dt < 300,
           f"fitted ({v.fitted[0]:.4f}, {v.fitted[1]:.4f}) vs (0.85, 0.5), {dt:.1f}s")


def test_06_case_ii_prelogs(record):
    t0 = time.perf_counter()
    q = CsitQuality(0, "0.75")
    plan = build_hybrid_case_ii(q)
    reps = evaluate_sweep(plan, q, SWEEP, 10_000, rng_seed=2024)
    v = reconcile(reps, (F(2, 3), F(2, 3)), 0.05)
    dt = time.perf_counter() - t0
    record(6, v.passed and plan.L == 4 and dt < 600,
           f"L={plan.L}, fitted ({v.fitted[0]:.4f}, {v.fitted[1]:.4f}) vs (2/3, 2/3), {dt:.1f}s")


def test_07_degeneracy_oracle(record):
    t0 = time.perf_counter()
    worst = 0.0
    ok = True
    for q in (CsitQuality("0.3", "0.3"), CsitQuality("0.6", "0.6")):
        for snr in SWEEP:
            a = evaluate_plan(build_hybrid_case_i(q), q, snr, 10_000, rng_seed=7)
            # at alpha = beta the zero-forcing pair plus common message is the SC_ZF plan
            b = evaluate_plan(build_sc_zf(q), q, snr, 10_000, rng_seed=7)
            for i in (0, 1):
                se = np.hypot(a.user_stderr[i], b.user_stderr[i])
                gap = abs(a.user_rates[i] - b.user_rates[i])
                worst = max(worst, gap / se if se > 0 else (0.0 if gap == 0 else np.inf))
                ok &= gap <= 2 * se or gap == 0
    dt = time.perf_counter() - t0
    record(7, ok and dt < 300, f"largest gap {worst:.3f} standard errors (limit 2), {dt:.1f}s")


def test_08_schemes_inside_region(record):
    t0 = time.perf_counter()
    grid = rational_grid(30, 8)
    checked, outside = 0, []
    for q in grid:
        reg = region(q)
        for s in Scheme:
            for owner in ("user1", "user2"):
                try:
                    d = analytic_scheme_dof(s, q, owner)
                except ValueError:
                    continue
                checked += 1
                if not contains(reg, d.full_power_point):
                    outside.append((s.value, q))
    dt = time.perf_counter() - t0
    record(8, not outside and dt < 1,
           f"{checked} scheme points on {len(grid)} qualities, {len(outside)} outside, {dt:.3f}s")


def test_09_sc_zf_endpoints(record):
    t0 = time.perf_counter()
    fitted = {}
    ok = True
    for a in ("0", "0.5"):
        q = CsitQuality(a, "0.5")
        reps = evaluate_sweep(build_sc_zf(q, "user1"), q, SWEEP, 10_000, rng_seed=9)
        v = reconcile(reps, (1, q.alpha), 0.05)
        fitted[a] = v.fitted
        ok &= v.passed
    dt = time.perf_counter() - t0
    detail = ", ".join(f"alpha={a}: ({f[0]:.4f}, {f[1]:.4f})" for a, f in fitted.items())
    record(9, ok and dt < 300, f"{detail}, {dt:.1f}s")


def test_10_determinism(record, tmp_path, monkeypatch):
    monkeypatch.delenv("DOFLAB_THREADS", raising=False)
    t0 = time.perf_counter()
    args = ["simulate", "--alpha", "1/5", "--beta", "1/2", "--scheme", "HYBRID,ZFBF",
            "--trials", "5000", "--seed", "123"]
    codes = [main(args + ["--out-dir", str(tmp_path / d), "--workers", w])
             for d, w in (("a", "1"), ("b", "1"), ("c", "4"))]
    blobs = [(tmp_path / d / "rates.csv").read_bytes() for d in "abc"]
    dt = time.perf_counter() - t0
    same = blobs[0] == blobs[1] == blobs[2]
    record(10, codes == [0, 0, 0] and same and dt < 60,
           f"two runs and 1 vs 4 workers byte-identical: {same}, {len(blobs[0])} bytes, {dt:.1f}s")
