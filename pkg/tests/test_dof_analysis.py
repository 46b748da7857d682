import csv
import io
import json
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from doflab.channel_model import CsitQuality
from doflab.dof_analysis import (DofPoint, analytic_scheme_dof, contains, corner_points,
                                 hull_csv_text, reconcile, region, region_json_text,
                                 verdicts_csv_text)
from doflab.scheme_builder import Scheme

fr = st.fractions(min_value=0, max_value=1, max_denominator=30)
qualities = st.tuples(fr, fr).map(lambda ab: CsitQuality(min(ab), max(ab)))


def mixed_oracle(a, b):
    # case split instead of min/max
    if b >= (2 + a) / 3:
        return ((2 + a) / 3, (2 + a) / 3)
    return (b, (2 + a - b) / 2)


def test_corner_examples():
    pts = corner_points(CsitQuality(0, 1))
    assert pts[4] == pts[5] == DofPoint(F(2, 3), F(2, 3))
    pts = corner_points(CsitQuality("1/5", "1/2"))
    assert pts[5] == DofPoint(F(17, 20), F(1, 2)) and pts[4] == DofPoint(F(1, 2), F(17, 20))
    pts = corner_points(CsitQuality("2/5", "2/5"))
    assert pts[4] == pts[3] and pts[5] == pts[2]


def test_region_examples():
    assert region(CsitQuality(0, "2/3")).same_set(region(CsitQuality(0, 1)))
    r = region(CsitQuality("1/2", "1/2"))
    assert set(r.hull) == {DofPoint(0, 0), DofPoint(1, 0), DofPoint(0, 1),
                           DofPoint(1, F(1, 2)), DofPoint(F(1, 2), 1)}
    r = region(CsitQuality(0, 1))
    assert set(r.hull) == {DofPoint(0, 0), DofPoint(1, 0), DofPoint(F(2, 3), F(2, 3)),
                           DofPoint(0, 1)}


def test_contains_examples():
    assert contains(region(CsitQuality("1/10", 1)), (F(7, 10), F(7, 10)))
    assert not contains(region(CsitQuality(0, 1)), (1, F(1, 100)))
    assert contains(region(CsitQuality(0, 0)), (0, 0))
    assert not contains(region(CsitQuality(0, 1)), (F(2, 3), F(2, 3) + F(1, 10**9)))
    assert not contains(region(CsitQuality(0, 1)), (-1, 0))


@given(qualities)
def test_corners_match_direct_substitution(q):
    a, b = q.alpha, q.beta
    m = mixed_oracle(a, b)
    expect = {(1, 0), (0, 1), (1, a), (a, 1), m, (m[1], m[0])}
    assert {(p.d1, p.d2) for p in corner_points(q)} == expect


@given(qualities)
def test_corner_symmetry_and_boundary(q):
    r = region(q)
    pts = set(r.corners)
    assert pts == {p.swapped() for p in pts}
    for p in r.corners:
        assert contains(r, p)
    assert contains(r, DofPoint(0, 0))


@given(qualities)
def test_sum_dof_maximizer(q):
    a, b = q.alpha, q.beta
    best = max(p.total for p in corner_points(q))
    expect = 2 * (2 + a) / 3 if b >= (2 + a) / 3 else (2 + a - b) / 2 + b
    assert best == expect == corner_points(q)[4].total


@given(fr, fr, fr)
def test_monotone_nesting(x, y, z):
    a1, a2, b = sorted((x, y, z))
    small, big = region(CsitQuality(a1, b)), region(CsitQuality(a2, b))
    assert all(contains(big, p) for p in small.hull)
    lo, hi = region(CsitQuality(a1, a2)), region(CsitQuality(a1, b))
    assert all(contains(hi, p) for p in lo.hull)


@given(fr, fr)
def test_saturation(a, b):
    a, b = min(a, b), max(a, b)
    q = CsitQuality(a, b)
    if b < q.saturation_beta:
        return
    assert set(corner_points(q)) == set(corner_points(CsitQuality(a, q.saturation_beta)))


def test_analytic_examples():
    d = analytic_scheme_dof("HYBRID_CASE_I", CsitQuality("1/5", "1/2"))
    assert d.point == (F(17, 20), F(1, 2)) and d.channel_use_charge == 2
    d = analytic_scheme_dof("HYBRID_CASE_II", CsitQuality(0, "3/4"))
    assert d.point == (F(2, 3), F(2, 3)) and d.channel_use_charge == 9
    d = analytic_scheme_dof("HYBRID_CASE_II", CsitQuality(0, "4/5"))
    assert d.channel_use_charge == 6
    assert analytic_scheme_dof("SC_ZF", CsitQuality("2/5", 1), "user2").point == (F(2, 5), 1)
    z = analytic_scheme_dof("ZFBF", CsitQuality("1/2", "1/2"))
    assert z.point == (1, 1) and z.channel_use_charge == 1
    assert z.full_power_point == DofPoint(F(1, 2), F(1, 2))
    m = analytic_scheme_dof("MAT_REUSE", CsitQuality(0, "1/2"))
    assert m.point == (F(2, 3), F(2, 3)) and m.full_power_point == DofPoint(F(1, 3), F(1, 3))
    with pytest.raises(ValueError):
        analytic_scheme_dof("HYBRID_CASE_I", CsitQuality(0, 1))
    with pytest.raises(ValueError):
        analytic_scheme_dof("HYBRID_CASE_II", CsitQuality(0, "1/2"))
    with pytest.raises(ValueError):
        analytic_scheme_dof("ZFBF", CsitQuality(0, 0))


@given(qualities)
def test_full_power_points_inside_region(q):
    r = region(q)
    for s in Scheme:
        try:
            d = analytic_scheme_dof(s, q)
        except ValueError:
            continue
        assert contains(r, d.full_power_point), (s, q)


class _Fake:
    def __init__(self, rates, p_db, S=2):
        from doflab.channel_model import SnrPoint
        self.snr = SnrPoint(p_db)
        self.user_rates = rates
        self.scheme = Scheme.ZFBF
        self.quality = CsitQuality(1, 1)
        self.channel_use_charge = S


def test_reconcile_pass_fail_and_errors():
    reps = [_Fake((2 * s.log2_p + 1, s.log2_p), p)
            for p, s in ((30, None), (50, None), (70, None))
            for s in [_Fake((0, 0), p).snr]]
    v = reconcile(reps, (1, F(1, 2)), 0.01)
    assert v.passed and abs(v.residuals[0]) < 1e-9
    assert not reconcile(reps, (0, 0), 0.05).passed
    with pytest.raises(ValueError):
        reconcile(reps[:2], (1, 1), 0.05)
    text = verdicts_csv_text([v])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0][0] == "scheme" and rows[1][-1] == "pass"


def test_region_exports():
    r = region(CsitQuality(0, 1))
    doc = json.loads(region_json_text(r))
    assert doc["schema_version"] == 1 and doc["kind"] == "achievable"
    assert ["2/3", "2/3"] in doc["hull_vertices"]
    assert hull_csv_text(r).splitlines()[0] == "alpha,beta,vertex,d1,d2"
