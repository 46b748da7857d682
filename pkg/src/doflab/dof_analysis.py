"""
Achievable DoF region, analytic scheme DoF and Monte-Carlo reconciliation.

All geometry is done in exact rational arithmetic. The achievable region is
the convex hull of its corner points and the origin (time sharing), so
corner coincidences and saturation are exact identities.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .channel_model import CsitQuality, as_fraction
from .scheme_builder import Owner, Scheme, _coerce_owner, case_ii_length
from .sic_evaluator import RateReport, fit_user_prelogs

__all__ = [
    "DofPoint", "DofRegion", "SchemeDof", "Verdict",
    "corner_points", "region", "contains", "analytic_scheme_dof", "reconcile",
    "region_to_dict", "region_json_text", "hull_csv_text", "verdicts_csv_text", "VERDICT_CSV_COLUMNS",
    "REGION_SCHEMA_VERSION",
]

REGION_SCHEMA_VERSION = 1
VERDICT_CSV_COLUMNS = ("scheme", "alpha", "beta", "target_d1", "target_d2",
                       "fitted_d1", "fitted_d2", "residual_d1", "residual_d2",
                       "tolerance", "passed")


@dataclass(frozen=True, order=True)
class DofPoint:
    d1: Fraction
    d2: Fraction

    def __post_init__(self):
        d1, d2 = as_fraction(self.d1), as_fraction(self.d2)
        object.__setattr__(self, "d1", d1)
        object.__setattr__(self, "d2", d2)
        if not (0 <= d1 <= 1 and 0 <= d2 <= 1):
            raise ValueError(f"DoF point ({d1}, {d2}) outside the unit square")

    def swapped(self) -> "DofPoint":
        return DofPoint(self.d2, self.d1)

    @property
    def total(self) -> Fraction:
        return self.d1 + self.d2

    def __str__(self):
        return f"({self.d1}, {self.d2})"


def corner_points(quality: CsitQuality) -> list[DofPoint]:
    """The six corner points of the achievable region (some may coincide)."""
    a, b = quality.alpha, quality.beta
    t = (2 + a) / 3
    mixed = DofPoint(min(t, b), max(t, (2 - b + a) / 2))
    return [DofPoint(1, 0), DofPoint(0, 1), DofPoint(1, a), DofPoint(a, 1),
            mixed, mixed.swapped()]


def _cross(o: DofPoint, a: DofPoint, b: DofPoint) -> Fraction:
    return (a.d1 - o.d1) * (b.d2 - o.d2) - (a.d2 - o.d2) * (b.d1 - o.d1)


def _hull(points: Sequence[DofPoint]) -> tuple[DofPoint, ...]:
    # Andrew's monotone chain, counter-clockwise, collinear points dropped
    pts = sorted(set(points))
    if len(pts) <= 2:
        return tuple(pts)
    lower: list[DofPoint] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[DofPoint] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return tuple(lower[:-1] + upper[:-1])


@dataclass(frozen=True)
class DofRegion:
    """Achievable DoF region: corners and the counter-clockwise hull with the origin."""

    quality: CsitQuality
    corners: tuple[DofPoint, ...]
    hull: tuple[DofPoint, ...]

    def contains(self, point: DofPoint) -> bool:
        return contains(self, point)

    def same_set(self, other: "DofRegion") -> bool:
        return set(self.hull) == set(other.hull)


def region(quality: CsitQuality) -> DofRegion:
    corners = tuple(corner_points(quality))
    return DofRegion(quality, corners, _hull(corners + (DofPoint(0, 0),)))


def contains(reg: DofRegion, point: DofPoint | tuple) -> bool:
    """Exact boundary-inclusive point-in-convex-polygon test."""
    if not isinstance(point, DofPoint):
        d1, d2 = (as_fraction(x) for x in point)
        if not (0 <= d1 <= 1 and 0 <= d2 <= 1):
            return False
        point = DofPoint(d1, d2)
    h = reg.hull
    n = len(h)
    return all(_cross(h[i], h[(i + 1) % n], point) >= 0 for i in range(n))


@dataclass(frozen=True)
class SchemeDof:
    """Closed-form DoF of a scheme.

    ``point`` is normalized by the scheme's own channel-use charge ``S``.
    ``full_power_point`` divides the same pre-logs by the number of subbands
    instead, i.e. charges every subband a full channel use; it is the
    normalization under which points of different schemes are comparable
    with the region. The two coincide for schemes that transmit at full power.
    """

    scheme: Scheme
    quality: CsitQuality
    point: tuple[Fraction, Fraction]
    channel_use_charge: Fraction
    n_subbands: Fraction
    full_power_point: DofPoint


def analytic_scheme_dof(scheme: Scheme | str, quality: CsitQuality,
                        common_owner=Owner.USER1) -> SchemeDof:
    """Closed-form per-user DoF of ``scheme`` at ``quality``.

    Case II uses the real-valued block count, so non-integer ``L`` is fine
    here even though no plan exists for it.
    """
    scheme = Scheme(scheme)
    a, b = quality.alpha, quality.beta
    if scheme is Scheme.ZFBF:
        if b == 0:
            raise ValueError("ZFBF at beta=0 transmits nothing")
        d = (a + b) / (2 * b)
        return SchemeDof(scheme, quality, (d, d), 2 * b, Fraction(2),
                         DofPoint((a + b) / 2, (a + b) / 2))
    if scheme is Scheme.MAT_REUSE:
        if b == 0:
            raise ValueError("MAT_REUSE at beta=0 transmits nothing")
        d = Fraction(2, 3)
        return SchemeDof(scheme, quality, (d, d), 3 * b, Fraction(3),
                         DofPoint(2 * b / 3, 2 * b / 3))
    if scheme is Scheme.HYBRID_CASE_I:
        if b > quality.saturation_beta:
            raise ValueError(f"Case I needs beta <= {quality.saturation_beta}, got {b}")
        pt = DofPoint((2 + a - b) / 2, b)
        if _coerce_owner(common_owner) is Owner.USER2:
            pt = pt.swapped()
        return SchemeDof(scheme, quality, (pt.d1, pt.d2), Fraction(2), Fraction(2), pt)
    if scheme is Scheme.HYBRID_CASE_II:
        if b == quality.saturation_beta:
            raise ValueError("beta = (2+alpha)/3 belongs to Case I")
        L = case_ii_length(quality)
        d = (2 + a) / 3
        return SchemeDof(scheme, quality, (d, d), 2 * L + 1, 2 * L + 1, DofPoint(d, d))
    pt = DofPoint(1, a)
    if _coerce_owner(common_owner) is Owner.USER2:
        pt = pt.swapped()
    return SchemeDof(scheme, quality, (pt.d1, pt.d2), Fraction(2), Fraction(2), pt)


@dataclass(frozen=True)
class Verdict:
    scheme: Scheme
    quality: CsitQuality
    target: tuple[float, float]
    fitted: tuple[float, float]
    tolerance: float

    @property
    def residuals(self) -> tuple[float, float]:
        return (self.fitted[0] - self.target[0], self.fitted[1] - self.target[1])

    @property
    def passed(self) -> bool:
        return all(abs(r) <= self.tolerance for r in self.residuals)

    def csv_row(self) -> list[str]:
        return [self.scheme.value, str(self.quality.alpha), str(self.quality.beta),
                repr(self.target[0]), repr(self.target[1]),
                repr(self.fitted[0]), repr(self.fitted[1]),
                repr(self.residuals[0]), repr(self.residuals[1]),
                repr(self.tolerance), "pass" if self.passed else "fail"]


def reconcile(reports: Sequence[RateReport], analytic, tolerance: float) -> Verdict:
    """Fit per-user pre-logs over the SNR sweep, divide by ``S`` and compare.

    ``analytic`` may be a :class:`SchemeDof`, a :class:`DofPoint` or a pair.
    """
    if len(reports) < 3:
        raise ValueError(f"reconcile needs at least 3 SNR points, got {len(reports)}")
    first = reports[0]
    for r in reports[1:]:
        if (r.scheme, r.quality, r.channel_use_charge) != (first.scheme, first.quality,
                                                           first.channel_use_charge):
            raise ValueError("reports come from different plans")
    if isinstance(analytic, SchemeDof):
        target = analytic.point
    elif isinstance(analytic, DofPoint):
        target = (analytic.d1, analytic.d2)
    else:
        target = tuple(analytic)
    s1, s2 = fit_user_prelogs(reports)
    S = first.channel_use_charge
    return Verdict(first.scheme, first.quality, (float(target[0]), float(target[1])),
                   (s1 / S, s2 / S), float(tolerance))


def region_to_dict(reg: DofRegion) -> dict:
    pair = lambda p: [str(p.d1), str(p.d2)]  # noqa: E731
    return {
        "schema_version": REGION_SCHEMA_VERSION,
        "kind": "achievable",
        "alpha": str(reg.quality.alpha),
        "beta": str(reg.quality.beta),
        "corners": [pair(p) for p in reg.corners],
        "hull_vertices": [pair(p) for p in reg.hull],
    }


def region_json_text(reg: DofRegion) -> str:
    return json.dumps(region_to_dict(reg), indent=2)


def hull_csv_text(reg: DofRegion) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("alpha", "beta", "vertex", "d1", "d2"))
    for i, p in enumerate(reg.hull):
        w.writerow((str(reg.quality.alpha), str(reg.quality.beta), i, str(p.d1), str(p.d2)))
    return buf.getvalue()


def verdicts_csv_text(verdicts: Sequence[Verdict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(VERDICT_CSV_COLUMNS)
    for v in verdicts:
        w.writerow(v.csv_row())
    return buf.getvalue()
