"""
Transmit plans and SIC decoding programs for the schemes under study.

A plan is an exact ledger: every symbol carries its subband, a
:class:`~doflab.powers.PowerExpr` power, a rational encoding pre-log and a
precoder recipe. Decoding programs are derived from the plan; noise sets are
filled in automatically from what is on air and not yet known.

Symbol naming follows the transmit blocks: in an odd subband ``k`` user 2
gets ``v{k}_1`` (zero-forced) and ``v{k}_2`` (aligned with user 1's CSIT) and
user 1 gets ``u{k}``; the even subband mirrors this. ``xc{k}`` is a common
message, ``mu1``/``mu2`` (``mu1_i``... for repeated blocks) are pieces of the
overheard-interference sum.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable

from .channel_model import CsitQuality, as_fraction
from .powers import P, ZERO, PowerExpr

__all__ = [
    "Scheme", "Owner", "Precoder", "PostAction",
    "SymbolSpec", "MuGroup", "SchemePlan", "SicStage", "SicProgram",
    "build_zfbf", "build_mat_reuse", "build_hybrid_case_i", "build_hybrid_case_ii",
    "build_hybrid", "build_sc_zf", "build_plan", "sic_program_for",
    "case_ii_length", "nearest_integer_l_points", "plan_to_dict", "plan_to_json",
    "PLAN_SCHEMA_VERSION",
]

PLAN_SCHEMA_VERSION = 1
HALF = Fraction(1, 2)


class Scheme(str, Enum):
    ZFBF = "ZFBF"
    MAT_REUSE = "MAT_REUSE"
    HYBRID_CASE_I = "HYBRID_CASE_I"
    HYBRID_CASE_II = "HYBRID_CASE_II"
    SC_ZF = "SC_ZF"


class Owner(str, Enum):
    USER1 = "user1"
    USER2 = "user2"
    COMMON = "common"
    INTERFERENCE = "interference_piece"

    @property
    def receiver(self) -> int | None:
        return {Owner.USER1: 1, Owner.USER2: 2}.get(self)

    @classmethod
    def user(cls, receiver: int) -> "Owner":
        return {1: cls.USER1, 2: cls.USER2}[receiver]


class Precoder(str, Enum):
    ANTENNA1 = "antenna1"
    ANTENNA2 = "antenna2"
    # unit vector orthogonal to the other user's CSIT in that subband
    ZF = "zf_orth_of_other_user"
    # unit vector along the other user's CSIT, so the other user overhears it
    ALIGNED = "matched_to_other_user_csit"
    # antenna-1 retransmission of CSIT-reconstructed overheard interference
    OVERHEARD_SUM = "overheard_sum"


class PostAction(str, Enum):
    SUBTRACT = "subtract"
    COMBINE_MU = "combine_mu"
    NONE = "none"


@dataclass(frozen=True)
class SymbolSpec:
    id: str
    owner: Owner
    subband: int
    power: PowerExpr
    rate_prelog: Fraction
    precoder: Precoder
    carries: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rate_prelog", as_fraction(self.rate_prelog))
        if not 0 <= self.rate_prelog <= 1:
            raise ValueError(f"{self.id}: pre-log {self.rate_prelog} outside [0, 1]")
        if not self.power.nonnegative_for_p_above_one():
            raise ValueError(f"{self.id}: power {self.power} can be negative")
        if self.power.max_exponent is not None and self.power.max_exponent > 1:
            raise ValueError(f"{self.id}: power {self.power} exceeds P")
        if (self.precoder is Precoder.OVERHEARD_SUM) != bool(self.carries):
            raise ValueError(f"{self.id}: only overheard_sum components carry symbols")
        if self.precoder in (Precoder.ZF, Precoder.ALIGNED) and self.owner.receiver is None:
            raise ValueError(f"{self.id}: {self.precoder.value} needs a private owner")

    @property
    def is_message(self) -> bool:
        """True for independently coded symbols (everything but analog retransmissions)."""
        return self.precoder is not Precoder.OVERHEARD_SUM

    @property
    def intended_receivers(self) -> tuple[int, ...]:
        if not self.is_message:
            return ()
        r = self.owner.receiver
        return (r,) if r is not None else (1, 2)


@dataclass(frozen=True)
class MuGroup:
    """Pieces that rebuild ``mu = v_{k,2} + u_{k+1,2}`` for the block starting at ``odd_subband``."""

    odd_subband: int
    pieces: tuple[str, ...]
    members: tuple[str, str]


@dataclass(frozen=True)
class SchemePlan:
    scheme: Scheme
    quality: CsitQuality
    symbols: tuple[SymbolSpec, ...]
    n_subbands: int
    channel_use_charge: Fraction
    common_owner: Owner | None = None
    L: int = 0
    mu_groups: tuple[MuGroup, ...] = ()
    degenerate: bool = False

    def symbol(self, sid: str) -> SymbolSpec:
        for s in self.symbols:
            if s.id == sid:
                return s
        raise KeyError(sid)

    @property
    def symbol_ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.symbols)

    @property
    def messages(self) -> tuple[SymbolSpec, ...]:
        return tuple(s for s in self.symbols if s.is_message)

    def in_subband(self, k: int) -> tuple[SymbolSpec, ...]:
        return tuple(s for s in self.symbols if s.subband == k)

    def subband_power(self, k: int) -> PowerExpr:
        total = ZERO
        for s in self.in_subband(k):
            total = total + s.power
        return total

    def credited_user(self, s: SymbolSpec) -> Owner | None:
        """User whose DoF the symbol counts towards, if any."""
        if s.owner in (Owner.USER1, Owner.USER2):
            return s.owner
        if s.owner is Owner.COMMON:
            return self.common_owner
        return None

    def prelog_totals(self) -> tuple[Fraction, Fraction]:
        """Sum of encoding pre-logs credited to user 1 and user 2."""
        tot = {Owner.USER1: Fraction(0), Owner.USER2: Fraction(0)}
        for s in self.messages:
            u = self.credited_user(s)
            if u is not None:
                tot[u] += s.rate_prelog
        return tot[Owner.USER1], tot[Owner.USER2]

    def ledger_dof(self) -> tuple[Fraction, Fraction]:
        """Per-user DoF implied by the ledger: pre-log totals over ``S``."""
        if self.channel_use_charge == 0:
            raise ValueError(f"{self.scheme.value} plan is degenerate (no channel use)")
        d1, d2 = self.prelog_totals()
        return d1 / self.channel_use_charge, d2 / self.channel_use_charge


def _charge(symbols: Iterable[SymbolSpec], n_subbands: int) -> Fraction:
    # one channel use per unit of peak power exponent in each subband
    total = Fraction(0)
    for k in range(1, n_subbands + 1):
        power = ZERO
        for s in symbols:
            if s.subband == k:
                power = power + s.power
        if power.max_exponent is not None:
            total += power.max_exponent
    return total


def _finish(scheme, quality, symbols, n_subbands, **kw) -> SchemePlan:
    symbols = tuple(symbols)
    ids = [s.id for s in symbols]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate symbol ids in plan")
    for k in range(1, n_subbands + 1):
        total = ZERO
        for s in symbols:
            if s.subband == k:
                total = total + s.power
        if not (P(1) - total).nonnegative_for_p_above_one():
            raise ValueError(f"subband {k} power {total} exceeds P")
    return SchemePlan(scheme=scheme, quality=quality, symbols=symbols,
                      n_subbands=n_subbands,
                      channel_use_charge=_charge(symbols, n_subbands), **kw)


def _coerce_owner(owner) -> Owner:
    if isinstance(owner, int):
        return Owner.user(owner)
    o = Owner(owner)
    if o.receiver is None:
        raise ValueError("common messages must be owned by user1 or user2")
    return o


def build_zfbf(quality: CsitQuality) -> SchemePlan:
    """Zero-forcing over two subbands; the stronger symbol gets ``P**beta / 2``."""
    a, b = quality.alpha, quality.beta
    syms = [
        SymbolSpec("u1", Owner.USER1, 1, P(a, HALF), a, Precoder.ZF),
        SymbolSpec("v1", Owner.USER2, 1, P(b, HALF), b, Precoder.ZF),
        SymbolSpec("u2", Owner.USER1, 2, P(b, HALF), b, Precoder.ZF),
        SymbolSpec("v2", Owner.USER2, 2, P(a, HALF), a, Precoder.ZF),
    ]
    return _finish(Scheme.ZFBF, quality, syms, 2, degenerate=(b == 0))


def build_mat_reuse(quality: CsitQuality) -> SchemePlan:
    """Three-subband MAT with every transmission backed off to ``P**beta``.

    Subband 3 carries the CSIT reconstruction of the interference each
    user overheard, ``hat(h)_1^H v_1 + hat(g)_2^H u_2``, scaled to ``P**beta``.
    At ``beta = 0`` the plan is empty and flagged degenerate.
    """
    b = quality.beta
    if b == 0:
        return SchemePlan(Scheme.MAT_REUSE, quality, (), 3, Fraction(0), degenerate=True)
    syms = [
        SymbolSpec("v1_1", Owner.USER2, 1, P(b, HALF), b, Precoder.ANTENNA1),
        SymbolSpec("v1_2", Owner.USER2, 1, P(b, HALF), b, Precoder.ANTENNA2),
        SymbolSpec("u2_1", Owner.USER1, 2, P(b, HALF), b, Precoder.ANTENNA1),
        SymbolSpec("u2_2", Owner.USER1, 2, P(b, HALF), b, Precoder.ANTENNA2),
        SymbolSpec("eta3", Owner.INTERFERENCE, 3, P(b), 0, Precoder.OVERHEARD_SUM,
                   carries=("v1_1", "v1_2", "u2_1", "u2_2")),
    ]
    return _finish(Scheme.MAT_REUSE, quality, syms, 3)


def _hybrid_block(quality: CsitQuality, k: int, r_mu: Fraction, with_common: bool,
                  tag: str) -> tuple[list[SymbolSpec], tuple[str, str]]:
    """Symbols of subbands ``k`` (odd) and ``k+1`` of one hybrid block."""
    a, b = quality.alpha, quality.beta
    e = k + 1
    mu_odd, mu_even = f"mu1{tag}", f"mu2{tag}"
    syms: list[SymbolSpec] = []
    for sb, mu in ((k, mu_odd), (e, mu_even)):
        if with_common:
            syms.append(SymbolSpec(f"xc{sb}", Owner.COMMON, sb, P(1) - P(r_mu + b),
                                   1 - r_mu - b, Precoder.ANTENNA1))
        syms.append(SymbolSpec(mu, Owner.INTERFERENCE, sb, P(r_mu + b) - P(b), r_mu,
                               Precoder.ANTENNA1))
        # two symbols for the user whose CSIT is reported here, one for the other
        strong, weak = (Owner.USER2, Owner.USER1) if sb == k else (Owner.USER1, Owner.USER2)
        s, w = ("v", "u") if sb == k else ("u", "v")
        syms += [
            SymbolSpec(f"{s}{sb}_1", strong, sb, P(b, HALF), b, Precoder.ZF),
            SymbolSpec(f"{s}{sb}_2", strong, sb, P(b, HALF) - P(a, HALF), b - a,
                       Precoder.ALIGNED),
            SymbolSpec(f"{w}{sb}", weak, sb, P(a, HALF), a, Precoder.ZF),
        ]
    return syms, (mu_odd, mu_even)


def build_hybrid_case_i(quality: CsitQuality, common_owner=Owner.USER1) -> SchemePlan:
    """Two-subband hybrid block with an even mu split and common messages on top."""
    a, b = quality.alpha, quality.beta
    if b > quality.saturation_beta:
        raise ValueError(
            f"Case I needs beta <= (2+alpha)/3 = {quality.saturation_beta}; got beta={b}: "
            "the mu pieces would need rate above 1-beta")
    owner = _coerce_owner(common_owner)
    r_mu = (b - a) / 2
    syms, pieces = _hybrid_block(quality, 1, r_mu, True, "")
    group = MuGroup(1, pieces, ("v1_2", "u2_2"))
    return _finish(Scheme.HYBRID_CASE_I, quality, syms, 2, common_owner=owner,
                   mu_groups=(group,))


def case_ii_length(quality: CsitQuality) -> Fraction:
    """Block count ``(1-alpha) / (3 beta - alpha - 2)``, exact and possibly fractional."""
    r3 = 3 * quality.beta - quality.alpha - 2
    if r3 <= 0:
        raise ValueError(
            f"Case II needs beta > (2+alpha)/3 = {quality.saturation_beta}; use Case I")
    return (1 - quality.alpha) / r3


def nearest_integer_l_points(quality: CsitQuality) -> list[tuple[int, CsitQuality]]:
    """Integer block counts bracketing ``case_ii_length`` with the matching ``beta``.

    Keeps ``alpha`` fixed and solves ``L = (1-alpha) / (3 beta - alpha - 2)``
    for ``beta`` at the floor and ceiling of the fractional ``L``.
    """
    a = quality.alpha
    Lf = case_ii_length(quality)
    out = []
    for L in sorted({max(1, math.floor(Lf)), max(1, math.ceil(Lf))}):
        beta = ((1 - a) / L + a + 2) / 3
        out.append((L, CsitQuality(a, beta)))
    return out


def build_hybrid_case_ii(quality: CsitQuality) -> SchemePlan:
    """``L`` repeated hybrid blocks plus one subband finishing the third mu pieces."""
    a, b = quality.alpha, quality.beta
    if b == quality.saturation_beta:
        raise ValueError(
            f"beta = (2+alpha)/3 = {b} needs no extra subband; build Case I instead")
    Lf = case_ii_length(quality)
    if Lf.denominator != 1:
        raise ValueError(
            f"Case II needs an integer block count, got L = {Lf} at {quality}; "
            "use the analytic DoF for this point")
    L = int(Lf)
    r_mu = 1 - b
    r3 = 3 * b - a - 2
    last = 2 * L + 1
    syms: list[SymbolSpec] = []
    groups: list[MuGroup] = []
    mu3: list[SymbolSpec] = []
    for i in range(1, L + 1):
        k = 2 * i - 1
        block, (m1, m2) = _hybrid_block(quality, k, r_mu, False, f"_{i}")
        syms += block
        m3 = f"mu3_{i}"
        mu3.append(SymbolSpec(m3, Owner.INTERFERENCE, last,
                              P(1 - (i - 1) * r3) - P(1 - i * r3), r3, Precoder.ANTENNA1))
        groups.append(MuGroup(k, (m1, m2, m3), (f"v{k}_2", f"u{k + 1}_2")))
    syms += mu3
    syms += [
        SymbolSpec(f"u{last}", Owner.USER1, last, P(a, HALF), a, Precoder.ZF),
        SymbolSpec(f"v{last}", Owner.USER2, last, P(a, HALF), a, Precoder.ZF),
    ]
    return _finish(Scheme.HYBRID_CASE_II, quality, syms, last, L=L, mu_groups=tuple(groups))


def build_hybrid(quality: CsitQuality, common_owner=Owner.USER1) -> SchemePlan:
    """Case I below the saturation threshold, Case II above it."""
    if quality.beta <= quality.saturation_beta:
        return build_hybrid_case_i(quality, common_owner)
    return build_hybrid_case_ii(quality)


def build_sc_zf(quality: CsitQuality, common_owner=Owner.USER1) -> SchemePlan:
    """Zero-forcing at ``P**alpha`` with a common message in the remaining power."""
    a = quality.alpha
    owner = _coerce_owner(common_owner)
    syms = []
    for k in (1, 2):
        syms += [
            SymbolSpec(f"xc{k}", Owner.COMMON, k, P(1) - P(a), 1 - a, Precoder.ANTENNA1),
            SymbolSpec(f"u{k}", Owner.USER1, k, P(a, HALF), a, Precoder.ZF),
            SymbolSpec(f"v{k}", Owner.USER2, k, P(a, HALF), a, Precoder.ZF),
        ]
    return _finish(Scheme.SC_ZF, quality, syms, 2, common_owner=owner)


def build_plan(scheme: Scheme | str, quality: CsitQuality, common_owner=Owner.USER1) -> SchemePlan:
    scheme = Scheme(scheme)
    if scheme is Scheme.ZFBF:
        return build_zfbf(quality)
    if scheme is Scheme.MAT_REUSE:
        return build_mat_reuse(quality)
    if scheme is Scheme.HYBRID_CASE_I:
        return build_hybrid_case_i(quality, common_owner)
    if scheme is Scheme.HYBRID_CASE_II:
        return build_hybrid_case_ii(quality)
    return build_sc_zf(quality, common_owner)


# ---------------------------------------------------------------------------
# decoding programs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SicStage:
    """One SIC stage at one receiver.

    ``subbands`` lists the observations used; an empty tuple means the
    symbol is recovered from the rebuilt mu of ``mu_group`` instead of from
    the air. Multi-symbol stages decode in the listed order, each symbol
    treating the later ones as noise as well.
    """

    decode: tuple[str, ...]
    treat_as_noise: tuple[str, ...]
    subbands: tuple[int, ...]
    post_action: PostAction
    mu_group: int | None = None

    @property
    def via_mu(self) -> bool:
        return not self.subbands


@dataclass(frozen=True)
class SicProgram:
    stages: dict = field(default_factory=dict)  # receiver -> tuple[SicStage, ...]

    def for_receiver(self, receiver: int) -> tuple[SicStage, ...]:
        return self.stages[receiver]

    def on_subband(self, receiver: int, subband: int) -> tuple[SicStage, ...]:
        return tuple(st for st in self.stages[receiver] if subband in st.subbands)

    def decode_order(self, receiver: int) -> list[str]:
        return [sid for st in self.stages[receiver] for sid in st.decode]


def _on_air(plan: SchemePlan, subbands: tuple[int, ...]) -> list[str]:
    out: list[str] = []
    for s in plan.symbols:
        if s.subband not in subbands:
            continue
        ids = s.carries if not s.is_message else (s.id,)
        for sid in ids:
            if sid not in out:
                out.append(sid)
    return out


def _assemble(plan: SchemePlan, steps: dict) -> SicProgram:
    stages = {}
    for r, seq in steps.items():
        known: set[str] = set()
        built = []
        for step in seq:
            kind, where, decode = step
            if kind == "mu":
                built.append(SicStage(tuple(decode), (), (), PostAction.SUBTRACT, where))
            else:
                noise = tuple(sid for sid in _on_air(plan, where)
                              if sid not in known and sid not in decode)
                is_piece = all(plan.symbol(d).owner is Owner.INTERFERENCE for d in decode)
                action = PostAction.COMBINE_MU if is_piece else PostAction.SUBTRACT
                built.append(SicStage(tuple(decode), noise, tuple(where), action))
            known.update(decode)
        if built:
            last = built[-1]
            built[-1] = SicStage(last.decode, last.treat_as_noise, last.subbands,
                                 PostAction.NONE, last.mu_group)
        stages[r] = tuple(built)
    return SicProgram(stages)


def _hybrid_steps(plan: SchemePlan) -> dict:
    ids = set(plan.symbol_ids)
    steps = {1: [], 2: []}
    for g in plan.mu_groups:
        k, e = g.odd_subband, g.odd_subband + 1
        for r in (1, 2):
            for sb, piece in ((k, g.pieces[0]), (e, g.pieces[1])):
                if f"xc{sb}" in ids:
                    steps[r].append(("ch", (sb,), (f"xc{sb}",)))
                steps[r].append(("ch", (sb,), (piece,)))
                # overheard aligned symbol, then own weak-side symbol
                if r == 1 and sb == k:
                    steps[r] += [("ch", (k,), (f"v{k}_2",)), ("ch", (k,), (f"u{k}",))]
                if r == 2 and sb == e:
                    steps[r] += [("ch", (e,), (f"u{e}_2",)), ("ch", (e,), (f"v{e}",))]
    if plan.L:
        last = 2 * plan.L + 1
        for r, own in ((1, f"u{last}"), (2, f"v{last}")):
            for g in plan.mu_groups:
                steps[r].append(("ch", (last,), (g.pieces[2],)))
            steps[r].append(("ch", (last,), (own,)))
    for gi, g in enumerate(plan.mu_groups):
        k, e = g.odd_subband, g.odd_subband + 1
        steps[1] += [("mu", gi, (f"u{e}_2",)), ("ch", (e,), (f"u{e}_1",))]
        steps[2] += [("mu", gi, (f"v{k}_2",)), ("ch", (k,), (f"v{k}_1",))]
    return steps


def sic_program_for(plan: SchemePlan) -> SicProgram:
    """Build and validate the per-receiver SIC program of ``plan``."""
    if plan.degenerate and not plan.symbols:
        raise ValueError(f"{plan.scheme.value} plan is degenerate and carries nothing")
    _check_symbol_set(plan)
    sc = plan.scheme
    try:
        if sc is Scheme.ZFBF:
            steps = {1: [("ch", (1,), ("u1",)), ("ch", (2,), ("u2",))],
                     2: [("ch", (1,), ("v1",)), ("ch", (2,), ("v2",))]}
        elif sc is Scheme.SC_ZF:
            steps = {r: [("ch", (k,), (x,)) for k in (1, 2)
                         for x in (f"xc{k}", f"{'u' if r == 1 else 'v'}{k}")]
                     for r in (1, 2)}
        elif sc is Scheme.MAT_REUSE:
            steps = {1: [("ch", (1, 2, 3), ("u2_1", "u2_2"))],
                     2: [("ch", (1, 2, 3), ("v1_1", "v1_2"))]}
        else:
            steps = _hybrid_steps(plan)
        program = _assemble(plan, steps)
    except KeyError as exc:
        raise ValueError(f"{sc.value} plan is missing symbol {exc}") from None
    validate_program(plan, program)
    return program


def _check_symbol_set(plan: SchemePlan) -> None:
    ids = plan.symbol_ids
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate symbol ids")
    try:
        reference = build_plan(plan.scheme, plan.quality, plan.common_owner or Owner.USER1)
    except ValueError as exc:
        raise ValueError(f"{plan.scheme.value} plan is invalid at {plan.quality}: {exc}") from None
    if set(ids) != set(reference.symbol_ids):
        extra = sorted(set(ids) - set(reference.symbol_ids))
        missing = sorted(set(reference.symbol_ids) - set(ids))
        raise ValueError(f"{plan.scheme.value} symbol set mismatch: "
                         f"missing {missing}, unexpected {extra}")
    for s in plan.symbols:
        if not 1 <= s.subband <= plan.n_subbands:
            raise ValueError(f"{s.id}: subband {s.subband} outside 1..{plan.n_subbands}")
        for c in s.carries:
            if c not in ids or not plan.symbol(c).is_message:
                raise ValueError(f"{s.id} carries unknown symbol {c}")
    for g in plan.mu_groups:
        for sid in g.pieces + g.members:
            if sid not in ids:
                raise ValueError(f"mu group at subband {g.odd_subband} names unknown {sid}")


def validate_program(plan: SchemePlan, program: SicProgram) -> None:
    """Check the structural invariants of a SIC program against its plan."""
    for r in (1, 2):
        seen: list[str] = []
        for st in program.for_receiver(r):
            if set(st.decode) & set(st.treat_as_noise):
                raise ValueError(f"receiver {r}: {st.decode} both decoded and noise")
            if set(st.treat_as_noise) & set(seen):
                raise ValueError(f"receiver {r}: noise set reuses decoded symbols")
            if st.via_mu:
                if st.mu_group is None or not 0 <= st.mu_group < len(plan.mu_groups):
                    raise ValueError(f"receiver {r}: mu stage without a valid group")
                g = plan.mu_groups[st.mu_group]
                needed = set(g.pieces) | (set(g.members) - set(st.decode))
                missing = needed - set(seen)
                if missing:
                    raise ValueError(f"receiver {r}: mu recovery before {sorted(missing)}")
            else:
                air = set(_on_air(plan, st.subbands))
                unknown = air - set(seen) - set(st.decode) - set(st.treat_as_noise)
                if unknown:
                    raise ValueError(f"receiver {r}: {sorted(unknown)} neither known nor noise")
                if not set(st.decode) <= air:
                    raise ValueError(f"receiver {r}: decoding {st.decode} not on air")
            seen += list(st.decode)
        for s in plan.messages:
            n = seen.count(s.id)
            if r in s.intended_receivers and n != 1:
                raise ValueError(f"receiver {r} decodes {s.id} {n} times, expected once")


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def plan_to_dict(plan: SchemePlan, program: SicProgram | None = None) -> dict:
    if program is None and plan.symbols:
        program = sic_program_for(plan)
    return {
        "schema_version": PLAN_SCHEMA_VERSION,
        "scheme": plan.scheme.value,
        "alpha": str(plan.quality.alpha),
        "beta": str(plan.quality.beta),
        "n_subbands": plan.n_subbands,
        "channel_use_charge": str(plan.channel_use_charge),
        "common_owner": plan.common_owner.value if plan.common_owner else None,
        "L": plan.L,
        "degenerate": plan.degenerate,
        "symbols": [
            {
                "id": s.id,
                "owner": s.owner.value,
                "subband": s.subband,
                "power": s.power.to_json(),
                "power_text": str(s.power),
                "rate_prelog": str(s.rate_prelog),
                "precoder": s.precoder.value,
                "carries": list(s.carries),
            }
            for s in plan.symbols
        ],
        "mu_groups": [
            {"odd_subband": g.odd_subband, "pieces": list(g.pieces), "members": list(g.members)}
            for g in plan.mu_groups
        ],
        "sic_program": {
            str(r): [
                {
                    "decode": list(st.decode),
                    "treat_as_noise": list(st.treat_as_noise),
                    "subbands": list(st.subbands),
                    "post_action": st.post_action.value,
                    "mu_group": st.mu_group,
                }
                for st in program.for_receiver(r)
            ]
            for r in (1, 2)
        } if program is not None else {},
    }


def plan_to_json(plan: SchemePlan, indent: int | None = 2) -> str:
    return json.dumps(plan_to_dict(plan), indent=indent)
