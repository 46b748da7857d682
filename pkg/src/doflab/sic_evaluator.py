"""
Monte-Carlo evaluation of plans through their SIC programs.

Every receiver walks its program draw by draw. A stage observes one or more
subbands; the decoded symbol sees the true-channel image of every symbol in
the stage's noise set (including the leakage left by zero-forcing on
imperfect CSIT) plus unit noise, and earns the Gaussian-input rate
``log2(1 + SINR)``. Multi-subband stages use the MMSE SINR.

Codewords span many independent channel draws, so decodability is judged on
ergodic rates: each symbol is coded at the smallest of its encoding rate
``prelog * log2(P)`` and the mean stage rate at every receiver that decodes
it from the air. Decoding at that rate succeeds everywhere it is attempted,
so subtraction in later stages is exact. A symbol carried inside mu is also
capped by the total rate of the mu pieces of its block.

Trials are processed in fixed-size chunks whose seeds derive from the master
seed and the chunk index. Chunks may run on several threads; partial sums
are reduced in chunk order, so results do not depend on the worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .channel_model import (ChannelBatch, CsitQuality, SnrPoint, draw_channels,
                            inner, orth_complement)
from .scheme_builder import (Owner, Precoder, Scheme, SchemePlan, SicProgram,
                             case_ii_length, sic_program_for)

__all__ = [
    "StageSinr", "stage_rate", "SymbolRate", "RateReport",
    "receive_amplitudes", "stage_rates_per_draw", "evaluate_plan", "evaluate_sweep",
    "decode_success_rate", "fit_user_prelogs", "resolve_workers",
    "RATE_CSV_COLUMNS", "REPORT_SCHEMA_VERSION", "CHUNK_TRIALS",
]

CHUNK_TRIALS = 2048
REPORT_SCHEMA_VERSION = 1
RATE_CSV_COLUMNS = ("scheme", "alpha", "beta", "snr_db", "symbol", "receiver",
                    "mean_rate", "stderr")


@dataclass(frozen=True)
class StageSinr:
    signal_power: np.ndarray | float
    interference_power: np.ndarray | float
    noise_power: float = 1.0


def stage_rate(sinr: StageSinr) -> np.ndarray | float:
    """Gaussian-input rate ``log2(1 + S / (N + I))`` in bits per complex symbol."""
    return np.log2(1.0 + np.asarray(sinr.signal_power)
                   / (sinr.noise_power + np.asarray(sinr.interference_power)))


def resolve_workers(requested: int | None = None) -> int:
    """Worker count: requested (or CPU count), capped by ``DOFLAB_THREADS``."""
    n = requested if requested is not None else (os.cpu_count() or 1)
    cap = os.environ.get("DOFLAB_THREADS")
    if cap:
        try:
            n = min(n, int(cap))
        except ValueError:
            raise ValueError(f"DOFLAB_THREADS must be an integer, got {cap!r}") from None
    return max(1, n)


# ---------------------------------------------------------------------------
# per-draw physics
# ---------------------------------------------------------------------------

def _csit(batch: ChannelBatch, user: Owner, k: int) -> np.ndarray:
    return (batch.h_hat if user is Owner.USER1 else batch.g_hat)[:, k - 1]


def _other(owner: Owner) -> Owner:
    return Owner.USER2 if owner is Owner.USER1 else Owner.USER1


def _beam(plan: SchemePlan, sid: str, batch: ChannelBatch) -> np.ndarray:
    s = plan.symbol(sid)
    n = batch.n_trials
    if s.precoder is Precoder.ANTENNA1:
        return np.broadcast_to(np.array([1.0 + 0j, 0.0]), (n, 2))
    if s.precoder is Precoder.ANTENNA2:
        return np.broadcast_to(np.array([0.0 + 0j, 1.0]), (n, 2))
    est = _csit(batch, _other(s.owner), s.subband)
    if s.precoder is Precoder.ZF:
        return orth_complement(est)
    if s.precoder is Precoder.ALIGNED:
        return est / np.linalg.norm(est, axis=-1, keepdims=True)
    raise ValueError(f"{sid}: {s.precoder.value} has no beam of its own")


def receive_amplitudes(plan: SchemePlan, batch: ChannelBatch,
                       snr: SnrPoint) -> tuple[np.ndarray, list[str]]:
    """Complex gain of every message symbol at every receiver and subband.

    Returns an array of shape ``(2, n_trials, n_subbands, n_messages)`` and
    the message ids in column order.
    """
    if batch.n_subbands < plan.n_subbands:
        raise ValueError("channel batch has fewer subbands than the plan")
    p = snr.p_linear
    ids = [s.id for s in plan.messages]
    col = {sid: j for j, sid in enumerate(ids)}
    n = batch.n_trials
    amp = np.zeros((2, n, plan.n_subbands, len(ids)), dtype=complex)
    truth = (batch.h, batch.g)
    beams = {}
    for s in plan.messages:
        w = beams[s.id] = _beam(plan, s.id, batch)
        scale = math.sqrt(max(s.power.evaluate(p), 0.0))
        for r in (0, 1):
            amp[r, :, s.subband - 1, col[s.id]] = scale * inner(truth[r][:, s.subband - 1], w)
    for comp in plan.symbols:
        if comp.is_message:
            continue
        # transmitter rebuilds what each carried symbol left at the user it did not serve
        coef = np.stack([
            math.sqrt(max(plan.symbol(c).power.evaluate(p), 0.0))
            * inner(_csit(batch, _other(plan.symbol(c).owner), plan.symbol(c).subband),
                    beams[c])
            for c in comp.carries], axis=-1)
        norm2 = np.sum(np.abs(coef) ** 2, axis=-1, keepdims=True)
        target = comp.power.evaluate(p)
        gain = np.sqrt(np.divide(target, norm2, out=np.zeros_like(norm2), where=norm2 > 0))
        k = comp.subband - 1
        for r in (0, 1):
            lead = np.conj(truth[r][:, k, 0])[:, None]
            for i, c in enumerate(comp.carries):
                amp[r, :, k, col[c]] += lead[:, 0] * gain[:, 0] * coef[:, i]
    return amp, ids


def _mmse_sinr(a: np.ndarray, noise: np.ndarray) -> np.ndarray:
    # a: (n, K), noise: (n, K, m)
    q = np.einsum("nki,nli->nkl", noise, np.conj(noise))
    q = q + np.eye(a.shape[1])[None]
    x = np.linalg.solve(q, a[..., None])[..., 0]
    return np.real(np.sum(np.conj(a) * x, axis=-1))


def stage_rates_per_draw(plan: SchemePlan, program: SicProgram, batch: ChannelBatch,
                         snr: SnrPoint) -> dict[tuple[int, str], np.ndarray]:
    """Per-draw achievable rate of every over-the-air decode, keyed ``(receiver, id)``."""
    amp, ids = receive_amplitudes(plan, batch, snr)
    col = {sid: j for j, sid in enumerate(ids)}
    out: dict[tuple[int, str], np.ndarray] = {}
    for r in (1, 2):
        A = amp[r - 1]
        for st in program.for_receiver(r):
            if st.via_mu:
                continue
            obs = [k - 1 for k in st.subbands]
            for i, sid in enumerate(st.decode):
                noise = [col[x] for x in st.treat_as_noise + st.decode[i + 1:]]
                if len(obs) == 1:
                    k = obs[0]
                    sig = np.abs(A[:, k, col[sid]]) ** 2
                    interf = np.sum(np.abs(A[:, k, noise]) ** 2, axis=-1) if noise else 0.0
                    rate = stage_rate(StageSinr(sig, interf))
                else:
                    a = A[:, obs, col[sid]]
                    nz = A[:, obs][:, :, noise]
                    rate = np.log2(1.0 + _mmse_sinr(a, nz))
                out[(r, sid)] = rate
    return out


# ---------------------------------------------------------------------------
# chunked Monte Carlo
# ---------------------------------------------------------------------------

def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))


def _map_chunks(plan: SchemePlan, quality: CsitQuality, snr: SnrPoint, n_trials: int,
                rng_seed: int, workers: int | None,
                fn: Callable[[dict[tuple[int, str], np.ndarray]], dict]) -> list[dict]:
    program = sic_program_for(plan)
    n_chunks = -(-n_trials // CHUNK_TRIALS)

    def run(c: int) -> dict:
        size = min(CHUNK_TRIALS, n_trials - c * CHUNK_TRIALS)
        batch = draw_channels(quality, snr, size, plan.n_subbands, _chunk_rng(rng_seed, c))
        return fn(stage_rates_per_draw(plan, program, batch, snr))

    w = min(resolve_workers(workers), n_chunks)
    if w == 1:
        return [run(c) for c in range(n_chunks)]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(run, range(n_chunks)))


def _check_plan(plan: SchemePlan, quality: CsitQuality, n_trials: int) -> None:
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if plan.quality != quality:
        raise ValueError(f"plan built for {plan.quality} evaluated at {quality}")
    if plan.degenerate and (not plan.symbols or plan.channel_use_charge == 0):
        raise ValueError(f"{plan.scheme.value} plan at {quality} is degenerate")
    if plan.scheme is Scheme.HYBRID_CASE_II:
        L = case_ii_length(quality)
        if L.denominator != 1 or L != plan.L:
            raise ValueError(f"Case II plan needs integer L, got {L}")


@dataclass(frozen=True)
class SymbolRate:
    symbol: str
    receiver: int
    mean_rate: float
    stderr: float
    encoding_rate: float
    stage_rate: float | None
    limited_by: str


@dataclass
class RateReport:
    """Rates of one plan at one SNR, in bits per complex symbol."""

    scheme: Scheme
    quality: CsitQuality
    snr: SnrPoint
    n_trials: int
    rng_seed: int
    channel_use_charge: float
    n_subbands: int
    rows: list[SymbolRate] = field(default_factory=list)
    user_rates: tuple[float, float] = (0.0, 0.0)
    user_stderr: tuple[float, float] = (0.0, 0.0)

    def rate(self, symbol: str, receiver: int) -> SymbolRate:
        for row in self.rows:
            if row.symbol == symbol and row.receiver == receiver:
                return row
        raise KeyError((symbol, receiver))

    @property
    def dof_estimate(self) -> tuple[float, float]:
        """Single-SNR ratio ``R_i / (S log2 P)``; biased by constant offsets."""
        den = self.channel_use_charge * self.snr.log2_p
        return self.user_rates[0] / den, self.user_rates[1] / den

    def csv_rows(self) -> list[list[str]]:
        return [[self.scheme.value, str(self.quality.alpha), str(self.quality.beta),
                 repr(self.snr.p_db), row.symbol, str(row.receiver),
                 repr(row.mean_rate), repr(row.stderr)] for row in self.rows]

    def to_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "scheme": self.scheme.value,
            "alpha": str(self.quality.alpha),
            "beta": str(self.quality.beta),
            "snr_db": self.snr.p_db,
            "n_trials": self.n_trials,
            "rng_seed": self.rng_seed,
            "channel_use_charge": self.channel_use_charge,
            "n_subbands": self.n_subbands,
            "user_rates": list(self.user_rates),
            "user_stderr": list(self.user_stderr),
            "rows": [row.__dict__ for row in self.rows],
        }


def write_rates_csv(reports: Sequence[RateReport], stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(RATE_CSV_COLUMNS)
    for rep in reports:
        w.writerows(rep.csv_rows())


def rates_csv_text(reports: Sequence[RateReport]) -> str:
    buf = io.StringIO()
    write_rates_csv(reports, buf)
    return buf.getvalue()


def rates_json_text(reports: Sequence[RateReport]) -> str:
    return json.dumps({"schema_version": REPORT_SCHEMA_VERSION,
                       "reports": [r.to_dict() for r in reports]}, indent=2)


def evaluate_plan(plan: SchemePlan, quality: CsitQuality, snr: SnrPoint, n_trials: int,
                  rng_seed: int = 0, workers: int | None = None) -> RateReport:
    """Average the SIC stage rates of ``plan`` over ``n_trials`` channel draws."""
    _check_plan(plan, quality, n_trials)

    def moments(rates):
        return {key: (math.fsum(v), math.fsum(v * v)) for key, v in rates.items()}

    parts = _map_chunks(plan, quality, snr, n_trials, rng_seed, workers, moments)
    mean: dict[tuple[int, str], float] = {}
    se: dict[tuple[int, str], float] = {}
    for key in parts[0]:
        s1 = math.fsum(p[key][0] for p in parts)
        s2 = math.fsum(p[key][1] for p in parts)
        m = s1 / n_trials
        var = max(s2 / n_trials - m * m, 0.0) * n_trials / max(n_trials - 1, 1)
        mean[key], se[key] = m, math.sqrt(var / n_trials)

    log2p = snr.log2_p
    table = {s.id: float(s.rate_prelog) * log2p for s in plan.messages}
    air: dict[str, list[int]] = {}
    for r, sid in mean:
        air.setdefault(sid, []).append(r)

    def bottleneck(sid):
        best = (table[sid], 0.0, "encoding")
        for r in air.get(sid, []):
            if mean[(r, sid)] < best[0]:
                best = (mean[(r, sid)], se[(r, sid)], f"stage_rx{r}")
        return best

    members = {m for g in plan.mu_groups for m in g.members}
    code = {s.id: bottleneck(s.id) for s in plan.messages if s.id not in members}
    for g in plan.mu_groups:
        mu_rate = math.fsum(code[p][0] for p in g.pieces)
        mu_se = math.sqrt(math.fsum(code[p][1] ** 2 for p in g.pieces))
        # both members share one codebook so that their sum is again a codeword
        best = min((bottleneck(m) for m in g.members), key=lambda t: t[0])
        if mu_rate < best[0]:
            best = (mu_rate, mu_se, "mu")
        for m in g.members:
            code[m] = best

    program = sic_program_for(plan)
    rows = []
    for r in (1, 2):
        for st in program.for_receiver(r):
            for sid in st.decode:
                value, err, why = code[sid]
                rows.append(SymbolRate(sid, r, value, err, table[sid],
                                       None if st.via_mu else mean[(r, sid)], why))

    totals = [0.0, 0.0]
    var = [0.0, 0.0]
    for s in plan.messages:
        u = plan.credited_user(s)
        if u is None:
            continue
        i = u.receiver - 1
        totals[i] += code[s.id][0]
        var[i] += code[s.id][1] ** 2
    return RateReport(plan.scheme, quality, snr, n_trials, rng_seed,
                      float(plan.channel_use_charge), plan.n_subbands, rows,
                      (totals[0], totals[1]), (math.sqrt(var[0]), math.sqrt(var[1])))


def evaluate_sweep(plan: SchemePlan, quality: CsitQuality, snrs: Sequence[SnrPoint],
                   n_trials: int, rng_seed: int = 0,
                   workers: int | None = None) -> list[RateReport]:
    """Evaluate at several SNRs with common random numbers (same seed everywhere)."""
    return [evaluate_plan(plan, quality, snr, n_trials, rng_seed, workers) for snr in snrs]


def decode_success_rate(plan: SchemePlan, quality: CsitQuality, snr: SnrPoint,
                        n_trials: int, symbol: str, rng_seed: int = 0,
                        prelog_scale: float = 1.0, workers: int | None = None) -> float:
    """Fraction of draws in which every over-the-air decode of ``symbol`` reaches
    ``prelog_scale * prelog * log2(P)``.

    A per-draw diagnostic: it ignores coding across draws and shows how often
    a fixed-rate code on a single fading state would be in outage.
    """
    _check_plan(plan, quality, n_trials)
    try:
        spec = plan.symbol(symbol)
    except KeyError:
        raise ValueError(f"unknown symbol {symbol!r}") from None
    if not spec.is_message:
        raise ValueError(f"{symbol!r} is an analog retransmission, not a coded symbol")
    threshold = prelog_scale * float(spec.rate_prelog) * snr.log2_p
    if threshold <= 0:
        return 1.0

    def count(rates):
        ok = None
        for (r, sid), v in rates.items():
            if sid == symbol:
                hit = v >= threshold
                ok = hit if ok is None else ok & hit
        return {"n": int(np.count_nonzero(ok))}

    parts = _map_chunks(plan, quality, snr, n_trials, rng_seed, workers, count)
    return sum(p["n"] for p in parts) / n_trials


def fit_user_prelogs(reports: Sequence[RateReport]) -> tuple[float, float]:
    """Least-squares slope of each user's total rate against ``log2 P``."""
    if len(reports) < 3:
        raise ValueError(f"need at least 3 SNR points to fit a pre-log, got {len(reports)}")
    x = np.array([r.snr.log2_p for r in reports])
    if len(set(np.round(x, 12))) < len(x):
        raise ValueError("SNR points must be distinct")
    out = []
    for i in (0, 1):
        y = np.array([r.user_rates[i] for r in reports])
        out.append(float(np.polyfit(x, y, 1)[0]))
    return out[0], out[1]
