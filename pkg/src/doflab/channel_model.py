"""
Random channel realizations and imperfect CSIT.

Two single-antenna users are served by a two-antenna transmitter over a set
of subbands. User 1 sees ``h_k`` and user 2 sees ``g_k`` in subband ``k``.
Subbands are numbered from 1. In odd subbands the transmitter holds the
reported CSIT of user 1 (quality ``beta``) and a predicted CSIT of user 2
(quality ``alpha``); even subbands swap the roles.

The CSIT error of a quality-``q`` estimate has total variance ``P**-q``,
split evenly over the two complex entries. Truth is drawn first and the
estimate is formed as ``truth - error``, so the true channel keeps an exact
identity covariance.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from numbers import Rational
from typing import Union

import numpy as np

__all__ = [
    "CsitQuality",
    "SnrPoint",
    "ChannelDraw",
    "ChannelBatch",
    "LeakageSide",
    "as_fraction",
    "draw_channel",
    "draw_channels",
    "orth_complement",
    "leakage_moment",
    "leakage_moment_closed_form",
]

RationalLike = Union[Fraction, int, float, str]


def as_fraction(value: RationalLike) -> Fraction:
    """Convert ``value`` to an exact :class:`~fractions.Fraction`.

    Floats are read through their shortest decimal repr, so ``0.2`` becomes
    ``1/5`` rather than the nearest binary fraction. Strings may be decimals
    or ``"p/q"``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        if not np.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse {value!r} as a rational") from exc
    raise TypeError(f"cannot convert {type(value).__name__} to a rational")


@dataclass(frozen=True)
class CsitQuality:
    """CSIT quality exponents, ``0 <= alpha <= beta <= 1``."""

    alpha: Fraction
    beta: Fraction

    def __post_init__(self):
        a = as_fraction(self.alpha)
        b = as_fraction(self.beta)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        if not (0 <= a <= 1 and 0 <= b <= 1):
            raise ValueError(f"qualities must lie in [0, 1], got alpha={a}, beta={b}")
        if a > b:
            raise ValueError(
                f"predicted CSIT cannot beat reported CSIT: alpha={a} > beta={b}")

    @property
    def saturation_beta(self) -> Fraction:
        """Reported quality beyond which the region stops growing, (2+alpha)/3."""
        return (2 + self.alpha) / 3

    def exponents(self, subband: int) -> tuple[Fraction, Fraction]:
        """Quality exponents ``(q_h, q_g)`` of the two CSIT vectors in ``subband``."""
        if subband < 1:
            raise ValueError("subbands are numbered from 1")
        if subband % 2 == 1:
            return self.beta, self.alpha
        return self.alpha, self.beta

    def __str__(self):
        return f"(alpha={self.alpha}, beta={self.beta})"


@dataclass(frozen=True)
class SnrPoint:
    """Transmit SNR ``P`` with unit noise power."""

    p_db: float

    def __post_init__(self):
        p_db = float(self.p_db)
        object.__setattr__(self, "p_db", p_db)
        if not np.isfinite(p_db) or p_db <= 0:
            raise ValueError(f"SNR must exceed 0 dB (P > 1), got {p_db} dB")

    @classmethod
    def from_linear(cls, p_linear: float) -> "SnrPoint":
        if p_linear <= 1:
            raise ValueError(f"linear SNR must exceed 1, got {p_linear}")
        return cls(10.0 * np.log10(p_linear))

    @property
    def p_linear(self) -> float:
        return 10.0 ** (self.p_db / 10.0)

    @property
    def log2_p(self) -> float:
        return self.p_db / 10.0 * np.log2(10.0)

    def error_variance(self, exponent: Fraction) -> float:
        """CSIT error variance ``P**-exponent``."""
        return self.p_linear ** (-float(exponent))


@dataclass(frozen=True)
class ChannelBatch:
    """A batch of channel realizations over several subbands.

    All complex arrays have shape ``(n_trials, n_subbands, 2)``; subband
    ``k`` lives at index ``k - 1``.
    """

    h: np.ndarray
    g: np.ndarray
    h_hat: np.ndarray
    g_hat: np.ndarray
    h_err: np.ndarray
    g_err: np.ndarray
    sigma2_h: np.ndarray
    sigma2_g: np.ndarray

    @property
    def n_trials(self) -> int:
        return self.h.shape[0]

    @property
    def n_subbands(self) -> int:
        return self.h.shape[1]


@dataclass(frozen=True)
class ChannelDraw:
    """One realization of the two-subband channel and its CSIT."""

    h1: np.ndarray
    h2: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    h1_hat: np.ndarray
    h2_hat: np.ndarray
    g1_hat: np.ndarray
    g2_hat: np.ndarray
    h1_err: np.ndarray
    h2_err: np.ndarray
    g1_err: np.ndarray
    g2_err: np.ndarray
    sigma2_h1: float
    sigma2_h2: float
    sigma2_g1: float
    sigma2_g2: float


def _cn(rng: np.random.Generator, shape) -> np.ndarray:
    # unit-variance circularly-symmetric complex Gaussian
    z = rng.standard_normal(shape + (2,))
    return (z[..., 0] + 1j * z[..., 1]) / np.sqrt(2.0)


def draw_channels(quality: CsitQuality, snr: SnrPoint, n_trials: int,
                  n_subbands: int = 2, rng=None) -> ChannelBatch:
    """Draw ``n_trials`` independent channel realizations.

    The random stream is consumed in a fixed order (true ``h``, true ``g``,
    then the unit-variance error directions), so the same generator state
    gives the same truth and the same error directions at every SNR. Only
    the error scaling depends on ``snr``.

    Parameters
    ----------
    quality : CsitQuality
    snr : SnrPoint
    n_trials : int
    n_subbands : int
        Number of subbands; quality pattern alternates starting with odd.
    rng : numpy Generator, int seed, SeedSequence or None
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if n_subbands < 1:
        raise ValueError("n_subbands must be >= 1")
    rng = np.random.default_rng(rng)
    shape = (n_trials, n_subbands, 2)
    h = _cn(rng, shape)
    g = _cn(rng, shape)
    zh = _cn(rng, shape)
    zg = _cn(rng, shape)

    q = [quality.exponents(k) for k in range(1, n_subbands + 1)]
    sigma2_h = np.array([snr.error_variance(qh) for qh, _ in q])
    sigma2_g = np.array([snr.error_variance(qg) for _, qg in q])
    # per-entry variance sigma^2 / 2 so that E||err||^2 = sigma^2
    h_err = zh * np.sqrt(sigma2_h / 2.0)[None, :, None]
    g_err = zg * np.sqrt(sigma2_g / 2.0)[None, :, None]
    h_hat, g_hat = h - h_err, g - g_err
    # store the error as truth minus estimate so the identity holds bitwise
    return ChannelBatch(h=h, g=g, h_hat=h_hat, g_hat=g_hat,
                        h_err=h - h_hat, g_err=g - g_hat,
                        sigma2_h=sigma2_h, sigma2_g=sigma2_g)


def draw_channel(quality: CsitQuality, snr: SnrPoint, rng_seed: int) -> ChannelDraw:
    """Draw a single two-subband realization, reproducible for a fixed seed."""
    b = draw_channels(quality, snr, 1, 2, rng_seed)
    return ChannelDraw(
        h1=b.h[0, 0], h2=b.h[0, 1], g1=b.g[0, 0], g2=b.g[0, 1],
        h1_hat=b.h_hat[0, 0], h2_hat=b.h_hat[0, 1],
        g1_hat=b.g_hat[0, 0], g2_hat=b.g_hat[0, 1],
        h1_err=b.h_err[0, 0], h2_err=b.h_err[0, 1],
        g1_err=b.g_err[0, 0], g2_err=b.g_err[0, 1],
        sigma2_h1=float(b.sigma2_h[0]), sigma2_h2=float(b.sigma2_h[1]),
        sigma2_g1=float(b.sigma2_g[0]), sigma2_g2=float(b.sigma2_g[1]),
    )


def orth_complement(v: np.ndarray) -> np.ndarray:
    """Unit vector orthogonal to ``v = [a, b]``: ``[-conj(b), conj(a)] / ||v||``.

    Works on the last axis, so a stack of vectors of shape ``(..., 2)`` is
    handled in one call.
    """
    v = np.asarray(v, dtype=complex)
    if v.shape[-1] != 2:
        raise ValueError("orth_complement expects vectors of length 2")
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise ValueError("orthogonal complement of a zero vector is undefined")
    w = np.stack([-np.conj(v[..., 1]), np.conj(v[..., 0])], axis=-1)
    return w / norm


def inner(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Conjugate-transpose inner product ``a^H b`` along the last axis."""
    return np.sum(np.conj(a) * b, axis=-1)


class LeakageSide(str, Enum):
    BETA_SIDE = "beta_side"
    ALPHA_SIDE = "alpha_side"


def leakage_moment(quality: CsitQuality, snr: SnrPoint, n_trials: int,
                   which: LeakageSide | str = LeakageSide.BETA_SIDE,
                   rng_seed: int = 0) -> float:
    """Monte-Carlo estimate of ``E|h^H hat(h)_perp|^2``.

    ``beta_side`` uses user 1 in subband 1 (reported CSIT), ``alpha_side``
    uses user 1 in subband 2 (predicted CSIT).
    """
    which = LeakageSide(which)
    b = draw_channels(quality, snr, n_trials, 2, rng_seed)
    k = 0 if which is LeakageSide.BETA_SIDE else 1
    leak = inner(b.h[:, k], orth_complement(b.h_hat[:, k]))
    return float(np.mean(np.abs(leak) ** 2))


def leakage_moment_closed_form(sigma2: float) -> float:
    """Exact leakage moment for this error model at error variance ``sigma2``.

    With ``h ~ CN(0, I)`` and an independent error of per-entry variance
    ``s = sigma2 / 2``, the estimate has per-entry variance ``1 + s`` and
    ``h`` given the estimate has residual per-entry variance ``s / (1 + s)``.
    The orthogonal projection removes the conditional mean.
    """
    s = sigma2 / 2.0
    return s / (1.0 + s)
