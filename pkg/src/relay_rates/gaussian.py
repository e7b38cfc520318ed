"""Gaussian two-way relay channel with Gaussian compression ``Yhat = Yr + Zhat``.

All rates use the real-channel capacity ``C(x) = 0.5 * log2(1 + x)`` and are
functions of the compression-noise variance ``sigma2``:

* ``r11 = C(g21^2 P + gr1^2 P / (1 + sigma2))`` and ``r21`` mirrored,
* ``r12 = C(g21^2 P + g2r^2 P) - C(1 / sigma2)`` and ``r22`` mirrored.

User 1's rate is bounded by ``min(r11, r12)``, user 2's by ``min(r21, r22)``.
The schemes differ only in which ``sigma2`` they may use.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DegenerateChannelError, DomainError, EmptyRegion
from .frontier import DEFAULT_FLOOR, RegionBoundary, SigmaGrid, pareto_frontier
from .numerics import grid_max, piecewise_max

LN2 = math.log(2.0)
REL_TOL = 1e-12
SCHEMES = ("cf_original", "cf_nobinning", "nnc")
_GAIN_KEYS = ("g12", "g1r", "g21", "g2r", "gr1", "gr2")


@dataclass(frozen=True)
class GaussianTwrcChannel:
    """Real gains and common power ``P`` (unit-variance noise everywhere).

    ``g12`` is the gain from user 2 to user 1, ``g1r`` relay to user 1,
    ``gr1`` user 1 to relay, and so on.
    """

    g12: float
    g1r: float
    g21: float
    g2r: float
    gr1: float
    gr2: float
    power: float

    def __post_init__(self):
        for key in _GAIN_KEYS:
            if not math.isfinite(getattr(self, key)):
                raise DomainError(f"gain {key} must be finite")
        if not (self.power > 0 and math.isfinite(self.power)):
            raise DomainError(f"power must be positive and finite, got {self.power}")

    @classmethod
    def from_dict(cls, data: dict) -> "GaussianTwrcChannel":
        missing = [k for k in _GAIN_KEYS + ("P",) if k not in data]
        if missing:
            raise DomainError(f"channel JSON missing {missing}")
        extra = set(data) - set(_GAIN_KEYS) - {"P"}
        if extra:
            raise DomainError(f"unknown channel keys {sorted(extra)}")
        return cls(*(float(data[k]) for k in _GAIN_KEYS), power=float(data["P"]))

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in _GAIN_KEYS}
        d["P"] = self.power
        return d

    def swapped(self) -> "GaussianTwrcChannel":
        """Same channel with the user labels exchanged."""
        return GaussianTwrcChannel(self.g21, self.g2r, self.g12, self.g1r, self.gr2, self.gr1, self.power)


@dataclass(frozen=True)
class RateTuple:
    r11: float
    r12: float
    r21: float
    r22: float


@dataclass(frozen=True)
class SigmaThresholds:
    c1: float
    c2: float
    e1: float
    e2: float
    r: float

    def to_dict(self) -> dict:
        return asdict(self)


def capacity(snr):
    """``0.5 * log2(1 + snr)`` for real Gaussian signalling."""
    snr = np.asarray(snr, dtype=float)
    if np.any(snr < 0) or np.any(np.isnan(snr)):
        raise DomainError("snr must be non-negative")
    out = 0.5 * np.log1p(snr) / LN2
    return float(out) if out.ndim == 0 else out


def rate_tuple(ch: GaussianTwrcChannel, sigma2) -> RateTuple:
    """The four sigma^2-dependent rates; ``sigma2`` may be an array."""
    s = np.asarray(sigma2, dtype=float)
    if np.any(~(s > 0)):
        raise DomainError("sigma2 must be positive")
    P = ch.power
    loss = capacity(1.0 / s)
    r11 = capacity(ch.g21**2 * P + ch.gr1**2 * P / (1.0 + s))
    r12 = capacity(ch.g21**2 * P + ch.g2r**2 * P) - loss
    r21 = capacity(ch.g12**2 * P + ch.gr2**2 * P / (1.0 + s))
    r22 = capacity(ch.g12**2 * P + ch.g1r**2 * P) - loss
    return RateTuple(r11, r12, r21, r22)


def user_rates(ch: GaussianTwrcChannel, sigma2):
    """Clamped per-user bounds ``(max(0, min(r11, r12)), max(0, min(r21, r22)))``."""
    t = rate_tuple(ch, sigma2)
    return np.maximum(0.0, np.minimum(t.r11, t.r12)), np.maximum(0.0, np.minimum(t.r21, t.r22))


def sum_rate(ch: GaussianTwrcChannel, sigma2):
    a, b = user_rates(ch, sigma2)
    out = a + b
    return float(out) if np.ndim(out) == 0 else out


def _require_relay_links(ch: GaussianTwrcChannel):
    if ch.g1r == 0 or ch.g2r == 0:
        raise DegenerateChannelError("relay-to-user gains g1r and g2r must be nonzero")


def thresholds(ch: GaussianTwrcChannel) -> SigmaThresholds:
    """Compression-feasibility (c), intersection (e) and binning (r) variances."""
    _require_relay_links(ch)
    P = ch.power
    c1 = (1 + ch.g21**2 * P) / (ch.g2r**2 * P)
    c2 = (1 + ch.g12**2 * P) / (ch.g1r**2 * P)
    e1 = (1 + ch.g21**2 * P + ch.gr1**2 * P) / (ch.g2r**2 * P)
    e2 = (1 + ch.g12**2 * P + ch.gr2**2 * P) / (ch.g1r**2 * P)
    weak = min(ch.g2r**2, ch.g1r**2) * P
    r = max((1 + ch.g21**2 * P + ch.gr1**2 * P) / weak, (1 + ch.g12**2 * P + ch.gr2**2 * P) / weak)
    assert c1 <= e1 and c2 <= e2, "compression thresholds exceed intersections"
    return SigmaThresholds(c1, c2, e1, e2, r)


def sigma_g(ch: GaussianTwrcChannel) -> float:
    """Stationary point of ``r12 + r21``; +inf when the denominator vanishes.

    A non-positive value means ``r12 + r21`` increases for every sigma^2.
    """
    P = ch.power
    num = ch.gr2**2 * P + ch.g12**2 * P + 1
    den = ch.gr2**2 * P - ch.g12**2 * P - 1
    return math.inf if den == 0 else num / den


def sigma_z1(ch: GaussianTwrcChannel) -> float:
    """Variance at which ``r12`` crosses zero."""
    return 1.0 / (ch.g21**2 * ch.power + ch.g2r**2 * ch.power)


def _canonical(ch: GaussianTwrcChannel) -> GaussianTwrcChannel:
    """Relabel users so that e1 >= e2."""
    th = thresholds(ch)
    return ch if th.e1 >= th.e2 else ch.swapped()


def _clamp_interval(x: float, lo: float, hi: float) -> float:
    """Stationary point ``x`` of a unimodal sum, clamped into [lo, hi]; x <= 0 means none."""
    if x > hi or x <= 0:
        return hi
    if x < lo:
        return lo
    return x


def kkt_sigma(z1: float, e1: float, e2: float, g: float, r12_at, r21_at) -> float:
    """Sum-rate-optimal variance from the characteristic variances, assuming e1 >= e2.

    Shared by the Gaussian and fading models; ``r12_at`` and ``r21_at`` evaluate
    the unclamped rates of the relabelled channel.
    """
    n1 = _clamp_interval(g, e2, e1)
    if z1 <= e2:
        return n1
    n2 = _clamp_interval(g, z1, e1)
    if r21_at(e2) <= r12_at(n2) + r21_at(n2):
        return n2
    return e2


def optimal_sigma_nnc(ch: GaussianTwrcChannel) -> tuple[float, float]:
    """Closed-form sum-rate-optimal sigma^2 for noisy network coding and its sum rate."""
    c = _canonical(ch)
    th = thresholds(c)
    sig = kkt_sigma(
        sigma_z1(c), th.e1, th.e2, sigma_g(c),
        lambda s: float(rate_tuple(c, s).r12),
        lambda s: float(rate_tuple(c, s).r21),
    )
    return sig, sum_rate(ch, sig)


def _close_le(a: float, b: float) -> bool:
    return a <= b + REL_TOL * max(abs(a), abs(b))


def _close_eq(a: float, b: float) -> bool:
    return abs(a - b) <= REL_TOL * max(abs(a), abs(b), 1e-300)


def check_same_region_original(ch: GaussianTwrcChannel) -> bool:
    """Binning CF matches CF without binning iff relay downlinks and user totals balance."""
    return _close_eq(ch.g1r**2, ch.g2r**2) and _close_eq(ch.g21**2 + ch.gr1**2, ch.g12**2 + ch.gr2**2)


def check_same_region_nnc(ch: GaussianTwrcChannel) -> bool:
    """CF without binning matches noisy network coding iff c1 <= e2 and c2 <= e1."""
    th = thresholds(ch)
    return _close_le(th.c1, th.e2) and _close_le(th.c2, th.e1)


def check_same_sumrate(ch: GaussianTwrcChannel) -> bool:
    """CF without binning reaches the NNC sum rate iff its lower limit admits sigma_N."""
    th = thresholds(ch)
    sig, _ = optimal_sigma_nnc(ch)
    return _close_le(max(th.c1, th.c2), sig)


def admissible_lower(ch: GaussianTwrcChannel, scheme: str) -> float:
    """Smallest sigma^2 a scheme may use (0 for noisy network coding)."""
    if scheme == "nnc":
        return 0.0
    th = thresholds(ch)
    if scheme == "cf_nobinning":
        return max(th.c1, th.c2)
    if scheme == "cf_original":
        return th.r
    raise DomainError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


def characteristic_points(ch: GaussianTwrcChannel) -> list[float]:
    """Every variance where a rate curve changes regime, for both labelings."""
    th = thresholds(ch)
    pts = [th.c1, th.c2, th.e1, th.e2, th.r, sigma_z1(ch), sigma_z1(ch.swapped()),
           sigma_g(ch), sigma_g(ch.swapped()), optimal_sigma_nnc(ch)[0]]
    return [p for p in pts if p > 0 and math.isfinite(p)]


def sweep_grid(ch: GaussianTwrcChannel, grid: SigmaGrid | None = None) -> np.ndarray:
    """One sweep shared by all schemes, so their frontiers compare point for point."""
    grid = grid or SigmaGrid()
    th = thresholds(ch)
    pts = characteristic_points(ch)
    lower = 0.5 * min([DEFAULT_FLOOR] + pts)
    upper = 10.0 * max(th.e1, th.e2, th.r)
    return grid.build(lower, upper, pts)


def region(ch: GaussianTwrcChannel, scheme: str, grid: SigmaGrid | None = None) -> RegionBoundary:
    """Pareto frontier of a scheme's clamped rate pairs over its admissible sweep."""
    lower = admissible_lower(ch, scheme)
    sweep = sweep_grid(ch, grid)
    s = sweep[sweep >= lower * (1 - REL_TOL)] if lower > 0 else sweep
    if s.size == 0:
        raise EmptyRegion(f"no admissible sigma2 >= {lower:g} for {scheme} in the sweep")
    a, b = user_rates(ch, s)
    return pareto_frontier(a, b, s, scheme, sweep)


def sumrate_cf_nobinning(ch: GaussianTwrcChannel) -> tuple[float, float]:
    """Best sum rate of CF without binning: ``(sigma2, sum)`` over sigma2 >= max(c1, c2).

    The sum is non-increasing past max(e1, e2), so only the stretch up to
    there is searched, piece by piece between regime changes.
    """
    th = thresholds(ch)
    lo = max(th.c1, th.c2)
    hi = max(th.e1, th.e2)
    f = lambda s: sum_rate(ch, s)
    if lo >= hi:
        return lo, f(lo)
    return piecewise_max(f, lo, hi, characteristic_points(ch))


def sumrate_oracle(ch: GaussianTwrcChannel, lower: float = 0.0, points: int = 4000,
                   span: tuple = (1e-5, 1e5)) -> tuple[float, float]:
    """Threshold-free maximizer of the sum rate over sigma2 >= lower (within ``span``)."""
    lo = max(span[0], lower)
    return grid_max(lambda s: sum_rate(ch, s), lo, max(span[1], 10 * lo), points)
