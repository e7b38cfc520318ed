"""Ergodic rates of the Rayleigh-fading two-way relay channel.

Each link ``ij`` has gain ``h_ij / d^(alpha/2)`` with ``h_ij`` circularly
symmetric complex Gaussian, so ``|h_ij|^2 P / d^alpha`` is exponential. Rates
use ``log2(1 + snr)`` and expectations reduce to two closed forms in the
exponential integral ``E1``:

* ``E[log2(1 + U)]`` for one exponential ``U`` with rate ``lam``,
* ``E[log2(1 + U + V)]`` for two independent exponentials.

A rate of ``inf`` stands for a link with zero second moment.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import exp1, hyperu

from .errors import ConvergenceError, DegenerateChannelError, DomainError
from .frontier import DEFAULT_FLOOR, RegionBoundary, SigmaGrid, pareto_frontier
from .gaussian import kkt_sigma
from .numerics import expanding_root, grid_max, piecewise_max

LN2 = math.log(2.0)
LINKS = ("h12", "h21", "h1r", "h2r", "hr1", "hr2")
SCHEMES = ("cf_nobinning", "nnc")
# Below this relative gap the two-rate formula cancels badly; the equal-rate form is used.
EQUAL_RATE_RTOL = 1e-6
_SCALED_EXP1_SWITCH = 50.0
DEFAULT_SAMPLES = 1_000_000
REL_TOL = 1e-9


def scaled_exp1(x):
    """``exp(x) * E1(x)`` for x > 0, stable for large x."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < _SCALED_EXP1_SWITCH
    out[small] = np.exp(x[small]) * exp1(x[small])
    out[~small] = hyperu(1.0, 1.0, x[~small])
    return float(out) if out.ndim == 0 else out


def _check_rate(lam, name="lambda"):
    if np.any(np.isnan(lam)) or np.any(np.asarray(lam) <= 0):
        raise DomainError(f"{name} must be positive")


def ergodic_log_single(lam):
    """``E[log2(1 + U)]`` with ``U`` exponential of rate ``lam`` (mean ``1/lam``)."""
    lam = np.asarray(lam, dtype=float)
    _check_rate(lam)
    out = np.zeros_like(lam)
    fin = np.isfinite(lam)
    out[fin] = scaled_exp1(lam[fin]) / LN2
    return float(out) if out.ndim == 0 else out


def _ln_equal(lam):
    # U + V ~ Gamma(2, lam)
    return 1.0 + (1.0 - lam) * scaled_exp1(lam)


def _g(lam):
    return scaled_exp1(lam) / lam


@dataclass(frozen=True)
class ExpRatePair:
    lambda_u: float
    lambda_v: float

    def __post_init__(self):
        _check_rate(self.lambda_u, "lambda_u")
        _check_rate(self.lambda_v, "lambda_v")


def ergodic_log_sum(lambda_u, lambda_v=None):
    """``E[log2(1 + U + V)]`` for independent exponentials with rates ``lambda_u``, ``lambda_v``.

    Accepts an :class:`ExpRatePair` or the two rates (scalars or broadcastable
    arrays). Nearly equal rates switch to the Gamma(2) closed form at their mean.
    """
    if isinstance(lambda_u, ExpRatePair):
        lambda_u, lambda_v = lambda_u.lambda_u, lambda_u.lambda_v
    lu, lv = np.broadcast_arrays(np.asarray(lambda_u, dtype=float), np.asarray(lambda_v, dtype=float))
    _check_rate(lu, "lambda_u")
    _check_rate(lv, "lambda_v")
    lu, lv = lu.ravel(), lv.ravel()
    out = np.zeros(lu.shape)
    fu, fv = np.isfinite(lu), np.isfinite(lv)
    only_u, only_v = fu & ~fv, fv & ~fu
    out[only_u] = scaled_exp1(lu[only_u]) / LN2
    out[only_v] = scaled_exp1(lv[only_v]) / LN2
    both = fu & fv
    a, b = lu[both], lv[both]
    near = np.abs(a - b) <= EQUAL_RATE_RTOL * np.maximum(a, b)
    res = np.empty(a.shape)
    mean = 0.5 * (a[near] + b[near])
    res[near] = _ln_equal(mean) / LN2
    x, y = a[~near], b[~near]
    res[~near] = x * y / (y - x) * (_g(x) - _g(y)) / LN2
    out[both] = res
    shape = np.broadcast(np.asarray(lambda_u), np.asarray(lambda_v)).shape
    out = out.reshape(shape)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class FadingTwrcChannel:
    """Geometry, pathloss exponent, power and fading second moments ``E|h_ij|^2``.

    ``h12`` is the link from user 2 to user 1, ``h1r`` relay to user 1 and
    ``hr1`` user 1 to relay. A zero moment switches the link off.
    """

    d12: float
    d1r: float
    d2r: float
    alpha: float
    power: float
    moments: dict = field(default_factory=lambda: {k: 1.0 for k in LINKS})

    def __post_init__(self):
        for key in ("d12", "d1r", "d2r"):
            v = getattr(self, key)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"distance {key} must be positive and finite, got {v}")
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be non-negative, got {self.alpha}")
        if not (self.power > 0 and math.isfinite(self.power)):
            raise DomainError(f"power must be positive and finite, got {self.power}")
        m = {k: 1.0 for k in LINKS}
        unknown = set(self.moments) - set(LINKS)
        if unknown:
            raise DomainError(f"unknown fading links {sorted(unknown)}")
        m.update({k: float(v) for k, v in self.moments.items()})
        for k, v in m.items():
            if not (v >= 0 and math.isfinite(v)):
                raise DomainError(f"second moment of {k} must be finite and non-negative, got {v}")
        object.__setattr__(self, "moments", m)

    def __hash__(self):
        return hash((self.d12, self.d1r, self.d2r, self.alpha, self.power, tuple(sorted(self.moments.items()))))

    @classmethod
    def from_mean_gains(cls, g12, g1r, g21, g2r, gr1, gr2, power) -> "FadingTwrcChannel":
        """Unit distances with second moments equal to the squared mean gains."""
        gains = dict(zip(LINKS, (g12, g21, g1r, g2r, gr1, gr2)))
        return cls(1.0, 1.0, 1.0, 2.0, power, {k: float(v) ** 2 for k, v in gains.items()})

    @classmethod
    def from_dict(cls, data: dict) -> "FadingTwrcChannel":
        required = ("d12", "d1r", "d2r", "alpha", "P")
        missing = [k for k in required if k not in data]
        if missing:
            raise DomainError(f"channel JSON missing {missing}")
        extra = set(data) - set(required) - {"moments"}
        if extra:
            raise DomainError(f"unknown channel keys {sorted(extra)}")
        return cls(float(data["d12"]), float(data["d1r"]), float(data["d2r"]),
                   float(data["alpha"]), float(data["P"]), dict(data.get("moments") or {}))

    def to_dict(self) -> dict:
        return {"d12": self.d12, "d1r": self.d1r, "d2r": self.d2r, "alpha": self.alpha,
                "P": self.power, "moments": dict(self.moments)}

    def swapped(self) -> "FadingTwrcChannel":
        m = self.moments
        return FadingTwrcChannel(self.d12, self.d2r, self.d1r, self.alpha, self.power, {
            "h12": m["h21"], "h21": m["h12"], "h1r": m["h2r"], "h2r": m["h1r"],
            "hr1": m["hr2"], "hr2": m["hr1"]})

    def rate(self, link: str) -> float:
        """Exponential rate of the received SNR on ``link`` (inf for a dead link)."""
        d = {"h12": self.d12, "h21": self.d12, "h1r": self.d1r, "hr1": self.d1r,
             "h2r": self.d2r, "hr2": self.d2r}[link]
        m = self.moments[link]
        return math.inf if m == 0 else d**self.alpha / (m * self.power)


@dataclass(frozen=True)
class FadingRateTuple:
    rbar11: float
    rbar12: float
    rbar21: float
    rbar22: float
    f1: float
    f2: float
    d1: float

    def to_dict(self) -> dict:
        return asdict(self)


def _loss(sigma2):
    return np.log2(1.0 + 1.0 / sigma2)


def _check_sigma(sigma2):
    s = np.asarray(sigma2, dtype=float)
    if np.any(~(s > 0)):
        raise DomainError("sigma2 must be positive")
    return s


def _sigma_free(ch: FadingTwrcChannel) -> dict:
    lu1, lu2 = ch.rate("h21"), ch.rate("h12")
    d1 = ergodic_log_sum(lu1, ch.rate("h2r"))
    d2 = ergodic_log_sum(lu2, ch.rate("h1r"))
    return {"d1": d1, "d2": d2,
            "f1": max(0.0, d1 - ergodic_log_single(lu1)),
            "f2": max(0.0, d2 - ergodic_log_single(lu2))}


def _r11(ch, s):
    return ergodic_log_sum(ch.rate("h21"), ch.rate("hr1") * (1.0 + s))


def _r21(ch, s):
    return ergodic_log_sum(ch.rate("h12"), ch.rate("hr2") * (1.0 + s))


def fading_rate_tuple(ch: FadingTwrcChannel, sigma2) -> FadingRateTuple:
    """Ergodic rates at compression variance ``sigma2`` (scalar or array)."""
    s = _check_sigma(sigma2)
    fixed = _sigma_free(ch)
    loss = _loss(s)
    out = FadingRateTuple(
        _r11(ch, s), fixed["d1"] - loss, _r21(ch, s), fixed["d2"] - loss,
        fixed["f1"], fixed["f2"], fixed["d1"])
    if s.ndim == 0:
        return FadingRateTuple(*(float(v) for v in asdict(out).values()))
    return out


def fading_user_rates(ch: FadingTwrcChannel, sigma2):
    t = fading_rate_tuple(ch, sigma2)
    return np.maximum(0.0, np.minimum(t.rbar11, t.rbar12)), np.maximum(0.0, np.minimum(t.rbar21, t.rbar22))


def fading_sum_rate(ch: FadingTwrcChannel, sigma2):
    a, b = fading_user_rates(ch, sigma2)
    out = a + b
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class FadingThresholds:
    c1bar: float
    c2bar: float
    z1bar: float
    e1bar: float
    e2bar: float
    gbar: float
    nbar: float

    def to_dict(self) -> dict:
        return asdict(self)


def _inv_gap(bits: float) -> float:
    """``1 / (2^bits - 1)``, +inf for zero rate."""
    return math.inf if bits <= 0 else 1.0 / math.expm1(bits * LN2)


def _intersection(upper, lower, what) -> float:
    return expanding_root(lambda s: float(upper(s) - lower(s)), what=what)


def _e_thresholds(ch: FadingTwrcChannel, fixed: dict) -> tuple[float, float]:
    e1 = _intersection(lambda s: _r11(ch, s), lambda s: fixed["d1"] - _loss(s), "e1bar")
    e2 = _intersection(lambda s: _r21(ch, s), lambda s: fixed["d2"] - _loss(s), "e2bar")
    return e1, e2


def _sum_slope(ch: FadingTwrcChannel, s: float) -> float:
    """d/dsigma2 of rbar12 + rbar21; rbar21 by central difference."""
    h = max(1e-6, 1e-6 * s)
    lo = max(s - h, 0.5 * s)
    loss_slope = 1.0 / (LN2 * s * (s + 1.0))
    return loss_slope + float(_r21(ch, s + h) - _r21(ch, lo)) / (s + h - lo)


def sigma_g_bar(ch: FadingTwrcChannel) -> float:
    """Stationary point of ``rbar12 + rbar21``; +inf when the sum keeps increasing.

    For large sigma2 the slope has the sign of ``1 - mean_v * E[1/(1+U)]`` with
    ``U`` the direct-link SNR at user 2's decoder and ``mean_v`` the mean relay
    SNR from user 2, so a root exists only when that product exceeds one.
    """
    lam_u, lam_v = ch.rate("h12"), ch.rate("hr2")
    if not math.isfinite(lam_v):
        return math.inf
    mean_inv = 1.0 if not math.isfinite(lam_u) else lam_u * scaled_exp1(lam_u)
    if mean_inv / lam_v <= 1.0:
        return math.inf
    return expanding_root(lambda s: _sum_slope(ch, s), what="gbar")


def _require_relay_links(ch: FadingTwrcChannel):
    if ch.moments["h1r"] == 0 or ch.moments["h2r"] == 0:
        raise DegenerateChannelError("relay-to-user links h1r and h2r need positive second moments")


def fading_thresholds(ch: FadingTwrcChannel) -> FadingThresholds:
    """All characteristic variances, including the optimum ``nbar``."""
    _require_relay_links(ch)
    fixed = _sigma_free(ch)
    e1, e2 = _e_thresholds(ch, fixed)
    nbar = _optimal_sigma(ch)
    return FadingThresholds(_inv_gap(fixed["f1"]), _inv_gap(fixed["f2"]), _inv_gap(fixed["d1"]),
                            e1, e2, sigma_g_bar(ch), nbar)


def _optimal_sigma(ch: FadingTwrcChannel) -> float:
    fixed = _sigma_free(ch)
    e1, e2 = _e_thresholds(ch, fixed)
    if e1 < e2:
        ch = ch.swapped()
        fixed = _sigma_free(ch)
        e1, e2 = e2, e1
    return kkt_sigma(
        _inv_gap(fixed["d1"]), e1, e2, sigma_g_bar(ch),
        lambda s: float(fixed["d1"] - _loss(s)),
        lambda s: float(_r21(ch, s)),
    )


def fading_optimal_sigma_nnc(ch: FadingTwrcChannel) -> tuple[float, float]:
    """Sum-rate-optimal compression variance for noisy network coding and its sum rate."""
    _require_relay_links(ch)
    sig = _optimal_sigma(ch)
    return sig, fading_sum_rate(ch, sig)


def fading_check_same_region(ch: FadingTwrcChannel) -> bool:
    """CF without binning matches noisy network coding iff max(c) <= min(e)."""
    th = fading_thresholds(ch)
    lo, hi = max(th.c1bar, th.c2bar), min(th.e1bar, th.e2bar)
    return lo <= hi * (1 + REL_TOL)


def fading_check_same_sumrate(ch: FadingTwrcChannel) -> bool:
    """CF without binning reaches the noisy-network-coding sum rate iff nbar >= max(c)."""
    th = fading_thresholds(ch)
    lo = max(th.c1bar, th.c2bar)
    return th.nbar >= lo * (1 - REL_TOL)


def _characteristic_points(th: FadingThresholds) -> list[float]:
    return [v for v in asdict(th).values() if v > 0 and math.isfinite(v)]


def admissible_lower(ch: FadingTwrcChannel, scheme: str, th: FadingThresholds | None = None) -> float:
    if scheme == "nnc":
        return 0.0
    if scheme != "cf_nobinning":
        raise DomainError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    th = th or fading_thresholds(ch)
    return max(th.c1bar, th.c2bar)


def sweep_grid(ch: FadingTwrcChannel, grid: SigmaGrid | None = None,
               th: FadingThresholds | None = None) -> np.ndarray:
    grid = grid or SigmaGrid()
    th = th or fading_thresholds(ch)
    pts = _characteristic_points(th)
    lower = 0.5 * min([DEFAULT_FLOOR] + pts)
    upper = 10.0 * max(th.e1bar, th.e2bar)
    return grid.build(lower, upper, pts)


def fading_region(ch: FadingTwrcChannel, scheme: str, grid: SigmaGrid | None = None) -> RegionBoundary:
    """Pareto frontier of ergodic rate pairs over the scheme's admissible sweep."""
    th = fading_thresholds(ch)
    lower = admissible_lower(ch, scheme, th)
    sweep = sweep_grid(ch, grid, th)
    s = sweep[sweep >= lower * (1 - REL_TOL)] if lower > 0 else sweep
    if s.size == 0:
        raise ConvergenceError(f"sweep holds no sigma2 >= {lower:g}", {"lower": lower})
    a, b = fading_user_rates(ch, s)
    return pareto_frontier(a, b, s, scheme, sweep)


def fading_sumrate_cf_nobinning(ch: FadingTwrcChannel) -> tuple[float, float]:
    th = fading_thresholds(ch)
    lo, hi = max(th.c1bar, th.c2bar), max(th.e1bar, th.e2bar)
    f = lambda s: fading_sum_rate(ch, s)
    if not math.isfinite(lo):
        return lo, 0.0
    if lo >= hi:
        return lo, f(lo)
    return piecewise_max(f, lo, hi, _characteristic_points(th))


def fading_sumrate_oracle(ch: FadingTwrcChannel, lower: float = 0.0, points: int = 4000,
                          span: tuple = (1e-5, 1e5)) -> tuple[float, float]:
    """Threshold-free grid-and-Brent maximizer of the ergodic sum rate."""
    lo = max(span[0], lower)
    return grid_max(lambda s: fading_sum_rate(ch, s), lo, max(span[1], 10 * lo), points)


def monte_carlo_rates(ch: FadingTwrcChannel, sigma2: float, rng: np.random.Generator,
                      samples: int = DEFAULT_SAMPLES) -> dict:
    """Sample means and standard errors of every ergodic quantity.

    Draws ``h ~ CN(0, m)`` per link so ``|h|^2`` is exponential with mean ``m``.
    Returns ``{name: (mean, stderr)}`` keyed like :class:`FadingRateTuple`.
    """
    _check_sigma(sigma2)
    snr = {}
    for link in LINKS:
        lam = ch.rate(link)
        if math.isfinite(lam):
            h = (rng.standard_normal(samples) + 1j * rng.standard_normal(samples)) / math.sqrt(2.0)
            snr[link] = np.abs(h) ** 2 / lam
        else:
            snr[link] = np.zeros(samples)
    loss = float(_loss(sigma2))
    draws = {
        "rbar11": np.log2(1 + snr["h21"] + snr["hr1"] / (1 + sigma2)),
        "rbar12": np.log2(1 + snr["h21"] + snr["h2r"]) - loss,
        "rbar21": np.log2(1 + snr["h12"] + snr["hr2"] / (1 + sigma2)),
        "rbar22": np.log2(1 + snr["h12"] + snr["h1r"]) - loss,
        "f1": np.log2(1 + snr["h2r"] / (1 + snr["h21"])),
        "f2": np.log2(1 + snr["h1r"] / (1 + snr["h12"])),
        "d1": np.log2(1 + snr["h21"] + snr["h2r"]),
    }
    return {k: (float(v.mean()), float(v.std(ddof=1) / math.sqrt(samples))) for k, v in draws.items()}
