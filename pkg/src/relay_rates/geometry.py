"""Relay-placement and gain-pair classification maps.

Every cell is turned into a Gaussian and a fading channel and labelled with
four flags: whether CF without binning matches noisy network coding in rate
region and in sum rate, for each channel family.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import ArgumentError, GeometryError, RelayRatesError
from .fading import FadingTwrcChannel, fading_thresholds
from .gaussian import GaussianTwrcChannel, check_same_region_nnc, check_same_sumrate

MODES = ("equal_pathloss", "reciprocity", "uplink_downlink")
GAIN_PAIR_MODES = MODES[1:]
FIXED_GAINS = {
    "reciprocity": {"gr1": 1.0, "g1r": 1.0, "gr2": 2.0, "g2r": 2.0},
    "uplink_downlink": {"gr1": 1.0, "gr2": 1.0, "g1r": 2.0, "g2r": 2.0},
}
FLAG_NAMES = ("same_region_g", "same_sumrate_g", "same_region_f", "same_sumrate_f")
THREADS_ENV = "RELAY_RATES_THREADS"
_TIE_TOL = 1e-12
_FADING_TOL = 1e-9


@dataclass(frozen=True)
class NodeLayout:
    """Planar positions of the two users and the relay."""

    user1: tuple
    user2: tuple
    relay: tuple
    alpha: float = 2.0
    P: float = 10.0

    def distances(self) -> tuple[float, float, float]:
        """``(d12, d1r, d2r)``; raises GeometryError for coincident nodes."""
        d12 = math.dist(self.user1, self.user2)
        d1r = math.dist(self.user1, self.relay)
        d2r = math.dist(self.user2, self.relay)
        for name, d in (("user1-user2", d12), ("user1-relay", d1r), ("user2-relay", d2r)):
            if not d > 0:
                raise GeometryError(f"nodes {name} coincide")
        return d12, d1r, d2r


def _tied(a: float, b: float) -> bool:
    return abs(a - b) <= _TIE_TOL * max(abs(a), abs(b), 1.0)


def layout_to_gains(layout: NodeLayout, mode: str, overrides: Optional[dict] = None):
    """Gaussian and fading channels for one cell.

    ``equal_pathloss`` derives every gain from the layout as ``d^(-alpha/2)``.
    The gain-pair modes take ``g12sq`` and ``g21sq`` from ``overrides``
    together with the fixed relay gains (mode defaults unless overridden);
    the layout then contributes only the power.

    Returns:
        ``(GaussianTwrcChannel, FadingTwrcChannel)``.
    """
    overrides = dict(overrides or {})
    if mode == "equal_pathloss":
        d12, d1r, d2r = layout.distances()
        a = layout.alpha
        g12, g1, g2 = d12 ** (-a / 2), d1r ** (-a / 2), d2r ** (-a / 2)
        gauss = GaussianTwrcChannel(g12, g1, g12, g2, g1, g2, layout.P)
        return gauss, FadingTwrcChannel(d12, d1r, d2r, a, layout.P)
    if mode not in GAIN_PAIR_MODES:
        raise GeometryError(f"unknown mode {mode!r}; expected one of {MODES}")
    gains = dict(FIXED_GAINS[mode])
    unknown = set(overrides) - set(gains) - {"g12sq", "g21sq"}
    if unknown:
        raise GeometryError(f"unknown gain overrides {sorted(unknown)}")
    gains.update({k: float(v) for k, v in overrides.items() if k in gains})
    try:
        g12sq, g21sq = float(overrides["g12sq"]), float(overrides["g21sq"])
    except KeyError as exc:
        raise GeometryError(f"{mode} needs override {exc}") from None
    if g12sq < 0 or g21sq < 0:
        raise GeometryError("squared direct gains must be non-negative")
    if mode == "reciprocity" and not (_tied(gains["gr1"], gains["g1r"]) and _tied(gains["gr2"], gains["g2r"])):
        raise GeometryError("reciprocity needs gr1 = g1r and gr2 = g2r")
    if mode == "uplink_downlink" and not (_tied(gains["gr1"], gains["gr2"]) and _tied(gains["g1r"], gains["g2r"])):
        raise GeometryError("uplink_downlink needs gr1 = gr2 and g1r = g2r")
    g12, g21 = math.sqrt(g12sq), math.sqrt(g21sq)
    args = (g12, gains["g1r"], g21, gains["g2r"], gains["gr1"], gains["gr2"])
    return GaussianTwrcChannel(*args, power=layout.P), FadingTwrcChannel.from_mean_gains(*args, power=layout.P)


@dataclass(frozen=True)
class ClassificationCell:
    """One map cell; flags are False and ``undetermined`` set when evaluation failed."""

    x: float
    y: float
    same_region_g: bool = False
    same_sumrate_g: bool = False
    same_region_f: bool = False
    same_sumrate_f: bool = False
    undetermined: bool = False
    reason: str = ""

    def flags(self) -> tuple:
        return tuple(getattr(self, k) for k in FLAG_NAMES)


def classify_channels(gauss: GaussianTwrcChannel, fade: FadingTwrcChannel) -> dict:
    """The four equality flags for a pair of channels."""
    th = fading_thresholds(fade)
    c = max(th.c1bar, th.c2bar)
    return {
        "same_region_g": check_same_region_nnc(gauss),
        "same_sumrate_g": check_same_sumrate(gauss),
        "same_region_f": c <= min(th.e1bar, th.e2bar) * (1 + _FADING_TOL),
        "same_sumrate_f": th.nbar >= c * (1 - _FADING_TOL),
    }


@dataclass(frozen=True)
class SweepConfig:
    """Everything a map depends on; defaults reproduce the equal-pathloss map."""

    mode: str = "equal_pathloss"
    x_range: tuple = (-1.5, 1.5)
    y_range: tuple = (-1.5, 1.5)
    step: float = 0.05
    user1: tuple = (-0.5, 0.0)
    user2: tuple = (0.5, 0.0)
    alpha: float = 2.0
    P: float = 10.0
    gains: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ArgumentError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.step > 0:
            raise ArgumentError("step must be positive")
        for r in (self.x_range, self.y_range):
            if len(r) != 2 or not r[0] <= r[1]:
                raise ArgumentError(f"bad range {r}")
        object.__setattr__(self, "x_range", tuple(float(v) for v in self.x_range))
        object.__setattr__(self, "y_range", tuple(float(v) for v in self.y_range))
        object.__setattr__(self, "user1", tuple(float(v) for v in self.user1))
        object.__setattr__(self, "user2", tuple(float(v) for v in self.user2))
        unknown = set(self.gains) - {"gr1", "g1r", "gr2", "g2r"}
        if unknown:
            raise ArgumentError(f"unknown fixed gains {sorted(unknown)}")

    @classmethod
    def for_mode(cls, mode: str, **kw) -> "SweepConfig":
        if mode in GAIN_PAIR_MODES:
            kw.setdefault("x_range", (0.0, 4.0))
            kw.setdefault("y_range", (0.0, 4.0))
        return cls(mode=mode, **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ArgumentError(f"unknown geometry parameters {sorted(unknown)}")
        data = dict(data)
        mode = data.pop("mode", "equal_pathloss")
        try:
            return cls.for_mode(mode, **data)
        except TypeError as exc:
            raise ArgumentError(str(exc)) from None

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("x_range", "y_range", "user1", "user2"):
            d[k] = list(d[k])
        return d

    @property
    def axis_names(self) -> tuple[str, str]:
        return ("g12sq", "g21sq") if self.mode in GAIN_PAIR_MODES else ("x", "y")

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        def axis(lo, hi):
            n = int(round((hi - lo) / self.step)) + 1
            return np.round(np.linspace(lo, hi, n), 12)
        return axis(*self.x_range), axis(*self.y_range)


def classify(x: float, y: float, config: SweepConfig) -> ClassificationCell:
    """Evaluate one cell; numerical and geometric failures mark it undetermined."""
    try:
        if config.mode == "equal_pathloss":
            layout = NodeLayout(config.user1, config.user2, (x, y), config.alpha, config.P)
            channels = layout_to_gains(layout, config.mode)
        else:
            layout = NodeLayout(config.user1, config.user2, (0.0, 1.0), config.alpha, config.P)
            channels = layout_to_gains(layout, config.mode, {**config.gains, "g12sq": x, "g21sq": y})
        flags = classify_channels(*channels)
    except RelayRatesError as exc:
        return ClassificationCell(x, y, undetermined=True, reason=f"{type(exc).__name__}: {exc}")
    return ClassificationCell(x, y, **flags)


def _classify_row(args):
    y, xs, config = args
    return [classify(float(x), float(y), config) for x in xs]


def worker_count(limit: Optional[int] = None) -> int:
    """Process count, capped by the environment variable and ``limit``."""
    n = os.cpu_count() or 1
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = min(n, max(1, int(env)))
        except ValueError:
            raise ArgumentError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    if limit is not None:
        n = min(n, max(1, limit))
    return n


def sweep(config: SweepConfig, workers: Optional[int] = None) -> list[ClassificationCell]:
    """All cells in row-major order (y outer, x inner), independent of ``workers``."""
    xs, ys = config.axes()
    jobs = [(y, xs, config) for y in ys]
    n = worker_count(workers)
    if n == 1:
        rows = map(_classify_row, jobs)
        return [c for row in rows for c in row]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return [c for row in pool.map(_classify_row, jobs) for c in row]


def summarize(cells) -> dict:
    """Cell counts per flag plus the undetermined count."""
    out = {"cells": len(cells), "undetermined": sum(c.undetermined for c in cells)}
    for k in FLAG_NAMES:
        out[k] = sum(getattr(c, k) for c in cells)
    return out


def write_map_csv(fh, cells, config: SweepConfig):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(config.axis_names + FLAG_NAMES + ("undetermined",))
    for c in cells:
        w.writerow([f"{c.x:.12g}", f"{c.y:.12g}"] + [int(v) for v in c.flags()] + [int(c.undetermined)])


def read_map_csv(fh) -> list[ClassificationCell]:
    reader = csv.reader(fh)
    header = next(reader)
    if tuple(header[2:]) != FLAG_NAMES + ("undetermined",):
        raise ArgumentError(f"unexpected map header {header}")
    return [ClassificationCell(float(r[0]), float(r[1]), *(bool(int(v)) for v in r[2:]))
            for r in reader]
