"""Pareto frontiers of (R1, R2) pairs swept over the compression-noise variance."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import ArgumentError

DEFAULT_POINTS = 2000
DEFAULT_FLOOR = 1e-4
CSV_HEADER = ("sigma2", "R1", "R2", "scheme")


@dataclass(frozen=True)
class SigmaGrid:
    """Log-spaced sweep of sigma^2; None bounds are filled from channel thresholds."""

    points: int = DEFAULT_POINTS
    lower: Optional[float] = None
    upper: Optional[float] = None

    @classmethod
    def from_dict(cls, data: Optional[dict]) -> "SigmaGrid":
        data = dict(data or {})
        unknown = set(data) - {"points", "lower", "upper"}
        if unknown:
            raise ArgumentError(f"unknown grid keys {sorted(unknown)}")
        grid = cls(int(data.get("points", DEFAULT_POINTS)), data.get("lower"), data.get("upper"))
        if grid.points < 2:
            raise ArgumentError("grid needs at least 2 points")
        for v in (grid.lower, grid.upper):
            if v is not None and not (v > 0 and math.isfinite(v)):
                raise ArgumentError(f"grid bounds must be positive and finite, got {v}")
        if grid.lower is not None and grid.upper is not None and grid.lower >= grid.upper:
            raise ArgumentError("grid lower bound must be below the upper bound")
        return grid

    def to_dict(self) -> dict:
        return {"points": self.points, "lower": self.lower, "upper": self.upper}

    def build(self, lower: float, upper: float, extra: Iterable[float] = ()) -> np.ndarray:
        """Sorted unique sweep, with the finite positive ``extra`` points in range injected."""
        lo = self.lower if self.lower is not None else lower
        hi = self.upper if self.upper is not None else upper
        base = np.geomspace(lo, hi, self.points)
        inj = [x for x in extra if math.isfinite(x) and lo <= x <= hi]
        return np.unique(np.concatenate([base, np.asarray(inj, dtype=float)]))


@dataclass(frozen=True)
class RegionBoundary:
    """Non-dominated (R1, R2) points, R1 ascending and R2 descending."""

    points: tuple
    sigma2: tuple
    scheme: str
    sweep: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def r1(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def r2(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])

    def r2_at(self, r1) -> np.ndarray:
        """Largest R2 in the region for each requested R1 (-inf beyond the frontier)."""
        r1 = np.atleast_1d(np.asarray(r1, dtype=float))
        xs, ys = self.r1, self.r2
        # frontier R2 is descending, so the best point with R1' >= r1 is the first such point
        idx = np.searchsorted(xs, r1, side="left")
        out = np.full(r1.shape, -np.inf)
        ok = idx < len(xs)
        out[ok] = ys[idx[ok]]
        return out

    def max_sum(self) -> float:
        return float(np.max(self.r1 + self.r2))

    def to_csv(self) -> str:
        buf = io.StringIO()
        write_frontiers_csv(buf, [self])
        return buf.getvalue()


def pareto_frontier(r1, r2, sigma2, scheme: str, sweep=None) -> RegionBoundary:
    """Drop dominated points; ties keep the smallest sigma^2."""
    r1 = np.asarray(r1, dtype=float)
    r2 = np.asarray(r2, dtype=float)
    sigma2 = np.asarray(sigma2, dtype=float)
    order = np.lexsort((sigma2, -r2, -r1))
    pts, sig = [], []
    best = -np.inf
    for i in order:
        if r2[i] > best:
            best = r2[i]
            pts.append((float(r1[i]), float(r2[i])))
            sig.append(float(sigma2[i]))
    pts.reverse()
    sig.reverse()
    return RegionBoundary(tuple(pts), tuple(sig), scheme, sweep)


def containment_gap(inner: RegionBoundary, outer: RegionBoundary) -> float:
    """Largest amount by which ``inner`` pokes out of ``outer`` (<= 0 means contained)."""
    return float(np.max(inner.r2 - outer.r2_at(inner.r1)))


def strict_gap(inner: RegionBoundary, outer: RegionBoundary) -> float:
    """Largest R2 advantage of ``outer`` over ``inner`` at one of outer's points."""
    inner_r2 = np.maximum(inner.r2_at(outer.r1), 0.0)
    return float(np.max(outer.r2 - inner_r2))


def frontier_distance(a: RegionBoundary, b: RegionBoundary) -> float:
    """Symmetric sup distance between two staircases, sampled at both point sets."""
    xs = np.union1d(a.r1, b.r1)
    da, db = a.r2_at(xs), b.r2_at(xs)
    both = np.isfinite(da) & np.isfinite(db)
    if not np.array_equal(np.isfinite(da), np.isfinite(db)):
        # one frontier reaches further along R1 than the other
        edge = abs(float(a.r1[-1]) - float(b.r1[-1]))
        return max(edge, float(np.max(np.abs(da[both] - db[both]), initial=0.0)))
    return float(np.max(np.abs(da - db)))


def write_frontiers_csv(fh, frontiers: Iterable[RegionBoundary]):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for fr in frontiers:
        for s, (a, b) in zip(fr.sigma2, fr.points):
            w.writerow([f"{s:.12g}", f"{a:.12g}", f"{b:.12g}", fr.scheme])


def read_frontiers_csv(fh) -> dict:
    """Inverse of :func:`write_frontiers_csv`; returns scheme -> RegionBoundary."""
    rows: dict = {}
    reader = csv.DictReader(fh)
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise ArgumentError(f"expected header {CSV_HEADER}, got {reader.fieldnames}")
    for row in reader:
        rows.setdefault(row["scheme"], []).append(
            (float(row["sigma2"]), float(row["R1"]), float(row["R2"])))
    return {
        k: RegionBoundary(tuple((a, b) for _, a, b in v), tuple(s for s, _, _ in v), k)
        for k, v in rows.items()
    }
