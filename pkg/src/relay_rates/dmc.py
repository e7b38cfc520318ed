"""Compress-forward rate constraints for discrete memoryless relay channels.

A scheme is evaluated on one factorized distribution at a time and returns a
:class:`SchemeRates`: the two message-rate bounds (zero when the scheme's
compression-rate constraint fails), a feasibility flag, and every raw
mutual-information expression that entered the bounds.

One-way variables are ``x, xr, y, yr, yhat``; two-way variables are
``x1, x2, xr, y1, y2, yr, yhat`` where ``yhat`` is the relay's compression.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ArgumentError, FactorizationError
from .info import (
    ConditionalPmf,
    JointPmf,
    conditional_mutual_information,
    factorized_pmf,
)

ONEWAY_VARS = ("x", "xr", "y", "yr", "yhat")
TWOWAY_VARS = ("x1", "x2", "xr", "y1", "y2", "yr", "yhat")
FACTORIZATION_TOL = 1e-10
FEASIBILITY_TOL = 1e-12
EQUALITY_TOL = 1e-9


@dataclass(frozen=True)
class SchemeRates:
    r1_bound: float
    r2_bound: float
    feasible: bool
    active_constraints: dict = field(default_factory=dict)
    violated: tuple = ()
    scheme: str = ""

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "r1_bound": self.r1_bound,
            "r2_bound": self.r2_bound,
            "feasible": self.feasible,
            "violated": list(self.violated),
            "active_constraints": dict(self.active_constraints),
        }


class _Distribution:
    variables: tuple = ()

    def __init__(self, pmf: JointPmf):
        if sorted(pmf.names) != sorted(self.variables):
            raise FactorizationError(
                f"{type(self).__name__} needs variables {self.variables}, got {pmf.names}"
            )
        self.pmf = pmf.transpose(self.variables)
        self._cache: dict = {}
        self._check_structure()

    def _check_structure(self):
        raise NotImplementedError

    def mi(self, a, b, c=()) -> float:
        """Cached ``I(a;b|c)``; sets given as tuples of variable names."""
        key = (tuple(a), tuple(b), tuple(c))
        if key not in self._cache:
            self._cache[key] = conditional_mutual_information(self.pmf, a, b, c)
        return self._cache[key]

    def _require_zero(self, value: float, what: str):
        if value > FACTORIZATION_TOL:
            raise FactorizationError(f"{what} = {value:.3e} bits, expected 0")

    def to_dict(self, model: str) -> dict:
        d = self.pmf.to_dict()
        d["model"] = model
        return d


class OneWayDistribution(_Distribution):
    """Joint of the form p(x) p(xr) p(y, yr | x, xr) p(yhat | yr, xr)."""

    variables = ONEWAY_VARS

    def _check_structure(self):
        self._require_zero(self.mi(("x",), ("xr",)), "I(X;Xr)")
        self._require_zero(self.mi(("yhat",), ("x", "y"), ("xr", "yr")), "I(Yhat;X,Y|Xr,Yr)")

    @classmethod
    def from_components(cls, px, pxr, channel, compression) -> "OneWayDistribution":
        """Assemble from input marginals ``p(x)``, ``p(xr)`` and the two conditionals.

        ``channel`` is ``p(y, yr | x, xr)``, ``compression`` is ``p(yhat | xr, yr)``.
        """
        return cls(factorized_pmf([_marginal("x", px), _marginal("xr", pxr)],
                                  _cond(channel), _cond(compression)))

    @classmethod
    def random(cls, rng: np.random.Generator, sizes: Optional[dict] = None,
               compression_weight: Optional[float] = None) -> "OneWayDistribution":
        """Random instance, Dirichlet(1) slices; see :func:`_random_compression`."""
        s = {v: 2 for v in ONEWAY_VARS}
        s.update(sizes or {})
        return cls.from_components(
            rng.dirichlet(np.ones(s["x"])),
            rng.dirichlet(np.ones(s["xr"])),
            ConditionalPmf([("x", s["x"]), ("xr", s["xr"])], [("y", s["y"]), ("yr", s["yr"])],
                           _random_table(rng, (s["x"], s["xr"]), (s["y"], s["yr"]))),
            _random_compression(rng, s, compression_weight),
        )


class TwoWayDistribution(_Distribution):
    """Joint of the form p(x1) p(x2) p(xr) p(y1, y2, yr | x1, x2, xr) p(yhat | xr, yr)."""

    variables = TWOWAY_VARS

    def _check_structure(self):
        self._require_zero(self.mi(("x1",), ("x2", "xr")), "I(X1;X2,Xr)")
        self._require_zero(self.mi(("x2",), ("xr",)), "I(X2;Xr)")
        self._require_zero(self.mi(("yhat",), ("x1", "x2", "y1", "y2"), ("xr", "yr")),
                           "I(Yhat;X1,X2,Y1,Y2|Xr,Yr)")

    @classmethod
    def from_components(cls, px1, px2, pxr, channel, compression) -> "TwoWayDistribution":
        """``channel`` is ``p(y1, y2, yr | x1, x2, xr)``, ``compression`` is ``p(yhat | xr, yr)``."""
        inputs = [_marginal("x1", px1), _marginal("x2", px2), _marginal("xr", pxr)]
        return cls(factorized_pmf(inputs, _cond(channel), _cond(compression)))

    @classmethod
    def random(cls, rng: np.random.Generator, sizes: Optional[dict] = None,
               symmetric: bool = False, compression_weight: Optional[float] = None) -> "TwoWayDistribution":
        """Random instance; Dirichlet(1) for every marginal and conditional slice.

        With ``symmetric=True`` the channel is invariant under swapping the
        users (x1 <-> x2, y1 <-> y2) and both users share one input marginal.
        """
        s = {v: 2 for v in TWOWAY_VARS}
        s.update(sizes or {})
        if symmetric and (s["x1"] != s["x2"] or s["y1"] != s["y2"]):
            raise ArgumentError("symmetric instances need equal user alphabets")
        in_shape = (s["x1"], s["x2"], s["xr"])
        out_shape = (s["y1"], s["y2"], s["yr"])
        table = _random_table(rng, in_shape, out_shape)
        px1 = rng.dirichlet(np.ones(s["x1"]))
        px2 = px1 if symmetric else rng.dirichlet(np.ones(s["x2"]))
        if symmetric:
            table = 0.5 * (table + table.transpose(1, 0, 2, 4, 3, 5))
        channel = ConditionalPmf([("x1", s["x1"]), ("x2", s["x2"]), ("xr", s["xr"])],
                                 [("y1", s["y1"]), ("y2", s["y2"]), ("yr", s["yr"])], table)
        compression = _random_compression(rng, s, compression_weight)
        return cls.from_components(px1, px2, rng.dirichlet(np.ones(s["xr"])), channel, compression)


def _marginal(name, p) -> JointPmf:
    if isinstance(p, JointPmf):
        if p.names != (name,):
            raise FactorizationError(f"expected a marginal on {name!r}, got {p.names}")
        return p
    p = np.asarray(p, dtype=float)
    return JointPmf([(name, p.size)], p)


def _cond(c) -> ConditionalPmf:
    if not isinstance(c, ConditionalPmf):
        raise ArgumentError(f"expected a ConditionalPmf, got {type(c).__name__}")
    return c


def _random_table(rng, in_shape, out_shape) -> np.ndarray:
    n_out = int(np.prod(out_shape))
    rows = rng.dirichlet(np.ones(n_out), size=int(np.prod(in_shape)))
    return rows.reshape(tuple(in_shape) + tuple(out_shape))


def _random_compression(rng, s, weight) -> ConditionalPmf:
    """Random ``p(yhat | xr, yr)``.

    ``weight`` in [0, 1] blends a random table with a row shared by every
    ``(xr, yr)``; 0 gives a constant compression and small weights give the
    low-rate descriptions that satisfy the compression constraints. None
    means a plain random table.
    """
    table = _random_table(rng, (s["xr"], s["yr"]), (s["yhat"],))
    if weight is not None:
        if not 0.0 <= weight <= 1.0:
            raise ArgumentError(f"compression_weight must lie in [0, 1], got {weight}")
        table = weight * table + (1.0 - weight) * rng.dirichlet(np.ones(s["yhat"]))
    return ConditionalPmf([("xr", s["xr"]), ("yr", s["yr"])], [("yhat", s["yhat"])], table)


def _clamp(x: float) -> float:
    return max(0.0, x)


def _result(scheme, r1, r2, constraints: dict, checks: dict) -> SchemeRates:
    """Build a SchemeRates; ``checks`` maps constraint name -> slack (>= 0 means satisfied)."""
    violated = tuple(name for name, slack in checks.items() if slack < -FEASIBILITY_TOL)
    feasible = not violated
    raw = dict(constraints)
    raw.update({f"{name}_slack": slack for name, slack in checks.items()})
    if not feasible:
        return SchemeRates(0.0, 0.0, False, raw, violated, scheme)
    return SchemeRates(_clamp(r1), _clamp(r2), True, raw, (), scheme)


# One-way relay channel ------------------------------------------------------

def _oneway_terms(d: OneWayDistribution) -> dict:
    return {
        "I(X,Xr;Y)-I(Yhat;Yr|X,Xr,Y)": d.mi(("x", "xr"), ("y",)) - d.mi(("yhat",), ("yr",), ("x", "xr", "y")),
        "I(X;Y,Yhat|Xr)": d.mi(("x",), ("y", "yhat"), ("xr",)),
    }


def oneway_cf_nobinning(d: OneWayDistribution) -> SchemeRates:
    """Rate of CF without binning, with joint decoding of message and compression index."""
    terms = _oneway_terms(d)
    slack = d.mi(("xr",), ("y",)) + d.mi(("yhat",), ("x", "y"), ("xr",)) - d.mi(("yhat",), ("yr",), ("xr",))
    r = min(terms.values())
    return _result("oneway_cf_nobinning", r, 0.0, terms, {"joint_decoding_compression": slack})


def oneway_cf_original(d: OneWayDistribution) -> SchemeRates:
    """Rate of CF with Wyner-Ziv binning.

    The bound is the 2-step min-form, which carries no compression constraint.
    The 3-step form ``I(X;Y,Yhat|Xr)`` s.t. ``I(Xr;Y) >= I(Yhat;Yr|Xr,Y)`` is
    reported alongside as ``three_step_rate`` (zero when its constraint fails)
    and ``three_step_compression_slack``.
    """
    terms = _oneway_terms(d)
    slack2 = d.mi(("xr",), ("y",)) - d.mi(("yhat",), ("yr",), ("xr", "y"))
    three = terms["I(X;Y,Yhat|Xr)"]
    extra = dict(terms)
    extra["two_step_rate"] = _clamp(min(terms.values()))
    extra["three_step_rate"] = _clamp(three) if slack2 >= -FEASIBILITY_TOL else 0.0
    extra["three_step_compression_slack"] = slack2
    return _result("oneway_cf_original", min(terms.values()), 0.0, extra, {})


def oneway_rate(d: OneWayDistribution, scheme: Callable[[OneWayDistribution], SchemeRates]) -> float:
    """Best rate the scheme gets from ``d``'s inputs, its own compression or a constant one.

    A constant compression is always a member of the distribution family and
    yields ``I(X;Y|Xr)`` for every scheme, so it is a valid fallback.
    """
    return max(scheme(d).r1_bound, d.mi(("x",), ("y",), ("xr",)))


def oneway_equivalence_gap(d: OneWayDistribution) -> float:
    """``I(Yhat;Yr|Xr,Y) - [I(Yhat;Yr|Xr) - I(Yhat;X,Y|Xr)]``, which is never negative."""
    return d.mi(("yhat",), ("yr",), ("xr", "y")) - (
        d.mi(("yhat",), ("yr",), ("xr",)) - d.mi(("yhat",), ("x", "y"), ("xr",)))


# Two-way relay channel ------------------------------------------------------

def _twrc_terms(d: TwoWayDistribution) -> dict:
    cq1 = d.mi(("yhat",), ("yr",), ("x1", "x2", "xr", "y1"))
    cq2 = d.mi(("yhat",), ("yr",), ("x1", "x2", "xr", "y2"))
    return {
        "R1:I(X1;Y2,Yhat|X2,Xr)": d.mi(("x1",), ("y2", "yhat"), ("x2", "xr")),
        "R1:I(X1,Xr;Y2|X2)-I(Yhat;Yr|X1,X2,Xr,Y2)": d.mi(("x1", "xr"), ("y2",), ("x2",)) - cq2,
        "R2:I(X2;Y1,Yhat|X1,Xr)": d.mi(("x2",), ("y1", "yhat"), ("x1", "xr")),
        "R2:I(X2,Xr;Y1|X1)-I(Yhat;Yr|X1,X2,Xr,Y1)": d.mi(("x2", "xr"), ("y1",), ("x1",)) - cq1,
    }


def _split(terms: dict):
    r1 = min(v for k, v in terms.items() if k.startswith("R1:"))
    r2 = min(v for k, v in terms.items() if k.startswith("R2:"))
    return r1, r2


def twrc_cf_nobinning(d: TwoWayDistribution) -> SchemeRates:
    """CF without binning, joint decoding of message and compression index."""
    terms = _twrc_terms(d)
    r1, r2 = _split(terms)
    checks = {
        "compression_at_user1": d.mi(("xr",), ("y1",), ("x1",)) - d.mi(("yhat",), ("yr",), ("x1", "x2", "xr", "y1")),
        "compression_at_user2": d.mi(("xr",), ("y2",), ("x2",)) - d.mi(("yhat",), ("yr",), ("x1", "x2", "xr", "y2")),
    }
    return _result("twrc_cf_nobinning", r1, r2, terms, checks)


def twrc_cf_original(d: TwoWayDistribution) -> SchemeRates:
    """Original CF with binning and 3-step successive decoding."""
    terms = {
        "R1:I(X1;Y2,Yhat|X2,Xr)": d.mi(("x1",), ("y2", "yhat"), ("x2", "xr")),
        "R2:I(X2;Y1,Yhat|X1,Xr)": d.mi(("x2",), ("y1", "yhat"), ("x1", "xr")),
    }
    r1, r2 = _split(terms)
    lhs = max(d.mi(("yhat",), ("yr",), ("x1", "xr", "y1")), d.mi(("yhat",), ("yr",), ("x2", "xr", "y2")))
    rhs = min(d.mi(("xr",), ("y1",), ("x1",)), d.mi(("xr",), ("y2",), ("x2",)))
    return _result("twrc_cf_original", r1, r2, terms, {"binned_compression": rhs - lhs})


def twrc_nnc(d: TwoWayDistribution) -> SchemeRates:
    """Noisy network coding: the no-binning bounds without any compression constraint."""
    terms = _twrc_terms(d)
    r1, r2 = _split(terms)
    return _result("twrc_nnc", r1, r2, terms, {})


def _relaxed(d: TwoWayDistribution, scheme: str, weight: float) -> SchemeRates:
    terms = _twrc_terms(d)
    bracket1 = d.mi(("xr",), ("y2",), ("x2",)) - d.mi(("yhat",), ("y2",), ("xr",))
    bracket2 = d.mi(("xr",), ("y1",), ("x1",)) - d.mi(("yhat",), ("y1",), ("xr",))
    terms["R1:boundary"] = terms["R1:I(X1,Xr;Y2|X2)-I(Yhat;Yr|X1,X2,Xr,Y2)"] + weight * bracket1
    terms["R2:boundary"] = terms["R2:I(X2,Xr;Y1|X1)-I(Yhat;Yr|X1,X2,Xr,Y1)"] + weight * bracket2
    r1, r2 = _split(terms)
    terms["bracket_user1"] = bracket1
    terms["bracket_user2"] = bracket2
    return _result(scheme, r1, r2, terms, {})


def twrc_relaxed_norepeat(d: TwoWayDistribution) -> SchemeRates:
    """No binning, message decoded without resolving the compression indices."""
    return _relaxed(d, "twrc_relaxed_norepeat", 1.0)


def twrc_relaxed_repeat2(d: TwoWayDistribution) -> SchemeRates:
    """As :func:`twrc_relaxed_norepeat` with every message sent in two blocks."""
    return _relaxed(d, "twrc_relaxed_repeat2", 0.5)


def twrc_simultaneous_raw(d: TwoWayDistribution) -> tuple[float, float]:
    """Raw R2 bounds of the last-block error events of simultaneous decoding.

    First: all blocks decoded, last compression index included. Second: the
    last compression index omitted, which adds ``I(Xr;Y1|X1,X2)``.
    """
    first = d.mi(("x2",), ("y1", "yhat"), ("x1", "xr")) - d.mi(("yhat",), ("yr",), ("x1", "x2", "xr", "y1"))
    return first, first + d.mi(("xr",), ("y1",), ("x1", "x2"))


def twrc_simultaneous_bounds(d: TwoWayDistribution) -> tuple[float, float]:
    """Effective R2 bounds of the two simultaneous-decoding variants.

    Each variant keeps the noisy-network-coding R2 constraints and adds its
    boundary-event constraint, so the result is the clamped minimum.
    """
    nnc_r2 = twrc_nnc(d).r2_bound
    first, second = twrc_simultaneous_raw(d)
    return min(nnc_r2, _clamp(first)), min(nnc_r2, _clamp(second))


def equal_region_necessary_condition(d: TwoWayDistribution, tol: float = EQUALITY_TOL) -> bool:
    """Necessary condition for the binning and no-binning regions to coincide."""
    link = abs(d.mi(("xr",), ("y1",), ("x1",)) - d.mi(("xr",), ("y2",), ("x2",)))
    comp = abs(d.mi(("yhat",), ("yr",), ("x1", "xr", "y1")) - d.mi(("yhat",), ("yr",), ("x2", "xr", "y2")))
    return link <= tol and comp <= tol


ONEWAY_SCHEMES = {
    "cf_nobinning": oneway_cf_nobinning,
    "cf_original": oneway_cf_original,
}

TWOWAY_SCHEMES = {
    "cf_original": twrc_cf_original,
    "cf_nobinning": twrc_cf_nobinning,
    "nnc": twrc_nnc,
    "relaxed_norepeat": twrc_relaxed_norepeat,
    "relaxed_repeat2": twrc_relaxed_repeat2,
}


def load_distribution(data: dict):
    """Parse the ``{"model": ..., "axes": ..., "probs": ...}`` JSON form."""
    model = data.get("model") if isinstance(data, dict) else None
    if model not in ("oneway-dmc", "twrc-dmc"):
        raise ArgumentError(f"model must be 'oneway-dmc' or 'twrc-dmc', got {model!r}")
    pmf = JointPmf.from_dict(data)
    return OneWayDistribution(pmf) if model == "oneway-dmc" else TwoWayDistribution(pmf)


def evaluate(d) -> dict:
    """Every scheme on ``d`` as JSON-ready records."""
    if isinstance(d, OneWayDistribution):
        out = {name: fn(d).to_dict() for name, fn in ONEWAY_SCHEMES.items()}
        rates = {name: oneway_rate(d, fn) for name, fn in ONEWAY_SCHEMES.items()}
        return {"model": "oneway-dmc", "schemes": out, "achievable_rate": rates}
    out = {name: fn(d).to_dict() for name, fn in TWOWAY_SCHEMES.items()}
    first, second = twrc_simultaneous_bounds(d)
    return {
        "model": "twrc-dmc",
        "schemes": out,
        "simultaneous_bounds": {"all_blocks": first, "last_index_omitted": second},
        "equal_region_necessary_condition": equal_region_necessary_condition(d),
    }
