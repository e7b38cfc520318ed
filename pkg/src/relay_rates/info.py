"""Entropy and mutual information over dense finite-alphabet pmfs.

Every quantity is in bits. A :class:`JointPmf` is a dense array indexed by
the cartesian product of named alphabets; variable sets are passed by name.

>>> pmf = JointPmf([("x", 2), ("y", 2)], [0.5, 0.0, 0.0, 0.5])
>>> conditional_mutual_information(pmf, "x", "y")
1.0
"""

from __future__ import annotations

import json
import math
import string
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    ArgumentError,
    NormalizationError,
    SizeError,
    UnknownVariableError,
)

MAX_DENSE_SIZE = 10_000_000
NORMALIZATION_TOL = 1e-12
# Slices of a conditional block are produced by division, so they get a looser check.
CONDITIONAL_TOL = 1e-10
ZERO_PROB = 1e-15

VarSet = Union[str, Iterable[str]]


def _as_names(names: VarSet | None) -> tuple[str, ...]:
    if names is None:
        return ()
    if isinstance(names, str):
        return (names,)
    out = tuple(names)
    if len(set(out)) != len(out):
        raise ArgumentError(f"duplicate variable names in {out!r}")
    return out


def _check_axes(axes) -> tuple[tuple[str, int], ...]:
    axes = tuple((str(name), int(size)) for name, size in axes)
    names = [name for name, _ in axes]
    if len(set(names)) != len(names):
        raise ArgumentError(f"variable names must be unique, got {names}")
    for name, size in axes:
        if size < 1:
            raise ArgumentError(f"alphabet of {name!r} must be non-empty")
    total = math.prod(size for _, size in axes)
    if total > MAX_DENSE_SIZE:
        raise SizeError(f"dense pmf would have {total} entries (limit {MAX_DENSE_SIZE})")
    return axes


class JointPmf:
    """Normalized pmf over an ordered tuple of named finite alphabets.

    Args:
        axes: sequence of ``(name, alphabet_size)`` pairs.
        probs: probabilities in row-major order of ``axes`` (any shape with the
            right number of entries).

    Raises:
        NormalizationError: negative entries or a total that is not 1.
        SizeError: more than ``MAX_DENSE_SIZE`` entries.
    """

    __slots__ = ("axes", "probs")

    def __init__(self, axes, probs):
        axes = _check_axes(axes)
        shape = tuple(size for _, size in axes)
        arr = np.array(probs, dtype=float)
        if arr.size != math.prod(shape):
            raise ArgumentError(f"expected {math.prod(shape)} probabilities, got {arr.size}")
        arr = arr.reshape(shape)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise NormalizationError("probabilities must be finite and non-negative")
        total = float(arr.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise NormalizationError(f"probabilities sum to {total!r}, not 1")
        arr.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "probs", arr)

    def __setattr__(self, key, value):
        raise AttributeError("JointPmf is immutable")

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.probs.shape

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownVariableError(f"unknown variable {name!r}; axes are {self.names}") from None

    def __repr__(self):
        return f"JointPmf(axes={list(self.axes)!r})"

    def __eq__(self, other):
        if not isinstance(other, JointPmf):
            return NotImplemented
        return self.axes == other.axes and np.array_equal(self.probs, other.probs)

    def allclose(self, other: "JointPmf", atol: float = 1e-12) -> bool:
        return self.axes == other.axes and np.allclose(self.probs, other.probs, rtol=0, atol=atol)

    def transpose(self, names: Sequence[str]) -> "JointPmf":
        """Reorder the axes to ``names`` (which must be a permutation)."""
        names = _as_names(names)
        if sorted(names) != sorted(self.names):
            raise ArgumentError(f"{names} is not a permutation of {self.names}")
        perm = [self.index(n) for n in names]
        return JointPmf([self.axes[i] for i in perm], self.probs.transpose(perm))

    def to_dict(self) -> dict:
        return {"axes": [[n, s] for n, s in self.axes], "probs": self.probs.ravel().tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "JointPmf":
        try:
            axes = data["axes"]
            probs = data["probs"]
        except (KeyError, TypeError) as exc:
            raise ArgumentError(f"pmf JSON needs 'axes' and 'probs': {exc}") from None
        return cls(axes, probs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "JointPmf":
        return cls.from_dict(json.loads(text))

    @classmethod
    def uniform(cls, axes) -> "JointPmf":
        axes = _check_axes(axes)
        shape = tuple(s for _, s in axes)
        return cls(axes, np.full(shape, 1.0 / math.prod(shape)))


class ConditionalPmf:
    """Conditional pmf ``p(outputs | inputs)`` stored densely.

    ``table`` has shape ``input sizes + output sizes``; every slice over the
    output axes must sum to one.
    """

    __slots__ = ("inputs", "outputs", "table")

    def __init__(self, inputs, outputs, table):
        inputs = _check_axes(inputs)
        outputs = _check_axes(outputs)
        _check_axes(inputs + outputs)
        shape = tuple(s for _, s in inputs) + tuple(s for _, s in outputs)
        arr = np.array(table, dtype=float)
        if arr.size != math.prod(shape):
            raise ArgumentError(f"expected {math.prod(shape)} entries, got {arr.size}")
        arr = arr.reshape(shape)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise NormalizationError("conditional probabilities must be finite and non-negative")
        out_axes = tuple(range(len(inputs), len(shape)))
        sums = arr.sum(axis=out_axes) if out_axes else np.ones(shape)
        bad = np.abs(np.asarray(sums) - 1.0) > CONDITIONAL_TOL
        if np.any(bad):
            where = tuple(int(i) for i in np.argwhere(bad)[0])
            raise NormalizationError(
                f"conditional slice at input index {where} sums to {np.asarray(sums)[where]!r}"
            )
        arr.setflags(write=False)
        self.inputs = inputs
        self.outputs = outputs
        self.table = arr

    def __repr__(self):
        outs = ",".join(n for n, _ in self.outputs)
        ins = ",".join(n for n, _ in self.inputs)
        return f"ConditionalPmf(p({outs}|{ins}))"

    @classmethod
    def deterministic(cls, inputs, outputs, fn) -> "ConditionalPmf":
        """Build ``p(out|in)`` putting all mass on ``fn(*in_symbols)`` (a tuple)."""
        inputs = _check_axes(inputs)
        outputs = _check_axes(outputs)
        in_shape = tuple(s for _, s in inputs)
        out_shape = tuple(s for _, s in outputs)
        table = np.zeros(in_shape + out_shape)
        for idx in np.ndindex(*in_shape) if in_shape else [()]:
            out = fn(*idx)
            if not isinstance(out, tuple):
                out = (out,)
            table[idx + tuple(out)] = 1.0
        return cls(inputs, outputs, table)


def marginalize(pmf: JointPmf, keep: VarSet) -> JointPmf:
    """Marginal pmf on ``keep``, axes in the order given by ``keep``."""
    keep = _as_names(keep)
    idx = [pmf.index(n) for n in keep]
    drop = tuple(i for i in range(len(pmf.axes)) if i not in idx)
    arr = pmf.probs.sum(axis=drop) if drop else pmf.probs
    # sum() keeps the remaining axes in original order; permute to the requested order
    remaining = [i for i in range(len(pmf.axes)) if i in idx]
    perm = [remaining.index(i) for i in idx]
    arr = np.transpose(arr, perm) if perm else np.asarray(arr).reshape(())
    if not keep:
        return JointPmf([], [1.0])
    return JointPmf([pmf.axes[i] for i in idx], arr / arr.sum())


def _entropy_array(p: np.ndarray) -> float:
    p = p[p > ZERO_PROB]
    return float(-(p * np.log2(p)).sum())


def entropy(pmf: JointPmf, names: VarSet | None = None) -> float:
    """Joint entropy ``H(names)`` in bits; all axes when ``names`` is None."""
    if names is None:
        return _entropy_array(pmf.probs.ravel())
    names = _as_names(names)
    if not names:
        return 0.0
    idx = {pmf.index(n) for n in names}
    drop = tuple(i for i in range(len(pmf.axes)) if i not in idx)
    marg = pmf.probs.sum(axis=drop) if drop else pmf.probs
    return _entropy_array(np.asarray(marg).ravel())


def conditional_mutual_information(pmf: JointPmf, a: VarSet, b: VarSet, c: VarSet | None = None) -> float:
    """``I(A;B|C)`` in bits.

    Raises:
        ArgumentError: if the three sets are not pairwise disjoint or A/B is empty.
        UnknownVariableError: for a name that is not an axis of ``pmf``.
    """
    a, b, c = _as_names(a), _as_names(b), _as_names(c)
    if not a or not b:
        raise ArgumentError("both A and B must name at least one variable")
    sa, sb, sc = set(a), set(b), set(c)
    if sa & sb or sa & sc or sb & sc:
        raise ArgumentError(f"variable sets overlap: A={a}, B={b}, C={c}")
    for n in a + b + c:
        pmf.index(n)
    value = entropy(pmf, a + c) + entropy(pmf, b + c) - entropy(pmf, a + b + c) - entropy(pmf, c)
    return max(value, 0.0)


def mutual_information(pmf: JointPmf, a: VarSet, b: VarSet) -> float:
    return conditional_mutual_information(pmf, a, b, ())


def factorized_pmf(inputs: Sequence[JointPmf], channel: ConditionalPmf,
                   compression: ConditionalPmf | None = None) -> JointPmf:
    """Product pmf ``prod(inputs) * channel * compression``.

    Each conditional may only condition on variables introduced before it
    (by the independent inputs or an earlier conditional). The result's axes
    are the input axes, then channel outputs, then compression outputs.
    """
    factors: list[tuple[tuple[tuple[str, int], ...], np.ndarray]] = []
    axes: list[tuple[str, int]] = []
    for marg in inputs:
        for ax in marg.axes:
            if ax[0] in dict(axes):
                raise ArgumentError(f"variable {ax[0]!r} defined twice")
            axes.append(ax)
        factors.append((marg.axes, marg.probs))
    for cond in (channel, compression):
        if cond is None:
            continue
        known = dict(axes)
        for name, size in cond.inputs:
            if name not in known:
                raise ArgumentError(f"{cond!r} conditions on undefined variable {name!r}")
            if known[name] != size:
                raise ArgumentError(f"alphabet size mismatch for {name!r}")
        for ax in cond.outputs:
            if ax[0] in known:
                raise ArgumentError(f"variable {ax[0]!r} defined twice")
            axes.append(ax)
        factors.append((cond.inputs + cond.outputs, cond.table))
    axes_t = _check_axes(axes)
    if len(axes_t) > len(string.ascii_letters):
        raise SizeError("too many variables")
    letter = {name: string.ascii_letters[i] for i, (name, _) in enumerate(axes_t)}
    spec = ",".join("".join(letter[n] for n, _ in f_axes) for f_axes, _ in factors)
    spec += "->" + "".join(letter[n] for n, _ in axes_t)
    arr = np.einsum(spec, *[t for _, t in factors])
    return JointPmf(axes_t, arr / arr.sum())
