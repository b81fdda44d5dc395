"""Finite discrete probability algebra and information measures.

Joint laws are dense numpy tensors whose axes are named by
:class:`VariableLabel`.  Every public function addresses variables by name,
never by axis position.  All measures are in bits.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ArgumentError, NumericalConsistencyError, ShapeError, VariableNameError

NORMALIZATION_TOL = 1e-12
# Negative measures in [-CLAMP_TOL, 0] are rounding noise; anything below is a bug.
CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class VariableLabel:
    name: str
    cardinality: int

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name.isidentifier():
            raise VariableNameError(f"invalid variable name {self.name!r}")
        if int(self.cardinality) != self.cardinality or self.cardinality < 1:
            raise ShapeError(f"{self.name}: cardinality must be a positive integer, got {self.cardinality}")


def _check_unique(labels: Sequence[VariableLabel]) -> None:
    names = [v.name for v in labels]
    dup = {n for n in names if names.count(n) > 1}
    if dup:
        raise VariableNameError(f"duplicate variable names: {sorted(dup)}")


def _as_labels(variables) -> tuple[VariableLabel, ...]:
    out = []
    for v in variables:
        if isinstance(v, VariableLabel):
            out.append(v)
        else:
            name, card = v
            out.append(VariableLabel(name, int(card)))
    return tuple(out)


class JointDistribution:
    """Joint probability tensor over named finite variables.

    ``mass`` has one axis per variable in declaration order (row-major layout).
    Instances are treated as immutable; the underlying array is made read-only.
    """

    __slots__ = ("variables", "mass", "_index")

    def __init__(self, variables, mass, *, tol: float = NORMALIZATION_TOL):
        variables = _as_labels(variables)
        _check_unique(variables)
        shape = tuple(v.cardinality for v in variables)
        arr = np.array(mass, dtype=float)
        if arr.size != int(np.prod(shape, dtype=np.int64)):
            raise ShapeError(f"mass has {arr.size} entries, variables need shape {shape}")
        arr = arr.reshape(shape)
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("probability mass must be finite and non-negative")
        total = arr.sum()
        if abs(total - 1.0) > tol:
            raise ValueError(f"probability mass sums to {total!r}, not 1")
        arr.setflags(write=False)
        self.variables = variables
        self.mass = arr
        self._index = {v.name: i for i, v in enumerate(variables)}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.mass.shape

    def label(self, name: str) -> VariableLabel:
        return self.variables[self.axis(name)]

    def axis(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise VariableNameError(f"unknown variable {name!r}; have {list(self.names)}") from None

    def prob(self, **assignment) -> float:
        """Probability of a full or partial assignment, e.g. ``d.prob(X=1)``."""
        d = marginalize(self, assignment.keys())
        return float(d.mass[tuple(assignment[n] for n in d.names)])

    def __eq__(self, other):
        if not isinstance(other, JointDistribution):
            return NotImplemented
        return self.variables == other.variables and np.array_equal(self.mass, other.mass)

    def __hash__(self):
        return hash((self.variables, self.mass.tobytes()))

    def __repr__(self):
        vs = ", ".join(f"{v.name}:{v.cardinality}" for v in self.variables)
        return f"JointDistribution({vs})"

    @classmethod
    def point_mass(cls, variables, values: Sequence[int]) -> "JointDistribution":
        variables = _as_labels(variables)
        m = np.zeros(tuple(v.cardinality for v in variables))
        m[tuple(values)] = 1.0
        return cls(variables, m)

    @classmethod
    def uniform(cls, variables) -> "JointDistribution":
        variables = _as_labels(variables)
        shape = tuple(v.cardinality for v in variables)
        return cls(variables, np.full(shape, 1.0 / np.prod(shape)))

    @classmethod
    def empty(cls) -> "JointDistribution":
        """The distribution of the empty tuple."""
        return cls((), np.ones(()))


class Kernel:
    """Conditional probability table ``P(outputs | inputs)``.

    ``table`` has shape ``input_cards + output_cards``; each slice over the
    output axes is a probability vector.
    """

    __slots__ = ("input_vars", "output_vars", "table")

    def __init__(self, input_vars, output_vars, table, *, tol: float = NORMALIZATION_TOL):
        input_vars = _as_labels(input_vars)
        output_vars = _as_labels(output_vars)
        _check_unique(input_vars + output_vars)
        in_shape = tuple(v.cardinality for v in input_vars)
        out_shape = tuple(v.cardinality for v in output_vars)
        arr = np.array(table, dtype=float)
        if arr.size != int(np.prod(in_shape + out_shape, dtype=np.int64)):
            raise ShapeError(f"kernel table has {arr.size} entries, expected shape {in_shape + out_shape}")
        arr = arr.reshape(in_shape + out_shape)
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise ValueError("kernel entries must be finite and non-negative")
        sums = arr.reshape(int(np.prod(in_shape, dtype=np.int64)), -1).sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
        if bad.size:
            row = np.unravel_index(bad[0], in_shape) if in_shape else ()
            raise ValueError(f"kernel row {tuple(int(i) for i in row)} sums to {sums[bad[0]]!r}")
        arr.setflags(write=False)
        self.input_vars = input_vars
        self.output_vars = output_vars
        self.table = arr

    @property
    def rows(self) -> np.ndarray:
        """Table flattened to ``(n_input_tuples, n_output_tuples)``."""
        n_in = int(np.prod([v.cardinality for v in self.input_vars], dtype=np.int64))
        return self.table.reshape(n_in, -1)

    def __eq__(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        return (
            self.input_vars == other.input_vars
            and self.output_vars == other.output_vars
            and np.array_equal(self.table, other.table)
        )

    def __hash__(self):
        return hash((self.input_vars, self.output_vars, self.table.tobytes()))

    def __repr__(self):
        ins = ",".join(v.name for v in self.input_vars)
        outs = ",".join(v.name for v in self.output_vars)
        return f"Kernel({outs} | {ins})"

    @classmethod
    def deterministic(cls, input_vars, output_vars, fn) -> "Kernel":
        """Kernel putting mass 1 on ``fn(*inputs)`` (a tuple of output symbols)."""
        input_vars = _as_labels(input_vars)
        output_vars = _as_labels(output_vars)
        in_shape = tuple(v.cardinality for v in input_vars)
        t = np.zeros(in_shape + tuple(v.cardinality for v in output_vars))
        for idx in np.ndindex(*in_shape):
            out = fn(*idx)
            if not isinstance(out, tuple):
                out = (out,)
            t[idx + tuple(out)] = 1.0
        return cls(input_vars, output_vars, t)

    @classmethod
    def identity(cls, src: VariableLabel, dst_name: str) -> "Kernel":
        return cls([src], [VariableLabel(dst_name, src.cardinality)], np.eye(src.cardinality))


def _names(vars_) -> list[str]:
    if isinstance(vars_, str):
        return [vars_]
    return list(vars_)


def marginalize(dist: JointDistribution, keep: Iterable[str]) -> JointDistribution:
    """Sum out every variable not in ``keep``; kept variables retain their order."""
    keep = set(_names(keep))
    for n in keep:
        dist.axis(n)
    if len(keep) == len(dist.variables):
        return dist
    drop = tuple(i for i, v in enumerate(dist.variables) if v.name not in keep)
    kept = [v for v in dist.variables if v.name in keep]
    return JointDistribution(kept, dist.mass.sum(axis=drop))


def attach(dist: JointDistribution, k: Kernel) -> JointDistribution:
    """Extend ``dist`` by drawing ``k.output_vars`` from ``k`` given its inputs.

    The new variables are appended after the existing ones.
    """
    for v in k.input_vars:
        have = dist.label(v.name)
        if have.cardinality != v.cardinality:
            raise ShapeError(f"{v.name}: distribution has cardinality {have.cardinality}, kernel expects {v.cardinality}")
    clash = [v.name for v in k.output_vars if v.name in dist._index]
    if clash:
        raise VariableNameError(f"kernel outputs already present in distribution: {clash}")
    n_old = len(dist.variables)
    n_new = len(k.output_vars)
    if n_old + n_new > len(string.ascii_letters):
        raise ShapeError("too many variables for attach")
    letters = string.ascii_letters
    d_sub = letters[:n_old]
    k_sub = "".join(d_sub[dist.axis(v.name)] for v in k.input_vars) + letters[n_old:n_old + n_new]
    mass = np.einsum(f"{d_sub},{k_sub}->{d_sub}{letters[n_old:n_old + n_new]}", dist.mass, k.table)
    return JointDistribution(dist.variables + k.output_vars, mass)


def product(*dists: JointDistribution) -> JointDistribution:
    """Independent product of distributions over disjoint variables."""
    out = JointDistribution.empty()
    for d in dists:
        out = JointDistribution(out.variables + d.variables, np.multiply.outer(out.mass, d.mass))
    return out


def _clamp(value: float, what: str) -> float:
    if value >= 0.0:
        return value
    if value >= -CLAMP_TOL:
        return 0.0
    raise NumericalConsistencyError(f"{what} = {value!r} is negative beyond rounding")


def _entropy_of_array(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def entropy(dist: JointDistribution, vars_: Iterable[str]) -> float:
    """Shannon entropy (bits) of the marginal on ``vars_``; 0 for the empty set."""
    names = _names(vars_)
    if not names:
        return 0.0
    return _clamp(_entropy_of_array(marginalize(dist, names).mass), "entropy")


def _check_disjoint(*sets: list[str]) -> None:
    seen: set[str] = set()
    for s in sets:
        if len(set(s)) != len(s):
            raise ArgumentError(f"repeated variable in {s}")
        overlap = seen.intersection(s)
        if overlap:
            raise ArgumentError(f"variable sets overlap on {sorted(overlap)}")
        seen.update(s)


def mutual_info(dist: JointDistribution, a: Iterable[str], b: Iterable[str]) -> float:
    """I(A;B) in bits."""
    return cond_mutual_info(dist, a, b, ())


def cond_mutual_info(dist: JointDistribution, a, b, c=()) -> float:
    """I(A;B|C) = H(A,C) + H(B,C) - H(A,B,C) - H(C), in bits."""
    a, b, c = _names(a), _names(b), _names(c)
    _check_disjoint(a, b, c)
    for n in a + b + c:
        dist.axis(n)
    if not a or not b:
        return 0.0
    sub = marginalize(dist, a + b + c)
    h_abc = _entropy_of_array(sub.mass)
    h_ac = _entropy_of_array(marginalize(sub, a + c).mass)
    h_bc = _entropy_of_array(marginalize(sub, b + c).mass)
    h_c = _entropy_of_array(marginalize(sub, c).mass) if c else 0.0
    return _clamp(h_ac + h_bc - h_abc - h_c, f"I({','.join(a)};{','.join(b)}|{','.join(c)})")


def cond_entropy(dist: JointDistribution, a, c=()) -> float:
    """H(A|C) in bits."""
    a, c = _names(a), _names(c)
    _check_disjoint(a, c)
    return _clamp(entropy(dist, a + c) - entropy(dist, c), "conditional entropy")


@dataclass(frozen=True)
class MarkovCheck:
    holds: bool
    witness: float

    def __bool__(self):
        return self.holds


def is_markov(dist: JointDistribution, x, y, z, tol: float = 1e-10) -> MarkovCheck:
    """Test the chain X - Y - Z via I(X;Z|Y) <= tol; the CMI is the witness."""
    if tol <= 0:
        raise ArgumentError("tol must be positive")
    w = cond_mutual_info(dist, x, z, y)
    return MarkovCheck(w <= tol, w)


def empirical(variables, samples: np.ndarray) -> JointDistribution:
    """Empirical joint law of integer sample rows (one column per variable)."""
    variables = _as_labels(variables)
    samples = np.asarray(samples)
    shape = tuple(v.cardinality for v in variables)
    flat = np.ravel_multi_index(tuple(samples.T), shape)
    counts = np.bincount(flat, minlength=int(np.prod(shape)))
    return JointDistribution(variables, counts.reshape(shape) / counts.sum(), tol=1e-9)
