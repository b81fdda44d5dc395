"""Rate terms of the successive key-agreement inner bound and the degraded-case region.

All rates are in bits per combined channel use.  ``alpha`` is the fraction of
channel uses spent on the forward channel (``nf / (nf + nb)``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from .channels import SystemModel, verify_special_case
from .errors import ArgumentError, FormatError, PreconditionError, ShapeError, ValidationError
from .infocore import JointDistribution, Kernel, VariableLabel, attach, cond_mutual_info, mutual_info

ZERO_SNAP = 1e-12
ROW_TOL = 1e-9

AUX_NAMES = ("T1f", "T2f", "T1fb", "T2fb", "T1b", "T2b")


def default_cardinalities(model: SystemModel) -> dict[str, int]:
    y3 = model.card("Y3f")
    x3 = model.card("X3b")
    return {"T1f": 2, "T2f": 2, "T1fb": y3 + 1, "T2fb": y3 + 1, "T1b": x3 + 1, "T2b": x3 + 1}


def _check_rows(arr: np.ndarray, n_out_axes: int, what: str) -> None:
    sums = arr.sum(axis=tuple(range(arr.ndim - n_out_axes, arr.ndim)))
    if np.any(np.abs(sums - 1.0) > ROW_TOL):
        raise ValidationError(f"{what}: rows must sum to 1 (got {np.round(sums, 12).ravel().tolist()})")


@dataclass(frozen=True, eq=False)
class AuxiliaryScheme:
    """Auxiliary distributions of the inner-bound factorization.

    Array layouts (last axes are the distributed variable):

    ``p_t1f[t1f]``, ``p_t2f[t2f]``, ``x1f_given_t1f[t1f, x1f]``,
    ``x2f_given_t2f[t2f, x2f]``, ``tfb_given_y3f[y3f, t1fb, t2fb]``,
    ``p_tb[t1b, t2b]``, ``x3b_given_tb[t1b, t2b, x3b]``.
    """

    alpha: float
    p_t1f: np.ndarray
    p_t2f: np.ndarray
    x1f_given_t1f: np.ndarray
    x2f_given_t2f: np.ndarray
    tfb_given_y3f: np.ndarray
    p_tb: np.ndarray
    x3b_given_tb: np.ndarray

    def __post_init__(self):
        a = float(self.alpha)
        if not 0.0 <= a <= 1.0:
            raise ValidationError(f"alpha={self.alpha!r} outside [0, 1]")
        object.__setattr__(self, "alpha", a)
        for name in ("p_t1f", "p_t2f", "x1f_given_t1f", "x2f_given_t2f", "tfb_given_y3f", "p_tb", "x3b_given_tb"):
            arr = np.array(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValidationError(f"{name}: entries must be finite and non-negative")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        expected_ndim = {"p_t1f": 1, "p_t2f": 1, "x1f_given_t1f": 2, "x2f_given_t2f": 2,
                         "tfb_given_y3f": 3, "p_tb": 2, "x3b_given_tb": 3}
        for name, nd in expected_ndim.items():
            if getattr(self, name).ndim != nd:
                raise ShapeError(f"{name}: expected {nd} axes, got {getattr(self, name).ndim}")
        _check_rows(self.p_t1f, 1, "p_t1f")
        _check_rows(self.p_t2f, 1, "p_t2f")
        _check_rows(self.x1f_given_t1f, 1, "x1f_given_t1f")
        _check_rows(self.x2f_given_t2f, 1, "x2f_given_t2f")
        _check_rows(self.tfb_given_y3f, 2, "tfb_given_y3f")
        _check_rows(self.p_tb, 2, "p_tb")
        _check_rows(self.x3b_given_tb, 1, "x3b_given_tb")
        if self.x1f_given_t1f.shape[0] != self.p_t1f.shape[0]:
            raise ShapeError("x1f_given_t1f rows must match |T1f|")
        if self.x2f_given_t2f.shape[0] != self.p_t2f.shape[0]:
            raise ShapeError("x2f_given_t2f rows must match |T2f|")
        if self.x3b_given_tb.shape[:2] != self.p_tb.shape:
            raise ShapeError("x3b_given_tb leading axes must match p_tb")

    @property
    def cardinalities(self) -> dict[str, int]:
        return {
            "T1f": self.p_t1f.shape[0],
            "T2f": self.p_t2f.shape[0],
            "T1fb": self.tfb_given_y3f.shape[1],
            "T2fb": self.tfb_given_y3f.shape[2],
            "T1b": self.p_tb.shape[0],
            "T2b": self.p_tb.shape[1],
        }

    def with_alpha(self, alpha: float) -> "AuxiliaryScheme":
        return AuxiliaryScheme(alpha, self.p_t1f, self.p_t2f, self.x1f_given_t1f, self.x2f_given_t2f,
                               self.tfb_given_y3f, self.p_tb, self.x3b_given_tb)

    def __eq__(self, other):
        if not isinstance(other, AuxiliaryScheme):
            return NotImplemented
        return self.alpha == other.alpha and all(
            np.array_equal(getattr(self, f), getattr(other, f)) for f in _ARRAY_FIELDS)

    def to_json(self) -> dict:
        out = {"alpha": repr(self.alpha)}
        for f in _ARRAY_FIELDS:
            arr = getattr(self, f)
            out[f] = {"shape": list(arr.shape), "values": [repr(float(v)) for v in arr.ravel()]}
        return out

    @classmethod
    def from_json(cls, obj) -> "AuxiliaryScheme":
        if not isinstance(obj, dict):
            raise FormatError("scheme: expected an object")
        missing = [f for f in ("alpha",) + _ARRAY_FIELDS if f not in obj]
        if missing:
            raise FormatError(f"scheme: missing fields {missing}")
        try:
            alpha = float(Fraction(str(obj["alpha"])))
        except (ValueError, ZeroDivisionError):
            raise FormatError(f"scheme.alpha: cannot parse {obj['alpha']!r}") from None
        arrays = {}
        for f in _ARRAY_FIELDS:
            item = obj[f]
            if not isinstance(item, dict) or set(item) != {"shape", "values"}:
                raise FormatError(f"scheme.{f}: expected an object with 'shape' and 'values'")
            shape = item["shape"]
            if not isinstance(shape, list) or not all(isinstance(s, int) and s >= 1 for s in shape):
                raise FormatError(f"scheme.{f}.shape: expected positive integers")
            try:
                vals = np.array([float(v) for v in item["values"]])
            except (TypeError, ValueError):
                raise FormatError(f"scheme.{f}.values: expected decimal strings") from None
            if vals.size != int(np.prod(shape)):
                raise FormatError(f"scheme.{f}: {vals.size} values for shape {shape}")
            arrays[f] = vals.reshape(shape)
        return cls(alpha, **arrays)


_ARRAY_FIELDS = ("p_t1f", "p_t2f", "x1f_given_t1f", "x2f_given_t2f", "tfb_given_y3f", "p_tb", "x3b_given_tb")


def degenerate_scheme(model: SystemModel, alpha: float = 0.5) -> AuxiliaryScheme:
    """All auxiliaries constant and every input deterministic (symbol 0)."""
    e = lambda n: np.eye(n)[0]
    return AuxiliaryScheme(
        alpha,
        np.ones(1), np.ones(1),
        e(model.card("X1f"))[None, :], e(model.card("X2f"))[None, :],
        np.ones((model.card("Y3f"), 1, 1)),
        np.ones((1, 1)),
        e(model.card("X3b"))[None, None, :],
    )


def save_scheme(scheme: AuxiliaryScheme, path) -> None:
    Path(path).write_text(json.dumps(scheme.to_json(), indent=2) + "\n")


def load_scheme(path) -> AuxiliaryScheme:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return AuxiliaryScheme.from_json(obj)


# ---------------------------------------------------------------------------
# joint assembly

def assemble_forward_joint(model: SystemModel, scheme: AuxiliaryScheme) -> JointDistribution:
    """Joint over T1f, T2f, X1f, X2f, Y1f, Y2f, Y3f, T1fb, T2fb."""
    c = scheme.cardinalities
    if scheme.x1f_given_t1f.shape[1] != model.card("X1f") or scheme.x2f_given_t2f.shape[1] != model.card("X2f"):
        raise ShapeError("input kernels do not match the channel input alphabets")
    if scheme.tfb_given_y3f.shape[0] != model.card("Y3f"):
        raise ShapeError("tfb_given_y3f rows do not match |Y3f|")
    t1f = VariableLabel("T1f", c["T1f"])
    t2f = VariableLabel("T2f", c["T2f"])
    x1f, x2f = model.forward.input_vars
    y3f = model.labels["Y3f"]
    d = JointDistribution([t1f, t2f], np.multiply.outer(scheme.p_t1f, scheme.p_t2f), tol=1e-9)
    d = attach(d, Kernel([t1f], [x1f], scheme.x1f_given_t1f, tol=ROW_TOL))
    d = attach(d, Kernel([t2f], [x2f], scheme.x2f_given_t2f, tol=ROW_TOL))
    d = attach(d, model.forward)
    d = attach(d, Kernel([y3f], [("T1fb", c["T1fb"]), ("T2fb", c["T2fb"])], scheme.tfb_given_y3f, tol=ROW_TOL))
    return d


def assemble_backward_joint(model: SystemModel, scheme: AuxiliaryScheme) -> JointDistribution:
    """Joint over T1b, T2b, X3b, Y1b, Y2b."""
    c = scheme.cardinalities
    if scheme.x3b_given_tb.shape[2] != model.card("X3b"):
        raise ShapeError("x3b_given_tb does not match |X3b|")
    t1b = VariableLabel("T1b", c["T1b"])
    t2b = VariableLabel("T2b", c["T2b"])
    d = JointDistribution([t1b, t2b], scheme.p_tb, tol=1e-9)
    d = attach(d, Kernel([t1b, t2b], model.backward.input_vars, scheme.x3b_given_tb, tol=ROW_TOL))
    return attach(d, model.backward)


# ---------------------------------------------------------------------------
# information quantities

# name -> (direction, A, B, C); every quantity entering the rate terms or the
# backward-budget constraints.
QUANTITIES: dict[str, tuple[str, tuple, tuple, tuple]] = {
    "I(T1f;Y3f|T2f)": ("f", ("T1f",), ("Y3f",), ("T2f",)),
    "I(T1f;X2f,Y2f,T2fb|T2f)": ("f", ("T1f",), ("X2f", "Y2f", "T2fb"), ("T2f",)),
    "I(T1fb;X1f,Y1f|T1f)": ("f", ("T1fb",), ("X1f", "Y1f"), ("T1f",)),
    "I(T1fb;X2f,Y2f,T2f,T2fb|T1f)": ("f", ("T1fb",), ("X2f", "Y2f", "T2f", "T2fb"), ("T1f",)),
    "I(T2f;Y3f|T1f)": ("f", ("T2f",), ("Y3f",), ("T1f",)),
    "I(T2f;X1f,Y1f,T1fb|T1f)": ("f", ("T2f",), ("X1f", "Y1f", "T1fb"), ("T1f",)),
    "I(T2fb;X2f,Y2f|T2f)": ("f", ("T2fb",), ("X2f", "Y2f"), ("T2f",)),
    "I(T2fb;X1f,Y1f,T1f,T1fb|T2f)": ("f", ("T2fb",), ("X1f", "Y1f", "T1f", "T1fb"), ("T2f",)),
    "I(T1f,T2f;Y3f)": ("f", ("T1f", "T2f"), ("Y3f",), ()),
    "I(T1fb;Y3f|X1f,Y1f,T1f)": ("f", ("T1fb",), ("Y3f",), ("X1f", "Y1f", "T1f")),
    "I(T2fb;Y3f|X2f,Y2f,T2f)": ("f", ("T2fb",), ("Y3f",), ("X2f", "Y2f", "T2f")),
    "I(T1b;Y1b)": ("b", ("T1b",), ("Y1b",), ()),
    "I(T1b;Y2b,T2b)": ("b", ("T1b",), ("Y2b", "T2b"), ()),
    "I(T2b;Y2b)": ("b", ("T2b",), ("Y2b",), ()),
    "I(T2b;Y1b,T1b)": ("b", ("T2b",), ("Y1b", "T1b"), ()),
    "I(T1b;T2b)": ("b", ("T1b",), ("T2b",), ()),
}
FORWARD_QUANTITIES = tuple(k for k, v in QUANTITIES.items() if v[0] == "f")
BACKWARD_QUANTITIES = tuple(k for k, v in QUANTITIES.items() if v[0] == "b")


def _evaluate(joint: JointDistribution, names: Sequence[str]) -> dict[str, float]:
    return {n: cond_mutual_info(joint, *QUANTITIES[n][1:]) for n in names}


def forward_quantities(model: SystemModel, scheme: AuxiliaryScheme) -> dict[str, float]:
    return _evaluate(assemble_forward_joint(model, scheme), FORWARD_QUANTITIES)


def backward_quantities(model: SystemModel, scheme: AuxiliaryScheme) -> dict[str, float]:
    return _evaluate(assemble_backward_joint(model, scheme), BACKWARD_QUANTITIES)


def information_quantities(model: SystemModel, scheme: AuxiliaryScheme) -> dict[str, float]:
    """All sixteen distinct mutual-information terms for ``scheme``."""
    return {**forward_quantities(model, scheme), **backward_quantities(model, scheme)}


def _pos(x: float) -> float:
    return x if x > ZERO_SNAP else 0.0


@dataclass(frozen=True)
class RateTerms:
    r1f: float
    r1fb: float
    r1b: float
    r2f: float
    r2fb: float
    r2b: float
    r12f: float

    def __post_init__(self):
        for k, v in self.__dict__.items():
            if v < 0:
                raise ValueError(f"{k} is negative")

    @property
    def bounds(self) -> tuple[float, float, float]:
        """(R1 bound, R2 bound, sum-rate bound) of the polytope."""
        a = self.r1f + self.r1fb + self.r1b
        b = self.r2f + self.r2fb + self.r2b
        c = self.r12f + self.r1fb + self.r2fb + self.r1b + self.r2b
        return a, b, c


def rate_terms_from_quantities(q: dict[str, float], alpha: float) -> RateTerms:
    """Combine information quantities into the seven positive-part rate terms."""
    abar = 1.0 - alpha
    leak1 = q["I(T1f;X2f,Y2f,T2fb|T2f)"]
    leak2 = q["I(T2f;X1f,Y1f,T1fb|T1f)"]
    return RateTerms(
        r1f=alpha * _pos(q["I(T1f;Y3f|T2f)"] - leak1),
        r1fb=alpha * _pos(q["I(T1fb;X1f,Y1f|T1f)"] - q["I(T1fb;X2f,Y2f,T2f,T2fb|T1f)"]),
        r1b=abar * _pos(q["I(T1b;Y1b)"] - q["I(T1b;Y2b,T2b)"]),
        r2f=alpha * _pos(q["I(T2f;Y3f|T1f)"] - leak2),
        r2fb=alpha * _pos(q["I(T2fb;X2f,Y2f|T2f)"] - q["I(T2fb;X1f,Y1f,T1f,T1fb|T2f)"]),
        r2b=abar * _pos(q["I(T2b;Y2b)"] - q["I(T2b;Y1b,T1b)"]),
        r12f=alpha * _pos(q["I(T1f,T2f;Y3f)"] - leak1 - leak2),
    )


def rate_terms(model: SystemModel, scheme: AuxiliaryScheme) -> RateTerms:
    return rate_terms_from_quantities(information_quantities(model, scheme), scheme.alpha)


@dataclass(frozen=True)
class ConstraintSlack:
    c1: float
    c2: float
    c_sum: float

    @property
    def feasible(self) -> bool:
        return self.c1 >= 0 and self.c2 >= 0 and self.c_sum >= 0


def slack_from_quantities(q: dict[str, float], nf, nb) -> ConstraintSlack:
    f1 = q["I(T1fb;Y3f|X1f,Y1f,T1f)"]
    f2 = q["I(T2fb;Y3f|X2f,Y2f,T2f)"]
    b1 = q["I(T1b;Y1b)"]
    b2 = q["I(T2b;Y2b)"]
    return ConstraintSlack(
        c1=nb * b1 - nf * f1,
        c2=nb * b2 - nf * f2,
        c_sum=nb * (b1 + b2 - q["I(T1b;T2b)"]) - nf * (f1 + f2),
    )


def constraint_slack(model: SystemModel, scheme: AuxiliaryScheme, nf: int, nb: int) -> ConstraintSlack:
    """Backward-budget slacks for blocklengths ``nf`` (forward) and ``nb`` (backward)."""
    if nf < 0 or nb < 0 or nf + nb == 0:
        raise ArgumentError("nf, nb must be non-negative and not both zero")
    if abs(nf / (nf + nb) - scheme.alpha) > 1e-9:
        raise ArgumentError(f"nf/(nf+nb) = {nf / (nf + nb)!r} does not match alpha = {scheme.alpha!r}")
    return slack_from_quantities(information_quantities(model, scheme), nf, nb)


def blocklengths(alpha) -> tuple[int, int]:
    """Smallest (nf, nb) with nf/(nf+nb) == alpha (alpha rational, denominator <= 10**6)."""
    fr = Fraction(alpha).limit_denominator(10**6)
    return fr.numerator, fr.denominator - fr.numerator


# ---------------------------------------------------------------------------
# rate regions

def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _hull(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Convex hull, counter-clockwise, collinear points removed (monotone chain)."""
    pts = sorted(set(points))
    if len(pts) <= 1:
        return pts
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


@dataclass(frozen=True)
class RateRegion:
    """Downward-closed convex region in the (R1, R2) quadrant.

    ``vertices`` lists the polygon counter-clockwise from the origin;
    ``frontier`` is the upper-right boundary from the R2 axis to the R1 axis.
    """

    vertices: tuple[tuple[float, float], ...]

    @classmethod
    def from_points(cls, points) -> "RateRegion":
        pts = [(float(x), float(y)) for x, y in points]
        for x, y in pts:
            if x < 0 or y < 0 or not (np.isfinite(x) and np.isfinite(y)):
                raise ValueError(f"rate point ({x}, {y}) outside the non-negative quadrant")
        aug = [(0.0, 0.0)] + pts + [(x, 0.0) for x, _ in pts] + [(0.0, y) for _, y in pts]
        hull = _hull(aug)
        k = hull.index((0.0, 0.0))
        return cls(tuple(hull[k:] + hull[:k]))

    @property
    def frontier(self) -> tuple[tuple[float, float], ...]:
        if len(self.vertices) == 1:
            return self.vertices
        front = list(reversed(self.vertices[1:]))
        if front[0][0] != 0.0:
            front.insert(0, (0.0, 0.0))
        if front[-1][1] != 0.0:
            front.append((0.0, 0.0))
        return tuple(front)

    @property
    def max_r1(self) -> float:
        return max(x for x, _ in self.vertices)

    @property
    def max_r2(self) -> float:
        return max(y for _, y in self.vertices)

    def contains(self, point, tol: float = 1e-9) -> bool:
        return self.margin(point) >= -tol

    def margin(self, point) -> float:
        """Smallest signed distance of ``point`` to the region's supporting lines (>= 0 inside)."""
        x, y = float(point[0]), float(point[1])
        m = min(x, y)
        v = self.vertices
        if len(v) == 1:
            return min(m, -x, -y)
        if len(v) == 2:
            # a segment on an axis
            (ax, ay) = v[1]
            if ay == 0.0:
                return min(m, ax - x, -y)
            return min(m, ay - y, -x)
        for i in range(len(v)):
            a, b = v[i], v[(i + 1) % len(v)]
            ln = float(np.hypot(b[0] - a[0], b[1] - a[1]))
            m = min(m, _cross(a, b, (x, y)) / ln)
        return m


def inner_bound_polytope(terms: RateTerms) -> RateRegion:
    """Closed polytope R1 <= a, R2 <= b, R1 + R2 <= c in the non-negative quadrant."""
    a, b, c = terms.bounds
    a_eff, b_eff = min(a, c), min(b, c)
    pts = [(0.0, 0.0), (a_eff, 0.0), (a_eff, max(0.0, min(b_eff, c - a_eff))),
           (max(0.0, min(a_eff, c - b_eff)), b_eff), (0.0, b_eff)]
    return RateRegion.from_points(pts)


# ---------------------------------------------------------------------------
# degraded special case

@dataclass(frozen=True)
class CorollaryRates:
    r1_max: float
    r2_max: float
    feasible: bool
    slack: float
    mode: str


MODES = ("alpha-weighted", "paper-literal")


def corollary_quantities(model: SystemModel, p_x3b, t1fb_given_y3f, input_law) -> dict[str, float]:
    """I(T1fb;Y1f|Y2f), I(T1fb;Y3f|Y1f), I(X3b;Y2b|Y1b), I(X3b;Y1b) for a product input law."""
    p1, p2 = (np.asarray(p, dtype=float) for p in input_law)
    x1f, x2f = model.forward.input_vars
    fwd = JointDistribution([x1f, x2f], np.multiply.outer(p1, p2), tol=1e-9)
    fwd = attach(fwd, model.forward)
    k = np.asarray(t1fb_given_y3f, dtype=float)
    fwd = attach(fwd, Kernel([model.labels["Y3f"]], [("T1fb", k.shape[1])], k, tol=ROW_TOL))
    bwd = JointDistribution(model.backward.input_vars, np.asarray(p_x3b, dtype=float), tol=1e-9)
    bwd = attach(bwd, model.backward)
    return {
        "I(T1fb;Y1f|Y2f)": cond_mutual_info(fwd, ["T1fb"], ["Y1f"], ["Y2f"]),
        "I(T1fb;Y3f|Y1f)": cond_mutual_info(fwd, ["T1fb"], ["Y3f"], ["Y1f"]),
        "I(X3b;Y2b|Y1b)": cond_mutual_info(bwd, ["X3b"], ["Y2b"], ["Y1b"]),
        "I(X3b;Y1b)": mutual_info(bwd, ["X3b"], ["Y1b"]),
    }


def corollary_from_quantities(q: dict[str, float], alpha: float, mode: str = "alpha-weighted") -> CorollaryRates:
    if mode == "paper-literal":
        w_f = w_b = 1.0
    elif mode == "alpha-weighted":
        w_f, w_b = alpha, 1.0 - alpha
    else:
        raise ArgumentError(f"unknown mode {mode!r}; expected one of {MODES}")
    r1 = w_f * _pos(q["I(T1fb;Y1f|Y2f)"])
    r2 = w_b * _pos(q["I(X3b;Y2b|Y1b)"])
    slack = w_b * q["I(X3b;Y1b)"] - w_f * q["I(T1fb;Y3f|Y1f)"]
    return CorollaryRates(r1, r2, slack >= 0, slack, mode)


def corollary_rates(model: SystemModel, p_x3b, t1fb_given_y3f, input_law, alpha: float = 0.5,
                    mode: str = "alpha-weighted", tol: float = 1e-9) -> CorollaryRates:
    """Rate bounds and backward-budget constraint of the degraded special case.

    Raises
    ------
    PreconditionError
        If the model's kernels do not factorize along the required Markov chains.
    """
    report = verify_special_case(model, tol)
    if not report.ok:
        raise PreconditionError(
            f"model fails the Markov-chain preconditions (forward residual {report.forward_residual:.3g}, "
            f"backward residual {report.backward_residual:.3g})")
    if mode not in MODES:
        raise ArgumentError(f"unknown mode {mode!r}; expected one of {MODES}")
    return corollary_from_quantities(corollary_quantities(model, p_x3b, t1fb_given_y3f, input_law), alpha, mode)


def matched_corollary_inputs(model: SystemModel, scheme: AuxiliaryScheme):
    """Degraded-case inputs induced by a full scheme.

    Returns ``(p_x3b, t1fb_given_y3f, (p_x1f, p_x2f))`` as implied by the scheme's
    factorization, so inner-bound and special-case evaluations can be compared
    at the same operating point.
    """
    p_x1f = scheme.p_t1f @ scheme.x1f_given_t1f
    p_x2f = scheme.p_t2f @ scheme.x2f_given_t2f
    t1fb = scheme.tfb_given_y3f.sum(axis=2)
    p_x3b = np.einsum("ab,abx->x", scheme.p_tb, scheme.x3b_given_tb)
    return p_x3b, t1fb, (p_x1f, p_x2f)


def _peaked(rows: int, cells: int, weight: float) -> np.ndarray:
    """Row r puts ``weight`` on cell r mod cells and spreads the rest evenly."""
    out = np.full((rows, cells), (1.0 - weight) / max(cells - 1, 1))
    if cells == 1:
        return np.ones((rows, 1))
    out[np.arange(rows), np.arange(rows) % cells] = weight
    return out


def default_scheme(model: SystemModel, cardinalities: dict | None = None, alpha: float = 0.5) -> AuxiliaryScheme:
    """A fixed, non-degenerate scheme used for demos and self-validation runs."""
    c = {**default_cardinalities(model), **(cardinalities or {})}
    x1, x2, y3, x3 = (model.card(n) for n in ("X1f", "X2f", "Y3f", "X3b"))
    p_t1f = np.linspace(1.0, 2.0, c["T1f"])
    p_t2f = np.linspace(2.0, 1.0, c["T2f"])
    t1 = _peaked(y3, c["T1fb"], 0.7)
    t2 = _peaked(y3, c["T2fb"], 0.6)[::-1]
    tfb = t1[:, :, None] * t2[:, None, :]
    p_tb = np.outer(np.linspace(1.0, 2.0, c["T1b"]), np.linspace(2.0, 1.0, c["T2b"])) + np.eye(c["T1b"], c["T2b"])
    x3b = np.empty((c["T1b"], c["T2b"], x3))
    for i in range(c["T1b"]):
        for j in range(c["T2b"]):
            x3b[i, j] = _peaked(1, x3, 0.85)[0][np.roll(np.arange(x3), (i + 2 * j) % x3)]
    return AuxiliaryScheme(
        alpha,
        p_t1f / p_t1f.sum(), p_t2f / p_t2f.sum(),
        _peaked(c["T1f"], x1, 0.85), _peaked(c["T2f"], x2, 0.8),
        tfb, p_tb / p_tb.sum(), x3b,
    )
