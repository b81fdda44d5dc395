"""System model: forward multiple-access channel and backward broadcast channel.

The forward channel maps ``(X1f, X2f)`` to ``(Y1f, Y2f, Y3f)`` (outputs seen by
users 1, 2 and 3); the backward channel maps ``X3b`` to ``(Y1b, Y2b)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, RangeError, ValidationError
from .infocore import Kernel, VariableLabel

FORWARD_INPUTS = ("X1f", "X2f")
FORWARD_OUTPUTS = ("Y1f", "Y2f", "Y3f")
BACKWARD_INPUTS = ("X3b",)
BACKWARD_OUTPUTS = ("Y1b", "Y2b")
CANONICAL_NAMES = FORWARD_INPUTS + FORWARD_OUTPUTS + BACKWARD_INPUTS + BACKWARD_OUTPUTS

LOAD_ROW_TOL = 1e-9


@dataclass(frozen=True)
class SystemModel:
    forward: Kernel
    backward: Kernel

    def __post_init__(self):
        f_in = tuple(v.name for v in self.forward.input_vars)
        f_out = tuple(v.name for v in self.forward.output_vars)
        b_in = tuple(v.name for v in self.backward.input_vars)
        b_out = tuple(v.name for v in self.backward.output_vars)
        if (f_in, f_out) != (FORWARD_INPUTS, FORWARD_OUTPUTS):
            raise ValueError(f"forward kernel must map {FORWARD_INPUTS} -> {FORWARD_OUTPUTS}, got {f_in} -> {f_out}")
        if (b_in, b_out) != (BACKWARD_INPUTS, BACKWARD_OUTPUTS):
            raise ValueError(f"backward kernel must map {BACKWARD_INPUTS} -> {BACKWARD_OUTPUTS}, got {b_in} -> {b_out}")

    @property
    def labels(self) -> dict[str, VariableLabel]:
        vs = (
            self.forward.input_vars + self.forward.output_vars
            + self.backward.input_vars + self.backward.output_vars
        )
        return {v.name: v for v in vs}

    def card(self, name: str) -> int:
        return self.labels[name].cardinality


@dataclass(frozen=True)
class Example1Params:
    """Crossover probabilities of the four independent noise bits E1..E4.

    Values are nominally in (0, 0.5]; the closed endpoints are accepted so the
    noiseless and fully-random limits can be built.
    """

    p1: float = 0.1
    p2: float = 0.1
    p3: float = 0.1
    p4: float = 0.1

    def __post_init__(self):
        for name in ("p1", "p2", "p3", "p4"):
            p = getattr(self, name)
            if not (0.0 <= p <= 0.5):
                raise RangeError(f"{name}={p!r} outside [0, 0.5]")


def _bsc(p: float) -> np.ndarray:
    return np.array([[1.0 - p, p], [p, 1.0 - p]])


def build_example1(params: Example1Params | None = None, **kw) -> SystemModel:
    """Binary example: Y2f = X1f AND X2f, Y1f = Y2f + E1, Y3f = Y1f + E2,
    Y2b = X3b + E3, Y1b = Y2b + E4 (additions mod 2)."""
    if params is None:
        params = Example1Params(**kw)
    elif kw:
        raise TypeError("pass either params or keyword probabilities, not both")
    e1, e2, e3, e4 = (_bsc(p) for p in (params.p1, params.p2, params.p3, params.p4))
    fwd = np.zeros((2, 2, 2, 2, 2))
    for x1 in range(2):
        for x2 in range(2):
            y2 = x1 * x2
            # axes: y1, y2, y3
            fwd[x1, x2, :, y2, :] = e1[y2][:, None] * e2
    bwd = np.zeros((2, 2, 2))
    for x3 in range(2):
        # axes: y1b, y2b
        bwd[x3] = (e3[x3][:, None] * e4).T
    return SystemModel(
        Kernel([("X1f", 2), ("X2f", 2)], [("Y1f", 2), ("Y2f", 2), ("Y3f", 2)], fwd),
        Kernel([("X3b", 2)], [("Y1b", 2), ("Y2b", 2)], bwd),
    )


# ---------------------------------------------------------------------------
# JSON model files

def _kernel_to_json(k: Kernel) -> dict:
    in_shape = tuple(v.cardinality for v in k.input_vars)
    rows = []
    for idx, row in zip(np.ndindex(*in_shape), k.rows):
        rows.append({"in": [int(i) for i in idx], "probs": [repr(float(p)) for p in row]})
    return {
        "inputs": [v.name for v in k.input_vars],
        "outputs": [v.name for v in k.output_vars],
        "rows": rows,
    }


def system_to_json(model: SystemModel) -> dict:
    return {
        "variables": {n: model.card(n) for n in CANONICAL_NAMES},
        "forward": _kernel_to_json(model.forward),
        "backward": _kernel_to_json(model.backward),
    }


def save_system(model: SystemModel, path) -> None:
    Path(path).write_text(json.dumps(system_to_json(model), indent=2) + "\n")


def _parse_prob(s, where: str) -> float:
    if isinstance(s, bool) or not isinstance(s, (str, int, float)):
        raise FormatError(f"{where}: probability must be a decimal string, got {s!r}")
    try:
        p = float(s)
    except ValueError:
        raise FormatError(f"{where}: cannot parse {s!r} as a number") from None
    if not np.isfinite(p):
        raise FormatError(f"{where}: non-finite probability {s!r}")
    if p < 0:
        raise ValidationError(f"{where}: negative probability {s!r}")
    return p


def _kernel_from_json(obj, key: str, cards: dict[str, int], want_in, want_out) -> Kernel:
    if not isinstance(obj, dict):
        raise FormatError(f"{key}: expected an object")
    extra = set(obj) - {"inputs", "outputs", "rows"}
    if extra:
        raise FormatError(f"{key}: unexpected fields {sorted(extra)}")
    for fld in ("inputs", "outputs", "rows"):
        if fld not in obj:
            raise FormatError(f"{key}: missing field {fld!r}")
    for fld, want in (("inputs", want_in), ("outputs", want_out)):
        got = obj[fld]
        if not isinstance(got, list) or not all(isinstance(n, str) for n in got):
            raise FormatError(f"{key}.{fld}: expected a list of names")
        for n in got:
            if n not in CANONICAL_NAMES:
                raise FormatError(f"{key}.{fld}: unknown variable name {n!r}")
        if tuple(got) != want:
            raise FormatError(f"{key}.{fld}: expected {list(want)}, got {got}")
    in_shape = tuple(cards[n] for n in want_in)
    out_shape = tuple(cards[n] for n in want_out)
    n_out = int(np.prod(out_shape))
    table = np.full(in_shape + (n_out,), np.nan)
    rows = obj["rows"]
    if not isinstance(rows, list):
        raise FormatError(f"{key}.rows: expected a list")
    seen = set()
    for r, row in enumerate(rows):
        where = f"{key}.rows[{r}]"
        if not isinstance(row, dict) or set(row) != {"in", "probs"}:
            raise FormatError(f"{where}: expected an object with fields 'in' and 'probs'")
        idx = row["in"]
        if (
            not isinstance(idx, list) or len(idx) != len(in_shape)
            or not all(isinstance(i, int) and not isinstance(i, bool) for i in idx)
            or not all(0 <= i < c for i, c in zip(idx, in_shape))
        ):
            raise FormatError(f"{where}.in: invalid input tuple {idx!r} for cardinalities {in_shape}")
        if tuple(idx) in seen:
            raise FormatError(f"{where}.in: duplicate input tuple {idx}")
        seen.add(tuple(idx))
        probs = row["probs"]
        if not isinstance(probs, list) or len(probs) != n_out:
            raise FormatError(f"{where}.probs: expected {n_out} entries")
        vals = np.array([_parse_prob(p, f"{where}.probs[{j}]") for j, p in enumerate(probs)])
        total = vals.sum()
        if abs(total - 1.0) > LOAD_ROW_TOL:
            raise ValidationError(f"{where}: probabilities sum to {total!r}, not 1")
        if abs(total - 1.0) > 1e-12:
            vals = vals / total
        table[tuple(idx)] = vals
    if len(seen) != int(np.prod(in_shape)):
        raise FormatError(f"{key}.rows: expected {int(np.prod(in_shape))} rows, got {len(seen)}")
    return Kernel(
        [VariableLabel(n, cards[n]) for n in want_in],
        [VariableLabel(n, cards[n]) for n in want_out],
        table.reshape(in_shape + out_shape),
    )


def system_from_json(obj) -> SystemModel:
    if not isinstance(obj, dict):
        raise FormatError("top level: expected an object")
    extra = set(obj) - {"variables", "forward", "backward"}
    if extra:
        raise FormatError(f"top level: unexpected fields {sorted(extra)}")
    for fld in ("variables", "forward", "backward"):
        if fld not in obj:
            raise FormatError(f"top level: missing field {fld!r}")
    cards_obj = obj["variables"]
    if not isinstance(cards_obj, dict):
        raise FormatError("variables: expected an object")
    for n, c in cards_obj.items():
        if n not in CANONICAL_NAMES:
            raise FormatError(f"variables: unknown variable name {n!r}")
        if not isinstance(c, int) or isinstance(c, bool) or c < 1:
            raise FormatError(f"variables.{n}: cardinality must be a positive integer")
    missing = [n for n in CANONICAL_NAMES if n not in cards_obj]
    if missing:
        raise FormatError(f"variables: missing {missing}")
    fwd = _kernel_from_json(obj["forward"], "forward", cards_obj, FORWARD_INPUTS, FORWARD_OUTPUTS)
    bwd = _kernel_from_json(obj["backward"], "backward", cards_obj, BACKWARD_INPUTS, BACKWARD_OUTPUTS)
    return SystemModel(fwd, bwd)


def load_system(path) -> SystemModel:
    text = Path(path).read_text()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return system_from_json(obj)


# ---------------------------------------------------------------------------
# Structural Markov-chain check

@dataclass(frozen=True)
class SpecialCaseReport:
    forward_chain_ok: bool
    backward_chain_ok: bool
    forward_residual: float
    backward_residual: float
    degenerate: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.forward_chain_ok and self.backward_chain_ok

    def to_json(self) -> dict:
        return {
            "forwardChainOK": self.forward_chain_ok,
            "backwardChainOK": self.backward_chain_ok,
            "witnesses": {"forwardResidual": self.forward_residual, "backwardResidual": self.backward_residual},
            "degenerate": {k: list(v) for k, v in self.degenerate.items()},
        }


def _averaged_conditional(joint: np.ndarray, given_axis: int, out_axis: int):
    """Average P(out | given, context) over every context with positive mass.

    ``joint[ctx, ..., given, ..., out]`` is flattened so that every axis other
    than ``given_axis`` and ``out_axis`` counts as context.  Returns the
    averaged conditional (given x out) and the given-values that never carry
    mass (left uniform).
    """
    moved = np.moveaxis(joint, (given_axis, out_axis), (-2, -1))
    ng, no = moved.shape[-2:]
    ctx = moved.reshape(-1, ng, no)
    tot = ctx.sum(axis=-1)
    cond = np.full((ng, no), 1.0 / no)
    degenerate = []
    for g in range(ng):
        live = tot[:, g] > 0
        if not np.any(live):
            degenerate.append(g)
            continue
        cond[g] = (ctx[live, g, :] / tot[live, g][:, None]).mean(axis=0)
    return cond, degenerate


def verify_special_case(model: SystemModel, tol: float = 1e-9) -> SpecialCaseReport:
    """Check the kernel factorizations behind (X1f,X2f)-Y2f-Y1f-Y3f and X3b-Y2b-Y1b.

    The forward kernel must equal P(y2f|x)·P(y1f|y2f)·P(y3f|y1f) entrywise and the
    backward kernel P(y2b|x3b)·P(y1b|y2b), with the inner conditionals estimated
    by uniform averaging over inputs.  This is independent of any input law.
    """
    W = model.forward.table  # x1, x2, y1, y2, y3
    nx = W.shape[0] * W.shape[1]
    Wf = W.reshape((nx,) + W.shape[2:])  # x, y1, y2, y3
    p_y2 = Wf.sum(axis=(1, 3))  # x, y2
    joint_y1y2 = Wf.sum(axis=3)  # x, y1, y2
    c12, deg_y2 = _averaged_conditional(joint_y1y2, given_axis=2, out_axis=1)  # y2 -> y1
    c13, deg_y1 = _averaged_conditional(Wf, given_axis=1, out_axis=3)  # y1 -> y3, ctx (x, y2)
    approx = p_y2[:, None, :, None] * c12.T[None, :, :, None] * c13[None, :, None, :]
    f_res = float(np.max(np.abs(approx - Wf)))

    B = model.backward.table  # x3, y1b, y2b
    p_y2b = B.sum(axis=1)  # x3, y2b
    c21, deg_y2b = _averaged_conditional(B, given_axis=2, out_axis=1)  # y2b -> y1b
    approx_b = p_y2b[:, None, :] * c21.T[None, :, :]
    b_res = float(np.max(np.abs(approx_b - B)))

    degenerate = {}
    if deg_y2:
        degenerate["Y2f"] = tuple(deg_y2)
    if deg_y1:
        degenerate["Y1f"] = tuple(deg_y1)
    if deg_y2b:
        degenerate["Y2b"] = tuple(deg_y2b)
    return SpecialCaseReport(f_res <= tol, b_res <= tol, f_res, b_res, degenerate)
