"""Grid + random-restart search over auxiliary schemes.

Both searches exploit the fact that the forward and backward parts of a
scheme only interact through a handful of scalar information quantities: the
forward and backward grids are evaluated once each, and every
(alpha, forward, backward) combination is then scored by cheap vectorized
arithmetic.  The scheme *stream* order is alpha-major, then forward grid,
then backward grid, then the random restarts of that alpha.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator

import numpy as np

from .channels import SystemModel, verify_special_case
from .errors import ArgumentError, CostError, PreconditionError
from .regions import (
    BACKWARD_QUANTITIES,
    FORWARD_QUANTITIES,
    MODES,
    ZERO_SNAP,
    AuxiliaryScheme,
    RateRegion,
    backward_quantities,
    corollary_quantities,
    default_cardinalities,
    forward_quantities,
)

RNG_ALGORITHM = "numpy.PCG64"
TIE_CAP = 4096
CHUNK = 200_000


def default_alpha_grid(max_denominator: int = 10) -> tuple[Fraction, ...]:
    """All rationals in [0, 1] with denominator <= ``max_denominator`` (Farey sequence)."""
    vals = {Fraction(n, d) for d in range(1, max_denominator + 1) for n in range(d + 1)}
    return tuple(sorted(vals))


def fmt(x: float) -> str:
    """Decimal string with 12 significant digits."""
    s = format(float(x), ".12g")
    return "0" if s == "-0" else s


@dataclass(frozen=True)
class SearchConfig:
    cardinalities: dict = field(default_factory=dict)
    alpha_grid: tuple = field(default_factory=default_alpha_grid)
    grid_step: float = 0.5
    random_restarts: int = 0
    seed: int = 0
    refinement: str = "none"
    refine_iterations: int = 20
    refine_tolerance: float = 1e-9
    mode: str = "alpha-weighted"
    max_evaluations: int = 5_000_000

    def __post_init__(self):
        if not 0 < self.grid_step <= 0.5:
            raise ArgumentError(f"grid_step must lie in (0, 0.5], got {self.grid_step}")
        m = round(1.0 / self.grid_step)
        if abs(m * self.grid_step - 1.0) > 1e-9:
            raise ArgumentError(f"grid_step must be 1/m for an integer m, got {self.grid_step}")
        if self.random_restarts < 0:
            raise ArgumentError("random_restarts must be >= 0")
        grid = tuple(Fraction(a).limit_denominator(10**6) if not isinstance(a, Fraction) else a
                     for a in self.alpha_grid)
        if not grid or any(not 0 <= a <= 1 for a in grid):
            raise ArgumentError("alpha_grid must be non-empty with values in [0, 1]")
        object.__setattr__(self, "alpha_grid", grid)
        object.__setattr__(self, "cardinalities", dict(self.cardinalities))
        if self.refinement not in ("none", "coordinate-ascent"):
            raise ArgumentError(f"unknown refinement {self.refinement!r}")
        if self.mode not in MODES:
            raise ArgumentError(f"unknown mode {self.mode!r}")
        if not 0 <= self.seed < 2**64:
            raise ArgumentError("seed must be a 64-bit unsigned integer")

    @property
    def lattice(self) -> int:
        return round(1.0 / self.grid_step)

    def to_json(self) -> dict:
        return {
            "cardinalities": dict(sorted(self.cardinalities.items())),
            "alphaGrid": [f"{a.numerator}/{a.denominator}" for a in self.alpha_grid],
            "gridStep": fmt(self.grid_step),
            "randomRestarts": self.random_restarts,
            "seed": self.seed,
            "refinement": self.refinement,
            "refineIterations": self.refine_iterations,
            "refineTolerance": fmt(self.refine_tolerance),
            "mode": self.mode,
            "maxEvaluations": self.max_evaluations,
            "rng": RNG_ALGORITHM,
        }


# ---------------------------------------------------------------------------
# simplex lattices

def simplex_grid(k: int, m: int) -> np.ndarray:
    """All probability vectors of length ``k`` with entries in {0, 1/m, ..., 1}.

    Rows are in lexicographic order of their integer numerators.
    """
    if k == 1:
        return np.ones((1, 1))
    rows = []

    def rec(prefix, left, slots):
        if slots == 1:
            rows.append(prefix + [left])
            return
        for i in range(left + 1):
            rec(prefix + [i], left - i, slots - 1)

    rec([], m, k)
    return np.array(rows, dtype=float) / m


def simplex_grid_size(k: int, m: int) -> int:
    return math.comb(m + k - 1, k - 1)


@dataclass(frozen=True)
class Factor:
    """A block of ``rows`` probability vectors of length ``cells`` in a scheme."""

    name: str
    rows: int
    cells: int


class _Side:
    """Grid over one side (forward or backward) of a scheme: a list of factors."""

    def __init__(self, factors: list[Factor], m: int):
        self.factors = factors
        self.m = m
        self.grids = {c: simplex_grid(c, m) for c in {f.cells for f in factors}}

    @property
    def size(self) -> int:
        n = 1
        for f in self.factors:
            n *= simplex_grid_size(f.cells, self.m) ** f.rows
        return n

    def index_tuples(self) -> Iterator[tuple]:
        ranges = []
        for f in self.factors:
            ranges.extend([range(len(self.grids[f.cells]))] * f.rows)
        return itertools.product(*ranges)

    def item(self, idx: tuple) -> dict[str, np.ndarray]:
        out, pos = {}, 0
        for f in self.factors:
            g = self.grids[f.cells]
            out[f.name] = g[list(idx[pos:pos + f.rows])]
            pos += f.rows
        return out

    def first(self) -> dict[str, np.ndarray]:
        return self.item((0,) * sum(f.rows for f in self.factors))

    def sample(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        return {f.name: rng.dirichlet(np.ones(f.cells), size=f.rows) if f.cells > 1 else np.ones((f.rows, 1))
                for f in self.factors}


# ---------------------------------------------------------------------------
# the two search problems

def _pos(x):
    return np.where(x > ZERO_SNAP, x, 0.0)


class _Problem:
    kind: str
    forward: _Side
    backward: _Side

    def alphas(self, config: SearchConfig) -> tuple[Fraction, ...]:
        return config.alpha_grid

    def forward_q(self, item) -> np.ndarray:
        raise NotImplementedError

    def backward_q(self, item) -> np.ndarray:
        raise NotImplementedError

    def vertices(self, qf, qb, alpha: Fraction):
        raise NotImplementedError

    def scheme(self, alpha, f_item, b_item):
        raise NotImplementedError


class _InnerBound(_Problem):
    kind = "theorem1"

    def __init__(self, model: SystemModel, config: SearchConfig):
        self.model = model
        base = default_cardinalities(model)
        unknown = set(config.cardinalities) - set(base)
        if unknown:
            raise ArgumentError(f"unknown auxiliary names {sorted(unknown)}")
        c = {**base, **config.cardinalities}
        self.cards = c
        self.forward = _Side([
            Factor("p_t1f", 1, c["T1f"]),
            Factor("x1f_given_t1f", c["T1f"], model.card("X1f")),
            Factor("p_t2f", 1, c["T2f"]),
            Factor("x2f_given_t2f", c["T2f"], model.card("X2f")),
            Factor("tfb_given_y3f", model.card("Y3f"), c["T1fb"] * c["T2fb"]),
        ], config.lattice)
        self.backward = _Side([
            Factor("p_tb", 1, c["T1b"] * c["T2b"]),
            Factor("x3b_given_tb", c["T1b"] * c["T2b"], model.card("X3b")),
        ], config.lattice)

    def scheme(self, alpha, f_item, b_item) -> AuxiliaryScheme:
        c = self.cards
        return AuxiliaryScheme(
            float(alpha),
            f_item["p_t1f"][0], f_item["p_t2f"][0],
            f_item["x1f_given_t1f"], f_item["x2f_given_t2f"],
            f_item["tfb_given_y3f"].reshape(-1, c["T1fb"], c["T2fb"]),
            b_item["p_tb"][0].reshape(c["T1b"], c["T2b"]),
            b_item["x3b_given_tb"].reshape(c["T1b"], c["T2b"], -1),
        )

    def forward_q(self, item) -> np.ndarray:
        s = self.scheme(Fraction(1, 2), item, self.backward.first())
        q = forward_quantities(self.model, s)
        return np.array([q[k] for k in FORWARD_QUANTITIES])

    def backward_q(self, item) -> np.ndarray:
        s = self.scheme(Fraction(1, 2), self.forward.first(), item)
        q = backward_quantities(self.model, s)
        return np.array([q[k] for k in BACKWARD_QUANTITIES])

    def vertices(self, qf, qb, alpha: Fraction):
        """Polytope vertices (..., 4, 2) and feasibility (...) for aligned quantity arrays.

        Mirrors :func:`regions.rate_terms_from_quantities` and
        :func:`regions.slack_from_quantities` operation for operation.
        """
        a_ = float(alpha)
        abar = 1.0 - a_
        nf, nb = alpha.numerator, alpha.denominator - alpha.numerator
        f = [qf[..., i] for i in range(qf.shape[-1])]
        b = [qb[..., i] for i in range(qb.shape[-1])]
        # FORWARD_QUANTITIES / BACKWARD_QUANTITIES order
        r1f = a_ * _pos(f[0] - f[1])
        r1fb = a_ * _pos(f[2] - f[3])
        r2f = a_ * _pos(f[4] - f[5])
        r2fb = a_ * _pos(f[6] - f[7])
        r12f = a_ * _pos(f[8] - f[1] - f[5])
        r1b = abar * _pos(b[0] - b[1])
        r2b = abar * _pos(b[2] - b[3])
        A = r1f + r1fb + r1b
        B = r2f + r2fb + r2b
        C = r12f + r1fb + r2fb + r1b + r2b
        c1 = nb * b[0] - nf * f[9]
        c2 = nb * b[2] - nf * f[10]
        cs = nb * (b[0] + b[2] - b[4]) - nf * (f[9] + f[10])
        feas = (c1 >= 0) & (c2 >= 0) & (cs >= 0)
        a_eff = np.minimum(A, C)
        b_eff = np.minimum(B, C)
        zero = np.zeros_like(a_eff)
        pts = np.stack([
            np.stack([a_eff, zero], -1),
            np.stack([a_eff, np.maximum(0.0, np.minimum(b_eff, C - a_eff))], -1),
            np.stack([np.maximum(0.0, np.minimum(a_eff, C - b_eff)), b_eff], -1),
            np.stack([zero, b_eff], -1),
        ], -2)
        return pts, feas


@dataclass(frozen=True, eq=False)
class SpecialCaseScheme:
    """Operating point of the degraded special case: input law, T1fb kernel, X3b law, alpha."""

    alpha: float | None
    p_x1f: np.ndarray
    p_x2f: np.ndarray
    t1fb_given_y3f: np.ndarray
    p_x3b: np.ndarray

    def to_json(self) -> dict:
        out = {"alpha": None if self.alpha is None else repr(float(self.alpha))}
        for f in ("p_x1f", "p_x2f", "t1fb_given_y3f", "p_x3b"):
            arr = np.asarray(getattr(self, f))
            out[f] = {"shape": list(arr.shape), "values": [repr(float(v)) for v in arr.ravel()]}
        return out

    def evaluate(self, model: SystemModel, mode: str):
        from .regions import corollary_rates
        alpha = 1.0 if self.alpha is None else self.alpha
        return corollary_rates(model, self.p_x3b, self.t1fb_given_y3f, (self.p_x1f, self.p_x2f), alpha, mode)


class _SpecialCase(_Problem):
    kind = "special-case"

    def __init__(self, model: SystemModel, config: SearchConfig):
        self.model = model
        self.mode = config.mode
        unknown = set(config.cardinalities) - {"T1fb"}
        if unknown:
            raise ArgumentError(f"special-case search only takes a T1fb cardinality, got {sorted(unknown)}")
        self.t1fb = config.cardinalities.get("T1fb", model.card("Y3f") + 1)
        self.forward = _Side([
            Factor("p_x1f", 1, model.card("X1f")),
            Factor("p_x2f", 1, model.card("X2f")),
            Factor("t1fb_given_y3f", model.card("Y3f"), self.t1fb),
        ], config.lattice)
        self.backward = _Side([Factor("p_x3b", 1, model.card("X3b"))], config.lattice)
        self._uniform_x3b = np.full(model.card("X3b"), 1.0 / model.card("X3b"))

    def alphas(self, config):
        return (None,) if self.mode == "paper-literal" else config.alpha_grid

    def scheme(self, alpha, f_item, b_item) -> SpecialCaseScheme:
        return SpecialCaseScheme(None if alpha is None else float(alpha), f_item["p_x1f"][0], f_item["p_x2f"][0],
                                 f_item["t1fb_given_y3f"], b_item["p_x3b"][0])

    def forward_q(self, item) -> np.ndarray:
        q = corollary_quantities(self.model, self._uniform_x3b, item["t1fb_given_y3f"],
                                 (item["p_x1f"][0], item["p_x2f"][0]))
        return np.array([q["I(T1fb;Y1f|Y2f)"], q["I(T1fb;Y3f|Y1f)"]])

    def backward_q(self, item) -> np.ndarray:
        uniform_t = np.full((self.model.card("Y3f"), 1), 1.0)
        x1 = np.full(self.model.card("X1f"), 1.0 / self.model.card("X1f"))
        x2 = np.full(self.model.card("X2f"), 1.0 / self.model.card("X2f"))
        q = corollary_quantities(self.model, item["p_x3b"][0], uniform_t, (x1, x2))
        return np.array([q["I(X3b;Y2b|Y1b)"], q["I(X3b;Y1b)"]])

    def vertices(self, qf, qb, alpha):
        if alpha is None:
            wf = wb = 1.0
        else:
            wf = float(alpha)
            wb = 1.0 - wf
        r1 = wf * _pos(qf[..., 0])
        r2 = wb * _pos(qb[..., 0])
        slack = wb * qb[..., 1] - wf * qf[..., 1]
        r1, r2 = np.broadcast_arrays(r1, r2)
        zero = np.zeros_like(r1)
        pts = np.stack([np.stack([r1, r2], -1), np.stack([r1, zero], -1), np.stack([zero, r2], -1)], -2)
        return pts, slack >= 0


# ---------------------------------------------------------------------------
# streams

def _restart_rng(seed: int, alpha) -> np.random.Generator:
    key = [seed, 0, 1] if alpha is None else [seed, alpha.numerator, alpha.denominator]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(key)))


def _restart_items(problem: _Problem, config: SearchConfig, alpha):
    rng = _restart_rng(config.seed, alpha)
    out = []
    for _ in range(config.random_restarts):
        out.append((problem.forward.sample(rng), problem.backward.sample(rng)))
    return out


def projected_evaluations(problem: _Problem, config: SearchConfig) -> int:
    n_alpha = len(problem.alphas(config))
    return n_alpha * (problem.forward.size * problem.backward.size + config.random_restarts)


def _guard(problem: _Problem, config: SearchConfig) -> int:
    n = projected_evaluations(problem, config)
    if n > config.max_evaluations:
        raise CostError(
            f"search would evaluate {n} schemes, above the cap max_evaluations={config.max_evaluations}; "
            "coarsen grid_step, lower cardinalities or shrink the alpha grid")
    return n


def _stream(problem: _Problem, config: SearchConfig):
    _guard(problem, config)
    f_idx = list(problem.forward.index_tuples())
    b_idx = list(problem.backward.index_tuples())
    for alpha in problem.alphas(config):
        for fi in f_idx:
            f_item = problem.forward.item(fi)
            for bi in b_idx:
                yield problem.scheme(alpha, f_item, problem.backward.item(bi))
        for f_item, b_item in _restart_items(problem, config, alpha):
            yield problem.scheme(alpha, f_item, b_item)


def enumerate_schemes(model: SystemModel, config: SearchConfig) -> Iterator[AuxiliaryScheme]:
    """Deterministic stream of inner-bound schemes: grid product plus restarts, per alpha.

    Raises :class:`CostError` before yielding anything if the stream would be
    longer than ``config.max_evaluations``.
    """
    return _stream(_InnerBound(model, config), config)


def enumerate_special_case_schemes(model: SystemModel, config: SearchConfig) -> Iterator[SpecialCaseScheme]:
    return _stream(_SpecialCase(model, config), config)


def count_schemes(model: SystemModel, config: SearchConfig, method: str = "theorem1") -> int:
    problem = _InnerBound(model, config) if method == "theorem1" else _SpecialCase(model, config)
    return projected_evaluations(problem, config)


# ---------------------------------------------------------------------------
# region estimation

def _pareto(points: np.ndarray) -> np.ndarray:
    """Drop duplicate and strictly dominated points."""
    if len(points) == 0:
        return points
    order = np.lexsort((-points[:, 1], -points[:, 0]))
    p = points[order]
    prev_max = np.maximum.accumulate(np.concatenate([[-np.inf], p[:-1, 1]]))
    return p[p[:, 1] > prev_max]


def convex_hull_downward_closed(points) -> RateRegion:
    """Downward-closed convex hull of a finite point set; {(0,0)} when empty."""
    pts = np.asarray(list(points), dtype=float).reshape(-1, 2)
    if np.any(pts < 0):
        raise ValueError("rate points must be non-negative")
    return RateRegion.from_points([tuple(p) for p in _pareto(pts)])


@dataclass
class RegionEstimate:
    region: RateRegion
    schemes_on_frontier: list
    diagnostics: dict
    method: str
    config: SearchConfig
    mode: str | None = None

    def to_json(self, manifest: dict | None = None) -> dict:
        out = {
            "method": self.method,
            "mode": self.mode,
            "config": self.config.to_json(),
            "seed": self.config.seed,
            "region": {
                "frontier": [[fmt(x), fmt(y)] for x, y in self.region.frontier],
                "vertices": [[fmt(x), fmt(y)] for x, y in self.region.vertices],
                "maxR1": fmt(self.region.max_r1),
                "maxR2": fmt(self.region.max_r2),
            },
            "provenance": [{"point": [fmt(x), fmt(y)], "scheme": s.to_json()} for (x, y), s in self.schemes_on_frontier],
            "diagnostics": self.diagnostics,
        }
        if manifest is not None:
            out = {"manifest": manifest, **out}
        return out

    def dumps(self, manifest: dict | None = None) -> str:
        return json.dumps(self.to_json(manifest), indent=2, sort_keys=False) + "\n"


def _threads() -> int:
    raw = os.environ.get("SKREGION_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        n = 1
    if n <= 0:
        n = os.cpu_count() or 1
    return n


def _map(fn: Callable, items: list) -> list:
    n = _threads()
    if n == 1 or len(items) < 64:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items, chunksize=32))


class _Evaluated:
    """Forward/backward quantity tables plus restart and refinement extras."""

    def __init__(self, problem: _Problem, config: SearchConfig):
        self.problem = problem
        self.config = config
        self.f_idx = list(problem.forward.index_tuples())
        self.b_idx = list(problem.backward.index_tuples())
        self.Qf = np.array(_map(lambda i: problem.forward_q(problem.forward.item(i)), self.f_idx))
        self.Qb = np.array(_map(lambda i: problem.backward_q(problem.backward.item(i)), self.b_idx))
        self.alphas = problem.alphas(config)
        self.extras: dict[int, list] = {}
        for k, alpha in enumerate(self.alphas):
            pairs = _restart_items(problem, config, alpha)
            self.extras[k] = [(f, b, problem.forward_q(f), problem.backward_q(b)) for f, b in pairs]

    def blocks(self):
        """Yield (alpha_index, alpha, pts, feas, locator) in stream order."""
        fc = max(1, CHUNK // max(1, len(self.b_idx)))
        for k, alpha in enumerate(self.alphas):
            for s in range(0, len(self.f_idx), fc):
                qf = self.Qf[s:s + fc, None, :]
                pts, feas = self.problem.vertices(qf, self.Qb[None, :, :], alpha)
                yield k, alpha, pts, feas, ("grid", s)
            ex = self.extras[k]
            if ex:
                qf = np.array([e[2] for e in ex])
                qb = np.array([e[3] for e in ex])
                pts, feas = self.problem.vertices(qf, qb, alpha)
                yield k, alpha, pts, feas, ("extra", 0)

    def scheme_at(self, k: int, locator, pos: tuple):
        alpha = self.alphas[k]
        if locator[0] == "grid":
            fi, bi = locator[1] + pos[0], pos[1]
            return self.problem.scheme(alpha, self.problem.forward.item(self.f_idx[fi]),
                                       self.problem.backward.item(self.b_idx[bi]))
        f, b, _, _ = self.extras[k][pos[0]]
        return self.problem.scheme(alpha, f, b)

    def items_at(self, k: int, locator, pos: tuple):
        if locator[0] == "grid":
            fi, bi = locator[1] + pos[0], pos[1]
            return self.problem.forward.item(self.f_idx[fi]), self.problem.backward.item(self.b_idx[bi])
        f, b, _, _ = self.extras[k][pos[0]]
        return f, b


def _collect(ev: _Evaluated):
    pool = np.zeros((0, 2))
    evaluated = feasible = 0
    for _, _, pts, feas, _ in ev.blocks():
        evaluated += feas.size
        feasible += int(feas.sum())
        cand = pts[feas].reshape(-1, 2)
        if len(cand):
            pool = _pareto(np.concatenate([pool, _pareto(cand)]))
    return pool, evaluated, feasible


def _provenance(ev: _Evaluated, targets: list[tuple[float, float]]):
    """For each target point, the tie-broken scheme (smallest serialized form) producing it."""
    ties: dict[tuple, list] = {t: [] for t in targets}
    tarr = np.array(targets, dtype=float).reshape(-1, 2)
    for k, _, pts, feas, loc in ev.blocks():
        for ti, t in enumerate(targets):
            if len(ties[t]) >= TIE_CAP:
                continue
            hit = np.any(np.all(pts == tarr[ti], axis=-1), axis=-1) & feas
            if not hit.any():
                continue
            for pos in zip(*np.nonzero(hit)):
                ties[t].append((k, loc, tuple(int(p) for p in pos)))
                if len(ties[t]) >= TIE_CAP:
                    break
    out = []
    for t in targets:
        best, best_key = None, None
        for k, loc, pos in ties[t]:
            s = ev.scheme_at(k, loc, pos)
            key = json.dumps(s.to_json(), sort_keys=True, separators=(",", ":"))
            if best_key is None or key < best_key:
                best, best_key = s, key
        out.append((t, best, ties[t][0] if ties[t] else None))
    return out


def _targets(region: RateRegion) -> list[tuple[float, float]]:
    pts = [p for p in region.frontier if p != (0.0, 0.0)]
    return pts or [(0.0, 0.0)]


def _directions(region: RateRegion) -> dict:
    """Outward direction at each frontier vertex (bisector of adjacent edge normals)."""
    front = region.frontier
    out = {}
    for i, p in enumerate(front):
        normals = []
        for j in (i - 1, i):
            if 0 <= j and j + 1 < len(front):
                a, b = front[j], front[j + 1]
                n = np.array([-(b[1] - a[1]), b[0] - a[0]], dtype=float)
                # clockwise traversal along the frontier: outward normal points up/right
                n = -n if n.sum() < 0 else n
                nn = np.linalg.norm(n)
                if nn > 0:
                    normals.append(n / nn)
        w = np.sum(normals, axis=0) if normals else np.array([1.0, 1.0])
        w = np.maximum(w, 0.0)
        if w.sum() == 0:
            w = np.array([1.0, 1.0])
        out[p] = w / np.linalg.norm(w)
    return out


def _coordinate_ascent(problem: _Problem, alpha, f_item, b_item, w, config: SearchConfig):
    def score(fi, bi):
        pts, feas = problem.vertices(problem.forward_q(fi)[None], problem.backward_q(bi)[None], alpha)
        if not feas[0]:
            return -np.inf
        return float(np.max(pts[0] @ w))

    items = [{k: v.copy() for k, v in f_item.items()}, {k: v.copy() for k, v in b_item.items()}]
    best = score(*items)
    delta = config.grid_step / 2
    for _ in range(config.refine_iterations):
        if delta < 1e-4:
            break
        improved = False
        for side in (0, 1):
            for name in list(items[side]):
                arr = items[side][name]
                rows, cells = arr.shape
                if cells == 1:
                    continue
                for r in range(rows):
                    for i, j in itertools.permutations(range(cells), 2):
                        move = min(delta, arr[r, i])
                        if move <= 0:
                            continue
                        trial = arr.copy()
                        trial[r, i] -= move
                        trial[r, j] += move
                        trial[r] /= trial[r].sum()
                        cand = [dict(items[0]), dict(items[1])]
                        cand[side] = {**items[side], name: trial}
                        s = score(*cand)
                        if s > best + config.refine_tolerance:
                            best, items, arr, improved = s, cand, trial, True
        if not improved:
            delta /= 2
    return items[0], items[1]


def _refine(ev: _Evaluated, region: RateRegion, config: SearchConfig) -> None:
    problem = ev.problem
    dirs = _directions(region)
    for t, _, first in _provenance(ev, _targets(region)):
        if first is None or t == (0.0, 0.0):
            continue
        k, loc, pos = first
        f_item, b_item = ev.items_at(k, loc, pos)
        f_new, b_new = _coordinate_ascent(problem, ev.alphas[k], f_item, b_item, dirs[t], config)
        ev.extras[k].append((f_new, b_new, problem.forward_q(f_new), problem.backward_q(b_new)))


def _run(problem: _Problem, config: SearchConfig) -> RegionEstimate:
    projected = _guard(problem, config)
    ev = _Evaluated(problem, config)
    pool, evaluated, feasible = _collect(ev)
    region = RateRegion.from_points([tuple(p) for p in pool])
    if config.refinement == "coordinate-ascent":
        _refine(ev, region, config)
        pool, _, _ = _collect(ev)
        region = RateRegion.from_points([tuple(p) for p in pool])
    records = [(t, s) for t, s, _ in _provenance(ev, _targets(region)) if s is not None]
    diagnostics = {
        "projected": projected,
        "evaluated": evaluated,
        "feasible": feasible,
        "infeasible": evaluated - feasible,
        "forwardGrid": len(ev.f_idx),
        "backwardGrid": len(ev.b_idx),
        "alphas": len(ev.alphas),
    }
    mode = config.mode if problem.kind == "special-case" else None
    return RegionEstimate(region, records, diagnostics, problem.kind, config, mode)


def compute_inner_region(model: SystemModel, config: SearchConfig) -> RegionEstimate:
    """Union of inner-bound polytopes over all feasible searched schemes, convexified."""
    return _run(_InnerBound(model, config), config)


def compute_capacity_region_special_case(model: SystemModel, config: SearchConfig,
                                         tol: float = 1e-9) -> RegionEstimate:
    """Degraded-case region: union of feasible rate rectangles over the searched operating points."""
    report = verify_special_case(model, tol)
    if not report.ok:
        raise PreconditionError(
            f"model fails the Markov-chain preconditions (forward residual {report.forward_residual:.3g}, "
            f"backward residual {report.backward_residual:.3g})")
    return _run(_SpecialCase(model, config), config)
