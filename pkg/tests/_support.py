"""Shared test helpers: random schemes, synthetic models and brute-force oracles.

The oracles here deliberately avoid the package's tensor code: joints are built
cell by cell with explicit loops and information terms are summed from
dictionaries of marginals.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict

import numpy as np

from skregion.channels import SystemModel
from skregion.infocore import Kernel
from skregion.regions import AuxiliaryScheme, default_cardinalities


# ---------------------------------------------------------------------------
# random objects

def random_scheme(rng, model, alpha=0.5, cards=None, concentration=1.0) -> AuxiliaryScheme:
    c = {**default_cardinalities(model), **(cards or {})}
    d = lambda n, k: rng.dirichlet(np.full(k, concentration), size=n)
    y3, x1, x2, x3 = (model.card(n) for n in ("Y3f", "X1f", "X2f", "X3b"))
    return AuxiliaryScheme(
        alpha,
        d(1, c["T1f"])[0], d(1, c["T2f"])[0],
        d(c["T1f"], x1), d(c["T2f"], x2),
        d(y3, c["T1fb"] * c["T2fb"]).reshape(y3, c["T1fb"], c["T2fb"]),
        d(1, c["T1b"] * c["T2b"]).reshape(c["T1b"], c["T2b"]),
        d(c["T1b"] * c["T2b"], x3).reshape(c["T1b"], c["T2b"], x3),
    )


def bsc(p):
    return np.array([[1 - p, p], [p, 1 - p]])


def model_from_tables(fwd, bwd) -> SystemModel:
    """``fwd[x1,x2,y1,y2,y3]`` and ``bwd[x3,y1b,y2b]`` with arbitrary alphabet sizes."""
    n1, n2, m1, m2, m3 = fwd.shape
    nb, k1, k2 = bwd.shape
    return SystemModel(
        Kernel([("X1f", n1), ("X2f", n2)], [("Y1f", m1), ("Y2f", m2), ("Y3f", m3)], fwd),
        Kernel([("X3b", nb)], [("Y1b", k1), ("Y2b", k2)], bwd),
    )


def counterexample_forward(p=0.1, p3=0.1, p4=0.1):
    """Y3f = X1f + E2 taps the input directly, bypassing Y2f and Y1f."""
    fwd = np.zeros((2, 2, 2, 2, 2))
    for x1, x2 in itertools.product(range(2), repeat=2):
        y2 = x1 & x2
        for y1, y3 in itertools.product(range(2), repeat=2):
            fwd[x1, x2, y1, y2, y3] = bsc(p)[y2, y1] * bsc(p)[x1, y3]
    return model_from_tables(fwd, degraded_backward(p3, p4))


def degraded_backward(p3, p4):
    bwd = np.zeros((2, 2, 2))
    for x3, y2, y1 in itertools.product(range(2), repeat=3):
        bwd[x3, y1, y2] = bsc(p3)[x3, y2] * bsc(p4)[y2, y1]
    return bwd


def counterexample_backward(p=0.1, q=0.2):
    """Y1b and Y2b are independent noisy copies of X3b (not degraded)."""
    fwd = np.zeros((2, 2, 2, 2, 2))
    for x1, x2 in itertools.product(range(2), repeat=2):
        y2 = x1 & x2
        for y1, y3 in itertools.product(range(2), repeat=2):
            fwd[x1, x2, y1, y2, y3] = bsc(0.1)[y2, y1] * bsc(0.1)[y1, y3]
    bwd = np.zeros((2, 2, 2))
    for x3, y1, y2 in itertools.product(range(2), repeat=3):
        bwd[x3, y1, y2] = bsc(q)[x3, y1] * bsc(p)[x3, y2]
    return model_from_tables(fwd, bwd)


def split_mac(p=0.1, q=0.1):
    """Non-degraded MAC where each transmitter is hidden from the other.

    Y3f = (X1f, X2f) as one 4-ary symbol, Y1f = X2f + noise, Y2f = X1f + noise,
    so both users can hold positive forward secrecy.
    """
    fwd = np.zeros((2, 2, 2, 2, 4))
    for x1, x2, y1, y2 in itertools.product(range(2), repeat=4):
        fwd[x1, x2, y1, y2, 2 * x1 + x2] = bsc(p)[x2, y1] * bsc(q)[x1, y2]
    return model_from_tables(fwd, degraded_backward(0.1, 0.2))


# ---------------------------------------------------------------------------
# brute-force joints and information measures

FWD_ORDER = ("T1f", "T2f", "X1f", "X2f", "Y1f", "Y2f", "Y3f", "T1fb", "T2fb")
BWD_ORDER = ("T1b", "T2b", "X3b", "Y1b", "Y2b")


def brute_forward(model, s):
    """Forward joint as {cell tuple: prob}, cells ordered as FWD_ORDER."""
    W = model.forward.table
    out = {}
    for t1, t2 in itertools.product(range(len(s.p_t1f)), range(len(s.p_t2f))):
        for x1, x2 in itertools.product(range(W.shape[0]), range(W.shape[1])):
            pin = s.p_t1f[t1] * s.p_t2f[t2] * s.x1f_given_t1f[t1, x1] * s.x2f_given_t2f[t2, x2]
            for y1, y2, y3 in itertools.product(*map(range, W.shape[2:])):
                pw = pin * W[x1, x2, y1, y2, y3]
                for a, b in itertools.product(*map(range, s.tfb_given_y3f.shape[1:])):
                    p = pw * s.tfb_given_y3f[y3, a, b]
                    if p > 0:
                        out[(t1, t2, x1, x2, y1, y2, y3, a, b)] = p
    return out


def brute_backward(model, s):
    B = model.backward.table
    out = {}
    for t1, t2, x3 in itertools.product(*map(range, s.x3b_given_tb.shape)):
        for y1, y2 in itertools.product(*map(range, B.shape[1:])):
            p = s.p_tb[t1, t2] * s.x3b_given_tb[t1, t2, x3] * B[x3, y1, y2]
            if p > 0:
                out[(t1, t2, x3, y1, y2)] = p
    return out


def _marg(cells, idx):
    m = defaultdict(float)
    for k, p in cells.items():
        m[tuple(k[i] for i in idx)] += p
    return m


def brute_cmi(cells, order, a, b, c=()):
    """I(A;B|C) = sum p(a,b,c) log p(a,b,c)p(c) / (p(a,c)p(b,c)), in bits."""
    ia, ib, ic = ([order.index(n) for n in grp] for grp in (a, b, c))
    pabc = _marg(cells, ia + ib + ic)
    pac = _marg(cells, ia + ic)
    pbc = _marg(cells, ib + ic)
    pc = _marg(cells, ic)
    na, nb = len(ia), len(ib)
    total = 0.0
    for k, p in pabc.items():
        if p <= 0:
            continue
        ka, kb, kc = k[:na], k[na:na + nb], k[na + nb:]
        total += p * math.log2(p * pc[kc] / (pac[ka + kc] * pbc[kb + kc]))
    return max(total, 0.0)


def h2(p):
    return 0.0 if p in (0.0, 1.0) else -p * math.log2(p) - (1 - p) * math.log2(1 - p)


# ---------------------------------------------------------------------------
# geometry oracles

def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def brute_hull_vertices(points):
    """Extreme points by the pairwise half-plane test, O(n^3).

    A pair (p, q) is a hull edge when no point lies strictly to its right.
    A point is a vertex when it ends some hull edge and is not strictly
    inside another hull edge.
    """
    pts = sorted(set(points))
    if len(pts) <= 2:
        return set(pts)
    edges = []
    for p, q in itertools.permutations(pts, 2):
        if all(_cross(p, q, r) >= 0 for r in pts):
            edges.append((p, q))
    ends = {p for e in edges for p in e}

    def strictly_inside(r, p, q):
        if _cross(p, q, r) != 0:
            return False
        return min(p[0], q[0]) <= r[0] <= max(p[0], q[0]) and min(p[1], q[1]) <= r[1] <= max(p[1], q[1]) \
            and r != p and r != q
    return {r for r in ends if not any(strictly_inside(r, p, q) for p, q in edges)}


def brute_downward_hull(points):
    pts = [(float(x), float(y)) for x, y in points]
    aug = [(0.0, 0.0)] + pts + [(x, 0.0) for x, _ in pts] + [(0.0, y) for _, y in pts]
    return brute_hull_vertices(aug)


def brute_polytope_vertices(a, b, c, tol=1e-12):
    """Vertices of {R1, R2 >= 0, R1 <= a, R2 <= b, R1 + R2 <= c} by intersecting every line pair."""
    lines = [(1, 0, 0.0), (0, 1, 0.0), (1, 0, a), (0, 1, b), (1, 1, c)]  # u*R1 + v*R2 = w

    def ok(x, y):
        return x >= -tol and y >= -tol and x <= a + tol and y <= b + tol and x + y <= c + tol
    cands = []
    for (u1, v1, w1), (u2, v2, w2) in itertools.combinations(lines, 2):
        det = u1 * v2 - u2 * v1
        if det == 0:
            continue
        x = (w1 * v2 - w2 * v1) / det
        y = (u1 * w2 - u2 * w1) / det
        if ok(x, y):
            cands.append((round(max(x, 0.0), 12) + 0.0, round(max(y, 0.0), 12) + 0.0))
    return brute_hull_vertices(cands)


def rounded(vertices, nd=12):
    return {(round(x, nd) + 0.0, round(y, nd) + 0.0) for x, y in vertices}


# ---------------------------------------------------------------------------
# reduction baselines, built without any feedback or backward auxiliaries

def gdmmac_only_terms(model, p_t1f, p_t2f, k1, k2, alpha):
    """Secrecy terms of the MAC alone: (r1f, r2f, r12f) from a joint over
    (T1f, T2f, X1f, X2f, Y1f, Y2f, Y3f) assembled cell by cell."""
    W = model.forward.table
    order = ("T1f", "T2f", "X1f", "X2f", "Y1f", "Y2f", "Y3f")
    cells = {}
    for t1, t2 in itertools.product(range(len(p_t1f)), range(len(p_t2f))):
        for x1, x2 in itertools.product(range(W.shape[0]), range(W.shape[1])):
            for ys in itertools.product(*map(range, W.shape[2:])):
                p = p_t1f[t1] * p_t2f[t2] * k1[t1, x1] * k2[t2, x2] * W[(x1, x2) + ys]
                if p > 0:
                    cells[(t1, t2, x1, x2) + ys] = p
    i = lambda a, b, c=(): brute_cmi(cells, order, a, b, c)
    leak1 = i(("T1f",), ("X2f", "Y2f"), ("T2f",))
    leak2 = i(("T2f",), ("X1f", "Y1f"), ("T1f",))
    pos = lambda x: max(x, 0.0)
    return (alpha * pos(i(("T1f",), ("Y3f",), ("T2f",)) - leak1),
            alpha * pos(i(("T2f",), ("Y3f",), ("T1f",)) - leak2),
            alpha * pos(i(("T1f", "T2f"), ("Y3f",)) - leak1 - leak2))


def bc_confidential_terms(model, p_tb, k3, alpha):
    """Broadcast-channel secrecy terms (r1b, r2b) with two confidential messages."""
    B = model.backward.table
    order = ("T1b", "T2b", "X3b", "Y1b", "Y2b")
    cells = {}
    for t1, t2, x3 in itertools.product(*map(range, k3.shape)):
        for y1, y2 in itertools.product(*map(range, B.shape[1:])):
            p = p_tb[t1, t2] * k3[t1, t2, x3] * B[x3, y1, y2]
            if p > 0:
                cells[(t1, t2, x3, y1, y2)] = p
    i = lambda a, b: brute_cmi(cells, order, a, b)
    abar = 1.0 - alpha
    return (abar * max(i(("T1b",), ("Y1b",)) - i(("T1b",), ("Y2b", "T2b")), 0.0),
            abar * max(i(("T2b",), ("Y2b",)) - i(("T2b",), ("Y1b", "T1b")), 0.0))


def backward_cancelled_scheme(rng, model, alpha, cards=(2, 2)):
    """Random scheme with backward auxiliaries and T1fb, T2fb all singletons."""
    x1, x2, y3, x3 = (model.card(n) for n in ("X1f", "X2f", "Y3f", "X3b"))
    d = lambda n, k: rng.dirichlet(np.ones(k), size=n)
    return AuxiliaryScheme(alpha, d(1, cards[0])[0], d(1, cards[1])[0], d(cards[0], x1), d(cards[1], x2),
                           np.ones((y3, 1, 1)), np.ones((1, 1)), d(1, x3).reshape(1, 1, x3))


def forward_cancelled_scheme(rng, model, alpha, cards=(3, 3), concentration=1.0):
    """Random scheme with T1f, T2f, T1fb, T2fb singletons and deterministic inputs.

    A small ``concentration`` makes the broadcast encoder nearly deterministic.
    """
    x1, x2, y3, x3 = (model.card(n) for n in ("X1f", "X2f", "Y3f", "X3b"))
    d = lambda n, k, c=1.0: rng.dirichlet(np.full(k, c), size=n)
    return AuxiliaryScheme(alpha, np.ones(1), np.ones(1), np.eye(x1)[:1], np.eye(x2)[:1],
                           np.ones((y3, 1, 1)), d(1, cards[0] * cards[1]).reshape(cards),
                           d(cards[0] * cards[1], x3, concentration).reshape(cards + (x3,)))


def feasible_leaning_scheme(rng, model, alpha):
    """Random scheme biased toward satisfying the backward-budget constraints:
    the feedback kernel is shrunk toward a constant row, the backward
    auxiliaries are independent and their encoder nearly deterministic."""
    s_ = random_scheme(rng, model, alpha, concentration=0.3)
    c = default_cardinalities(model)
    eps = rng.random() ** 6
    base = rng.dirichlet(np.ones(c["T1fb"] * c["T2fb"])).reshape(c["T1fb"], c["T2fb"])
    x3 = model.card("X3b")
    return AuxiliaryScheme(
        alpha, s_.p_t1f, s_.p_t2f, s_.x1f_given_t1f, s_.x2f_given_t2f,
        (1 - eps) * base[None] + eps * s_.tfb_given_y3f,
        np.outer(rng.dirichlet(np.ones(c["T1b"])), rng.dirichlet(np.ones(c["T2b"]))),
        rng.dirichlet(np.full(x3, 0.05), size=(c["T1b"], c["T2b"])),
    )


def containment_margin(model, scheme):
    """Smallest slack of an inner-bound polytope inside the matched special-case rectangle.

    The rectangle uses the scheme's own input law and marginal feedback kernel
    with a uniform X3b law, which maximizes both backward terms for binary
    symmetric cascades.  Returns (rate margin, special-case constraint slack).
    """
    from skregion.regions import (corollary_rates, information_quantities,
                                  inner_bound_polytope, matched_corollary_inputs, rate_terms_from_quantities)
    q = information_quantities(model, scheme)
    region = inner_bound_polytope(rate_terms_from_quantities(q, scheme.alpha))
    _, t1fb, law = matched_corollary_inputs(model, scheme)
    x3 = model.card("X3b")
    cr = corollary_rates(model, np.full(x3, 1.0 / x3), t1fb, law, scheme.alpha)
    margin = min(min(cr.r1_max - x, cr.r2_max - y) for x, y in region.vertices)
    return margin, cr.slack


# criterion number -> (passed, title, detail); filled by test_acceptance, printed by conftest
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str, str]] = {}


def informative_scheme(rng, model, alpha):
    """Random scheme whose rates are usually non-zero on binary cascades.

    T1fb is a noisy copy of Y3f (T2fb nearly constant) and the backward encoder
    is close to deterministic on independent (T1b, T2b), so both the
    feedback term and the broadcast term tend to be positive.
    """
    c = default_cardinalities(model)
    y3, x3 = model.card("Y3f"), model.card("X3b")
    s_ = random_scheme(rng, model, alpha)
    delta = 0.5 * rng.random() ** 2
    t1 = np.full((y3, c["T1fb"]), 0.0)
    for y in range(y3):
        t1[y] = delta / (c["T1fb"] - 1)
        t1[y, y % c["T1fb"]] = 1.0 - delta
    t2 = rng.dirichlet(np.full(c["T2fb"], 0.2))
    eps = 0.2 * rng.random() ** 3
    t2_rows = (1 - eps) * t2[None, :] + eps * rng.dirichlet(np.ones(c["T2fb"]), size=y3)
    return AuxiliaryScheme(
        alpha, s_.p_t1f, s_.p_t2f, s_.x1f_given_t1f, s_.x2f_given_t2f,
        t1[:, :, None] * t2_rows[:, None, :],
        np.outer(rng.dirichlet(np.ones(c["T1b"])), rng.dirichlet(np.ones(c["T2b"]))),
        rng.dirichlet(np.full(x3, 0.05), size=(c["T1b"], c["T2b"])),
    )
