"""Monte Carlo oracle: sample the factorized joint law and estimate information terms.

Random numbers come from numpy's ``PCG64`` bit generator seeded through
``SeedSequence``; the forward and backward blocks use the two children of
``SeedSequence(seed).spawn(2)``, so a batch is a deterministic function of
(model, scheme, n, seed).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .channels import SystemModel
from .errors import UnderpoweredError
from .infocore import JointDistribution, VariableLabel, cond_mutual_info, empirical
from .regions import (
    BACKWARD_QUANTITIES,
    FORWARD_QUANTITIES,
    QUANTITIES,
    AuxiliaryScheme,
    assemble_backward_joint,
    assemble_forward_joint,
    information_quantities,
)

MIN_SAMPLES = 10
DEFAULT_BOOTSTRAP = 200
PASS_FLOOR = 0.005

FORWARD_VARS = ("T1f", "T2f", "X1f", "X2f", "Y1f", "Y2f", "Y3f", "T1fb", "T2fb")
BACKWARD_VARS = ("T1b", "T2b", "X3b", "Y1b", "Y2b")


@dataclass(frozen=True)
class SampleBatch:
    variables: tuple[VariableLabel, ...]
    rows: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows)
        if rows.ndim != 2 or rows.shape[1] != len(self.variables):
            raise ValueError("rows must have one column per variable")
        cards = np.array([v.cardinality for v in self.variables])
        if rows.size and (rows.min() < 0 or np.any(rows.max(axis=0) >= cards)):
            raise ValueError("sample symbol outside its declared alphabet")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def count(self) -> int:
        return self.rows.shape[0]

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def columns(self, names) -> "SampleBatch":
        idx = [self.names.index(n) for n in names]
        return SampleBatch(tuple(self.variables[i] for i in idx), self.rows[:, idx])

    def joint(self) -> JointDistribution:
        """Empirical joint law; a regular :class:`JointDistribution`."""
        return empirical(self.variables, self.rows)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.names)
            w.writerows(self.rows.tolist())


def read_csv(path, cardinalities: dict[str, int]) -> SampleBatch:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = np.array([[int(x) for x in line] for line in r], dtype=np.int64).reshape(-1, len(header))
    return SampleBatch(tuple(VariableLabel(n, cardinalities[n]) for n in header), rows)


def _sample_joint(dist: JointDistribution, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. tuples from a joint tensor by inverse-CDF on the flat index."""
    flat = dist.mass.ravel()
    cdf = np.cumsum(flat)
    u = rng.random(n) * cdf[-1]
    idx = np.searchsorted(cdf, u, side="right")
    idx = np.minimum(idx, flat.size - 1)
    return np.stack(np.unravel_index(idx, dist.shape), axis=1)


def simulate_system(model: SystemModel, scheme: AuxiliaryScheme, n: int, seed: int = 0) -> SampleBatch:
    """``n`` i.i.d. draws of every forward and backward variable.

    The forward variables (T1f, T2f, X1f, X2f, Y1f, Y2f, Y3f, T1fb, T2fb) and the
    backward variables (T1b, T2b, X3b, Y1b, Y2b) are independent blocks of the
    factorized law and are sampled from separate child streams.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    fwd = assemble_forward_joint(model, scheme)
    bwd = assemble_backward_joint(model, scheme)
    rng_f, rng_b = (np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(2))
    rows = np.concatenate([_sample_joint(fwd, n, rng_f), _sample_joint(bwd, n, rng_b)], axis=1)
    return SampleBatch(fwd.variables + bwd.variables, rows)


@dataclass(frozen=True)
class EstimatorResult:
    estimate: float
    std_error: float
    n: int


def _counts(batch: SampleBatch, names) -> tuple[np.ndarray, tuple[VariableLabel, ...]]:
    sub = batch.columns(names)
    shape = tuple(v.cardinality for v in sub.variables)
    flat = np.ravel_multi_index(tuple(sub.rows.T), shape)
    return np.bincount(flat, minlength=int(np.prod(shape))).reshape(shape), sub.variables


def _bootstrap(counts: np.ndarray, labels, n_boot: int, rng: np.random.Generator, fn) -> np.ndarray:
    # resampling rows with replacement == multinomial resampling of the cell counts
    n = int(counts.sum())
    p = (counts / n).ravel()
    draws = rng.multinomial(n, p, size=n_boot)
    return np.array([fn(JointDistribution(labels, d.reshape(counts.shape) / n, tol=1e-9)) for d in draws])


def estimate_cmi(batch: SampleBatch, a, b, c=(), *, n_boot: int = DEFAULT_BOOTSTRAP, seed: int = 0) -> EstimatorResult:
    """Plug-in estimate of I(A;B|C) with a seeded bootstrap standard error."""
    if batch.count < MIN_SAMPLES:
        raise UnderpoweredError(f"need at least {MIN_SAMPLES} samples, got {batch.count}")
    a, b, c = list(a), list(b), list(c)
    counts, labels = _counts(batch, a + b + c)
    emp = JointDistribution(labels, counts / counts.sum(), tol=1e-9)
    fn = lambda d: cond_mutual_info(d, a, b, c)
    est = fn(emp)
    boots = _bootstrap(counts, labels, n_boot, np.random.default_rng(seed), fn) if n_boot > 1 else np.zeros(1)
    return EstimatorResult(est, float(np.std(boots, ddof=1)) if n_boot > 1 else 0.0, batch.count)


def estimate_mi(batch: SampleBatch, a, b, **kw) -> EstimatorResult:
    """Plug-in estimate of I(A;B)."""
    return estimate_cmi(batch, a, b, (), **kw)


@dataclass(frozen=True)
class TermCheck:
    name: str
    exact: float
    estimate: float
    std_error: float

    @property
    def tolerance(self) -> float:
        return max(3.0 * self.std_error, PASS_FLOOR)

    @property
    def passed(self) -> bool:
        return abs(self.exact - self.estimate) <= self.tolerance


@dataclass(frozen=True)
class CrossValidationReport:
    terms: tuple[TermCheck, ...]
    n: int
    seed: int

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.terms)

    def to_json(self) -> dict:
        from .search import fmt
        return {
            "n": self.n,
            "seed": self.seed,
            "passed": self.passed,
            "terms": [
                {"name": t.name, "exact": fmt(t.exact), "estimate": fmt(t.estimate),
                 "stdError": fmt(t.std_error), "tolerance": fmt(t.tolerance), "pass": t.passed}
                for t in self.terms
            ],
        }

    def table(self) -> str:
        lines = [f"{'term':34s} {'exact':>10s} {'estimate':>10s} {'stderr':>9s}  ok"]
        for t in self.terms:
            lines.append(f"{t.name:34s} {t.exact:10.6f} {t.estimate:10.6f} {t.std_error:9.2e}  "
                         f"{'yes' if t.passed else 'NO'}")
        return "\n".join(lines)


def cross_validate(model: SystemModel, scheme: AuxiliaryScheme, n: int, seed: int = 0, *,
                   n_boot: int = DEFAULT_BOOTSTRAP, sampled_model: SystemModel | None = None,
                   sampled_scheme: AuxiliaryScheme | None = None) -> CrossValidationReport:
    """Compare every exact information quantity with its plug-in estimate.

    ``sampled_model`` / ``sampled_scheme`` let the sampler draw from a different
    law than the exact evaluator (fault injection).
    """
    if n < MIN_SAMPLES:
        raise UnderpoweredError(f"need at least {MIN_SAMPLES} samples, got {n}")
    exact = information_quantities(model, scheme)
    batch = simulate_system(sampled_model or model, sampled_scheme or scheme, n, seed)
    boot_seq = np.random.SeedSequence([seed, 1]).spawn(2)
    checks = []
    for block, names, ss in (("f", FORWARD_QUANTITIES, boot_seq[0]), ("b", BACKWARD_QUANTITIES, boot_seq[1])):
        counts, labels = _counts(batch, FORWARD_VARS if block == "f" else BACKWARD_VARS)
        emp = JointDistribution(labels, counts / counts.sum(), tol=1e-9)
        fns = [lambda d, q=QUANTITIES[k]: cond_mutual_info(d, *q[1:]) for k in names]
        rng = np.random.Generator(np.random.PCG64(ss))
        draws = rng.multinomial(n, (counts / n).ravel(), size=n_boot)
        boots = np.array([[fn(JointDistribution(labels, d.reshape(counts.shape) / n, tol=1e-9)) for fn in fns]
                          for d in draws])
        se = boots.std(axis=0, ddof=1)
        for k, fn, s in zip(names, fns, se):
            checks.append(TermCheck(k, exact[k], fn(emp), float(s)))
    return CrossValidationReport(tuple(checks), n, seed)
