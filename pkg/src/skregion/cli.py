"""Command-line entry point: ``skregion <command> ...``.

Exit codes: 0 success, 1 domain failure (chain check, precondition,
infeasibility, failed validation), 2 input or usage error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .channels import Example1Params, build_example1, load_system, save_system, verify_special_case
from .errors import (
    ArgumentError,
    CostError,
    FormatError,
    PreconditionError,
    RangeError,
    UnderpoweredError,
    ValidationError,
)
from .mcsim import cross_validate
from .regions import default_scheme, load_scheme, save_scheme
from .search import (
    RegionEstimate,
    SearchConfig,
    compute_capacity_region_special_case,
    compute_inner_region,
    default_alpha_grid,
    fmt,
)

INPUT_ERRORS = (FormatError, ValidationError, RangeError, UnderpoweredError, ArgumentError, CostError,
                FileNotFoundError, IsADirectoryError)

# Fig. 2 leaves p1..p3 unspecified; these are toolkit defaults.
SWEEP_DEFAULT_P = 0.1
SWEEP_DEFAULT_P4 = "0,0.1,0.2,0.3,0.4,0.5"


def _digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _manifest(command: str, inputs: dict[str, str], seed: int | None) -> dict:
    """Deterministic manifest embedded in outputs (no timestamp, no output paths)."""
    return {
        "tool": "skregion",
        "version": __version__,
        "command": command,
        "seed": seed,
        "inputDigests": {k: _digest(p) for k, p in sorted(inputs.items())},
    }


def _write_sidecar(out: Path, argv: list[str], manifest: dict) -> None:
    side = out.with_name(out.name + ".manifest.json")
    full = {**manifest, "arguments": argv,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")}
    side.write_text(json.dumps(full, indent=2) + "\n")


def _parse_alpha_grid(text: str | None, max_den: int) -> tuple[Fraction, ...]:
    if not text:
        return default_alpha_grid(max_den)
    try:
        return tuple(Fraction(t.strip()) for t in text.split(",") if t.strip())
    except (ValueError, ZeroDivisionError):
        raise ArgumentError(f"cannot parse alpha grid {text!r}") from None


def _parse_cards(text: str | None) -> dict[str, int]:
    out = {}
    if not text:
        return out
    for item in text.split(","):
        if not item.strip():
            continue
        name, _, val = item.partition("=")
        try:
            out[name.strip()] = int(val)
        except ValueError:
            raise ArgumentError(f"bad cardinality override {item!r}; expected NAME=INT") from None
    return out


def _config_from_args(args) -> SearchConfig:
    base = {}
    if getattr(args, "config", None):
        try:
            base = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"{args.config}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        if not isinstance(base, dict):
            raise FormatError(f"{args.config}: expected an object")
        unknown = set(base) - {"cardinalities", "alphaGrid", "gridStep", "randomRestarts", "seed",
                               "refinement", "maxEvaluations"}
        if unknown:
            raise FormatError(f"{args.config}: unknown fields {sorted(unknown)}")
    cards = dict(base.get("cardinalities", {}))
    cards.update(_parse_cards(args.cardinalities))
    if args.alpha_grid:
        alphas = _parse_alpha_grid(args.alpha_grid, args.alpha_max_den)
    elif "alphaGrid" in base:
        alphas = _parse_alpha_grid(",".join(map(str, base["alphaGrid"])), args.alpha_max_den)
    else:
        alphas = default_alpha_grid(args.alpha_max_den)
    pick = lambda cli, key, default: cli if cli is not None else base.get(key, default)
    return SearchConfig(
        cardinalities=cards,
        alpha_grid=alphas,
        grid_step=float(Fraction(str(pick(args.grid, "gridStep", "0.5")))),
        random_restarts=int(pick(args.restarts, "randomRestarts", 0)),
        seed=int(pick(args.seed, "seed", 0)),
        refinement=pick(args.refine, "refinement", "none"),
        mode=args.mode,
        max_evaluations=int(pick(args.max_evals, "maxEvaluations", 5_000_000)),
    )


def _add_search_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("alpha-weighted", "paper-literal"), default="alpha-weighted")
    p.add_argument("--grid", default=None, help="simplex lattice step 1/m (default 0.5)")
    p.add_argument("--restarts", type=int, default=None, help="Dirichlet restarts per alpha")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--alpha-grid", default=None, help="comma-separated rationals, e.g. 0,1/3,1/2")
    p.add_argument("--alpha-max-den", type=int, default=10, help="denominator bound of the default alpha grid")
    p.add_argument("--cardinalities", default=None, help="overrides, e.g. T1fb=2,T2fb=1")
    p.add_argument("--config", default=None, help="JSON search configuration file")
    p.add_argument("--refine", choices=("none", "coordinate-ascent"), default=None)
    p.add_argument("--max-evals", type=int, default=None)
    p.add_argument("--svg", default=None, help="also write a frontier plot to this SVG path")


def _run_region(model, method: str, config: SearchConfig) -> RegionEstimate:
    if method == "theorem1":
        return compute_inner_region(model, config)
    return compute_capacity_region_special_case(model, config)


def cmd_verify(args) -> int:
    model = load_system(args.model)
    rep = verify_special_case(model, args.tol)
    print(f"forward chain (X1f,X2f)-Y2f-Y1f-Y3f: {'ok' if rep.forward_chain_ok else 'FAIL'} "
          f"(residual {rep.forward_residual:.3e})")
    print(f"backward chain X3b-Y2b-Y1b:          {'ok' if rep.backward_chain_ok else 'FAIL'} "
          f"(residual {rep.backward_residual:.3e})")
    for name, vals in rep.degenerate.items():
        print(f"note: {name} values {list(vals)} carry no mass under any input; skipped")
    return 0 if rep.ok else 1


def cmd_region(args) -> int:
    model = load_system(args.model)
    config = _config_from_args(args)
    est = _run_region(model, args.method, config)
    inputs = {"model": args.model}
    if args.config:
        inputs["config"] = args.config
    manifest = _manifest("region", inputs, config.seed)
    text = est.dumps(manifest)
    if args.out:
        out = Path(args.out)
        out.write_text(text)
        _write_sidecar(out, sys.argv[1:] if args.argv is None else args.argv, manifest)
    else:
        sys.stdout.write(text)
    if args.svg:
        from .plotting import write_region_svg
        write_region_svg([(f"{args.method}", est)], args.svg)
    r = est.region
    print(f"{args.method}: maxR1={fmt(r.max_r1)} maxR2={fmt(r.max_r2)} "
          f"({est.diagnostics['feasible']}/{est.diagnostics['evaluated']} schemes feasible)", file=sys.stderr)
    return 0


def cmd_example1_sweep(args) -> int:
    try:
        p4s = [float(t) for t in args.p4_list.split(",") if t.strip()]
    except ValueError:
        raise ArgumentError(f"cannot parse --p4-list {args.p4_list!r}") from None
    models = [build_example1(Example1Params(args.p1, args.p2, args.p3, p4)) for p4 in p4s]
    config = _config_from_args(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows, curves = [], []
    for p4, model in zip(p4s, models):
        est = compute_capacity_region_special_case(model, config) if args.method == "special-case" \
            else compute_inner_region(model, config)
        manifest = _manifest("example1-sweep", {}, config.seed)
        manifest["example1"] = {"p1": fmt(args.p1), "p2": fmt(args.p2), "p3": fmt(args.p3), "p4": fmt(p4),
                                "note": "p1..p3 are toolkit defaults unless given explicitly"}
        path = out_dir / f"region_p4_{fmt(p4)}.json"
        path.write_text(est.dumps(manifest))
        rows.append((p4, est.region.max_r1, est.region.max_r2))
        curves.append((f"p4={fmt(p4)}", est))
        print(f"p4={fmt(p4):>5s}  maxR1={fmt(est.region.max_r1):>16s}  maxR2={fmt(est.region.max_r2):>16s}")
    with open(out_dir / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["p4", "maxR1", "maxR2"])
        for p4, r1, r2 in rows:
            w.writerow([fmt(p4), fmt(r1), fmt(r2)])
    if args.svg:
        from .plotting import write_region_svg
        write_region_svg(curves, args.svg)
    order = sorted(rows)
    ok = all(b[2] >= a[2] - 1e-9 and b[1] <= a[1] + 1e-9 for a, b in zip(order, order[1:]))
    if not ok:
        print("warning: maxR2 not non-decreasing / maxR1 not non-increasing in p4", file=sys.stderr)
        return 1
    return 0


def cmd_simulate(args) -> int:
    model = load_system(args.model)
    scheme = load_scheme(args.scheme)
    rep = cross_validate(model, scheme, args.n, args.seed)
    print(rep.table())
    print(f"{sum(t.passed for t in rep.terms)}/{len(rep.terms)} terms within tolerance")
    if args.out:
        manifest = _manifest("simulate", {"model": args.model, "scheme": args.scheme}, args.seed)
        out = Path(args.out)
        out.write_text(json.dumps({"manifest": manifest, **rep.to_json()}, indent=2) + "\n")
        _write_sidecar(out, sys.argv[1:] if args.argv is None else args.argv, manifest)
    return 0 if rep.passed else 1


def cmd_example1(args) -> int:
    model = build_example1(Example1Params(args.p1, args.p2, args.p3, args.p4))
    save_system(model, args.out)
    if args.scheme_out:
        save_scheme(default_scheme(model), args.scheme_out)
    return 0


def cmd_info(args) -> int:
    print(f"skregion {__version__}")
    if args.model:
        model = load_system(args.model)
        cards = ", ".join(f"{n}={c.cardinality}" for n, c in model.labels.items())
        print(f"alphabets: {cards}")
        rep = verify_special_case(model)
        print(f"degraded special case: {'yes' if rep.ok else 'no'} "
              f"(residuals {rep.forward_residual:.2e}, {rep.backward_residual:.2e})")
    print("commands: verify, region, example1-sweep, simulate, example1, info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="skregion", description="Secret-key rate regions for MAC + BC key agreement")
    ap.add_argument("--version", action="version", version=f"skregion {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check the degraded Markov-chain preconditions of a model file")
    p.add_argument("model")
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("region", help="compute an inner-bound or special-case region")
    p.add_argument("model")
    p.add_argument("--method", choices=("theorem1", "special-case"), default="theorem1")
    p.add_argument("--out", default=None)
    _add_search_args(p)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("example1-sweep", help="special-case regions of the binary example over p4")
    p.add_argument("--p1", type=float, default=SWEEP_DEFAULT_P)
    p.add_argument("--p2", type=float, default=SWEEP_DEFAULT_P)
    p.add_argument("--p3", type=float, default=SWEEP_DEFAULT_P)
    p.add_argument("--p4-list", default=SWEEP_DEFAULT_P4)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--method", choices=("theorem1", "special-case"), default="special-case")
    _add_search_args(p)
    p.set_defaults(func=cmd_example1_sweep)

    p = sub.add_parser("simulate", help="Monte Carlo cross-validation of the exact information terms")
    p.add_argument("model")
    p.add_argument("scheme")
    p.add_argument("-n", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("example1", help="write the binary example model (and a demo scheme)")
    p.add_argument("--p1", type=float, default=SWEEP_DEFAULT_P)
    p.add_argument("--p2", type=float, default=SWEEP_DEFAULT_P)
    p.add_argument("--p3", type=float, default=SWEEP_DEFAULT_P)
    p.add_argument("--p4", type=float, default=SWEEP_DEFAULT_P)
    p.add_argument("--out", required=True)
    p.add_argument("--scheme-out", default=None)
    p.set_defaults(func=cmd_example1)

    p = sub.add_parser("info", help="version and optional model summary")
    p.add_argument("model", nargs="?")
    p.set_defaults(func=cmd_info)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    args.argv = argv
    try:
        return args.func(args)
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return 1
    except INPUT_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
