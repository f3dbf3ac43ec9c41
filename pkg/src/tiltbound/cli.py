"""``tiltbound`` command-line front end.

Exit codes: 0 on success, 1 on malformed input or exceeded caps, 2 when a
checked inequality is violated or a solver fails to converge.
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

import numpy as np

from .info import DidNotConverge, augustin_info, exponent_curve
from .instances import InstanceError, load, render_csv
from .measure import c1, c2, c_alpha, c_alpha_sup
from .packing import (
    DimensionTooLarge,
    EmptyConstraint,
    EnumerationTooLarge,
    SimConfig,
    apply_kraus,
    constrained_random_coding,
    cq_random_coding,
    cqsw_exponent,
    cqsw_random_binning,
    ea_position_coding,
    unassisted_coding,
)
from .verify import run_suite

SEED_MAX = 2**64 - 1


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _seed(text: str) -> int:
    if not text.isdigit() or int(text) > SEED_MAX:
        raise argparse.ArgumentTypeError(f"seed must be a decimal integer in [0, 2^64): {text!r}")
    return int(text)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def parse_grid(spec: str) -> np.ndarray:
    """A comma list ``a,b,c`` or an inclusive range ``start:stop:step``."""
    try:
        if ":" in spec:
            start, stop, step = (float(p) for p in spec.split(":"))
            if step <= 0 or stop < start:
                raise UsageError(f"bad range {spec!r}")
            n = int(np.floor((stop - start) / step + 1e-9)) + 1
            return start + step * np.arange(n)
        vals = np.array([float(p) for p in spec.split(",")])
    except ValueError:
        raise UsageError(f"cannot parse grid {spec!r}") from None
    if vals.size == 0 or not np.all(np.isfinite(vals)):
        raise UsageError(f"bad grid {spec!r}")
    return vals


def _int_list(spec: str) -> list[int]:
    try:
        vals = [int(p) for p in spec.split(",")]
    except ValueError:
        raise UsageError(f"expected a comma list of integers, got {spec!r}") from None
    if not vals or min(vals) < 0:
        raise UsageError(f"bad integer list {spec!r}")
    return vals


def _alpha_grid(spec: str) -> np.ndarray:
    grid = parse_grid(spec)
    if grid.min() < 0.5 - 1e-12 or grid.max() > 1 + 1e-12:
        raise UsageError("alpha values must lie in [0.5, 1]")
    return np.clip(grid, 0.5, 1.0)


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _expect(inst, kinds: set[str], task: str) -> None:
    if inst.kind not in kinds:
        raise UsageError(f"task {task!r} needs an input of kind {' or '.join(sorted(kinds))}, got {inst.kind}")


def _rho_rb(inst):
    """The bipartite state of an ``ea`` input: given directly or as channel plus assisting state."""
    if inst.kind == "bipartite_state":
        return inst.states[0], tuple(inst.dims)
    if inst.assist_state is None:
        raise UsageError("quantum_channel input has no assisting state")
    d_r, d_a = inst.assist_dims
    return apply_kraus(inst.kraus, inst.assist_state, (d_r, d_a)), (d_r, inst.dims[1])


# -- commands -------------------------------------------------------------------------

def cmd_verify(args) -> int:
    dims = _int_list(args.dims)
    if min(dims) < 2:
        raise UsageError("dims must be at least 2")
    results = run_suite(args.suite, args.seed, args.trials, dims, args.workers)
    rows = [(r.suite, r.name, r.sense, r.trials, r.worst, r.tolerance, r.violations) for r in results]
    header = ("suite", "property", "sense", "trials", "worst", "tolerance", "violations")
    _emit(render_csv(header, rows, args.seed), args.output)
    return 0 if all(r.ok for r in results) else 2


def cmd_constants(args) -> int:
    grid = _alpha_grid(args.alpha_grid)
    rows = [("grid", a, c1(a), c2(a), c_alpha(a)) for a in grid]
    a_sup, c_sup = c_alpha_sup()
    rows.append(("sup", a_sup, c1(a_sup), c2(a_sup), c_sup))
    _emit(render_csv(("row", "alpha", "c1", "c2", "c"), rows), args.output)
    return 0


def cmd_exponent(args) -> int:
    inst, sha = load(args.input)
    rates = parse_grid(args.rates)
    if args.task == "cq":
        _expect(inst, {"cq_channel", "cq_ensemble"}, "cq")
        curve = exponent_curve("sibson", inst.ensemble(), rates)
    elif args.task == "cc":
        _expect(inst, {"cq_channel", "cq_ensemble"}, "cc")
        curve = exponent_curve("augustin", inst.ensemble(), rates)
    elif args.task == "cqsw":
        _expect(inst, {"cq_ensemble"}, "cqsw")
        curve = cqsw_exponent("iid", inst.ensemble(), rates)
    else:
        _expect(inst, {"bipartite_state", "quantum_channel"}, "ea")
        curve = exponent_curve("ea", _rho_rb(inst), rates)
    rows = zip(curve.rates, curve.values, curve.alphas)
    _emit(render_csv(("rate", "exponent", "alpha_star"), rows, None, sha), args.output)
    return 0


def cmd_simulate(args) -> int:
    inst, sha = load(args.input)
    Ms = _int_list(args.M)
    if min(Ms) < 1:
        raise UsageError("M must be positive")
    alphas = _alpha_grid(args.alpha)
    results = []
    for M in Ms:
        for al in alphas:
            cfg = SimConfig(M, float(al), args.mode, args.samples, args.seed, args.workers)
            if args.task == "cq":
                _expect(inst, {"cq_channel", "cq_ensemble"}, "cq")
                res = cq_random_coding(inst.ensemble(), cfg)
            elif args.task == "constrained":
                _expect(inst, {"cq_channel", "cq_ensemble"}, "constrained")
                if args.constraint is None:
                    raise UsageError("constrained task needs --constraint")
                res = constrained_random_coding(inst.ensemble(), _int_list(args.constraint), cfg)
            elif args.task == "cqsw":
                _expect(inst, {"cq_ensemble"}, "cqsw")
                res = cqsw_random_binning(inst.ensemble(), cfg)
            elif args.task == "ea":
                _expect(inst, {"quantum_channel"}, "ea")
                if inst.assist_state is None:
                    raise UsageError("ea task needs an assisting state")
                res = ea_position_coding(inst.kraus, inst.assist_state, tuple(inst.assist_dims), M,
                                         float(al), args.seed)
            else:
                _expect(inst, {"quantum_channel"}, "unassisted")
                res = unassisted_coding(inst.kraus, inst.input_ensemble(), cfg)
            results.append(res)
    rows = [(r.task, r.M, r.alpha, r.error_estimate, r.std_err, r.bound, r.margin) for r in results]
    header = ("task", "M", "alpha", "error", "std_err", "bound", "margin")
    _emit(render_csv(header, rows, args.seed, sha), args.output)
    bad = any(r.margin < -3 * r.std_err - 1e-9 for r in results)
    return 2 if bad else 0


def cmd_augustin(args) -> int:
    inst, sha = load(args.input)
    _expect(inst, {"cq_ensemble", "cq_channel"}, "augustin")
    ens = inst.ensemble()
    alphas = parse_grid(args.alpha)
    if alphas.min() <= 0:
        raise UsageError("alpha must be positive")
    rows = []
    status = 0
    for al in alphas:
        try:
            res = augustin_info(ens, float(al), tol=args.tol, max_iter=args.max_iter)
        except DidNotConverge as exc:
            print(f"alpha={al}: no convergence, last residual {exc.residuals[-1]:.3e}", file=sys.stderr)
            status = 2
            continue
        eig = np.linalg.eigvalsh(res.mean)[::-1]
        rows.append((float(al), res.value, res.iterations, res.residual, *eig))
    header = ("alpha", "value", "iterations", "residual", *(f"eig{i}" for i in range(ens.dim)))
    _emit(render_csv(header, rows, None, sha), args.output)
    return status


# -- parser ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tiltbound", description="One-shot quantum coding bounds and their numerical checks.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--output", "-o", help="write the CSV here instead of stdout")

    v = sub.add_parser("verify", help="run seeded property suites")
    v.add_argument("suite", choices=("calculus", "inequalities", "bounds", "all"))
    v.add_argument("--seed", type=_seed, default=0)
    v.add_argument("--trials", type=_positive_int, default=20)
    v.add_argument("--dims", default="2,3")
    v.add_argument("--workers", type=_positive_int, default=1)
    common(v)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("constants", help="tabulate the tilting constants")
    c.add_argument("--alpha-grid", default="0.5:1:0.025")
    common(c)
    c.set_defaults(func=cmd_constants)

    e = sub.add_parser("exponent", help="error-exponent curve")
    e.add_argument("--task", required=True, choices=("cq", "cc", "cqsw", "ea"))
    e.add_argument("--input", required=True)
    e.add_argument("--rates", default="0:1:0.1")
    common(e)
    e.set_defaults(func=cmd_exponent)

    s = sub.add_parser("simulate", help="random-coding error against its bound")
    s.add_argument("--task", required=True, choices=("cq", "constrained", "cqsw", "ea", "unassisted"))
    s.add_argument("--input", required=True)
    s.add_argument("--M", default="2", help="comma list of codebook sizes")
    s.add_argument("--alpha", default="0.5:1:0.025")
    s.add_argument("--mode", choices=("enumerate", "montecarlo"), default="enumerate")
    s.add_argument("--samples", type=_positive_int, default=1000)
    s.add_argument("--seed", type=_seed, default=0)
    s.add_argument("--workers", type=_positive_int, default=1)
    s.add_argument("--constraint", help="comma list of allowed letters")
    common(s)
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("augustin", help="Augustin information and mean")
    a.add_argument("--input", required=True)
    a.add_argument("--alpha", default="0.5:1:0.1")
    a.add_argument("--tol", type=float, default=1e-10)
    a.add_argument("--max-iter", type=_positive_int, default=10_000)
    common(a)
    a.set_defaults(func=cmd_augustin)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, InstanceError, EnumerationTooLarge, DimensionTooLarge, EmptyConstraint,
            ValueError, OSError) as exc:
        print(f"tiltbound: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
