"""Command line interface.

Subcommands write their result files to ``--out`` (or stdout when no
directory is given). Exit codes: 0 success, 1 usage or input error,
2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import Config, ConfigError, load_config
from .errors import GpcError, NumericalError
from .experiment import (
    build_spec,
    derived_seed,
    make_plan,
    prepare,
    problem_basis,
    recover_once,
    run_recovery_experiment,
    validate,
)
from .indexing import enumerate_threshold, smallest_m

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="configuration file (key = value)")
    common.add_argument("--seed", type=int, help="override experiment.seed")
    common.add_argument("--out", help="output directory (default: stdout)")
    common.add_argument("--scheme", choices=("i", "ii"), help="override experiment.scheme")
    common.add_argument("--threads", type=int, default=None, help="worker threads for the n-grid sweep")
    common.add_argument("--quiet", action="store_true", help="no summary on stderr")
    parser = _Parser(prog="gpcls", description="Weighted least-squares polynomial chaos recovery.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("widths", parents=[common], help="weight table, index set and widths d_n")
    sub.add_parser("sample", parents=[common], help="draw a sample plan")
    sub.add_parser("recover", parents=[common], help="one-shot recovery of the configured target")
    sub.add_parser("pde", parents=[common], help="one-shot parametric PDE collocation")
    sub.add_parser("rates", parents=[common], help="error sweep over experiment.n_grid with slope fit")
    return parser


def _emit(out: str | None, name: str, text: str) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    (path / name).write_bytes(text.encode())


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _budget(cfg: Config) -> int:
    return cfg["experiment.n"] or cfg["experiment.n_grid"][0]


def _widths(cfg: Config, args) -> str:
    validate(cfg)
    spec = build_spec(cfg)
    count = cfg["widths.count"]
    table = smallest_m(spec, count + 1)
    lam = enumerate_threshold(spec, cfg["widths.xi"])
    result = {
        "sigma": table[:count].to_json(),
        "xi": cfg["widths.xi"],
        "lambda_xi_size": len(lam),
        "lambda_xi": lam.to_json(),
        "d_n": [1.0 / v for v in table.sigmas[1:]],
    }
    _emit(args.out, "widths.json", _json(result))
    return f"|Lambda({cfg['widths.xi']})| = {len(lam)}"


def _sample(cfg: Config, args) -> str:
    prob = prepare(cfg, args.scheme, args.seed)
    n = _budget(cfg)
    basis, J = problem_basis(prob, n)
    plan = make_plan(prob.family, prob.spec, basis, n, prob.scheme, derived_seed(prob.seed, n), J, cfg)
    _emit(args.out, "plan.csv", plan.to_csv())
    return f"{len(plan)} points, m = {len(basis)}, scheme {prob.scheme}"


def _recover(cfg: Config, args, stem: str) -> str:
    prob = prepare(cfg, args.scheme, args.seed)
    n = _budget(cfg)
    out = recover_once(prob, n)
    if not hasattr(out, "approx"):
        raise NumericalError(f"plan ill-conditioned after a redraw (lambda_min = {out.lambda_min:.3g})")
    row = out.row
    summary = {"n": row.n, "m": row.m, "samples_used": row.samples_used, "lambda_min": row.lambda_min,
               "rmse": row.rmse, "stderr": row.stderr, "status": row.status, "scheme": prob.scheme,
               "seed": prob.seed}
    if args.out is None:
        _emit(None, "", _json({"approximant": out.approx.to_json(), "summary": summary}))
    else:
        _emit(args.out, f"{stem}_approximant.json", _json(out.approx.to_json()))
        _emit(args.out, f"{stem}.json", _json(summary))
    return f"n = {row.n}, m = {row.m}, rmse = {row.rmse:.3e} ({row.status})"


def _pde(cfg: Config, args) -> str:
    if not cfg["experiment.target"].startswith("pde"):
        cfg = Config(cfg)
        cfg.set("experiment.target", f"pde_{cfg['field.kind']}")
    return _recover(cfg, args, "pde")


def _rates(cfg: Config, args) -> str:
    threads = args.threads if args.threads is not None else cfg["experiment.threads"]
    report = run_recovery_experiment(cfg, scheme=args.scheme, seed=args.seed, threads=max(1, threads))
    if args.out is None:
        _emit(None, "", report.to_csv())
    else:
        _emit(args.out, "rates.csv", report.to_csv())
        _emit(args.out, "rates.json", report.dumps_json())
    slope = "n/a" if report.fitted_slope is None else f"{report.fitted_slope:.3f}"
    return f"fitted slope {slope} (theory {report.theory_slope:.3f})"


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = load_config(args.config)
        if args.scheme:
            cfg.set("experiment.scheme", args.scheme)
        if args.seed is not None:
            cfg.set("experiment.seed", args.seed)
        handler = {"widths": _widths, "sample": _sample, "recover": lambda c, a: _recover(c, a, "recovery"),
                   "pde": _pde, "rates": _rates}[args.command]
        message = handler(cfg, args)
    except NumericalError as exc:
        print(f"gpcls: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, GpcError, ValueError, OSError) as exc:
        print(f"gpcls: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not args.quiet:
        print(f"gpcls {args.command}: {message}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
