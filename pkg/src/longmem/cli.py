"""Command-line interface: ``longmem <subcommand> [options]``.

Exit status is 0 on success, 1 on a usage error and 2 when the computation
itself fails (bad data, optimizer failure, ...).
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import io
from .estimators import EstimationError, EstimatorConfig, estimate
from .hypothesis import test_efficiency, test_memorability
from .io import CsvParseError, read_csv, write_csv, write_json
from .ldss import LdssFitError, LdssModel, ldss_fit, ldss_forecast
from .montecarlo import ExperimentPlan, run_table1
from .simulate import MARGINALS, SourceSpec, gen_arfima, gen_lorenz
from .spectral import spectrum

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _floats(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_globals(p, suppress: bool):
    d = {"default": argparse.SUPPRESS} if suppress else {}
    p.add_argument("--seed", type=int, **(d or {"default": None}), help="seed for all random draws")
    p.add_argument("--threads", type=int, **(d or {"default": None}), help="worker cap (default: all cores)")
    p.add_argument("--output", "-o", **(d or {"default": "-"}), help="output file ('-' = stdout)")
    p.add_argument("--format", choices=("csv", "json"), **(d or {"default": None}),
                   help="output format (default depends on the subcommand)")
    p.add_argument("--verbose", "-v", action="store_true", **(d or {"default": False}))


def _add_estimator(p):
    p.add_argument("--method", type=str.lower, choices=("ase", "gse", "tse"), default="ase")
    p.add_argument("--bandwidth", type=int, default=None, help="number m of Fourier frequencies")
    p.add_argument("--bandwidth-exponent", type=float, default=0.65, help="m = floor(T^a) when --bandwidth is unset")
    p.add_argument("--wavelet", choices=("db4", "haar"), default="haar")
    p.add_argument("--threshold", choices=("soft", "hard"), default="hard")
    p.add_argument("--c-scale", type=float, default=1.0, help="threshold multiplier")
    p.add_argument("--delta", type=float, default=0.01, help="admissible-scale slack")


def _config(a) -> EstimatorConfig:
    return EstimatorConfig(bandwidth=a.bandwidth, bandwidth_exponent=a.bandwidth_exponent,
                           wavelet=a.wavelet, threshold_rule=a.threshold, C_scale=a.c_scale, delta=a.delta)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="longmem", description="Long-memory estimation, testing and LDSS forecasting.")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_, description=help_)
        _add_globals(p, suppress=True)
        return p

    p = add("simulate", "simulate a fractionally integrated series")
    p.add_argument("--d", type=_floats, required=True, help="memory vector, e.g. 0.1,0.3")
    p.add_argument("--T", type=int, default=1024)
    p.add_argument("--marginal", choices=MARGINALS, default="gaussian")
    p.add_argument("--df", type=float, default=3.0)
    p.add_argument("--tau", type=float, default=0.0, help="Gaussian-copula correlation")
    p.add_argument("--burn-in", type=int, default=None)

    p = add("spectrum", "estimate spectral matrices (long-format CSV)")
    p.add_argument("input")
    p.add_argument("--backend", choices=("wavelet", "periodogram", "tapered"), default=None,
                   help="default follows --method")
    _add_estimator(p)

    p = add("estimate", "estimate the memory vector")
    p.add_argument("input")
    _add_estimator(p)

    p = add("test-market", "one-sided efficiency test on the averaged memory")
    p.add_argument("input")
    p.add_argument("--level", type=float, default=0.05)
    _add_estimator(p)

    p = add("test-memorability", "test whether a transformed series keeps the reference memory")
    p.add_argument("input", help="transformed (model output) series")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--reference-dbar", type=float)
    g.add_argument("--reference", help="CSV of the original series; its averaged memory is the reference")
    p.add_argument("--level", type=float, default=0.05)
    _add_estimator(p)

    p = add("montecarlo", "run a Monte Carlo experiment plan")
    p.add_argument("--plan", required=True, help="plan JSON")
    p.add_argument("--out", default=None, help="summary CSV (overrides the plan's output_path)")
    p.add_argument("--trials-out", default=None, help="per-trial CSV records")

    p = add("ldss-fit", "fit an LDSS model (JSON out)")
    p.add_argument("input")
    p.add_argument("--k", type=int, default=4, help="fractional truncation lag")
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--q", type=int, default=0)
    p.add_argument("--d", type=_floats, default=None, help="fix the memory vector instead of estimating it")
    p.add_argument("--maxiter", type=int, default=500)
    _add_estimator(p)

    p = add("ldss-forecast", "Monte Carlo forecast from a fitted LDSS model")
    p.add_argument("input")
    p.add_argument("--model", required=True, help="model JSON from ldss-fit")
    p.add_argument("--horizon", type=int, default=12)
    p.add_argument("--K", type=int, default=1000)
    p.add_argument("--samples", action="store_true", help="emit every sample path instead of summaries")

    p = add("lorenz", "integrate the Lorenz system")
    p.add_argument("--T", type=int, default=2000)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--init", type=_floats, default=[1.0, 1.0, 1.0])
    return parser


# -- handlers ------------------------------------------------------------------


def _emit_matrix(a, X, header):
    if a.format == "json":
        write_json(a.output, {"columns": header, "data": X})
    else:
        write_csv(a.output, X, header=header)


def _cmd_simulate(a):
    d = np.asarray(a.d)
    src = SourceSpec(l=len(d), marginal=a.marginal, df=a.df, copula_corr=a.tau)
    X = gen_arfima(d, a.T, burn_in=a.burn_in, seed=a.seed, source=src)
    _emit_matrix(a, X, [f"x{i + 1}" for i in range(len(d))])


def _cmd_lorenz(a):
    if len(a.init) != 3:
        raise UsageError("--init needs three values")
    _emit_matrix(a, gen_lorenz(a.T, a.dt, tuple(a.init)), ["x", "y", "z"])


def _cmd_spectrum(a):
    X = read_csv(a.input)
    cfg = _config(a)
    m = cfg.m_for(X.shape[0])
    backend = a.backend or {"ase": "wavelet", "gse": "periodogram", "tse": "tapered"}[a.method]
    kw = {}
    if backend == "wavelet":
        kw = dict(C=cfg.C, delta=cfg.delta, rule=cfg.threshold_rule, family=cfg.wavelet, C_scale=cfg.C_scale)
    S = spectrum(X, m, backend, **kw)
    header = ["j", "lambda", "p", "q", "re", "im"]
    if a.format == "json":
        write_json(a.output, {"estimator": S.estimator, "T": S.T, "columns": header, "records": S.to_records()})
    else:
        write_csv(a.output, S.to_records(), header=header)


def _cmd_estimate(a):
    est = estimate(read_csv(a.input), _config(a), a.method.upper())
    if a.format == "csv":
        rows = [[i + 1, v, s] for i, (v, s) in enumerate(zip(est.d_hat, est.std_errors))]
        write_csv(a.output, rows, header=["component", "d_hat", "std_error"])
    else:
        write_json(a.output, {**est.to_dict(), "seed": a.seed})


def _emit_report(a, rep):
    if a.format == "csv":
        doc = rep.to_dict()
        write_csv(a.output, [list(doc.values())], header=list(doc.keys()))
    else:
        write_json(a.output, {**rep.to_dict(), "summary": rep.summary()})
    print(rep.summary(), file=sys.stderr)


def _cmd_test_market(a):
    _emit_report(a, test_efficiency(read_csv(a.input), _config(a), a.level, a.method.upper()))


def _cmd_test_memorability(a):
    cfg = _config(a)
    ref = a.reference_dbar
    if ref is None:
        ref = float(estimate(read_csv(a.reference), cfg, a.method.upper()).d_hat.mean())
    _emit_report(a, test_memorability(read_csv(a.input), ref, cfg, a.level, a.method.upper()))


def _cmd_montecarlo(a):
    plan = ExperimentPlan.from_json(a.plan)
    if a.seed is not None:
        plan.master_seed = a.seed
    res = run_table1(plan, threads=a.threads)
    out = a.out or plan.output_path or a.output
    header, rows = res.summary_rows()
    if a.format == "json":
        write_json(out, {"plan": plan.to_dict(), "columns": header, "rows": rows})
    else:
        write_csv(out, rows, header=header)
    if a.trials_out:
        th, tr = res.trial_rows()
        write_csv(a.trials_out, tr, header=th)
    if out not in (None, "-"):
        print(res.format_table(), file=sys.stderr)


def _cmd_ldss_fit(a):
    X = read_csv(a.input)
    model = ldss_fit(X, k=a.k, p=a.p, q=a.q, d=a.d, config=_config(a), maxiter=a.maxiter)
    write_json(a.output, model.to_dict())


def _cmd_ldss_forecast(a):
    model = LdssModel.from_dict(io.read_json(a.model))
    X = read_csv(a.input)
    fc = ldss_forecast(model, X, a.horizon, a.K, a.seed)
    if a.samples:
        K, H, l = fc.samples.shape
        rows = [[k, h + 1, i, fc.samples[k, h, i]] for k in range(K) for h in range(H) for i in range(l)]
        header = ["sample", "step", "component", "value"]
    else:
        rows = fc.to_records()
        header = ["step", "component", "mean", "lo_68.27", "hi_68.27", "lo_95.45", "hi_95.45",
                  "lo_99.73", "hi_99.73"]
    if a.format == "json":
        write_json(a.output, {"horizon": fc.horizon, "columns": header, "rows": rows})
    else:
        write_csv(a.output, rows, header=header)


HANDLERS = {
    "simulate": _cmd_simulate, "spectrum": _cmd_spectrum, "estimate": _cmd_estimate,
    "test-market": _cmd_test_market, "test-memorability": _cmd_test_memorability,
    "montecarlo": _cmd_montecarlo, "ldss-fit": _cmd_ldss_fit, "ldss-forecast": _cmd_ldss_forecast,
    "lorenz": _cmd_lorenz,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if a.format is None:
        a.format = "json" if a.command in ("estimate", "test-market", "test-memorability") else "csv"
    try:
        HANDLERS[a.command](a)
    except UsageError as exc:
        print(f"longmem {a.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CsvParseError, EstimationError, LdssFitError, ValueError, np.linalg.LinAlgError, OSError) as exc:
        print(f"longmem {a.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
