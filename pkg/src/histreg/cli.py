"""Command-line interface: ``histreg <command> [options]``.

Exit codes: 0 success, 1 invalid input or unreadable file, 2 numerical
failure, 64 usage error. Text and CSV output round numbers to 6 significant
digits; JSON output keeps full precision.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from typing import Sequence

from . import __version__
from .errors import (
    AllResamplesFailed,
    DegenerateDispersion,
    DimensionMismatch,
    DomainError,
    EmptyColumn,
    HistRegError,
    InvalidHistogram,
    KindMismatch,
    MaxIterations,
    ParseError,
    SingularDesign,
    ValidationError,
)
from .gof import ssy_decompose
from .models import MC_BINS, MC_SAMPLES, ModelFit, ModelKind, SymbolicTable, fit_model, monte_carlo_distribution, predict
from .resample import bootstrap
from .tableio import FitDocument, export_curves, load_blood, parse_table, read_fit, write_curves
from .wmetric import correlation, variable_summary, wasserstein_decompose

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERIC = 2
EXIT_USAGE = 64

INPUT_ERRORS = (ValidationError, ParseError, InvalidHistogram, DimensionMismatch, DomainError, EmptyColumn, KindMismatch)
NUMERIC_ERRORS = (SingularDesign, MaxIterations, DegenerateDispersion, AllResamplesFailed)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.6g}"
    return str(x)


class Output:
    """Writes text, JSON or CSV to stdout depending on ``--format``."""

    def __init__(self, format: str, quiet: bool, stream=None):
        self.format = format
        self.quiet = quiet
        self.stream = stream or sys.stdout

    def json(self, obj):
        json.dump(obj, self.stream, indent=1, allow_nan=False)
        self.stream.write("\n")

    def line(self, *parts):
        self.stream.write(" ".join(fmt(p) for p in parts) + "\n")

    def csv(self, header, rows):
        w = csv.writer(self.stream, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])

    def warn(self, msg):
        if not self.quiet:
            print(f"warning: {msg}", file=sys.stderr)


# --------------------------------------------------------------------------- helpers


def _load(args) -> SymbolicTable:
    if args.table == "-":
        return parse_table(sys.stdin, args.input_format, args.response)
    return parse_table(args.table, args.input_format, args.response)


def _fit_kwargs(args, kind: ModelKind) -> dict:
    kw = {}
    if args.tol is not None and kind is not ModelKind.BILLARD_DIDAY:
        kw["tol"] = args.tol
    if kind is ModelKind.BILLARD_DIDAY:
        if getattr(args, "samples", None):
            kw["n_samples"] = args.samples
        if getattr(args, "mc_seed", None) is not None:
            kw["seed"] = args.mc_seed
    return kw


def _decomposition(tbl, fit) -> dict:
    if fit.kind is ModelKind.IRPINO_VERDE:
        d = ssy_decompose(tbl, fit)
        return {"ssy": d.ssy, "sse": d.sse, "ssr": d.ssr, "bias": d.bias, "dispersion_term": d.dispersion_term, "gradient_term": d.gradient_term}
    g = fit.diagnostics
    return {"ssy": g.sse + g.ssr + g.bias, "sse": g.sse, "ssr": g.ssr, "bias": g.bias}


def _fit_document(tbl, fit, **meta) -> FitDocument:
    return FitDocument.from_fit(fit, tbl.response_name, decomposition=_decomposition(tbl, fit), **meta)


def _warn_fit(out, fit):
    for w in fit.metadata.get("warnings", []):
        out.warn(w)


def _unit_index(tbl, key: str) -> int:
    if key in tbl.unit_ids:
        return tbl.unit_ids.index(key)
    try:
        i = int(key)
    except ValueError:
        raise ValidationError([f"unknown unit {key!r}"]) from None
    if not 0 <= i < tbl.n:
        raise ValidationError([f"unit index {i} out of range [0, {tbl.n})"])
    return i


def _qf_bins(q):
    return [{"a": float(s), "b": float(e), "w": float(w)} for s, e, w in zip(q.start, q.end, q.widths)]


# --------------------------------------------------------------------------- commands


def summary_data(tbl: SymbolicTable) -> dict:
    out = {"n": tbl.n, "variables": {}, "correlations": {}}
    for name, col in tbl.variables.items():
        s = variable_summary(col)
        out["variables"][name] = {"mean": s.mean, "std_bd": s.std_bd, "std_vi": s.std_vi, "barycenter_std": s.barycenter_std}
    for name, col in tbl.predictors.items():
        out["correlations"][f"{name}~{tbl.response_name}"] = {
            "bd": correlation(col, tbl.response, "BD"),
            "vi": correlation(col, tbl.response, "VI"),
        }
    return out


def _print_summary(out: Output, data: dict):
    if out.format == "json":
        return out.json(data)
    if out.format == "csv":
        rows = [(v, k, x) for v, stats in data["variables"].items() for k, x in stats.items()]
        rows += [(pair, f"corr_{k}", x) for pair, c in data["correlations"].items() for k, x in c.items()]
        return out.csv(("variable", "statistic", "value"), rows)
    out.line(f"{'variable':<12}{'mean':>12}{'std_bd':>12}{'std_vi':>12}{'bary_std':>12}")
    for v, s in data["variables"].items():
        out.line(f"{v:<12}" + "".join(f"{fmt(s[k]):>12}" for k in ("mean", "std_bd", "std_vi", "barycenter_std")))
    for pair, c in data["correlations"].items():
        out.line(f"corr({pair}): BD {fmt(c['bd'])}  VI {fmt(c['vi'])}")


def cmd_summary(args, out):
    _print_summary(out, summary_data(_load(args)))


def cmd_distance(args, out):
    tbl = _load(args)
    var = args.var or tbl.response_name
    if var not in tbl.variables:
        raise ValidationError([f"unknown variable {var!r}"])
    col = tbl.variables[var]
    i, j = (_unit_index(tbl, k) for k in args.pair)
    d = wasserstein_decompose(col[i].quantile_function, col[j].quantile_function)
    data = {
        "variable": var,
        "units": [tbl.unit_ids[i], tbl.unit_ids[j]],
        "distance": d.total ** 0.5,
        "squared": d.total,
        "location": d.location,
        "size": d.size,
        "shape": d.shape,
    }
    if out.format == "json":
        return out.json(data)
    keys = ("distance", "squared", "location", "size", "shape")
    if out.format == "csv":
        return out.csv(("variable", "unit_a", "unit_b") + keys, [(var, *data["units"], *(data[k] for k in keys))])
    out.line(f"d_W({var}: {data['units'][0]}, {data['units'][1]}) = {fmt(data['distance'])}")
    out.line(f"  squared {fmt(d.total)} = location {fmt(d.location)} + size {fmt(d.size)} + shape {fmt(d.shape)}")


def _print_fit(out: Output, doc: FitDocument):
    if out.format == "json":
        return out.json(doc.to_dict())
    if out.format == "csv":
        rows = [("coefficient", k, v) for k, v in doc.coefficients.items()]
        rows += [("gof", k, v) for k, v in (doc.gof or {}).items() if isinstance(v, float)]
        return out.csv(("section", "name", "value"), rows)
    out.line(f"model {doc.model}  response {doc.response}")
    for k, v in doc.coefficients.items():
        out.line(f"  {k:<20}{fmt(v):>12}")
    if doc.gof:
        g = doc.gof
        out.line(f"  Omega {fmt(g['omega'])}  PseudoR2 {fmt(g['pseudo_r2'])}  RMSE_W {fmt(g['rmse_w'])}")
        out.line(f"  SSE {fmt(g['sse'])}  SSR {fmt(g['ssr'])}  SSY {fmt(g['ssy'])}  bias {fmt(g['bias'])}")


def cmd_fit(args, out):
    tbl = _load(args)
    kind = ModelKind.parse(args.model)
    fit = fit_model(tbl, kind, **_fit_kwargs(args, kind))
    _warn_fit(out, fit)
    _print_fit(out, _fit_document(tbl, fit, source=args.table))


def _print_bootstrap(out: Output, summary):
    data = summary.to_dict()
    if out.format == "json":
        return out.json(data)
    pcols = ("observed", "mean", "bias", "se", "p2_5", "p97_5")
    if out.format == "csv":
        rows = [(k, *(v[c] for c in pcols)) for k, v in data["params"].items()]
        rows += [(k, v["observed"], v["mean"], "", "", v["p2_5"], v["p97_5"]) for k, v in data["gof"].items()]
        return out.csv(("quantity",) + pcols, rows)
    out.line(f"bootstrap {data['model']}: {data['n_resamples']} resamples, seed {data['seed']}, failed {data['n_failed']}")
    out.line(f"  {'':<20}" + "".join(f"{c:>12}" for c in pcols))
    for k, v in data["params"].items():
        out.line(f"  {k:<20}" + "".join(f"{fmt(v[c]):>12}" for c in pcols))
    for k, v in data["gof"].items():
        cells = [v["observed"], v["mean"], "", "", v["p2_5"], v["p97_5"]]
        out.line(f"  {k:<20}" + "".join(f"{fmt(c):>12}" for c in cells))


def cmd_bootstrap(args, out):
    tbl = _load(args)
    kind = ModelKind.parse(args.model)
    s = bootstrap(tbl, kind, args.resamples, args.seed, workers=args.workers, **_fit_kwargs(args, kind))
    if s.n_failed:
        out.warn(f"{s.n_failed} of {s.n_resamples} resampled fits failed and were excluded")
    _print_bootstrap(out, s)


def _predictions(tbl, fit: ModelFit, samples: int | None, seed: int | None):
    if fit.kind is ModelKind.BILLARD_DIDAY:
        mc = fit.metadata.get("mc", {})
        n = samples or mc.get("n_samples", MC_SAMPLES)
        s = seed if seed is not None else mc.get("seed", 0)
        bins = mc.get("n_bins", MC_BINS)
        return [monte_carlo_distribution(fit, tbl.row(i), n, s, bins, stream=i).quantile_function for i in range(tbl.n)]
    return [predict(fit, tbl.row(i)) for i in range(tbl.n)]


def cmd_predict(args, out):
    tbl = _load(args)
    doc = read_fit(args.fit)
    fit = doc.to_fit()
    if list(tbl.predictors) != fit.predictor_names:
        raise ValidationError([f"table predictors {list(tbl.predictors)} do not match fit predictors {fit.predictor_names}"])
    preds = _predictions(tbl, fit, args.samples, args.mc_seed)
    units = [{"id": u, "mean": q.mean, "std": q.std, "bins": _qf_bins(q)} for u, q in zip(tbl.unit_ids, preds)]
    if out.format == "json":
        return out.json({"model": fit.kind.value, "units": units})
    if out.format == "csv":
        rows = [(u["id"], b["a"], b["b"], b["w"]) for u in units for b in u["bins"]]
        return out.csv(("unit", "bin_lower", "bin_upper", "weight"), rows)
    for u in units:
        out.line(f"unit {u['id']}: mean {fmt(u['mean'])}  std {fmt(u['std'])}  bins {len(u['bins'])}")


def cmd_export_curves(args, out):
    tbl = _load(args)
    if args.fit:
        fit = read_fit(args.fit).to_fit()
    else:
        kind = ModelKind.parse(args.model)
        fit = fit_model(tbl, kind, diagnostics=False, **_fit_kwargs(args, kind))
    rows = export_curves(tbl, predictions=_predictions(tbl, fit, args.samples, args.mc_seed), grid_points=args.grid_points)
    write_curves(rows, out.stream, "json" if out.format == "json" else "csv", digits=6)


def cmd_demo_blood(args, out):
    tbl = load_blood()
    kinds = [ModelKind.parse(args.model)] if args.model else [ModelKind.BILLARD_DIDAY, ModelKind.DIAS_BRITO, ModelKind.IRPINO_VERDE]
    stats = summary_data(tbl)
    fits = {}
    for kind in kinds:
        fit = fit_model(tbl, kind, **_fit_kwargs(args, kind))
        doc = _fit_document(tbl, fit, source="embedded:blood")
        if args.resamples:
            doc.bootstrap = bootstrap(tbl, kind, args.resamples, args.seed, workers=args.workers).to_dict()
        fits[kind.value] = doc
    if out.format == "json":
        return out.json({"summary": stats, "fits": {k: d.to_dict() for k, d in fits.items()}})
    if out.format == "csv":
        rows = [(k, "observed", n, v) for k, d in fits.items() for n, v in d.coefficients.items()]
        rows += [(k, "observed", n, d.gof[n]) for k, d in fits.items() for n in ("omega", "pseudo_r2", "rmse_w")]
        for k, d in fits.items():
            for n, v in ((d.bootstrap or {}).get("params", {}) | (d.bootstrap or {}).get("gof", {})).items():
                rows += [(k, f"bootstrap_{stat}", n, v[stat]) for stat in ("mean", "p2_5", "p97_5")]
        return out.csv(("model", "row", "quantity", "value"), rows)
    out.line("Blood dataset: summary statistics")
    _print_summary(out, stats)
    for k, doc in fits.items():
        out.line("")
        _print_fit(out, doc)
        if doc.bootstrap:
            b = doc.bootstrap
            out.line(f"  bootstrap ({b['n_resamples']} resamples, seed {b['seed']}): mean [2.5%, 97.5%]")
            for n, v in {**b["params"], **b["gof"]}.items():
                out.line(f"    {n:<18}{fmt(v['mean']):>12}  [{fmt(v['p2_5'])}, {fmt(v['p97_5'])}]")


# --------------------------------------------------------------------------- parser


def _global_options(p: argparse.ArgumentParser, default):
    p.add_argument("--format", choices=("text", "json", "csv"), default=default, help="output format (default text)")
    p.add_argument("--tol", type=float, default=default, help="NNLS optimality tolerance")
    p.add_argument("--quiet", action="store_true", default=default, help="suppress warnings on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="histreg", description="Linear regression for histogram-valued data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_options(parser, None)
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    def command(name, func, help, table=True):
        p = sub.add_parser(name, help=help, description=help)
        _global_options(p, argparse.SUPPRESS)
        if table:
            p.add_argument("table", help="table file (.json or .csv), or - for stdin")
            p.add_argument("--input-format", choices=("json", "csv"), help="table format (default from the suffix)")
            p.add_argument("--response", help="response variable (CSV tables; default the first variable)")
        p.set_defaults(func=func)
        return p

    def model_arg(p, required=True):
        p.add_argument("--model", choices=[k.value for k in ModelKind], required=required, type=str.lower)

    def mc_args(p):
        p.add_argument("--samples", type=int, help="Monte Carlo samples per unit for BD predictions")
        p.add_argument("--mc-seed", type=int, help="Monte Carlo seed for BD predictions")

    command("summary", cmd_summary, "means, standard deviations and correlations of every variable")

    p = command("distance", cmd_distance, "Wasserstein distance between two units and its decomposition")
    p.add_argument("--pair", nargs=2, required=True, metavar=("I", "J"), help="unit ids (or 0-based positions)")
    p.add_argument("--var", help="variable (default the response)")

    p = command("fit", cmd_fit, "fit a model and print the fit document")
    model_arg(p)
    mc_args(p)

    p = command("bootstrap", cmd_bootstrap, "bootstrap coefficients and fit indices")
    model_arg(p)
    p.add_argument("--resamples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, help="worker threads (capped by HISTREG_THREADS)")

    p = command("predict", cmd_predict, "predicted response distributions from a saved fit")
    p.add_argument("--fit", required=True, help="fit document written by 'histreg --format json fit'")
    mc_args(p)

    p = command("export-curves", cmd_export_curves, "observed, predicted and residual quantile curves for plotting")
    model_arg(p, required=False)
    p.add_argument("--fit", help="fit document to use instead of fitting --model")
    p.add_argument("--grid-points", type=int, default=101)
    mc_args(p)

    p = command("demo-blood", cmd_demo_blood, "run the embedded Blood example end to end", table=False)
    model_arg(p, required=False)
    p.add_argument("--resamples", type=int, default=1000, help="bootstrap resamples per model (0 to skip)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int)
    mc_args(p)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.error("a command is required")
        if args.command == "export-curves" and not (args.model or args.fit):
            parser.error("export-curves needs --model or --fit")
        if args.command == "bootstrap" and args.resamples < 2:
            parser.error("--resamples must be at least 2")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    out = Output(args.format or "text", bool(args.quiet))
    try:
        args.func(args, out)
    except ValidationError as exc:
        print(f"error: invalid input ({len(exc.findings)} problem(s)):", file=sys.stderr)
        for f in exc.findings:
            print(f"  {f}", file=sys.stderr)
        return EXIT_INPUT
    except INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NUMERIC_ERRORS as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except HistRegError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except BrokenPipeError:
        return EXIT_OK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
