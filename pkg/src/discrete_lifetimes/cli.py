"""Command-line interface.

Subcommands ``fit``, ``sample``, ``curves``, ``diagnose`` and ``experiment``.
Exit codes: 0 success, 2 input or configuration error, 3 fit failure.
"""

import argparse
import csv
from importlib import resources
import io
import json
import math
from pathlib import Path
import secrets
import sys

import numpy as np

from . import __version__
from . import distributions as dist
from .diagnostics import ageing_report
from .distributions import IpdParams, W1Params, WeibullParams
from .experiments import ExperimentConfig, ExperimentId, run_experiment
from .inference import FitError, fit_ipd, fit_w1, fit_weibull, kaplan_meier
from .sampling import (
    CENSOR_MECHANISMS,
    Event,
    LifetimeSample,
    SeededStream,
    apply_censoring,
    sample_ipd,
    sample_w1,
    sample_weibull_discretized,
)

SCHEMA_VERSION = "1.0"
EXIT_OK = 0
EXIT_INPUT = 2
EXIT_FIT = 3

FITTERS = {"ipd": fit_ipd, "w1": fit_w1, "weibull": fit_weibull}
PARAM_NAMES = {"ipd": ("alpha", "zeta"), "w1": ("eta", "beta"), "weibull": ("eta", "beta")}
PARAM_TYPES = {"ipd": IpdParams, "w1": W1Params, "weibull": WeibullParams}


class InputError(Exception):
    """Bad input data, parameters or configuration (exit code 2)."""


# ---------------------------------------------------------------------------
# Data files
# ---------------------------------------------------------------------------


def _parse_int(text, what, row):
    try:
        value = int(text)
    except ValueError:
        raise InputError(f"row {row}: {what} {text!r} is not an integer") from None
    return value


def parse_dataset(text: str) -> LifetimeSample:
    """Parse a flat (``time,event``) or grouped (``n,count,event``) CSV.

    Row numbers in error messages count the header as row 1.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise InputError("empty dataset") from None
    if header == ["time", "event"]:
        grouped = False
    elif header == ["n", "count", "event"]:
        grouped = True
    else:
        raise InputError(
            f"row 1: unrecognized header {','.join(header)!r}; "
            "expected 'time,event' or 'n,count,event'"
        )
    values, events = [], []
    width = 3 if grouped else 2
    for row_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != width:
            raise InputError(f"row {row_no}: expected {width} fields, got {len(row)}")
        cells = [c.strip() for c in row]
        n = _parse_int(cells[0], "time" if not grouped else "n", row_no)
        if n < 1:
            raise InputError(f"row {row_no}: lifetime must be a positive integer")
        count = _parse_int(cells[1], "count", row_no) if grouped else 1
        if count < 1:
            raise InputError(f"row {row_no}: count must be >= 1")
        event = _parse_int(cells[-1], "event", row_no)
        if event not in (Event.CENSORED, Event.FAILURE):
            raise InputError(f"row {row_no}: event must be 0 or 1")
        values.extend([n] * count)
        events.extend([event == Event.FAILURE] * count)
    if not values:
        raise InputError("dataset has no records")
    return LifetimeSample(np.array(values, dtype=np.int64), np.array(events, dtype=bool))


def format_dataset(sample: LifetimeSample) -> str:
    lines = ["time,event"]
    lines += [f"{v},{int(e)}" for v, e in zip(sample.values.tolist(), sample.events.tolist())]
    return "\n".join(lines) + "\n"


def _read_input(path) -> LifetimeSample:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return parse_dataset(text)


# ---------------------------------------------------------------------------
# JSON with 17 significant digits
# ---------------------------------------------------------------------------


def _encode(obj, indent, level, warnings):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not math.isfinite(value):
            warnings.append(f"non-finite number {value} emitted as null")
            return "null"
        text = format(value, ".17g")
        if all(c not in text for c in ".en"):
            text += ".0"
        return text
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1, warnings)}"
            for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{_encode(v, indent, level + 1, warnings)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps_report(report: dict) -> str:
    """Serialize a report; floats carry 17 significant digits."""
    extra = []
    text = _encode(report, 2, 0, extra)
    if extra:
        report = dict(report, warnings=list(report.get("warnings", [])) + sorted(set(extra)))
        text = _encode(report, 2, 0, [])
    return text + "\n"


def load_schema() -> dict:
    """The versioned JSON schema of ``fit`` and ``diagnose`` reports."""
    text = resources.files(__package__).joinpath("schemas/report.schema.json").read_text(
        encoding="utf-8"
    )
    return json.loads(text)


def make_report(command, inputs, results, warnings=()):
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "inputs": inputs,
        "results": results,
        "warnings": list(warnings),
    }


def _emit(text, output):
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# Parameters
# ---------------------------------------------------------------------------


def parse_params(model: str, text: str):
    """``"alpha=0.01,zeta=0.001"`` or positional ``"0.01,0.001"``."""
    names = PARAM_NAMES[model]
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if len(parts) != 2:
        raise InputError(f"{model} needs two parameters {names}")
    values = {}
    for i, part in enumerate(parts):
        if "=" in part:
            key, _, val = part.partition("=")
            key = key.strip()
            if key not in names:
                raise InputError(f"unknown {model} parameter {key!r}")
        else:
            key, val = names[i], part
        try:
            values[key] = float(val)
        except ValueError:
            raise InputError(f"parameter {key} is not a number: {val!r}") from None
    if set(values) != set(names):
        raise InputError(f"{model} needs parameters {names}")
    try:
        return PARAM_TYPES[model](values[names[0]], values[names[1]])
    except ValueError as exc:
        raise InputError(f"invalid {model} parameters: {exc}") from None


def _param_dict(model, params):
    return {name: getattr(params, name) for name in PARAM_NAMES[model]}


def _seed(args):
    if args.seed is None:
        seed = secrets.randbits(63)
        print(f"seed: {seed}", file=sys.stderr)
        return seed, True
    if not 0 <= args.seed < 2**64:
        raise InputError("seed must be a 64-bit unsigned integer")
    return args.seed, False


def _models(choice):
    return list(FITTERS) if choice == "all" else [choice]


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _fit_entry(model, sample, n_max):
    try:
        fit = FITTERS[model](sample)
    except FitError as exc:
        entry = {"status": "failed", "error": type(exc).__name__, "message": str(exc)}
        if exc.result is not None:
            entry["last_iterate"] = exc.result.param_dict()
            entry["log_likelihood"] = exc.result.log_likelihood
        return None, entry
    report = ageing_report(fit.params, n_max=n_max)
    entry = {
        "status": "ok",
        "parameters": fit.param_dict(),
        "log_likelihood": fit.log_likelihood,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "standard_errors": (
            None
            if fit.stderr is None
            else dict(zip(PARAM_NAMES[model], fit.stderr))
        ),
        "active_bounds": list(fit.active_bounds),
        "derived": fit.derived,
        "ageing": report.to_dict(),
    }
    return fit, entry


def cmd_fit(args):
    sample = _read_input(args.input)
    results = {"data_summary": sample.summary(), "models": {}}
    failed = False
    for model in _models(args.model):
        _, entry = _fit_entry(model, sample, args.n_max)
        results["models"][model] = entry
        failed |= entry["status"] != "ok"
    inputs = {"input": str(args.input), "model": args.model}
    _emit(dumps_report(make_report("fit", inputs, results)), args.output)
    return EXIT_FIT if failed else EXIT_OK


def cmd_sample(args):
    params = parse_params(args.model, args.params)
    if args.count < 1:
        raise InputError("count must be >= 1")
    if not 0.0 <= args.censor_rate < 1.0:
        raise InputError("censor rate must lie in [0, 1)")
    seed, _ = _seed(args)
    gen = SeededStream(seed, 0).generator()
    sampler = {"ipd": sample_ipd, "w1": sample_w1, "weibull": sample_weibull_discretized}
    sample = sampler[args.model](params, args.count, gen)
    if args.censor_rate > 0:
        try:
            sample = apply_censoring(
                sample,
                args.censor_rate,
                gen,
                exact_count=args.exact_count,
                mechanism=args.censor_mechanism,
            )
        except ValueError as exc:
            raise InputError(str(exc)) from None
    _emit(format_dataset(sample), args.output)
    return EXIT_OK


def _parse_range(text):
    try:
        lo, hi = (int(p) for p in text.split(":"))
    except ValueError:
        raise InputError(f"range must look like LO:HI, got {text!r}") from None
    if lo < 1:
        raise InputError("range must start at n >= 1")
    if hi < lo:
        raise InputError(f"range is inverted ({lo} > {hi})")
    return lo, hi


def _curve_columns(model, params, n):
    if model == "ipd":
        log_surv = np.asarray(dist.ipd_log_survival(params, n))
        hazard = np.asarray(dist.ipd_hazard(params, n))
    else:
        log_surv = -((n.astype(float) / params.eta) ** params.beta)
        if model == "w1":
            hazard = np.asarray(dist.w1_hazard(params, n))
        else:
            hazard = np.asarray(dist.weibull_hazard_rate(params, n))
    return {
        f"{model}_cdf": -np.expm1(log_surv),
        f"{model}_survival": np.exp(log_surv),
        f"{model}_hazard": hazard,
    }


def cmd_curves(args):
    fitted = {}
    for model in FITTERS:
        text = getattr(args, f"{model}_params")
        if text:
            fitted[model] = parse_params(model, text)
    sample = None
    if args.input:
        sample = _read_input(args.input)
        for model in _models(args.model):
            if model in fitted:
                continue
            fit, entry = _fit_entry(model, sample, 3)
            if fit is None:
                print(f"{model} fit failed: {entry['message']}", file=sys.stderr)
                return EXIT_FIT
            fitted[model] = fit.params
    if not fitted:
        raise InputError("give --input or at least one of --ipd/--w1/--weibull parameters")

    if args.range:
        lo, hi = _parse_range(args.range)
    elif sample is not None:
        lo, hi = 1, int(sample.values.max())
    else:
        hi = max(
            math.ceil(dist.weibull_quantile(p, 0.99))
            if m != "ipd"
            else _ipd_q99(p)
            for m, p in fitted.items()
        )
        lo = 1
    if sample is not None and hi > sample.values.max() and not args.extend_range:
        raise InputError(
            f"range ends at {hi}, beyond the largest observation {int(sample.values.max())}; "
            "pass --extend-range to allow it"
        )
    if args.step < 1:
        raise InputError("step must be >= 1")
    n = np.arange(lo, hi + 1, args.step, dtype=np.int64)
    columns = {"n": n}
    for model in FITTERS:
        if model in fitted:
            columns.update(_curve_columns(model, fitted[model], n))
    if sample is not None:
        columns["km_survival"] = np.asarray(kaplan_meier(sample)(n), dtype=float)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(columns))
    for i in range(n.size):
        writer.writerow(
            [str(int(n[i]))] + [format(float(col[i]), ".17g") for k, col in columns.items() if k != "n"]
        )
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


def _ipd_q99(params):
    from .inference import ipd_quantile

    return ipd_quantile(params, 0.99)


def cmd_diagnose(args):
    if args.params:
        if args.model == "all":
            raise InputError("--params needs a single --model")
        params = {args.model: parse_params(args.model, args.params)}
        inputs = {"model": args.model, "params": _param_dict(args.model, params[args.model])}
    elif args.input:
        sample = _read_input(args.input)
        params = {}
        inputs = {"model": args.model, "input": str(args.input)}
        failures = {}
        for model in _models(args.model):
            fit, entry = _fit_entry(model, sample, args.n_max)
            if fit is None:
                failures[model] = entry
            else:
                params[model] = fit.params
        if failures:
            _emit(dumps_report(make_report("diagnose", inputs, {"failures": failures})), args.output)
            return EXIT_FIT
    else:
        raise InputError("give --params or --input")
    results = {
        model: dict(ageing_report(p, n_max=args.n_max).to_dict(), parameters=_param_dict(model, p))
        for model, p in params.items()
    }
    _emit(dumps_report(make_report("diagnose", inputs, results)), args.output)
    return EXIT_OK


def cmd_experiment(args):
    try:
        experiment = ExperimentId.parse(args.experiment)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    overrides = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise InputError("config must be a JSON object")
        data = dict(data)
        if "experiment" in data:
            try:
                named = ExperimentId.parse(str(data.pop("experiment")))
            except ValueError as exc:
                raise InputError(str(exc)) from None
            if named is not experiment:
                raise InputError(
                    f"config is for {named.value}, command asked for {experiment.value}"
                )
        overrides.update(data)
    if args.replicates is not None:
        overrides["replicates"] = args.replicates
    if args.seed is not None or "master_seed" not in overrides:
        overrides["master_seed"], _ = _seed(args)
    if args.censor_mechanism:
        overrides["censor_mechanism"] = args.censor_mechanism
    try:
        config = ExperimentConfig.from_dict(dict(overrides, experiment=experiment.value))
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid config: {exc}") from None
    result = run_experiment(config, workers=args.workers)
    paths = result.write(args.output or ".")
    print(paths["summary"])
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="discrete-lifetimes",
        description="Discrete lifetime models (Inverse Polya, Weibull-1, Weibull).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="fit models to a censored dataset")
    p.add_argument("--input", required=True, help="CSV dataset, '-' for stdin")
    p.add_argument("--model", choices=[*FITTERS, "all"], default="all")
    p.add_argument("--output", help="JSON report path (default stdout)")
    p.add_argument("--n-max", type=int, default=100_000, help="inflection scan limit")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sample", help="draw a flat CSV sample")
    p.add_argument("--model", choices=list(FITTERS), required=True)
    p.add_argument("--params", required=True, help="e.g. 'eta=300,beta=2.3'")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--censor-rate", type=float, default=0.0)
    p.add_argument("--censor-mechanism", choices=CENSOR_MECHANISMS, default="uniform")
    p.add_argument(
        "--exact-count",
        action="store_true",
        help="censor exactly ceil(rate * count) records (uniform mechanism)",
    )
    p.add_argument("--seed", type=int)
    p.add_argument("--output")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("curves", help="CDF, survival and hazard curves as CSV")
    p.add_argument("--input", help="dataset; models are fitted in-line and KM is added")
    p.add_argument("--model", choices=[*FITTERS, "all"], default="all")
    p.add_argument("--ipd", dest="ipd_params", help="IPD parameters 'alpha=..,zeta=..'")
    p.add_argument("--w1", dest="w1_params", help="W1 parameters 'eta=..,beta=..'")
    p.add_argument("--weibull", dest="weibull_params", help="Weibull parameters")
    p.add_argument("--range", help="LO:HI solicitation range")
    p.add_argument("--step", type=int, default=1, help="grid step")
    p.add_argument(
        "--extend-range",
        action="store_true",
        help="allow the range to go past the largest observation",
    )
    p.add_argument("--output")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("diagnose", help="ageing report from parameters or data")
    p.add_argument("--model", choices=[*FITTERS, "all"], default="all")
    p.add_argument("--params")
    p.add_argument("--input")
    p.add_argument("--n-max", type=int, default=100_000)
    p.add_argument("--output")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("experiment", help="run a simulation study")
    p.add_argument(
        "experiment",
        help="ratio-bands, hazard-recovery, closeness, sup-distance or mttf-bounds",
    )
    p.add_argument("--config", help="JSON file with ExperimentConfig fields")
    p.add_argument("--replicates", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--censor-mechanism", choices=CENSOR_MECHANISMS)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", help="output directory (default .)")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # usage errors, --help, --version
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
