"""Reproducible simulation studies.

Five studies are available, each a pure function of an
:class:`ExperimentConfig`:

``RatioBands``
    IPD fits to discretized Weibull samples; spread of ``zeta/alpha`` per shape.
``HazardRecovery``
    IPD and W1 fits to small samples drawn from concave and convex hazards.
``ClosenessStudy``
    Relative errors of W1 and continuous Weibull fits on censored W1 data.
``SupDistance``
    ``sup_n |w1_pmf(n) - weibull_density(n)|`` along a scale grid.
``MttfBounds``
    ``weibull_mean <= w1_mttf <= weibull_mean + 1`` over a grid.

Replicate ``r`` of scenario ``s`` draws from ``SeededStream(master_seed,
stream_id(experiment, s, r))``, so results do not depend on execution order
or on the number of worker processes.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
import itertools
import json
import math
from pathlib import Path
import platform
import time

import numpy as np

from . import distributions as dist
from .distributions import IpdParams, W1Params, WeibullParams
from .inference import FitError, fit_ipd, fit_w1, fit_weibull
from .sampling import (
    CENSOR_MECHANISMS,
    SeededStream,
    apply_censoring,
    sample_ipd,
    sample_w1,
    sample_weibull_discretized,
)

QUANTITIES = (
    "eta",
    "beta",
    "mttf",
    "q50",
    "q75",
    "q90",
    "q99",
    "hazard_at_q50",
    "hazard_at_q75",
    "hazard_at_q90",
    "hazard_at_q99",
)
_LEVELS = {"q50": 0.5, "q75": 0.75, "q90": 0.9, "q99": 0.99}
FAILURE_FLAG_RATE = 0.2

_SCENARIO_BITS = 24
_REPLICATE_BITS = 32


class ExperimentId(str, Enum):
    RATIO_BANDS = "RatioBands"
    HAZARD_RECOVERY = "HazardRecovery"
    CLOSENESS = "ClosenessStudy"
    SUP_DISTANCE = "SupDistance"
    MTTF_BOUNDS = "MttfBounds"

    @classmethod
    def _missing_(cls, value):
        if not isinstance(value, str):
            return None
        key = value.replace("-", "").replace("_", "").lower()
        if not key:
            return None
        for member in cls:
            if member.value.lower() == key or member.value.lower().startswith(key):
                return member
        return None

    @classmethod
    def parse(cls, text: str) -> "ExperimentId":
        """Accept the enum value or a kebab/snake-case alias (``ratio-bands``)."""
        try:
            return cls(text)
        except ValueError:
            raise ValueError(f"unknown experiment {text!r}") from None


_EXPERIMENT_INDEX = {e: i for i, e in enumerate(ExperimentId)}

TABLE1_BETAS = (0.5, 1.0, 1.2, 1.5, 1.8, 2.0, 2.25, 2.5)
CLOSENESS_ETAS = (10.0, 50.0, 300.0, 500.0, 800.0, 1000.0)
CLOSENESS_BETAS = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 5.0, 10.0)


def stream_id(experiment: ExperimentId, scenario: int, replicate: int) -> int:
    """Injective map ``(experiment, scenario, replicate) -> stream id``."""
    if not 0 <= scenario < 2**_SCENARIO_BITS:
        raise ValueError("scenario index out of range")
    if not 0 <= replicate < 2**_REPLICATE_BITS:
        raise ValueError("replicate index out of range")
    exp = _EXPERIMENT_INDEX[ExperimentId(experiment)]
    return ((exp << _SCENARIO_BITS) | scenario) << _REPLICATE_BITS | replicate


@dataclass(frozen=True)
class ExperimentConfig:
    """Configuration of one study.

    ``parameter_grid`` holds ``(eta, beta)`` pairs, except for
    ``HazardRecovery`` where each entry is ``(model, p1, p2)`` with model
    ``"w1"`` or ``"ipd"``.
    """

    experiment: ExperimentId
    replicates: int = 200
    sample_sizes: tuple = (100,)
    parameter_grid: tuple = ()
    censor_rates: tuple = (0.0,)
    master_seed: int = 20240101
    censor_mechanism: str = "uniform"

    def __post_init__(self):
        object.__setattr__(self, "experiment", ExperimentId(self.experiment))
        object.__setattr__(self, "sample_sizes", tuple(int(s) for s in self.sample_sizes))
        object.__setattr__(
            self, "parameter_grid", tuple(tuple(p) for p in self.parameter_grid)
        )
        object.__setattr__(self, "censor_rates", tuple(float(c) for c in self.censor_rates))
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise ValueError("replicates must be a positive integer")
        if any(s < 1 for s in self.sample_sizes):
            raise ValueError("sample sizes must be positive")
        if any(not 0.0 <= c < 1.0 for c in self.censor_rates):
            raise ValueError("censor rates must lie in [0, 1)")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")
        if self.censor_mechanism not in CENSOR_MECHANISMS:
            raise ValueError(f"unknown censoring mechanism {self.censor_mechanism!r}")
        if not self.parameter_grid:
            raise ValueError("parameter grid is empty")

    @classmethod
    def default(cls, experiment, **overrides) -> "ExperimentConfig":
        """Desk-scale defaults: 200 replicates, 100 for ratio bands."""
        experiment = ExperimentId(experiment)
        base = {
            ExperimentId.RATIO_BANDS: dict(
                replicates=100,
                sample_sizes=(1000,),
                parameter_grid=tuple(
                    (eta, beta) for beta in TABLE1_BETAS for eta in (10.0, 100.0, 500.0, 1000.0)
                ),
            ),
            ExperimentId.HAZARD_RECOVERY: dict(
                replicates=200,
                sample_sizes=(100,),
                parameter_grid=(("w1", 300.0, 1.5), ("w1", 300.0, 2.5), ("ipd", 0.01, 0.001)),
            ),
            ExperimentId.CLOSENESS: dict(
                replicates=200,
                sample_sizes=(50, 100),
                parameter_grid=tuple(itertools.product(CLOSENESS_ETAS, CLOSENESS_BETAS)),
                censor_rates=(0.0, 0.25, 0.5, 0.75),
            ),
            ExperimentId.SUP_DISTANCE: dict(
                replicates=1,
                parameter_grid=tuple(
                    itertools.product((10.0, 50.0, 100.0, 300.0, 1000.0), (1.0, 1.5, 2.0, 2.3, 5.0))
                ),
            ),
            ExperimentId.MTTF_BOUNDS: dict(
                replicates=1,
                parameter_grid=tuple(itertools.product(CLOSENESS_ETAS, CLOSENESS_BETAS)),
            ),
        }[experiment]
        base.update(overrides)
        return cls(experiment, **base)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        try:
            experiment = ExperimentId.parse(str(data.pop("experiment")))
        except KeyError:
            raise ValueError("config is missing 'experiment'") from None
        unknown = set(data) - {f for f in cls.__dataclass_fields__ if f != "experiment"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls.default(experiment, **data)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["experiment"] = self.experiment.value
        out["sample_sizes"] = list(self.sample_sizes)
        out["parameter_grid"] = [list(p) for p in self.parameter_grid]
        out["censor_rates"] = list(self.censor_rates)
        return out

    def scenarios(self):
        """Canonical scenario list ``(index, descriptor)``."""
        if self.experiment in (ExperimentId.SUP_DISTANCE, ExperimentId.MTTF_BOUNDS):
            keys = [dict(eta=float(e), beta=float(b)) for e, b in self.parameter_grid]
        elif self.experiment is ExperimentId.RATIO_BANDS:
            keys = [
                dict(eta=float(e), beta=float(b), size=n)
                for (e, b), n in itertools.product(self.parameter_grid, self.sample_sizes)
            ]
        elif self.experiment is ExperimentId.HAZARD_RECOVERY:
            keys = [
                dict(model=str(m), p1=float(p1), p2=float(p2), size=n)
                for (m, p1, p2), n in itertools.product(self.parameter_grid, self.sample_sizes)
            ]
        else:
            keys = [
                dict(eta=float(e), beta=float(b), censor_rate=c, size=n)
                for (e, b), c, n in itertools.product(
                    self.parameter_grid, self.censor_rates, self.sample_sizes
                )
            ]
        return list(enumerate(keys))


@dataclass(frozen=True)
class ErrorRecord:
    """Relative errors ``(true - estimate) / true`` of one fit."""

    eta: float
    beta: float
    censor_rate: float
    size: int
    replicate: int
    model: str
    relative_errors: dict

    def __post_init__(self):
        unknown = set(self.relative_errors) - set(QUANTITIES)
        if unknown:
            raise ValueError(f"unknown quantities {sorted(unknown)}")


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    raw_columns: tuple
    raw_rows: list
    summary_columns: tuple
    summary_rows: list
    wall_time: float = 0.0
    notes: dict = field(default_factory=dict)
    extra_tables: dict = field(default_factory=dict)

    def manifest(self) -> dict:
        from . import __version__

        return {
            "experiment": self.config.experiment.value,
            "config": self.config.to_dict(),
            "master_seed": self.config.master_seed,
            "software_version": __version__,
            "python_version": platform.python_version(),
            "numpy_version": np.__version__,
            "wall_time_seconds": self.wall_time,
            **self.notes,
        }

    def write(self, outdir, prefix: str | None = None) -> dict:
        """Write the raw CSV, summary CSV and manifest JSON; returns their paths."""
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        prefix = prefix or _snake(self.config.experiment.value)
        paths = {
            "raw": outdir / f"{prefix}_raw.csv",
            "summary": outdir / f"{prefix}_summary.csv",
            "manifest": outdir / f"{prefix}_manifest.json",
        }
        write_csv(paths["raw"], self.raw_columns, self.raw_rows)
        write_csv(paths["summary"], self.summary_columns, self.summary_rows)
        for name, (columns, rows) in self.extra_tables.items():
            paths[name] = outdir / f"{prefix}_{name}.csv"
            write_csv(paths[name], columns, rows)
        with open(paths["manifest"], "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.manifest(), fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
        return paths


def _snake(name: str) -> str:
    return "".join("_" + c.lower() if c.isupper() else c for c in name).lstrip("_")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"not serializable: {type(obj).__name__}")


def format_value(value) -> str:
    """CSV cell text: floats with 17 significant digits, ``None`` empty."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value)) if math.isfinite(value) else str(float(value))
    return str(value)


def write_csv(path, columns, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row.get(c)) for c in columns])


def _median(values):
    return float(np.median(np.sort(np.asarray(values, dtype=float)))) if len(values) else None


def _map(func, tasks, workers):
    if workers <= 1:
        return [func(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


# ---------------------------------------------------------------------------
# Ratio bands
# ---------------------------------------------------------------------------


def _ratio_task(task):
    config, s, key = task
    rows = []
    params = WeibullParams(key["eta"], key["beta"])
    for r in range(config.replicates):
        stream = SeededStream(config.master_seed, stream_id(config.experiment, s, r))
        sample = sample_weibull_discretized(params, key["size"], stream)
        row = dict(key, replicate=r, alpha=None, zeta=None, ratio=None, status="ok")
        try:
            fit = fit_ipd(sample)
        except (FitError, ValueError) as exc:
            row["status"] = type(exc).__name__
        else:
            row.update(alpha=fit.params.alpha, zeta=fit.params.zeta, ratio=fit.params.ratio)
        rows.append(row)
    return rows


def run_ratio_bands(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """IPD fits to discretized Weibull samples; per shape, the range and median
    of the fitted ``zeta/alpha`` pooled over replicates and scale values."""
    _expect(config, ExperimentId.RATIO_BANDS)
    start = time.perf_counter()
    tasks = [(config, s, key) for s, key in config.scenarios()]
    raw = list(itertools.chain.from_iterable(_map(_ratio_task, tasks, workers)))

    summary = []
    for beta in sorted({row["beta"] for row in raw}):
        rows = [row for row in raw if row["beta"] == beta]
        ratios = [row["ratio"] for row in rows if row["status"] == "ok"]
        failures = len(rows) - len(ratios)
        summary.append(
            dict(
                beta=beta,
                fits=len(ratios),
                failures=failures,
                ratio_min=min(ratios) if ratios else None,
                ratio_median=_median(ratios),
                ratio_max=max(ratios) if ratios else None,
                flagged=failures > FAILURE_FLAG_RATE * len(rows),
            )
        )
    medians = [row["ratio_median"] for row in summary if row["ratio_median"] is not None]
    notes = {
        "median_strictly_increasing": all(b > a for a, b in zip(medians, medians[1:])),
        "flagged_scenarios": [row["beta"] for row in summary if row["flagged"]],
    }
    return ExperimentResult(
        config,
        ("eta", "beta", "size", "replicate", "status", "alpha", "zeta", "ratio"),
        raw,
        ("beta", "fits", "failures", "ratio_min", "ratio_median", "ratio_max", "flagged"),
        summary,
        time.perf_counter() - start,
        notes,
    )


# ---------------------------------------------------------------------------
# Hazard recovery
# ---------------------------------------------------------------------------


def _truth(key):
    if key["model"] == "ipd":
        return IpdParams(key["p1"], key["p2"])
    if key["model"] == "w1":
        return W1Params(key["p1"], key["p2"])
    raise ValueError(f"unknown truth model {key['model']!r}")


def _hazard(params, n):
    if isinstance(params, IpdParams):
        return np.asarray(dist.ipd_hazard(params, n))
    return np.asarray(dist.w1_hazard(params, n))


def _quantile(params, q):
    if isinstance(params, IpdParams):
        from .inference import ipd_quantile

        return ipd_quantile(params, q)
    return math.ceil(dist.weibull_quantile(params, q))


def _hazard_task(task):
    config, s, key = task
    truth = _truth(key)
    sampler = sample_ipd if isinstance(truth, IpdParams) else sample_w1
    lo = max(1, _quantile(truth, 0.05))
    hi = max(lo, _quantile(truth, 0.95))
    central = np.arange(lo, hi + 1)
    rows, curves = [], []
    for r in range(config.replicates):
        stream = SeededStream(config.master_seed, stream_id(config.experiment, s, r))
        sample = sampler(truth, key["size"], stream)
        support = np.arange(1, int(sample.values.max()) + 1)
        true_h = _hazard(truth, support)
        row = dict(key, replicate=r)
        fitted = {}
        for name, fitter in (("ipd", fit_ipd), ("w1", fit_w1)):
            try:
                fitted[name] = fitter(sample).params
            except (FitError, ValueError) as exc:
                row[f"{name}_status"] = type(exc).__name__
                continue
            row[f"{name}_status"] = "ok"
            h = _hazard(fitted[name], support)
            row[f"{name}_sup_error"] = float(np.max(np.abs(h - true_h)))
            row[f"{name}_sup_error_central"] = float(
                np.max(np.abs(_hazard(fitted[name], central) - _hazard(truth, central)))
            )
        rows.append(row)
        if r == 0:
            for i, n in enumerate(support.tolist()):
                point = dict(key, n=n, truth=float(true_h[i]))
                for name, params in fitted.items():
                    point[name] = float(_hazard(params, n))
                curves.append(point)
    return rows, curves


def run_hazard_recovery(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Fit IPD and W1 to small samples and compare the fitted hazards with
    the generating one.

    Sup-norm errors are taken over the observed support ``1..max(sample)``
    and over the central range between the true 5% and 95% quantiles. The
    curves of replicate 0 are kept as an extra ``curves`` table.
    """
    _expect(config, ExperimentId.HAZARD_RECOVERY)
    start = time.perf_counter()
    tasks = [(config, s, key) for s, key in config.scenarios()]
    results = _map(_hazard_task, tasks, workers)
    raw = [row for rows, _ in results for row in rows]
    curves = [pt for _, pts in results for pt in pts]

    summary = []
    for (_, key), (rows, _) in zip(config.scenarios(), results):
        out = dict(key)
        for name in ("ipd", "w1"):
            errs = [row[f"{name}_sup_error"] for row in rows if row[f"{name}_status"] == "ok"]
            cent = [
                row[f"{name}_sup_error_central"] for row in rows if row[f"{name}_status"] == "ok"
            ]
            out[f"{name}_fits"] = len(errs)
            out[f"{name}_failures"] = len(rows) - len(errs)
            out[f"{name}_median_sup_error"] = _median(errs)
            out[f"{name}_median_sup_error_central"] = _median(cent)
            out[f"{name}_flagged"] = len(rows) - len(errs) > FAILURE_FLAG_RATE * len(rows)
        summary.append(out)

    key_cols = ("model", "p1", "p2", "size")
    per_model = ("status", "sup_error", "sup_error_central")
    raw_cols = key_cols + ("replicate",) + tuple(
        f"{m}_{c}" for m in ("ipd", "w1") for c in per_model
    )
    summ_cols = key_cols + tuple(
        f"{m}_{c}"
        for m in ("ipd", "w1")
        for c in ("fits", "failures", "median_sup_error", "median_sup_error_central", "flagged")
    )
    return ExperimentResult(
        config,
        raw_cols,
        raw,
        summ_cols,
        summary,
        time.perf_counter() - start,
        {"truth_hazards": "parametric stand-ins: W1(300, 1.5) concave, W1(300, 2.5) convex"},
        {"curves": (key_cols + ("n", "truth", "ipd", "w1"), curves)},
    )


# ---------------------------------------------------------------------------
# Closeness study
# ---------------------------------------------------------------------------


def true_quantities(truth: W1Params) -> dict:
    """Reference values of the monitored quantities under the W1 truth.

    Quantiles are the continuous ``n_q`` of the generating law; hazards are
    taken at ``ceil(n_q)``.
    """
    out = {"eta": truth.eta, "beta": truth.beta, "mttf": dist.w1_mttf(truth)}
    for name, q in _LEVELS.items():
        n_q = float(dist.weibull_quantile(truth, q))
        out[name] = n_q
        out[f"hazard_at_{name}"] = float(dist.w1_hazard(truth, max(1, math.ceil(n_q))))
    return out


def estimated_quantities(model: str, params, truth: W1Params) -> dict:
    """Plug-in estimates; hazards at the true quantiles (``ceil``).

    The W1 fit is read through the discrete hazard, the Weibull fit through the
    continuous hazard rate.
    """
    out = {"eta": params.eta, "beta": params.beta}
    if model == "w1":
        out["mttf"] = dist.w1_mttf(params)
    else:
        out["mttf"] = dist.weibull_mean(params)
    for name, q in _LEVELS.items():
        out[name] = float(dist.weibull_quantile(params, q))
        n = max(1, math.ceil(float(dist.weibull_quantile(truth, q))))
        if model == "w1":
            out[f"hazard_at_{name}"] = float(dist.w1_hazard(params, n))
        else:
            out[f"hazard_at_{name}"] = float(dist.weibull_hazard_rate(params, n))
    return out


def relative_errors(true: dict, estimate: dict) -> dict:
    return {
        q: (true[q] - estimate[q]) / true[q] if true[q] != 0 else math.nan
        for q in QUANTITIES
    }


def _closeness_task(task):
    config, s, key = task
    truth = W1Params(key["eta"], key["beta"])
    ref = true_quantities(truth)
    rows = []
    for r in range(config.replicates):
        stream = SeededStream(config.master_seed, stream_id(config.experiment, s, r))
        gen = stream.generator()
        sample = sample_w1(truth, key["size"], gen)
        if key["censor_rate"] > 0:
            try:
                sample = apply_censoring(
                    sample, key["censor_rate"], gen, mechanism=config.censor_mechanism
                )
            except ValueError as exc:
                for model in ("w1", "weibull"):
                    rows.append(dict(key, replicate=r, model=model, status=type(exc).__name__))
                continue
        for model, fitter in (("w1", fit_w1), ("weibull", fit_weibull)):
            row = dict(key, replicate=r, model=model, status="ok")
            try:
                fit = fitter(sample)
            except (FitError, ValueError) as exc:
                row["status"] = type(exc).__name__
            else:
                est = estimated_quantities(model, fit.params, truth)
                row.update({f"err_{q}": v for q, v in relative_errors(ref, est).items()})
            rows.append(row)
    return rows


def run_closeness_study(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """W1 and Weibull fits on censored W1 samples.

    One summary row per (scenario, quantity) carries both mean relative errors,
    which are the paired points of a W1-error versus Weibull-error plot.
    """
    _expect(config, ExperimentId.CLOSENESS)
    start = time.perf_counter()
    tasks = [(config, s, key) for s, key in config.scenarios()]
    per_scenario = _map(_closeness_task, tasks, workers)
    raw = list(itertools.chain.from_iterable(per_scenario))

    summary = []
    flagged = []
    for (_, key), rows in zip(config.scenarios(), per_scenario):
        counts = {}
        for model in ("w1", "weibull"):
            ok = [row for row in rows if row["model"] == model and row["status"] == "ok"]
            total = sum(1 for row in rows if row["model"] == model)
            counts[model] = (ok, total - len(ok))
        flag = any(fail > FAILURE_FLAG_RATE * config.replicates for _, fail in counts.values())
        if flag:
            flagged.append(key)
        for q in QUANTITIES:
            out = dict(key, quantity=q, replicates=config.replicates, flagged=flag)
            for model, (ok, fail) in counts.items():
                vals = [row[f"err_{q}"] for row in ok]
                out[f"{model}_fits"] = len(ok)
                out[f"{model}_failures"] = fail
                out[f"{model}_mean_error"] = math.fsum(vals) / len(vals) if vals else None
            if out["w1_mean_error"] is not None and out["weibull_mean_error"] is not None:
                out["difference"] = out["w1_mean_error"] - out["weibull_mean_error"]
            summary.append(out)

    key_cols = ("eta", "beta", "censor_rate", "size")
    raw_cols = key_cols + ("replicate", "model", "status") + tuple(f"err_{q}" for q in QUANTITIES)
    summ_cols = key_cols + (
        "quantity",
        "replicates",
        "w1_fits",
        "w1_failures",
        "weibull_fits",
        "weibull_failures",
        "w1_mean_error",
        "weibull_mean_error",
        "difference",
        "flagged",
    )
    return ExperimentResult(
        config,
        raw_cols,
        raw,
        summ_cols,
        summary,
        time.perf_counter() - start,
        {"flagged_scenarios": flagged, "censor_mechanism": config.censor_mechanism},
    )


# ---------------------------------------------------------------------------
# Deterministic sweeps
# ---------------------------------------------------------------------------


def sup_distance(params: W1Params, q_max: float = 1.0 - 1e-8):
    """``(sup, argmax)`` of ``|w1_pmf(n) - weibull_density(n)|`` over
    ``n = 1..ceil(quantile(q_max))``."""
    n_max = max(1, math.ceil(float(dist.weibull_quantile(params, q_max))))
    n = np.arange(1, n_max + 1)
    diff = np.abs(np.asarray(dist.w1_pmf(params, n)) - np.asarray(dist.weibull_density(params, n)))
    i = int(np.argmax(diff))
    return float(diff[i]), int(n[i])


def run_sup_distance(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """Sup distance between the W1 pmf and the Weibull density, with a check
    that it does not increase along the scale grid for each shape."""
    _expect(config, ExperimentId.SUP_DISTANCE)
    start = time.perf_counter()
    rows = []
    for _, key in config.scenarios():
        if key["beta"] < 1.0:
            raise ValueError("sup-distance study requires beta >= 1")
        value, arg = sup_distance(W1Params(key["eta"], key["beta"]))
        rows.append(dict(key, sup_distance=value, argmax_n=arg))
    rows.sort(key=lambda row: (row["beta"], row["eta"]))
    summary = []
    for beta, group in itertools.groupby(rows, key=lambda row: row["beta"]):
        group = list(group)
        sups = [row["sup_distance"] for row in group]
        summary.append(
            dict(
                beta=beta,
                etas=" ".join(repr(row["eta"]) for row in group),
                first=sups[0],
                last=sups[-1],
                nonincreasing=all(b <= a for a, b in zip(sups, sups[1:])),
                strictly_decreasing=all(b < a for a, b in zip(sups, sups[1:])),
            )
        )
    return ExperimentResult(
        config,
        ("beta", "eta", "sup_distance", "argmax_n"),
        rows,
        ("beta", "etas", "first", "last", "nonincreasing", "strictly_decreasing"),
        summary,
        time.perf_counter() - start,
    )


def run_mttf_bounds(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    """``weibull_mean <= w1_mttf <= weibull_mean + 1`` over the grid."""
    _expect(config, ExperimentId.MTTF_BOUNDS)
    start = time.perf_counter()
    rows = []
    for _, key in config.scenarios():
        ew = dist.weibull_mean(WeibullParams(key["eta"], key["beta"]))
        ew1 = dist.w1_mttf(W1Params(key["eta"], key["beta"]))
        rows.append(
            dict(
                key,
                weibull_mean=ew,
                w1_mttf=ew1,
                gap=ew1 - ew,
                violation=not (ew <= ew1 <= ew + 1.0),
            )
        )
    violations = sum(row["violation"] for row in rows)
    gaps = [row["gap"] for row in rows]
    summary = [
        dict(points=len(rows), violations=violations, gap_min=min(gaps), gap_max=max(gaps))
    ]
    return ExperimentResult(
        config,
        ("eta", "beta", "weibull_mean", "w1_mttf", "gap", "violation"),
        rows,
        ("points", "violations", "gap_min", "gap_max"),
        summary,
        time.perf_counter() - start,
        {"violations": violations},
    )


def _expect(config, experiment):
    if config.experiment is not experiment:
        raise ValueError(f"expected a {experiment.value} config, got {config.experiment.value}")


RUNNERS = {
    ExperimentId.RATIO_BANDS: run_ratio_bands,
    ExperimentId.HAZARD_RECOVERY: run_hazard_recovery,
    ExperimentId.CLOSENESS: run_closeness_study,
    ExperimentId.SUP_DISTANCE: run_sup_distance,
    ExperimentId.MTTF_BOUNDS: run_mttf_bounds,
}


def run_experiment(config: ExperimentConfig, workers: int = 1) -> ExperimentResult:
    return RUNNERS[config.experiment](config, workers=workers)


def with_replicates(config: ExperimentConfig, replicates: int) -> ExperimentConfig:
    return replace(config, replicates=replicates)
