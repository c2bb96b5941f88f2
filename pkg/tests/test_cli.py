import csv
import io
import json
import math
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from discrete_lifetimes import distributions as dist
from discrete_lifetimes.cli import (
    InputError,
    dumps_report,
    format_dataset,
    load_schema,
    main,
    parse_dataset,
    parse_params,
)
from discrete_lifetimes.distributions import IpdParams, W1Params
from discrete_lifetimes.sampling import LifetimeSample


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def validate(report):
    jsonschema.validate(report, load_schema())


@pytest.fixture
def table2_like(tmp_path, capsys):
    path = tmp_path / "sample1.csv"
    code, _, _ = run(
        capsys, "sample", "--model", "w1", "--params", "eta=300,beta=2.3", "--count", 500,
        "--censor-rate", 0.96, "--seed", 11, "--output", path,
    )
    assert code == 0
    return path


# --- dataset parsing ------------------------------------------------------------------


def test_parse_flat_and_grouped():
    flat = parse_dataset("time,event\n3,1\n5,0\n3,1\n")
    grouped = parse_dataset("n,count,event\n3,2,1\n5,1,0\n")
    assert sorted(flat.records()) == sorted(grouped.records())
    assert flat.summary()["failures"] == 2


@pytest.mark.parametrize(
    "text,fragment",
    [
        ("", "empty"),
        ("t,e\n1,1\n", "row 1"),
        ("time,event\n3,1\n0,1\n", "row 3"),
        ("time,event\n3,1\n4,2\n", "row 3"),
        ("time,event\n3,1\nx,1\n", "row 3"),
        ("time,event\n3,1,1\n", "row 2"),
        ("n,count,event\n3,0,1\n", "row 2"),
        ("time,event\n", "no records"),
    ],
)
def test_parse_errors_are_row_numbered(text, fragment):
    with pytest.raises(InputError, match=fragment):
        parse_dataset(text)


def test_format_parse_round_trip():
    s = LifetimeSample.from_records([(4, 1), (2, 0), (9, 1)])
    assert parse_dataset(format_dataset(s)).records() == s.records()


def test_parse_params():
    assert parse_params("ipd", "alpha=0.3,zeta=0") == IpdParams(0.3, 0.0)
    assert parse_params("w1", "300,2.3") == W1Params(300, 2.3)
    assert parse_params("w1", "beta=2.3,eta=300") == W1Params(300, 2.3)
    for bad in ("eta=300", "eta=300,gamma=2", "eta=x,beta=1", "eta=-1,beta=1"):
        with pytest.raises(InputError):
            parse_params("w1", bad)


def test_json_numbers_keep_17_digits():
    text = dumps_report({"x": 0.1, "y": 2.0, "z": 1 / 3, "big": 1e300, "n": 3, "bad": math.inf})
    data = json.loads(text)
    assert data["x"] == 0.1 and data["z"] == 1 / 3 and data["big"] == 1e300
    assert '"y": 2.0' in text and '"n": 3' in text
    assert data["bad"] is None and data["warnings"]


# --- sample -----------------------------------------------------------------------------


def test_sample_ipd_no_censoring(capsys):
    code, out, _ = run(capsys, "sample", "--model", "ipd", "--params", "alpha=0.3,zeta=0", "--count", 5, "--seed", 1)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 5 and all(r["event"] == "1" for r in rows)


def test_sample_censored_and_deterministic(capsys):
    argv = ("sample", "--model", "w1", "--params", "eta=300,beta=2.3", "--count", 100, "--censor-rate", 0.75, "--seed", 7)
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    censored = sum(r["event"] == "0" for r in csv.DictReader(io.StringIO(first)))
    assert 60 <= censored <= 90  # binomial(100, 0.75) within 3.5 sd


def test_sample_exact_count(capsys):
    code, out, _ = run(
        capsys, "sample", "--model", "w1", "--params", "300,2.3", "--count", 100,
        "--censor-rate", 0.75, "--exact-count", "--seed", 7,
    )
    assert code == 0
    assert sum(r["event"] == "0" for r in csv.DictReader(io.StringIO(out))) == 75
    bad = run(
        capsys, "sample", "--model", "w1", "--params", "300,2.3", "--count", 100, "--censor-rate", 0.5,
        "--exact-count", "--censor-mechanism", "independent", "--seed", 7,
    )
    assert bad[0] == 2


def test_sample_without_seed_prints_seed(capsys):
    code, out, err = run(capsys, "sample", "--model", "ipd", "--params", "0.3,0.1", "--count", 4)
    assert code == 0
    seed = int(err.strip().split("seed: ")[1])
    _, again, _ = run(capsys, "sample", "--model", "ipd", "--params", "0.3,0.1", "--count", 4, "--seed", seed)
    assert again == out


@pytest.mark.parametrize(
    "extra",
    [("--params", "alpha=1.5,zeta=0"), ("--params", "alpha=0.3"), ("--params", "0.3,0", "--censor-rate", 1.0)],
)
def test_sample_bad_parameters_exit_2(capsys, extra):
    argv = ["sample", "--model", "ipd", "--count", 5, "--seed", 1, *extra]
    if "--params" not in extra:
        argv += ["--params", "0.3,0"]
    assert run(capsys, *argv)[0] == 2


# --- fit --------------------------------------------------------------------------------


def test_fit_round_trip_and_schema(table2_like, capsys):
    code, out, _ = run(capsys, "fit", "--input", table2_like, "--model", "all")
    assert code == 0
    report = json.loads(out)
    validate(report)
    assert set(report) == {"schema_version", "command", "inputs", "results", "warnings"}
    summary = report["results"]["data_summary"]
    assert summary["size"] == 500 and summary["failures"] + summary["censors"] == 500
    models = report["results"]["models"]
    w1, wb = models["w1"]["parameters"]["eta"], models["weibull"]["parameters"]["eta"]
    assert abs(w1 - wb) / w1 < 0.05
    assert set(models["w1"]["derived"]) >= {"mttf", "q50", "q90"}
    assert models["ipd"]["ageing"]["ratio_zeta_alpha"] is not None


def test_fit_geometric_ipd_plausible(tmp_path, capsys):
    path = tmp_path / "geom.csv"
    run(capsys, "sample", "--model", "ipd", "--params", "0.2,0", "--count", 2000, "--seed", 3, "--output", path)
    code, out, _ = run(capsys, "fit", "--input", path, "--model", "ipd")
    assert code == 0
    ageing = json.loads(out)["results"]["models"]["ipd"]["ageing"]
    assert ageing["plausibility_flag"] in ("Plausible", "Boundary")
    assert ageing["plausibility_flag"] != "ImplausibleRatioAboveOne"


def test_fit_all_censored_exit_3(tmp_path, capsys):
    path = tmp_path / "c.csv"
    path.write_text("time,event\n3,0\n7,0\n")
    code, out, _ = run(capsys, "fit", "--input", path)
    assert code == 3
    report = json.loads(out)
    validate(report)
    assert report["results"]["models"]["w1"]["error"] == "AllCensored"


@pytest.mark.parametrize("content", ["time,event\n3,x\n", "bogus\n"])
def test_fit_parse_error_exit_2(tmp_path, capsys, content):
    path = tmp_path / "bad.csv"
    path.write_text(content)
    code, _, err = run(capsys, "fit", "--input", path)
    assert code == 2 and "row" in err


def test_fit_missing_file_and_bad_flags(tmp_path, capsys):
    assert run(capsys, "fit", "--input", tmp_path / "missing.csv")[0] == 2
    assert run(capsys, "fit")[0] == 2
    assert run(capsys, "fit", "--input", "x", "--model", "gamma")[0] == 2
    assert run(capsys)[0] == 2


def test_fit_is_byte_reproducible(table2_like, tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "fit", "--input", table2_like, "--output", a)
    run(capsys, "fit", "--input", table2_like, "--output", b)
    assert a.read_bytes() == b.read_bytes()


# --- curves -----------------------------------------------------------------------------


def read_curves(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_curves_table2_params(capsys):
    code, out, _ = run(capsys, "curves", "--w1", "eta=306.814,beta=2.320", "--range", "1:600")
    assert code == 0
    rows = read_curves(out)
    assert len(rows) == 600
    assert list(rows[0]) == ["n", "w1_cdf", "w1_survival", "w1_hazard"]
    cdf307 = float(rows[306]["w1_cdf"])
    assert cdf307 == pytest.approx(1 - math.exp(-((307 / 306.814) ** 2.32)), rel=1e-15)
    assert cdf307 == pytest.approx(1 - math.exp(-1), abs=2e-3)


def test_curves_ipd_more_optimistic_at_large_n(capsys):
    code, out, _ = run(
        capsys, "curves", "--w1", "306.814,2.320", "--ipd", "alpha=7.037e-12,zeta=1.349e-5",
        "--range", "400:2000", "--step", 100,
    )
    assert code == 0
    rows = read_curves(out)
    assert rows[0]["n"] == "400" and rows[-1]["n"] == "2000"
    late = [r for r in rows if int(r["n"]) >= 600]
    assert all(float(r["ipd_cdf"]) < float(r["w1_cdf"]) for r in late)


def test_curves_from_dataset(table2_like, capsys):
    code, out, _ = run(capsys, "curves", "--input", table2_like)
    assert code == 0
    rows = read_curves(out)
    assert "km_survival" in rows[0]
    for m in ("ipd", "w1", "weibull"):
        assert f"{m}_cdf" in rows[0]
    km = np.array([float(r["km_survival"]) for r in rows])
    assert np.all(np.diff(km) <= 0)


def test_curves_range_checks(table2_like, capsys):
    assert run(capsys, "curves", "--w1", "300,2", "--range", "10:5")[0] == 2
    assert run(capsys, "curves", "--w1", "300,2", "--range", "0:5")[0] == 2
    assert run(capsys, "curves", "--w1", "300,2", "--range", "abc")[0] == 2
    assert run(capsys, "curves", "--range", "1:5")[0] == 2
    assert run(capsys, "curves", "--input", table2_like, "--range", "1:100000")[0] == 2
    code, out, _ = run(capsys, "curves", "--input", table2_like, "--range", "1:2000", "--step", 50, "--extend-range")
    assert code == 0 and read_curves(out)[-1]["n"] == "1951"


# --- diagnose ---------------------------------------------------------------------------


def test_diagnose_examples(capsys):
    code, out, _ = run(capsys, "diagnose", "--model", "ipd", "--params", "alpha=0.01,zeta=0.02")
    assert code == 0
    report = json.loads(out)
    validate(report)
    assert report["results"]["ipd"]["plausibility_flag"] == "ImplausibleRatioAboveOne"
    _, out, _ = run(capsys, "diagnose", "--model", "w1", "--params", "eta=50,beta=1")
    assert json.loads(out)["results"]["w1"]["ageing_class"] == "NoAgeing"
    _, out, _ = run(capsys, "diagnose", "--model", "w1", "--params", "eta=1000,beta=10")
    report = json.loads(out)
    validate(report)
    assert isinstance(report["results"]["w1"]["inflection_point"], int)


def test_diagnose_from_dataset(table2_like, capsys):
    code, out, _ = run(capsys, "diagnose", "--input", table2_like)
    assert code == 0
    report = json.loads(out)
    validate(report)
    assert set(report["results"]) == {"ipd", "w1", "weibull"}


def test_diagnose_errors(tmp_path, capsys):
    assert run(capsys, "diagnose", "--model", "w1")[0] == 2
    assert run(capsys, "diagnose", "--params", "1,1")[0] == 2
    path = tmp_path / "c.csv"
    path.write_text("time,event\n3,0\n")
    code, out, _ = run(capsys, "diagnose", "--input", path, "--model", "w1")
    assert code == 3
    validate(json.loads(out))


# --- experiment -------------------------------------------------------------------------


def test_experiment_mttf_bounds(tmp_path, capsys):
    code, out, _ = run(capsys, "experiment", "mttf-bounds", "--seed", 1, "--output", tmp_path)
    assert code == 0
    summary = list(csv.DictReader(open(out.strip(), encoding="utf-8")))
    assert summary[0]["violations"] == "0"
    raw = list(csv.DictReader(open(tmp_path / "mttf_bounds_raw.csv", encoding="utf-8")))
    assert all(r["violation"] == "false" for r in raw)
    assert (tmp_path / "mttf_bounds_manifest.json").exists()


def test_experiment_ratio_bands_rows(tmp_path, capsys):
    code, out, _ = run(capsys, "experiment", "ratio-bands", "--replicates", 1, "--seed", 5, "--output", tmp_path)
    assert code == 0
    summary = list(csv.DictReader(open(out.strip(), encoding="utf-8")))
    assert len(summary) == 8


def test_experiment_closeness_deterministic(tmp_path, capsys):
    config = tmp_path / "cfg.json"
    config.write_text(json.dumps({"parameter_grid": [[300, 2.3]], "censor_rates": [0.5], "sample_sizes": [50]}))
    paths = []
    for name in ("a", "b"):
        code, out, _ = run(
            capsys, "experiment", "closeness", "--config", config, "--replicates", 2, "--seed", 9, "--output", tmp_path / name
        )
        assert code == 0
        paths.append(out.strip())
    assert open(paths[0], "rb").read() == open(paths[1], "rb").read()


def test_experiment_config_errors(tmp_path, capsys):
    assert run(capsys, "experiment", "bogus", "--seed", 1)[0] == 2
    assert run(capsys, "experiment", "closeness", "--replicates", 0, "--seed", 1)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "experiment", "closeness", "--config", bad)[0] == 2
    bad.write_text(json.dumps({"experiment": "mttf-bounds"}))
    assert run(capsys, "experiment", "closeness", "--config", bad, "--seed", 1)[0] == 2
    bad.write_text(json.dumps({"censor_rates": [1.5]}))
    assert run(capsys, "experiment", "closeness", "--config", bad, "--seed", 1)[0] == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "discrete_lifetimes", "diagnose", "--model", "w1", "--params", "300,2.3"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"]["w1"]["ageing_class"] == "AcceleratedAgeing"
