import json
import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, settings, strategies as st

from knndens import cli
from knndens.config import (
    COMMANDS,
    ESTIMATORS,
    ConfigError,
    RunConfig,
    parse_config,
    serialize_config,
    validate,
)
from knndens.distributions import DISTRIBUTION_IDS
from knndens.evaluation import CSV_COLUMNS

floats = st.floats(1e-6, 1e6, allow_nan=False)
coords = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=4).map(tuple)


@st.composite
def configs(draw):
    opt = lambda s: st.none() | s
    return RunConfig(
        command=draw(st.sampled_from(COMMANDS)),
        dist=draw(st.sampled_from(DISTRIBUTION_IDS)),
        dim=draw(st.integers(1, 4)),
        estimator=draw(st.sampled_from(ESTIMATORS)),
        k=draw(opt(st.integers(2, 10**6))),
        h=draw(opt(floats)),
        a=draw(opt(floats)),
        kernel=draw(st.sampled_from(["box", "epanechnikov"])),
        rule=draw(st.sampled_from(["bounded", "linf-unbounded", "power", "tail"])),
        c=draw(floats),
        c_a=draw(floats),
        k_exponent=draw(st.floats(0.01, 1.0)),
        a_multipliers=draw(st.lists(floats, min_size=1, max_size=4).map(tuple)),
        support=draw(opt(st.sampled_from(["box", "ball", "auto", "none"]))),
        support_lo=draw(opt(coords)),
        support_hi=draw(opt(coords)),
        support_center=draw(opt(coords)),
        support_radius=draw(opt(floats)),
        region_lo=draw(opt(coords)),
        region_hi=draw(opt(coords)),
        mass_tol=draw(st.floats(1e-9, 0.5)),
        step=draw(opt(floats)),
        trials=draw(st.integers(1, 10**4)),
        seed=draw(st.integers(0, 2**32)),
        n=draw(opt(st.integers(2, 10**7))),
        n_list=draw(opt(st.lists(st.integers(4, 10**7), min_size=1, max_size=8).map(tuple))),
        at=draw(opt(coords)),
        workers=draw(st.integers(1, 64)),
        output_dir=draw(st.sampled_from(["results", "out/run-1", "/tmp/x y"])),
    )


@settings(max_examples=100, deadline=None)
@given(configs())
def test_config_roundtrip(cfg):
    assert parse_config(serialize_config(cfg)) == cfg


def test_config_format():
    text = serialize_config(RunConfig("converge", dist="uniform", n_list=(500, 1000, 2000)))
    assert "command = converge\n" in text
    assert "n_list = 500,1000,2000\n" in text
    assert "k =" not in text
    cfg = parse_config("# comment\ncommand = eval\n\nk = 5\nn = 100\n")
    assert cfg.k == 5 and cfg.n == 100
    for bad, key in [("command = eval\nk = 5\nk = 6\n", "k"), ("command = eval\nbogus = 1\n", "bogus"),
                     ("command = eval\nk = five\n", "k"), ("dist = uniform\n", "command")]:
        with pytest.raises(ConfigError) as err:
            parse_config(bad)
        assert err.value.key == key


@pytest.mark.parametrize(
    "changes,key",
    [
        (dict(dist="laplace"), "dist"),
        (dict(estimator="svm"), "estimator"),
        (dict(k=200), "k"),
        (dict(k=None), "k"),
        (dict(estimator="knn-bc"), "support"),
        (dict(estimator="knn-bc", support="auto", dist="cauchy"), "support"),
        (dict(estimator="knn-bc", support="box", support_lo=(0.0,)), "support_hi"),
        (dict(estimator="knn-trunc"), "a"),
        (dict(estimator="kde"), "h"),
        (dict(trials=0), "trials"),
        (dict(step=-1.0), "step"),
        (dict(kernel="gauss"), "kernel"),
        (dict(region_lo=(0.0,)), "region_hi"),
        (dict(dist="cauchy", mass_tol=1e-9), "step"),
    ],
)
def test_validation_names_key(changes, key):
    base = dict(command="eval", dist="uniform", n=100, k=5)
    base.update(changes)
    with pytest.raises(ConfigError) as err:
        validate(RunConfig(**base))
    assert err.value.key == key


def test_validation_other_commands():
    with pytest.raises(ConfigError) as err:
        validate(RunConfig("compare", dist="uniform"))
    assert err.value.key == "dist"
    with pytest.raises(ConfigError) as err:
        validate(RunConfig("converge", n_list=(100, 50, 200)))
    assert err.value.key == "n_list"
    with pytest.raises(ConfigError) as err:
        validate(RunConfig("estimate", n=100, k=5))
    assert err.value.key == "at"
    with pytest.raises(ConfigError) as err:
        validate(RunConfig("converge", estimator="knn-trunc", dist="cauchy"))
    assert err.value.key == "rule"
    validate(RunConfig("converge", estimator="knn-bc"))  # support defaults to the law's own


def test_estimate_prints_density(capsys):
    argv = "estimate --dist gaussian --dim 1 --estimator knn --k 100 --n 10000 --at 0.0 --seed 1".split()
    assert cli.main(argv) == 0
    value = float(capsys.readouterr().out.strip())
    assert abs(value - 0.3989) < 0.05


def test_eval_without_support_fails(capsys, tmp_path):
    assert cli.main(["eval", "--estimator", "knn-bc", "--output-dir", str(tmp_path)]) != 0
    assert "support" in capsys.readouterr().err
    assert cli.main(["eval", "--estimator", "knn-bc", "--n", "100", "--k", "5", "--output-dir", str(tmp_path)]) == 2
    assert "support" in capsys.readouterr().err
    assert list(tmp_path.iterdir()) == []


def test_converge_twice_identical_bytes(tmp_path, monkeypatch):
    monkeypatch.delenv("KNNDENS_OUTPUT_DIR", raising=False)
    base = "converge --dist uniform --dim 1 --estimator knn-bc --rule bounded --seed 1 --trials 5".split()
    assert cli.main(base + ["--output-dir", str(tmp_path / "a")]) == 0
    assert cli.main(base + ["--output-dir", str(tmp_path / "b"), "--workers", "3"]) == 0
    a = (tmp_path / "a" / "results.csv").read_bytes()
    assert a == (tmp_path / "b" / "results.csv").read_bytes()
    assert a.decode().splitlines()[0] == ",".join(CSV_COLUMNS)
    assert len(a.decode().splitlines()) == 7
    assert sorted(p.name for p in (tmp_path / "a").iterdir()) == ["config.txt", "plot.svg", "results.csv", "summary.json"]
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    assert {"slope_l1", "slope_linf", "theory_l1", "theory_linf", "settings"} <= set(summary)
    ET.parse(tmp_path / "a" / "plot.svg")


def test_config_file_and_flag_override(tmp_path, capsys):
    path = tmp_path / "run.cfg"
    path.write_text("command = estimate\ndist = uniform\nestimator = knn\nk = 10\nn = 1000\nat = 0.5\nseed = 3\n")
    assert cli.main(["estimate", "--config", str(path)]) == 0
    first = capsys.readouterr().out
    assert cli.main(["estimate", "--config", str(path), "--k", "50"]) == 0
    assert capsys.readouterr().out != first
    assert cli.main(["estimate", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert "config" in capsys.readouterr().err


def test_saved_config_reproduces_run(tmp_path, monkeypatch):
    monkeypatch.delenv("KNNDENS_OUTPUT_DIR", raising=False)
    out = tmp_path / "e"
    argv = ["eval", "--dist", "uniform", "--estimator", "knn-bc", "--support", "auto", "--n", "300",
            "--k", "20", "--trials", "3", "--output-dir", str(out)]
    assert cli.main(argv) == 0
    saved = (out / "config.txt").read_text()
    first = (out / "results.csv").read_bytes()
    assert cli.main(["eval", "--config", str(out / "config.txt")]) == 0
    assert (out / "results.csv").read_bytes() == first
    assert (out / "config.txt").read_text() == saved


def test_output_dir_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv("KNNDENS_OUTPUT_DIR", str(tmp_path / "env"))
    monkeypatch.chdir(tmp_path)
    argv = "eval --dist uniform --estimator knn --n 200 --k 5 --trials 1 --output-dir ignored".split()
    assert cli.main(argv) == 0
    assert (tmp_path / "env" / "results.csv").exists()
    assert not (tmp_path / "ignored").exists()
    assert sorted(p.name for p in tmp_path.iterdir()) == ["env"]


def test_compare_command(tmp_path, capsys):
    argv = ["compare", "--dist", "cauchy", "--region-lo", "-20", "--region-hi", "20", "--trials", "2",
            "--n-list", "300,600", "--output-dir", str(tmp_path)]
    assert cli.main(argv) == 0
    assert capsys.readouterr().out.count("ratio =") == 2
    rows = (tmp_path / "results.csv").read_text().splitlines()
    assert len(rows) == 5
    root = ET.parse(tmp_path / "plot.svg").getroot()
    assert any(e.get("class") == "reference" for e in root.iter())


def test_help_documents_columns(capsys):
    with pytest.raises(SystemExit):
        cli.main(["converge", "--help"])
    out = capsys.readouterr().out
    assert ", ".join(CSV_COLUMNS) in out
    assert "KNNDENS_OUTPUT_DIR" in out


def test_run_failure_exit_code(capsys):
    # a query outside the box support leaves a zero clipped volume
    argv = ["estimate", "--dist", "gaussian", "--estimator", "knn-bc", "--support", "box", "--support-lo", "0",
            "--support-hi", "1", "--n", "100", "--k", "5", "--at", "7"]
    assert cli.main(argv) == 1
    assert "run failed" in capsys.readouterr().err
    assert cli.main(["estimate", "--dist", "uniform", "--n", "3", "--k", "2", "--at", "0.5,0.5"]) == 2
    assert "at" in capsys.readouterr().err
