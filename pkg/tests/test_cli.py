import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lqsvm.cli import EXIT_CONFIG, EXIT_DATA, EXIT_SAMPLER, exit_code_for, main
from lqsvm.config import ENDPOINT_ENV, ConfigError, RunConfig
from lqsvm.data import Dataset, separated_blobs, standardize_apply, standardize_fit, write_csv
from lqsvm.evaluation import fit_method
from lqsvm.falk import LocalTrainingError
from lqsvm.mock_server import MockSamplerServer
from lqsvm.persist import (
    FeatureCountError,
    FormatVersionError,
    PersistError,
    SavedModel,
    TaskMismatchError,
    dumps_model,
    load_model,
    loads_model,
    save_model,
)
from lqsvm.qubo import load_qubo
from lqsvm.render import PALETTE, RenderError, grid_points, ppm_bytes, read_ppm, render_prediction_map
from lqsvm.sampler import CapacityError, RemoteSampler, SamplerError

SMALL_BINARY = ["falk.k=8", "falk.k_prime=6", "qbsvm.K=1", "svm.S=5", "sampler.kind=exhaustive",
                "cv.folds=3"]
SMALL_MULTI = ["run.task=multiclass", "falk.k=6", "falk.k_prime=4", "qmsvm.K=1", "svm.S=10",
               "sampler.num_reads=40", "sampler.sweeps=20", "cv.folds=3"]


def blob_csv(tmp_path, C=2, n=40, seed=0, name="data.csv"):
    p = tmp_path / name
    write_csv(separated_blobs(C, n, 6.0, seed=seed), p)
    return p


def sets(items):
    return [a for kv in items for a in ("--set", kv)]


# -- configuration ---------------------------------------------------------------------


def test_default_config_is_valid_and_round_trips():
    cfg = RunConfig().validated()
    assert RunConfig.loads(cfg.dumps()) == cfg


@settings(max_examples=100, deadline=None)
@given(
    st.sampled_from(["binary", "multiclass"]),
    st.sampled_from(["local", "global", "majority"]),
    st.integers(2, 200),
    st.integers(1, 60),
    st.lists(st.sampled_from([-0.5, 0.1, 1.0, 2.5]), min_size=1, max_size=4),
    st.floats(0.01, 100.0, allow_nan=False),
    st.one_of(st.none(), st.floats(1.0, 1e6)),
    st.sampled_from(["sa", "exhaustive", "remote"]),
    st.integers(0, 2**31),
)
def test_config_round_trip_property(task, mode, k, kp, grid, xi, ratio, kind, seed):
    cfg = RunConfig(task=task, mode=mode, k=k, k_prime=min(kp, k - 1), grid=tuple(grid), xi=xi,
                    max_min_ratio=ratio, sampler=kind, seed=seed).validated()
    assert RunConfig.loads(cfg.dumps()) == cfg
    assert RunConfig.from_flat(cfg.to_flat()) == cfg


def test_overrides_parse_json_values():
    cfg = RunConfig().override(["falk.k=20", "falk.k_prime=10", "falk.grid=[0.5, 1]", "run.task=multiclass",
                                "qubo.max_min_ratio=null", "cv.standardize=false"])
    assert (cfg.k, cfg.k_prime, cfg.grid, cfg.task, cfg.standardize) == (20, 10, (0.5, 1.0), "multiclass", False)
    assert cfg.max_min_ratio is None


@pytest.mark.parametrize("items,match", [
    (["falk.k_prime=80"], "k_prime"),
    (["falk.kk=3"], "unknown"),
    (["run.task=ternary"], "run.task"),
    (["sampler.kind=qpu"], "sampler.kind"),
    (["svm.S=2000"], "svm.S"),
    (["cv.folds=1"], "cv.folds"),
    (["falk.grid=[0.0]"], "gamma"),
    (["falk.k=abc"], "falk.k"),
    (["run.seed=null"], "run.seed"),
    (["nonsense"], "key=value"),
])
def test_config_validation_errors(items, match):
    with pytest.raises(ConfigError, match=match):
        RunConfig().override(items)


def test_dynamic_model_is_rejected():
    with pytest.raises(ConfigError, match="not implemented"):
        RunConfig().override(["run.dynamic_model=true"])


def test_loads_rejects_non_object():
    with pytest.raises(ConfigError):
        RunConfig.loads("[1, 2]")
    with pytest.raises(ConfigError):
        RunConfig.loads("{")


def test_capacity_error_names_limit():
    cfg = RunConfig().override(["sampler.kind=exhaustive"])
    with pytest.raises(CapacityError, match="sampler.exhaustive_cap"):
        cfg.check_capacity(2)
    small = RunConfig().override(["sampler.kind=exhaustive", "falk.k=8", "falk.k_prime=6", "svm.S=5"])
    small.check_capacity(2)
    assert small.variables_needed(2) == 16
    assert RunConfig(task="multiclass", k=24, K_multi=2).variables_needed(3) == 144


def test_endpoint_env_override(monkeypatch):
    cfg = RunConfig(sampler="remote", endpoint="http://configured:1")
    monkeypatch.delenv(ENDPOINT_ENV, raising=False)
    assert cfg.build_sampler().endpoint == "http://configured:1"
    monkeypatch.setenv(ENDPOINT_ENV, "http://from-env:2")
    smp = cfg.build_sampler()
    assert isinstance(smp, RemoteSampler) and smp.endpoint == "http://from-env:2"
    monkeypatch.delenv(ENDPOINT_ENV)
    with pytest.raises(ConfigError):
        RunConfig(sampler="remote").build_sampler()


# -- exit codes ---------------------------------------------------------------------------


def test_exit_code_mapping():
    assert exit_code_for(ConfigError("x")) == EXIT_CONFIG
    assert exit_code_for(SamplerError("x")) == EXIT_SAMPLER
    assert exit_code_for(LocalTrainingError(3, CapacityError("cap"))) == EXIT_SAMPLER
    assert exit_code_for(FileNotFoundError("x")) == EXIT_DATA
    assert exit_code_for(RenderError("x")) == EXIT_DATA
    try:
        try:
            raise SamplerError("inner")
        except SamplerError as e:
            raise RuntimeError("outer") from e
    except RuntimeError as outer:
        assert exit_code_for(outer) == EXIT_SAMPLER
    assert exit_code_for(KeyError("x")) is None


def test_cli_config_errors(tmp_path, capsys):
    data = blob_csv(tmp_path)
    assert main(["cv", "--data", str(data), "--out", str(tmp_path / "o"), *sets(["falk.k_prime=90"])]) == 2
    assert "k_prime" in capsys.readouterr().err
    rc = main(["cv", "--data", str(data), "--out", str(tmp_path / "o"), *sets(["run.dynamic_model=true"])])
    assert rc == 2


def test_cli_capacity_error(tmp_path, capsys):
    data = blob_csv(tmp_path)
    rc = main(["cv", "--data", str(data), "--out", str(tmp_path / "o"),
               *sets(["sampler.kind=exhaustive", "falk.k=20", "falk.k_prime=10", "svm.S=5"])])
    assert rc == 4
    assert "sampler.exhaustive_cap" in capsys.readouterr().err


def test_cli_binary_task_on_multiclass_data(tmp_path):
    data = blob_csv(tmp_path, C=3, n=30)
    assert main(["cv", "--data", str(data), "--out", str(tmp_path / "o"), *sets(SMALL_BINARY)]) == 2


def test_cli_missing_data_file(tmp_path):
    assert main(["cv", "--data", str(tmp_path / "none.csv"), "--out", str(tmp_path / "o")]) == 3


def test_cli_unreachable_remote(tmp_path, monkeypatch):
    monkeypatch.setenv(ENDPOINT_ENV, "http://127.0.0.1:9")
    data = blob_csv(tmp_path, n=20)
    rc = main(["cv", "--data", str(data), "--out", str(tmp_path / "o"),
               *sets(["sampler.kind=remote", "falk.k=6", "falk.k_prime=4", "qbsvm.K=1", "svm.S=4",
                      "sampler.num_reads=8", "cv.folds=2"])])
    assert rc == 4


# -- cv command ------------------------------------------------------------------------------


def test_cli_cv_writes_reports(tmp_path, capsys):
    data = blob_csv(tmp_path)
    out = tmp_path / "run"
    assert main(["cv", "--data", str(data), "--out", str(out), "--save-models", *sets(SMALL_BINARY)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["accuracy"] >= 0.9 and report["folds"] == 3
    assert (out / "report.txt").read_text().startswith("method: local-qbsvm\n")
    assert RunConfig.load(out / "config.json").k == 8
    assert sorted(p.name for p in out.glob("fold_*.model.json")) == [f"fold_{i}.model.json" for i in range(3)]
    assert "accuracy" in capsys.readouterr().out


def test_cli_cv_with_config_file(tmp_path):
    data = blob_csv(tmp_path, C=3, n=36)
    cfg = RunConfig().override(SMALL_MULTI)
    (tmp_path / "cfg.json").write_text(cfg.dumps())
    out = tmp_path / "run"
    assert main(["cv", "--config", str(tmp_path / "cfg.json"), "--data", str(data), "--out", str(out),
                 "--set", "qmsvm.mu=0.5"]) == 0
    assert RunConfig.load(out / "config.json").mu == 0.5
    assert json.loads((out / "report.json").read_text())["accuracy"] >= 0.8


def test_cli_cv_remote_mock_server(tmp_path):
    data = blob_csv(tmp_path, n=20)
    with MockSamplerServer(pending_polls=0) as srv:
        rc = main(["cv", "--data", str(data), "--out", str(tmp_path / "o"),
                   *sets(["sampler.kind=remote", f"sampler.endpoint={srv.url}", "falk.k=6", "falk.k_prime=4",
                          "qbsvm.K=1", "svm.S=4", "sampler.num_reads=8", "cv.folds=2"])])
    assert rc == 0


# -- persistence -------------------------------------------------------------------------------


def _trained(task="binary", mode="local", seed=0):
    C = 2 if task == "binary" else 3
    data = separated_blobs(C, 40 if C == 2 else 36, 4.0, seed=seed)
    items = SMALL_BINARY if task == "binary" else SMALL_MULTI
    cfg = RunConfig().override(items + [f"run.mode={mode}"])
    scaler = standardize_fit(data)
    fitted = fit_method(cfg.method(), standardize_apply(scaler, data), 0)
    return SavedModel(task, mode, fitted.model, data.d, data.label_values, scaler)


@pytest.mark.parametrize("task,mode", [("binary", "local"), ("binary", "global"), ("multiclass", "local"),
                                       ("multiclass", "global"), ("binary", "majority")])
def test_save_load_predict_round_trip(tmp_path, task, mode):
    saved = _trained(task, mode)
    path = tmp_path / "m.json"
    save_model(saved, path)
    loaded = load_model(path)
    Q = np.random.default_rng(1).normal(size=(100, 2)) * 5
    np.testing.assert_array_equal(loaded.predict(Q), saved.predict(Q))
    assert (loaded.task, loaded.mode) == (task, mode)
    # serialization is a fixed point
    assert dumps_model(loaded) == path.read_text()


def test_feature_count_mismatch():
    saved = _trained()
    with pytest.raises(FeatureCountError):
        saved.predict(np.zeros((3, 5)))


def test_task_mismatch_is_typed():
    text = dumps_model(_trained("binary"))
    with pytest.raises(TaskMismatchError):
        loads_model(text, expect_task="multiclass")
    assert loads_model(text, expect_task="binary").task == "binary"


def test_format_version_checked():
    doc = json.loads(dumps_model(_trained()))
    doc["format_version"] = 99
    with pytest.raises(FormatVersionError):
        loads_model(json.dumps(doc))
    with pytest.raises(PersistError):
        loads_model("{}")
    with pytest.raises(PersistError):
        loads_model("not json")


def test_original_labels_restored(tmp_path):
    X = np.array([[0.0], [0.1], [5.0], [5.1]])
    data = Dataset(X, [0, 0, 1, 1], 2, label_values=(5, 9))
    cfg = RunConfig().override(["run.mode=majority", "falk.k=3", "falk.k_prime=2"])
    fitted = fit_method(cfg.method(), data, 0)
    saved = SavedModel("binary", "majority", fitted.model, 1, data.label_values)
    assert set(saved.predict_labels(X).tolist()) <= {5, 9}


def test_cli_train_predict(tmp_path, capsys):
    data = blob_csv(tmp_path)
    model = tmp_path / "m.json"
    assert main(["train", "--data", str(data), "--model", str(model), *sets(SMALL_BINARY)]) == 0
    queries = np.random.default_rng(0).normal(size=(100, 2)) * 4
    qpath = tmp_path / "q.csv"
    np.savetxt(qpath, queries, delimiter=",")
    out = tmp_path / "pred.txt"
    assert main(["predict", "--model", str(model), "--input", str(qpath), "--out", str(out)]) == 0
    preds = [int(v) for v in out.read_text().split()]
    assert preds == load_model(model).predict_labels(queries).tolist()
    assert main(["predict", "--model", str(model), "--input", str(qpath), "--task", "multiclass"]) == 3
    bad = tmp_path / "bad.csv"
    np.savetxt(bad, np.zeros((2, 3)), delimiter=",")
    assert main(["predict", "--model", str(model), "--input", str(bad)]) == 3


# -- rendering -------------------------------------------------------------------------------


def test_render_single_pixel(tmp_path):
    p = tmp_path / "a.ppm"
    render_prediction_map([[0]], p)
    assert p.read_bytes() == b"P6\n1 1\n255\n" + bytes(PALETTE[0])


def test_render_checkerboard(tmp_path):
    grid = [[0, 2], [2, 0]]
    p = tmp_path / "c.ppm"
    render_prediction_map(grid, p)
    img = read_ppm(p)
    assert img.shape == (2, 2, 3)
    assert tuple(img[0, 0]) == PALETTE[0] and tuple(img[0, 1]) == PALETTE[2]
    assert tuple(img[1, 0]) == PALETTE[2] and tuple(img[1, 1]) == PALETTE[0]


def test_render_deterministic(tmp_path):
    grid = np.random.default_rng(0).integers(0, 3, (7, 9))
    render_prediction_map(grid, tmp_path / "a.ppm")
    render_prediction_map(grid.copy(), tmp_path / "b.ppm")
    assert (tmp_path / "a.ppm").read_bytes() == (tmp_path / "b.ppm").read_bytes()


def test_render_rejects_unknown_labels():
    with pytest.raises(RenderError, match="label 10"):
        ppm_bytes([[0, 10]])
    with pytest.raises(RenderError):
        ppm_bytes([[-1]])
    with pytest.raises(RenderError):
        ppm_bytes([[0.5]])
    assert len(set(PALETTE)) == len(PALETTE) >= 8


def test_grid_points_layout():
    pts = grid_points(0, 2, 0, 1, 2, 1)
    np.testing.assert_allclose(pts, [[0.5, 0.5], [1.5, 0.5]])
    top = grid_points(0, 1, 0, 2, 1, 2)
    assert top[0, 1] > top[1, 1]


def test_cli_render_from_grid_and_model(tmp_path):
    gp = tmp_path / "g.csv"
    gp.write_text("0,1\n1,0\n")
    assert main(["render-map", "--grid", str(gp), "--out", str(tmp_path / "g.ppm")]) == 0
    assert read_ppm(tmp_path / "g.ppm").shape == (2, 2, 3)
    gp.write_text("0,11\n")
    assert main(["render-map", "--grid", str(gp), "--out", str(tmp_path / "x.ppm")]) == 3

    model = tmp_path / "m.json"
    save_model(_trained(), model)
    out = tmp_path / "m.ppm"
    args = ["render-map", "--model", str(model), "--bounds", "-6", "6", "-6", "6", "--size", "12", "8",
            "--out", str(out)]
    assert main(args) == 0
    assert read_ppm(out).shape == (8, 12, 3)
    first = out.read_bytes()
    assert main(args) == 0 and out.read_bytes() == first
    assert main(["render-map", "--model", str(model), "--out", str(out)]) == 2


# -- utility commands ---------------------------------------------------------------------------


def test_cli_gen_blobs(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["gen-blobs", "--classes", "3", "--n", "30", "--seed", "4", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 30
    with pytest.raises(SystemExit):
        main(["gen-blobs", "--out", str(a)])  # --seed is required


def test_cli_qubo_dump(tmp_path):
    data = tmp_path / "d.csv"
    write_csv(separated_blobs(2, 4, 3.0, seed=0), data)
    out = tmp_path / "q.txt"
    assert main(["qubo-dump", "--data", str(data), "--out", str(out), "--set", "qbsvm.K=2"]) == 0
    assert load_qubo(out).dim == 8
    write_csv(separated_blobs(3, 3, 3.0, seed=0), data)
    assert main(["qubo-dump", "--data", str(data), "--out", str(out),
                 "--set", "run.task=multiclass", "--set", "qmsvm.K=1"]) == 0
    assert load_qubo(out).dim == 9
