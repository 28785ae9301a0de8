import csv
import gzip
import json

import numpy as np
import pytest

from conftest import random_layer
from undervolt.harness import report as rpt
from undervolt.harness.cli import main
from undervolt.harness.config import LEAVES, build_config
from undervolt.harness.errors import ConfigError
from undervolt.harness.experiments import (
    EvalSpec,
    check_report,
    evaluate,
    flat,
    make_splits,
    oracle_forward,
    run_experiment,
    run_jobs,
)
from undervolt.harness.idx import (
    BadMagicError,
    IMAGES_MAGIC,
    LABELS_MAGIC,
    TruncatedError,
    load_idx,
    load_images,
    load_labels,
    write_idx,
)
from undervolt.harness.model import (
    ChainingError,
    ManifestError,
    MissingFileError,
    SizeMismatchError,
    load_model,
    reference_images,
    reference_labels,
    save_model,
)
from undervolt.errmodel import default_layer_profiles
from undervolt.policies import PolicyKind

# --- model files -------------------------------------------------------------


def toy_manifest(tmp_path):
    rng = np.random.default_rng(0)
    return save_model([random_layer(rng, 2, 2, activation="none")], tmp_path, "toy")


def test_toy_model_round_trip(tmp_path):
    path = toy_manifest(tmp_path)
    model = load_model(path)
    again = load_model(save_model(model.layers, tmp_path / "copy"))
    assert model.dims == again.dims == (2, 2)
    assert np.array_equal(model.layers[0].weights.data, again.layers[0].weights.data)
    assert np.array_equal(model.layers[0].bias, again.layers[0].bias)


def test_reference_model(ref_model):
    assert ref_model.dims == (784, 256, 256, 256, 10)
    assert len(ref_model) == 4
    assert [l.activation for l in ref_model.layers] == ["relu"] * 3 + ["none"]


def _edit(path, fn):
    doc = json.loads(path.read_text())
    fn(doc)
    path.write_text(json.dumps(doc))


def test_chaining_error(tmp_path):
    rng = np.random.default_rng(0)
    path = save_model([random_layer(rng, 3, 2), random_layer(rng, 2, 3, activation="none")], tmp_path)
    _edit(path, lambda d: d["layers"][1].update(in_dim=4))
    with pytest.raises(ChainingError, match="does not chain"):
        load_model(path)


def test_size_mismatch(tmp_path):
    path = toy_manifest(tmp_path)
    (tmp_path / "fc1.w.i8").write_bytes(b"\x01\x02\x03")
    with pytest.raises(SizeMismatchError, match="3 values"):
        load_model(path)


def test_missing_files(tmp_path):
    path = toy_manifest(tmp_path)
    (tmp_path / "fc1.b.i32").unlink()
    with pytest.raises(MissingFileError, match="bias"):
        load_model(path)
    with pytest.raises(MissingFileError):
        load_model(tmp_path / "nope.json")


def test_manifest_errors(tmp_path):
    path = toy_manifest(tmp_path)
    _edit(path, lambda d: d["layers"][0].pop("weight_scale"))
    with pytest.raises(ManifestError, match="weight_scale"):
        load_model(path)
    path.write_text("{not json")
    with pytest.raises(ManifestError):
        load_model(path)


# --- IDX -----------------------------------------------------------------------


def test_bundled_dataset():
    images = load_images(reference_images())
    labels = load_labels(reference_labels())
    assert images.shape == (1792, 28, 28) and images.dtype == np.uint8
    assert labels.shape == (1792,) and set(labels.tolist()) == set(range(10))


def test_idx_round_trip_and_gzip(tmp_path):
    arr = np.arange(24, dtype=np.uint8).reshape(2, 3, 4)
    write_idx(tmp_path / "x", arr)
    assert np.array_equal(load_images(tmp_path / "x"), arr)
    (tmp_path / "x.gz").write_bytes(gzip.compress((tmp_path / "x").read_bytes()))
    assert np.array_equal(load_idx(tmp_path / "x.gz", IMAGES_MAGIC), arr)


def test_idx_bad_magic(tmp_path):
    write_idx(tmp_path / "labels", np.zeros(5, dtype=np.uint8))
    assert load_idx(tmp_path / "labels", LABELS_MAGIC).shape == (5,)
    with pytest.raises(BadMagicError, match="bad magic 0x00000801"):
        load_images(tmp_path / "labels")


def test_idx_truncated(tmp_path):
    write_idx(tmp_path / "x", np.zeros((3, 4, 4), dtype=np.uint8))
    raw = (tmp_path / "x").read_bytes()
    (tmp_path / "x").write_bytes(raw[:30])
    with pytest.raises(TruncatedError, match="byte offset 30"):
        load_images(tmp_path / "x")
    (tmp_path / "x").write_bytes(raw[:6])
    with pytest.raises(TruncatedError, match="byte offset 6"):
        load_images(tmp_path / "x")


# --- config ----------------------------------------------------------------------


def test_defaults_and_overrides(tmp_path):
    cfg = build_config()
    assert cfg.array.n == 256 and cfg.array.batch == 256
    assert cfg.splits.validation == 256 and cfg.variation.chips == 50
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"array": {"n": 32}, "policy": {"kind": "ted", "R": 3}, "seed": 4}))
    cfg = build_config(path, {"array.n": "16", "voltage.grid": "1.0,0.9,0.8", "voltage.r_min": "0.8"})
    assert cfg.array.n == 16 and cfg.policy.R == 3 and cfg.seed == 4
    assert cfg.voltage.grid == [1.0, 0.9, 0.8]


def test_every_field_has_a_flag():
    from undervolt.harness.cli import build_parser

    help_text = build_parser()._subparsers._group_actions[0].choices["sweep"].format_help()
    for key in LEAVES:
        assert f"--{key}" in help_text


def test_problems_are_enumerated():
    with pytest.raises(ConfigError) as exc:
        build_config(overrides={"array.n": 0, "voltage.r_min": 0.61, "policy.kind": "nope", "bogus.key": 1})
    text = "\n".join(exc.value.problems)
    for fragment in ("array.n", "r_min", "policy.kind", "bogus.key"):
        assert fragment in text
    assert len(exc.value.problems) >= 4


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        build_config(tmp_path / "missing.json")


# --- reports -----------------------------------------------------------------------


def test_sig6_and_csv(tmp_path):
    assert rpt.sig6(1 / 3) == 0.333333
    assert rpt.fmt(123456789.0) == "1.23457e+08"
    rpt.write_csv(tmp_path / "t.csv", ("a", "b"), [(1, 2 / 3)], comment="note")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines == ["# note", "a,b", "1,0.666667"]


def test_splits_are_disjoint():
    val, test = make_splits(1792, 256, 1536, 0)
    assert len(set(val) & set(test)) == 0
    assert len(val) == 256 and len(test) == 1536
    assert np.array_equal(make_splits(1792, 256, 1536, 0)[0], val)
    assert not np.array_equal(make_splits(1792, 256, 1536, 1)[0], val)


def test_report_aggregates(workload, desk_config):
    L = len(workload.model)
    spec = EvalSpec("x", PolicyKind.TEDROP, flat(0.7, L), default_layer_profiles(L), limit=128)
    rep = evaluate(workload, desk_config, spec)
    check_report(rep)
    d = rep.as_dict()
    assert d["aggregate"]["errors"] == sum(l["errors"] for l in rep.layers) > 0
    assert d["aggregate"]["total_energy"] == pytest.approx(sum(l["energy"] for l in rep.layers))
    assert 0 <= rep.accuracy <= 1


def test_golden_matches_oracle(workload, desk_config):
    out = run_experiment("golden", desk_config, workload, write=False)
    assert out.report["run"]["aggregate"]["accuracy"] == out.report["oracle_accuracy"]
    assert out.report["oracle_accuracy"] >= 0.95


def test_parallel_jobs_match_sequential(workload, desk_config):
    import dataclasses

    L = len(workload.model)
    specs = [
        EvalSpec(f"r{r}", PolicyKind.TEDROP, flat(r, L), default_layer_profiles(L), limit=64) for r in (0.8, 0.7, 0.65)
    ]
    seq = run_jobs(workload, desk_config, specs)
    par = run_jobs(workload, dataclasses.replace(desk_config, workers=3), specs)
    assert [r.as_dict() for r in seq] == [r.as_dict() for r in par]


# --- CLI ---------------------------------------------------------------------------


def test_cli_success_writes_outputs(tmp_path, capsys):
    code = main(["golden", "--array.n", "64", "--splits.test", "200", "--output_dir", str(tmp_path)])
    assert code == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["command"] == "golden"
    assert "golden" in capsys.readouterr().out


def test_cli_sweep_csv(tmp_path):
    code = main([
        "sweep", "--array.n", "64", "--splits.test", "64", "--voltage.grid", "1.0,0.8",
        "--voltage.r_min", "0.8", "--sweep.p_grid", "0.01", "--output_dir", str(tmp_path),
    ])
    assert code == 0
    with open(tmp_path / "sweep.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["policy", "r", "p", "accuracy", "energy", "savings"]
    assert len(rows) == 1 + 1 + 3 * 2
    for row in rows[1:]:
        for cell in row[1:]:
            digits = cell.split("e")[0].replace("-", "").replace(".", "").lstrip("0")
            assert len(digits) <= 6
    for fig in ("sweep.png", "ted_curve.png"):
        assert (tmp_path / fig).stat().st_size > 0
    assert (tmp_path / "sweep_p.csv").exists()


def test_cli_config_error(tmp_path, capsys):
    assert main(["golden", "--array.n", "zero", "--output_dir", str(tmp_path)]) == 1
    assert "array.n" in capsys.readouterr().err
    assert main(["golden", "--model", str(tmp_path / "none.json")]) == 1


def test_cli_data_error(tmp_path, capsys):
    write_idx(tmp_path / "img", np.zeros((3, 28, 28), dtype=np.uint8))
    raw = (tmp_path / "img").read_bytes()
    (tmp_path / "img").write_bytes(raw[:100])
    code = main(["golden", "--dataset.images", str(tmp_path / "img"), "--output_dir", str(tmp_path)])
    assert code == 2
    assert "truncated" in capsys.readouterr().err


def test_cli_split_too_large(tmp_path):
    assert main(["golden", "--splits.test", "5000", "--output_dir", str(tmp_path)]) == 2
