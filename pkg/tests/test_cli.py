import json

import pytest

from mchd import cli


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_end_to_end(tmp_path, capsys):
    syn, prep = tmp_path / "syn", tmp_path / "prep"
    assert run("synth", "--out", syn, "--n-seizures", 3, "--factor", 1, "--seed", 2) == 0
    assert (syn / "annotations.csv").exists() and len(list(syn.glob("*.edf"))) == 3
    assert run("prepare", "--data", syn, "--annotations", syn / "annotations.csv", "--factor", 1,
               "--montage", "none", "--out", prep) == 0
    files = sorted(prep.glob("*.npz"))
    assert len(files) == 3 and (prep / "manifest.json").exists()

    cfg = tmp_path / "exp.yaml"
    cfg.write_text(f"dataset: {prep / 'manifest.json'}\nfactor: 1\ndim: 1024\n")
    out = tmp_path / "res"
    assert run("crossval", "--config", cfg, "--out", out, "--threads", 2) == 0
    for name in ("scores.csv", "subclasses.csv", "reduction_trace.csv", "summary.csv", "config.yaml"):
        assert (out / name).exists()
    models = sorted((out / "models").glob("*_MC.mchd"))
    assert len(models) == 3

    model = tmp_path / "m.mchd"
    assert run("train", *files[:2], "--dim", 1024, "--out", model) == 0
    assert run("reduce", "--model", model, "--train", *files[:2], "--strategy", "clustering",
               "--trace", tmp_path / "trace.csv", "--out", tmp_path / "r.mchd") == 0
    assert (tmp_path / "trace.csv").read_text().startswith("step,strategy")
    capsys.readouterr()
    assert run("classify", "--model", tmp_path / "r.mchd", "--file", files[2], "--out", tmp_path / "p.csv") == 0
    scores = json.loads(capsys.readouterr().out)
    assert set(scores) == {"file", "raw", "smoothed"} and 0 <= scores["smoothed"]["f1de_gmean"] <= 1
    assert (tmp_path / "p.csv").read_text().startswith("time,rawLabel,smoothedLabel,subclassId,distance")
    assert run("inspect", "--model", models[0]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1] == "id,label,count,data_fraction" and len(lines) > 3


def test_exit_codes(tmp_path, monkeypatch):
    assert run("crossval") == 1
    (tmp_path / "bad.yaml").write_text("factor: 7\nsynthetic: [{subject: a}]\n")
    assert run("crossval", "--config", tmp_path / "bad.yaml") == 1
    assert run("classify", "--model", tmp_path / "none.mchd", "--file", tmp_path / "none.npz") == 2
    (tmp_path / "junk.mchd").write_bytes(b"not a model")
    assert run("inspect", "--model", tmp_path / "junk.mchd") == 2

    def boom(args):
        raise RuntimeError("unexpected")

    monkeypatch.setitem(cli.COMMANDS, "inspect", boom)
    assert run("inspect", "--model", tmp_path / "junk.mchd") == 3


def test_help_lists_subcommands(capsys):
    with pytest.raises(SystemExit):
        run("--help")
    text = capsys.readouterr().out
    for cmd in ("synth", "prepare", "crossval", "reduce", "classify", "inspect"):
        assert cmd in text
