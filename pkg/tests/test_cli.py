import json

import numpy as np
import pytest

from conftest import fixture_path, load_fixture
from indrep.cli import cmd_verify, load_config, main
from indrep.covers import permutation_matrix
from indrep.functors import monodromy_residual
from indrep.reps import LeafConstraint, MatrixRep, random_rep, read_rep, solve_relator, write_rep


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def records(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def strip_timing(recs):
    return [{k: v for k, v in r.items() if k != "timing_ms"} for r in recs]


def test_cover_d2(capsys):
    code, out, _ = run(capsys, "cover", "--config", fixture_path("torus_d2"))
    assert code == 0
    payload = json.loads(out[out.index("{"):])
    assert payload["transversal"] == ["1", "a1"]
    assert sorted(payload["schreier_generators"].values()) == sorted(["a1 a1", "b1", "A1 b1 a1"])
    assert payload["cover_genus"] == 1 and len(payload["punctures"]) == 2


def test_cover_identity(capsys):
    code, out, _ = run(capsys, "cover", "--config", fixture_path("identity"))
    assert code == 0
    payload = json.loads(out[out.index("{"):])
    assert payload["transversal"] == ["1"]
    assert list(payload["schreier_generators"].values()) == ["a1", "b1"]


def test_cover_intransitive(capsys):
    code, _, err = run(capsys, "cover", "--config", fixture_path("intransitive"))
    assert code == 2 and "Intransitive" in err


def test_bad_config(tmp_path, capsys):
    cfg = load_fixture("torus_d2")
    cfg["format"] = 2
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert run(capsys, "cover", "--config", str(path))[0] == 2
    cfg["format"], cfg["leaf"] = 1, {"mode": "class"}
    path.write_text(json.dumps(cfg))
    assert run(capsys, "verify", "e17", "--config", str(path))[0] == 2


def test_induce_trivial_rank1_permutations(tmp_path, capsys):
    cfg = load_config(fixture_path("pants_d3"))
    cover = cfg.cover
    rep_path, out_path = tmp_path / "h.json", tmp_path / "ind.json"
    write_rep(MatrixRep(cover.cs.names, np.ones((cover.cs.rank, 1, 1))), rep_path)
    code, _, _ = run(capsys, "induce", "--config", fixture_path("pants_d3"), "--rep", str(rep_path), "--out", str(out_path))
    assert code == 0
    ind = read_rep(out_path, cover.base.names)
    for x in range(cover.base.rank):
        assert np.array_equal(ind.matrices[x], permutation_matrix(cover.cov.perms[x]))


def test_induce_identity_and_roundtrip(tmp_path, capsys):
    cfg = load_config(fixture_path("identity"))
    h = random_rep(cfg.cover.cs.names, 2, 3)
    rep_path, out_path = tmp_path / "h.json", tmp_path / "ind.json"
    write_rep(h, rep_path)
    assert np.array_equal(read_rep(rep_path, h.names).matrices, h.matrices)
    assert run(capsys, "induce", "--config", fixture_path("identity"), "--rep", str(rep_path), "--out", str(out_path))[0] == 0
    ind = read_rep(out_path, cfg.cover.base.names)
    assert ind.n == h.n and np.array_equal(ind.matrices, h.matrices)


def test_induce_alphabet_mismatch(tmp_path, capsys):
    rep_path = tmp_path / "h.json"
    write_rep(random_rep(("x1", "x2"), 2, 0), rep_path)
    code, _, _ = run(capsys, "induce", "--config", fixture_path("torus_d2"), "--rep", str(rep_path),
                     "--out", str(tmp_path / "o.json"))
    assert code == 2


def test_verify_scaling_on_punctured(capsys):
    code, _, err = run(capsys, "verify", "scaling", "--config", fixture_path("torus_d2"))
    assert code == 2 and "NotUnramifiedClosed" in err


def test_verify_e17_corrupted_rep(tmp_path, capsys):
    cfg = load_fixture("torus_d2")
    cfg["leaf"] = {"mode": "trivial"}
    cfg_path = tmp_path / "c.json"
    cfg_path.write_text(json.dumps(cfg))
    cover = load_config(cfg_path).cover
    h, _ = solve_relator(random_rep(cover.cs.names, 2, 1), relator=(),
                         leaf=LeafConstraint.trivial(cover.y_loops()))
    mats = h.matrices.copy()
    mats[0] = mats[0] @ (np.eye(2) + np.array([[0.0, 5e-2], [0.0, 0.0]]))
    bad = h.with_matrices(mats)
    resid = monodromy_residual(cover, bad)
    assert 1e-2 < resid < 1
    rep_path = tmp_path / "bad.json"
    write_rep(bad, rep_path)
    code, out, _ = run(capsys, "verify", "e17", "--config", str(cfg_path), "--tol", "1e-2", "--rep", str(rep_path))
    (rec,) = records(out)
    assert code == 1
    assert rec["status"] == "fail" and rec["details"]["error"] == "NotARep"


def test_report_schema_and_order(tmp_path, capsys):
    out_path = tmp_path / "r.jsonl"
    code, _, err = run(capsys, "verify", "all", "--config", fixture_path("genus2_d2"), "--out", str(out_path))
    recs = records(out_path.read_text())
    assert [r["check"] for r in recs] == ["lemma1", "lemma2", "injectivity", "scaling"]
    for r in recs:
        assert set(r) == {"check", "status", "residual", "seed", "timing_ms", "details"}
        assert r["status"] in ("pass", "fail", "inconclusive")
    assert code == (1 if any(r["status"] == "fail" for r in recs) else 0)
    assert "scaling" in err


@pytest.mark.parametrize("name", ["torus_d2", "genus2_d2"])
def test_verify_all_deterministic(name):
    cfg = load_config(fixture_path(name))
    first = strip_timing(cmd_verify(cfg, "all"))
    second = strip_timing(cmd_verify(load_config(fixture_path(name)), "all"))
    assert json.dumps(first, sort_keys=True, default=str) == json.dumps(second, sort_keys=True, default=str)
