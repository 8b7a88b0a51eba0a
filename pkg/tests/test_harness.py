import json
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest

from fkrank.errors import UsageError
from fkrank.harness.cli import main
from fkrank.harness.generators import FAMILIES, generate, generate_form
from fkrank.harness.suite import SUITES, SuiteConfig, run_suite
from fkrank.maps import MapForm, MatrixMap, from_form, transpose_map
from fkrank.matcore import adjoint, matrix_to_json, numerical_rank
from fkrank.regring import Projection


# -- generators ----------------------------------------------------------------

def test_generator_examples():
    p = generate("random_projection", 2, seed=3, k=1)
    assert isinstance(p, Projection) and p.trace == Fraction(1, 2)
    assert np.allclose(generate("example53_discretization", 4), np.diag([1, 3, 5, 7]) / 8)
    u = generate("haar_unitary", 4, seed=11)
    assert np.linalg.norm(u @ adjoint(u) - np.eye(4)) <= 1e-12


@pytest.mark.parametrize("family", FAMILIES)
def test_generators_deterministic(family):
    a, b = generate(family, 3, seed=42), generate(family, 3, seed=42)
    c = generate(family, 3, seed=43)
    arr = lambda o: o.op if isinstance(o, MatrixMap) else np.asarray(o)
    assert np.array_equal(arr(a), arr(b))
    if family != "example53_discretization":
        assert not np.array_equal(arr(a), arr(c)) or family == "random_projection"


def test_generator_properties():
    x = generate("random_invertible", 6, seed=1, cond_max=1e3)
    assert np.linalg.cond(x) == pytest.approx(1e3, rel=1e-8)
    e = generate("random_idempotent", 5, seed=2, k=2)
    assert np.allclose(e @ e, e) and numerical_rank(e) == 2
    assert np.allclose(np.tril(generate("nilpotent_upper", 4, seed=0)), 0)
    d = generate("positive_diag", 4, seed=0)
    assert np.all(np.diag(d).real > 0)
    f = generate("canonical_form", 3, seed=5, jordan="transpose", conjugated=True)
    g = from_form(generate_form(3, 5, jordan="transpose", conjugated=True))
    assert f.conjugate and np.array_equal(f.op, g.op)
    p = generate("perturbed_form", 3, seed=5, eps=1e-2)
    assert isinstance(p, MatrixMap)


def test_generator_errors():
    with pytest.raises(UsageError):
        generate("wigner", 3)
    with pytest.raises(UsageError):
        generate("random_projection", 3, k=5)
    with pytest.raises(UsageError):
        generate("ginibre", 0)
    with pytest.raises(UsageError):
        generate("ginibre", 3, colour="red")


# -- suites -----------------------------------------------------------------------

def test_registry_names():
    assert list(SUITES) == [
        "rank-axioms", "regring-identities", "fk-axioms", "brown-identities", "hs-projections",
        "isometry-lemmas", "decomposition-roundtrip", "hk-theorem", "example53",
    ]
    for props in SUITES.values():
        assert all(p.anchor for p in props)


def test_suite_is_deterministic():
    cfg = dict(n_values=(2, 3), trials=5, seed=99)
    a = run_suite(SuiteConfig("regring-identities", **cfg))
    b = run_suite(SuiteConfig("regring-identities", **cfg))
    assert a.canonical_json() == b.canonical_json()
    c = run_suite(SuiteConfig("regring-identities", **dict(cfg, seed=100)))
    assert c.canonical_json() != a.canonical_json()


def test_rank_axioms_suite_fast():
    r = run_suite(SuiteConfig("rank-axioms", n_values=(2, 4, 8), trials=100))
    assert r.failures == 0 and r.exit_code == 0
    assert r.wall_clock < 10


def test_mutant_is_caught():
    r = run_suite(SuiteConfig("fk-axioms", n_values=(2,), trials=3, options={"inject_mutant": True}))
    rec = {x.name: x for x in r.records}["det-preserving-forms"]
    assert rec.failures == 3 and rec.witnesses[0]["payload"]["probe"]["n"] == 2
    assert r.exit_code == 1


def test_zero_trials():
    r = run_suite(SuiteConfig("hk-theorem", trials=0))
    assert r.trials == 0 and r.exit_code == 0


def test_config_json_and_env(tmp_path):
    cfg = SuiteConfig.from_json({"n_values": [2], "trials": 1, "seed": 5}, suite="example53")
    assert cfg.suite == "example53"
    cfg.with_env({"FKRANK_SEED": "17", "FKRANK_TOLERANCES": '{"det-curve": 0.5}'})
    assert cfg.seed == 17 and cfg.tolerances["det-curve"] == 0.5
    assert cfg.to_json()["env"]["FKRANK_SEED"] == "17"
    with pytest.raises(UsageError):
        SuiteConfig.from_json({"bogus": 1}, suite="example53")
    with pytest.raises(UsageError):
        SuiteConfig("no-such-suite")
    with pytest.raises(UsageError):
        SuiteConfig("example53").with_env({"FKRANK_SEED": "x"})


def test_report_written(tmp_path):
    out = tmp_path / "rep.json"
    run_suite(SuiteConfig("hs-projections", n_values=(3,), trials=2, output=str(out)))
    data = json.loads(out.read_text())
    assert data["canonical"]["failures"] == 0 and "wall_clock" in data
    assert (tmp_path / "rep.txt").read_text().startswith("suite hs-projections")
    with pytest.raises(UsageError):
        run_suite(SuiteConfig("hs-projections", n_values=(3,), trials=1,
                              output=str(tmp_path / "missing" / "r.json")))


# -- CLI ------------------------------------------------------------------------------

def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def test_cli_det(tmp_path, capsys):
    m = write(tmp_path / "d.json", matrix_to_json(np.diag([1, 4])))
    assert main(["det", m]) == 0
    assert capsys.readouterr().out.strip() == "2.000000000000000"


def test_cli_decompose_transpose(tmp_path, capsys):
    f = write(tmp_path / "t.json", transpose_map(3).to_json())
    assert main(["decompose", f]) == 0
    assert json.loads(capsys.readouterr().out)["classification"] == "anti-isomorphism"
    assert main(["decompose", f, "--mode", "det"]) == 0


def test_cli_verify(tmp_path, capsys):
    two = write(tmp_path / "two.json", MatrixMap(2, 2 * np.eye(4)).to_json())
    assert main(["verify", two, "--check", "det"]) == 1
    out = json.loads(capsys.readouterr().out)
    assert out["passed"] is False and out["witness"][0]["n"] == 2
    t = write(tmp_path / "t.json", transpose_map(2).to_json())
    assert main(["verify", t, "--check", "rank"]) == 0
    capsys.readouterr()
    assert main(["verify", t, "--check", "mult"]) == 0
    assert json.loads(capsys.readouterr().out)["classification"] == "anti"
    assert main(["verify", t, "--check", "brown", "--probes", "4"]) == 0


def test_cli_brown_hsproj_rank(tmp_path, capsys):
    x = write(tmp_path / "x.json", matrix_to_json(np.diag([1.0, -1.0])))
    assert main(["brown", x]) == 0
    atoms = json.loads(capsys.readouterr().out)["atoms"]
    assert sorted(a["loc"][0] for a in atoms) == [-1, 1]
    assert main(["brown", x, "--grid", "-2", "2", "16"]) == 0
    captured = capsys.readouterr()
    assert captured.out.startswith("re,im,mass") and "total_mass" in captured.err
    region = write(tmp_path / "r.json", {"kind": "disk", "center": [1, 0], "radius": 0.5})
    assert main(["hsproj", x, region]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["trace"] == "1/2" and all(out["checks"].values())
    y = write(tmp_path / "y.json", matrix_to_json(np.zeros((2, 2))))
    assert main(["rank", x, y]) == 0
    assert capsys.readouterr().out.strip() == "1/1 1.000000000000000"


def test_cli_gen_and_suite(tmp_path, capsys):
    assert main(["gen", "example53_discretization", "--n", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["data"][0] == [0.25, 0.0]
    assert main(["gen", "random_projection", "--n", "3", "--param", "k=1"]) == 0
    capsys.readouterr()
    cfg = write(tmp_path / "c.json", {"n_values": [2], "trials": 2})
    assert main(["suite", "rank-axioms", "--config", cfg]) == 0
    assert "0 failures" in capsys.readouterr().out
    cfg = write(tmp_path / "m.json", {"n_values": [2], "trials": 1, "options": {"inject_mutant": True}})
    assert main(["suite", "fk-axioms", "--config", cfg]) == 1


def test_cli_usage_errors(tmp_path, capsys):
    assert main(["bogus"]) == 2
    assert main([]) == 2
    assert main(["det", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["det", str(bad)]) == 2
    assert main(["det", write(tmp_path / "short.json", {"n": 2, "data": [[1, 0]]})]) == 2
    assert main(["gen", "ginibre", "--n", "2", "--param", "nokey"]) == 2


def test_module_entry_point(tmp_path):
    m = write(tmp_path / "d.json", matrix_to_json(np.diag([1, 4])))
    out = subprocess.run([sys.executable, "-m", "fkrank", "det", m], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip() == "2.000000000000000"
