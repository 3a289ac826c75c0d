import json
import subprocess
import sys

import pytest

from polargrass import __version__
from polargrass.cli import run


@pytest.fixture
def cli(tmp_path, capsys):
    def call(*argv, cache=True):
        extra = ["--cache-dir", str(tmp_path / "cache")] if cache else []
        code, report = run(list(argv) + extra)
        out = capsys.readouterr()
        return code, report, out.err
    return call


def test_rank_example(cli):
    code, rep, _ = cli("rank", "--space", "Qparab(3,3)", "--k", "2", "--no-timings")
    assert code == 0
    assert rep["upper"] == rep["lower"] == 21 and rep["verdict"] == "gr = 21"
    assert rep["lower_method"] == "Plücker rank"


def test_rank_char2_is_labelled(cli):
    code, rep, _ = cli("rank", "--space", "Qparab(3,2)", "--k", "2")
    assert code == 0 and rep["lower"] is None
    assert rep["lower_method"].startswith("cited lower bound")
    code, rep, _ = cli("rank", "--space", "Qparab(3,2)", "--k", "2", "--char2-plucker")
    assert rep["lower"] == 20 and rep["verdict"] == "20 <= gr <= 21"


def test_fixture_example(cli):
    code, rep, _ = cli("fixture", "t-gen-4")
    assert code == 0 and rep["passed"] and not rep["failed"]


def test_span_example(cli):
    args = ("span", "--space", "Qplus(3,4)", "--k", "2", "--seed", "rational:F2")
    code, rep, _ = cli(*args)
    assert code == 0 and rep["generated_all"] is False
    assert rep["closure_size"] < rep["model"]["points"] == 1785
    assert cli(*args, "--expect", "all")[0] == 2
    assert cli(*args, "--expect", "proper")[0] == 0


def test_span_seed_kinds(cli, tmp_path):
    code, rep, _ = cli("span", "--space", "Qparab(3,2)", "--k", "2", "--seed", "construction")
    assert code == 0 and rep["generated_all"] and sum(rep["tags"].values()) == 21
    code, rep, _ = cli("span", "--space", "Qparab(3,2)", "--k", "2", "--seed", "ids:0,1")
    assert code == 0 and rep["seed_size"] == 2
    seed = tmp_path / "seed.json"
    seed.write_text(json.dumps([[["1", "0", "0", "0", "0", "0", "0"], ["0", "0", "1", "0", "0", "0", "0"]]]))
    code, rep, _ = cli("span", "--space", "Qparab(3,2)", "--k", "2", "--seed", f"file:{seed}")
    assert code == 0 and rep["seed_size"] == 1
    code, rep, _ = cli("span", "--space", "Qparab(3,4)", "--k", "2",
                       "--seed", "fixture:t-gen-4:l1,l2@F4")
    assert code == 0 and rep["seed_size"] == 2


def test_verify_scenarios(cli):
    code, rep, _ = cli("verify", "hermitian-dual", "--n", "2")
    assert code == 0 and rep["verdict"] == "gr = 4"
    code, rep, _ = cli("verify", "notgen", "--q", "4")
    assert code == 0 and rep["passed"] and rep["criterion"] == 8
    code, rep, _ = cli("verify", "polar-rank", "--space", "Qminus(2,3)")
    assert code == 0 and rep["verdict"] == "gr = er = 6"


def test_verify_needs_space(cli):
    code, _, err = cli("verify", "polar-rank")
    assert code == 1 and "[usage]" in err


def test_genset_and_build(cli):
    code, rep, _ = cli("genset", "--space", "Qparab(3,3)", "--k", "2")
    assert code == 0 and rep["genset"]["size"] == 21 and rep["closure"]["generated_all"]
    code, rep, _ = cli("build", "--space", "H(2,1,2)", "--k", "2")
    assert code == 0 and rep["model"]["points"] == 297 and rep["model"]["line_size"] == 9
    assert rep["timings"]["source"] == "built"
    code, rep, _ = cli("build", "--space", "H(2,1,2)", "--k", "2")
    assert rep["timings"]["source"] == "cache"
    code, rep, _ = cli("build", "--space", "H(2,1,2)", "--k", "2", "--no-cache")
    assert rep["timings"]["source"] == "built"


def test_subfield_checks(cli):
    code, rep, _ = cli("subfield", "--space", "Qplus(3,4)", "--check", "omega")
    assert code == 0 and rep["omega"]["ok"]
    code, rep, _ = cli("subfield", "--space", "Qplus(3,4)", "--check", "gset", "--expect", "proper")
    assert code == 0 and rep["gset"]["holds"] is False
    code, rep, _ = cli("subfield", "--space", "Qparab(3,4)", "--check", "adjoin", "--expect", "all")
    assert code == 0 and rep["adjoin"]["generated_all"]
    code, _, err = cli("subfield", "--space", "Qparab(3,4)", "--sub", "F4")
    assert code == 1 and "[usage]" in err


@pytest.mark.parametrize("argv,kind", [
    (["build", "--space", "Qfoo(3,3)", "--k", "1"], "descriptor"),
    (["build", "--space", "Qparab(3,6)", "--k", "1"], "descriptor"),
    (["build", "--space", "Qparab(3,9)", "--k", "2"], "budget"),
    (["fixture", "t-gen-4", "--field", "F9"], "fixture-mismatch"),
    (["span", "--space", "Qparab(3,3)", "--k", "2", "--seed", "fixture:t-gen-4:l1@F4"],
     "fixture-mismatch"),
    (["span", "--space", "Qparab(3,2)", "--k", "2", "--seed", "ids:999"], "usage"),
    (["span", "--space", "Qparab(3,2)", "--k", "2", "--seed", "bogus"], "usage"),
    (["build", "--space", "Qparab(3,2)", "--k", "2", "--budget", "tiny"], "usage"),
])
def test_error_categories(cli, argv, kind):
    code, rep, err = cli(*argv)
    assert code == 1 and rep is None
    assert f"[{kind}]" in err


def test_cache_errors_are_reported(cli, tmp_path):
    assert cli("build", "--space", "Qparab(3,2)", "--k", "2")[0] == 0
    for man in (tmp_path / "cache").glob("*-k2/manifest.json"):
        man.write_text("{")
    code, _, err = cli("build", "--space", "Qparab(3,2)", "--k", "2")
    assert code == 1 and "[cache]" in err


def test_usage_errors(cli):
    assert cli("frobnicate")[0] == 1
    assert cli("build", "--space", "Qparab(3,2)")[0] == 1


def test_reports_are_deterministic(cli, tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"r{i}.json"
        code, _, _ = cli("verify", "notgen", "--q", "4", "--no-timings", "--out", str(path))
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    rep = json.loads(outs[0])
    assert rep["schema"] == 1 and rep["version"] == __version__ and "timings" not in rep
    assert rep["command"]["scenario"] == "notgen"


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "polargrass", "--version"], capture_output=True,
                         text=True, check=True)
    assert __version__ in out.stdout
