import sys

import pytest

from conftest import CADICAL
from noshow.cli import main, read_manifest
from noshow.rules import constant_table, write_table
from noshow.tournaments import enumerate_tournaments


def run(*argv):
    return main([str(a) for a in argv])


def test_kemeny_pipeline(tmp_path, capsys):
    cnf, model, table = tmp_path / "k3.cnf", tmp_path / "k3.model", tmp_path / "k3.table"
    assert run("encode", "--n", 3, "--rule", "kemeny", "--out", cnf) == 0
    assert (tmp_path / "k3.map").exists()
    assert run("solve", "--cnf", cnf, "--solver", CADICAL, "--model", model, "--out", tmp_path / "k3.verdict") == 0
    assert model.read_text().startswith("s SATISFIABLE")
    assert run("extract-rule", "--model", model, "--varmap", tmp_path / "k3.map", "--out", table) == 0
    assert run("verify-rule", "--table", table, "--n", 3, "--axioms", "condorcet,participation,kemeny",
               "--out", tmp_path / "k3.report") == 0
    assert "axiom participation checked 5832 violations 0" in (tmp_path / "k3.report").read_text()
    manifest = read_manifest(str(table) + ".manifest")
    assert manifest.subcommand == "extract-rule"
    assert str(model) in manifest.inputs and str(table) in manifest.outputs


def test_unsat_and_mus(tmp_path):
    gcnf = tmp_path / "k4.gcnf"
    assert run("encode", "--n", 4, "--rule", "kemeny", "--gcnf", "--out", gcnf) == 0
    assert run("solve", "--cnf", gcnf, "--solver", CADICAL) == 1
    assert run("mus", "--gcnf", gcnf, "--varmap", tmp_path / "k4.map", "--rule", "kemeny",
               "--out", tmp_path / "k4.core") == 0
    assert run("check-proof", "--cert", tmp_path / "k4.cert", "--out", tmp_path / "k4.check") == 0


def test_outputs_are_byte_identical_across_runs(tmp_path):
    for d in ("a", "b"):
        assert run("encode", "--n", 3, "--set-valued", "both", "--gcnf", "--out", tmp_path / d / "x.gcnf") == 0
        assert run("enumerate", "--n", 4, "--out", tmp_path / d) == 0
    for name in ("x.gcnf", "x.map", "index.txt", "stats.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    ma, mb = read_manifest(tmp_path / "a" / "x.gcnf.manifest"), read_manifest(tmp_path / "b" / "x.gcnf.manifest")
    assert list(ma.outputs.values()) == list(mb.outputs.values())


@pytest.mark.parametrize("name, code", [("thm1", 0), ("thm6", 0), ("thm4", 1)])
def test_check_proof_fixtures(name, code, tmp_path):
    assert run("check-proof", "--cert", name, "--out", tmp_path / "r.txt") == code
    assert (tmp_path / "r.txt").read_text().splitlines()[-1].startswith("verdict ")


def test_check_proof_lifted(tmp_path):
    assert run("check-proof", "--cert", "thm2", "--lift-m", 5, "--out", tmp_path / "r.txt") == 0


def test_oracle_check(tmp_path):
    assert run("--manifest", tmp_path / "o.manifest", "oracle-check", "--n", 3) == 0
    assert (tmp_path / "o.manifest").read_text().startswith("subcommand oracle-check")


def test_verify_rule_reports_violations(tmp_path):
    write_table(constant_table(enumerate_tournaments(1), 1), tmp_path / "t.txt")
    assert run("verify-rule", "--table", tmp_path / "t.txt", "--n", 1, "--axioms", "condorcet") == 1


def test_exit_codes(tmp_path):
    assert run("encode", "--n", 3, "--profile-space", "--out", tmp_path / "x.cnf") == 2
    assert run("encode", "--n", 0, "--out", tmp_path / "x.cnf") == 2
    with pytest.raises(SystemExit) as err:
        run("encode", "--n", 3, "--rule", "borda", "--out", tmp_path / "x.cnf")
    assert err.value.code == 2
    assert run("verify-rule", "--table", tmp_path / "missing.txt", "--n", 3) == 2
    (tmp_path / "bad.txt").write_text("e,#1,(1,1,1,1,1,1)\n")
    assert run("verify-rule", "--table", tmp_path / "bad.txt", "--n", 3) == 3
    (tmp_path / "bad.cert").write_text("rule borda\n")
    assert run("check-proof", "--cert", tmp_path / "bad.cert") == 3
    (tmp_path / "bad.cnf").write_text("p cnf x y\n")
    assert run("solve", "--cnf", tmp_path / "bad.cnf") == 3
    (tmp_path / "ok.cnf").write_text("p cnf 1 1\n1 0\n")
    assert run("solve", "--cnf", tmp_path / "ok.cnf", "--solver", "no-such-binary {input}") == 4
    assert run("solve", "--cnf", tmp_path / "ok.cnf", "--solver",
               f"{sys.executable} -c 'import time; time.sleep(30)' {{input}}", "--timeout", 0.5) == 4
