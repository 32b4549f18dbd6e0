import json
import subprocess
import sys

import pytest

from coupledbisim.cli import run

I_OMEGA = "\\x. x -- (\\x. x x) (\\x. x x)\n"
OMEGA_OMEGA = "(\\x. x x) (\\x. x x) -- (\\x. x x) (\\x. x x)\n"


@pytest.fixture
def relfile(tmp_path):
    def write(text, name="r.rel"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return write


def test_eval_converges(capsys):
    assert run(["eval", "--strategy", "cbv", r"(\x. x) (\z. z)"]) == 0
    out = capsys.readouterr().out
    assert "\\z. z" in out or "\\x. x" in out


def test_eval_fuel_exhausted(capsys):
    assert run(["eval", "--fuel", "20", r"(\x. x x) (\x. x x)"]) == 2


def test_trace_lists_the_chain(capsys):
    assert run(["trace", r"(\x. x) ((\y. y) (\z. z))"]) == 0
    assert len(capsys.readouterr().out.strip().splitlines()) == 3


def test_equiv_verdicts(capsys):
    assert run(["equiv", r"\x. x", r"(\x. x x) (\x. x x)"]) == 1
    assert run(["equiv", "--strategy", "cbv", r"\x. (\y. y) x", r"\x. x"]) == 0
    assert run(["equiv", "--ev-only", r"\x. x", r"(\x. x x) (\x. x x)"]) == 1


def test_check_clb_exit_codes(relfile, capsys):
    assert run(["check-clb", relfile(OMEGA_OMEGA)]) == 0
    bad = relfile("[R1]\n" + I_OMEGA + "[R2]\n" + I_OMEGA + OMEGA_OMEGA, "bad.rel")
    assert run(["check-clb", bad]) == 1
    assert "refuted" in capsys.readouterr().out


def test_check_ab_and_lb(relfile):
    assert run(["check-ab", relfile(OMEGA_OMEGA)]) == 0
    assert run(["check-lb", relfile(I_OMEGA)]) == 1


def test_check_upto_with_technique(relfile):
    path = relfile(r"(\x. x) (\x. x) -- \x. x" + "\n")
    assert run(["check-upto", path, "--technique", "ctx"]) == 0
    assert run(["check-clb", path]) == 1
    assert run(["check-upto", path, "--technique", "ctx", "--harness"]) == 0


def test_check_upto_environment(relfile):
    path = relfile(r"\x. (\y. y) x -- \x. x" + "\n")
    assert run(["check-upto", path, "--strategy", "cbv", "--technique", "ctxv.red", "--up-to-environment"]) == 0


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["eval", r"(\x. x"],
        ["eval", "y"],
        ["eval", "--fuel", "0", r"\x. x"],
        ["eval", "--strategy", "lazy", r"\x. x"],
        ["check-upto", "missing.rel", "--technique", "pev"],
    ],
)
def test_usage_errors_exit_three(argv, capsys):
    assert run(argv) == 3


def test_bad_technique_exits_three(relfile):
    assert run(["check-upto", relfile(OMEGA_OMEGA), "--technique", "pev.."]) == 3


def test_bad_relation_file_exits_three(relfile, capsys):
    assert run(["check-clb", relfile("\\x.x -- \\x.x\n[R9]\n")]) == 3
    assert ":2:" in capsys.readouterr().err


def test_json_report_shape(relfile, capsys):
    assert run(["check-clb", relfile(OMEGA_OMEGA), "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["schema_version"] == 1
    assert data["run"]["verb"] == "check-clb" and data["run"]["strategy"] == "cbn"
    assert data["result"]["verdict"] == "holds-up-to-bound"


def test_output_file_is_byte_identical_across_runs(relfile, tmp_path):
    path = relfile("[R1]\n" + I_OMEGA + "[R2]\n" + I_OMEGA + OMEGA_OMEGA)
    outs = []
    target = tmp_path / "out.json"
    for _ in range(2):
        assert run(["check-clb", path, "--output", str(target)]) == 1
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["result"]["verdict"] == "refuted"


def test_gen_corpus_is_seeded(tmp_path, capsys):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert run(["gen-corpus", "--count", "20", "--seed", "3", "--corpus", str(a)]) == 0
    assert run(["gen-corpus", "--count", "20", "--seed", "3", "--corpus", str(b)]) == 0
    assert a.read_text() == b.read_text()
    assert len(a.read_text().splitlines()) == 20


def test_validate_axioms_small(capsys):
    assert run(["validate-axioms", "--technique", "pev", "--samples", "8", "--witnesses", "3", "--closure-bound", "3"]) == 0


def test_module_entry_point(relfile):
    proc = subprocess.run(
        [sys.executable, "-m", "coupledbisim", "check-clb", relfile(OMEGA_OMEGA)], capture_output=True, text=True
    )
    assert proc.returncode == 0, proc.stderr
