import io
import json
import subprocess
import sys

import pytest

from qvolk.cli import run_command
from qvolk.qcalc import QContext
from qvolk.volkenborn import qbernoulli_closed


def run(*argv):
    out = io.StringIO()
    code = run_command(list(argv), out)
    return code, out.getvalue()


def run_json(*argv):
    code, text = run(*argv, "--format", "json")
    return code, json.loads(text) if text else None


def test_bernoulli_table():
    code, doc = run_json("bernoulli", "--p", "5", "--q", "6", "--m", "4", "--prec", "12")
    assert code == 0
    assert doc["schema"] == 1
    assert doc["config"] == {"command": "bernoulli", "p": 5, "q": "6", "prec": 12,
                             "budget": 200000, "seed": 0}
    assert [c["ok"] for c in doc["checks"]] == [True] * 5
    from fractions import Fraction

    ctx = QContext(5, Fraction(6), 12)
    for row in doc["results"]:
        assert row["closed"] == qbernoulli_closed(ctx, row["m"]).to_json()


def test_integrate_constant():
    code, doc = run_json("integrate", "--p", "5", "--q", "6", "--f", "1", "--levels", "2..6")
    assert code == 0
    last = doc["results"][-1]
    assert last["defects"] == ["0"] * 4
    assert last["value"]["digits"][:3] == [1, 0, 0] and last["value"]["v"] == 0


def test_verify_density_identity():
    code, doc = run_json("verify", "eq16", "--p", "5", "--q", "6", "--P", "[x]^2", "--g", "[x]",
                         "--N", "4", "--M", "4")
    assert code == 0
    assert doc["checks"][0]["name"] == "density_defect" and doc["checks"][0]["ok"]


def test_verify_other_identities():
    assert run("verify", "eq13", "--p", "5", "--n", "2")[0] == 0
    assert run("verify", "eq13", "--p", "5", "--terms", "3", "--M", "6")[0] == 0
    assert run("verify", "eq17", "--p", "5")[0] == 0


def test_check_failure_exit_code():
    # the two-term congruence misses its bound at p = 3
    code, doc = run_json("verify", "eq13", "--p", "3", "--P", "[x]^2", "--a", "1", "--n", "2")
    assert code == 1 and not doc["checks"][0]["ok"]


def test_distribution_commands(tmp_path):
    path = tmp_path / "mu.json"
    code, doc = run_json("check-distribution", "--kind", "function", "--f", "[x]^2",
                         "--depth", "3", "--inner", "5", "--export", str(path))
    assert code == 0
    assert any(r.get("classification") == "strong" for r in doc["results"])
    code, doc = run_json("check-distribution", "--kind", "json", "--input", str(path),
                         "--depth", "3")
    assert code == 0
    code, doc = run_json("radon-nikodym", "--kind", "base", "--x", "2", "--depth", "3")
    assert code == 0
    code, doc = run_json("decompose", "--kind", "base", "--depth", "3", "--inner", "4")
    assert code == 0 and all(c["ok"] for c in doc["checks"])
    code, doc = run_json("decompose", "--kind", "json", "--input", str(path))
    assert code == 0


def test_mahler_command():
    code, doc = run_json("mahler", "--f", "[x]^3", "--M", "10", "--m", "4")
    assert code == 0
    tails = [r["n_abs_a_n"] for r in doc["results"] if "n_abs_a_n" in r]
    assert tails[4:] == ["0"] * 7


@pytest.mark.parametrize("argv,code", [
    (["bernoulli", "--p", "4"], 2),
    (["bernoulli", "--q", "2"], 2),
    (["bernoulli", "--prec", "3"], 2),
    (["bernoulli", "--budget", "10"], 2),
    (["integrate", "--f", "[x"], 2),
    (["integrate"], 2),
    (["nonsense"], 2),
    (["integrate", "--f", "[x]", "--levels", "5..2"], 2),
    (["integrate", "--f", "[x]", "--levels", "2..9", "--budget", "100", "--q", "1"], 3),
    (["check-distribution", "--kind", "base", "--depth", "6", "--budget", "1000"], 3),
])
def test_exit_codes(argv, code, capsys):
    assert run(*argv)[0] == code


def test_deterministic_output():
    argv = ["mahler", "--f", "q^(-1*x)", "--M", "8", "--seed", "3"]
    assert run(*argv) == run(*argv)
    assert run(*argv, "--format", "json") == run(*argv, "--format", "json")


def test_text_format_and_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "qvolk", "integrate", "--f", "1", "--levels", "2..5"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0].startswith("command=integrate p=5 q=6")
    assert "check converged: ok" in proc.stdout
