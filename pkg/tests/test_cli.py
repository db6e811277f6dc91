import json
import subprocess
import sys

from aara.cli import EXIT_OK, EXIT_REJECTED, EXIT_USAGE, corpus_dir, main
from aara.parser import parse_program
from aara.tm import parse_tm

C = corpus_dir()


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_quicksort_quadratic_annotation(capsys):
    code, out, _ = run(capsys, "analyze", "--mode", "uni", "--degree", "2", C / "quicksort.rml")
    assert code == EXIT_OK
    assert "L^(1,2)" in out and "bound: |l|^2" in out


def test_json_report(capsys):
    code, out, _ = run(capsys, "analyze", "--mode", "multi", "--degree", "2", "--json",
                       C / "multiply.rml")
    d = json.loads(out)
    assert code == 0 and d["status"] == "typable" and d["format"] == "aara-report/1"
    assert d["bound"] == "15 + 29*|l1| + 11*|l1|*|l2|" and "timing" not in d
    _, out, _ = run(capsys, "analyze", "--mode", "multi", "--degree", "2", "--json", "--timing",
                    C / "multiply.rml")
    assert "timing" in json.loads(out)


def test_untypable_exits_one_with_hint(capsys):
    code, out, _ = run(capsys, "analyze", "--degree", "1", C / "quicksort.rml")
    assert code == EXIT_REJECTED
    assert "untypable" in out and "feasible at degree 2" in out


def test_required_output(capsys):
    code, out, _ = run(capsys, "analyze", "--mode", "multi", "--degree", "2",
                       "--require-output", C / "append_out.poly", C / "append.rml")
    assert code == 0 and "(|l1|+|l2|)^2" in out
    code, _, _ = run(capsys, "analyze", "--mode", "uni", "--degree", "2",
                     "--require-output", C / "quad_out.uni", C / "append.rml")
    assert code == EXIT_REJECTED


def test_dump_lp(capsys, tmp_path):
    target = tmp_path / "lp.txt"
    code, _, _ = run(capsys, "analyze", "--dump-lp", target, C / "append.rml")
    assert code == 0 and target.read_text().strip()
    code, out, _ = run(capsys, "analyze", "--dump-lp", "-", C / "append.rml")
    assert code == 0 and len(out.splitlines()) > 10


def test_ip_exit_codes(capsys):
    code, out, _ = run(capsys, "ip", C / "doubling.rml")
    assert code == EXIT_REJECTED and "recursive result z" in out
    code, out, _ = run(capsys, "ip", C / "append_rec.rml")
    assert code == EXIT_OK and "accepted" in out


def test_usage_errors(capsys, tmp_path):
    assert run(capsys, "analyze", tmp_path / "missing.rml")[0] == EXIT_USAGE
    assert run(capsys, "analyze", "--degree", "0", C / "append.rml")[0] == EXIT_USAGE
    assert run(capsys, "frobnicate")[0] == EXIT_USAGE
    bad = tmp_path / "bad.rml"
    bad.write_text("input x : L(unit);\ncase x { [] -> x | y :: -> x }")
    code, _, err = run(capsys, "analyze", bad)
    assert code == EXIT_USAGE and f"{bad}:2:" in err


def test_eval(capsys):
    code, out, _ = run(capsys, "eval", C / "append_rec.rml", "--input", "l1=[<>, <>]",
                       "--input", "l2=[<>]")
    assert code == 0 and out.splitlines()[0] == "[<>, <>, <>]"
    code, out, _ = run(capsys, "eval", C / "append.rml", "--arg", "<[<>], [<>]>",
                       "--metric", "tick")
    assert code == 0 and out.splitlines() == ["[<>, <>]", "cost (tick): 1"]


def test_environment_defaults(capsys, monkeypatch):
    monkeypatch.setenv("AARA_DEGREE", "2")
    code, out, _ = run(capsys, "analyze", C / "quicksort.rml")
    assert code == 0 and "degree 2" in out
    code, out, _ = run(capsys, "analyze", "--degree", "1", C / "quicksort.rml")
    assert code == EXIT_REJECTED


def test_compile_and_certify(capsys, tmp_path):
    target = tmp_path / "flip.rml"
    code, _, _ = run(capsys, "compile-tm", C / "tm" / "flip.tm", "-o", target)
    assert code == 0
    parse_program(target.read_text())
    code, out, _ = run(capsys, "certify-tm", C / "tm" / "flip.tm", "--max-len", "3")
    assert code == 0 and "certified" in out and "inputs: 15" in out


def test_certify_rejects_a_wrong_bound(capsys, tmp_path):
    text = (C / "tm" / "zero.tm").read_text().replace("bound = 1 + (3, 2)", "bound = 1 + (3)")
    parse_tm(text)
    path = tmp_path / "zero_linear.tm"
    path.write_text(text)
    code, out, _ = run(capsys, "certify-tm", path, "--max-len", "4")
    assert code == EXIT_REJECTED


def test_corpus_check(capsys):
    code, out, _ = run(capsys, "corpus", "check", "--jobs", "2")
    assert code == 0 and "tm-zero" in out


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "aara.cli", "ip", str(C / "append_fn.rml")],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "poly" in r.stdout
