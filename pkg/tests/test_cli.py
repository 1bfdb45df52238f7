import json

import pytest

from renewalgf.cli import build_parser, run_command


@pytest.fixture
def files(tmp_path):
    (tmp_path / "half.json").write_text('{"1": "1/2", "2": "1/2"}')
    (tmp_path / "cos.json").write_text('{"1": 1}')
    (tmp_path / "bad.json").write_text('{"1": -1}')
    (tmp_path / "garbage.json").write_text('not json')
    return tmp_path


def run(capsys, *argv):
    code = run_command([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_renewal_csv(files, capsys):
    code, out, _ = run(capsys, "renewal", "--coeffs", files / "half.json", "--n", 30, "--format", "csv")
    assert code == 0
    rows = out.strip().splitlines()
    assert rows[0].startswith("n,b_n")
    assert float(rows[-1].split(",")[1]) == pytest.approx(2 / 3, abs=1e-9)


def test_renewal_json_tags(files, capsys):
    code, out, _ = run(capsys, "renewal", "--coeffs", files / "half.json", "--n", 20)
    tags = [r["theorem_tag"] for r in json.loads(out)["reports"]]
    assert code == 0
    assert tags == ["renewal-gf-identity", "erdos-feller-pollard", "renewal-differences"]


def test_verify_measure(files, capsys):
    code, out, _ = run(capsys, "verify-measure", "--coeffs", files / "cos.json", "--eps", "0.01")
    rep = json.loads(out)["reports"][0]
    assert code == 0 and rep["satisfied"]
    assert rep["rhs"] == pytest.approx(0.4 * 3.141592653589793)


def test_report_to_file(files, capsys):
    out = files / "rep.json"
    code, text, _ = run(capsys, "verify-cake", "--out", out)
    assert code == 0 and text == ""
    assert json.loads(out.read_text())["reports"][0]["theorem_tag"] == "layer-cake"


def test_violation_exit_code(capsys):
    # distribution hypothesis fails: A is far too small
    code, _, _ = run(capsys, "verify-cake", "--A", "0.01")
    assert code == 1


@pytest.mark.parametrize("argv", [
    ["renewal", "--coeffs", "missing.json"],
    ["renewal"],
    ["verify-n2", "--q", "nope"],
    ["verify-lp", "--random", "1", "--p", "x"],
    ["pfunc-probe", "--beta", "power:3"],
    ["construct", "--phi", "sin(theta)"],
    ["construct", "--phi", "theta", "--eps", "2"],
    ["no-such-command"],
    ["verify-measure", "--random", "1", "--eps", "5"],
])
def test_usage_errors(argv, capsys):
    assert run_command(argv) == 2


def test_bad_files(files, capsys):
    assert run_command(["renewal", "--coeffs", str(files / "bad.json")]) == 2
    assert run_command(["renewal", "--coeffs", str(files / "garbage.json")]) == 2
    assert run_command(["replay-trace", "--trace", str(files / "garbage.json")]) == 2


def test_precision_exhausted_writes_trace(files, capsys):
    trace = files / "t.json"
    code, _, err = run(capsys, "construct", "--phi", "theta^-0.25", "--stages", 2, "--out", trace)
    assert code == 3
    assert "precision exhausted" in err
    assert json.loads(trace.read_text())["exhausted"]["stage"] == 1


def test_construct_replay_round_trip(files, capsys):
    trace = files / "t.json"
    code, first, _ = run(capsys, "construct", "--phi", "theta^-0.25", "--nu", 0, "--eps", 0.5,
                         "--delta", 1, "--stages", 2, "--precision", "extended:4096", "--out", trace)
    assert code == 0
    code, again, _ = run(capsys, "replay-trace", "--trace", trace)
    assert code == 0
    assert again == first


def test_help_lists_tags(capsys):
    text = build_parser().format_help()
    for tag in ("littlewood-superlevel", "dyadic-lp-bound", "l1-two-sided", "layer-cake",
                "dyadic-condensation-lower", "vanishing-ratio-probe", "croft-imag-residual"):
        assert tag in text


def test_random_suite_is_seeded(capsys):
    a = run(capsys, "verify-lp", "--random", 2, "--seed", 3, "--levels", "2:3")
    b = run(capsys, "verify-lp", "--random", 2, "--seed", 3, "--levels", "2:3")
    c = run(capsys, "verify-lp", "--random", 2, "--seed", 4, "--levels", "2:3")
    assert a == b
    assert a[1] != c[1]
