import io
import json

import pandas as pd
import pytest

from orbital_stability.cli import EXIT_CONFIG, EXIT_DOMAIN, EXIT_IO, EXIT_OK, run_command


def run(capsys, *argv):
    code = run_command(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_orbital_eval_json(capsys):
    code, out, _ = run(capsys, "orbital-eval", "--p", "3", "--n", "1", "--m", "0",
                       "--chi", "p:3,n:1,g:1", "--t", "10/9", "--evaluator", "both")
    assert code == EXIT_OK
    data = json.loads(out)
    assert data["class"] == "sigma_minus"
    assert data["t"] == "10/9"
    assert data["evaluators_agree"] is True
    assert {"value", "support_hit", "branch_trace", "vanishing_predicted"} <= set(data)


def test_negative_t_with_equals_form(capsys):
    code, out, _ = run(capsys, "orbital-eval", "--p", "3", "--m", "0", "--chi", "p:3,n:1,g:1", "--t=-1/8")
    assert code == EXIT_OK
    assert json.loads(out)["t"] == "-1/8"


def test_degenerate_t_is_a_domain_error(capsys):
    code, _, err = run(capsys, "orbital-eval", "--p", "3", "--m", "0", "--chi", "p:3,n:1,g:1", "--t", "1")
    assert code == EXIT_DOMAIN
    assert "domain error" in err


@pytest.mark.parametrize("argv", [
    ["orbital-eval", "--p", "3", "--n", "2", "--chi", "p:3,n:1,g:1", "--t", "2"],
    ["orbital-eval", "--p", "3", "--chi", "p:3,n:1,g:1", "--t", "0.5"],
    ["charsum", "--kind", "S", "--p", "3", "--m", "0", "--chi", "p:3,n:2,g:1", "--k", "0", "--t", "19"],
    ["stability-scan", "--q", "6", "--m-max", "10"],
    ["frobnicate"],
    ["orbital-eval", "--t"],
])
def test_configuration_errors(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == EXIT_CONFIG


def test_charsum_S(capsys):
    code, out, _ = run(capsys, "charsum", "--kind", "S", "--p", "3", "--m", "0",
                       "--chi", "p:3,n:2,g:1", "--k", "-1", "--t", "19")
    assert code == EXIT_OK
    assert json.loads(out)["value"]["re"] == pytest.approx(2.0)


def test_charsum_ramanujan(capsys):
    code, out, _ = run(capsys, "charsum", "--kind", "ramanujan", "--p", "5", "--k", "1", "--e-x", "-2")
    assert code == EXIT_OK
    assert json.loads(out)["value"] == "-1/4"


def test_orbital_scan_csv(capsys):
    code, out, _ = run(capsys, "orbital-scan", "--p", "3", "--m", "1", "--chi", "p:3,n:1,g:1",
                       "--count", "30", "--evaluator", "both")
    assert code == EXIT_OK
    frame = pd.read_csv(io.StringIO(out))
    assert len(frame) >= 30
    assert frame["evaluators_agree"].all()
    assert not (frame["vanishing_predicted"] & ~frame["exact_zero"]).any()


def test_stability_scan_rows(capsys):
    code, out, _ = run(capsys, "stability-scan", "--q", "5", "--m-max", "40")
    assert code == EXIT_OK
    frame = pd.read_csv(io.StringIO(out))
    assert len(frame) == 40
    assert list(frame["M"]) == list(range(1, 41))


@pytest.mark.slow
def test_stability_scan_to_200(capsys):
    code, out, _ = run(capsys, "stability-scan", "--q", "5", "--m-max", "200", "--threads", "2")
    assert code == EXIT_OK
    assert len(pd.read_csv(io.StringIO(out))) == 200


def test_smallcell_and_dualkernel(capsys):
    code, out, _ = run(capsys, "smallcell", "--p", "5", "--m", "1", "--chi", "p:5,n:1,g:1",
                       "--e-x", "0", "--evaluator", "both")
    assert code == EXIT_OK
    assert json.loads(out)["bruteforce_agrees"] is True
    code, out, _ = run(capsys, "dualkernel", "--p", "5", "--m", "1", "--chi", "p:5,n:1,g:1", "--kind", "support")
    assert code == EXIT_OK
    assert [0, 1] in json.loads(out)["members"]


def test_newforms_then_moment(capsys, tmp_path):
    coeffs = str(tmp_path / "forms.jsonl")
    code, _, _ = run(capsys, "newforms", "--out", coeffs, "--count", "400")
    assert code == EXIT_OK
    with open(coeffs) as fh:
        assert len(fh.read().splitlines()) == 2
    code, out, _ = run(capsys, "moment", "--coeffs", coeffs, "--chi", "trivial")
    assert code == EXIT_OK
    frame = pd.read_csv(io.StringIO(out))
    assert sorted(frame["label"]) == ["1.12.a", "11.2.a"]
    assert (frame["absL2"] >= 0).all()


def test_malformed_newform_file(capsys, tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"label": "x"\n')
    code, _, err = run(capsys, "moment", "--coeffs", str(path))
    assert code == EXIT_CONFIG
    assert "line 1" in err


def test_unwritable_output(capsys, tmp_path):
    out = str(tmp_path / "missing" / "out.json")
    code, _, _ = run(capsys, "charsum", "--kind", "gauss", "--p", "5", "--chi", "p:5,n:1,g:1", "--out", out)
    assert code == EXIT_IO


def test_config_file_with_override(capsys, tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"command": "charsum", "kind": "ramanujan", "p": 3, "k": 0, "e_x": -1}))
    code, out, _ = run(capsys, "charsum", "--config", str(cfg), "--p", "5")
    assert code == EXIT_OK
    assert json.loads(out)["value"] == "-1/4"
