"""Exit codes, diagnostics, and output formats of the command line."""

import json

import pytest

from bandgap.cli import main
from bandgap.graph_model import build_comb, cell_to_dict, dumps_cell


@pytest.fixture
def comb_path(tmp_path):
    path = tmp_path / "comb.json"
    path.write_text(dumps_cell(build_comb(1, 1.0, [1.0], [2.0])))
    return str(path)


@pytest.fixture
def targets_path(tmp_path):
    path = tmp_path / "targets.json"
    path.write_text(json.dumps({"L": 6.0, "intervals": [[1.0, 2.0], [3.0, 4.0]]}))
    return str(path)


def test_validate_ok(comb_path, capsys):
    assert main(["validate", comb_path]) == 0
    assert capsys.readouterr().out.strip() == "cell valid"


def test_validate_reports_violations(tmp_path, capsys):
    doc = cell_to_dict(build_comb(1, 1.0, [1.0], [2.0]))
    doc["edges"][0]["length"] = -1.0
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["validate", str(path)]) == 1
    assert "positivity" in capsys.readouterr().out


def test_missing_file_is_io_error(capsys):
    assert main(["validate", "/no/such/file.json"]) == 2
    assert capsys.readouterr().err.startswith("error: io:")


def test_unknown_key_is_format_error(tmp_path, capsys):
    path = tmp_path / "odd.json"
    path.write_text('{"surprise": true}')
    assert main(["validate", str(path)]) == 2
    assert capsys.readouterr().err.startswith("error: format:")


def test_usage_error_is_one_line(comb_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["spectrum", comb_path, "--epsilon", "0.1"])
    assert exc.value.code == 2
    err = capsys.readouterr().err
    assert err.startswith("error: usage:")
    assert len(err.strip().splitlines()) == 1


def test_limit_json(comb_path, capsys):
    assert main(["limit", comb_path]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["m"] == 1
    assert doc["a"] == [2.0]
    assert doc["gaps"][0] == pytest.approx([2.0, 4.0])


def test_spectrum_json_and_determinism(comb_path, capsys):
    argv = [
        "spectrum", comb_path,
        "--epsilon", "0.1", "--lambda-max", "10", "--neumann",
    ]
    assert main(argv) == 0
    first = capsys.readouterr().out
    doc = json.loads(first)
    assert doc["eigenvalues"][0] == [0.0, 1]
    assert doc["regime"] == "neumann"
    assert main(argv) == 0
    assert capsys.readouterr().out == first


def test_spectrum_phi_arity_is_domain_error(comb_path, capsys):
    rc = main(
        [
            "spectrum", comb_path,
            "--epsilon", "0.1", "--lambda-max", "10", "--phi", "0.3,0.4",
        ]
    )
    assert rc == 1
    assert capsys.readouterr().err.startswith("error: domain:")


def test_spectrum_fd_check(comb_path, capsys):
    argv = [
        "spectrum", comb_path,
        "--epsilon", "0.1", "--lambda-max", "10", "--dirichlet",
        "--mesh-density", "200",
    ]
    assert main(argv) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["eigenvalues"][0][0] == pytest.approx(1.7885, rel=1e-3)


def test_bands_json_and_gap_csv(comb_path, tmp_path, capsys):
    gaps_file = tmp_path / "gaps.csv"
    argv = [
        "bands", comb_path,
        "--epsilon", "0.01", "--lambda-max", "8", "--samples", "4",
        "--gaps-out", str(gaps_file),
    ]
    assert main(argv) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["samples_per_dim"] == 4
    assert len(doc["certified_gaps"]) == 1
    gap = doc["certified_gaps"][0]
    assert gap["below"] == 1
    lines = gaps_file.read_text().splitlines()
    assert lines[0] == "epsilon,gap_lo,gap_hi,cert_k"
    assert len(lines) == 2


def test_converge_csv(comb_path, capsys):
    argv = ["converge", comb_path, "--epsilon", "0.1", "--epsilon", "0.05"]
    assert main(argv) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "epsilon,j,aj_eps,bj_eps,aj,bj,err_a,err_b"
    assert len(lines) == 3


def test_converge_rejects_increasing_epsilons(comb_path, capsys):
    argv = ["converge", comb_path, "--epsilon", "0.05", "--epsilon", "0.1"]
    assert main(argv) == 1
    assert capsys.readouterr().err.startswith("error: domain:")


def test_design_json(targets_path, capsys):
    assert main(["design", targets_path]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["l"] == pytest.approx([1.5, 1.0 / 6.0])
    assert doc["q"] == pytest.approx([1.5, 0.5])
    assert "cell" not in doc


def test_design_realize_and_cell_out(targets_path, tmp_path, capsys):
    out = tmp_path / "designed.json"
    argv = ["design", targets_path, "--realize", "--cell-out", str(out)]
    assert main(argv) == 0
    doc = json.loads(capsys.readouterr().out)
    assert "cell" in doc
    assert main(["validate", str(out)]) == 0


def test_design_rejects_bad_targets(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"L": 6.0, "intervals": [[2.0, 1.0]]}')
    assert main(["design", str(path)]) == 1
    assert capsys.readouterr().err.startswith("error: target-order:")


def test_selftest_single_criterion(capsys):
    assert main(["selftest", "--criterion", "1"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("PASS criterion 1")


def test_selftest_criterion_is_repeatable(capsys):
    assert main(["selftest", "--criterion", "1", "--criterion", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("PASS criterion 1")
    assert lines[1].startswith("PASS criterion 3")
