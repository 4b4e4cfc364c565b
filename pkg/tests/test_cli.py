import json

import mpmath as mp
import pytest

from isingcorr import cli
from isingcorr.render import value_to_json


@pytest.fixture(scope="module")
def cache(tmp_path_factory):
    path = tmp_path_factory.mktemp("cache") / "table.json"
    assert cli.main(["--cache", str(path), "--Nmax", "3", "correlation", "0", "0"]) == 0
    return str(path)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_trivial_correlation(cache, capsys):
    code, out, _ = run(capsys, "--cache", cache, "--Nmax", "3", "correlation", "0", "0")
    assert code == 0 and out.strip() == "1"


def test_latex_document(cache, capsys):
    code, out, _ = run(capsys, "--cache", cache, "--Nmax", "3", "correlation", "1", "1", "--format", "latex")
    assert code == 0
    assert out.startswith("\\documentclass") and "\\tilde E" in out and out.rstrip().endswith("\\end{document}")


def test_json_output_matches_table(cache, capsys):
    from isingcorr.engine import load_table

    code, out, _ = run(capsys, "--cache", cache, "--Nmax", "3", "correlation", "1", "2", "--kind", "C_d", "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["schema_version"] == 1
    assert data["value"] == value_to_json(load_table(cache).C_d(1, 2))


def test_eval_against_oracle(cache, capsys):
    code, out, _ = run(capsys, "--cache", cache, "--Nmax", "3", "eval", "0", "1", "--sh", "0.6", "--sv", "0.8")
    data = json.loads(out)
    assert code == 0 and mp.mpf(data["abs_diff"]) < 1e-12


def test_eval_isotropic_diagonal(cache, capsys):
    s = mp.nstr(mp.sqrt(mp.mpf("0.5")), 40)
    code, out, _ = run(capsys, "--cache", cache, "--Nmax", "3", "eval", "1", "1", "--sh", s, "--sv", s)
    assert code == 0 and mp.mpf(json.loads(out)["abs_diff"]) < 1e-12


def test_eval_dual_and_low(cache, capsys):
    for argv in (["1", "1", "--kind", "C_d", "--sh", "0.6", "--sv", "0.8"], ["0", "2", "--kind", "C_low", "--sh", "1.3", "--sv", "1.7"]):
        code, out, _ = run(capsys, "--cache", cache, "--Nmax", "3", "eval", *argv)
        assert code == 0 and mp.mpf(json.loads(out)["abs_diff"]) < 1e-12


def test_eval_wrong_regime_names_k(cache, capsys):
    code, _, err = run(capsys, "--cache", cache, "--Nmax", "3", "eval", "0", "1", "--sh", "1.3", "--sv", "1.7")
    assert code == 2 and "k = s_h s_v = 2.21" in err


def test_verify_recursions(cache, capsys):
    code, out, _ = run(capsys, "--cache", cache, "--Nmax", "3", "verify", "recursions")
    rep = json.loads(out)
    assert code == 0 and rep["ok"]
    assert all(c["residual"] == "0" for c in rep["suites"]["recursions"]["checks"])


def test_verify_duality(cache, capsys):
    code, out, _ = run(capsys, "--cache", cache, "--Nmax", "3", "verify", "duality")
    assert code == 0 and json.loads(out)["suites"]["duality"]["ok"]


def test_verify_identities(cache, capsys, tmp_path):
    report = tmp_path / "r.json"
    code, out, _ = run(capsys, "--cache", cache, "--Nmax", "3", "verify", "identities", "--samples", "100", "--report", str(report))
    rep = json.loads(report.read_text())
    assert code == 0 and rep == json.loads(out)
    pi = next(c for c in rep["suites"]["identities"]["checks"] if c["name"] == "pi_identity")
    assert pi["max_residual"] < 1e-25 and pi["samples"] == 100


def test_verify_is_deterministic(cache, capsys):
    first = run(capsys, "--cache", cache, "--Nmax", "3", "verify", "identities", "--samples", "10", "--seed", "5")[1]
    second = run(capsys, "--cache", cache, "--Nmax", "3", "verify", "identities", "--samples", "10", "--seed", "5")[1]

    def strip(text):
        rep = json.loads(text)
        for s in rep["suites"].values():
            s.pop("seconds")
        return rep

    assert strip(first) == strip(second)


def test_verify_failure_sets_exit_code(cache, capsys, monkeypatch):
    monkeypatch.setattr(cli, "suite_lambda", lambda cfg: [cli._check("forced", False)])
    code, out, _ = run(capsys, "--cache", cache, "--Nmax", "3", "verify", "lambda")
    assert code == 1 and not json.loads(out)["ok"]


def test_corrupt_cache_is_not_overwritten(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": "isingcorr.table", "version": 99}')
    code, _, err = run(capsys, "--cache", str(bad), "correlation", "0", "1")
    assert code == 3 and "version" in err
    assert bad.read_text() == '{"schema": "isingcorr.table", "version": 99}'


def test_cache_path_from_environment(tmp_path, capsys, monkeypatch):
    path = tmp_path / "env.json"
    monkeypatch.setenv(cli.CACHE_ENV, str(path))
    code, _, _ = run(capsys, "--Nmax", "1", "correlation", "0", "1")
    assert code == 0 and path.exists()


def test_oracles(capsys):
    code, out, _ = run(capsys, "oracle", "toeplitz_row", "1", "--sh", "0.6", "--sv", "0.8")
    assert code == 0 and json.loads(out)["value"].startswith("0.36503521714142015417")
    code, out, err = run(capsys, "oracle", "transfer_matrix", "2", "--sh", "0.6", "--sv", "0.8", "--width", "8")
    assert code == 0 and "finite cylinder" in err


def test_run_config_validation():
    with pytest.raises(ValueError):
        cli.RunConfig(Nmax=0)
    with pytest.raises(ValueError):
        cli.RunConfig(sample_points=[(1.0, 1.0)])
