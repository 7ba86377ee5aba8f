"""CLI surface, cache behaviour and the comparison pipeline."""

import json
import math
import os
from pathlib import Path

import pytest

from nodalab import cache as ch
from nodalab import reporting as rp
from nodalab.cli import main
from nodalab.errors import EmptyDataError, PreconditionError


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv(ch.ENV_CACHE_ROOT, str(tmp_path / "cache"))
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run_cli(*argv):
    return main(list(argv))


def test_lattice_csv(capsys):
    assert run_cli("lattice", "--energy", "25", "--correlations", "4", "--gamma", "0.4") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "E,N,l,count,bound,passes"
    assert out[1].startswith("25,12,3,0,")
    assert out[2].startswith("25,12,4,0,")


def test_lattice_cache_file(tmp_path):
    assert run_cli("lattice", "--energy", "25", "--correlations", "3", "--cache", "--out", str(tmp_path / "x.csv")) == 0
    assert (Path(os.environ[ch.ENV_CACHE_ROOT]) / "lattice_E25.csv").exists()


def test_lattice_sieve_listing(tmp_path, capsys):
    assert run_cli("lattice", "--limit", "10") == 0
    out = capsys.readouterr().out.splitlines()
    assert out == ["n", "0", "1", "2", "4", "5", "8", "9", "10"]


def test_measure_roundtrip_and_prokhorov(tmp_path, capsys):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    assert run_cli("measure", "--named", "cilleruelo", "--out", str(a)) == 0
    assert run_cli("measure", "--named", "tilted", "--out", str(b)) == 0
    assert run_cli("measure", "--prokhorov", str(a), str(b)) == 0
    line = capsys.readouterr().out.splitlines()[1]
    assert line.endswith("0.125")


def test_measure_from_coeffs(tmp_path, capsys):
    coeffs = tmp_path / "c.csv"
    assert run_cli("eigen", "--energy", "5", "--coeffs", "equal",
                   "--eval", "0,0", "--save-coeffs", str(coeffs)) == 0
    capsys.readouterr()
    assert run_cli("measure", "--from-coeffs", str(coeffs)) == 0
    payload = json.loads(capsys.readouterr().out)
    assert len(payload["atoms"]) == 8


def test_eigen_eval(capsys):
    assert run_cli("eigen", "--energy", "1", "--coeffs", "equal", "--eval", "0.5,0.5") == 0
    row = capsys.readouterr().out.splitlines()[1].split(",")
    assert float(row[2]) == pytest.approx(-2.0)


def test_eigen_residuals(capsys):
    assert run_cli("eigen", "--energy", "2", "--coeffs", "equal", "--residuals",
                   "--R", "1.2", "--K", "2", "--delta", "0.001",
                   "--samples", "16", "--seed", "1") == 0
    header, row = capsys.readouterr().out.splitlines()
    cols = dict(zip(header.split(","), row.split(",")))
    assert float(cols["mean_residual_sq"]) < 1e-18


def test_nodal_census_csv(tmp_path, capsys):
    out = tmp_path / "census.csv"
    assert run_cli("nodal", "--energy", "25", "--coeffs", "equal", "--out", str(out),
                   "--labels", str(tmp_path / "labels.pgm"),
                   "--figure", str(tmp_path / "map.png")) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "component,sign,area,diameter,touches_boundary"
    assert len(lines) == 13  # 12 components
    assert (tmp_path / "labels.pgm").read_text().startswith("P2")
    assert (tmp_path / "map.png").stat().st_size > 1000


def test_cns_trial_csv(capsys):
    assert run_cli("cns", "--measure", "cilleruelo", "--R", "8", "--trials", "8",
                   "--seed", "3") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "trial,count,area,estimate"
    assert len(out) == 9
    assert all(line.split(",")[1] == "0" for line in out[1:])


def test_kacrice_csv(capsys):
    assert run_cli("kacrice", "--measure", "uniform", "--direction", "1,0") == 0
    row = capsys.readouterr().out.splitlines()[1]
    assert float(row.split(",")[3]) == pytest.approx(math.sqrt(2))


def test_moments_csv(capsys):
    assert run_cli("moments", "--energy", "25", "--coeffs", "equal",
                   "--K", "2", "--delta", "0.001", "--B", "3") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "spec,gaussian,exact_re,exact_im,quad_re,quad_im,gap"
    assert len(out) > 4


def test_exit_codes(tmp_path, capsys):
    # precondition-violating config -> 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("energies=25\ntrials=2\n")
    assert run_cli("compare", "--config", str(bad)) == 1
    # invalid measure JSON -> 2
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    assert run_cli("measure", "--prokhorov", str(broken), str(broken)) == 2
    # missing file -> 2
    assert run_cli("measure", "--prokhorov", "nope.json", "nope.json") == 2


# ---------------------------------------------------------------------------
# Cache
# ---------------------------------------------------------------------------


def test_cache_roundtrip(tmp_path):
    params = {"E": 25, "seed": 1}
    payload = b"a,b\n1,2\n"
    ch.cache_put("unit", params, payload, root=tmp_path)
    assert ch.cache_get("unit", params, root=tmp_path) == payload


def test_cache_cold_miss(tmp_path):
    assert ch.cache_get("unit", {"E": 1}, root=tmp_path) is None


def test_cache_seed_changes_key():
    k1 = ch.params_key("cns", {"E": 25, "seed": 1})
    k2 = ch.params_key("cns", {"E": 25, "seed": 2})
    assert k1 != k2


def test_cache_digest_mismatch_warns(tmp_path):
    params = {"E": 25}
    path = ch.cache_put("unit", params, b"payload", root=tmp_path)
    path.write_bytes(b"tampered")
    with pytest.warns(UserWarning):
        assert ch.cache_get("unit", params, root=tmp_path) is None


# ---------------------------------------------------------------------------
# Comparison pipeline
# ---------------------------------------------------------------------------


def comparison_config(tmp_path, energies="25,3"):
    cfg = tmp_path / "cmp.cfg"
    cfg.write_text(
        f"energies={energies}\ncoeffs=equal\nR=4\ntrials=8\nseed=11\n"
        "target=cilleruelo\nK=8\ndelta=0.001\ngamma=0.4\nB=4\n"
    )
    return cfg


def test_run_comparison_rows(tmp_path):
    config = rp.ExperimentConfig.from_file(comparison_config(tmp_path))
    rows = rp.run_comparison(config, cache_root=tmp_path / "c")
    assert rows[0].status == "ok"
    assert rows[0].nodal_count == 12
    assert rows[0].correlations_pass and rows[0].flatness_pass
    assert rows[0].cns is not None and rows[0].prokhorov is not None
    assert rows[1].status == "E not in S"


def test_emit_plot_data_schemas(tmp_path):
    config = rp.ExperimentConfig.from_file(comparison_config(tmp_path, "25"))
    rows = rp.run_comparison(config, cache_root=tmp_path / "c")
    header, data = rp.emit_plot_data(rows, "scatter")
    assert header == ["E", "Nf_over_E", "cns", "cns_err"]
    assert len(data) == 1
    with pytest.raises(EmptyDataError):
        rp.emit_plot_data([], "scatter")
    with pytest.raises(PreconditionError):
        rp.emit_plot_data(rows, "pie")


def test_compare_cli_outputs(tmp_path):
    cfg = comparison_config(tmp_path, "25")
    outdir = tmp_path / "out"
    assert run_cli("compare", "--config", str(cfg), "--outdir", str(outdir)) == 0
    assert (outdir / "comparison.csv").exists()
    assert (outdir / "comparison_scatter.csv").exists()
    assert (outdir / "comparison_scatter.png").stat().st_size > 1000
    manifest = json.loads((outdir / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 11
    assert "nodalab" in manifest["versions"]
