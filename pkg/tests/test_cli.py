import json
import os

import numpy as np
import pytest

from momentumian.cli import main


@pytest.fixture(autouse=True)
def no_env_out(monkeypatch):
    monkeypatch.delenv("MOMENTUMIAN_OUT", raising=False)


def test_tide_happy_path(tmp_path):
    assert main(["tide", "--potential", "harmonic", "--k0", "1.0", "--qmin", "-3", "--qmax", "3", "--out", str(tmp_path)]) == 0
    files = sorted(os.listdir(tmp_path / "tide"))
    assert files == ["harmonic_k0_p1.csv", "harmonic_k0_p1.manifest.json"]
    man = json.loads((tmp_path / "tide" / files[1]).read_text())
    assert man["status"] == "converged" and man["window"] == [-3.0, 3.0]


def test_tide_divergence_exit_3(tmp_path):
    assert main(["tide", "--potential", "harmonic", "--k0", "1.5", "--out", str(tmp_path)]) == 3
    man = json.loads((tmp_path / "tide" / "harmonic_k0_p1.5.manifest.json").read_text())
    assert man["status"] == "diverged-at-q" and abs(man["diverged_at"]) < 8


def test_pide_zero_k0_constant(capsys):
    assert main(["pide", "--k0", "0", "--t-max", "10"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    header = lines[0].split(",")
    data = np.array([l.split(",") for l in lines[1:]], dtype=float)
    assert np.all(data[:, header.index("abs2_psi_plus")] == 1.0)
    assert np.all(data[:, header.index("abs2_psi_minus")] == 1.0)
    assert data[-1, 0] == 10.0


def test_pair_wins_over_k0(tmp_path):
    assert main(["pide", "--k0", "5", "--pt-plus", "1", "--pt-minus", "0.5", "--out", str(tmp_path), "--run-id", "p"]) == 0
    man = json.loads((tmp_path / "pide" / "p.manifest.json").read_text())
    assert man["constants"]["k0"] == [0.25, 0.0]


@pytest.mark.parametrize(
    "argv",
    [
        ["tide", "--bogus"],
        ["tide", "--steps", "-4"],
        ["pide", "--t-max", "-1"],
        ["pide", "--pt-plus", "1"],
        ["pide", "--a0", "1", "--b0", "0", "--psi0-plus", "1"],
        ["tide", "--potential", "square"],
        ["tide", "--potential", "{\"type\": \"harmonic\", \"omega\": -1}"],
        ["tide", "--qmin", "-3", "--qmax", "3", "--steps", "100"],
        ["classical", "--qmin", "1", "--qmax", "0"],
        ["classical", "--qmin", "0", "--qmax", "2"],
        ["scenario", "fig9"],
        ["scenario", "ho-fig3", "--grid-size", "10"],
        [],
    ],
)
def test_usage_errors_exit_2(argv, tmp_path):
    assert main(argv + (["--out", str(tmp_path)] if argv and argv[0] != "scenario" else [])) == 2


def test_bad_config_files(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{\"k0\": ")
    assert main(["pide", "--config", str(bad)]) == 2
    assert "malformed JSON" in capsys.readouterr().err
    unknown = tmp_path / "unknown.json"
    unknown.write_text("{\"warp\": 9}")
    assert main(["pide", "--config", str(unknown)]) == 2
    assert main(["pide", "--config", str(tmp_path / "missing.json")]) == 2


def test_config_values_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"k0": 2, "t_max": 1, "steps": 3}))
    assert main(["pide", "--config", str(cfg), "--steps", "5"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 6 and lines[-1].startswith("1,")


def test_env_output_root(tmp_path, monkeypatch):
    monkeypatch.setenv("MOMENTUMIAN_OUT", str(tmp_path))
    assert main(["classical", "--potential", "free", "--qmin", "0", "--qmax", "1", "--steps", "11"]) == 0
    assert sorted(os.listdir(tmp_path / "classical")) == ["free_minus.csv", "free_minus.manifest.json"]


def test_classical_and_specfun_stdout(capsys):
    assert main(["classical", "--potential", "constant-force", "--qmin", "0", "--qmax", "0.4", "--steps", "3"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "q,re_t,im_t,re_tprime,im_tprime"
    assert main(["specfun", "--alpha", "1", "--z", "1"]) == 0
    row = capsys.readouterr().out.splitlines()[1].split(",")
    assert float(row[3]) == pytest.approx(np.e, rel=1e-15)


def test_json_format_stdout(capsys):
    assert main(["specfun", "--z", "0.5+0.5j", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["columns"][0] == "alpha" and data["manifest"]["command"] == "specfun"


def test_tide_coulomb_and_rotation(tmp_path):
    assert main(["tide", "--potential", "coulomb", "--k0", "-0.5", "--steps", "2001", "--out", str(tmp_path)]) == 0
    assert main(["tide", "--potential", "harmonic", "--k0", "-1", "--rotations", "1", "--qmin", "-4", "--qmax", "4",
                 "--out", str(tmp_path)]) == 0
    assert main(["tide", "--potential", "coulomb", "--k0", "-0.5", "--qmax", "-2", "--out", str(tmp_path)]) == 2


def test_scenario_idempotent_and_manifest_rerun(tmp_path):
    a, b, c = (str(tmp_path / n) for n in "abc")
    assert main(["scenario", "superposition-fig5", "--out", a]) == 0
    assert main(["scenario", "superposition-fig5", "--out", b]) == 0
    f = "superposition-fig5/probe_q0.5.csv"
    assert open(os.path.join(a, f), "rb").read() == open(os.path.join(b, f), "rb").read()
    manifest = os.path.join(a, "superposition-fig5/probe_q0.5.manifest.json")
    assert main(["scenario", "--config", manifest, "--out", c]) == 0
    assert open(os.path.join(a, f), "rb").read() == open(os.path.join(c, f), "rb").read()


def test_scenario_divergence_exit_3(tmp_path):
    argv = ["scenario", "ho-fig3", "--k0-list", "1", "1.5", "--window", "-8", "8", "--grid-size", "1001", "--out", str(tmp_path)]
    assert main(argv) == 3
    assert os.path.exists(tmp_path / "ho-fig3" / "k0_p1.5.manifest.json")


def test_selftest_negative_control(capsys):
    assert main(["selftest", "--group", "specfun", "--corrupt-gamma", "1e-6"]) == 1
    out = capsys.readouterr().out
    assert "FAIL  specfun.mittag-leffler-identity" in out


def test_selftest_specfun_group_passes(capsys):
    assert main(["selftest", "--group", "specfun"]) == 0
    out = capsys.readouterr().out
    assert "8/8 properties passed" in out and "s)" in out
