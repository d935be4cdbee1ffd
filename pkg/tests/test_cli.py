import csv
import io
import json
import subprocess
import sys

import pytest

from rinlink import Constellation
from rinlink.cli import EXIT_ALL_FAILED, EXIT_CONFIG, EXIT_OK, main
from rinlink.config import OmaGrid, load_document, resolve
from rinlink.exceptions import ConfigError

GOLDEN_HEADER = (
    "oma_dbm,ser_optimal,ser_approx,mc_ser_optimal,mc_ser_approx,"
    "mc_ci95_optimal,mc_ci95_approx,mi_bits,entropy_bits,status"
)
SMALL_MC = ["--min-errors", "20", "--max-symbols", "200000", "--batch", "50000"]


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_sweep_csv_schema_and_rows(tmp_path, capsys):
    out = tmp_path / "s.csv"
    code = main(["sweep", "--preset", "pam4", "--oma-start", "-2", "--oma-stop", "14",
                 "--seed", "42", "--out-csv", str(out), *SMALL_MC])
    assert code == EXIT_OK
    text = out.read_text()
    assert text.splitlines()[0] == GOLDEN_HEADER
    rows = read_rows(out)
    assert len(rows) == 17
    assert [float(r["oma_dbm"]) for r in rows] == list(range(-2, 15))
    assert all(r["status"] == "ok" and float(r["entropy_bits"]) == 2.0 for r in rows)
    # nine significant digits in CSV cells
    assert all(len(r["ser_optimal"].split("e")[0].replace(".", "").lstrip("0")) <= 9 for r in rows)


def test_sweep_to_stdout_without_monte_carlo(capsys):
    assert main(["sweep", "--preset", "pam6", "--oma-start", "0", "--oma-stop", "2", "--no-mc"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 4
    row = dict(zip(lines[0].split(","), lines[1].split(",")))
    assert row["mc_ser_optimal"] == "" and float(row["ser_optimal"]) > 0


def test_step_zero_is_config_error(capsys):
    code = main(["sweep", "--preset", "pam4", "--oma-step", "0"])
    assert code == EXIT_CONFIG
    assert "oma_grid_dbm.step" in capsys.readouterr().err


def test_config_error_names_field_and_location(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"preset": "pam4",\n "mc": {"seed": -3}}')
    assert main(["sweep", "--config", str(bad)]) == EXIT_CONFIG
    assert "mc.seed" in capsys.readouterr().err
    broken = tmp_path / "broken.json"
    broken.write_text('{"preset": "pam4",\n  oops}')
    assert main(["sweep", "--config", str(broken)]) == EXIT_CONFIG
    assert "broken.json:2:" in capsys.readouterr().err
    assert main(["sweep", "--preset", "pam4", "--rules", "bogus"]) == EXIT_CONFIG


def test_empty_rules_keep_mi(capsys):
    assert main(["sweep", "--preset", "pam4", "--oma-start", "0", "--oma-stop", "0", "--rules", ""]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "oma_dbm,mi_bits,entropy_bits,status"
    assert float(lines[1].split(",")[1]) > 1.9


def test_all_points_failing_exits_3(tmp_path, capsys):
    doc = tmp_path / "zero.json"
    doc.write_text(json.dumps({"constellation": {"points": [-3, -1, 1, 3], "probs": [0.5, 0, 0.25, 0.25]}}))
    code = main(["sweep", "--config", str(doc), "--rules", "optimal", "--oma-start", "0",
                 "--oma-stop", "1", "--no-mc"])
    assert code == EXIT_ALL_FAILED
    out = capsys.readouterr().out.splitlines()
    assert all(line.endswith("threshold_error") for line in out[1:])


def test_thresholds_without_rin_collapse_to_midpoints(capsys):
    assert main(["thresholds", "--preset", "pam4", "--rin-off"]) == 0
    lines = capsys.readouterr().out.splitlines()
    table = {ln.split()[0]: ln.split()[1:] for ln in lines[2:6]}
    assert set(table) == {"optimal", "uniform-exact", "approx", "awgn"}
    for cells in table.values():
        assert [float(v) for v in cells[:3]] == pytest.approx([-2.0, 0.0, 2.0], abs=1e-12)
        assert cells[3] == "ok"
    assert lines[6].startswith("    map residual")


def test_thresholds_pam6_json(tmp_path):
    out = tmp_path / "t.json"
    assert main(["thresholds", "--preset", "pam6", "--oma", "0", "--out-json", str(out)]) == 0
    doc = json.loads(out.read_text())
    opt = doc["rules"]["optimal"]["thresholds"]
    assert opt == pytest.approx(doc["rules"]["uniform-exact"]["thresholds"], abs=1e-12)
    approx = doc["rules"]["approx"]["thresholds"]
    assert all(abs(a - b) < 0.01 * 2.0 for a, b in zip(opt, approx))
    assert all(abs(r) < 1e-9 for r in doc["map_residuals"])
    assert doc["channel"]["beta"] == pytest.approx(9.625, abs=1e-3)


def test_thresholds_report_zero_probability_inline(tmp_path, capsys):
    doc = tmp_path / "ps.json"
    doc.write_text(json.dumps({"constellation": {"points": [-3, -1, 1, 3], "probs": [0.5, 0, 0.25, 0.25]}}))
    assert main(["thresholds", "--config", str(doc)]) == 0
    lines = capsys.readouterr().out.splitlines()
    table = {ln.split()[0]: ln.split()[1:] for ln in lines[2:6]}
    assert table["optimal"][:2] == ["ZeroProbability", "ZeroProbability"]
    assert table["optimal"][-1] == "error"
    assert table["approx"][-1] == "ok"


def test_reproducible_byte_identical(tmp_path):
    outs = []
    for k in range(2):
        c, j = tmp_path / f"{k}.csv", tmp_path / f"{k}.json"
        assert main(["sweep", "--preset", "pam6", "--oma-start", "-2", "--oma-stop", "0",
                     "--seed", "7", "--out-csv", str(c), "--out-json", str(j), *SMALL_MC]) == 0
        outs.append((c.read_bytes(), j.read_bytes()))
    assert outs[0] == outs[1]


def test_config_echo_round_trip(tmp_path):
    c1, j1 = tmp_path / "a.csv", tmp_path / "a.json"
    assert main(["sweep", "--preset", "pam4", "--oma-start", "-2", "--oma-stop", "0",
                 "--seed", "3", "--out-csv", str(c1), "--out-json", str(j1), *SMALL_MC]) == 0
    c2, j2 = tmp_path / "b.csv", tmp_path / "b.json"
    assert main(["sweep", "--config", str(j1), "--out-csv", str(c2), "--out-json", str(j2)]) == 0
    assert c1.read_bytes() == c2.read_bytes()
    assert j1.read_bytes() == j2.read_bytes()
    echo = json.loads(j1.read_text())
    assert echo["provenance"]["seed"] == 3
    assert "outputs" not in echo["config"]


def test_optimize_gs_keeps_endpoints(tmp_path, capsys):
    out = tmp_path / "gs.json"
    code = main(["optimize", "--preset", "pam6", "--mode", "gs", "--oma", "0",
                 "--restarts", "2", "--out-json", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    pts = doc["constellation"]["points"]
    assert pts[0] == -5.0 and pts[-1] == 5.0
    assert doc["report"]["after"]["ser_optimal"] < doc["report"]["before"]["ser_optimal"]
    assert "before:" in capsys.readouterr().out


def test_optimize_ps_ser_needs_h_min(capsys):
    assert main(["optimize", "--preset", "pam6", "--mode", "ps-ser"]) == EXIT_CONFIG
    assert "h_min" in capsys.readouterr().err
    assert main(["optimize", "--preset", "pam6"]) == EXIT_CONFIG


def test_optimize_ps_mi_beats_uniform(tmp_path):
    out = tmp_path / "mi.json"
    assert main(["optimize", "--preset", "pam8", "--mode", "ps-mi", "--oma", "2",
                 "--restarts", "1", "--out-json", str(out)]) == 0
    rep = json.loads(out.read_text())["report"]
    assert rep["after"]["mi_bits"] >= rep["before"]["mi_bits"]


def test_preset_fidelity():
    cfg = resolve({}, preset="pam6")
    assert cfg.link.bandwidth_hz == 52e9
    assert cfg.constellation == Constellation([-5, -3, -1, 1, 3, 5])
    assert cfg.link.er_db == 5.0


def test_explicit_fields_override_preset():
    cfg = resolve({"preset": "pam4", "link": {"rin_db_hz": -130}, "mc": {"seed": 5}}, seed=6)
    assert cfg.link.rin_db_hz == -130 and cfg.link.bandwidth_hz == 68e9
    assert cfg.mc.seed == 6


def test_config_validation_paths(tmp_path):
    with pytest.raises(ConfigError) as err:
        resolve({"preset": "pam5"})
    assert err.value.field == "preset"
    with pytest.raises(ConfigError):
        resolve({"bogus": 1, "preset": "pam4"})
    with pytest.raises(ConfigError):
        resolve({})
    assert OmaGrid(-2, 14, 1).values()[-1] == 14.0
    assert OmaGrid(0, 1, 0.1).values()[-1] == 1.0
    wrapped = tmp_path / "w.json"
    wrapped.write_text(json.dumps({"config": {"preset": "pam8"}}))
    assert load_document(wrapped) == {"preset": "pam8"}


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "rinlink", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "rinlink" in proc.stdout


def test_csv_module_parses_output():
    buf = io.StringIO(GOLDEN_HEADER + "\n")
    assert next(csv.reader(buf))[-1] == "status"
