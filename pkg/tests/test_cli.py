import json

import pytest

from quadthermo import __version__
from quadthermo.cli import run


def _json(path):
    return json.loads(path.read_text())


def test_schedule_json(tmp_path):
    out = tmp_path / "s.json"
    assert run(["schedule", "--omega", "1", "--out", str(out)]) == 0
    doc = _json(out)
    assert doc["result"]["S_m"][:2] == [20, 52]
    assert doc["version"] == __version__
    assert "threads" not in doc["config"]


def test_series_csv_header_and_bound(tmp_path):
    out = tmp_path / "s.csv"
    assert run(["series", "--xi", "1", "--q", "400", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# {")
    assert lines[1] == "s,kind,sign,log2_value,log2_tail"
    total = [l for l in lines if l.startswith("total")][0].split(",")
    assert float(total[3]) <= 2.585  # log2 6


def test_itinerary_and_config_file(tmp_path):
    cfg = tmp_path / "it.cfg"
    cfg.write_text("# toy run\ntoy = true\nlength = 30\nsigns = +(-)\n")
    out = tmp_path / "it.csv"
    assert run(["itinerary", "--config", str(cfg), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert json.loads(lines[0][2:])["compatible"] is True
    assert len(lines) == 2 + 30
    # command-line flags override the file
    assert run(["itinerary", "--config", str(cfg), "--length", "5", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 2 + 5


def test_bad_config_key_is_an_error(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("nonsense = 1\n")
    assert run(["schedule", "--config", str(cfg)]) == 1


def test_error_exit_codes(tmp_path):
    assert run(["schedule", "--q", "10"]) == 1  # violates the size hypotheses
    assert run(["pressure", "--c", "-2", "--N", "0", "--method", "periodic",
                "--out", str(tmp_path / "x.csv")]) == 1
    with pytest.raises(SystemExit):
        run(["no-such-command"])


def test_failed_check_exit_code(tmp_path):
    # far below the size hypotheses some inequalities have negative margins
    out = tmp_path / "v.json"
    assert run(["verify-appendix", "--xi", "1", "--q", "4", "--relaxed", "--tau-points", "2",
                "--omega", "0", "--out", str(out)]) == 2
    assert _json(out)["result"]["reports"][0]["all_pass"] is False


def test_pressure_periodic_csv(tmp_path):
    out = tmp_path / "p.csv"
    assert run(["pressure", "--c", "-2", "--method", "periodic", "--N", "10", "--steps", "3",
                "--out", str(out)]) == 0
    rows = out.read_text().splitlines()[2:]
    assert len(rows) == 3
    assert float(rows[0].split(",")[1]) == pytest.approx(0.6931471805599453, abs=1e-12)


def test_measure_json(tmp_path):
    out = tmp_path / "m.json"
    assert run(["measure", "--c", "-1.99527159431", "--t", "1", "--max-return", "10",
                "--out", str(out)]) == 0
    doc = _json(out)["result"]
    total = doc["report"]
    assert float(total["mass_plus"]) + float(total["mass_minus"]) + float(total["mass_other"]) == \
        pytest.approx(1.0, abs=1e-12)
    assert sum(float(a["mass"]) for a in doc["atoms"]) == pytest.approx(1.0, abs=1e-12)


def test_outputs_do_not_depend_on_threads(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["verify-appendix", "--xi", "1", "--q", "400", "--xi", "2", "--q", "600", "--tau-points", "2",
            "--omega", "0"]
    assert run(args + ["--threads", "1", "--out", str(a)]) == 0
    assert run(args + ["--threads", "2", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
