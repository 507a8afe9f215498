import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from systolab import cli
from systolab.conformal import format_spec, random_even_factor


def verify(tmp_path, *args, name="report.json"):
    out = tmp_path / name
    code = cli.main(["verify", *args, "--out", str(out)])
    return code, (out.read_text() if out.exists() else None)


def test_presets_command(capsys):
    assert cli.main(["presets"]) == 0
    text = capsys.readouterr().out
    assert "constant" in text and "p2" in text and "z^2 - 1/3" in text
    assert len(text.strip().splitlines()) >= 4


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "systolab", "presets"], capture_output=True, text=True)
    assert proc.returncode == 0 and "mixed" in proc.stdout


def test_constant_pu_equality(tmp_path):
    code, text = verify(tmp_path, "--preset", "constant:1", "--checks", "pu", "--mesh-level", "3")
    assert code == 0
    rep = json.loads(text)
    assert rep["status"] == "PASS"
    assert rep["checks"]["pu"]["classification"] == "equality"
    assert list(rep["checks"]) == ["pu"]


def test_p2_report_values(tmp_path):
    code, text = verify(tmp_path, "--preset", "p2:0.3", "--checks", "sphere,projective,pu",
                        "--mesh-level", "4")
    assert code == 0
    rep = json.loads(text)
    sph, proj, pu = (rep["checks"][k] for k in ("sphere", "projective", "pu"))
    P2_V = 0.09 * 16 * np.pi / 45
    assert sph["m"] == pytest.approx(1.8 * np.pi, rel=1e-6)
    assert sph["upper"] == pytest.approx(4 * np.pi + P2_V, rel=1e-6)
    assert sph["V"] == pytest.approx(P2_V, rel=1e-6)
    assert proj["m_bar"] == pytest.approx(0.9 * np.pi, rel=1e-6)
    assert proj["V_bar"] == pytest.approx(P2_V / 2, rel=1e-6)
    assert pu["area"] == pytest.approx((4 * np.pi + P2_V) / 2, rel=1e-6)
    assert set(rep["symbols"]) >= {"m", "m_bar", "V", "V_bar", "L", "area", "var"}
    assert rep["config"]["preset"] == "p2:0.3" and rep["schema_version"] == 1
    assert "timings_s" not in rep


def test_random_run_is_byte_identical(tmp_path):
    args = ("--random", "--seed", "42", "--amplitude", "0.4", "--mesh-level", "3")
    _, a = verify(tmp_path, *args, name="a.json")
    _, b = verify(tmp_path, *args, name="b.json")
    strip = lambda t: t.replace(str(tmp_path / "a.json"), "X").replace(str(tmp_path / "b.json"), "X")
    assert strip(a) == strip(b)
    _, c = verify(tmp_path, *args[:2], "43", *args[3:], name="c.json")
    assert json.loads(c)["factor"]["fingerprint"] != json.loads(a)["factor"]["fingerprint"]


def test_threads_do_not_change_report(tmp_path):
    args = ("--random", "--seed", "7", "--checks", "pu", "--mesh-level", "4")
    _, a = verify(tmp_path, *args, name="a.json")
    _, b = verify(tmp_path, *args, "--threads", "3", name="b.json")
    ja, jb = json.loads(a), json.loads(b)
    ja["config"].pop("out"), jb["config"].pop("out")
    assert ja["config"].pop("threads") == 1 and jb["config"].pop("threads") == 3
    assert ja == jb


@pytest.mark.parametrize(
    "args",
    [
        ["--preset", "nope:1"],
        ["--spec", "/nonexistent/spec.txt"],
        ["--preset", "p2:0.3", "--mesh-level", "9"],
        ["--preset", "p2:0.3", "--edge-samples", "4"],
        ["--preset", "p2:0.3", "--checks", "sphere,magic"],
        ["--random", "--amplitude", "1.5"],
        ["--preset", "p2:0.3", "--plot-data"],  # plot data needs a file
        ["--preset", "p2:0.3", "--calibration", "/nonexistent.json"],
    ],
)
def test_config_errors_exit_2(args, capsys):
    assert cli.main(["verify", *args]) == 2


def test_invalid_factor_exit_3(tmp_path):
    spec = tmp_path / "neg.txt"
    spec.write_text("offset 1\n2 0 -2.0\n")  # 1 - 2 Y20 < 0 at the poles
    code, text = verify(tmp_path, "--spec", str(spec))
    assert code == 3
    assert json.loads(text)["status"] == "INVALID_FACTOR"
    odd = tmp_path / "odd.txt"
    odd.write_text("offset 1\n1 0 0.2\n")
    assert verify(tmp_path, "--spec", str(odd), "--checks", "projective")[0] == 3
    # odd factors are fine for sphere-only runs
    assert verify(tmp_path, "--spec", str(odd), "--checks", "sphere")[0] == 0


def test_failed_check_exit_1(tmp_path):
    # a degree-16 factor on a quadrature exact to degree 3 breaks the Fubini identity
    spec = tmp_path / "f.txt"
    spec.write_text(format_spec(random_even_factor(0, 16, 0.5).rep))
    code, text = verify(tmp_path, "--spec", str(spec), "--checks", "submersion", "--quad-level", "2")
    assert code == 1
    rep = json.loads(text)
    assert rep["status"] == "FAIL" and rep["checks"]["submersion"]["passed"] is False


def test_csv_output(tmp_path):
    code, text = verify(tmp_path, "--preset", "p2:0.3", "--checks", "sphere,projective",
                        "--format", "csv", name="r.csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [r["check"] for r in rows] == ["sphere", "projective"]
    assert float(rows[1]["m_bar"]) == pytest.approx(0.9 * np.pi, rel=1e-9)
    assert rows[0]["m_bar"] == ""


def test_plot_data_and_mesh_dump(tmp_path):
    out = tmp_path / "r.json"
    dump = tmp_path / "mesh.txt"
    code = cli.main(["verify", "--preset", "p2:0.3", "--checks", "sphere", "--plot-data",
                     "--out", str(out), "--mesh-dump", str(dump), "--mesh-level", "1"])
    assert code == 0
    plot = json.loads((tmp_path / "r.json.plot.json").read_text())
    vals = np.array(plot["factor"]["values"])
    assert vals.shape == (46, 90)
    assert vals.min() == pytest.approx(0.9, abs=1e-3) and vals.max() == pytest.approx(1.2)
    funk = np.array(plot["funk"]["values"])
    assert funk.min() == pytest.approx(2 * np.pi * 0.9, rel=1e-9)  # poles at +-90 deg lat
    assert dump.read_text().count("\ne ") == 120


def test_timings_opt_in(tmp_path):
    _, text = verify(tmp_path, "--preset", "constant:1", "--checks", "sphere", "--timings")
    assert set(json.loads(text)["timings_s"]) == {"sphere"}


def test_explicit_kappa_and_calibration_file(tmp_path):
    store = tmp_path / "cal.json"
    store.write_text(json.dumps({"kappa": 0.5}))
    _, text = verify(tmp_path, "--preset", "p2:0.3", "--checks", "pu", "--mesh-level", "2",
                     "--calibration", str(store))
    assert json.loads(text)["checks"]["pu"]["kappa"] == 0.5
    _, text = verify(tmp_path, "--preset", "p2:0.3", "--checks", "pu", "--mesh-level", "2",
                     "--kappa", "0.2", "--calibration", str(store))
    assert json.loads(text)["checks"]["pu"]["kappa"] == 0.2


def test_calibrate_aborts_with_diagnostics(tmp_path, caplog):
    store = tmp_path / "cal.json"
    assert cli.main(["calibrate", "--levels", "3", "4", "5", "--store", str(store)]) == 1
    assert not store.exists()
    assert "level 5" in caplog.text and "L/pi" in caplog.text


def test_calibrate_examples(tmp_path):
    """L(level)/pi decreasing, kappa in (0, 1), reruns agree to 1e-6."""
    first = cli.calibrate_mesh()
    assert np.all(np.diff(first["L_over_pi"]) < 0)
    assert 0 < first["kappa"] < 1
    assert abs(cli.calibrate_mesh()["kappa"] - first["kappa"]) < 1e-6
