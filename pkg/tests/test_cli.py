import subprocess
import sys

import numpy as np
import pytest

from nbody_taylor.cli import (
    EXIT_COLLISION,
    EXIT_CONFIG,
    EXIT_FAILED,
    EXIT_OK,
    ConfigError,
    RunConfig,
    main,
    output_times,
    read_csv,
    render_csv,
)
from oracles import fall_time

FREE = """
kind = newtonian
masses = 1
positions = [0, 0, 0]
velocities = [1, 0, 0]
t_end = 2
cadence = 1
"""

SOFT_PAIR = """
kind = softened
masses = 1, 1
positions = [-1, 0, 0], [1, 0, 0]
softening = 0.5
b = 1
t_end = 3
"""

KEPLER = """
kind = newtonian
masses = 1, 1
positions = [-1, 0, 0], [1, 0, 0]
velocities = [0, 0, 0], [0, 0, 0]
b = 0.5
t_end = 3
"""

THREE_BODY = """
kind = softened
masses = 1, 2, 0.5
positions = [-1, 0.2, 0], [1, -0.3, 0.1], [0.1, 0.9, -0.4]
velocities = [0.2, 0.1, 0], [-0.1, 0, 0.3], [0, -0.2, 0.1]
softening = [0, 0.5, 0.25], [0.5, 0, 1], [0.25, 1, 0]
t_end = 100
"""


@pytest.fixture
def cfg(tmp_path):
    def write(text, name="run.cfg"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return write


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_free_body_rows(cfg, capsys):
    code, out, _ = run(capsys, "simulate", "--config", cfg(FREE))
    assert code == EXIT_OK
    lines = out.splitlines()
    assert lines[0] == "t,x1,y1,z1,vx1,vy1,vz1,energy"
    rows = [list(map(float, ln.split(","))) for ln in lines[1:]]
    assert [r[0] for r in rows] == [0.0, 1.0, 2.0]
    assert [r[1] for r in rows] == [0.0, 1.0, 2.0]


def test_default_cadence_is_64_rows(cfg, tmp_path, capsys):
    out = tmp_path / "traj.csv"
    assert run(capsys, "simulate", "--config", cfg(SOFT_PAIR), "--out", str(out))[0] == EXIT_OK
    header, data, _ = read_csv(str(out))
    assert header[0] == "t" and header[-1] == "energy"
    assert len(header) == 1 + 6 + 6 + 1
    assert data.shape == (64, 14)
    assert data[-1, 0] == 3.0
    np.testing.assert_allclose(data[:, -1], data[0, -1], rtol=0, atol=1e-9)


def test_long_softened_run_and_round_trip(cfg, tmp_path, capsys):
    out = tmp_path / "three.csv"
    assert run(capsys, "simulate", "--config", cfg(THREE_BODY), "--out", str(out))[0] == EXIT_OK
    text = out.read_text()
    header, data, footer = read_csv(str(out))
    assert render_csv(header, data) == text
    assert not footer


def test_collision_exit_code_and_no_output(cfg, tmp_path, capsys):
    out = tmp_path / "kepler.csv"
    code, _, err = run(capsys, "simulate", "--config", cfg(KEPLER), "--out", str(out))
    assert code == EXIT_COLLISION
    assert "pair=1,2" in err
    t = float(err.split("t=")[1].split()[0])
    assert t == pytest.approx(fall_time(2.0, 2.0), rel=1e-6)
    assert "mirror_t=-" in err
    assert not out.exists()
    assert [p.name for p in tmp_path.iterdir()] == ["run.cfg"]


def test_failed_run_keeps_previous_file(cfg, tmp_path, capsys):
    out = tmp_path / "kepler.csv"
    out.write_text("previous\n")
    assert run(capsys, "simulate", "--config", cfg(KEPLER), "--out", str(out))[0] == EXIT_COLLISION
    assert out.read_text() == "previous\n"


def test_coeffs_zero_velocity(cfg, tmp_path, capsys):
    out = tmp_path / "c.csv"
    assert run(capsys, "coeffs", "--config", cfg(KEPLER), "--out", str(out))[0] == EXIT_OK
    header, data, footer = read_csv(str(out))
    assert header[:2] == ["order", "x1"]
    assert data.shape == (21, 7)
    odd = float(footer[0].split("odd-defect=")[1].split()[0])
    assert odd <= 1e-13


def test_coeffs_pendulum_from_origin_is_odd(cfg, tmp_path, capsys):
    out = tmp_path / "c.csv"
    text = "kind = pendulum\npositions = 0\nvelocities = 1.5\n"
    assert run(capsys, "coeffs", "--config", cfg(text), "--out", str(out))[0] == EXIT_OK
    _, data, footer = read_csv(str(out))
    even = float(footer[0].split("even-defect=")[1])
    assert even == 0.0
    assert np.all(data[0::2, 1] == 0.0)


def test_coeffs_free_body(cfg, capsys):
    code, out, _ = run(capsys, "coeffs", "--config", cfg(FREE))
    rows = [ln.split(",") for ln in out.splitlines()[1:] if not ln.startswith("#")]
    assert code == EXIT_OK
    assert all(float(x) == 0.0 for r in rows[2:] for x in r[1:])


def test_verify_even_passes(cfg, tmp_path, capsys):
    out = tmp_path / "report.txt"
    text = KEPLER.replace("t_end = 3", "t_end = 2")
    assert run(capsys, "verify", "--config", cfg(text), "--out", str(out))[0] == EXIT_OK
    report = dict(line.split("=", 1) for line in out.read_text().splitlines())
    assert report["kind"] == "even" and report["passed"] == "true"
    assert float(report["mirror_defect"]) <= 1e-9
    assert report["samples"] == "32"


def test_verify_tampered_velocity_fails(cfg, capsys):
    text = KEPLER.replace("velocities = [0, 0, 0], [0, 0, 0]", "velocities = [0.1, 0, 0], [0, 0, 0]")
    text = text.replace("t_end = 3", "t_end = 1")
    code, out, _ = run(capsys, "verify", "--config", cfg(text))
    assert code == EXIT_FAILED
    assert "passed=false" in out


def test_verify_odd_newtonian_is_config_error(cfg, capsys):
    assert run(capsys, "verify", "--config", cfg(KEPLER), "--kind", "odd")[0] == EXIT_CONFIG


def test_verify_odd_pendulum(cfg, capsys):
    text = "kind = pendulum\npositions = 0\nvelocities = 1.2\nt_end = 4\n"
    assert run(capsys, "verify", "--config", cfg(text), "--kind", "odd")[0] == EXIT_OK


def test_verify_collision(cfg, capsys):
    code, _, err = run(capsys, "verify", "--config", cfg(KEPLER))
    assert code == EXIT_COLLISION
    assert "mirror_t" in err


def test_radius_examples(cfg, capsys):
    assert run(capsys, "radius", "--config", cfg(SOFT_PAIR))[1] == "b=1 M=8 radius=0.5\n"
    assert run(capsys, "radius", "--config", cfg(SOFT_PAIR.replace("b = 1", "b = 4")))[1].endswith(
        "radius=1\n"
    )
    assert run(capsys, "radius", "--config", cfg(KEPLER))[1] == "b=0.5 M=1 radius=1\n"


def test_radius_out_of_range(cfg, capsys):
    code, _, err = run(capsys, "radius", "--config", cfg(KEPLER.replace("b = 0.5", "b = 1.5")))
    assert code == EXIT_CONFIG
    assert "ball radius" in err


def test_parity_monomial(cfg, capsys):
    code, out, _ = run(capsys, "parity", "--config", cfg("kind = pendulum\npositions = 0\nmonomial = 5, 3\n"))
    assert code == EXIT_OK
    assert "vector_sense=even" in out and "strict_sense=odd" in out


def test_parity_lemma5_and_seed(cfg, capsys, monkeypatch):
    path = cfg(SOFT_PAIR + "samples = 20\n")
    monkeypatch.setenv("NBODY_SEED", "7")
    first = run(capsys, "parity", "--config", path)
    second = run(capsys, "parity", "--config", path)
    assert first == second and first[0] == EXIT_OK
    assert float(first[1].split("=")[1]) <= 1e-5
    monkeypatch.setenv("NBODY_SEED", "seven")
    assert run(capsys, "parity", "--config", path)[0] == EXIT_CONFIG


@pytest.mark.parametrize(
    "text",
    [
        "kind = softened\nmasses = 1, 1\npositions = [0,0,0], [1,0,0]\n",
        "kind = newtonian\nmasses = 1, 1\npositions = [0,0,0]\n",
        "kind = newtonian\nmasses = 1\npositions = [0,0,0]\nsoftening = 0.5\n",
        "kind = newtonian\nmasses = 1\npositions = [0,0,0]\ncolour = red\n",
        "kind = newtonian\nmasses = 1\npositions = [0,0,0]\ntol = -1\n",
        "kind = newtonian\nmasses = 1\npositions = [0,0,0]\norder = 70\n",
        "kind = newtonian\nmasses = 1\npositions = [0,zero,0]\n",
        "kind = planets\n",
        "kind = newtonian\nmasses = -1\npositions = [0,0,0]\n",
        "this line has no equals sign\n",
    ],
)
def test_config_errors(cfg, capsys, text):
    assert run(capsys, "simulate", "--config", cfg(text))[0] == EXIT_CONFIG


def test_missing_config_and_bad_command(capsys, tmp_path):
    assert run(capsys, "simulate", "--config", str(tmp_path / "nope.cfg"))[0] == EXIT_CONFIG
    assert run(capsys, "dance", "--config", "x")[0] == EXIT_CONFIG


def test_config_parsing_details():
    c = RunConfig.from_text(THREE_BODY + "# trailing comment\nb = 0.25  # inline\n")
    assert c.masses == [1.0, 2.0, 0.5]
    assert c.softening[1] == [0.5, 0.0, 1.0]
    assert c.b == 0.25
    with pytest.raises(ConfigError):
        RunConfig.from_text(FREE + "t_end = 3\n")


def test_output_times():
    assert output_times(2.0, 1.0).tolist() == [0.0, 1.0, 2.0]
    assert output_times(2.5, 1.0).tolist() == [0.0, 1.0, 2.0, 2.5]
    assert output_times(-2.0, 1.0).tolist() == [0.0, -1.0, -2.0]
    assert len(output_times(7.0, None)) == 64


def test_console_entry_point(cfg):
    proc = subprocess.run(
        [sys.executable, "-m", "nbody_taylor.cli", "radius", "--config", cfg(SOFT_PAIR)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "b=1 M=8 radius=0.5"
