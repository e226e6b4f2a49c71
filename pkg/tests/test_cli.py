import csv
import io
import math

import pytest

from aidecoh import __version__
from aidecoh.cli import main
from aidecoh.config import parse_config

DIMLESS = "[constants]\npreset = dimensionless\n"


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_table(text):
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out


def test_empty_bath_sweep_is_free_population(tmp_path, capsys):
    cfg = write(tmp_path, DIMLESS + "[bath]\nn0 = 0\n[sweep]\naxis = tau\nstart = 0.1\n"
                "stop = 3\ncount = 7\n")
    code, out, _ = run(capsys, "sweep", cfg)
    assert code == 0
    rows = read_table(out)
    assert len(rows) == 7
    for r in rows:
        assert float(r["rho_theta0_0"]) == 1.0
        assert float(r["rho_theta0_pi"]) == 0.0
        assert float(r["contrast"]) == 1.0
        assert r["error"] == ""


def test_time_dependent_sweep_static_limit(tmp_path, capsys):
    cfg = write(tmp_path, DIMLESS + "[experiment]\nz0 = 1\n[bath]\nn0 = 0.01\n"
                "[sweep]\naxis = tau\nstart = 0.1\nstop = 1\ncount = 5\nmodel = time_dependent\n")
    code, out, _ = run(capsys, "sweep", cfg)
    assert code == 0
    for r in read_table(out):
        tau = float(r["value"])
        d = 1.0 + tau / 2.0
        assert float(r["contrast"]) == pytest.approx(
            math.exp(-8 * math.pi / 15 * d * d * 0.01 * tau ** 4), rel=1e-14)


def test_phase_recovery_sweep_crosses_point_eight_near_ten(tmp_path, capsys):
    cfg = write(tmp_path, DIMLESS + "[sweep]\naxis = d_over_b\nstart = 1\nstop = 100\n"
                "count = 41\nscale = log\nmodel = phase_recovery\n")
    code, out, _ = run(capsys, "sweep", cfg)
    assert code == 0
    rows = [(float(r["value"]), float(r["aux"])) for r in read_table(out)]
    cross = next(x for x, ratio in rows if ratio >= 0.8)
    assert 5.0 <= cross <= 15.0


def test_header_echoes_resolved_config(tmp_path, capsys):
    cfg = write(tmp_path, DIMLESS + "[bath]\nn0 = 0.01\n[sweep]\naxis = tau\nstart = 1\n")
    code, out, _ = run(capsys, "sweep", cfg, "--seed", "9")
    header = [ln[2:] for ln in out.splitlines() if ln.startswith("# ")]
    assert header[0] == f"aidecoh {__version__}"
    assert header[1] == "command: sweep"
    echoed = parse_config("\n".join(header[2:]))
    assert echoed.oracle.seed == 9
    assert echoed.to_text() == parse_config(open(cfg).read()).with_overrides(seed=9).to_text()


def test_output_is_independent_of_threads(tmp_path, capsys):
    out = tmp_path / "o.csv"
    cfg = write(tmp_path, DIMLESS + "[bath]\nn0 = 0.5\nr_max = 4\n[oracle]\nn_samples = 300\n"
                "[sweep]\naxis = z0\nstart = 0\nstop = 1\ncount = 20\n")
    blobs = []
    for threads in ("1", "4"):
        code, _, _ = run(capsys, "sweep", cfg, "--threads", threads, "--output", str(out))
        assert code == 0
        blobs.append(out.read_bytes())
        code, _, _ = run(capsys, "dump-bath", cfg, "--threads", threads, "--output", str(out),
                         "--samples", "3")
        assert code == 0
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[2] and blobs[1] == blobs[3]


def test_tsv_output(tmp_path, capsys):
    cfg = write(tmp_path, DIMLESS + "[sweep]\naxis = tau\nstart = 1\n[output]\nformat = tsv\n")
    _, out, _ = run(capsys, "sweep", cfg)
    cols = [ln for ln in out.splitlines() if not ln.startswith("#")][0]
    assert cols.split("\t")[:2] == ["value", "rho_theta0_0"]


def test_strict_regime_records_row_errors(tmp_path, capsys):
    cfg = write(tmp_path, DIMLESS + "[bath]\nn0 = 1\n[sweep]\naxis = tau\nstart = 1\n")
    code, out, _ = run(capsys, "sweep", cfg)
    row = read_table(out)[0]
    assert code == 0 and row["error"] == "" and "xi2tau4" in row["flags"]
    code, out, _ = run(capsys, "sweep", cfg, "--strict-regime")
    row = read_table(out)[0]
    assert code == 0 and "RegimeError" in row["error"]


def test_config_errors_exit_two(tmp_path, capsys):
    code, _, err = run(capsys, "sweep", write(tmp_path, "[experiment]\ntau = -1\n"))
    assert code == 2 and "line 2" in err and "experiment.tau" in err
    code, _, _ = run(capsys, "sweep", str(tmp_path / "missing.cfg"))
    assert code == 2
    code, _, _ = run(capsys, "sweep", write(tmp_path, DIMLESS))
    assert code == 2
    code, _, _ = run(capsys, "flyby", write(tmp_path, DIMLESS))
    assert code == 2


@pytest.mark.filterwarnings("ignore::aidecoh.regime.RegimeWarning")
def test_runtime_error_exits_three(tmp_path, capsys):
    # the particle runs straight through the laser: the integrator precondition fails
    cfg = write(tmp_path, DIMLESS + "[flyby]\nr_b = -1, 0, 0\nv_b = 1, 0, 0\nm_b = 1\n")
    code, _, err = run(capsys, "flyby", cfg, "--oracle")
    assert code == 3 and err.startswith("error:")


def test_validate_pass_and_fail(tmp_path, capsys):
    base = (DIMLESS + "[experiment]\nm_a = 100\nz0 = 0.2\nsigma = 0.0707\n"
            "[bath]\nm_b = 0.02\nn0 = 25\nr_max = 4\n[oracle]\nn_samples = 2000\n")
    code, out, err = run(capsys, "validate", write(tmp_path, base))
    assert code == 0
    assert all(ln.startswith("PASS") for ln in err.splitlines())
    rows = read_table(out)
    assert {r["check"] for r in rows} >= {"hess_variance_zz", "hess_variance_zy",
                                           "hess_trace_residual"}
    # a coarse trajectory step fails the step-halving test, so the check fails
    bad = base.replace("n_samples = 2000", "n_samples = 200\nstep = 0.5") + (
        "[flyby]\nr_b = -0.3, 0, -0.5\nv_b = 0.3, 0, 0\nm_b = 1\n")
    code, out, err = run(capsys, "validate", write(tmp_path, bad))
    assert code == 1
    assert any(ln.startswith("FAIL impulsive_vs_trajectory_phase") for ln in err.splitlines())


def test_flyby_command_with_trajectory(tmp_path, capsys):
    cfg = write(tmp_path, DIMLESS + "[experiment]\nm_a = 1000\nz0 = 0.3\n[flyby]\n"
                "r_b = -1800, 1.2, -1.6\nv_b = 1800, 0, 0\nm_b = 1\n[oracle]\nstep = 1e-5\n")
    traj = tmp_path / "t.csv"
    code, out, _ = run(capsys, "flyby", cfg, "--trajectory", str(traj), "--records", "20")
    assert code == 0
    row = read_table(out)[0]
    assert float(row["trajectory_phase"]) == pytest.approx(float(row["phase"]), rel=0.01)
    assert len(traj.read_text().splitlines()) == 21


def test_cosmic_command(tmp_path, capsys):
    cfg = write(tmp_path, "[cosmic]\nb = 1\n")
    code, out, _ = run(capsys, "cosmic", cfg, "--b-max", "1e-7")
    assert code == 0
    row = read_table(out)[0]
    assert float(row["stark_kick"]) == pytest.approx(2.67e-40, rel=0.01)
    assert float(row["waiting_time"]) / (365.25 * 86400) == pytest.approx(3.36, rel=0.01)
    assert float(row["crossover_radius"]) == math.inf


def test_dump_bath_columns(tmp_path, capsys):
    cfg = write(tmp_path, DIMLESS + "[bath]\nn0 = 0.05\nr_max = 3\n")
    code, out, _ = run(capsys, "dump-bath", cfg, "--samples", "2")
    assert code == 0
    rows = read_table(out)
    assert list(rows[0].keys()) == ["seed", "index", "x", "y", "z", "vx", "vy", "vz", "sector"]
    assert {r["index"] for r in rows} <= {"0", "1"}
    code, _, _ = run(capsys, "dump-bath", cfg, "--samples", "0")
    assert code == 2
