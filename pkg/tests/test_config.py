import math

import pytest

from aidecoh.config import ConfigError, SweepSpec, load_config, parse_config
from aidecoh.units import RB87_MASS, SI

MINIMAL = """
[experiment]
tau = 1
"""

DIMLESS = """
[constants]
preset = dimensionless

[bath]
n0 = 0.01
"""


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    e, b, c = cfg.experiment, cfg.bath, cfg.constants
    assert c.name == "si" and c.G == SI.G
    assert e.m_a == RB87_MASS
    assert e.k == pytest.approx(2 * math.pi / 780e-9)
    assert (e.tau, e.z0, e.sigma, e.theta0, e.Q, e.N_atoms) == (1.0, 1.0, 1e-4, 0.0, 1, 1)
    assert b.m_b == SI.m_planck
    assert b.n0 * b.m_b == pytest.approx(5e-22)
    assert (b.r_min, b.r_max, b.v_beta) == (1.0, 20.0, 0.0)
    assert cfg.bias is None and cfg.flyby is None and cfg.sweep is None and cfg.cosmic is None
    assert (cfg.oracle.n_samples, cfg.oracle.seed) == (10000, 0)
    assert cfg.oracle.step == pytest.approx(1e-5)
    assert (cfg.output.path, cfg.output.format, cfg.output.delimiter) == ("-", "csv", ",")


def test_empty_text_is_valid():
    assert parse_config("").experiment.tau == 1.0


def test_dimensionless_preset_defaults():
    cfg = parse_config(DIMLESS)
    e = cfg.experiment
    assert cfg.constants.G == 1.0 and cfg.constants.hbar == 1.0
    assert (e.m_a, e.k, e.z0, e.sigma) == (1.0, 1.0, 0.0, 1.0)
    assert cfg.bath.n0 == 0.01


def test_negative_tau_names_field_and_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("# comment\n[experiment]\ntau = -1\n")
    assert exc.value.line == 3
    assert exc.value.field == "experiment.tau"
    assert "line 3" in str(exc.value) and "experiment.tau" in str(exc.value)


@pytest.mark.parametrize("text,line,fragment", [
    ("[experiment]\nfoo = 1\n", 2, "unknown key"),
    ("[nope]\n", 1, "unknown section"),
    ("tau = 1\n", 1, "outside"),
    ("[experiment]\ntau = 1\ntau = 2\n", 3, "duplicate key"),
    ("[experiment]\n[experiment]\n", 2, "duplicate section"),
    ("[experiment]\ntau = abc\n", 2, "number"),
    ("[experiment]\ntau = inf\n", 2, "number"),
    ("[experiment]\ntau = nan\n", 2, "number"),
    ("[experiment]\nQ = 2.5\n", 2, "integer"),
    ("[experiment]\ntau\n", 2, "cannot parse"),
    ("[experiment]\ntau =\n", 2, "missing value"),
    ("[flyby]\nr_b = 1, 2\n", 2, "three"),
])
def test_grammar_errors_report_lines(text, line, fragment):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.line == line
    assert fragment in str(exc.value)


def test_cross_field_rules():
    with pytest.raises(ConfigError, match="not both"):
        parse_config("[bath]\nv_beta = 1\nT = 3\n")
    with pytest.raises(ConfigError, match="R_prime"):
        parse_config("[bath]\nr_min = 2\n[bias]\nn_asym = 1\nR_prime = 1\n")
    with pytest.raises(ConfigError, match="flyby"):
        parse_config("[flyby]\nm_b = 1\n")
    with pytest.raises(ConfigError, match="bias"):
        parse_config("[sweep]\naxis = tau\nstart = 1\nmodel = bias\n")
    with pytest.raises(ConfigError, match="cosmic"):
        parse_config("[sweep]\naxis = E_applied\nstart = 1\nmodel = stark\n")
    with pytest.raises(ConfigError, match="d_over_b"):
        parse_config("[sweep]\naxis = d_over_b\nstart = 1\nmodel = exact\n")


def test_temperature_sets_thermal_speed():
    cfg = parse_config("[constants]\npreset = dimensionless\n[bath]\nm_b = 4\nT = 9\n")
    assert cfg.bath.v_beta == pytest.approx(1.5)


def test_comments_whitespace_and_vectors():
    cfg = parse_config("""
        [constants]   # trailing comment
        preset = dimensionless
        [flyby]
        r_b = -1e2, 0 ,  .5
        v_b = 2.5E+1,0,0
        m_b = 1
    """)
    assert list(cfg.flyby.r_b) == [-100.0, 0.0, 0.5]
    assert list(cfg.flyby.v_b) == [25.0, 0.0, 0.0]


def test_log_sweep_points():
    cfg = parse_config("[sweep]\naxis = tau\nstart = 0.1\nstop = 10\ncount = 10\nscale = log\n")
    pts = cfg.sweep.points()
    assert len(pts) == 10
    assert pts[0] == pytest.approx(0.1) and pts[-1] == pytest.approx(10.0)
    ratios = [b / a for a, b in zip(pts, pts[1:])]
    assert max(ratios) == pytest.approx(min(ratios), rel=1e-12)


def test_sweep_spec_validation():
    assert SweepSpec("tau", 1.0, 3.0, count=3).points() == [1.0, 2.0, 3.0]
    assert SweepSpec("tau", 2.0, 2.0).points() == [2.0]
    for kw in (dict(axis="bogus"), dict(count=0), dict(scale="cubic"), dict(model="nope"),
               dict(scale="log", start=-1.0)):
        base = dict(axis="tau", start=1.0, stop=2.0)
        base.update(kw)
        with pytest.raises(ValueError):
            SweepSpec(**base)


def test_to_text_round_trip():
    text = """
    [constants]
    preset = dimensionless
    [experiment]
    tau = 2
    z0 = 0.3
    Q = 4
    [bath]
    n0 = 0.5
    v_beta = 0.01
    [bias]
    n_asym = 0.1
    R_prime = 100
    [cosmic]
    b = 2
    [flyby]
    r_b = -3, 0, 1
    v_b = 1, 0, 0
    m_b = 0.5
    [sweep]
    axis = z0
    start = 0
    stop = 1
    count = 5
    model = bias
    [oracle]
    n_samples = 1e3
    seed = 7
    [output]
    format = tsv
    """
    cfg = parse_config(text)
    again = parse_config(cfg.to_text())
    assert again.to_text() == cfg.to_text()
    assert again.experiment == cfg.experiment and again.bath == cfg.bath
    assert again.oracle.n_samples == 1000 and again.output.delimiter == "\t"
    assert parse_config(parse_config("").to_text()).to_text() == parse_config("").to_text()


def test_overrides():
    cfg = parse_config("").with_overrides(seed=5, output="x.csv")
    assert cfg.oracle.seed == 5 and cfg.output.path == "x.csv"
    assert parse_config(cfg.to_text()).oracle.seed == 5


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(str(tmp_path / "absent.cfg"))
    p = tmp_path / "ok.cfg"
    p.write_text(MINIMAL)
    assert load_config(str(p)).experiment.tau == 1.0
