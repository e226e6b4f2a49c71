"""Parameter sweeps, oracle validation runs and delimited-text output."""
from __future__ import annotations

import csv
import io
import math
import sys
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from .bath import hess_variance, xi_squared
from .config import AXES, RunConfig
from .cosmic import stark_kick_with_bias
from .distant import (REGIME_LIMIT, averaged_overlap_approx, averaged_overlap_exact,
                      averaged_population_exact, bias_overlap, decoherence_time, phase_time,
                      gaussian_overlaps, time_dependent_contrast)
from .flyby import flyby_overlap, flyby_phase, phase_recovery_ratio
from .oracle import (HESS, HXZ, HYZ, HZZ, AccuracyError,
                     integrate_flyby_trajectories, sample_moments)
from .parallel import map_indexed
from .regime import RegimeError, RegimeWarning
from .units import effective_dipole

SWEEP_COLUMNS = ("value", "rho_theta0_0", "rho_theta0_pi", "contrast", "phase", "aux",
                 "flags", "error")
NAN = math.nan


@dataclass
class Table:
    columns: tuple
    rows: list


def _point_config(cfg: RunConfig, value: float) -> RunConfig:
    section, key = AXES[cfg.sweep.axis]
    if section == "sweep":
        return cfg
    if section == "experiment" and key in ("Q", "N_atoms"):
        value = int(round(value))
    obj = getattr(cfg, section)
    return replace(cfg, **{section: replace(obj, **{key: value})})


def _flags(cfg: RunConfig, model: str) -> list[str]:
    """Regime flags for one sweep point, computed without side effects."""
    flags = []
    e, b, c = cfg.experiment, cfg.bath, cfg.constants
    if model in ("exact", "approx", "time_dependent", "bias"):
        xt = xi_squared(b, c) * e.tau ** 4
        if xt > REGIME_LIMIT:
            flags.append("xi2tau4")
        if e.k ** 2 * e.sigma ** 2 * xt > REGIME_LIMIT:
            flags.append("k2sigma2xi2tau4")
        if 0 < b.occupancy < 10.0:
            flags.append("low_occupancy")
        if model == "time_dependent" and b.v_beta * e.tau / b.r_min > REGIME_LIMIT:
            flags.append("vtau_over_rmin")
    if model == "flyby":
        d = effective_dipole(e, c)
        fb = cfg.flyby
        t = -float((fb.r_b - d * np.array([0, 0, 1.0])) @ fb.v_b) / float(fb.v_b @ fb.v_b)
        bmin = float(np.linalg.norm(fb.r_b + fb.v_b * t - d * np.array([0, 0, 1.0])))
        sep = c.hbar * e.k * e.tau / e.m_a
        if bmin > 0 and sep / bmin > 1e-2:
            flags.append("flyby_close")
    return flags


def _evaluate(cfg: RunConfig, model: str, value: float, strict: bool) -> tuple:
    """(rho(0), rho(pi), contrast, phase, aux) for one point."""
    e, b, c = cfg.experiment, cfg.bath, cfg.constants
    X = None
    aux = NAN
    if model == "exact":
        X = averaged_overlap_exact(b, e, c, strict)
        aux = decoherence_time(b, e, c)
    elif model == "approx":
        X = averaged_overlap_approx(b, e, c, strict)
        aux = decoherence_time(b, e, c)
    elif model == "time_dependent":
        X = complex(time_dependent_contrast(b, e, c, strict))
    elif model == "bias":
        X = bias_overlap(b, cfg.bias, e, c, strict)
        aux = phase_time(b, cfg.bias, e, c)
    elif model == "flyby":
        X = flyby_overlap(cfg.flyby, e, c, strict).value
        aux = flyby_phase(cfg.flyby, e, c)
    elif model == "phase_recovery":
        s = cfg.sweep
        aux = phase_recovery_ratio(s.b, value * s.b, s.geometry, e, c)
    elif model == "stark":
        aux = stark_kick_with_bias(cfg.cosmic, c)
    if X is None:
        return NAN, NAN, NAN, NAN, aux
    X = complex(X)
    return 0.5 + 0.5 * X.real, 0.5 - 0.5 * X.real, abs(X), math.atan2(X.imag, X.real), aux


def _row(cfg: RunConfig, value: float, strict: bool) -> list:
    model = cfg.sweep.model
    try:
        point = _point_config(cfg, value)
    except (TypeError, ValueError) as exc:
        return [value, NAN, NAN, NAN, NAN, NAN, "", f"invalid point: {exc}"]
    flags = ";".join(_flags(point, model))
    try:
        vals = _evaluate(point, model, value, strict)
    except (ArithmeticError, ValueError) as exc:
        return [value, NAN, NAN, NAN, NAN, NAN, flags, f"{type(exc).__name__}: {exc}"]
    return [value, *vals, flags, ""]


def run_sweep(cfg: RunConfig, workers: int | None = None, strict: bool = False) -> Table:
    """One row per sweep point in sweep order; evaluator errors land in the error column."""
    if cfg.sweep is None:
        raise ValueError("configuration has no [sweep] section")
    points = cfg.sweep.points()

    def work(a, b):
        rows = np.empty((b - a, len(SWEEP_COLUMNS)), dtype=object)
        for i in range(a, b):
            rows[i - a] = _row(cfg, points[i], strict)
        return rows

    # flags are computed explicitly, so the warnings themselves are noise here
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RegimeWarning)
        rows = map_indexed(work, len(points), workers, chunk=8)
    return Table(SWEEP_COLUMNS, [list(r) for r in rows])


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    expected: float
    tolerance: float
    passed: bool


@dataclass
class ValidationReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return [f"{'PASS' if c.passed else 'FAIL'} {c.name}: measured={c.measured!r} "
                f"expected={c.expected!r} tolerance={c.tolerance!r}" for c in self.checks]

    def table(self) -> Table:
        return Table(("check", "measured", "expected", "tolerance", "status"),
                     [[c.name, c.measured, c.expected, c.tolerance, "pass" if c.passed else "fail"]
                      for c in self.checks])


def _variance_ratio_check(name, x, expected, base_tol):
    """Sampled variance over expected, with the tolerance widened to 3 standard errors."""
    n = x.size
    dev2 = (x - x.mean()) ** 2
    var = float(dev2.mean() * n / (n - 1))
    se = float(dev2.std(ddof=1) / math.sqrt(n)) / expected
    tol = max(base_tol, 3.0 * se)
    ratio = var / expected
    return Check(name, ratio, 1.0, tol, abs(ratio - 1.0) <= tol)


def run_validation(cfg: RunConfig, workers: int | None = None) -> ValidationReport:
    """Run the oracle checks that the configuration supports."""
    checks = []
    o, e, b, c = cfg.oracle, cfg.experiment, cfg.bath, cfg.constants
    if b.n0 > 0:
        cold = replace(b, v_beta=0.0)
        mom = sample_moments(cold, e.tau, o.n_samples, o.seed, "distant", workers)
        G = c.G
        checks.append(_variance_ratio_check("hess_variance_zz", G * mom[:, HZZ],
                                            hess_variance(b, c, "z", "z"), 0.02))
        checks.append(_variance_ratio_check("hess_variance_zy", G * mom[:, HYZ],
                                            hess_variance(b, c, "z", "y"), 0.02))
        h = mom[:, HESS]
        # Frobenius norm of the symmetric matrix from its six independent entries
        norm = np.sqrt((h[:, :3] ** 2).sum(axis=1) + 2.0 * (h[:, 3:] ** 2).sum(axis=1))
        resid = np.abs(h[:, :3].sum(axis=1)) / np.where(norm > 0, norm, 1.0)
        worst = float(resid.max())
        checks.append(Check("hess_trace_residual", worst, 0.0, 1e-10, worst <= 1e-10))
        if o.n_samples >= 2:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RegimeWarning)
                hh = mom[:, HXZ] ** 2 + mom[:, HYZ] ** 2 + mom[:, HZZ] ** 2
                ov = gaussian_overlaps(e, mom[:, HZZ], hh, c)
                for theta0 in (0.0, math.pi / 2):
                    rho = 0.5 + 0.5 * (np.exp(1j * theta0) * ov).real
                    mean = float(rho.mean())
                    se = float(rho.std(ddof=1) / math.sqrt(rho.size))
                    try:
                        ref = averaged_population_exact(b, e, theta0, c)
                    except RegimeError:
                        ref = NAN
                    tol = 3.0 * se
                    checks.append(Check(f"ensemble_population_theta0={theta0:.6g}", mean, ref,
                                        tol, abs(mean - ref) <= tol))
    if cfg.flyby is not None:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RegimeWarning)
                ref = flyby_phase(cfg.flyby, e, c)
            traj = integrate_flyby_trajectories(cfg.flyby, e, c, cfg.trajectory_step)
            rel = abs(traj.phase - ref) / abs(ref) if ref != 0 else abs(traj.phase)
            checks.append(Check("impulsive_vs_trajectory_phase", traj.phase, ref, 0.01, rel <= 0.01))
        except AccuracyError:
            checks.append(Check("impulsive_vs_trajectory_phase", NAN, NAN, 0.01, False))
    return ValidationReport(checks)


# ---------------------------------------------------------------------------
# output


def _cell(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def header_lines(cfg: RunConfig, command: str) -> list[str]:
    lines = [f"aidecoh {__version__}", f"command: {command}"]
    lines += cfg.to_text().splitlines()
    return ["# " + ln for ln in lines]


def write_table(table: Table, cfg: RunConfig, command: str, path: str | None = None,
                delimiter: str | None = None):
    """Header block, column row and data rows; ``path`` "-" writes to stdout."""
    path = cfg.output.path if path is None else path
    delimiter = cfg.output.delimiter if delimiter is None else delimiter
    buf = io.StringIO()
    for ln in header_lines(cfg, command):
        buf.write(ln + "\n")
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_cell(x) for x in row])
    text = buf.getvalue()
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)
    return text
