"""Run configuration: a line-oriented ``[section]`` / ``key = value`` format.

The grammar is documented in ``docs/config_grammar.md``. Parsing resolves
every default so that ``RunConfig.to_text()`` echoes a complete, explicit
configuration that parses back to the same object.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields, replace

from .bath import BathSpec
from .cosmic import CosmicRaySpec
from .distant import BiasSpec
from .flyby import FlybySpec
from .units import RB87_MASS, RB_POLARIZABILITY, ExperimentSpec, PhysicalConstants


class ConfigError(ValueError):
    """Syntax error, unknown key or invariant violation in a run configuration."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(field)
        super().__init__(f"{': '.join(where)}: {message}" if where else message)
        self.line = line
        self.field = field


MODELS = ("exact", "approx", "time_dependent", "bias", "flyby", "phase_recovery", "stark")
FORMATS = {"csv": ",", "tsv": "\t"}

# sweepable parameter identifiers -> (section, key)
AXES = {
    "tau": ("experiment", "tau"),
    "k": ("experiment", "k"),
    "z0": ("experiment", "z0"),
    "sigma": ("experiment", "sigma"),
    "theta0": ("experiment", "theta0"),
    "m_a": ("experiment", "m_a"),
    "Q": ("experiment", "Q"),
    "N_atoms": ("experiment", "N_atoms"),
    "n0": ("bath", "n0"),
    "m_b": ("bath", "m_b"),
    "v_beta": ("bath", "v_beta"),
    "r_min": ("bath", "r_min"),
    "n_asym": ("bias", "n_asym"),
    "R_prime": ("bias", "R_prime"),
    "b": ("cosmic", "b"),
    "v": ("cosmic", "v"),
    "E_applied": ("cosmic", "E_applied"),
    "d_over_b": ("sweep", "d_over_b"),
}

_CONSTANT_KEYS = ("G", "hbar", "k_B", "eps0_factor", "e_charge", "c", "m_planck")
_SECTIONS = {
    "constants": ("preset",) + _CONSTANT_KEYS,
    "experiment": ("m_a", "k", "tau", "theta0", "z0", "sigma", "Q", "N_atoms"),
    "bath": ("m_b", "n0", "v_beta", "T", "r_min", "r_max"),
    "bias": ("n_asym", "R_prime"),
    "cosmic": ("q", "v", "b", "alpha_a", "m_a", "E_applied", "n_cr"),
    "flyby": ("r_b", "v_b", "m_b"),
    "sweep": ("axis", "start", "stop", "count", "scale", "model", "geometry", "b"),
    "oracle": ("n_samples", "seed", "step"),
    "output": ("path", "format"),
}
_STRINGS = {("constants", "preset"), ("sweep", "axis"), ("sweep", "scale"), ("sweep", "model"),
            ("sweep", "geometry"), ("output", "path"), ("output", "format")}
_VECTORS = {("flyby", "r_b"), ("flyby", "v_b")}
_INTEGERS = {("experiment", "Q"), ("experiment", "N_atoms"), ("sweep", "count"),
             ("oracle", "n_samples"), ("oracle", "seed")}

_SECTION_RE = re.compile(r"^\[\s*([A-Za-z_][A-Za-z0-9_]*)\s*\]$")
_PAIR_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")
_NUMBER_RE = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")

# Mass density of the reference bath (5e-25 g/cm^3) in kg/m^3.
_REFERENCE_DENSITY = 5e-22


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    start: float
    stop: float
    count: int = 1
    scale: str = "linear"
    model: str = "exact"
    geometry: str = "below"
    b: float = 1.0

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}; expected one of {sorted(AXES)}")
        if int(self.count) != self.count or self.count < 1:
            raise ValueError(f"count must be an integer >= 1, got {self.count!r}")
        if self.scale not in ("linear", "log"):
            raise ValueError(f"scale must be 'linear' or 'log', got {self.scale!r}")
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {list(MODELS)}")
        if self.geometry not in ("below", "above"):
            raise ValueError(f"geometry must be 'below' or 'above', got {self.geometry!r}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ValueError("start and stop must be finite")
        if self.scale == "log" and not (self.start > 0 and self.stop > 0):
            raise ValueError("log sweeps need start > 0 and stop > 0")
        if not (math.isfinite(self.b) and self.b > 0):
            raise ValueError("b must be > 0")
        if (self.axis == "d_over_b") != (self.model == "phase_recovery"):
            raise ValueError("axis d_over_b goes with model phase_recovery (and only with it)")

    def points(self) -> list[float]:
        n = int(self.count)
        if n == 1:
            return [float(self.start)]
        if self.scale == "log":
            a, b = math.log(self.start), math.log(self.stop)
            return [math.exp(a + (b - a) * i / (n - 1)) for i in range(n)]
        return [self.start + (self.stop - self.start) * i / (n - 1) for i in range(n)]


@dataclass(frozen=True)
class OracleSettings:
    n_samples: int = 10_000
    seed: int = 0
    step: float | None = None  # trajectory step; None means tau * 1e-5

    def __post_init__(self):
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ValueError(f"n_samples must be an integer >= 1, got {self.n_samples!r}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be an integer >= 0, got {self.seed!r}")
        if self.step is not None and not (math.isfinite(self.step) and self.step > 0):
            raise ValueError("step must be > 0")


@dataclass(frozen=True)
class OutputSettings:
    path: str = "-"
    format: str = "csv"

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {sorted(FORMATS)}, got {self.format!r}")

    @property
    def delimiter(self) -> str:
        return FORMATS[self.format]


@dataclass(frozen=True)
class RunConfig:
    constants: PhysicalConstants
    experiment: ExperimentSpec
    bath: BathSpec
    bias: BiasSpec | None = None
    cosmic: CosmicRaySpec | None = None
    flyby: FlybySpec | None = None
    sweep: SweepSpec | None = None
    oracle: OracleSettings = OracleSettings()
    output: OutputSettings = OutputSettings()

    @property
    def trajectory_step(self) -> float:
        return self.oracle.step if self.oracle.step is not None else self.experiment.tau * 1e-5

    def with_overrides(self, seed: int | None = None, output: str | None = None) -> "RunConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, oracle=replace(cfg.oracle, seed=int(seed)))
        if output is not None:
            cfg = replace(cfg, output=replace(cfg.output, path=output))
        return cfg

    def to_text(self) -> str:
        """Fully resolved configuration in the input grammar."""
        out = []

        def section(name, pairs):
            out.append(f"[{name}]")
            for k, v in pairs:
                out.append(f"{k} = {_fmt(v)}")

        c = self.constants
        section("constants", [("preset", c.name)] + [(k, getattr(c, k)) for k in _CONSTANT_KEYS])
        e = self.experiment
        section("experiment", [(k, getattr(e, k)) for k in _SECTIONS["experiment"]])
        b = self.bath
        section("bath", [(k, getattr(b, k)) for k in ("m_b", "n0", "v_beta", "r_min", "r_max")])
        for name, obj in (("bias", self.bias), ("cosmic", self.cosmic), ("flyby", self.flyby),
                          ("sweep", self.sweep)):
            if obj is not None:
                section(name, [(f.name, getattr(obj, f.name)) for f in fields(obj)])
        section("oracle", [("n_samples", self.oracle.n_samples), ("seed", self.oracle.seed),
                           ("step", self.trajectory_step)])
        section("output", [("path", self.output.path), ("format", self.output.format)])
        return "\n".join(out) + "\n"


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    if hasattr(v, "__len__"):
        return ", ".join(repr(float(x)) for x in v)
    return repr(float(v))


def _number(text: str, line: int, field: str) -> float:
    t = text.strip()
    if not _NUMBER_RE.match(t):
        raise ConfigError(f"expected a number, got {t!r}", line, field)
    return float(t)


def _tokenize(text: str):
    """Yield {section: {key: (raw value, line)}} preserving first-seen order."""
    data: dict[str, dict[str, tuple[str, int]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION_RE.match(line)
        if m:
            name = m.group(1)
            if name not in _SECTIONS:
                raise ConfigError(f"unknown section [{name}]", lineno)
            if name in data:
                raise ConfigError(f"duplicate section [{name}]", lineno)
            data[name] = {}
            current = name
            continue
        m = _PAIR_RE.match(line)
        if not m:
            raise ConfigError(f"cannot parse {raw.strip()!r}; expected [section] or key = value",
                              lineno)
        if current is None:
            raise ConfigError("key outside of any [section]", lineno)
        key, value = m.group(1), m.group(2).strip()
        if key not in _SECTIONS[current]:
            raise ConfigError(f"unknown key {key!r} in [{current}]", lineno, f"{current}.{key}")
        if key in data[current]:
            raise ConfigError(f"duplicate key {key!r}", lineno, f"{current}.{key}")
        if value == "":
            raise ConfigError("missing value", lineno, f"{current}.{key}")
        data[current][key] = (value, lineno)
    return data


def _convert(section: str, items: dict) -> tuple[dict, dict]:
    values, lines = {}, {}
    for key, (raw, lineno) in items.items():
        field = f"{section}.{key}"
        lines[key] = lineno
        if (section, key) in _STRINGS:
            values[key] = raw
        elif (section, key) in _VECTORS:
            parts = raw.split(",")
            if len(parts) != 3:
                raise ConfigError(f"expected three comma-separated numbers, got {raw!r}",
                                  lineno, field)
            values[key] = tuple(_number(p, lineno, field) for p in parts)
        else:
            x = _number(raw, lineno, field)
            if (section, key) in _INTEGERS:
                if x != int(x):
                    raise ConfigError(f"expected an integer, got {raw!r}", lineno, field)
                x = int(x)
            values[key] = x
    return values, lines


def _build(section, cls, values, lines, first_line):
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        msg = str(exc)
        # point at the offending key when the message names it
        for key, lineno in lines.items():
            if re.search(rf"\b{re.escape(key)}\b", msg):
                raise ConfigError(msg, lineno, f"{section}.{key}") from None
        raise ConfigError(msg, first_line, section) from None


def _defaults(preset: PhysicalConstants) -> dict:
    if preset.name == "si":
        return {
            "experiment": dict(m_a=RB87_MASS, k=2.0 * math.pi / 780e-9, tau=1.0, theta0=0.0,
                               z0=1.0, sigma=1e-4, Q=1, N_atoms=1),
            "bath": dict(m_b=preset.m_planck, n0=_REFERENCE_DENSITY / preset.m_planck,
                         v_beta=0.0, r_min=1.0),
            "cosmic": dict(q=preset.e_charge, v=preset.c, b=1e-7, alpha_a=RB_POLARIZABILITY,
                           m_a=RB87_MASS, E_applied=0.0, n_cr=1e-3),
        }
    return {
        "experiment": dict(m_a=1.0, k=1.0, tau=1.0, theta0=0.0, z0=0.0, sigma=1.0, Q=1,
                           N_atoms=1),
        "bath": dict(m_b=1.0, n0=1.0, v_beta=0.0, r_min=1.0),
        "cosmic": dict(q=1.0, v=1.0, b=1.0, alpha_a=1.0, m_a=1.0, E_applied=0.0, n_cr=1.0),
    }


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration; see ``docs/config_grammar.md``."""
    data = _tokenize(text)
    conv = {name: _convert(name, items) for name, items in data.items()}

    def first(name):
        lines = conv.get(name, ({}, {}))[1]
        return min(lines.values()) if lines else None

    cvals, clines = conv.get("constants", ({}, {}))
    preset_name = cvals.pop("preset", "si")
    try:
        preset = PhysicalConstants.preset(preset_name)
    except ValueError as exc:
        raise ConfigError(str(exc), clines.get("preset"), "constants.preset") from None
    if cvals:
        overrides = {k: cvals[k] for k in _CONSTANT_KEYS if k in cvals}
        constants = _build("constants", lambda **kw: replace(preset, **kw),
                           overrides, clines, first("constants"))
    else:
        constants = preset
    defaults = _defaults(preset)

    evals, elines = conv.get("experiment", ({}, {}))
    experiment = _build("experiment", ExperimentSpec,
                        {**defaults["experiment"], **evals, "hbar": constants.hbar},
                        elines, first("experiment"))

    bvals, blines = conv.get("bath", ({}, {}))
    bvals = dict(bvals)
    if "T" in bvals:
        if "v_beta" in bvals:
            raise ConfigError("give either v_beta or T, not both", blines["T"], "bath.T")
        T = bvals.pop("T")
        if not T >= 0:
            raise ConfigError("T must be >= 0", blines["T"], "bath.T")
        m_b = bvals.get("m_b", defaults["bath"]["m_b"])
        bvals["v_beta"] = math.sqrt(constants.k_B * T / m_b) if m_b > 0 else math.nan
        blines["v_beta"] = blines["T"]
    bath = _build("bath", BathSpec, {**defaults["bath"], **bvals}, blines, first("bath"))

    bias = None
    if "bias" in conv:
        v, ln = conv["bias"]
        bias = _build("bias", BiasSpec, v, ln, first("bias"))
        if not bias.R_prime > bath.r_min:
            raise ConfigError(f"R_prime ({bias.R_prime}) must exceed r_min ({bath.r_min})",
                              ln.get("R_prime", first("bias")), "bias.R_prime")

    cosmic = None
    if "cosmic" in conv:
        v, ln = conv["cosmic"]
        cosmic = _build("cosmic", CosmicRaySpec, {**defaults["cosmic"], **v}, ln, first("cosmic"))

    flyby = None
    if "flyby" in conv:
        v, ln = conv["flyby"]
        missing = [k for k in ("r_b", "v_b", "m_b") if k not in v]
        if missing:
            raise ConfigError(f"[flyby] needs {', '.join(missing)}", first("flyby"), "flyby")
        flyby = _build("flyby", FlybySpec, v, ln, first("flyby"))

    sweep = None
    if "sweep" in conv:
        v, ln = conv["sweep"]
        missing = [k for k in ("axis", "start") if k not in v]
        if missing:
            raise ConfigError(f"[sweep] needs {', '.join(missing)}", first("sweep"), "sweep")
        v = dict(v)
        v.setdefault("stop", v["start"])
        sweep = _build("sweep", SweepSpec, v, ln, first("sweep"))
        section = AXES[sweep.axis][0]
        if section in ("bias", "cosmic") and section not in conv:
            raise ConfigError(f"sweep axis {sweep.axis!r} needs a [{section}] section",
                              ln["axis"], "sweep.axis")
        needs = {"bias": "bias", "flyby": "flyby", "stark": "cosmic"}.get(sweep.model)
        if needs and needs not in conv:
            raise ConfigError(f"model {sweep.model!r} needs a [{needs}] section",
                              ln.get("model", first("sweep")), "sweep.model")

    v, ln = conv.get("oracle", ({}, {}))
    v = {"step": experiment.tau * 1e-5, **v}
    oracle = _build("oracle", OracleSettings, v, ln, first("oracle"))
    v, ln = conv.get("output", ({}, {}))
    output = _build("output", OutputSettings, v, ln, first("output"))

    return RunConfig(constants, experiment, bath, bias, cosmic, flyby, sweep, oracle, output)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text)
