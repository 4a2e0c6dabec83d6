"""Flat key-value experiment configuration.

Grammar, one entry per line::

    # comment (also allowed after a value)
    section.key = value
    key = value          # bare key, allowed when the key name is unique

Bare keys never refer to the ``sweep`` section.

Lists are comma separated (``sweep.chi = 3, 5, 10``). Sections are
``run``, ``model``, ``dimensional``, ``grid``, ``time``, ``ic``,
``analysis``, ``sweep`` and ``eigenmap``. Every key not given takes a
default; each value remembers whether it came from the user, a default,
or was derived (the dimensional block derives ``model.D`` and
``model.chi``).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from .model import Case, DimensionalParams, ModelParams, SwitchingSpec, Variant, nondimensionalize


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is the 1-based source line when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line else message)


class Mode(str, enum.Enum):
    STABILITY = "Stability"
    SIM1D = "Sim1D"
    SIM2D = "Sim2D"
    RADIAL = "Radial"
    SWEEP = "Sweep"
    EIGENMAP = "EigenMap"


class Provenance(str, enum.Enum):
    DEFAULT = "default"
    USER = "user"
    DERIVED = "derived"


@dataclass(frozen=True)
class KeySpec:
    kind: str  # float, int, str, bool, floats, strs, mode, case, variant, choice
    default: Any = None
    check: Callable[[Any], bool] | None = None
    rule: str = ""
    choices: tuple[str, ...] = ()


def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _unit(x):
    return 0 < x < 1


SCHEMA: dict[str, dict[str, KeySpec]] = {
    "run": {
        "id": KeySpec("str", "run"),
        "mode": KeySpec("mode", None),
        "output_dir": KeySpec("str", "output"),
        "seed": KeySpec("int", 0, lambda x: 0 <= x < 2**64, "a 64-bit unsigned integer"),
        "workers": KeySpec("int", 1, _pos, "positive"),
    },
    "model": {
        "variant": KeySpec("variant", Variant.TWO_PHENOTYPE),
        "case": KeySpec("case", Case.A),
        "D": KeySpec("float", 1.0, _pos, "positive"),
        "chi": KeySpec("float", 10.0, _nonneg, "non-negative"),
        "mu": KeySpec("float", 1.0, _pos, "positive"),
        "q": KeySpec("float", 1.0, _pos, "positive"),
        "nbar_ref": KeySpec("float", 0.5, _unit, "in (0, 1)"),
    },
    "dimensional": {
        name: KeySpec("float", None, _pos, "positive")
        for name in ("D_n", "D_s", "chi_1", "alpha_0", "eta", "sigma")
    },
    "grid": {
        "L": KeySpec("float", 40.0, _pos, "positive"),
        "dx": KeySpec("float", None, _pos, "positive"),
        "L_r": KeySpec("float", 10.0, _pos, "positive"),
        "dr": KeySpec("float", 5e-3, _pos, "positive"),
    },
    "time": {
        "t_end": KeySpec("float", None, _pos, "positive"),
        "dt_init": KeySpec("float", 1e-4, _pos, "positive"),
        "dt_min": KeySpec("float", 1e-12, _pos, "positive"),
        "dt_max": KeySpec("float", 0.5, _pos, "positive"),
        "rel_tol": KeySpec("float", 1e-6, lambda x: 0 < x <= 1e-2, "in (0, 1e-2]"),
        "abs_tol": KeySpec("float", 1e-9, lambda x: 0 < x <= 1e-2, "in (0, 1e-2]"),
        "snapshot_every": KeySpec("float", 10.0, _pos, "positive"),
        "probe_every": KeySpec("float", None, _pos, "positive"),
        "tau": KeySpec("float", 1e-3, _pos, "positive"),
        "method": KeySpec("choice", None, choices=("bs23", "rkc")),
        "snapshot_times": KeySpec("floats", (100.0, 200.0, 300.0, 400.0, 490.0),
                                  lambda xs: all(x > 0 for x in xs), "positive times"),
    },
    "ic": {
        "nbar": KeySpec("float", 0.5, _unit, "in (0, 1)"),
        "amplitude": KeySpec("float", 0.01, _nonneg, "non-negative"),
        "A_focus": KeySpec("float", 1e4, _pos, "positive"),
        "sampling": KeySpec("choice", "cell_average", choices=("cell_average", "point")),
    },
    "analysis": {
        "pattern_threshold": KeySpec("float", 1e-3, _pos, "positive"),
        "peak_threshold_ratio": KeySpec("float", 1.05, _pos, "positive"),
        "extinction_threshold": KeySpec("float", 1e-2, _pos, "positive"),
        "oscillation_t0": KeySpec("float", None, _nonneg, "non-negative"),
        "oscillation_t1": KeySpec("float", None, _pos, "positive"),
        "oscillation_field": KeySpec("choice", "n1", choices=("n0", "n1", "s")),
        "blowup_threshold": KeySpec("float", 1e6, _pos, "positive"),
        "converge_window": KeySpec("float", 100.0, _pos, "positive"),
        "converge_tol": KeySpec("float", 1e-6, _pos, "positive"),
    },
    "sweep": {
        "mode": KeySpec("choice", "Sim1D", choices=("Sim1D", "Sim2D", "Radial", "Stability")),
        "combine": KeySpec("choice", "grid", choices=("grid", "zip")),
        "case": KeySpec("strs", ()),
        "chi": KeySpec("floats", (), lambda xs: all(x >= 0 for x in xs), "non-negative values"),
        "mu": KeySpec("floats", (), lambda xs: all(x > 0 for x in xs), "positive values"),
        "q": KeySpec("floats", (), lambda xs: all(x > 0 for x in xs), "positive values"),
        "D": KeySpec("floats", (), lambda xs: all(x > 0 for x in xs), "positive values"),
        "seed": KeySpec("floats", (), lambda xs: all(x >= 0 and x == int(x) for x in xs), "integers"),
    },
    "eigenmap": {
        "chi_min": KeySpec("float", 1.0, _nonneg, "non-negative"),
        "chi_max": KeySpec("float", 20.0, _pos, "positive"),
        "chi_n": KeySpec("int", 39, lambda x: x >= 1, "at least 1"),
        "mu_min": KeySpec("float", 0.01, _pos, "positive"),
        "mu_max": KeySpec("float", 10.0, _pos, "positive"),
        "mu_n": KeySpec("int", 31, lambda x: x >= 1, "at least 1"),
        "mu_scale": KeySpec("choice", "log", choices=("log", "linear")),
    },
}

SWEEP_KEYS = ("case", "chi", "mu", "q", "D", "seed")

# defaults that depend on the mode
MODE_DEFAULTS: dict[Mode, dict[str, Any]] = {
    Mode.SIM1D: {"grid.dx": 0.1, "time.t_end": 500.0, "time.probe_every": 0.1, "time.method": "bs23"},
    Mode.SIM2D: {"grid.dx": 0.5, "time.t_end": 500.0, "time.probe_every": 0.1, "time.method": "bs23"},
    Mode.RADIAL: {"grid.dx": 0.1, "time.t_end": 1e4, "time.probe_every": 1.0, "time.method": "rkc"},
    Mode.STABILITY: {"grid.dx": 0.1, "time.t_end": 500.0, "time.probe_every": 0.1, "time.method": "bs23"},
    Mode.EIGENMAP: {"grid.dx": 0.1, "time.t_end": 500.0, "time.probe_every": 0.1, "time.method": "bs23"},
}


def _bare_index() -> dict[str, list[str]]:
    # sweep lists shadow model/run keys, so they always need their prefix
    index: dict[str, list[str]] = {}
    for section, keys in SCHEMA.items():
        if section == "sweep":
            continue
        for key in keys:
            index.setdefault(key, []).append(section)
    return index


_BARE = _bare_index()


def _parse_bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _parse_float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"expected a finite number, got {text!r}")
    return value


def _parse_int(text: str) -> int:
    value = float(text) if any(c in text for c in ".eE") else int(text)
    if isinstance(value, float):
        if value != int(value):
            raise ValueError(f"expected an integer, got {text!r}")
        value = int(value)
    return value


def _convert(spec: KeySpec, text: str) -> Any:
    kind = spec.kind
    if kind == "float":
        return _parse_float(text)
    if kind == "int":
        return _parse_int(text)
    if kind == "str":
        if not text:
            raise ValueError("empty value")
        return text
    if kind == "bool":
        return _parse_bool(text)
    if kind == "floats":
        return tuple(_parse_float(part.strip()) for part in text.split(",") if part.strip())
    if kind == "strs":
        return tuple(part.strip() for part in text.split(",") if part.strip())
    if kind == "mode":
        for member in Mode:
            if member.value.lower() == text.lower():
                return member
        raise ValueError(f"unknown mode {text!r}; expected one of {', '.join(m.value for m in Mode)}")
    if kind == "case":
        return Case.parse(text)
    if kind == "variant":
        return Variant.parse(text)
    if kind == "choice":
        for choice in spec.choices:
            if choice.lower() == text.lower():
                return choice
        raise ValueError(f"expected one of {', '.join(spec.choices)}, got {text!r}")
    raise AssertionError(kind)


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    return str(value)


def split_kv_lines(text: str):
    """Yield ``(line_number, key, value)`` for every non-blank, non-comment line."""
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", number)
        key, value = line.split("=", 1)
        key, value = key.strip(), value.strip()
        if not key:
            raise ConfigError("missing key before '='", number)
        yield number, key, value


@dataclass
class ExperimentConfig:
    values: dict[str, Any] = field(default_factory=dict)
    provenance: dict[str, Provenance] = field(default_factory=dict)
    lines: dict[str, int] = field(default_factory=dict)

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @property
    def mode(self) -> Mode:
        return self.values["run.mode"]

    @property
    def run_id(self) -> str:
        return self.values["run.id"]

    @property
    def seed(self) -> int:
        return self.values["run.seed"]

    def error(self, key: str, message: str) -> ConfigError:
        return ConfigError(f"{key}: {message}", self.lines.get(key))

    def set(self, key: str, value: Any, provenance: Provenance = Provenance.USER) -> None:
        section, name = key.split(".", 1)
        spec = SCHEMA[section][name]
        if spec.check is not None and value is not None and not spec.check(value):
            raise self.error(key, f"must be {spec.rule}, got {_format(value)}")
        self.values[key] = value
        self.provenance[key] = provenance

    def switching(self) -> SwitchingSpec:
        return SwitchingSpec(self["model.case"], self["model.mu"], self["model.q"], self["model.nbar_ref"])

    def model_params(self) -> ModelParams:
        return ModelParams(self["model.D"], self["model.chi"], self.switching(), self["model.variant"])

    def dimensional(self) -> DimensionalParams | None:
        keys = [f"dimensional.{name}" for name in SCHEMA["dimensional"]]
        if all(self.values.get(k) is None for k in keys):
            return None
        return DimensionalParams(*(self.values[k] for k in keys))

    def sweep_axes(self) -> list[tuple[str, tuple]]:
        return [(name, self[f"sweep.{name}"]) for name in SWEEP_KEYS if self[f"sweep.{name}"]]

    def replace(self, **updates: Any) -> "ExperimentConfig":
        """Copy with ``section__key=value`` style updates (user provenance)."""
        new = ExperimentConfig(dict(self.values), dict(self.provenance), dict(self.lines))
        for name, value in updates.items():
            new.set(name.replace("__", "."), value)
        return new

    def emit(self, with_provenance: bool = True) -> str:
        """Canonical text form; parsing it back gives the same values."""
        out = []
        for section, keys in SCHEMA.items():
            out.append(f"# [{section}]")
            for name in keys:
                key = f"{section}.{name}"
                value = self.values.get(key)
                if value is None:
                    if with_provenance:
                        out.append(f"# {key} = (unset)")
                    continue
                line = f"{key} = {_format(value)}"
                if with_provenance:
                    line += f"  # {self.provenance.get(key, Provenance.DEFAULT).value}"
                out.append(line)
        return "\n".join(out) + "\n"


def _resolve_key(key: str, line: int) -> str:
    if "." in key:
        section, name = key.split(".", 1)
        if section not in SCHEMA:
            raise ConfigError(f"unknown section {section!r}", line)
        if name not in SCHEMA[section]:
            raise ConfigError(f"unknown key {key!r}", line)
        return key
    sections = _BARE.get(key)
    if not sections:
        raise ConfigError(f"unknown key {key!r}", line)
    if len(sections) > 1:
        options = ", ".join(f"{s}.{key}" for s in sections)
        raise ConfigError(f"ambiguous key {key!r}; write one of {options}", line)
    return f"{sections[0]}.{key}"


def parse_config(source: str | Path) -> ExperimentConfig:
    """Parse a path or a config text and fill every default."""
    if isinstance(source, Path) or ("\n" not in source and "=" not in source):
        path = Path(source)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror}") from exc
    else:
        text = source
    cfg = ExperimentConfig()
    for number, raw_key, raw_value in split_kv_lines(text):
        key = _resolve_key(raw_key, number)
        if key in cfg.lines:
            raise ConfigError(f"duplicate key {key!r} (first set on line {cfg.lines[key]})", number)
        section, name = key.split(".", 1)
        spec = SCHEMA[section][name]
        try:
            value = _convert(spec, raw_value)
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", number) from None
        cfg.lines[key] = number
        cfg.set(key, value, Provenance.USER)
    if "run.mode" not in cfg.values:
        raise ConfigError("missing required key run.mode")
    _fill_defaults(cfg)
    _validate(cfg)
    return cfg


def _fill_defaults(cfg: ExperimentConfig) -> None:
    mode = cfg.mode
    base_mode = Mode(cfg.values.get("sweep.mode", "Sim1D")) if mode is Mode.SWEEP else mode
    overrides = MODE_DEFAULTS[base_mode]
    for section, keys in SCHEMA.items():
        for name, spec in keys.items():
            key = f"{section}.{name}"
            if key in cfg.values:
                continue
            value = overrides.get(key, spec.default)
            cfg.values[key] = value
            cfg.provenance[key] = Provenance.DEFAULT
    dim = cfg.dimensional() if _dimensional_complete(cfg) else None
    if dim is not None:
        D, chi, _ = nondimensionalize(dim)
        for key, value in (("model.D", D), ("model.chi", chi)):
            if cfg.provenance[key] is Provenance.USER:
                raise cfg.error(key, "given both directly and through the dimensional block")
            cfg.values[key] = value
            cfg.provenance[key] = Provenance.DERIVED


def _dimensional_complete(cfg: ExperimentConfig) -> bool:
    keys = [f"dimensional.{name}" for name in SCHEMA["dimensional"]]
    given = [k for k in keys if cfg.values.get(k) is not None]
    if given and len(given) != len(keys):
        missing = ", ".join(k for k in keys if k not in given)
        raise cfg.error(given[0], f"dimensional block is incomplete; missing {missing}")
    return bool(given)


def _validate(cfg: ExperimentConfig) -> None:
    try:
        cfg.model_params()
    except ValueError as exc:
        raise cfg.error("model.case", str(exc)) from None
    if not cfg["time.dt_min"] <= cfg["time.dt_init"] <= cfg["time.dt_max"]:
        raise cfg.error("time.dt_init", "need dt_min <= dt_init <= dt_max")
    if cfg["eigenmap.chi_min"] > cfg["eigenmap.chi_max"]:
        raise cfg.error("eigenmap.chi_min", "chi_min exceeds chi_max")
    if cfg["eigenmap.mu_min"] > cfg["eigenmap.mu_max"]:
        raise cfg.error("eigenmap.mu_min", "mu_min exceeds mu_max")
    t0, t1 = cfg["analysis.oscillation_t0"], cfg["analysis.oscillation_t1"]
    if (t0 is None) != (t1 is None):
        raise cfg.error("analysis.oscillation_t0", "give both oscillation_t0 and oscillation_t1, or neither")
    if t0 is not None and t1 - t0 < 50:
        raise cfg.error("analysis.oscillation_t0", "the oscillation window must span at least 50 time units")
    for name in cfg["sweep.case"]:
        try:
            Case.parse(name)
        except ValueError as exc:
            raise cfg.error("sweep.case", str(exc)) from None
    if cfg.mode is Mode.SWEEP:
        axes = cfg.sweep_axes()
        if not axes:
            raise cfg.error("run.mode", "Sweep mode needs at least one sweep.<key> list")
        if cfg["sweep.combine"] == "zip" and len({len(v) for _, v in axes}) > 1:
            raise cfg.error("sweep.combine", "zip needs all sweep lists to have the same length")
    if cfg.mode is Mode.SIM2D or (cfg.mode is Mode.SWEEP and cfg["sweep.mode"] == "Sim2D"):
        if cfg["model.variant"] is Variant.MINIMAL_KS:
            raise cfg.error("model.variant", "the 2D scheme supports the two-phenotype model only")
