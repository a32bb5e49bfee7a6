"""Scenario configuration: defaults, validation and the flat key-value file format.

Config files are plain text, one ``section.key = value`` pair per line.
Blank lines and anything after ``#`` are ignored.  Keys are the dotted
names listed in :data:`CONFIG_KEYS`; unknown keys are rejected.  Values
parse according to the field type (``inf`` is accepted for floats).

Example::

    # denser IRS, stronger direct-link LoS
    array.num_irs_elements = 64
    channel.kappa_direct = 20
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

SPEED_OF_LIGHT = 299_792_458.0


class ConfigError(ValueError):
    """Invalid configuration key, type or value; ``field`` names the offending field if known."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


def _f(section, **kw):
    return field(metadata={"section": section}, **kw)


@dataclass(frozen=True)
class ScenarioConfig:
    """Every tunable of the simulated network.

    The defaults describe the reference scenario (radii 200 m, L=8, M=2,
    Q=8, N=32, K in [1, 5], rho=0.2, 31 GHz, alpha=3.5, 10 W at both
    transmitters, eps=1e-3, balance 0.5).  Noise powers were calibrated
    separately; see the README.
    """

    bs_radius: float = _f("geometry", default=200.0)
    radar_radius: float = _f("geometry", default=200.0)
    min_separation: float = _f("geometry", default=10.0)
    irs_spacing: float = _f("geometry", default=0.25)

    num_bs_antennas: int = _f("array", default=8)
    num_ue_antennas: int = _f("array", default=2)
    num_radar_antennas: int = _f("array", default=8)
    num_irs_elements: int = _f("array", default=32)

    points_min: int = _f("target", default=1)
    points_max: int = _f("target", default=5)
    reflection_coeff: float = _f("target", default=0.2)

    carrier_freq: float = _f("channel", default=31e9)
    pathloss_exponent: float = _f("channel", default=3.5)
    kappa_direct: float = _f("channel", default=10.0)
    kappa_irs: float = _f("channel", default=math.inf)
    kappa_target: float = _f("channel", default=math.inf)
    pathloss_convention: str = _f("channel", default="amplitude")

    bs_power: float = _f("power", default=10.0)
    radar_power: float = _f("power", default=10.0)
    ue_noise: float = _f("noise", default=1e-27)
    radar_noise: float = _f("noise", default=1e-27)

    convergence_tol: float = _f("optimizer", default=1e-3)
    balance: float = _f("optimizer", default=0.5)
    max_iterations: int = _f("optimizer", default=100)
    eta_smoothing: float = _f("optimizer", default=0.0)

    trials: int = _f("experiment", default=500)

    def __post_init__(self):
        validate(self)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        """Dotted-key mapping; inverse of :func:`config_from_dict`."""
        return {_DOTTED[f.name]: getattr(self, f.name) for f in dataclasses.fields(self)}

    def to_text(self) -> str:
        """Every key in the config-file format; floats use ``repr`` so they round-trip."""
        return "".join(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n"
                       for k, v in self.to_dict().items())


CONFIG_KEYS: dict[str, str] = {
    f"{f.metadata['section']}.{f.name}": f.name for f in dataclasses.fields(ScenarioConfig)
}
_DOTTED = {v: k for k, v in CONFIG_KEYS.items()}
_TYPES = {f.name: f.type for f in dataclasses.fields(ScenarioConfig)}


def _require(cond, name, msg):
    if not cond:
        raise ConfigError(f"{_DOTTED.get(name, name)}: {msg}", name)


def validate(cfg: ScenarioConfig) -> None:
    """Raise :class:`ConfigError` naming the first offending key."""
    for name in ("num_bs_antennas", "num_ue_antennas", "num_radar_antennas", "num_irs_elements"):
        _require(getattr(cfg, name) >= 1, name, "must be >= 1")
    _require(1 <= cfg.points_min <= cfg.points_max, "points_min", "need 1 <= points_min <= points_max")
    _require(cfg.points_max <= cfg.num_irs_elements, "points_max", "must not exceed the IRS size")
    _require(0 < cfg.reflection_coeff <= 1, "reflection_coeff", "must lie in (0, 1]")
    _require(0 < cfg.irs_spacing < 0.5, "irs_spacing", "must lie in (0, 0.5) wavelengths")
    for name in ("bs_radius", "radar_radius", "carrier_freq", "bs_power", "radar_power",
                 "ue_noise", "radar_noise", "convergence_tol"):
        v = getattr(cfg, name)
        _require(v > 0 and math.isfinite(v), name, "must be finite and > 0")
    _require(cfg.min_separation >= 0, "min_separation", "must be >= 0")
    _require(cfg.pathloss_exponent >= 0, "pathloss_exponent", "must be >= 0")
    for name in ("kappa_direct", "kappa_irs", "kappa_target"):
        _require(getattr(cfg, name) >= 0, name, "must be >= 0 (inf means pure LoS)")
    _require(cfg.pathloss_convention in ("amplitude", "sqrt_power"), "pathloss_convention",
             "must be 'amplitude' or 'sqrt_power'")
    _require(cfg.balance >= 0 and math.isfinite(cfg.balance), "balance", "must be finite and >= 0")
    _require(cfg.max_iterations >= 1, "max_iterations", "must be >= 1")
    _require(0 <= cfg.eta_smoothing < 1, "eta_smoothing", "must lie in [0, 1)")
    _require(cfg.trials >= 1, "trials", "must be >= 1")


def _coerce(name: str, raw: Any, where: str) -> Any:
    kind = _TYPES[name]
    key = _DOTTED[name]
    try:
        if kind == "int":
            if isinstance(raw, bool) or (isinstance(raw, float) and not raw.is_integer()):
                raise ValueError
            if isinstance(raw, str):
                return int(raw.strip())
            return int(raw)
        if kind == "float":
            if isinstance(raw, bool):
                raise ValueError
            return float(raw)
        if not isinstance(raw, str):
            raise ValueError
        return raw.strip()
    except ValueError:
        raise ConfigError(f"{key}: expected {kind}, got {raw!r} ({where})") from None


def _lookup(key: str, where: str) -> str:
    name = CONFIG_KEYS.get(key)
    if name is None:
        raise ConfigError(f"{key}: unknown key ({where})")
    return name


def parse_config_text(text: str, source: str = "<string>", locations=None) -> dict[str, Any]:
    """Parse the flat key-value format into ``{field_name: value}``.

    If ``locations`` is a dict it receives ``{field_name: "source:line"}``.
    """
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if "=" not in line:
            raise ConfigError(f"{line!r}: expected 'key = value' ({where})")
        key, raw = (s.strip() for s in line.split("=", 1))
        name = _lookup(key, where)
        values[name] = _coerce(name, raw, where)
        if locations is not None:
            locations[name] = where
    return values


def parse_overrides(pairs, source: str = "--set") -> dict[str, Any]:
    values = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"{pair!r}: expected KEY=VALUE ({source})")
        key, raw = (s.strip() for s in pair.split("=", 1))
        name = _lookup(key, source)
        values[name] = _coerce(name, raw, source)
    return values


def config_from_dict(data: Mapping[str, Any], source: str = "<dict>") -> ScenarioConfig:
    values = {}
    for key, raw in data.items():
        name = _lookup(key, source)
        values[name] = _coerce(name, raw, source)
    return ScenarioConfig(**values)


def resolve_config(defaults: ScenarioConfig | None = None, file: str | Path | None = None,
                   overrides: Mapping[str, Any] | None = None) -> ScenarioConfig:
    """Merge defaults < file < overrides.

    ``overrides`` maps dotted keys (or field names) to raw values.
    """
    base = defaults if defaults is not None else ScenarioConfig()
    values = {f.name: getattr(base, f.name) for f in dataclasses.fields(base)}
    origin = dict.fromkeys(values, "defaults")
    if file is not None:
        path = Path(file)
        values.update(parse_config_text(path.read_text(encoding="utf-8"), str(path), origin))
    for key, raw in (overrides or {}).items():
        name = key if key in _TYPES else _lookup(key, "override")
        values[name] = _coerce(name, raw, "override")
        origin[name] = "override"
    try:
        return ScenarioConfig(**values)
    except ConfigError as exc:
        raise ConfigError(f"{exc} ({origin.get(exc.field, 'defaults')})", exc.field) from None
