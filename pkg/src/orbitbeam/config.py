"""Experiment configuration: INI (sections + key = value) or JSON, fully resolved.

A resolved config is a plain nested dict with every value concrete. Its
canonical JSON form is what output headers carry, so any output file can be
fed back as ``--config`` to reproduce the run.
"""
from __future__ import annotations

import configparser
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .analytic import QuadratureConfig
from .errors import ConfigurationError
from .fading import SR_SCENARIOS, ShadowedRicianParams
from .geometry import SystemParams
from .link import PRECODERS

HEADER_CONFIG_PREFIX = "# config: "

# GEO downlink budget; no transmit power is published, so 10 W is an assumption.
_GEO_LINK_BUDGET = {
    "p0_watt": 10.0, "altitude_m": 35_786e3, "carrier_hz": 20e9, "bandwidth_hz": 500e6,
    "temp_k": 517.0, "boltzmann": 1.3807e-23, "g_tx_db": 52.0, "g_rx_db": 41.7,
    "light_speed": 299_792_458.0,
}

DEFAULTS = {
    "run": {"trials": 10_000, "seed": 0, "precoders": ["fixed"], "log_base": "e",
            "engine": "analytic"},
    "system": dict(_GEO_LINK_BUDGET),
    "fading": {"scenario": "average", "omega": None, "b0": None, "m": None},
    "users": {"lambda": [1e-9], "lambda_unit": "per_m2", "r1_m": 250e3,
              "c_lambda": None},
    "beams": {"mode": "single", "m_values": [16, 32, 64, 128, 256], "ell": 1.0,
              "max_index": 1, "r_cov_m": math.inf, "interferers": "all"},
    "quadrature": {"n_tau": 48, "n_phi": 32, "n_r": 24, "phi_symmetry_fold": 8},
    "scaling": {"experiments": ["theorem1", "theorem2", "theorem3", "theorem4", "lemma1",
                                "gain_window"],
                "q_values": [1.0, 1.5, 2.0], "multibeam_ell": 0.5, "multibeam_q": 2.0,
                "lemma1_m": 64, "lemma1_pairs": [[0.5, 0.3], [0.3, 0.5]],
                "lemma1_q": [1.2, 1.4, 1.6, 1.8, 2.0, 2.2], "lemma1_trials": 20_000,
                "window_p": 0.5, "window_phi": 0.7853981633974483, "window_q": 1.8},
}

# Named presets applied on top of DEFAULTS, before the user's file.
SCENARIOS = {
    "baseline": {},
    "array-sweep": {
        "users": {"lambda": [1e-9, 10 ** -11.7], "r1_m": 250e3},
        "beams": {"mode": "single", "m_values": [16, 24, 32, 48, 64, 96, 128, 192, 256]}},
    "grid-bound": {
        "users": {"lambda": [1e-10]},
        "beams": {"mode": "multibeam", "m_values": [32, 64], "ell": 1.0, "max_index": 1}},
    "precoder-sweep": {
        "users": {"lambda": [1e-11, 1e-10, 1e-9]},
        "beams": {"mode": "multibeam", "m_values": [32], "ell": 1.0, "max_index": 1},
        "run": {"precoders": ["fixed", "mrt", "zf"], "trials": 2000}},
}


def _kind(default):
    if isinstance(default, bool):
        return bool
    if isinstance(default, int):
        return int
    if isinstance(default, float):
        return float
    if isinstance(default, list):
        return list
    return str


_TYPES = {(s, k): _kind(v) for s, sec in DEFAULTS.items() for k, v in sec.items()}
_TYPES.update({("fading", "omega"): float, ("fading", "b0"): float, ("fading", "m"): float,
               ("users", "c_lambda"): float, ("beams", "max_index"): int})


def _parse_scalar(text: str):
    t = text.strip()
    low = t.lower()
    if low in ("none", "null", ""):
        return None
    if low in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        return json.loads(t)
    except json.JSONDecodeError:
        return t


def _coerce(section: str, key: str, value, where: str = ""):
    kind = _TYPES[(section, key)]
    if value is None:
        return None
    try:
        if kind is list:
            if isinstance(value, str):
                value = [_parse_scalar(v) for v in value.split(",") if v.strip()]
            elif not isinstance(value, list):
                value = [value]
            return list(value)
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if kind is float:
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{where}[{section}] {key}: cannot read {value!r} as "
                                 f"{kind.__name__}") from None


def _line_of(text: str, section: str, key: str) -> int | None:
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
        elif current == section and s.split("=", 1)[0].strip() == key:
            return i
    return None


def _merge(base: dict, over: dict, where: str = "", text: str | None = None) -> dict:
    out = {s: dict(v) for s, v in base.items()}
    for section, values in over.items():
        if section not in DEFAULTS:
            raise ConfigurationError(f"{where}unknown section [{section}]")
        if not isinstance(values, dict):
            raise ConfigurationError(f"{where}section [{section}] must be a table")
        for key, value in values.items():
            if key not in DEFAULTS[section]:
                line = _line_of(text, section, key) if text else None
                at = f"line {line}: " if line else ""
                raise ConfigurationError(f"{where}{at}unknown key '{key}' in [{section}]")
            out[section][key] = _coerce(section, key, value, where)
    return out


def _read_ini(text: str, where: str) -> dict:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"{where}{exc}") from None
    return {s: {k: _parse_scalar(v) for k, v in cp.items(s)} for s in cp.sections()}


def read_config_text(text: str, where: str = "") -> dict:
    """Parse INI, JSON, or an output file whose header carries ``# config: {...}``."""
    for line in text.splitlines():
        if line.startswith(HEADER_CONFIG_PREFIX):
            return resolve(json.loads(line[len(HEADER_CONFIG_PREFIX):]), where=where)
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{where}line {exc.lineno}: {exc.msg}") from None
        if isinstance(raw, dict) and "config_hash" in raw and "config" in raw:
            raw = raw["config"]  # a JSON output document
        return resolve(raw, where=where)
    return resolve(_read_ini(text, where), where=where, text=text)


def load_config(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {p}: {exc}") from None
    return read_config_text(text, where=f"{p}: ")


def resolve(raw: dict | None = None, where: str = "", text: str | None = None) -> dict:
    """DEFAULTS <- scenario preset <- raw, validated and made concrete."""
    raw = raw or {}
    name = (raw.get("run") or {}).get("scenario", "baseline")
    if name not in SCENARIOS:
        raise ConfigurationError(f"{where}unknown scenario {name!r}; choose from "
                                 f"{sorted(SCENARIOS)}")
    base = _merge(DEFAULTS, SCENARIOS[name])
    raw = {s: {k: v for k, v in sec.items() if not (s == "run" and k == "scenario")}
           for s, sec in raw.items()}
    cfg = _merge(base, raw, where, text)
    cfg["run"]["scenario"] = name
    _validate(cfg, where)
    return cfg


def _validate(cfg: dict, where: str) -> None:
    fad = cfg["fading"]
    explicit = [fad[k] is not None for k in ("omega", "b0", "m")]
    if any(explicit) and not all(explicit):
        raise ConfigurationError(f"{where}[fading] needs all of omega, b0, m or none")
    if all(explicit):
        preset = SR_SCENARIOS.get(fad["scenario"])
        if preset is None or (preset.omega, preset.b0, preset.m) != (
                fad["omega"], fad["b0"], fad["m"]):
            fad["scenario"] = "custom"
    elif fad["scenario"] not in SR_SCENARIOS:
        raise ConfigurationError(f"{where}[fading] scenario must be one of "
                                 f"{sorted(SR_SCENARIOS)}")
    else:
        p = SR_SCENARIOS[fad["scenario"]]
        fad.update(omega=p.omega, b0=p.b0, m=p.m)
    if cfg["users"]["lambda_unit"] != "per_m2":
        raise ConfigurationError(f"{where}[users] lambda_unit must be per_m2")
    run = cfg["run"]
    if run["log_base"] not in ("e", "2"):
        raise ConfigurationError(f"{where}[run] log_base must be e or 2")
    if run["engine"] not in ("analytic", "mc"):
        raise ConfigurationError(f"{where}[run] engine must be analytic or mc")
    bad = [p for p in run["precoders"] if p not in PRECODERS]
    if bad or not run["precoders"]:
        raise ConfigurationError(f"{where}[run] precoders must come from {PRECODERS}")
    if run["trials"] < 1:
        raise ConfigurationError(f"{where}[run] trials must be >= 1")
    if not 0 <= run["seed"] < 2**64:
        raise ConfigurationError(f"{where}[run] seed must be an unsigned 64-bit integer")
    if cfg["beams"]["mode"] not in ("single", "multibeam"):
        raise ConfigurationError(f"{where}[beams] mode must be single or multibeam")
    if cfg["beams"]["interferers"] not in ("all", "first-ring"):
        raise ConfigurationError(f"{where}[beams] interferers must be all or first-ring")
    # constructing the typed objects runs their own checks
    try:
        system_params(cfg)
        fading_params(cfg)
        quadrature(cfg)
    except ValueError as exc:
        raise ConfigurationError(f"{where}{exc}") from None


def system_params(cfg: dict) -> SystemParams:
    return SystemParams(**cfg["system"])


def fading_params(cfg: dict) -> ShadowedRicianParams:
    f = cfg["fading"]
    return ShadowedRicianParams(omega=f["omega"], b0=f["b0"], m=f["m"])


def quadrature(cfg: dict) -> QuadratureConfig:
    return QuadratureConfig(**cfg["quadrature"])


def _jsonable(obj):
    if isinstance(obj, float) and math.isinf(obj):
        return "inf" if obj > 0 else "-inf"
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_jsonable(v) for v in obj]
    return obj


def canonical_json(cfg: dict) -> str:
    return json.dumps(_jsonable(cfg), sort_keys=True, separators=(",", ":"))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class RunHeader:
    version: str
    config: dict

    @property
    def seed(self) -> int:
        return self.config["run"]["seed"]

    def lines(self) -> list[str]:
        return [f"# orbitbeam {self.version}",
                f"# config_hash: {config_hash(self.config)}",
                f"# seed: {self.seed}",
                f"# units: {'bits' if self.config['run']['log_base'] == '2' else 'nats'}"
                " per channel use",
                HEADER_CONFIG_PREFIX + canonical_json(self.config)]

    def as_dict(self) -> dict:
        return {"version": self.version, "config_hash": config_hash(self.config),
                "seed": self.seed, "config": _jsonable(self.config)}
