"""``key = value`` configuration files.

One assignment per line, SI units, ``#`` starts a comment.  Recognized keys:

Device (all required by ``params`` unless marked optional)
    length, width, mass, omega, gap, capacitance, bias_voltage, q_factor,
    geometry_factor (optional, default 1), chi and/or critical_amplitude
    (at least one), chi_b / critical_amplitude_b (optional, default to a's)

Operating point
    n, t

Reduced-model overrides (optional; replace derived values)
    gamma, beta, Gamma (sets both arms), Gamma_a, Gamma_b, kappa, dx
"""

from __future__ import annotations

import math
from typing import Mapping

from .errors import ConfigError, DomainError
from .model import ModelParams, PhysicalParams, derive_model_params

DEVICE_KEYS = (
    "length",
    "width",
    "mass",
    "omega",
    "gap",
    "capacitance",
    "bias_voltage",
    "q_factor",
)
OPTIONAL_DEVICE_KEYS = (
    "geometry_factor",
    "chi",
    "critical_amplitude",
    "chi_b",
    "critical_amplitude_b",
)
POINT_KEYS = ("n", "t")
OVERRIDE_KEYS = ("gamma", "beta", "Gamma", "Gamma_a", "Gamma_b", "kappa", "dx")
KNOWN_KEYS = DEVICE_KEYS + OPTIONAL_DEVICE_KEYS + POINT_KEYS + OVERRIDE_KEYS

#: Device values quoted for the reference resonators, with the typical Kerr
#: rate 1e-4 s^-1, beta = 0 and the fiducial operating point.
REFERENCE_CONFIG = {
    "length": 2e-6,
    "width": 40e-9,
    "mass": 1e-17,
    "omega": 9.4e7,
    "gap": 120e-9,
    "capacitance": 10e-18,
    "bias_voltage": 1.0,
    "q_factor": 20000.0,
    "chi": 4e13,
    "critical_amplitude": 0.7e-9,
    "n": 1e7,
    "t": 1e-3,
    "gamma": 1e-4,
    "beta": 0.0,
}


def parse_config(text: str) -> dict[str, float]:
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = float(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: {key} is not a number: {value!r}") from None
        if not math.isfinite(values[key]):
            raise ConfigError(f"line {lineno}: {key} must be finite")
    return values


def load_config(path) -> dict[str, float]:
    try:
        with open(path) as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None


def format_config(values: Mapping[str, float]) -> str:
    return "".join(f"{key} = {values[key]!r}\n" for key in KNOWN_KEYS if key in values)


def physical_params(values: Mapping[str, float]) -> PhysicalParams:
    missing = [k for k in DEVICE_KEYS if k not in values]
    if missing:
        raise ConfigError(f"missing required key: {missing[0]}")
    if "chi" not in values and "critical_amplitude" not in values:
        raise ConfigError("missing required key: chi (or critical_amplitude)")
    kwargs = {k: values[k] for k in DEVICE_KEYS + OPTIONAL_DEVICE_KEYS if k in values}
    try:
        return PhysicalParams(**kwargs)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def model_params(values: Mapping[str, float]) -> ModelParams:
    """Reduced model from a config: derived from the device when its keys
    are present, then overridden key by key."""
    for key in POINT_KEYS:
        if key not in values:
            raise ConfigError(f"missing required key: {key}")
    if any(k in values for k in DEVICE_KEYS):
        fields = derive_model_params(physical_params(values), values["n"], values["t"]).as_dict()
    else:
        fields = {"n": values["n"], "t": values["t"], "kappa": 0.0, "dx": 0.0}
        if "gamma" not in values:
            raise ConfigError("missing required key: gamma")
        if not any(k in values for k in ("Gamma", "Gamma_a")):
            raise ConfigError("missing required key: Gamma")
        fields.setdefault("beta", 0.0)
    if "Gamma" in values:
        fields["Gamma_a"] = fields["Gamma_b"] = values["Gamma"]
    for key in ("gamma", "beta", "Gamma_a", "Gamma_b", "kappa", "dx"):
        if key in values:
            fields[key] = values[key]
    fields.setdefault("Gamma_b", fields.get("Gamma_a"))
    try:
        return ModelParams(**fields)
    except (DomainError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
