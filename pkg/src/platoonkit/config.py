"""Flat sectioned key-value run configuration.

The file format is configparser INI: sections [topology], [gains], [plant],
[controller], [policy], [schedule], [sim]; dotted keys group related values
inside a section (e.g. ``slope.angle_deg``).  Angles are written in degrees
and converted to radians internally.  Every key has a default, so an empty
(or absent) file describes the reference nine-follower scenario.

Overrides use ``section.key=value`` with the section as the first dotted
component, e.g. ``--override schedule.wind.speed=-20``.
"""

from __future__ import annotations

import configparser
import math

import numpy as np

from .control import GainVector, SpacingPolicy, TABLE_GAINS, TABLE_RANGES
from .dynamics import VehicleParams
from .errors import ConfigError
from .simulation import DisturbanceSchedule, SimConfig
from .topology import Topology, build_named, load_topology

DEFAULTS = {
    "topology": {
        "kind": "PF",
        "n_followers": "9",
        "range": "",        # empty = kind-dependent default
        "file": "",         # explicit topology file wins over kind/n/range
    },
    "gains": {
        # empty = look up the reference gains for the topology kind
        "kappa_s": "",
        "kappa_p": "",
        "kappa_v": "",
        "kappa_a": "",
        "column": "theorem",  # theorem | corollary, used when gains are blank
    },
    "plant": {
        "mass": "1613.0",
        "driveline_efficiency": "1.0",
        "tire_radius": "0.34",
        "air_density": "1.225",
        "drag_coefficient": "0.62",
        "gravity": "9.8",
        "rolling_resistance": "0.01",
        "powertrain_tau": "0.15",
        "length": "0.0",
    },
    "controller": {
        # multiplicative mismatch of the controller's estimates vs the plant
        "drag_scale": "1.0",
        "rolling_scale": "1.0",
        "tau_scale": "1.0",
    },
    "policy": {
        "gap": "10.0",
        "vehicle_length": "0.0",
    },
    "schedule": {
        "pulse.magnitude": "1.0",
        "pulse.t_start": "30.0",
        "pulse.t_end": "35.0",
        "slope.angle_deg": "10.0",
        "slope.trigger_position": "1680.0",
        "slope.per_vehicle": "true",
        "wind.speed": "20.0",
        "wind.t_start": "150.0",
        # comma-separated vehicle:magnitude:t_start triples
        "input_bias": "",
    },
    "sim": {
        "dt": "0.01",
        "t_final": "250.0",
        "plant_mode": "nonlinear",
        "record_stride": "1",
        "initial_speed": "15.0",
        "gap_offsets": "",
        "allow_uncertified": "false",
        "settle_window": "20.0",
        "settle_band": "0.02",
    },
}


def parse_config(path=None, overrides=()) -> dict:
    """Read the config file (optional) and apply ``section.key=value`` overrides.

    Returns a plain {section: {key: str}} dict with every default filled in.
    Unknown sections or keys raise ConfigError.
    """
    cfg = {sec: dict(keys) for sec, keys in DEFAULTS.items()}
    if path is not None:
        parser = configparser.ConfigParser()
        try:
            read = parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config file {path}: {exc}") from exc
        if not read:
            raise ConfigError(f"config file not found: {path}")
        for sec in parser.sections():
            if sec not in cfg:
                raise ConfigError(f"unknown config section [{sec}]")
            for key, val in parser.items(sec):
                if key not in cfg[sec]:
                    raise ConfigError(f"unknown config key {sec}.{key}")
                cfg[sec][key] = val
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"override must be section.key=value, got {ov!r}")
        dotted, val = ov.split("=", 1)
        if "." not in dotted:
            raise ConfigError(f"override key must be dotted, got {dotted!r}")
        sec, key = dotted.split(".", 1)
        if sec not in cfg or key not in cfg[sec]:
            raise ConfigError(f"unknown override key {dotted!r}")
        cfg[sec][key] = val
    return cfg


def _as_float(cfg, sec, key) -> float:
    try:
        return float(cfg[sec][key])
    except ValueError as exc:
        raise ConfigError(f"{sec}.{key} must be a number, got {cfg[sec][key]!r}") from exc


def _as_int(cfg, sec, key) -> int:
    try:
        return int(cfg[sec][key])
    except ValueError as exc:
        raise ConfigError(f"{sec}.{key} must be an integer, got {cfg[sec][key]!r}") from exc


def _as_bool(cfg, sec, key) -> bool:
    val = cfg[sec][key].strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{sec}.{key} must be a boolean, got {cfg[sec][key]!r}")


def topology_from(cfg) -> Topology:
    sec = cfg["topology"]
    if sec["file"].strip():
        return load_topology(sec["file"].strip())
    kind = sec["kind"].strip()
    n = _as_int(cfg, "topology", "n_followers")
    rng_raw = sec["range"].strip()
    rng = int(rng_raw) if rng_raw else TABLE_RANGES.get(kind, 1)
    try:
        return build_named(kind, n, range=rng)
    except Exception as exc:
        raise ConfigError(str(exc)) from exc


def gains_from(cfg) -> GainVector:
    sec = cfg["gains"]
    blanks = [k for k in ("kappa_s", "kappa_p", "kappa_v", "kappa_a") if not sec[k].strip()]
    if not blanks:
        return GainVector(*(_as_float(cfg, "gains", k)
                            for k in ("kappa_s", "kappa_p", "kappa_v", "kappa_a")))
    if len(blanks) != 4:
        raise ConfigError("set all four gains or none (blank gains use the reference table)")
    kind = cfg["topology"]["kind"].strip()
    if kind not in TABLE_GAINS:
        raise ConfigError(f"no reference gains for topology kind {kind!r}; set gains explicitly")
    column = sec["column"].strip().lower()
    if column not in ("theorem", "corollary"):
        raise ConfigError("gains.column must be 'theorem' or 'corollary'")
    return TABLE_GAINS[kind][0 if column == "theorem" else 1]


def plant_params_from(cfg) -> VehicleParams:
    sec = "plant"
    try:
        return VehicleParams(
            mass=_as_float(cfg, sec, "mass"),
            driveline_efficiency=_as_float(cfg, sec, "driveline_efficiency"),
            tire_radius=_as_float(cfg, sec, "tire_radius"),
            air_density=_as_float(cfg, sec, "air_density"),
            drag_coefficient=_as_float(cfg, sec, "drag_coefficient"),
            gravity=_as_float(cfg, sec, "gravity"),
            rolling_resistance=_as_float(cfg, sec, "rolling_resistance"),
            powertrain_tau=_as_float(cfg, sec, "powertrain_tau"),
            length=_as_float(cfg, sec, "length"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def controller_params_from(cfg, plant: VehicleParams) -> VehicleParams:
    return plant.perturbed(
        drag_scale=_as_float(cfg, "controller", "drag_scale"),
        rolling_scale=_as_float(cfg, "controller", "rolling_scale"),
        tau_scale=_as_float(cfg, "controller", "tau_scale"),
    )


def schedule_from(cfg) -> DisturbanceSchedule:
    sec = "schedule"
    bias = []
    raw = cfg[sec]["input_bias"].strip()
    if raw:
        for chunk in raw.split(","):
            parts = chunk.strip().split(":")
            if len(parts) != 3:
                raise ConfigError(
                    f"input_bias entries are vehicle:magnitude:t_start, got {chunk!r}"
                )
            try:
                bias.append((int(parts[0]), float(parts[1]), float(parts[2])))
            except ValueError as exc:
                raise ConfigError(f"bad input_bias entry {chunk!r}") from exc
    try:
        return DisturbanceSchedule(
            leader_accel_pulse=(
                _as_float(cfg, sec, "pulse.magnitude"),
                _as_float(cfg, sec, "pulse.t_start"),
                _as_float(cfg, sec, "pulse.t_end"),
            ),
            slope_step=(
                math.radians(_as_float(cfg, sec, "slope.angle_deg")),
                _as_float(cfg, sec, "slope.trigger_position"),
                _as_bool(cfg, sec, "slope.per_vehicle"),
            ),
            wind_step=(
                _as_float(cfg, sec, "wind.speed"),
                _as_float(cfg, sec, "wind.t_start"),
            ),
            input_bias_steps=tuple(bias),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def sim_config_from(cfg) -> SimConfig:
    """Assemble the full SimConfig from a parsed config dict."""
    topo = topology_from(cfg)
    plant = plant_params_from(cfg)
    raw_offsets = cfg["sim"]["gap_offsets"].strip()
    offsets = tuple(float(v) for v in raw_offsets.split()) if raw_offsets else ()
    try:
        policy = SpacingPolicy(
            gap=_as_float(cfg, "policy", "gap"),
            vehicle_length=_as_float(cfg, "policy", "vehicle_length"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return SimConfig(
        topology=topo,
        gains=gains_from(cfg),
        plant_params=plant,
        controller_params=controller_params_from(cfg, plant),
        policy=policy,
        schedule=schedule_from(cfg),
        initial=(offsets, _as_float(cfg, "sim", "initial_speed")),
        dt=_as_float(cfg, "sim", "dt"),
        t_final=_as_float(cfg, "sim", "t_final"),
        plant_mode=cfg["sim"]["plant_mode"].strip(),
        record_stride=_as_int(cfg, "sim", "record_stride"),
        allow_uncertified=_as_bool(cfg, "sim", "allow_uncertified"),
    )


def metrics_options(cfg) -> tuple:
    """(settle_window, settle_band) for metric computation."""
    return (_as_float(cfg, "sim", "settle_window"), _as_float(cfg, "sim", "settle_band"))
