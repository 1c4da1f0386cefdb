"""Scenario files: JSON schema, validation and construction of model objects."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .core import DomainError, ModulationScheme, SeededStream, wavelength
from .linkbudget import LinkScenario
from .mimo import SystemKind, SystemPreset, element_budget
from .phasenoise import SYNTHETIC_9G9, PhaseNoiseProfile, Tracker
from .propagation import RAIN_MODELS, RainExceedanceTable, RainModel
from .regulatory import Domain
from .relay import RelayChain

SCHEMA_VERSION = 1
SWEEP_VARIABLES = ("rho_db", "floor_dbc_hz", "si_db", "distance_m")


class ScenarioError(DomainError):
    """Scenario file is malformed or inconsistent."""


_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_MODS = ["BPSK", "QPSK", "16QAM", "64QAM", "256QAM"]

_LINK_PROPS = {
    "freq_hz": _pos, "distance_m": _pos, "tx_power_dbm": _num, "tx_gain_dbi": _num,
    "rx_gain_dbi": _num, "rx_threshold_dbm": _num, "misc_loss_db": _num,
    "gas_db_per_km": {"type": "number", "minimum": 0}, "excess_margin_db": _num,
    "bandwidth_hz": _pos, "modulation": {"enum": _MODS},
    "availability_target": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 100},
    "noise_figure_db": _num,
    "target_ber": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
    "oob_emission_dbm": _num,
}

_PROFILE = {
    "type": "object", "additionalProperties": False,
    "required": ["carrier_hz", "terms", "band"],
    "properties": {
        "carrier_hz": _pos,
        "terms": {"type": "array", "minItems": 1, "items": {
            "type": "object", "additionalProperties": False, "required": ["slope", "coeff"],
            "properties": {"slope": {"enum": [0, 1, 2, 3]},
                           "coeff": {"type": "number", "minimum": 0}}}},
        "band": {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2},
    },
}

SCHEMA = {
    "type": "object", "additionalProperties": False,
    "required": ["schema_version"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "master_seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "description": {"type": "string"},
        "link": {"type": "object", "additionalProperties": False,
                 "required": ["freq_hz", "distance_m", "tx_power_dbm", "tx_gain_dbi", "rx_gain_dbi"],
                 "properties": _LINK_PROPS},
        "rain": {"type": "object", "additionalProperties": False,
                 "properties": {
                     "method": {"enum": ["itu", "crane"]},
                     "polarization": {"enum": ["H", "V"]},
                     "zone": {"enum": RainExceedanceTable.zones()},
                     "table": {"type": "array", "minItems": 1, "items": {
                         "type": "object", "additionalProperties": False,
                         "required": ["percent", "rain_mm_per_h"],
                         "properties": {"percent": _pos, "rain_mm_per_h": _pos}}},
                     "rain_fraction_pct": _pos},
                 "not": {"required": ["zone", "table"]}},
        "phase_noise": {"type": "object", "additionalProperties": False,
                        "properties": {
                            "profile": _PROFILE,
                            "profile_file": {"type": "string"},
                            "multiplier": {"type": "integer", "minimum": 1},
                            "floor_dbc_hz": _num,
                            "symbol_rates_hz": {"type": "array", "minItems": 1, "items": _pos},
                            "n_symbols": {"type": "integer", "minimum": 64},
                            "trials": {"type": "integer", "minimum": 20},
                            "snr_db": _num,
                            "modulation": {"enum": _MODS},
                            "tracker": {"type": "object", "additionalProperties": False,
                                        "properties": {
                                            "kind": {"enum": ["none", "moving_average", "dd_pll"]},
                                            "window": {"type": "integer", "minimum": 1},
                                            "loop_bw": _pos}}},
                        "not": {"required": ["profile", "profile_file"]}},
        "mimo": {"type": "object", "additionalProperties": False,
                 "properties": {
                     "freq_hz": _pos, "distance_m": _pos, "aperture_gain_dbi": _num,
                     "aperture_side_m": _pos, "element_gain_dbi": _num,
                     "n_antennas": {"type": "integer", "minimum": 1},
                     "n_beams": {"type": "integer", "minimum": 1},
                     "power_allocation": {"enum": ["equal", "waterfilling"]},
                     "lens_loss_db": {"type": "number", "minimum": 0}}},
        "relay": {"type": "object", "additionalProperties": False,
                  "properties": {
                      "hops": {"type": "array", "minItems": 1, "items": {
                          "type": "object", "additionalProperties": False,
                          "properties": _LINK_PROPS}},
                      "relaying": {"enum": ["AF", "DF"]},
                      "duplex": {"enum": ["full", "half"]},
                      "self_interference_db": {"type": ["number", "null"]},
                      "parallel_beams": {"type": "integer", "minimum": 1}}},
        "regulatory": {"type": "object", "additionalProperties": False,
                       "properties": {"domain": {"enum": ["FCC", "CEPT"]}}},
        "sweep": {"type": "object", "additionalProperties": False,
                  "required": ["variable", "start", "stop", "points"],
                  "properties": {
                      "variable": {"enum": list(SWEEP_VARIABLES)},
                      "start": _num, "stop": _num,
                      "points": {"type": "integer", "minimum": 2},
                      "scale": {"enum": ["linear", "log"]},
                      "trials": {"type": "integer", "minimum": 20}}},
    },
}


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    points: int
    scale: str = "linear"
    trials: int | None = None

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ScenarioError(f"unknown sweep variable {self.variable!r}")
        if self.points < 2:
            raise ScenarioError("sweep needs at least 2 points")
        if not self.start < self.stop:
            raise ScenarioError("sweep start must be below stop")
        if self.scale == "log" and self.start <= 0:
            raise ScenarioError("log sweep needs a positive start")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.points)
        return np.linspace(self.start, self.stop, self.points)


def _format_error(err: jsonschema.ValidationError) -> str:
    path = ".".join(str(p) for p in err.absolute_path) or "<root>"
    return f"{path}: {err.message}"


@dataclass
class Scenario:
    raw: dict
    base_dir: str = "."
    master_seed: int = field(init=False)

    def __post_init__(self):
        errors = sorted(jsonschema.Draft202012Validator(SCHEMA).iter_errors(self.raw),
                        key=lambda e: list(e.absolute_path))
        if errors:
            raise ScenarioError("; ".join(_format_error(e) for e in errors))
        self.master_seed = int(self.raw.get("master_seed", 0))

    @classmethod
    def load(cls, path) -> "Scenario":
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ScenarioError(f"cannot read scenario: {exc}") from None
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        return cls(raw, os.path.dirname(os.path.abspath(path)))

    def section(self, name: str) -> dict:
        if name not in self.raw:
            raise ScenarioError(f"scenario has no '{name}' section")
        return self.raw[name]

    def link(self, overrides: dict | None = None) -> LinkScenario:
        params = dict(self.section("link"))
        params.update(overrides or {})
        return LinkScenario(**params)

    def rain_model(self) -> RainModel | None:
        if "rain" not in self.raw:
            return None
        sec = self.raw["rain"]
        if "zone" in sec:
            table = RainExceedanceTable.preset(sec["zone"])
        elif "table" in sec:
            rows = sec["table"]
            table = RainExceedanceTable(tuple(r["percent"] for r in rows),
                                        tuple(r["rain_mm_per_h"] for r in rows),
                                        "scenario", sec.get("rain_fraction_pct"))
        else:
            raise ScenarioError("rain: needs 'zone' or 'table' for availability")
        return RainModel(table, sec.get("method", "itu"), sec.get("polarization", "H"))

    def rain_attenuation_fn(self):
        """``rain_rate -> dB`` for the link's frequency and distance."""
        sec = self.raw.get("rain", {})
        link = self.link()
        model = RAIN_MODELS[sec.get("method", "itu")]
        pol = sec.get("polarization", "H")
        return lambda r: model(r, link.freq_hz, pol, link.distance_km)

    # phase noise

    def pn_profile(self) -> PhaseNoiseProfile:
        sec = self.section("phase_noise")
        if "profile" in sec:
            prof = PhaseNoiseProfile.from_dict(sec["profile"])
        elif "profile_file" in sec:
            path = os.path.join(self.base_dir, sec["profile_file"])
            try:
                prof = PhaseNoiseProfile.from_json(path)
            except (OSError, json.JSONDecodeError) as exc:
                raise ScenarioError(f"phase_noise.profile_file: {exc}") from None
        else:
            prof = SYNTHETIC_9G9
        prof = prof.scale_by_multiplier(sec.get("multiplier", 1))
        if "floor_dbc_hz" in sec:
            prof = prof.with_floor(sec["floor_dbc_hz"])
        return prof

    def pn_settings(self) -> dict:
        sec = self.section("phase_noise")
        trk = sec.get("tracker", {})
        return {
            "symbol_rates": list(sec.get("symbol_rates_hz", [1e8, 1e9])),
            "n_symbols": sec.get("n_symbols", 12500),
            "trials": sec.get("trials", 20),
            "snr_db": sec.get("snr_db", 30.0),
            "modulation": ModulationScheme.parse(sec.get("modulation", "16QAM")),
            "tracker": Tracker(trk.get("kind", "dd_pll"), trk.get("window", 64),
                               trk.get("loop_bw", 1e-3)),
        }

    # mimo

    def mimo_settings(self) -> dict:
        sec = self.raw.get("mimo", {})
        return {"freq_hz": sec.get("freq_hz", 80e9), "distance_m": sec.get("distance_m", 200.0),
                "n_antennas": sec.get("n_antennas", 4)}

    def mimo_presets(self) -> dict:
        sec = self.raw.get("mimo", {})
        lam = wavelength(sec.get("freq_hz", 80e9))
        max_beams = element_budget(sec["aperture_side_m"], lam) if "aperture_side_m" in sec else None
        common = {"power_allocation": sec.get("power_allocation", "equal")}
        G = sec.get("aperture_gain_dbi", 55.0)
        try:
            return {
                "dish": SystemPreset(SystemKind.DISH, aperture_gain_dbi=G, **common),
                "conv_mimo": SystemPreset(SystemKind.CONV_MIMO,
                                          element_gain_dbi=sec.get("element_gain_dbi", 30.0),
                                          n_antennas=sec.get("n_antennas", 4), **common),
                "cap_mimo": SystemPreset(SystemKind.CAP_MIMO, aperture_gain_dbi=G,
                                         n_beams=sec.get("n_beams", 4), max_beams=max_beams,
                                         lens_loss_db=sec.get("lens_loss_db", 0.0), **common),
            }
        except DomainError as exc:
            raise ScenarioError(f"mimo: {exc}") from None

    # relay / regulatory / sweep

    def relay_chain(self) -> RelayChain:
        sec = self.section("relay")
        hops = tuple(self.link(h) for h in sec.get("hops", [{}]))
        si = sec.get("self_interference_db")
        return RelayChain(hops, sec.get("relaying", "DF"), sec.get("duplex", "full"),
                          -math.inf if si is None else float(si), sec.get("parallel_beams", 1))

    def domain(self):
        return Domain.parse(self.raw.get("regulatory", {}).get("domain", "FCC"))

    def sweep(self) -> SweepSpec | None:
        sec = self.raw.get("sweep")
        if sec is None:
            return None
        return SweepSpec(sec["variable"], sec["start"], sec["stop"], sec["points"],
                         sec.get("scale", "linear"), sec.get("trials"))

    def stream(self, seed: int | None = None) -> SeededStream:
        return SeededStream(self.master_seed if seed is None else seed)
