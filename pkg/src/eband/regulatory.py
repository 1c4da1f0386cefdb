"""E-band regulatory limits (FCC, CEPT), compliance checks and channel plans."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

from .core import DomainError, dbw_to_dbm

GHZ = 1e9
BANDS = {"low": (71 * GHZ, 76 * GHZ), "high": (81 * GHZ, 86 * GHZ)}


@dataclass(frozen=True)
class RegulatoryDomain:
    name: str
    max_eirp_dbw: float
    max_tx_power_dbm: float
    min_antenna_gain_dbi: float
    max_oob_dbm: float
    # Hook for gain-dependent EIRP/power schedules: gain_dbi -> (eirp_dbw, tx_dbm).
    # None keeps the flat limits above.
    gain_schedule: Callable | None = None

    def limits_for_gain(self, gain_dbi: float) -> tuple[float, float]:
        if self.gain_schedule is None:
            return self.max_eirp_dbw, self.max_tx_power_dbm
        return self.gain_schedule(gain_dbi)


class Domain(enum.Enum):
    FCC = RegulatoryDomain("FCC", 55.0, 35.0, 43.0, -13.0)
    CEPT = RegulatoryDomain("CEPT", 55.0, 30.0, 38.0, -30.0)

    @classmethod
    def parse(cls, value) -> RegulatoryDomain:
        if isinstance(value, RegulatoryDomain):
            return value
        if isinstance(value, cls):
            return value.value
        try:
            return cls[str(value).upper()].value
        except KeyError:
            raise DomainError(f"unknown regulatory domain {value!r}") from None


@dataclass(frozen=True)
class RuleResult:
    name: str
    limit: float
    value: float | None
    passed: bool | None

    def to_dict(self) -> dict:
        return {"name": self.name, "limit": self.limit, "value": self.value, "pass": self.passed}


@dataclass(frozen=True)
class ComplianceReport:
    domain: str
    eirp_dbm: float
    rules: tuple

    @property
    def passed(self) -> bool:
        """All evaluated rules pass; rules without a declared value are skipped."""
        return all(r.passed for r in self.rules if r.passed is not None)

    def to_dict(self) -> dict:
        return {"domain": self.domain, "eirp_dbm": self.eirp_dbm,
                "rules": [r.to_dict() for r in self.rules], "pass": self.passed}


def check_compliance(tx_power_dbm: float, tx_gain_dbi: float, domain,
                     oob_emission_dbm: float | None = None) -> ComplianceReport:
    """Check transmit power, antenna gain, EIRP and declared OOB emission."""
    dom = Domain.parse(domain)
    eirp = tx_power_dbm + tx_gain_dbi
    eirp_limit_dbw, power_limit = dom.limits_for_gain(tx_gain_dbi)
    eirp_limit = dbw_to_dbm(eirp_limit_dbw)
    rules = [
        RuleResult("max_eirp_dbm", eirp_limit, eirp, eirp <= eirp_limit),
        RuleResult("max_tx_power_dbm", power_limit, tx_power_dbm, tx_power_dbm <= power_limit),
        RuleResult("min_antenna_gain_dbi", dom.min_antenna_gain_dbi, tx_gain_dbi,
                   tx_gain_dbi >= dom.min_antenna_gain_dbi),
        RuleResult("max_oob_emission_dbm", dom.max_oob_dbm, oob_emission_dbm,
                   None if oob_emission_dbm is None else oob_emission_dbm <= dom.max_oob_dbm),
    ]
    return ComplianceReport(dom.name, eirp, tuple(rules))


def check_scenario(scenario, domain) -> ComplianceReport:
    return check_compliance(scenario.tx_power_dbm, scenario.tx_gain_dbi, domain,
                            scenario.oob_emission_dbm)


@dataclass(frozen=True)
class Channel:
    index: int
    low_hz: float
    high_hz: float

    @property
    def center_hz(self) -> float:
        return (self.low_hz + self.high_hz) / 2.0

    @property
    def width_hz(self) -> float:
        return self.high_hz - self.low_hz

    def to_dict(self) -> dict:
        return {"index": self.index, "low_hz": self.low_hz, "high_hz": self.high_hz,
                "center_hz": self.center_hz}


@dataclass(frozen=True)
class ChannelPlan:
    band_low_hz: float
    band_high_hz: float
    guard_hz: float
    channels: tuple

    def __len__(self):
        return len(self.channels)

    def channel(self, index: int) -> Channel:
        if not 1 <= index <= len(self.channels):
            raise DomainError(f"channel index {index} outside 1..{len(self.channels)}")
        return self.channels[index - 1]

    def to_dict(self) -> dict:
        return {"band_low_hz": self.band_low_hz, "band_high_hz": self.band_high_hz,
                "guard_hz": self.guard_hz, "channels": [c.to_dict() for c in self.channels]}


def _plan(band: str, guard_hz: float, width_hz: float | None) -> ChannelPlan:
    if band not in BANDS:
        raise DomainError(f"band must be 'low' (71-76 GHz) or 'high' (81-86 GHz), got {band!r}")
    lo, hi = BANDS[band]
    if width_hz is None:
        return ChannelPlan(lo, hi, guard_hz, (Channel(1, lo + guard_hz, hi - guard_hz),))
    # integer MHz arithmetic keeps edges exact
    lo_mhz, hi_mhz = round(lo / 1e6), round(hi / 1e6)
    g_mhz, w_mhz = round(guard_hz / 1e6), round(width_hz / 1e6)
    n = (hi_mhz - lo_mhz - 2 * g_mhz) // w_mhz
    chans = tuple(Channel(i + 1, (lo_mhz + g_mhz + i * w_mhz) * 1e6,
                          (lo_mhz + g_mhz + (i + 1) * w_mhz) * 1e6) for i in range(n))
    return ChannelPlan(lo, hi, guard_hz, chans)


def cept_channel_plan(band: str) -> ChannelPlan:
    """19 × 250 MHz channels with 125 MHz guards at both band edges."""
    return _plan(band, 125e6, 250e6)


def fcc_channel_plan(band: str) -> ChannelPlan:
    """The whole 5 GHz band as a single channel (no sub-channelization)."""
    return _plan(band, 0.0, None)


def fdd_pair(plan_low: ChannelPlan, plan_high: ChannelPlan, index: int) -> tuple[Channel, Channel]:
    """Channel ``index`` from each band; centers are 10 GHz apart for the CEPT plan."""
    return plan_low.channel(index), plan_high.channel(index)
