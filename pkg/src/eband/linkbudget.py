"""Link budget chain, rain availability and range solvers."""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, replace

from scipy.optimize import bisect

from .core import SPEED_OF_LIGHT, DomainError, ModulationScheme, dbm_to_dbw, required_snr, thermal_noise_dbm
from .propagation import DEFAULT_GAS_DB_PER_KM, RainModel, fspl


@dataclass(frozen=True)
class LinkScenario:
    """One point-to-point hop.

    If ``rx_threshold_dbm`` is None the threshold is derived from
    ``noise_figure_db``, ``bandwidth_hz`` and the SNR the modulation needs
    for ``target_ber``. A threshold given directly always wins.
    """

    freq_hz: float
    distance_m: float
    tx_power_dbm: float
    tx_gain_dbi: float
    rx_gain_dbi: float
    rx_threshold_dbm: float | None = None
    misc_loss_db: float = 0.0
    gas_db_per_km: float = DEFAULT_GAS_DB_PER_KM
    excess_margin_db: float = 0.0
    bandwidth_hz: float = 1e9
    modulation: ModulationScheme = ModulationScheme.BPSK
    availability_target: float = 99.999
    noise_figure_db: float = 7.0
    target_ber: float = 1e-6
    oob_emission_dbm: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "modulation", ModulationScheme.parse(self.modulation))
        for name in ("freq_hz", "tx_power_dbm", "tx_gain_dbi", "rx_gain_dbi", "misc_loss_db",
                     "gas_db_per_km", "excess_margin_db", "noise_figure_db"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.rx_threshold_dbm is not None and not math.isfinite(self.rx_threshold_dbm):
            raise DomainError("rx_threshold_dbm must be finite")
        if not self.distance_m > 0 or not self.freq_hz > 0 or not self.bandwidth_hz > 0:
            raise DomainError("distance, frequency and bandwidth must be positive")
        if not 0 < self.availability_target < 100:
            raise DomainError("availability target must lie in (0, 100) %")

    @property
    def distance_km(self) -> float:
        return self.distance_m / 1e3

    @property
    def noise_floor_dbm(self) -> float:
        return thermal_noise_dbm(self.bandwidth_hz, self.noise_figure_db)

    @property
    def threshold_dbm(self) -> float:
        if self.rx_threshold_dbm is not None:
            return self.rx_threshold_dbm
        return self.noise_floor_dbm + required_snr(self.modulation, self.target_ber)

    @property
    def eirp_dbm(self) -> float:
        return self.tx_power_dbm + self.tx_gain_dbi

    def with_distance(self, distance_m: float) -> "LinkScenario":
        return replace(self, distance_m=distance_m)


@dataclass(frozen=True)
class BudgetReport:
    fspl_db: float
    gas_db: float
    rain_db_at_target: float
    clear_sky_rx_dbm: float
    rx_threshold_dbm: float
    fade_margin_db: float
    availability_achieved: float | None
    availability_clamped: bool
    data_rate_bps: float
    eirp_dbm: float

    @property
    def eirp_dbw(self) -> float:
        return dbm_to_dbw(self.eirp_dbm)

    @property
    def feasible(self) -> bool:
        return self.data_rate_bps > 0

    def to_dict(self) -> dict:
        out = asdict(self)
        out["eirp_dbw"] = self.eirp_dbw
        return out


def clear_sky(scenario: LinkScenario) -> tuple[float, float, float]:
    """(fspl_db, gas_db, received power dBm) without rain."""
    loss = float(fspl(scenario.freq_hz, scenario.distance_m))
    gas = scenario.gas_db_per_km * scenario.distance_km
    rx = (scenario.tx_power_dbm + scenario.tx_gain_dbi + scenario.rx_gain_dbi
          - loss - gas - scenario.misc_loss_db)
    return loss, gas, rx


def fade_margin(scenario: LinkScenario) -> float:
    return clear_sky(scenario)[2] - scenario.threshold_dbm


@dataclass(frozen=True)
class AvailabilityResult:
    availability: float
    critical_rain_rate: float
    clamped: bool


def availability(scenario: LinkScenario, rain: RainModel, margin_db: float | None = None
                 ) -> AvailabilityResult:
    """Fraction of time (%) the link closes under the rain statistics.

    Finds the rain rate R* at which model attenuation plus the excess E-band
    margin uses up the fade margin (bisection to 0.01 dB), then reads the
    percentage of time R* is exceeded from the table.
    """
    margin = fade_margin(scenario) if margin_db is None else margin_db
    budget = margin - scenario.excess_margin_db
    table = rain.table
    r_hi = 200.0

    def shortfall(rate):
        return rain.attenuation(rate, scenario.freq_hz, scenario.distance_km) - budget

    if budget <= 0:
        r_star = 0.0
    elif shortfall(r_hi) < 0:
        r_star = math.inf
    else:
        # attenuation is monotone in R; xtol on rate chosen so the dB error is < 0.01 dB
        r_star = bisect(shortfall, 0.0, r_hi, xtol=1e-6, rtol=1e-10, maxiter=200)
    if math.isinf(r_star):
        outage, clamped = table.probabilities[0], True
    else:
        outage, clamped = table.exceedance(r_star)
    if clamped:
        warnings.warn(f"critical rain rate {r_star:.3g} mm/h outside the exceedance table; "
                      "availability clamped", RuntimeWarning, stacklevel=2)
    return AvailabilityResult(100.0 - outage, r_star, clamped)


def rain_at_target(scenario: LinkScenario, rain: RainModel) -> float:
    """Rain attenuation (dB) exceeded for the outage fraction the target allows.

    Outage percentages outside the table are clamped to its ends.
    """
    table = rain.table
    outage_pct = 100.0 - scenario.availability_target
    rate = table.rain_rate(min(max(outage_pct, table.probabilities[0]), table.probabilities[-1]))
    return float(rain.attenuation(rate, scenario.freq_hz, scenario.distance_km))


def budget(scenario: LinkScenario, rain: RainModel | None = None) -> BudgetReport:
    """Run the budget chain, optionally against rain statistics.

    The data rate is bandwidth × bits/symbol when the fade margin covers
    the rain attenuation at the availability target plus the excess margin,
    and zero otherwise.
    """
    loss, gas, rx = clear_sky(scenario)
    thr = scenario.threshold_dbm
    margin = rx - thr
    rain_db = 0.0
    avail, clamped = None, False
    if rain is not None:
        rain_db = rain_at_target(scenario, rain)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = availability(scenario, rain, margin)
        avail, clamped = res.availability, res.clamped
    needed = rain_db + scenario.excess_margin_db if rain is not None else 0.0
    rate_bps = scenario.bandwidth_hz * scenario.modulation.bits_per_symbol if margin >= needed else 0.0
    return BudgetReport(loss, gas, rain_db, rx, thr, margin, avail, clamped, rate_bps,
                        scenario.eirp_dbm)


def _meets_target(scenario: LinkScenario, rain: RainModel | None) -> float:
    """Positive when the scenario meets its availability target (in dB of headroom)."""
    margin = fade_margin(scenario)
    if rain is None:
        return margin
    return margin - rain_at_target(scenario, rain) - scenario.excess_margin_db


def max_range(scenario: LinkScenario, rain: RainModel | None = None,
              d_min: float = 1.0, d_max: float | None = None, tol_m: float = 1.0) -> float | None:
    """Largest distance (m) that still meets the availability target.

    The distance in ``scenario`` is ignored. Returns None when even
    ``d_min`` fails. Without rain statistics the solve reduces to
    clear-sky fade margin = 0.
    """
    if d_max is None:
        limit_km = 22.5 if rain is not None and rain.method == "crane" else 60.0
        d_max = limit_km * 1e3 if rain is not None else 1e9

    def headroom(d):
        return _meets_target(scenario.with_distance(d), rain)

    if headroom(d_min) < 0:
        return None
    if headroom(d_max) >= 0:
        return d_max
    d = bisect(headroom, d_min, d_max, xtol=tol_m / 2)
    # report the feasible side of the bracket
    while headroom(d) < 0 and d - tol_m / 2 >= d_min:
        d -= tol_m / 2
    return d


def free_space_range(scenario: LinkScenario) -> float:
    """Closed-form clear-sky range when gas and rain are absent."""
    budget_db = (scenario.tx_power_dbm + scenario.tx_gain_dbi + scenario.rx_gain_dbi
                 - scenario.misc_loss_db - scenario.threshold_dbm)
    return 10.0 ** (budget_db / 20.0) * SPEED_OF_LIGHT / (4.0 * math.pi * scenario.freq_hz)
