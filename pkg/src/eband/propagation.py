"""Deterministic path-loss models for terrestrial millimeter-wave links.

Free-space loss, a constant-rate gas term, ITU-R rain (P.838-3 specific
attenuation with the P.530 distance factor), the Crane (1980) global
model, and residual analysis of measured attenuation series against
either rain model.

Coefficient tables ship as data assets under ``eband/data``.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime
from functools import lru_cache
from importlib import resources
from typing import Callable, Sequence

import numpy as np

from .core import SPEED_OF_LIGHT, DomainError

DEFAULT_GAS_DB_PER_KM = 0.4


class Polarization(enum.Enum):
    H = "H"
    V = "V"

    @classmethod
    def parse(cls, value) -> "Polarization":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise DomainError(f"polarization must be 'H' or 'V', got {value!r}") from None


def _data_text(name: str) -> str:
    return resources.files("eband.data").joinpath(name).read_text()


def _strip_comments(text: str) -> str:
    return "\n".join(ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#"))


def fspl(freq_hz, distance_m):
    """Free-space path loss in dB, 20·log10(4πdf/c)."""
    if np.any(np.asarray(freq_hz) <= 0) or np.any(np.asarray(distance_m) <= 0):
        raise DomainError("frequency and distance must be positive")
    return 20.0 * np.log10(4.0 * math.pi * np.asarray(distance_m) * freq_hz / SPEED_OF_LIGHT)


def gas_attenuation(distance_km, db_per_km=DEFAULT_GAS_DB_PER_KM):
    return db_per_km * distance_km


@dataclass(frozen=True)
class ItuRainCoefficients:
    """Tabulated P.838-3 coefficients with the Recommendation's interpolation rule.

    k is interpolated linearly in log(k) versus log(f); alpha linearly in
    alpha versus log(f).
    """

    freq_ghz: np.ndarray
    k_h: np.ndarray
    k_v: np.ndarray
    alpha_h: np.ndarray
    alpha_v: np.ndarray
    version: str = ""

    @classmethod
    def from_csv(cls, text: str, version: str = "") -> "ItuRainCoefficients":
        for line in text.splitlines():
            if line.startswith("# asset_version:"):
                version = line.split(":", 1)[1].strip()
        rows = list(csv.DictReader(io.StringIO(_strip_comments(text))))
        expected = ["freq_ghz", "k_h", "k_v", "alpha_h", "alpha_v"]
        if not rows or list(rows[0].keys()) != expected:
            raise DomainError(f"coefficient table must have header {','.join(expected)}")
        cols = {name: np.array([float(r[name]) for r in rows]) for name in expected}
        if np.any(np.diff(cols["freq_ghz"]) <= 0):
            raise DomainError("coefficient table frequencies must be strictly increasing")
        return cls(version=version, **cols)

    @classmethod
    @lru_cache(maxsize=None)
    def default(cls) -> "ItuRainCoefficients":
        return cls.from_csv(_data_text("itu_p838_3.csv"))

    def coefficients(self, freq_ghz: float, polarization="H") -> tuple[float, float]:
        """(k, alpha) at ``freq_ghz`` for the given polarization."""
        pol = Polarization.parse(polarization)
        lo, hi = self.freq_ghz[0], self.freq_ghz[-1]
        if not lo <= freq_ghz <= hi:
            raise DomainError(f"frequency {freq_ghz} GHz outside coefficient table [{lo}, {hi}]")
        k_tab, a_tab = (self.k_h, self.alpha_h) if pol is Polarization.H else (self.k_v, self.alpha_v)
        logf = np.log10(self.freq_ghz)
        x = math.log10(freq_ghz)
        k = 10.0 ** float(np.interp(x, logf, np.log10(k_tab)))
        alpha = float(np.interp(x, logf, a_tab))
        return k, alpha


def specific_attenuation_itu(rain_rate, freq_hz, polarization="H", coefficients=None):
    """Rain specific attenuation γ = k·R^α in dB/km."""
    rate = np.asarray(rain_rate, dtype=float)
    if np.any(rate < 0) or np.any(rate > 200):
        raise DomainError("rain rate must lie in [0, 200] mm/h")
    f_ghz = freq_hz / 1e9
    if not 1.0 <= f_ghz <= 100.0:
        raise DomainError(f"frequency {f_ghz} GHz outside the 1-100 GHz model range")
    k, alpha = (coefficients or ItuRainCoefficients.default()).coefficients(f_ghz, polarization)
    out = k * np.power(rate, alpha)
    return float(out) if out.ndim == 0 else out


def itu_distance_factor(rain_rate, distance_km):
    """P.530 distance reduction factor r = 1/(1 + d/d0), d0 = 35·exp(-0.015·min(R, 100))."""
    d0 = 35.0 * np.exp(-0.015 * np.minimum(rain_rate, 100.0))
    return 1.0 / (1.0 + np.asarray(distance_km) / d0)


def _check_distance(distance_km, limit):
    d = np.asarray(distance_km, dtype=float)
    if np.any(d <= 0) or np.any(d > limit):
        raise DomainError(f"path length must lie in (0, {limit}] km, got {distance_km}")
    return d


def path_attenuation_itu(rain_rate, freq_hz, polarization, distance_km, coefficients=None):
    """Rain attenuation in dB over a terrestrial path, effective-path-length method."""
    d = _check_distance(distance_km, 60.0)
    gamma = specific_attenuation_itu(rain_rate, freq_hz, polarization, coefficients)
    out = gamma * d * itu_distance_factor(np.asarray(rain_rate, dtype=float), d)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class CraneParams:
    """Empirical functions of the Crane global model, each of rain rate R (mm/h).

    b(R) = b_coeff·R^b_exp, c(R) = c_const + c_log·ln R, δ(R) = δ_const + δ_log·ln R (km),
    and u(R) = ln(b·e^{cδ})/δ.
    """

    b_coeff: float = 2.3
    b_exp: float = -0.17
    c_const: float = 0.026
    c_log: float = -0.03
    delta_const: float = 3.8
    delta_log: float = -0.6
    max_path_km: float = 22.5
    version: str = ""

    @classmethod
    @lru_cache(maxsize=None)
    def default(cls) -> "CraneParams":
        raw = json.loads(_data_text("crane_1980.json"))
        return cls(raw["b"]["coeff"], raw["b"]["exponent"], raw["c"]["const"],
                   raw["c"]["log_coeff"], raw["delta_km"]["const"], raw["delta_km"]["log_coeff"],
                   raw["max_path_km"], raw["asset_version"])

    def b(self, R):
        return self.b_coeff * R ** self.b_exp

    def c(self, R):
        return self.c_const + self.c_log * math.log(R)

    def delta(self, R):
        return self.delta_const + self.delta_log * math.log(R)

    def u(self, R):
        delta = self.delta(R)
        return math.log(self.b(R) * math.exp(self.c(R) * delta)) / delta


def _expm1_over(x, scale):
    # (e^{x·scale} - 1)/x, finite as x -> 0
    return scale if x == 0 else math.expm1(x * scale) / x


def path_attenuation_crane(rain_rate, freq_hz, polarization, distance_km,
                           params: CraneParams | None = None, coefficients=None):
    """Crane global-model rain attenuation (dB) along a terrestrial path.

    The point specific attenuation is taken from P.838-3. The along-path
    profile is exponential up to δ(R) and a second exponential beyond it,
    which keeps the attenuation continuous at d = δ(R).
    """
    params = params or CraneParams.default()
    d = float(_check_distance(distance_km, params.max_path_km))
    R = float(rain_rate)
    if R == 0.0:
        return 0.0
    gamma = specific_attenuation_itu(R, freq_hz, polarization, coefficients)
    _, alpha = (coefficients or ItuRainCoefficients.default()).coefficients(freq_hz / 1e9, polarization)
    delta, u, b, c = params.delta(R), params.u(R), params.b(R), params.c(R)
    if d <= delta:
        return gamma * _expm1_over(u * alpha, d)
    head = _expm1_over(u * alpha, delta)
    tail = b ** alpha * math.exp(c * alpha * delta) * _expm1_over(c * alpha, d - delta)
    return gamma * (head + tail)


RAIN_MODELS: dict[str, Callable] = {
    "itu": path_attenuation_itu,
    "crane": path_attenuation_crane,
}


@dataclass(frozen=True)
class RainExceedanceTable:
    """Rain rates exceeded for given percentages of time.

    ``probabilities`` are percent of time, ``rain_rates`` in mm/h, both
    ordered by increasing probability. ``rain_fraction_pct`` is the percent
    of time with any rain; it defaults to the largest tabulated probability.
    """

    probabilities: tuple
    rain_rates: tuple
    source: str = "user"
    rain_fraction_pct: float | None = None

    def __post_init__(self):
        order = np.argsort(self.probabilities)
        p = np.asarray(self.probabilities, dtype=float)[order]
        r = np.asarray(self.rain_rates, dtype=float)[order]
        if len(p) == 0 or len(p) != len(r):
            raise DomainError("exceedance table needs matching, non-empty columns")
        if np.any(p <= 0) or np.any(p >= 100):
            raise DomainError("exceedance probabilities must lie in (0, 100) %")
        if np.any(np.diff(p) <= 0) or np.any(np.diff(r) >= 0) or np.any(r <= 0):
            raise DomainError("rain rate must be positive and strictly decreasing in probability")
        object.__setattr__(self, "probabilities", tuple(p.tolist()))
        object.__setattr__(self, "rain_rates", tuple(r.tolist()))
        if self.rain_fraction_pct is None:
            object.__setattr__(self, "rain_fraction_pct", float(p[-1]))
        elif not p[-1] <= self.rain_fraction_pct < 100:
            raise DomainError("rain_fraction_pct must be at least the largest tabulated probability")

    @classmethod
    def preset(cls, zone: str) -> "RainExceedanceTable":
        rows = list(csv.DictReader(io.StringIO(_strip_comments(_data_text("rain_zones_p837_1.csv")))))
        if zone not in rows[0] or zone == "percent":
            raise DomainError(f"unknown rain zone {zone!r}")
        return cls(tuple(float(r["percent"]) for r in rows),
                   tuple(float(r[zone]) for r in rows), source=f"ITU-R P.837-1 zone {zone}")

    @staticmethod
    def zones() -> list[str]:
        header = _strip_comments(_data_text("rain_zones_p837_1.csv")).splitlines()[0]
        return header.split(",")[1:]

    def rain_rate(self, probability_pct: float) -> float:
        """Rain rate exceeded for ``probability_pct`` of time (log-log interpolation)."""
        p = np.log(self.probabilities)
        r = np.log(self.rain_rates)
        if not self.probabilities[0] <= probability_pct <= self.probabilities[-1]:
            raise DomainError(f"probability {probability_pct}% outside table range")
        return float(np.exp(np.interp(math.log(probability_pct), p, r)))

    def exceedance(self, rain_rate: float) -> tuple[float, bool]:
        """Percent of time ``rain_rate`` is exceeded, and whether it was clamped.

        Rates above the table maximum clamp to the smallest tabulated
        probability; rates below the table minimum clamp to the rain fraction.
        """
        if rain_rate <= 0:
            return self.rain_fraction_pct, False
        rates = self.rain_rates[::-1]
        probs = self.probabilities[::-1]
        rel = 1e-6  # solver slack at the table ends
        if rain_rate > rates[-1] * (1 + rel):
            return probs[-1], True
        if rain_rate < rates[0] * (1 - rel):
            return self.rain_fraction_pct, True
        rain_rate = min(max(rain_rate, rates[0]), rates[-1])
        return float(np.exp(np.interp(math.log(rain_rate), np.log(rates), np.log(probs)))), False


@dataclass(frozen=True)
class RainModel:
    """A rain attenuation model paired with local rain statistics."""

    table: RainExceedanceTable
    method: str = "itu"
    polarization: Polarization = Polarization.H

    def __post_init__(self):
        if self.method not in RAIN_MODELS:
            raise DomainError(f"rain model must be one of {sorted(RAIN_MODELS)}, got {self.method!r}")
        object.__setattr__(self, "polarization", Polarization.parse(self.polarization))

    def attenuation(self, rain_rate, freq_hz, distance_km):
        return RAIN_MODELS[self.method](rain_rate, freq_hz, self.polarization, distance_km)


@dataclass
class AttenuationSeries:
    timestamps: list
    rain_rate: np.ndarray
    measured_attenuation: np.ndarray | None = None

    def __post_init__(self):
        self.rain_rate = np.asarray(self.rain_rate, dtype=float)
        if len(self.timestamps) != len(self.rain_rate):
            raise DomainError("timestamps and rain_rate lengths differ")
        if np.any(self.rain_rate < 0):
            raise DomainError("rain rate must be non-negative")
        if self.measured_attenuation is not None:
            self.measured_attenuation = np.asarray(self.measured_attenuation, dtype=float)
            if len(self.measured_attenuation) != len(self.rain_rate):
                raise DomainError("measured_attenuation length differs from rain_rate")

    def __len__(self):
        return len(self.rain_rate)

    @classmethod
    def read_csv(cls, fh) -> "AttenuationSeries":
        """Parse ``timestamp_iso8601,rain_mm_per_h[,measured_atten_db]`` rows.

        Raises DomainError naming the 1-based line of the first bad row.
        """
        stamps, rain, meas = [], [], []
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DomainError("empty measurement file")
        header = [h.strip() for h in header]
        if header[:2] != ["timestamp_iso8601", "rain_mm_per_h"] or \
                header[2:] not in ([], ["measured_atten_db"]):
            raise DomainError(f"line 1: unexpected header {','.join(header)}")
        has_meas = len(header) == 3
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                if len(row) != len(header):
                    raise ValueError(f"expected {len(header)} fields, got {len(row)}")
                stamps.append(datetime.fromisoformat(row[0].strip()))
                r = float(row[1])
                if not r >= 0 or not math.isfinite(r):
                    raise ValueError("rain rate must be a non-negative number")
                rain.append(r)
                if has_meas:
                    a = float(row[2])
                    if not math.isfinite(a):
                        raise ValueError("attenuation must be finite")
                    meas.append(a)
            except ValueError as exc:
                raise DomainError(f"line {lineno}: {exc}") from None
        if not rain:
            raise DomainError("measurement file has no data rows")
        return cls(stamps, np.array(rain), np.array(meas) if has_meas else None)


@dataclass
class ResidualStats:
    residuals: np.ndarray
    model_attenuation: np.ndarray
    mean: float
    std: float
    percentiles: dict
    exceedance: list = field(default_factory=list)
    high_rain_mean: float = float("nan")
    high_rain_threshold: float = float("nan")

    def summary(self) -> dict:
        return {
            "n_samples": int(len(self.residuals)),
            "mean_residual_db": self.mean,
            "std_residual_db": self.std,
            "percentiles_db": {str(k): v for k, v in self.percentiles.items()},
            "high_rain_threshold_mm_per_h": self.high_rain_threshold,
            "high_rain_mean_residual_db": self.high_rain_mean,
            "exceedance": [{"residual_db": r, "percent_exceeded": p} for r, p in self.exceedance],
        }


def residual_analysis(series: AttenuationSeries, model, freq_hz: float, distance_km: float,
                      percentiles: Sequence[float] = (5, 25, 50, 75, 95),
                      high_rain_quantile: float = 0.9) -> ResidualStats:
    """Compare measured attenuation with a rain model sample by sample.

    ``model`` is a :class:`RainModel` or a callable ``(rain_rate) -> dB``.
    The residual is measured minus modeled attenuation. ``high_rain_mean``
    averages the residual over samples whose rain rate is at or above the
    ``high_rain_quantile`` of the positive rain rates, where an excess E-band
    fade shows up most clearly.
    """
    if series.measured_attenuation is None:
        raise DomainError("series has no measured attenuation column")
    if isinstance(model, RainModel):
        predict = lambda r: model.attenuation(r, freq_hz, distance_km)  # noqa: E731
    else:
        predict = model
    modeled = np.array([predict(float(r)) for r in series.rain_rate])
    res = series.measured_attenuation - modeled
    sorted_res = np.sort(res)[::-1]
    exceed_pct = 100.0 * np.arange(1, len(res) + 1) / len(res)
    wet = series.rain_rate[series.rain_rate > 0]
    high_mean, thr = float("nan"), float("nan")
    if len(wet):
        thr = float(np.quantile(wet, high_rain_quantile))
        high_mean = float(np.mean(res[series.rain_rate >= thr]))
    return ResidualStats(
        residuals=res,
        model_attenuation=modeled,
        mean=float(np.mean(res)),
        std=float(np.std(res)),
        percentiles={p: float(np.percentile(res, p)) for p in percentiles},
        exceedance=list(zip(sorted_res.tolist(), exceed_pct.tolist())),
        high_rain_mean=high_mean,
        high_rain_threshold=thr,
    )
