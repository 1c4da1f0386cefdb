"""Shared numerics: dB arithmetic, modulation tables, aperture gain and
seeded random streams."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import bisect

SPEED_OF_LIGHT = 299_792_458.0
BOLTZMANN_DBM_HZ = -174.0  # thermal noise density at 290 K


class DomainError(ValueError):
    """Input outside the domain where a model or formula is defined."""


def _check_finite(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {x!r}")
    return arr


def db_to_linear(x):
    """Convert a power ratio in dB to linear scale."""
    arr = _check_finite(x)
    out = np.power(10.0, arr / 10.0)
    return float(out) if out.ndim == 0 else out


def linear_to_db(x):
    """Convert a positive linear power ratio to dB."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)) or not np.all(np.isfinite(arr)):
        raise DomainError(f"linear ratio must be positive and finite, got {x!r}")
    out = 10.0 * np.log10(arr)
    return float(out) if out.ndim == 0 else out


def dbm_to_dbw(p_dbm):
    return p_dbm - 30.0


def dbw_to_dbm(p_dbw):
    return p_dbw + 30.0


def wavelength(freq_hz):
    return SPEED_OF_LIGHT / freq_hz


def thermal_noise_dbm(bandwidth_hz, noise_figure_db=0.0):
    """Receiver noise power kTB·F in dBm."""
    return BOLTZMANN_DBM_HZ + 10.0 * math.log10(bandwidth_hz) + noise_figure_db


class ModulationScheme(enum.Enum):
    BPSK = 2
    QPSK = 4
    QAM16 = 16
    QAM64 = 64
    QAM256 = 256

    @property
    def order(self) -> int:
        return self.value

    @property
    def bits_per_symbol(self) -> int:
        return int(math.log2(self.value))

    @classmethod
    def parse(cls, name) -> "ModulationScheme":
        if isinstance(name, cls):
            return name
        key = str(name).upper().replace("-", "")
        aliases = {"16QAM": "QAM16", "64QAM": "QAM64", "256QAM": "QAM256",
                   "4QAM": "QPSK"}
        try:
            return cls[aliases.get(key, key)]
        except KeyError:
            raise DomainError(f"unknown modulation {name!r}") from None

    def constellation(self) -> np.ndarray:
        """Gray-mappable constellation points normalized to unit average energy."""
        if self is ModulationScheme.BPSK:
            return np.array([-1.0 + 0j, 1.0 + 0j])
        m = int(math.isqrt(self.value))
        levels = np.arange(-(m - 1), m, 2, dtype=float)
        pts = (levels[:, None] + 1j * levels[None, :]).ravel()
        return pts / math.sqrt(np.mean(np.abs(pts) ** 2))


def qfunc(x):
    """Gaussian tail probability Q(x) = erfc(x/sqrt 2)/2."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def ber_awgn(mod: ModulationScheme, snr_linear: float) -> float:
    """Exact bit error rate of Gray-coded BPSK or square M-QAM in AWGN.

    ``snr_linear`` is the SNR per symbol, Es/N0. The square-QAM expression
    is the exact per-bit-position sum of Cho and Yoon (2002); for QPSK it
    reduces to Q(sqrt(Es/N0)).
    """
    if mod is ModulationScheme.BPSK:
        return qfunc(math.sqrt(2.0 * snr_linear))
    M = mod.order
    sqrt_m = math.isqrt(M)
    n_bits_axis = int(math.log2(sqrt_m))
    arg = math.sqrt(3.0 * snr_linear / (2.0 * (M - 1)))
    total = 0.0
    for k in range(1, n_bits_axis + 1):
        pk = 0.0
        for i in range(int((1 - 2.0 ** -k) * sqrt_m)):
            w = i * 2 ** (k - 1) / sqrt_m
            sign = -1.0 if math.floor(w) % 2 else 1.0
            pk += sign * (2 ** (k - 1) - math.floor(w + 0.5)) * math.erfc((2 * i + 1) * arg)
        total += pk / sqrt_m
    return total / n_bits_axis


def required_snr(mod, target_ber: float, lo_db: float = -30.0, hi_db: float = 80.0) -> float:
    """SNR per symbol (dB) at which ``mod`` reaches ``target_ber`` in AWGN.

    Solved by bisection to 1e-4 dB on the exact BER expression.
    """
    mod = ModulationScheme.parse(mod)
    if not 0.0 < target_ber < 0.5:
        raise DomainError(f"target BER must lie in (0, 0.5), got {target_ber}")

    def excess(snr_db):
        ber = ber_awgn(mod, 10.0 ** (snr_db / 10.0))
        return math.log(ber / target_ber) if ber > 0.0 else -math.inf

    if excess(lo_db) <= 0.0:
        raise DomainError(f"{mod.name} already meets BER {target_ber} below {lo_db} dB")
    if excess(hi_db) > 0.0:
        raise DomainError(f"BER {target_ber} unreachable for {mod.name} below {hi_db} dB")
    return bisect(excess, lo_db, hi_db, xtol=1e-5)


def aperture_gain(width_m, height_m, freq_hz, efficiency=1.0):
    """Gain in dBi of a rectangular aperture, 10·log10(η·4πA/λ²)."""
    if width_m <= 0 or height_m <= 0 or freq_hz <= 0:
        raise DomainError("aperture dimensions and frequency must be positive")
    if not 0.0 < efficiency <= 1.0:
        raise DomainError(f"aperture efficiency must lie in (0, 1], got {efficiency}")
    lam = wavelength(freq_hz)
    return 10.0 * math.log10(efficiency * 4.0 * math.pi * width_m * height_m / lam ** 2)


@dataclass(frozen=True)
class SeededStream:
    """Address of an independent random stream.

    Streams are derived from ``master_seed`` through numpy's SeedSequence
    spawn keys, so the draws of a given (seed, substream) pair never depend
    on which other streams were created or in what order.
    """

    master_seed: int
    substream_id: tuple = ()

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise DomainError("master_seed must be an unsigned 64-bit integer")
        sid = self.substream_id
        object.__setattr__(self, "substream_id",
                           tuple(int(s) for s in (sid if isinstance(sid, tuple) else (sid,))))

    def child(self, *ids: int) -> "SeededStream":
        return SeededStream(self.master_seed, self.substream_id + tuple(int(i) for i in ids))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=self.substream_id)
        return np.random.Generator(np.random.PCG64(seq))
