"""LOS-MIMO geometry, beamspace representation and capacity of
DISH / conventional MIMO / CAP-MIMO terminals.

Capacities use a normalized SNR ρ: transmit SNR after free-space path
loss, before any antenna gain. Gains enter per system preset.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, db_to_linear


class Layout(enum.Enum):
    LINEAR = "linear"
    PLANAR = "planar"
    SINGLE_APERTURE = "single_aperture"


@dataclass(frozen=True, eq=False)
class ArrayGeometry:
    """Element positions (meters, shape (n, 3)) in the terminal's own frame.

    z is the boresight axis; arrays face each other along z.
    """

    positions: np.ndarray
    element_gain_dbi: float = 0.0
    layout: Layout = Layout.LINEAR
    shape: tuple = ()
    spacing: float | None = None

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.shape[1] != 3 or len(pos) < 1:
            raise DomainError("positions must have shape (n, 3) with n >= 1")
        if len(pos) > 1:
            diff = pos[:, None, :] - pos[None, :, :]
            dist = np.linalg.norm(diff, axis=2) + np.eye(len(pos))
            if np.any(dist == 0):
                raise DomainError("element positions must be distinct")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "layout", Layout(self.layout))
        if not self.shape:
            object.__setattr__(self, "shape", (len(pos),))

    @property
    def n_elements(self) -> int:
        return len(self.positions)

    @classmethod
    def linear(cls, n: int, spacing: float, element_gain_dbi: float = 0.0,
               axis: int = 1) -> "ArrayGeometry":
        pos = np.zeros((n, 3))
        pos[:, axis] = (np.arange(n) - (n - 1) / 2.0) * spacing
        return cls(pos, element_gain_dbi, Layout.LINEAR, (n,), spacing)

    @classmethod
    def planar(cls, nx: int, ny: int, spacing: float,
               element_gain_dbi: float = 0.0) -> "ArrayGeometry":
        ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        pos = np.zeros((nx * ny, 3))
        pos[:, 0] = ((ix - (nx - 1) / 2.0) * spacing).ravel()
        pos[:, 1] = ((iy - (ny - 1) / 2.0) * spacing).ravel()
        return cls(pos, element_gain_dbi, Layout.PLANAR, (nx, ny), spacing)

    @classmethod
    def single_aperture(cls, gain_dbi: float) -> "ArrayGeometry":
        return cls(np.zeros((1, 3)), gain_dbi, Layout.SINGLE_APERTURE, (1,), None)


@dataclass(frozen=True, eq=False)
class LosChannel:
    H: np.ndarray
    wavelength: float
    distance: float
    tx: ArrayGeometry
    rx: ArrayGeometry

    def normalized(self) -> np.ndarray:
        """H divided by the free-space amplitude λ/(4πD) at the nominal distance."""
        return self.H / (self.wavelength / (4.0 * math.pi * self.distance))

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.H, compute_uv=False)

    def condition_number(self) -> float:
        s = self.singular_values()
        return float(s[0] / s[-1])


def rayleigh_spacing(distance: float, wavelength: float, n_max: int) -> float:
    """Symmetric spacing d with d² = λD/n_max giving orthogonal LOS subchannels."""
    if distance <= 0 or wavelength <= 0:
        raise DomainError("distance and wavelength must be positive")
    if n_max < 2:
        raise DomainError("n_max must be at least 2")
    return math.sqrt(wavelength * distance / n_max)


def rayleigh_rx_spacing(tx_spacing: float, distance: float, wavelength: float, n_max: int) -> float:
    """Receive spacing that pairs with ``tx_spacing`` so that d_t·d_r = λD/n_max."""
    if tx_spacing <= 0:
        raise DomainError("tx spacing must be positive")
    return rayleigh_spacing(distance, wavelength, n_max) ** 2 / tx_spacing


def los_channel(tx: ArrayGeometry, rx: ArrayGeometry, wavelength: float, distance: float,
                offset=(0.0, 0.0)) -> LosChannel:
    """Spherical-wave channel between two broadside-facing arrays.

    The receive array sits at z = ``distance`` with a lateral ``offset``
    (x, y). Entry (m, n) is a·λ/(4π r_mn)·exp(-j2π r_mn/λ) with r_mn the
    exact element-to-element distance and a the element amplitude gains.
    """
    if wavelength <= 0 or distance <= 0:
        raise DomainError("wavelength and distance must be positive")
    shift = np.array([offset[0], offset[1], distance], dtype=float)
    rx_pos = rx.positions + shift
    r = np.linalg.norm(rx_pos[:, None, :] - tx.positions[None, :, :], axis=2)
    if np.any(r == 0):
        raise DomainError("transmit and receive elements collide")
    amp = math.sqrt(db_to_linear(tx.element_gain_dbi) * db_to_linear(rx.element_gain_dbi))
    H = amp * wavelength / (4.0 * math.pi * r) * np.exp(-2j * math.pi * r / wavelength)
    return LosChannel(H, wavelength, distance, tx, rx)


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT beam matrix; column k steers to spatial frequency k/n."""
    idx = np.arange(n)
    return np.exp(2j * math.pi * np.outer(idx, idx) / n) / math.sqrt(n)


def _beam_basis(geom: ArrayGeometry, wavelength: float) -> np.ndarray:
    if geom.layout is Layout.SINGLE_APERTURE or geom.n_elements == 1:
        return np.ones((1, 1), dtype=complex)
    if geom.spacing is None or not math.isclose(geom.spacing, wavelength / 2.0, rel_tol=1e-6):
        raise DomainError("beamspace needs uniform half-wavelength arrays")
    if geom.layout is Layout.LINEAR:
        return dft_matrix(geom.shape[0])
    nx, ny = geom.shape
    return np.kron(dft_matrix(nx), dft_matrix(ny))


@dataclass(frozen=True, eq=False)
class Beamspace:
    Hb: np.ndarray
    U_tx: np.ndarray
    U_rx: np.ndarray
    effective_dimension: int
    tx_beams: tuple
    rx_beams: tuple

    def to_element_space(self) -> np.ndarray:
        return self.U_rx @ self.Hb @ self.U_tx.conj().T


def _fewest_capturing(power: np.ndarray, threshold: float) -> int:
    frac = np.cumsum(np.sort(power)[::-1]) / np.sum(power)
    return int(min(np.searchsorted(frac, threshold - 1e-12) + 1, len(power)))


def beamspace(channel: LosChannel, threshold: float = 0.99) -> Beamspace:
    """Represent H in DFT beam coordinates, H_b = U_r^† H U_t.

    ``effective_dimension`` is the smallest number of singular modes holding
    at least ``threshold`` of Σσ². ``tx_beams``/``rx_beams`` list the
    strongest beams whose combined power reaches the same threshold, the
    choice a beam selector would make.
    """
    if not 0 < threshold <= 1:
        raise DomainError("threshold must lie in (0, 1]")
    U_t = _beam_basis(channel.tx, channel.wavelength)
    U_r = _beam_basis(channel.rx, channel.wavelength)
    Hb = U_r.conj().T @ channel.H @ U_t
    sv2 = np.linalg.svd(Hb, compute_uv=False) ** 2
    p = _fewest_capturing(sv2, threshold)
    tx_pow = np.sum(np.abs(Hb) ** 2, axis=0)
    rx_pow = np.sum(np.abs(Hb) ** 2, axis=1)
    tx_beams = tuple(np.argsort(tx_pow)[::-1][:_fewest_capturing(tx_pow, threshold)].tolist())
    rx_beams = tuple(np.argsort(rx_pow)[::-1][:_fewest_capturing(rx_pow, threshold)].tolist())
    return Beamspace(Hb, U_t, U_r, p, tx_beams, rx_beams)


def element_budget(aperture_side_m: float, wavelength: float) -> int:
    """Elements in a square half-wavelength planar array of the given side."""
    if aperture_side_m <= 0:
        raise DomainError("aperture side must be positive")
    per_side = math.floor(aperture_side_m / (wavelength / 2.0) + 1e-9)
    return per_side ** 2


def waterfill(gains, total_power: float) -> np.ndarray:
    """Power allocation maximizing Σ log2(1 + p_i g_i) subject to Σ p_i = total_power."""
    g = np.asarray(gains, dtype=float)
    if np.any(g <= 0) or total_power <= 0:
        raise DomainError("gains and total power must be positive")
    order = np.argsort(g)[::-1]
    inv = 1.0 / g[order]
    level = 0.0
    for k in range(len(g), 0, -1):
        level = (total_power + inv[:k].sum()) / k
        if level > inv[k - 1]:
            break
    p_sorted = np.maximum(level - inv, 0.0)
    out = np.empty_like(g)
    out[order] = p_sorted
    return out


def parallel_capacity(gains, rho: float, allocation: str = "equal") -> float:
    """Σ log2(1 + p_i g_i) over parallel streams sharing total power ρ."""
    g = np.asarray(gains, dtype=float)
    if allocation == "equal":
        p = np.full(len(g), rho / len(g))
    elif allocation == "waterfilling":
        p = waterfill(g, rho)
    else:
        raise DomainError(f"unknown power allocation {allocation!r}")
    return float(np.sum(np.log2(1.0 + p * g)))


def channel_capacity(H: np.ndarray, rho: float, allocation: str = "equal") -> float:
    """Capacity of a known MIMO channel from its squared singular values.

    Equal allocation spreads ρ over all transmit dimensions.
    """
    sv2 = np.linalg.svd(H, compute_uv=False) ** 2
    n_t = H.shape[1]
    if allocation == "equal":
        return float(np.sum(np.log2(1.0 + rho / n_t * sv2)))
    return parallel_capacity(sv2[sv2 > 0], rho, allocation)


class SystemKind(enum.Enum):
    DISH = "DISH"
    CONV_MIMO = "CONV_MIMO"
    CAP_MIMO = "CAP_MIMO"


@dataclass(frozen=True)
class SystemPreset:
    """Terminal pair description for capacity comparisons.

    DISH and CAP_MIMO use ``aperture_gain_dbi`` at both ends; CONV_MIMO uses
    ``n_antennas`` Rayleigh-spaced elements of ``element_gain_dbi`` each.
    CAP_MIMO radiates ``n_beams`` full-aperture beams; ``lens_loss_db`` is an
    optional per-beam loss. When ``max_beams`` is given (the aperture's
    half-wavelength element budget) ``n_beams`` may not exceed it.
    """

    kind: SystemKind
    aperture_gain_dbi: float = 55.0
    element_gain_dbi: float = 30.0
    n_antennas: int = 4
    n_beams: int = 4
    power_allocation: str = "equal"
    lens_loss_db: float = 0.0
    max_beams: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SystemKind(self.kind))
        if self.n_beams < 1 or self.n_antennas < 1:
            raise DomainError("beam and antenna counts must be >= 1")
        if self.max_beams is not None and self.n_beams > self.max_beams:
            raise DomainError(f"{self.n_beams} beams exceed the aperture's element budget "
                              f"of {self.max_beams}")
        if self.power_allocation not in ("equal", "waterfilling"):
            raise DomainError(f"unknown power allocation {self.power_allocation!r}")

    def stream_gains(self) -> np.ndarray:
        """Per-stream power gains seen by unit transmit power."""
        if self.kind is SystemKind.DISH:
            return np.array([db_to_linear(2 * self.aperture_gain_dbi)])
        if self.kind is SystemKind.CONV_MIMO:
            # Rayleigh spacing: n equal singular values with σ² = n·g²
            n = self.n_antennas
            return np.full(n, n * db_to_linear(2 * self.element_gain_dbi))
        g = db_to_linear(2 * self.aperture_gain_dbi - self.lens_loss_db)
        return np.full(self.n_beams, g)


def spectral_efficiency(preset: SystemPreset, rho_db: float) -> float:
    """Bandwidth efficiency (b/s/Hz) at normalized SNR ``rho_db``."""
    rho = db_to_linear(rho_db)
    return parallel_capacity(preset.stream_gains(), rho, preset.power_allocation)


def comparison_presets(aperture_gain_dbi=55.0, element_gain_dbi=30.0, n=4, p=4,
                 power_allocation="equal") -> dict:
    """DISH / CONV_MIMO / CAP_MIMO presets for the 80 GHz, 200 m comparison."""
    return {
        "dish": SystemPreset(SystemKind.DISH, aperture_gain_dbi=aperture_gain_dbi,
                             power_allocation=power_allocation),
        "conv_mimo": SystemPreset(SystemKind.CONV_MIMO, element_gain_dbi=element_gain_dbi,
                                  n_antennas=n, power_allocation=power_allocation),
        "cap_mimo": SystemPreset(SystemKind.CAP_MIMO, aperture_gain_dbi=aperture_gain_dbi,
                                 n_beams=p, power_allocation=power_allocation),
    }


def capacity_sweep(presets: dict, rho_db) -> list[dict]:
    """One row per ρ with columns rho_db, dish_bps_hz, conv_mimo_bps_hz, cap_mimo_bps_hz."""
    rows = []
    for r in np.asarray(rho_db, dtype=float):
        row = {"rho_db": float(r)}
        for name in ("dish", "conv_mimo", "cap_mimo"):
            row[f"{name}_bps_hz"] = spectral_efficiency(presets[name], float(r))
        rows.append(row)
    return rows
