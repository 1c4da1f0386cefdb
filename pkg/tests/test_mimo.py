import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from eband.core import DomainError, wavelength
from eband.mimo import (ArrayGeometry, SystemKind, SystemPreset, beamspace, capacity_sweep, channel_capacity,
                        dft_matrix, element_budget, comparison_presets, los_channel, parallel_capacity,
                        rayleigh_rx_spacing, rayleigh_spacing, spectral_efficiency, waterfill)

LAM = wavelength(80e9)
D = 200.0


def _oracle_channel(n, spacing, lam, dist):
    # element-by-element spherical-wave path lengths
    ys = [(i - (n - 1) / 2) * spacing for i in range(n)]
    H = np.empty((n, n), dtype=complex)
    for m, yr in enumerate(ys):
        for k, yt in enumerate(ys):
            r = math.sqrt(dist ** 2 + (yr - yt) ** 2)
            H[m, k] = lam / (4 * math.pi * r) * complex(math.cos(-2 * math.pi * r / lam), math.sin(-2 * math.pi * r / lam))
    return H


def test_rayleigh_spacing_orthogonalizes_4x4():
    d = rayleigh_spacing(D, LAM, 4)
    assert d == pytest.approx(math.sqrt(LAM * D / 4))
    g = ArrayGeometry.linear(4, d)
    ch = los_channel(g, g, LAM, D)
    assert np.allclose(ch.H, _oracle_channel(4, d, LAM, D))
    assert ch.condition_number() <= 1.05
    assert rayleigh_rx_spacing(d, D, LAM, 4) == pytest.approx(d)


def test_compact_array_is_ill_conditioned():
    g = ArrayGeometry.linear(4, LAM)
    assert los_channel(g, g, LAM, D).condition_number() > 1e3


def test_capacity_of_orthogonal_channel_matches_parallel_streams():
    d = rayleigh_spacing(D, LAM, 4)
    gain_dbi = 30.0
    g = ArrayGeometry.linear(4, d, gain_dbi)
    ch = los_channel(g, g, LAM, D)
    rho = 1e6
    ref = 4 * math.log2(1 + rho / 4 * 4 * 10 ** (2 * gain_dbi / 10) * (LAM / (4 * math.pi * D)) ** 2)
    assert channel_capacity(ch.H, rho) == pytest.approx(ref, rel=1e-3)


def test_element_budget_6_inch_aperture():
    n = element_budget(0.1524, LAM)
    assert n == 81 ** 2
    assert abs(n - 6400) / 6400 < 0.10
    with pytest.raises(DomainError):
        element_budget(0.0, LAM)


def test_beamspace_effective_dimension_of_dense_aperture():
    d = rayleigh_spacing(D, LAM, 4)
    n = int(round(3 * d / (LAM / 2))) + 1
    g = ArrayGeometry.linear(n, LAM / 2)
    bs = beamspace(los_channel(g, g, LAM, D), 0.99)
    assert bs.effective_dimension == 4
    assert np.allclose(bs.to_element_space(), los_channel(g, g, LAM, D).H)


def test_beamspace_requires_half_wavelength():
    g = ArrayGeometry.linear(8, LAM)
    with pytest.raises(DomainError):
        beamspace(los_channel(g, g, LAM, D))


def test_dft_matrix_unitary():
    U = dft_matrix(16)
    assert np.allclose(U.conj().T @ U, np.eye(16))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=8), st.floats(1e-3, 1e3))
def test_waterfill_kkt(gains, power):
    g = np.array(gains)
    p = waterfill(g, power)
    assert p.sum() == pytest.approx(power, rel=1e-9)
    assert np.all(p >= 0)
    active = p > 1e-12
    level = (p + 1 / g)[active]
    assert np.allclose(level, level[0], rtol=1e-9)
    assert np.all(1 / g[~active] >= level[0] * (1 - 1e-9))
    assert parallel_capacity(g, power, "waterfilling") >= parallel_capacity(g, power, "equal") - 1e-12


def test_presets_and_validation():
    assert SystemPreset("DISH").stream_gains() == pytest.approx([10 ** 11])
    conv = SystemPreset(SystemKind.CONV_MIMO, element_gain_dbi=30.0, n_antennas=4).stream_gains()
    assert conv == pytest.approx([4e6] * 4)
    with pytest.raises(DomainError):
        SystemPreset(SystemKind.CAP_MIMO, n_beams=10, max_beams=4)
    with pytest.raises(DomainError):
        SystemPreset(SystemKind.DISH, power_allocation="greedy")


def test_capacity_sweep_properties():
    rows = capacity_sweep(comparison_presets(), np.linspace(-40, 60, 101))
    assert len(rows) == 101
    for r in rows:
        assert r["cap_mimo_bps_hz"] >= max(r["dish_bps_hz"], r["conv_mimo_bps_hz"]) - 1e-9
    top = rows[-1]
    assert top["conv_mimo_bps_hz"] > top["dish_bps_hz"]
    conv = comparison_presets()["conv_mimo"]
    slope = spectral_efficiency(conv, 60.0 + 10 * math.log10(2)) - spectral_efficiency(conv, 60.0)
    assert slope == pytest.approx(4.0, abs=0.01)


def test_spacing_reference_values():
    assert rayleigh_spacing(200.0, LAM80 := wavelength(80e9), 4) == pytest.approx(0.433, abs=1e-3)
    assert rayleigh_spacing(200.0, wavelength(320e9), 4) == pytest.approx(rayleigh_spacing(200.0, LAM80, 4) / 2)


def test_single_link_is_friis():
    tx, rx = ArrayGeometry.single_aperture(30.0), ArrayGeometry.single_aperture(20.0)
    ch = los_channel(tx, rx, LAM, D)
    assert abs(ch.H[0, 0]) == pytest.approx(LAM / (4 * math.pi * D) * 10 ** (50 / 20))


def test_colocated_and_orthogonal_singular_values():
    tiny = ArrayGeometry.linear(4, 1e-6)
    s = los_channel(tiny, tiny, LAM, D).singular_values()
    assert s[1] / s[0] < 1e-3
    g = ArrayGeometry.linear(4, rayleigh_spacing(D, LAM, 4))
    s = los_channel(g, g, LAM, D).singular_values()
    assert s.max() / s.min() - 1 < 0.05


def test_beamspace_power_and_rank_one():
    g = ArrayGeometry.linear(16, LAM / 2)
    ch = los_channel(g, g, LAM, 5000.0)
    bs = beamspace(ch)
    assert np.linalg.norm(bs.Hb) == pytest.approx(np.linalg.norm(ch.H), rel=1e-9)
    assert bs.effective_dimension == 1
    assert bs.tx_beams[0] == 0 and bs.rx_beams[0] == 0
    assert np.allclose(bs.to_element_space(), ch.H, rtol=1e-9, atol=0)


def test_planar_beamspace_round_trip():
    g = ArrayGeometry.planar(4, 4, LAM / 2)
    ch = los_channel(g, g, LAM, 2.0)
    bs = beamspace(ch)
    assert np.allclose(bs.to_element_space(), ch.H)


def test_element_budget_small_cases():
    assert element_budget(LAM / 2, LAM) == 1
    assert element_budget(10 * LAM, LAM) == 400


def test_presets_increase_in_rho_and_single_beam_cap_is_dish():
    presets = comparison_presets()
    rho = np.linspace(-60, 80, 71)
    for p in presets.values():
        c = [spectral_efficiency(p, r) for r in rho]
        assert all(b > a for a, b in zip(c, c[1:]))
    cap1 = SystemPreset(SystemKind.CAP_MIMO, n_beams=1)
    for r in rho:
        assert spectral_efficiency(cap1, r) == spectral_efficiency(presets["dish"], r)


def test_cap_over_dish_tends_to_one_at_vanishing_snr():
    presets = comparison_presets()
    ratio = spectral_efficiency(presets["cap_mimo"], -150.0) / spectral_efficiency(presets["dish"], -150.0)
    assert ratio == pytest.approx(1.0, abs=1e-3)


def test_waterfilling_equals_equal_power_for_equal_gains():
    g = np.full(4, 3.0)
    assert parallel_capacity(g, 10.0, "waterfilling") == pytest.approx(parallel_capacity(g, 10.0, "equal"))
    H = np.random.default_rng(0).standard_normal((4, 4))
    assert channel_capacity(H, 5.0, "waterfilling") >= channel_capacity(H, 5.0, "equal") - 1e-12


def test_svd_capacity_matches_conv_formula():
    gain_dbi = 30.0
    g = ArrayGeometry.linear(4, rayleigh_spacing(D, LAM, 4), gain_dbi)
    H = los_channel(g, g, LAM, D).normalized()
    conv = SystemPreset(SystemKind.CONV_MIMO, element_gain_dbi=gain_dbi, n_antennas=4)
    for rho_db in (-40.0, 0.0, 30.0):
        rho = 10 ** (rho_db / 10)
        assert channel_capacity(H, rho) == pytest.approx(spectral_efficiency(conv, rho_db), rel=0.02)
