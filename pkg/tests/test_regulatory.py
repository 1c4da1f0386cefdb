import pytest
from hypothesis import given, strategies as st

from eband.core import DomainError
from eband.linkbudget import LinkScenario
from eband.regulatory import (Domain, RegulatoryDomain, cept_channel_plan, check_compliance, check_scenario,
                              fcc_channel_plan, fdd_pair)


def test_limits_are_exact():
    fcc, cept = Domain.FCC.value, Domain.CEPT.value
    assert (fcc.max_eirp_dbw, fcc.max_tx_power_dbm, fcc.min_antenna_gain_dbi, fcc.max_oob_dbm) == (55, 35, 43, -13)
    assert (cept.max_eirp_dbw, cept.max_tx_power_dbm, cept.min_antenna_gain_dbi, cept.max_oob_dbm) == (55, 30, 38, -30)


@pytest.mark.parametrize("domain,tx,gain,ok", [
    ("FCC", 35.0, 50.0, True), ("FCC", 35.01, 50.0, False), ("FCC", 30.0, 42.99, False),
    ("FCC", 35.0, 50.01, False), ("CEPT", 30.0, 38.0, True), ("CEPT", 30.5, 40.0, False),
    ("CEPT", 20.0, 37.9, False), ("cept", 30.0, 55.0, True),
])
def test_rule_boundaries(domain, tx, gain, ok):
    assert check_compliance(tx, gain, domain).passed is ok


def test_oob_rule_only_when_declared():
    rep = check_compliance(20.0, 45.0, "FCC")
    oob = [r for r in rep.rules if r.name == "max_oob_emission_dbm"][0]
    assert oob.passed is None and rep.passed
    assert not check_compliance(20.0, 45.0, "CEPT", oob_emission_dbm=-20.0).passed
    assert check_compliance(20.0, 45.0, "FCC", oob_emission_dbm=-20.0).passed


def test_report_dict_and_scenario():
    s = LinkScenario(73.5e9, 1000.0, 18.6, 43.0, 43.0)
    d = check_scenario(s, "FCC").to_dict()
    assert d["eirp_dbm"] == pytest.approx(61.6)
    assert d["pass"] is True
    assert {r["name"] for r in d["rules"]} == {"max_eirp_dbm", "max_tx_power_dbm", "min_antenna_gain_dbi",
                                              "max_oob_emission_dbm"}


def test_gain_schedule_hook():
    # EIRP cap drops 5 dB per dB of gain below 45 dBi
    dom = RegulatoryDomain("X", 55.0, 30.0, 38.0, -30.0,
                           gain_schedule=lambda g: (55.0 - 5.0 * max(0.0, 45.0 - g), 30.0))
    assert not check_compliance(30.0, 40.0, dom).passed
    assert check_compliance(30.0, 45.0, dom).passed
    with pytest.raises(DomainError):
        Domain.parse("ETSI")


@pytest.mark.parametrize("band,lo", [("low", 71e9), ("high", 81e9)])
def test_cept_plan(band, lo):
    plan = cept_channel_plan(band)
    assert len(plan) == 19
    assert all(c.width_hz == 250e6 for c in plan.channels)
    assert plan.channels[0].low_hz - lo == 125e6
    assert lo + 5e9 - plan.channels[-1].high_hz == 125e6
    for a, b in zip(plan.channels, plan.channels[1:]):
        assert a.high_hz == b.low_hz


def test_channel_lookup_and_pairs():
    low, high = cept_channel_plan("low"), cept_channel_plan("high")
    a, b = fdd_pair(low, high, 1)
    assert (a.center_hz, b.center_hz) == (71.25e9, 81.25e9)
    assert low.channel(19).center_hz == 75.75e9
    with pytest.raises(DomainError):
        low.channel(20)
    with pytest.raises(DomainError):
        cept_channel_plan("mid")
    assert len(fcc_channel_plan("high")) == 1


def test_fcc_boundary_case_is_55_dbw():
    rep = check_compliance(35.0, 50.0, "FCC")
    assert rep.eirp_dbm == 85.0 and rep.passed


def test_plan_closure_and_progression():
    for band in ("low", "high"):
        plan = cept_channel_plan(band)
        assert sum(c.width_hz for c in plan.channels) + 2 * plan.guard_hz == 5e9
        centers = [c.center_hz for c in plan.channels]
        assert all(b - a == 250e6 for a, b in zip(centers, centers[1:]))
    a, b = fdd_pair(cept_channel_plan("low"), cept_channel_plan("high"), 19)
    assert (a.center_hz, b.center_hz) == (75.75e9, 85.75e9)
    with pytest.raises(DomainError):
        fdd_pair(cept_channel_plan("low"), cept_channel_plan("high"), 20)


@given(st.floats(-10, 40), st.floats(30, 60), st.floats(0.0, 10.0))
def test_lower_power_never_breaks_power_rules(tx, gain, drop):
    power_rules = ("max_eirp_dbm", "max_tx_power_dbm")
    for dom in ("FCC", "CEPT"):
        hi = {r.name: r.passed for r in check_compliance(tx, gain, dom).rules}
        lo = {r.name: r.passed for r in check_compliance(tx - drop, gain, dom).rules}
        for name in power_rules:
            assert lo[name] or not hi[name]
