import logging

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cellwell.errors import DomainError, KineticOverflowError
from cellwell.kinetics import (KineticsMode, LocalKineticState, clamp_concentrations,
                               equilibrium_potential, exchange_current_density, rate_factor,
                               reaction_current, reaction_current_deta, specific_area)
from cellwell.params import Region, load_config

P = load_config().cell


def _state(region, eta, cs_frac=0.5, ce=1000.0, T=298.15):
    cs = cs_frac * P.by_region("cs_max", region)
    u = equilibrium_potential(region, cs, T, P)
    return LocalKineticState(region, u + eta, 0.0, cs, ce, T)


def test_specific_area():
    assert specific_area(Region.NEGATIVE, P) == pytest.approx(3 * 0.58 / 12.5e-6)


def test_exchange_current_matches_power_law():
    cs = 12000.0
    expected = 2e-6 * 1000.0 ** 0.5 * (31000.0 - cs) ** 0.5 * cs ** 0.5
    assert exchange_current_density(Region.NEGATIVE, cs, 1000.0, P) == pytest.approx(
        expected, rel=1e-14)
    assert exchange_current_density(Region.NEGATIVE, 0.0, 1000.0, P) == 0.0
    assert exchange_current_density(Region.NEGATIVE, 31000.0, 1000.0, P) == 0.0


def test_domain_errors():
    with pytest.raises(DomainError):
        equilibrium_potential(Region.SEPARATOR, 100.0, 298.15, P)
    with pytest.raises(DomainError):
        equilibrium_potential(Region.NEGATIVE, 32000.0, 298.15, P)
    with pytest.raises(DomainError):
        exchange_current_density(Region.POSITIVE, -1.0, 1000.0, P)
    with pytest.raises(DomainError):
        KineticsMode.parse("tafel")


def test_equilibrium_temperature_correction():
    cs = 0.5 * P.cs_max_pos
    u0 = equilibrium_potential(Region.POSITIVE, cs, P.T_ref, P)
    u1 = equilibrium_potential(Region.POSITIVE, cs, P.T_ref + 10.0, P)
    assert u1 - u0 == pytest.approx(10.0 * float(P.ocv_pos.dudt(0.5)), rel=1e-10)


def test_separator_has_no_reaction():
    st_ = LocalKineticState(Region.SEPARATOR, 1.0, 0.0, 0.0, 1000.0, 298.15)
    assert reaction_current(st_, "butler-volmer", P) == 0.0
    assert reaction_current_deta(st_, "linearized", P) == 0.0


def test_zero_overpotential_gives_zero_current():
    for region in (Region.NEGATIVE, Region.POSITIVE):
        assert reaction_current(_state(region, 0.0), KineticsMode.BUTLER_VOLMER, P) == 0.0


@pytest.mark.parametrize("region", [Region.NEGATIVE, Region.POSITIVE])
def test_derivative_matches_centered_differences(region):
    h = 1e-6
    worst = 0.0
    for eta in np.linspace(-0.3, 0.3, 61):
        analytic = reaction_current_deta(_state(region, eta), "butler-volmer", P)
        fd = (reaction_current(_state(region, eta + h), "butler-volmer", P)
              - reaction_current(_state(region, eta - h), "butler-volmer", P)) / (2 * h)
        worst = max(worst, abs(fd - analytic) / abs(analytic))
    assert worst < 1e-6


def test_linearized_is_tangent_at_zero():
    f = P.F / (P.R_gas * 298.15)
    _, de_bv = rate_factor(0.0, 298.15, P, KineticsMode.BUTLER_VOLMER)
    e_lin, de_lin = rate_factor(1e-3, 298.15, P, KineticsMode.LINEARIZED)
    assert de_bv == pytest.approx(de_lin, rel=1e-14)
    assert e_lin == pytest.approx((P.alpha_a + P.alpha_c) * f * 1e-3, rel=1e-14)


def test_overflow_guard_names_cell():
    eta = np.zeros(5)
    eta[3] = 100.0
    with pytest.raises(KineticOverflowError) as info:
        rate_factor(eta, 298.15, P)
    assert info.value.cell == 3


def test_clamping_logs_distance(caplog):
    with caplog.at_level(logging.DEBUG, logger="cellwell.kinetics"):
        ce, cs = clamp_concentrations(np.array([0.0, 5.0]), np.array([0.0, 100.0]), 100.0, 1000.0)
    assert ce[0] > 0 and 0 < cs[0] and cs[1] < 100.0
    assert "clamped" in caplog.text


# eta below the resolution of phi_s (~1e-16 V) is lost when forming phi_s - phi_e - U
@given(st.floats(-0.4, 0.4).filter(lambda e: abs(e) > 1e-12), st.floats(0.05, 0.95),
       st.floats(100.0, 3000.0))
def test_current_has_sign_of_overpotential(eta, frac, ce):
    j = reaction_current(_state(Region.POSITIVE, eta, frac, ce), "butler-volmer", P)
    assert np.sign(j) == np.sign(eta)
    assert reaction_current_deta(_state(Region.POSITIVE, eta, frac, ce), "butler-volmer", P) > 0


@given(st.floats(0.0, 0.4))
def test_symmetric_transfer_gives_odd_rate(eta):
    e_plus, _ = rate_factor(eta, 298.15, P)
    e_minus, _ = rate_factor(-eta, 298.15, P)
    assert e_plus == pytest.approx(-e_minus, rel=1e-12, abs=1e-300)
