import math

import pytest
from hypothesis import given, strategies as st

from sagin_sfc import channel as ch
from sagin_sfc.fixtures import DEFAULT_CHANNEL

G2U = DEFAULT_CHANNEL.g2u
A2A = DEFAULT_CHANNEL.a2a
S2G = DEFAULT_CHANNEL.s2g

# reference values from a 50-digit mpmath evaluation of the formulas
REF_ELEV = 21.80140948635181177
REF_A = 113.08635207831786093
REF_BRACKET = 105.05727449069112834
REF_G2U_SNR = 312.08475252752072704
REF_G2U_LITERAL = 1050572744906911.2834
REF_G2U_RATE = 16580818.879169048734
REF_A2A_LINEAR = 1439946346258.4571516
REF_A2A_SQUARED = 1717620.2571953028582
REF_A2A_RATE = 403891521.95157951178
REF_S2G = 220.0

GROUND = (0.0, 0.0, 0.0)
AIR = (300.0, 400.0, 200.0)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def test_sigmoid_at_inflection():
    p = G2U
    assert ch.g2u_los_db(p.alpha, p) == pytest.approx((p.eta_los_db - p.eta_nlos_db) / (1 + p.alpha), rel=1e-12)


def test_elevation_directly_overhead_is_90():
    assert ch.elevation_deg((0, 0, 0), (0, 0, 150.0)) == pytest.approx(90.0, rel=1e-12)


def test_elevation_level_is_zero():
    assert ch.elevation_deg((0, 0, 0), (100.0, 0, 0)) == 0.0


@pytest.mark.parametrize("tx,rx", [((0, 0, 0), (0, 0, 0)), ((0, 0, 100.0), (10.0, 0, 0))])
def test_elevation_domain_errors(tx, rx):
    with pytest.raises(ch.ChannelDomainError):
        ch.elevation_deg(tx, rx)


def test_g2u_spot_values():
    assert rel(ch.elevation_deg(GROUND, AIR), REF_ELEV) < 1e-9
    assert rel(ch.g2u_fspl_db(math.dist(GROUND, AIR), G2U.carrier_mhz, G2U.eta_nlos_db), REF_A) < 1e-9
    assert rel(ch.g2u_bracket_db(G2U, GROUND, AIR), REF_BRACKET) < 1e-9
    assert rel(ch.snr_g2u(G2U, GROUND, AIR), REF_G2U_SNR) < 1e-9
    assert rel(ch.snr_g2u(G2U, GROUND, AIR, ch.G2U_LITERAL), REF_G2U_LITERAL) < 1e-9
    assert rel(ch.link_rate(ch.snr_g2u(G2U, GROUND, AIR), G2U.bandwidth_hz), REF_G2U_RATE) < 1e-9


def test_fspl_base_ten():
    # 4*pi*d*f_c/300 = 10 -> 20 dB plus eta_NL
    d = 10 * 300 / (4 * math.pi * 2000.0)
    assert ch.g2u_fspl_db(d, 2000.0, 7.0) == pytest.approx(27.0, rel=1e-12)


def test_a2a_spot_values():
    assert rel(ch.snr_a2a(A2A, 1000.0), REF_A2A_LINEAR) < 1e-9
    assert rel(ch.snr_a2a(A2A, 1000.0, ch.A2A_SQUARED), REF_A2A_SQUARED) < 1e-9
    assert rel(ch.link_rate(ch.snr_a2a(A2A, 1000.0), A2A.bandwidth_hz), REF_A2A_RATE) < 1e-9


def test_a2a_zero_distance():
    with pytest.raises(ch.ChannelDomainError):
        ch.snr_a2a(A2A, 0.0)


def test_s2g_spot_value():
    assert rel(ch.snr_s2g(S2G), REF_S2G) < 1e-9


def test_shannon_identities():
    assert ch.link_rate(0.0, 5e6) == 0.0
    assert ch.link_rate(1.0, 5e6) == pytest.approx(5e6, rel=1e-12)
    assert ch.link_rate(3.0, 1.0) == pytest.approx(2.0, rel=1e-12)
    with pytest.raises(ValueError):
        ch.link_rate(-1.0, 1.0)


def test_parameter_validation():
    with pytest.raises(ValueError):
        ch.S2GParams(1, 1, 1, 1.5, 0.5, 1e-21, 1e6)
    with pytest.raises(ValueError):
        ch.ChannelParams(G2U, A2A, S2G, g2u_model="nope")


@given(st.floats(1.0, 1e6), st.floats(1.0, 1e6))
def test_a2a_decreases_with_distance(d1, d2):
    lo, hi = sorted((d1, d2))
    assert ch.snr_a2a(A2A, lo) >= ch.snr_a2a(A2A, hi)
    assert ch.snr_a2a(A2A, lo, ch.A2A_SQUARED) >= ch.snr_a2a(A2A, hi, ch.A2A_SQUARED)


@given(st.floats(0.0, 1e12), st.floats(1.0, 1e9))
def test_rate_nonnegative_and_monotone(snr, bw):
    r = ch.link_rate(snr, bw)
    assert r >= 0
    assert ch.link_rate(snr * 2 + 1, bw) >= r


@given(st.floats(-2000, 2000), st.floats(-2000, 2000), st.floats(50, 500))
def test_g2u_snr_positive_finite(x, y, h):
    s = ch.snr_g2u(G2U, (0.0, 0.0, 0.0), (x, y, h))
    assert s > 0 and math.isfinite(s)
