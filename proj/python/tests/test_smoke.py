import math

import mpmath
import pytest

import finitekey as fk


def test_channel_weights():
    assert fk.channel_weights(0) == [1.0, 0.0, 0.0, 0.0]
    assert fk.channel_weights("0.1") == pytest.approx([0.85, 0.05, 0.05, 0.05], rel=1e-15)
    with pytest.raises(ValueError):
        fk.channel_weights(0.5)


def test_spectra():
    pairs, kernel = fk.block_spectrum(0.1, 2)
    assert pairs == pytest.approx([(0.01, 1), (0.09, 2), (0.81, 1)], rel=1e-15)
    assert kernel == 12
    assert fk.spectrum_e(0.1, 1) == pytest.approx([(0.05, 3), (0.85, 1)], rel=1e-15)


def test_full_state_s2_closed_form():
    e = mpmath.mpf("0.05")
    for n in (1, 10, 1000):
        expect = n * (1 - mpmath.log((1 - e) ** 2 + e**2, 2))
        assert fk.full_state_s2("0.05", n) == pytest.approx(float(expect), rel=1e-15)


def test_smoothed_entropies():
    assert fk.modified_s2(0.1, 1, 0.1) == pytest.approx(1 - math.log2(0.73375), rel=1e-15)
    assert fk.smooth_s0("0.05", 500, 0) == 1000
    opt = fk.smooth_s2_optimal("0.05", 10000, "1e-16", resolve_gap=True)
    assert opt["raised_levels"] > 0
    assert opt["gap_log10"] < -1000
    assert fk.smooth_s2_optimal(0.1, 2, 1e-6)["gap_log10"] == -math.inf


def test_lower_and_upper_bounds():
    lo = fk.lower_bound("0.05", 10000, "1e-9")
    assert lo["eps_hat"] == pytest.approx(5e-10)
    assert lo["value"] == pytest.approx(lo["s2bar"] - lo["s0"] - lo["eps_hat"])
    assert lo["value"] < fk.upper_bound("0.05", 10000, "1e-9")


def test_aep_entropy():
    assert fk.aep_entropy(0) == 1.0
    assert fk.aep_entropy("0.05") == pytest.approx(0.78321322543537233, rel=1e-15)


def test_rate_and_optimizer():
    r = fk.rate("renyi", 1_000_000, 0.01, p_z=0.6, eps_pe="3e-10", eps_pa="3e-10")
    assert (r["n"], r["m"]) == (320000, 40000)
    assert r["rate"] > 0
    assert r["ell"] == pytest.approx(r["rate"] * 1_000_000)

    best = fk.maximize_rate("renyi", 100_000, 0.01)
    assert best["rate"] > 0
    assert best["eps_pe"] + best["eps_pa"] + best["eps_bar"] == pytest.approx(9e-10)


def test_errors():
    with pytest.raises(fk.InfeasibleError):
        fk.rate("renyi", 100_000, 0.49, p_z=0.8, eps_pe="3e-10", eps_pa="3e-10")
    with pytest.raises(ValueError):
        fk.rate("shannon", 100_000, 0.01, p_z=0.8, eps_pe="3e-10", eps_pa="3e-10")
    with pytest.raises(ValueError):
        fk.modified_s2(0.1, 0, 0.1)
