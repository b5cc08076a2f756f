import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mgmodes.kkmodes import (
    KKParams, ModeField, Signature, SingularRadiusError, compactification_radius, effective_mass,
    mode_decompose, mode_reconstruct, projected_increment, quantized_momentum, sample_mode, shift_field,
)


def direct_coefficients(samples):
    """O(N^2) sum c_n = (1/N) sum_k f_k exp(-2 pi i n k / N)."""
    n = len(samples)
    out = []
    for idx in range(n):
        acc = 0j
        for k, f in enumerate(samples):
            acc += f * complex(math.cos(-2 * math.pi * idx * k / n), math.sin(-2 * math.pi * idx * k / n))
        out.append(acc / n)
    return np.array(out)


@given(mass=st.floats(0, 10), c=st.floats(0.1, 10), gamma=st.floats(1, 5), l=st.floats(0.01, 10),
       sig=st.sampled_from(list(Signature)))
def test_zero_mode_mass_exact(mass, c, gamma, l, sig):
    p = KKParams(l, mass, c, gamma, sig)
    assert effective_mass(p, 0) == mass**2 * c**2


def test_effective_mass_example():
    p = KKParams(l=1 / (2 * math.pi), mass=0.0, gamma=1.0)
    assert effective_mass(p, 3) == pytest.approx(9.0, rel=1e-14)


def test_timelike_sign():
    p = KKParams(l=1 / (2 * math.pi), mass=2.0, c=1.0, signature="timelike")
    assert effective_mass(p, 1) == pytest.approx(4.0 - 1.0, rel=1e-14)


def test_spacelike_monotone_and_shift():
    p = KKParams(l=0.7, mass=1.3, c=2.0, gamma=1.5)
    values = [effective_mass(p, n) for n in range(11)]
    assert all(b >= a for a, b in zip(values, values[1:]))
    for n in range(11):
        assert values[n] - values[0] == pytest.approx(p.gamma**2 * n**2 / (2 * math.pi * p.l) ** 2, rel=1e-12)


@pytest.mark.parametrize("kw", [dict(l=0), dict(gamma=0.5), dict(c=0), dict(mass=-1)])
def test_kk_params_invariants(kw):
    with pytest.raises(ValueError):
        KKParams(**kw)


def test_quantized_momentum():
    assert quantized_momentum(0, 3.0) == 0
    assert quantized_momentum(5, 2.0) == 2.5
    with pytest.raises(ValueError):
        quantized_momentum(1, 0.0)
    with pytest.raises(ValueError):
        quantized_momentum(1, -2.0)


@given(n=st.integers(-10**6, 10**6), radius=st.floats(1e-3, 1e3))
def test_momentum_times_radius(n, radius):
    assert quantized_momentum(n, radius) * radius == pytest.approx(n, rel=1e-15, abs=0)


def test_radius_examples():
    assert compactification_radius(0.005, 0.005, 1.0) == pytest.approx(100.0, rel=1e-12)
    assert compactification_radius(-0.02, 0.0, 1.0) == pytest.approx(-50.0, rel=1e-12)
    with pytest.raises(SingularRadiusError):
        compactification_radius(0.3, -0.3, 0.1)
    with pytest.raises(ValueError):
        compactification_radius(0.3, 0.1, 0.0)


@given(drift=st.floats(-5, 5), vol=st.floats(-5, 5), dt=st.floats(1e-6, 1))
def test_projection_recovers_increment(drift, vol, dt):
    inc = (drift + vol) * dt
    if inc == 0:
        return
    radius = compactification_radius(drift, vol, dt)
    assert isinstance(radius, Fraction)
    back = projected_increment(1, radius)
    assert back == inc
    if radius > 0:
        assert quantized_momentum(1, radius) == inc


def test_constant_field_has_only_zero_mode():
    c = mode_decompose(ModeField(np.full(32, 2.5 + 1j), 2 * math.pi))
    assert c[0] == pytest.approx(2.5 + 1j, abs=1e-15)
    assert np.max(np.abs(c[1:])) <= 1e-15


def test_single_mode_orthogonality():
    c = mode_decompose(sample_mode(3, 0.8, 64))
    others = np.delete(np.abs(c), 3)
    assert abs(c[3] - 1) <= 1e-12 and np.max(others) <= 1e-12


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), power=st.integers(1, 7))
def test_round_trip_against_direct_sum(seed, power):
    rng = np.random.default_rng(seed)
    n = 2**power
    samples = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    field = ModeField(samples, 2 * math.pi * 1.7)
    coeffs = mode_decompose(field)
    oracle = direct_coefficients(samples)
    scale = np.max(np.abs(oracle))
    assert np.max(np.abs(coeffs - oracle)) / scale <= 1e-12
    back = mode_reconstruct(coeffs, field.period, n)
    assert np.max(np.abs(back.samples - samples)) / np.max(np.abs(samples)) <= 1e-12
    parseval = np.sum(np.abs(samples) ** 2) / n
    assert abs(parseval - np.sum(np.abs(coeffs) ** 2)) / parseval <= 1e-12


def test_period_shift_leaves_coefficients():
    rng = np.random.default_rng(5)
    field = ModeField(rng.standard_normal(64) + 0j, 3.0)
    for k in (1, -2, 7):
        assert np.array_equal(mode_decompose(shift_field(field, k)), mode_decompose(field))


def test_field_validation():
    with pytest.raises(ValueError):
        ModeField(np.zeros(12), 1.0)
    with pytest.raises(ValueError):
        ModeField(np.zeros(1), 1.0)
    with pytest.raises(ValueError):
        ModeField(np.zeros(8), 0.0)
    with pytest.raises(ValueError):
        mode_reconstruct(np.zeros(8), 1.0, 16)
