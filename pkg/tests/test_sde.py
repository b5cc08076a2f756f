import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mgmodes import kernels, sde
from mgmodes.model import ModeIndex, ModelParams, RiskNeutralParams, ValidationError

from conftest import bs_params


def ci99(rho, n):
    return 2.5758 * (1 - rho * rho) / math.sqrt(n)


def test_philox_matches_numpy_bit_generator():
    # numpy's Philox increments the counter before producing each block
    for seed, step, path in [(0, 1, 0), (12345, 7, 99), (2**64 - 1, 2**40, 3)]:
        bg = np.random.Philox(counter=[step - 1, path, 0, 0], key=np.array([seed, kernels.STREAM_KEY], dtype=np.uint64))
        expected = bg.random_raw(4)
        got = kernels.philox4x64([step, path, 0, 0], [seed, int(kernels.STREAM_KEY)])
        assert [int(x) for x in got] == [int(x) for x in expected]


def test_philox_known_answer():
    # Random123 known-answer vector for philox4x64-10 with zero counter and key
    out = kernels.philox4x64([0, 0, 0, 0], [0, 0])
    assert [int(x) for x in out] == [
        0x16554D9ECA36314C, 0xDB20FE9D672D0FDC, 0xD7E772CEE186176B, 0x7E68B68AEC7BA23B,
    ]


def test_noise_rho_one_is_identical():
    nm = sde.gen_noise(100, 50, 0.01, 1.0, seed=3)
    assert np.array_equal(nm.r_increments, nm.q_increments)


@pytest.mark.parametrize("rho", [-0.5, 0.0, 0.7])
def test_noise_fidelity(rho):
    nm = sde.gen_noise(10_000, 100, 0.004, rho, seed=5)
    stats = sde.noise_stats(nm)
    assert stats["count"] == 1_000_000
    assert abs(stats["var_r"] / 0.004 - 1) < 0.01
    assert abs(stats["var_q"] / 0.004 - 1) < 0.01
    assert abs(stats["corr"] - rho) < ci99(rho, stats["count"])


def test_noise_is_prefix_stable():
    small = sde.gen_noise(10, 20, 0.01, 0.3, seed=77)
    large = sde.gen_noise(1000, 20, 0.01, 0.3, seed=77)
    assert np.array_equal(small.r_increments, large.r_increments[:10])
    assert np.array_equal(small.q_increments, large.q_increments[:10])


def test_noise_seed_changes_draws():
    a = sde.gen_noise(5, 5, 0.01, 0.0, seed=1).r_increments
    b = sde.gen_noise(5, 5, 0.01, 0.0, seed=2).r_increments
    assert not np.array_equal(a, b)


@pytest.mark.parametrize("bad", [dict(rho=1.01), dict(paths=0), dict(dt=0.0), dict(seed=-1)])
def test_noise_domain(bad):
    kw = dict(paths=2, steps=2, dt=0.01, rho=0.0, seed=0)
    kw.update(bad)
    with pytest.raises(ValueError):
        sde.gen_noise(**kw)


@pytest.mark.parametrize("scheme", ["euler", "log-euler"])
def test_frozen_variance(scheme):
    p = ModelParams(phi=0.1, mu=0.0, v0=0.04, xi=0.0)
    ps = sde.simulate(p, ModeIndex(1, 1), 100.0, 50, 20, 0.01, scheme, seed=1)
    assert np.all(ps.v == 0.04)
    assert np.all(ps.s[:, 0] == 100.0)
    assert ps.measure is sde.Measure.REAL_WORLD


def test_ground_mode_is_constant():
    ps = sde.simulate(ModelParams(phi=0.3, mu=0.2, xi=0.5, rho=0.4), ModeIndex(0, 0), 100.0, 20, 30, 0.01, seed=4)
    assert np.all(ps.s == 100.0) and np.all(ps.v == 0.04)
    st_ = sde.sample_stats(ps)
    assert np.all(st_.var_s == 0) and np.all(st_.var_v == 0)


def test_martingale():
    rn = bs_params(xi=0.3, rho=-0.5)
    term = sde.simulate_terminal(rn, None, 100.0, 100_000, 50, 0.02, seed=9)
    disc = term.s * math.exp(-0.05)
    se = disc.std(ddof=1) / math.sqrt(disc.size)
    assert abs(disc.mean() - 100.0) < 3 * se


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**64 - 1), xi=st.floats(0, 2), rho=st.floats(-1, 1))
def test_log_euler_positivity(seed, xi, rho):
    rn = RiskNeutralParams(0.05, 0.1, xi, rho, ModeIndex(2, 3), 0.3)
    ps = sde.simulate(rn, None, 50.0, 64, 50, 0.02, "log-euler", seed)
    assert ps.s.min() > 0 and ps.v.min() > 0
    assert ps.clamp_count == 0


def test_euler_clamps_are_counted():
    rn = RiskNeutralParams(0.0, 0.0, 3.0, 0.0, ModeIndex(1, 2), 0.04)
    ps = sde.simulate(rn, None, 100.0, 2000, 20, 0.05, "euler", seed=2)
    assert ps.clamp_count > 0
    assert ps.clamp_count == int(ps.clamps_per_path.sum())
    assert ps.v.min() >= 0.0 and ps.s.min() >= 0.0


def test_mode_scaling_pathwise():
    # xi = 0: mode (n, 0) with (phi, sigma) equals mode (1, 0) with (n phi, n sigma)
    n = 3
    v0 = 0.04
    a = sde.simulate(ModelParams(phi=0.07, v0=v0), ModeIndex(n, 0), 100.0, 200, 40, 0.01, seed=21)
    b = sde.simulate(ModelParams(phi=n * 0.07, v0=n * n * v0), ModeIndex(1, 0), 100.0, 200, 40, 0.01, seed=21)
    np.testing.assert_allclose(a.s, b.s, rtol=1e-12)


def test_terminal_matches_full_paths():
    rn = bs_params(xi=0.4, rho=0.3)
    full = sde.simulate(rn, None, 100.0, 300, 25, 0.04, seed=8)
    term = sde.simulate_terminal(rn, None, 100.0, 300, 25, 0.04, seed=8)
    assert np.array_equal(full.s[:, -1], term.s)
    assert np.array_equal(full.v[:, -1], term.v)


def test_simulation_deterministic():
    rn = bs_params(xi=0.3, rho=-0.5)
    a = sde.simulate(rn, None, 100.0, 500, 30, 0.01, seed=123)
    b = sde.simulate(rn, None, 100.0, 500, 30, 0.01, seed=123)
    assert np.array_equal(a.s, b.s) and np.array_equal(a.v, b.v)


@pytest.mark.parametrize("rho", [0.0, 0.7])
def test_sample_stats_correlation(rho):
    rn = RiskNeutralParams(0.0, 0.0, 0.5, rho, ModeIndex(1, 1), 0.04)
    ps = sde.simulate(rn, None, 100.0, 10_000, 100, 0.001, seed=31)
    n = ps.paths * ps.steps
    assert abs(sde.sample_stats(ps).increment_corr - rho) < ci99(rho, n) + 0.002


def test_simulate_domain():
    with pytest.raises(ValidationError):
        sde.simulate(bs_params(), None, -1.0, 10, 10, 0.01)
    with pytest.raises(ValidationError):
        sde.simulate(ModelParams(rho=2.0), None, 100.0, 10, 10, 0.01)


def test_paths_csv(tmp_path):
    ps = sde.simulate(bs_params(), None, 100.0, 2, 3, 0.5, seed=0)
    out = tmp_path / "paths.csv"
    sde.write_paths_csv(ps, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "path_id,step,t,S,V"
    assert len(lines) == 1 + 2 * 4
    assert lines[1].startswith("0,0,0.0,100.0,0.04")
