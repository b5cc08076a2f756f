import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from mgmodes import sde
from mgmodes.closedform import (
    BsInputs, bs_formula, bs_price, forward_mean, generalized_bs_price, ground_state_price,
    norm_cdf, portfolio_growth,
)
from mgmodes.model import ModeIndex, PayoffSpec, ValidationError

from conftest import BS_PRICE, bs_params

ATM = BsInputs(100.0, 100.0, 0.05, 0.2, 1.0, "call")


def lognormal_expectation(s, k, r, sigma, tau, kind):
    """e^{-r tau} E[payoff(S_T)] by quadrature over the standard normal."""
    mu = math.log(s) + (r - 0.5 * sigma**2) * tau
    sd = sigma * math.sqrt(tau)

    def integrand(z):
        st_ = math.exp(mu + sd * z)
        pay = max(st_ - k, 0.0) if kind == "call" else max(k - st_, 0.0)
        return pay * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)

    z_k = (math.log(k) - mu) / sd
    lo, hi = (z_k, 12.0) if kind == "call" else (-12.0, z_k)
    val, _ = integrate.quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)
    return math.exp(-r * tau) * val


def test_atm_call_against_quadrature():
    oracle = lognormal_expectation(100, 100, 0.05, 0.2, 1.0, "call")
    assert oracle == pytest.approx(10.4506, abs=5e-5)
    assert bs_price(ATM) == pytest.approx(oracle, rel=1e-10)
    assert bs_price(ATM) == pytest.approx(BS_PRICE, rel=1e-14)


@pytest.mark.parametrize("s,k,r,sigma,tau,kind", [
    (80, 100, 0.01, 0.35, 2.0, "call"),
    (120, 90, 0.03, 0.15, 0.5, "put"),
    (100, 130, -0.01, 0.4, 1.5, "put"),
])
def test_against_quadrature(s, k, r, sigma, tau, kind):
    assert bs_price(BsInputs(s, k, r, sigma, tau, kind)) == pytest.approx(
        lognormal_expectation(s, k, r, sigma, tau, kind), rel=1e-9
    )


def test_expired_returns_payoff():
    assert bs_price(BsInputs(120, 100, 0.05, 0.2, 0.0)) == 20.0


def test_zero_vol_is_discounted_forward_intrinsic():
    assert bs_price(BsInputs(100, 100, 0.05, 0.0, 1.0)) == pytest.approx(100 - 100 * math.exp(-0.05), abs=1e-12)
    assert bs_price(BsInputs(100, 100, 0.05, 0.0, 1.0)) == pytest.approx(4.8771, abs=5e-5)


@pytest.mark.parametrize("field,kw", [("s", {"s": 0}), ("k", {"k": -1}), ("tau", {"tau": -1}),
                                      ("sigma", {"sigma": -0.1}), ("kind", {"kind": "digital"})])
def test_domain_errors(field, kw):
    base = dict(s=100, k=100, r=0.05, sigma=0.2, tau=1.0, kind="call")
    base.update(kw)
    with pytest.raises(ValidationError) as exc:
        BsInputs(**base)
    assert exc.value.violations[0][0] == field


def test_norm_cdf_accuracy():
    mpmath.mp.dps = 40
    xs = np.concatenate([np.linspace(-8, 8, 321), [-37.5, -20.0, 1e-8, 5.5]])
    worst = 0.0
    for x in xs:
        exact = float(mpmath.ncdf(mpmath.mpf(float(x))))
        worst = max(worst, abs(norm_cdf(x) - exact))
    assert worst <= 1e-15


inputs = st.builds(
    BsInputs,
    s=st.floats(1, 500), k=st.floats(1, 500), r=st.floats(-0.05, 0.2),
    sigma=st.floats(0.01, 1.5), tau=st.floats(0.01, 5), kind=st.just("call"),
)


@given(inputs)
def test_put_call_parity(inp):
    put = BsInputs(inp.s, inp.k, inp.r, inp.sigma, inp.tau, "put")
    lhs = bs_price(inp) - bs_price(put)
    rhs = inp.s - inp.k * math.exp(-inp.r * inp.tau)
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12 * max(inp.s, inp.k))


def test_call_increasing_in_sigma():
    sig = np.linspace(0.01, 1.0, 50)
    prices = bs_formula(100, 100, 0.05, sig, 1.0)
    assert np.all(np.diff(prices) > 0)


@given(inputs)
def test_generalized_n1_is_bs(inp):
    assert generalized_bs_price(inp, 1) == bs_price(inp)


@settings(max_examples=50)
@given(inputs, st.integers(0, 4))
def test_generalized_identity(inp, n):
    adj = BsInputs(inp.s * math.exp((n - 1) * inp.r * inp.tau), inp.k, inp.r, n * inp.sigma, inp.tau, inp.kind)
    assert generalized_bs_price(inp, n) == pytest.approx(bs_price(adj), rel=1e-12, abs=1e-12)


def test_generalized_n0_is_ground_state():
    assert generalized_bs_price(ATM, 0) == 0.0
    itm = BsInputs(150, 100, 0.05, 0.2, 2.0)
    assert generalized_bs_price(itm, 0) == pytest.approx(50 * math.exp(-0.1), rel=1e-14)


def test_generalized_n2_against_monte_carlo():
    # exact lognormal terminal draws (log-euler with xi = 0 is exact)
    rn = bs_params(ModeIndex(2, 0))
    term = sde.simulate_terminal(rn, None, 100.0, 1_000_000, 1, 1.0, "log-euler", seed=20251015)
    disc = math.exp(-0.05)
    pay = disc * np.maximum(term.s - 100.0, 0.0)
    se = pay.std(ddof=1) / math.sqrt(pay.size)
    formula = generalized_bs_price(ATM, 2)
    assert abs(pay.mean() - formula) < 3 * se
    assert formula == pytest.approx(21.36022, abs=1e-4)


def test_generalized_rejects_negative_mode():
    with pytest.raises(ValidationError):
        generalized_bs_price(ATM, -1)


def test_ground_state_price():
    call = PayoffSpec("call", 100, 2)
    put = PayoffSpec("put", 100, 2)
    assert ground_state_price(call, 0.05, 2.0, 150.0) == pytest.approx(45.2419, abs=5e-5)
    assert ground_state_price(call, 0.05, 0.0, 150.0) == 50.0
    assert ground_state_price(put, 0.05, 2.0, 150.0) == 0.0
    with pytest.raises(ValueError):
        ground_state_price(call, 0.05, -1.0, 150.0)


def test_portfolio_growth():
    assert portfolio_growth(3.0, 0.05, 0.0) == 3.0
    assert portfolio_growth(1.0, 0.05, 1.0) == pytest.approx(1.05127, abs=5e-6)
    assert portfolio_growth(2.5, 0.0, 7.0) == 2.5


def test_forward_mean_matches_simulation():
    rn = bs_params(ModeIndex(2, 0))
    term = sde.simulate_terminal(rn, None, 100.0, 200_000, 1, 1.0, "log-euler", seed=11)
    se = term.s.std(ddof=1) / math.sqrt(term.s.size)
    assert abs(term.s.mean() - forward_mean(100.0, 0.05, 1.0, 2)) < 3 * se


def test_vectorized_matches_scalar():
    s = np.array([[80.0, 100.0], [120.0, 140.0]])
    out = bs_formula(s, 100.0, 0.05, 0.2, 1.0)
    assert out.shape == (2, 2)
    for idx in np.ndindex(2, 2):
        assert out[idx] == bs_price(BsInputs(float(s[idx]), 100, 0.05, 0.2, 1.0))
