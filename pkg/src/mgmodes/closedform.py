"""Analytic prices: Black-Scholes, its mode-n generalization, the ground state."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .model import PayoffKind, PayoffSpec, ValidationError


@dataclass(frozen=True)
class BsInputs:
    s: float
    k: float
    r: float
    sigma: float
    tau: float
    kind: str = "call"

    def __post_init__(self):
        problems = []
        if not self.s > 0:
            problems.append(("s", f"must be > 0, got {self.s}"))
        if not self.k > 0:
            problems.append(("k", f"must be > 0, got {self.k}"))
        if not self.tau >= 0:
            problems.append(("tau", f"must be >= 0, got {self.tau}"))
        if not self.sigma >= 0:
            problems.append(("sigma", f"must be >= 0, got {self.sigma}"))
        if self.kind not in ("call", "put"):
            problems.append(("kind", f"must be call or put, got {self.kind!r}"))
        if problems:
            raise ValidationError(problems)


def norm_cdf(x):
    return ndtr(x)


def bs_formula(s, k, r, sigma, tau, kind="call"):
    """Vectorized Black-Scholes with the tau = 0 and sigma = 0 limits."""
    s, k, r, sigma, tau = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (s, k, r, sigma, tau)))
    shape = s.shape
    s, k, r, sigma, tau = (np.ravel(a) for a in (s, k, r, sigma, tau))
    sign = 1.0 if kind == "call" else -1.0
    disc = np.exp(-r * tau)
    fwd = s * np.exp(r * tau)
    # degenerate variance: discounted payoff on the forward
    out = disc * np.maximum(sign * (fwd - k), 0.0)
    stdev = sigma * np.sqrt(tau)
    live = stdev > 0
    if np.any(live):
        sl, kl, dl, sd = s[live], k[live], disc[live], stdev[live]
        d1 = (np.log(sl / kl) + r[live] * tau[live]) / sd + 0.5 * sd
        d2 = d1 - sd
        out[live] = sign * (sl * ndtr(sign * d1) - kl * dl * ndtr(sign * d2))
    return out.reshape(shape)[()]


def bs_price(inp: BsInputs) -> float:
    return float(bs_formula(inp.s, inp.k, inp.r, inp.sigma, inp.tau, inp.kind))


def generalized_bs_formula(s, k, r, sigma, tau, n, kind="call"):
    """Price under dS = n(r S dt + sigma S dW), discounted at r.

    Equals Black-Scholes on the adjusted spot ``s*exp((n-1) r tau)`` with
    volatility ``n*sigma``.
    """
    s = np.asarray(s, dtype=float)
    if n == 0:
        # frozen security: skip the exp(-r tau) * exp(r tau) round trip
        sign = 1.0 if kind == "call" else -1.0
        out = np.exp(-np.asarray(r) * np.asarray(tau)) * np.maximum(sign * (s - np.asarray(k)), 0.0)
        return np.asarray(out, dtype=float)[()]
    return bs_formula(s * np.exp((n - 1) * np.asarray(r) * np.asarray(tau)), k, r, n * np.asarray(sigma), tau, kind)


def generalized_bs_price(inp: BsInputs, n: int) -> float:
    if n < 0 or int(n) != n:
        raise ValidationError([("n", f"must be a non-negative integer, got {n}")])
    return float(generalized_bs_formula(inp.s, inp.k, inp.r, inp.sigma, inp.tau, int(n), inp.kind))


def ground_state_price(payoff: PayoffSpec, r: float, tau: float, s, v=None):
    """Solution of the mode-(0,0) equation: the payoff discounted at r."""
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    if payoff.kind is PayoffKind.CUSTOM:
        raise TypeError("ground_state_price needs a call or put payoff")
    value = math.exp(-r * tau) * payoff(s)
    return float(value) if np.ndim(value) == 0 else value


def portfolio_growth(pi0: float, r: float, t: float) -> float:
    return pi0 * math.exp(r * t)


def forward_mean(s, r, tau, n):
    """E[S_T] under the mode-n risk-neutral dynamics."""
    return s * np.exp(n * r * tau)
