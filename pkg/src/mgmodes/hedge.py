"""Noise-elimination algebra of the hedged portfolio and its empirical P&L.

The portfolio ``theta1 * f + theta2 * S`` is free of both noise sources only
if (a) the S-noise row ``n sigma S theta1 df/dS + theta2 sigma S`` vanishes
and (b) the V-noise row ``m xi V theta1 df/dV`` vanishes.  With only the
option and the security available, (b) cannot be enforced when the price
depends on V; :func:`hedge_matrix_residual` reports both rows so that gap is
measured rather than assumed away.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import sde
from .model import ModeIndex, PayoffKind, PayoffSpec, RiskNeutralParams
from .operator import GridSpec
from .pde import SolverConfig, _march, bilinear, oracle_price, price_at, solve


@dataclass(frozen=True)
class Portfolio:
    theta1: float
    theta2: float
    f: float = 0.0
    s: float = 0.0


def hedge_matrix_residual(p: Portfolio, delta, vega_v, sigma, xi, v, s, mode: ModeIndex):
    """Both rows of the noise-elimination system for portfolio ``p``.

    Returns ``(res1, res2)``; ``res1`` is exactly zero at
    ``theta2 = -n * theta1 * delta``.
    """
    if sigma < 0 or xi < 0:
        raise ValueError("sigma and xi must be >= 0")
    res1 = sigma * s * (mode.n * p.theta1 * delta + p.theta2)
    res2 = mode.m * xi * v * p.theta1 * vega_v
    return res1, res2


@dataclass(frozen=True)
class PnlSummary:
    mean: float
    std: float
    stderr: float
    rebalances: int
    paths: int
    price0: float
    pnl: np.ndarray = field(repr=False, compare=False)


def _default_grid(payoff, s0, v0, rebalances):
    per = max(1, math.ceil(200 / rebalances))
    return GridSpec.default_for(payoff.strike, s0, v0, n_s=401, n_v=51, n_t=rebalances * per)


def simulate_hedged_pnl(
    rn: RiskNeutralParams,
    payoff: PayoffSpec,
    s0: float,
    rebalances: int,
    paths: int,
    seed: int,
    grid: GridSpec = None,
    cfg: SolverConfig = SolverConfig(),
) -> PnlSummary:
    """Discounted terminal P&L of a short option, delta-hedged in the security.

    The option is sold at the closed-form price when one exists (xi = 0) and
    at the PDE price otherwise.  The hedge ratio is the centred S-difference
    of the PDE surface at each rebalancing date; cash accrues at r.
    """
    if rebalances < 1:
        raise ValueError("rebalances must be >= 1")
    if payoff.kind is PayoffKind.CUSTOM:
        raise TypeError("hedging needs a call or put payoff")
    T = payoff.maturity
    v0 = rn.v0
    if grid is None:
        grid = _default_grid(payoff, s0, v0, rebalances)
    if grid.n_t % rebalances:
        raise ValueError("grid.n_t must be a multiple of the rebalance count")
    per = grid.n_t // rebalances
    dt = T / rebalances
    ds = grid.ds

    frozen_v = rn.xi == 0 and (rn.mode.m == 0 or rn.mu_bar == 0)
    deltas = [None] * rebalances
    for k, _, u in _march(rn, payoff, grid, cfg):
        if k % per:
            continue
        idx = rebalances - k // per
        if idx >= rebalances:
            continue
        d = np.gradient(u, ds, axis=0)
        if frozen_v:
            d = bilinear(d, grid, grid.s_nodes, np.full(grid.n_s, v0))
        deltas[idx] = d

    price0 = oracle_price(rn, payoff, s0, v0)
    if price0 is None:
        price0 = price_at(solve(rn, payoff, grid, cfg), s0, v0)

    ps = sde.simulate(rn, rn.mode, s0, paths, rebalances, dt, sde.Scheme.LOG_EULER, seed)
    growth = math.exp(rn.r * dt)

    def hedge_ratio(k):
        if frozen_v:
            return np.interp(ps.s[:, k], grid.s_nodes, deltas[k])
        return bilinear(deltas[k], grid, ps.s[:, k], ps.v[:, k])

    held = hedge_ratio(0)
    cash = price0 - held * ps.s[:, 0]
    for k in range(1, rebalances):
        cash = cash * growth
        new = hedge_ratio(k)
        cash -= (new - held) * ps.s[:, k]
        held = new
    cash = cash * growth
    s_t = ps.s[:, -1]
    pnl = (cash + held * s_t - payoff(s_t)) * math.exp(-rn.r * T)
    std = float(pnl.std(ddof=1)) if paths > 1 else 0.0
    return PnlSummary(
        mean=float(pnl.mean()), std=std, stderr=std / math.sqrt(paths), rebalances=rebalances,
        paths=paths, price0=float(price0), pnl=pnl,
    )


def write_histogram_csv(summary: PnlSummary, path, bins: int = 50) -> None:
    counts, edges = np.histogram(summary.pnl, bins=bins)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bin_low", "bin_high", "count"])
        for c, lo, hi in zip(counts, edges[:-1], edges[1:]):
            w.writerow([repr(float(lo)), repr(float(hi)), int(c)])
