"""Backward finite-difference solution of the mode-(n, m) pricing equation.

Time stepping is Douglas operator splitting in time-to-maturity: an explicit
predictor with the full operator (the cross derivative only ever appears
here), followed by implicit corrections in S and then in V, each one a batch
of tridiagonal solves.  The discount term is shared equally between the two
one-dimensional operators.  The first ``rannacher_steps`` steps are each run
as two fully implicit half steps to damp the payoff kink.

Boundaries: Dirichlet in S (the discounted payoff of the deterministic
mode-n forward, ``exp(-r tau) * payoff(S exp(n r tau))``, which is the usual
``0`` / ``S - K exp(-r tau)`` pair for n = 1; tabulated payoffs are extended
linearly past the grid ends for this), the PDE itself with one-sided
V differences at ``v_min``, and zero Neumann at ``v_max``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .closedform import generalized_bs_formula, ground_state_price
from .model import ModeIndex, NumericalError, PayoffKind, PayoffSpec, RiskNeutralParams, ValidationError
from .operator import GridSpec, build_generator, split_coefficients


class OutOfGridError(ValueError):
    pass


@dataclass(frozen=True)
class PriceSurface:
    values: np.ndarray
    grid: GridSpec
    t: float
    mode: ModeIndex


@dataclass(frozen=True)
class SolverConfig:
    theta: float = 0.5
    rannacher_steps: int = 2

    def __post_init__(self):
        problems = []
        if not 0.0 <= self.theta <= 1.0:
            problems.append(("solver.theta", f"must lie in [0, 1], got {self.theta}"))
        if int(self.rannacher_steps) != self.rannacher_steps or self.rannacher_steps < 0:
            problems.append(("solver.rannacher_steps", f"must be a non-negative integer, got {self.rannacher_steps}"))
        if problems:
            raise ValidationError(problems)


def _boundary_values(payoff: PayoffSpec, grid: GridSpec, r: float, n: int, tau: float, terminal: np.ndarray):
    drift = math.exp(n * r * tau)
    if payoff.kind is PayoffKind.CUSTOM:
        # the table is only known on the grid: extend it linearly from the
        # two outermost nodes to reach the moved forward
        disc = math.exp(-r * tau)
        ds = grid.ds
        lo = terminal[0] + (terminal[1] - terminal[0]) / ds * (grid.s_min * (drift - 1.0))
        hi = terminal[-1] + (terminal[-1] - terminal[-2]) / ds * (grid.s_max * (drift - 1.0))
        return disc * lo, disc * hi
    lo = ground_state_price(payoff, r, tau, grid.s_min * drift)
    hi = ground_state_price(payoff, r, tau, grid.s_max * drift)
    return np.full(grid.n_v, lo), np.full(grid.n_v, hi)


class _Douglas:
    """Factorized line operators for one (coefficients, grid) pair."""

    def __init__(self, coeffs):
        self.c = coeffs
        self._cache = {}
        ex = coeffs.v_ex[1:-1]
        up1 = coeffs.v_up[1:-1, 1]
        if np.any((ex != 0) & (up1 == 0)):
            raise NumericalError("one-sided V stencil at v_min cannot be reduced to tridiagonal form")
        with np.errstate(divide="ignore", invalid="ignore"):
            self.elim = np.where(ex != 0, ex / np.where(up1 == 0, 1.0, up1), 0.0)

    def factors(self, w):
        hit = self._cache.get(w)
        if hit is not None:
            return hit
        c = self.c
        s_sub = -w * c.s_lo[1:-1]
        s_dia = 1.0 - w * c.s_di[1:-1]
        s_sup = -w * c.s_up[1:-1]
        s_fac = kernels.thomas_factor_cols(s_sub, s_dia, s_sup)

        v_sub = -w * c.v_lo[1:-1]
        v_dia = 1.0 - w * c.v_di[1:-1]
        v_sup = -w * c.v_up[1:-1]
        e = self.elim
        v_dia[:, 0] = v_dia[:, 0] - e * v_sub[:, 1]
        v_sup[:, 0] = v_sup[:, 0] - e * v_dia[:, 1]
        v_fac = kernels.thomas_factor_rows(v_sub, v_dia, v_sup)
        hit = (s_sub, s_sup, s_fac, v_sub, v_fac)
        self._cache[w] = hit
        return hit

    def step(self, u, h, theta, g_lo, g_hi):
        c = self.c
        w = theta * h
        s_sub, s_sup, (s_cp, s_inv), v_sub, (v_cp, v_inv) = self.factors(w)
        a0, a1, a2 = kernels.apply_split(u, c.s_lo, c.s_di, c.s_up, c.v_lo, c.v_di, c.v_up, c.v_ex, c.mix)
        y0 = u + h * (a0 + a1 + a2)

        rhs = y0[1:-1] - w * a1[1:-1]
        rhs[0] -= s_sub[0] * g_lo
        rhs[-1] -= s_sup[-1] * g_hi
        y1 = kernels.thomas_solve_cols(s_sub, s_cp, s_inv, np.ascontiguousarray(rhs))

        rhs = y1 - w * a2[1:-1]
        rhs[:, 0] -= self.elim * rhs[:, 1]
        y2 = kernels.thomas_solve_rows(v_sub, v_cp, v_inv, np.ascontiguousarray(rhs))

        out = np.empty_like(u)
        out[0] = g_lo
        out[-1] = g_hi
        out[1:-1] = y2
        return out


def _march(rn: RiskNeutralParams, payoff: PayoffSpec, grid: GridSpec, cfg: SolverConfig):
    """Yield ``(step_index, tau, values)`` from the terminal slice backwards."""
    T = payoff.maturity
    dt = T / grid.n_t
    terminal = payoff.on_grid(grid.s_nodes, grid.n_v)
    n = rn.mode.n

    if rn.mode.is_ground:
        # pure discounting: step the exact factor
        for k in range(grid.n_t + 1):
            yield k, k * dt, math.exp(-rn.r * k * dt) * terminal
        return

    stepper = _Douglas(split_coefficients(build_generator(rn, grid)))
    u = terminal.copy()
    yield 0, 0.0, u
    for k in range(1, grid.n_t + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            u = _advance(stepper, u, k, dt, payoff, grid, rn.r, n, terminal, cfg)
        if not np.all(np.isfinite(u)):
            raise NumericalError("non-finite values in the price surface", step=k)
        yield k, k * dt, u


def _advance(stepper, u, k, dt, payoff, grid, r, n, terminal, cfg):
    tau0 = (k - 1) * dt
    if k <= cfg.rannacher_steps:
        half = 0.5 * dt
        u = stepper.step(u, half, 1.0, *_boundary_values(payoff, grid, r, n, tau0 + half, terminal))
        return stepper.step(u, half, 1.0, *_boundary_values(payoff, grid, r, n, tau0 + dt, terminal))
    return stepper.step(u, dt, cfg.theta, *_boundary_values(payoff, grid, r, n, tau0 + dt, terminal))


def solve(rn: RiskNeutralParams, payoff: PayoffSpec, grid: GridSpec, cfg: SolverConfig = SolverConfig()) -> PriceSurface:
    """Price surface at t = 0."""
    last = None
    for _, _, u in _march(rn, payoff, grid, cfg):
        last = u
    return PriceSurface(values=np.array(last), grid=grid, t=0.0, mode=rn.mode)


def solve_slices(rn, payoff, grid, cfg: SolverConfig = SolverConfig()) -> list[PriceSurface]:
    """Every time slice, ordered by calendar time (index k is t = k*dt)."""
    T = payoff.maturity
    out = [
        PriceSurface(values=np.array(u), grid=grid, t=T - tau, mode=rn.mode)
        for _, tau, u in _march(rn, payoff, grid, cfg)
    ]
    out.reverse()
    return out


def price_at(surface: PriceSurface, s0: float, v0: float) -> float:
    """Bilinear interpolation of the surface at (s0, v0)."""
    g = surface.grid
    if not (g.s_min <= s0 <= g.s_max and g.v_min <= v0 <= g.v_max):
        raise OutOfGridError(f"({s0}, {v0}) lies outside [{g.s_min}, {g.s_max}] x [{g.v_min}, {g.v_max}]")
    return float(bilinear(surface.values, g, np.array([s0]), np.array([v0]))[0])


def bilinear(values, grid: GridSpec, s, v):
    """Vectorized bilinear interpolation; queries are clipped to the grid."""
    x = np.clip((np.asarray(s, dtype=float) - grid.s_min) / grid.ds, 0.0, grid.n_s - 1)
    y = np.clip((np.asarray(v, dtype=float) - grid.v_min) / grid.dv, 0.0, grid.n_v - 1)
    i = np.minimum(np.floor(x).astype(np.int64), grid.n_s - 2)
    j = np.minimum(np.floor(y).astype(np.int64), grid.n_v - 2)
    fx = x - i
    fy = y - j
    return (
        (1 - fx) * (1 - fy) * values[i, j]
        + fx * (1 - fy) * values[i + 1, j]
        + (1 - fx) * fy * values[i, j + 1]
        + fx * fy * values[i + 1, j + 1]
    )


def oracle_price(rn: RiskNeutralParams, payoff: PayoffSpec, s0: float, v0: float):
    """Closed-form price when one exists for these dynamics, else ``None``."""
    if payoff.kind is PayoffKind.CUSTOM:
        return None
    if rn.mode.is_ground:
        return ground_state_price(payoff, rn.r, payoff.maturity, s0)
    if rn.mode.m == 0 or (rn.xi == 0 and rn.mu_bar == 0):
        return float(
            generalized_bs_formula(s0, payoff.strike, rn.r, math.sqrt(v0), payoff.maturity, rn.mode.n, payoff.kind.value)
        )
    return None


@dataclass(frozen=True)
class ConvergenceRow:
    level: int
    h: float
    dt: float
    price: float
    error: float
    order: float


def convergence_study(rn, payoff, base_grid: GridSpec, levels: int, cfg: SolverConfig = SolverConfig(), s0=100.0, v0=None):
    """Price at (s0, v0) on successively halved grids.

    Errors are absolute against the closed form when one exists.  Otherwise
    the finest two levels are Richardson-extrapolated (second order) and the
    errors are measured against that value.  ``order`` is log2 of the ratio
    of successive errors; without an oracle it is formed from successive
    price differences instead, which does not depend on the extrapolation.
    """
    if levels < 2:
        raise ValueError("levels must be >= 2")
    if v0 is None:
        v0 = rn.v0
    prices, grids = [], []
    grid = base_grid
    for lvl in range(levels):
        try:
            prices.append(price_at(solve(rn, payoff, grid, cfg), s0, v0))
        except NumericalError as exc:
            raise NumericalError(f"level {lvl}: {exc}", step=exc.step) from exc
        grids.append(grid)
        grid = grid.refined(2)

    exact = oracle_price(rn, payoff, s0, v0)
    p = np.array(prices)
    if exact is not None:
        err = np.abs(p - exact)
        order = [float("nan")] + [_log2_ratio(err[k - 1], err[k]) for k in range(1, levels)]
    else:
        extrap = p[-1] + (p[-1] - p[-2]) / 3.0
        err = np.abs(p - extrap)
        err[-1] = abs(p[-1] - p[-2]) / 3.0
        diffs = np.abs(np.diff(p))
        order = [float("nan"), float("nan")] + [_log2_ratio(diffs[k - 2], diffs[k - 1]) for k in range(2, levels)]
    return [
        ConvergenceRow(k, grids[k].ds, payoff.maturity / grids[k].n_t, float(p[k]), float(err[k]), float(order[k]))
        for k in range(levels)
    ]


def _log2_ratio(a, b):
    if a == 0 or b == 0:
        return float("nan")
    return math.log2(a / b)


def write_surface_csv(surface: PriceSurface, path) -> None:
    s, v = surface.grid.mesh()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "S", "V", "f"])
        for i in range(surface.grid.n_s):
            for j in range(surface.grid.n_v):
                w.writerow([i, j, repr(float(s[i, j])), repr(float(v[i, j])), repr(float(surface.values[i, j]))])


def write_convergence_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", "dt", "price", "error", "order"])
        for row in rows:
            w.writerow([repr(row.h), repr(row.dt), repr(row.price), repr(row.error), repr(row.order)])
