"""Correlated noise and discrete simulation of the coupled (S, V) dynamics."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np

from . import kernels
from .model import ModeIndex, ModelParams, RiskNeutralParams, ValidationError, validate_params


class Measure(str, Enum):
    REAL_WORLD = "real-world"
    RISK_NEUTRAL = "risk-neutral"


class Scheme(str, Enum):
    EULER = "euler"
    LOG_EULER = "log-euler"


@dataclass(frozen=True)
class NoiseMatrix:
    r_increments: np.ndarray
    q_increments: np.ndarray
    dt: float
    rho: float
    seed: int


@dataclass(frozen=True)
class PathSet:
    s: np.ndarray
    v: np.ndarray
    dt: float
    measure: Measure
    mode: ModeIndex
    scheme: Scheme
    seed: int
    clamp_count: int = 0
    clamps_per_path: np.ndarray = field(default=None, repr=False, compare=False)

    @property
    def paths(self) -> int:
        return self.s.shape[0]

    @property
    def steps(self) -> int:
        return self.s.shape[1] - 1

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.steps + 1)


@dataclass(frozen=True)
class Terminal:
    """Terminal values only; what the pricing paths need."""

    s: np.ndarray
    v: np.ndarray
    clamp_count: int


def _check_seed(seed) -> int:
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValidationError([("seed", f"must be an unsigned 64-bit integer, got {seed}")])
    return seed


def gen_noise(paths: int, steps: int, dt: float, rho: float, seed: int) -> NoiseMatrix:
    """Increments ``R*dt`` and ``Q*dt`` with Var = dt and correlation rho.

    Path ``k`` always receives the same draws for a given seed, whatever the
    number of paths requested.
    """
    if not -1.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [-1, 1], got {rho}")
    if paths < 1 or steps < 1:
        raise ValueError("paths and steps must be >= 1")
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    seed = _check_seed(seed)
    r_inc, q_inc = kernels.noise(int(paths), int(steps), float(dt), float(rho), np.uint64(seed))
    return NoiseMatrix(r_inc, q_inc, float(dt), float(rho), seed)


def _coefficients(params, mode):
    if isinstance(params, RiskNeutralParams):
        return Measure.RISK_NEUTRAL, params.r, params.mu_bar, params.xi, params.rho, params.v0
    problems = validate_params(params)
    if problems:
        raise ValidationError(problems)
    return Measure.REAL_WORLD, params.phi, params.mu, params.xi, params.rho, params.v0


def _prepare(params, mode, s0, paths, steps, dt, scheme, seed):
    if mode is None:
        mode = params.mode if isinstance(params, RiskNeutralParams) else ModeIndex(1, 1)
    measure, drift_s, drift_v, xi, rho, v0 = _coefficients(params, mode)
    scheme = Scheme(scheme)
    problems = []
    if not s0 > 0:
        problems.append(("s0", f"must be > 0, got {s0}"))
    if not v0 > 0:
        problems.append(("v0", f"must be > 0 for simulation, got {v0}"))
    if not dt > 0:
        problems.append(("dt", f"must be > 0, got {dt}"))
    if paths < 1 or steps < 1:
        problems.append(("paths/steps", "must be >= 1"))
    if problems:
        raise ValidationError(problems)
    args = (
        float(s0), float(v0), float(mode.n), float(mode.m), float(drift_s), float(drift_v),
        float(xi), float(rho), float(dt), int(steps), int(paths), np.uint64(_check_seed(seed)),
        scheme is Scheme.LOG_EULER,
    )
    return measure, mode, scheme, args


def simulate(
    params: Union[ModelParams, RiskNeutralParams],
    mode: ModeIndex = None,
    s0: float = 100.0,
    paths: int = 1000,
    steps: int = 100,
    dt: float = 0.01,
    scheme: Scheme = Scheme.LOG_EULER,
    seed: int = 0,
) -> PathSet:
    """Simulate full (S, V) trajectories for mode ``(n, m)``.

    Real-world parameters step with (phi, mu); risk-neutral ones with
    (r, mu_bar).  Per step, with sigma = sqrt(V)::

        dS = n (a S dt + sigma S dW1)
        dV = m (b V dt + xi V dW2)

    ``log-euler`` applies the same step to ln S and ln V with the Ito
    correction, so both stay strictly positive.  ``euler`` clamps negative V
    to zero and counts the clamps.
    """
    measure, mode, scheme, args = _prepare(params, mode, s0, paths, steps, dt, scheme, seed)
    s, v, clamps = kernels.paths(*args)
    return PathSet(
        s=s, v=v, dt=float(dt), measure=measure, mode=mode, scheme=scheme,
        seed=int(args[11]), clamp_count=int(clamps.sum()), clamps_per_path=clamps,
    )


def simulate_terminal(
    params: Union[ModelParams, RiskNeutralParams],
    mode: ModeIndex = None,
    s0: float = 100.0,
    paths: int = 1000,
    steps: int = 100,
    dt: float = 0.01,
    scheme: Scheme = Scheme.LOG_EULER,
    seed: int = 0,
) -> Terminal:
    """Same dynamics and draws as :func:`simulate`, keeping only the last step."""
    _, _, _, args = _prepare(params, mode, s0, paths, steps, dt, scheme, seed)
    s_t, v_t, clamps = kernels.terminal(*args)
    return Terminal(s=s_t, v=v_t, clamp_count=int(clamps.sum()))


@dataclass(frozen=True)
class SampleStats:
    mean_s: np.ndarray
    mean_v: np.ndarray
    var_s: np.ndarray
    var_v: np.ndarray
    increment_corr: float
    clamp_count: int


def sample_stats(pathset: PathSet) -> SampleStats:
    """Per-time sample moments and the S/V increment correlation.

    The correlation is that of the standardized Brownian increments recovered
    from the log-returns, pooled over all paths and steps.  It is NaN when
    either sector is frozen (mode factor 0, xi = 0, or constant paths).
    """
    if pathset.s.size == 0:
        raise ValueError("empty pathset")
    s, v = pathset.s, pathset.v
    with np.errstate(divide="ignore", invalid="ignore"):
        ds = np.diff(np.log(s), axis=1) if np.all(s > 0) else np.diff(s, axis=1) / s[:, :-1]
        dv = np.diff(np.log(v), axis=1) if np.all(v > 0) else np.diff(v, axis=1) / v[:, :-1]
        ds = ds / np.sqrt(v[:, :-1])
        # the residual drift is O(dt) against O(sqrt(dt)) noise; removing the
        # per-step sample mean is enough for a correlation estimate
        ds = (ds - ds.mean(axis=0)).ravel()
        dv = (dv - dv.mean(axis=0)).ravel()
        denom = math.sqrt(float(ds @ ds) * float(dv @ dv))
        corr = float(ds @ dv) / denom if denom > 0 else float("nan")
    # variances about the first path so constant columns give exactly 0
    return SampleStats(
        mean_s=s.mean(axis=0), mean_v=v.mean(axis=0),
        var_s=(s - s[:1]).var(axis=0), var_v=(v - v[:1]).var(axis=0),
        increment_corr=corr, clamp_count=pathset.clamp_count,
    )


def noise_stats(noise: NoiseMatrix) -> dict:
    """Pooled increment variance and cross-correlation of a noise matrix."""
    r = noise.r_increments.ravel()
    q = noise.q_increments.ravel()
    n = r.size
    var_r = float(r @ r) / n
    var_q = float(q @ q) / n
    cov = float(r @ q) / n
    return {
        "count": n,
        "var_r": var_r,
        "var_q": var_q,
        "corr": cov / math.sqrt(var_r * var_q),
    }


def write_paths_csv(pathset: PathSet, path) -> None:
    t = pathset.times
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["path_id", "step", "t", "S", "V"])
        for p in range(pathset.paths):
            for k in range(pathset.steps + 1):
                w.writerow([p, k, repr(float(t[k])), repr(float(pathset.s[p, k])), repr(float(pathset.v[p, k]))])
