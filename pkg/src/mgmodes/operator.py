"""The mode-(n, m) pricing operator on an (S, V) grid.

Under the risk-neutral mapping the operator acting on f(t, S, V) is::

    df/dt + n r S df/dS + m mu_bar V df/dV
          + 1/2 n^2 V S^2 d2f/dS2 + 1/2 m^2 xi^2 V^2 d2f/dV2
          + n m rho xi S V^(3/2) d2f/dSdV - r f

The security drift premium and the volatility-risk premium have already been
absorbed (see :func:`mgmodes.model.to_risk_neutral`).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .model import ModeIndex, RiskNeutralParams, ValidationError


class Spacing(str, Enum):
    UNIFORM = "uniform"


@dataclass(frozen=True)
class GridSpec:
    s_min: float = 0.0
    s_max: float = 400.0
    v_min: float = 0.0
    v_max: float = 1.0
    n_s: int = 201
    n_v: int = 51
    n_t: int = 200
    spacing: Spacing = Spacing.UNIFORM

    def __post_init__(self):
        object.__setattr__(self, "spacing", Spacing(self.spacing))
        problems = validate_grid(self)
        if problems:
            raise ValidationError(problems)

    @classmethod
    def default_for(cls, strike: float, s0: float, v0: float, n_s=201, n_v=51, n_t=200):
        return cls(
            s_min=0.0, s_max=max(4.0 * strike, 4.0 * s0), v_min=0.0, v_max=max(16.0 * v0, 1.0),
            n_s=n_s, n_v=n_v, n_t=n_t,
        )

    @property
    def ds(self) -> float:
        return (self.s_max - self.s_min) / (self.n_s - 1)

    @property
    def dv(self) -> float:
        return (self.v_max - self.v_min) / (self.n_v - 1)

    @property
    def s_nodes(self) -> np.ndarray:
        return np.linspace(self.s_min, self.s_max, self.n_s)

    @property
    def v_nodes(self) -> np.ndarray:
        return np.linspace(self.v_min, self.v_max, self.n_v)

    def mesh(self):
        return np.meshgrid(self.s_nodes, self.v_nodes, indexing="ij")

    def refined(self, factor: int = 2) -> "GridSpec":
        """Grid with spacing and time step divided by ``factor``."""
        return GridSpec(
            self.s_min, self.s_max, self.v_min, self.v_max,
            (self.n_s - 1) * factor + 1, (self.n_v - 1) * factor + 1, self.n_t * factor, self.spacing,
        )


def validate_grid(g: GridSpec) -> list[tuple[str, str]]:
    out = []
    if not g.s_min >= 0:
        out.append(("grid.s_min", f"must be >= 0, got {g.s_min}"))
    if not g.v_min >= 0:
        out.append(("grid.v_min", f"must be >= 0, got {g.v_min}"))
    if not g.s_max > g.s_min:
        out.append(("grid.s_max", "must exceed s_min"))
    if not g.v_max > g.v_min:
        out.append(("grid.v_max", "must exceed v_min"))
    for name, lo in (("n_s", 3), ("n_v", 3), ("n_t", 1)):
        value = getattr(g, name)
        if int(value) != value or value < lo:
            out.append((f"grid.{name}", f"must be an integer >= {lo}, got {value}"))
    return out


@dataclass(frozen=True)
class GeneratorStencil:
    grid: GridSpec
    conv_s: np.ndarray
    conv_v: np.ndarray
    diff_ss: np.ndarray
    diff_vv: np.ndarray
    diff_sv: np.ndarray
    zeroth: float
    mode: ModeIndex


def build_generator(rn: RiskNeutralParams, grid: GridSpec) -> GeneratorStencil:
    """Per-node coefficients of the mode-(n, m) operator."""
    if not isinstance(grid, GridSpec):
        raise ValidationError([("grid", "expected a GridSpec")])
    n, m = rn.mode.n, rn.mode.m
    s, v = grid.mesh()
    v = np.maximum(v, 0.0)
    # mode factors applied last so that mode scaling is exact in floating point
    conv_s = n * (rn.r * s)
    conv_v = m * (rn.mu_bar * v)
    diff_ss = (n * n) * (0.5 * v * s * s)
    diff_vv = (m * m) * (0.5 * rn.xi * rn.xi * v * v)
    diff_sv = (n * m) * (rn.rho * rn.xi * s * v**1.5)
    return GeneratorStencil(
        grid=grid, conv_s=conv_s, conv_v=conv_v, diff_ss=diff_ss, diff_vv=diff_vv,
        diff_sv=diff_sv, zeroth=-rn.r, mode=rn.mode,
    )


@dataclass(frozen=True)
class SplitCoefficients:
    """Finite-difference weights of the operator split by direction.

    ``s_*`` is the S-direction operator plus half the discount term,
    ``v_*`` the V-direction operator plus the other half, ``mix`` the
    cross-derivative weight.  At ``j = 0`` the V stencil is one-sided and
    has an extra weight ``v_ex`` on ``j = 2``; at ``j = n_v - 1`` it is the
    zero-Neumann ghost-node stencil.
    """

    s_lo: np.ndarray
    s_di: np.ndarray
    s_up: np.ndarray
    v_lo: np.ndarray
    v_di: np.ndarray
    v_up: np.ndarray
    v_ex: np.ndarray
    mix: np.ndarray


def split_coefficients(gen: GeneratorStencil) -> SplitCoefficients:
    g = gen.grid
    ds, dv = g.ds, g.dv
    half_r = 0.5 * gen.zeroth

    cs = gen.conv_s / (2 * ds)
    ks = gen.diff_ss / ds**2
    s_lo = ks - cs
    s_di = -2 * ks + half_r
    s_up = ks + cs

    cv = gen.conv_v / (2 * dv)
    kv = gen.diff_vv / dv**2
    v_lo = kv - cv
    v_di = -2 * kv + half_r
    v_up = kv + cv
    # j = 0: forward differences df/dV ~ (f1 - f0)/dv, d2f/dV2 ~ (f0 - 2 f1 + f2)/dv^2
    c0 = gen.conv_v[:, 0] / dv
    k0 = kv[:, 0]
    v_lo[:, 0] = 0.0
    v_di[:, 0] = -c0 + k0 + half_r
    v_up[:, 0] = c0 - 2 * k0
    v_ex = k0.copy()
    # j = n_v - 1: df/dV = 0 through a mirrored ghost node
    v_lo[:, -1] = 2 * kv[:, -1]
    v_di[:, -1] = -2 * kv[:, -1] + half_r
    v_up[:, -1] = 0.0

    mix = gen.diff_sv / (4 * ds * dv)
    mix[:, 0] = gen.diff_sv[:, 0] / (2 * ds * dv)
    mix[:, -1] = 0.0
    return SplitCoefficients(s_lo, s_di, s_up, v_lo, v_di, v_up, v_ex, mix)


def apply_operator(values: np.ndarray, gen: GeneratorStencil, coeffs: SplitCoefficients = None) -> np.ndarray:
    """Spatial operator (including the -r f term) applied to a slice.

    Entries on the S boundaries are zero.
    """
    if coeffs is None:
        coeffs = split_coefficients(gen)
    a0, a1, a2 = kernels.apply_split(
        np.ascontiguousarray(values, dtype=float), coeffs.s_lo, coeffs.s_di, coeffs.s_up,
        coeffs.v_lo, coeffs.v_di, coeffs.v_up, coeffs.v_ex, coeffs.mix,
    )
    return a0 + a1 + a2


def residual(f_t, f_next, gen: GeneratorStencil, dt: float) -> np.ndarray:
    """Interior residual of the pricing equation between two time slices.

    ``f_t`` is the slice at time t and ``f_next`` at t + dt (both
    ``PriceSurface`` or plain arrays).  The time derivative is the forward
    difference and the spatial operator is averaged over the two slices, so
    a smooth solution gives residuals of order h^2 + dt^2.  Returns the
    ``(n_s - 2, n_v - 2)`` block of interior nodes.
    """
    a = _values(f_t, gen)
    b = _values(f_next, gen)
    if a.shape != (gen.grid.n_s, gen.grid.n_v) or b.shape != a.shape:
        raise ValueError(
            f"slice shapes {a.shape} / {b.shape} do not match grid ({gen.grid.n_s}, {gen.grid.n_v})"
        )
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    coeffs = split_coefficients(gen)
    lf = 0.5 * (apply_operator(a, gen, coeffs) + apply_operator(b, gen, coeffs))
    res = (b - a) / dt + lf
    return res[1:-1, 1:-1]


def _values(f, gen):
    grid = getattr(f, "grid", None)
    if grid is not None and grid != gen.grid:
        raise ValueError("price surface grid differs from the stencil grid")
    return np.asarray(getattr(f, "values", f), dtype=float)


def write_stencil_csv(gen: GeneratorStencil, path) -> None:
    s, v = gen.grid.mesh()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "S", "V", "conv_s", "conv_v", "diff_ss", "diff_vv", "diff_sv"])
        for i in range(gen.grid.n_s):
            for j in range(gen.grid.n_v):
                w.writerow([
                    i, j, repr(float(s[i, j])), repr(float(v[i, j])),
                    *(repr(float(a[i, j])) for a in (gen.conv_s, gen.conv_v, gen.diff_ss, gen.diff_vv, gen.diff_sv)),
                ])
