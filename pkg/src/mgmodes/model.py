"""Domain types and the real-world to risk-neutral parameter mapping."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

CONSISTENCY_TOL = 1e-12


class ValidationError(ValueError):
    """Raised when parameters violate their invariants.

    ``violations`` holds ``(field, message)`` pairs.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        msg = "; ".join(f"{name}: {text}" for name, text in self.violations)
        super().__init__(msg or "invalid parameters")


class NumericalError(RuntimeError):
    """Non-finite values or another numerical breakdown inside a solver."""

    def __init__(self, message: str, step: Optional[int] = None):
        self.step = step
        super().__init__(message if step is None else f"{message} (step {step})")


@dataclass(frozen=True)
class ModeIndex:
    n: int = 1
    m: int = 1

    def __post_init__(self):
        for name in ("n", "m"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise ValidationError([(name, f"mode index must be an integer, got {value!r}")])
            if value < 0:
                raise ValidationError([(name, f"mode index must be >= 0, got {value}")])
            object.__setattr__(self, name, int(value))

    @property
    def is_ground(self) -> bool:
        return self.n == 0 and self.m == 0


@dataclass(frozen=True)
class ModelParams:
    """Real-world dynamics plus market data.

    ``lambda2`` and ``mu_bar`` are optional; when both are given together
    with ``mu`` and ``xi`` they must satisfy ``mu_bar = mu - lambda2 * xi``.
    """

    phi: float = 0.0
    mu: float = 0.0
    v0: float = 0.04
    xi: float = 0.0
    rho: float = 0.0
    r: float = 0.0
    lambda2: Optional[float] = None
    mu_bar: Optional[float] = None


class PayoffKind(str, Enum):
    CALL = "call"
    PUT = "put"
    CUSTOM = "custom-tabulated"


@dataclass(frozen=True)
class PayoffSpec:
    """Terminal payoff.

    For ``custom-tabulated`` payoffs ``values`` holds the terminal values on
    the solver grid, either per S node (shape ``(n_s,)``) or per node of the
    full grid (shape ``(n_s, n_v)``).
    """

    kind: PayoffKind = PayoffKind.CALL
    strike: float = 100.0
    maturity: float = 1.0
    values: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", PayoffKind(self.kind))
        problems = []
        if not (self.strike > 0 and math.isfinite(self.strike)):
            problems.append(("payoff.strike", f"must be > 0, got {self.strike}"))
        if not (self.maturity > 0 and math.isfinite(self.maturity)):
            problems.append(("payoff.maturity", f"must be > 0, got {self.maturity}"))
        if self.kind is PayoffKind.CUSTOM:
            if self.values is None:
                problems.append(("payoff.values", "custom-tabulated payoff needs values"))
            else:
                vals = np.asarray(self.values, dtype=float)
                if not np.all(np.isfinite(vals)):
                    problems.append(("payoff.values", "values must be finite"))
                object.__setattr__(self, "values", vals)
        if problems:
            raise ValidationError(problems)

    def __call__(self, s):
        """Payoff as a function of the security price (call/put only)."""
        s = np.asarray(s, dtype=float)
        if self.kind is PayoffKind.CALL:
            return np.maximum(s - self.strike, 0.0)
        if self.kind is PayoffKind.PUT:
            return np.maximum(self.strike - s, 0.0)
        raise TypeError("custom-tabulated payoffs are only defined on their grid")

    def on_grid(self, s_nodes, n_v: int) -> np.ndarray:
        """Terminal values on an ``(n_s, n_v)`` grid."""
        s_nodes = np.asarray(s_nodes, dtype=float)
        if self.kind is not PayoffKind.CUSTOM:
            return np.repeat(self(s_nodes)[:, None], n_v, axis=1)
        vals = self.values
        if vals.shape == (s_nodes.size,):
            return np.repeat(vals[:, None], n_v, axis=1)
        if vals.shape == (s_nodes.size, n_v):
            return vals.copy()
        raise ValidationError(
            [("payoff.values", f"shape {vals.shape} does not cover the grid ({s_nodes.size}, {n_v})")]
        )


@dataclass(frozen=True)
class RiskNeutralParams:
    r: float
    mu_bar: float
    xi: float
    rho: float
    mode: ModeIndex = ModeIndex(1, 1)
    v0: float = 0.04


def _finite(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def validate_params(params: ModelParams) -> list[tuple[str, str]]:
    """Every violated invariant as ``(field, message)``; empty means valid."""
    out = []
    for name in ("phi", "mu", "v0", "xi", "rho", "r", "lambda2", "mu_bar"):
        value = getattr(params, name)
        if value is None and name in ("lambda2", "mu_bar"):
            continue
        if not _finite(value):
            out.append((name, f"must be a finite number, got {value!r}"))
    bad = {name for name, _ in out}
    if "rho" not in bad and not -1.0 <= params.rho <= 1.0:
        out.append(("rho", f"must lie in [-1, 1], got {params.rho}"))
    if "v0" not in bad and params.v0 < 0:
        out.append(("v0", f"must be >= 0, got {params.v0}"))
    if "xi" not in bad and params.xi < 0:
        out.append(("xi", f"must be >= 0, got {params.xi}"))
    if (
        params.lambda2 is not None
        and params.mu_bar is not None
        and not bad & {"mu", "xi", "lambda2", "mu_bar"}
    ):
        expected = params.mu - params.lambda2 * params.xi
        if abs(params.mu_bar - expected) > CONSISTENCY_TOL * max(1.0, abs(expected)):
            out.append(
                ("mu_bar", f"inconsistent with mu - lambda2*xi: expected {expected:.10g}, got {params.mu_bar}")
            )
    return out


def to_risk_neutral(params: ModelParams, mode: ModeIndex = ModeIndex(1, 1)) -> RiskNeutralParams:
    """Map real-world parameters to the coefficients of the pricing equation.

    The security drift premium (phi - r)/sigma cancels out of the pricing
    equation and so is never formed; only the variance drift is shifted by
    the market price of volatility risk.
    """
    problems = validate_params(params)
    if problems:
        raise ValidationError(problems)
    if params.lambda2 is not None:
        mu_bar = params.mu - params.lambda2 * params.xi
    elif params.mu_bar is not None:
        mu_bar = params.mu_bar
    else:
        mu_bar = params.mu
    return RiskNeutralParams(
        r=params.r, mu_bar=mu_bar, xi=params.xi, rho=params.rho, mode=mode, v0=params.v0
    )
