"""Compactified extra-dimension bookkeeping: mode masses, momenta, radii, and
the Fourier decomposition of a periodic field."""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass
from enum import IntEnum

import numpy as np


class Signature(IntEnum):
    SPACELIKE = 1
    TIMELIKE = -1


@dataclass(frozen=True)
class KKParams:
    l: float = 1.0
    mass: float = 0.0
    c: float = 1.0
    gamma: float = 1.0
    signature: Signature = Signature.SPACELIKE

    def __post_init__(self):
        if isinstance(self.signature, str):
            object.__setattr__(self, "signature", Signature[self.signature.upper()])
        else:
            object.__setattr__(self, "signature", Signature(self.signature))
        if not self.l > 0:
            raise ValueError(f"l must be > 0, got {self.l}")
        if not self.gamma >= 1:
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")
        if not self.c > 0:
            raise ValueError(f"c must be > 0, got {self.c}")
        if not self.mass >= 0:
            raise ValueError(f"mass must be >= 0, got {self.mass}")


def effective_mass(p: KKParams, n: int) -> float:
    """Effective mass parameter of mode n: m^2 c^2 + eps * gamma^2 n^2 / (2 pi L)^2.

    This is a mass-squared-like quantity; it is returned as given, without
    any unit repair.
    """
    rest = p.mass**2 * p.c**2
    if n == 0:
        return rest
    shift = p.gamma**2 * n**2 / (2 * math.pi * p.l) ** 2
    return rest + int(p.signature) * shift


def quantized_momentum(n: int, radius: float) -> float:
    if not radius > 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    return n / radius


class SingularRadiusError(ZeroDivisionError):
    pass


def compactification_radius(drift: float, vol_term: float, dt: float) -> Fraction:
    """Reciprocal of the realized increment ``(drift + vol_term) * dt``.

    The sign of the increment is passed through, so the result may be
    negative; it is a per-step diagnostic rather than a fixed constant.
    The reciprocal is returned as an exact ``Fraction`` so that
    ``n / radius`` gives back the increment exactly (a float reciprocal
    does not round-trip for roughly one input in six).
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    inc = (drift + vol_term) * dt
    if inc == 0:
        raise SingularRadiusError("zero increment: radius undefined")
    return 1 / Fraction(inc)


def projected_increment(n: int, radius: float) -> float:
    """``n / radius`` without the positivity requirement of a true radius.

    For ``n = 1`` this recovers the increment a radius was built from.
    """
    if radius == 0:
        raise SingularRadiusError("zero radius")
    return n / radius


@dataclass(frozen=True)
class ModeField:
    samples: np.ndarray
    period: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim != 1 or s.size < 2 or s.size & (s.size - 1):
            raise ValueError(f"sample count must be a power of two >= 2, got {s.size}")
        if not self.period > 0:
            raise ValueError(f"period must be > 0, got {self.period}")
        object.__setattr__(self, "samples", s)

    @property
    def positions(self) -> np.ndarray:
        return self.period * np.arange(self.samples.size) / self.samples.size

    @property
    def radius(self) -> float:
        return self.period / (2 * math.pi)


def sample_mode(index: int, radius: float, count: int) -> ModeField:
    """``exp(i * index * x / radius)`` on ``count`` points of one period."""
    period = 2 * math.pi * radius
    x = period * np.arange(count) / count
    return ModeField(np.exp(1j * index * x / radius), period)


def mode_decompose(field: ModeField) -> np.ndarray:
    """Coefficients c_n with f(x_k) = sum_n c_n exp(i n x_k / R).

    Index n runs over 0..N-1 in FFT order (negative modes wrap to the top).
    """
    return np.fft.fft(field.samples) / field.samples.size


def mode_reconstruct(coeffs, period: float, count: int) -> ModeField:
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.ndim != 1 or coeffs.size != count:
        raise ValueError(f"expected {count} coefficients, got shape {coeffs.shape}")
    return ModeField(np.fft.ifft(coeffs) * count, period)


def shift_field(field: ModeField, periods: int = 1) -> ModeField:
    """The field translated by whole periods, resampled at the same points."""
    x = field.positions + periods * field.period
    idx = np.rint((x % field.period) / field.period * field.samples.size).astype(int) % field.samples.size
    return ModeField(field.samples[idx], field.period)
