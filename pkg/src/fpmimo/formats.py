"""Floating-point format emulation on a 64-bit carrier.

A target format is described by its significand width ``t`` (bits, implicit
leading bit included), and its exponent range.  Every emulated operation is
computed exactly in 64-bit arithmetic and the result's significand is then
rounded to ``t`` bits.  Double rounding is exact for all supported presets
because ``t <= 24`` for the low-precision formats and ``t = 53`` is a
pass-through.

All rounding entry points accept scalars or numpy arrays and broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "FloatFormat",
    "RoundingMode",
    "RangeMode",
    "BFLOAT16",
    "FP16",
    "FP32",
    "FP64",
    "PRESETS",
    "get_format",
    "round_to_format",
    "fl_op",
    "fl_cmul",
    "fl_cadd",
]


class RoundingMode(Enum):
    """How the infinitely-precise result is mapped onto the target grid."""

    NEAREST_EVEN = "nearest-even"
    STOCHASTIC = "stochastic"


class RangeMode(Enum):
    """Exponent-range handling.

    UNBOUNDED rounds the significand only (no overflow/underflow), which is
    the default model used throughout the error analysis.  STRICT_IEEE clamps
    magnitudes above ``x_max`` and flushes magnitudes below the smallest
    normalized number to zero.
    """

    UNBOUNDED = "unbounded"
    STRICT_IEEE = "strict-ieee"


@dataclass(frozen=True)
class FloatFormat:
    """A binary floating-point number format.

    ``significand_bits`` counts the implicit leading bit, so fp64 has 53.
    The unit roundoff is ``u = 2**-t`` (half the spacing at 1.0).
    """

    name: str
    significand_bits: int
    exponent_min: int
    exponent_max: int

    def __post_init__(self) -> None:
        t = self.significand_bits
        if t < 2:
            raise ValueError(f"significand_bits must be >= 2, got {t}")
        if t > 53:
            raise ValueError(
                f"significand_bits must be <= 53 (64-bit carrier), got {t}"
            )
        if self.exponent_min >= self.exponent_max:
            raise ValueError("exponent_min must be below exponent_max")

    @property
    def unit_roundoff(self) -> float:
        return 0.5 * 2.0 ** (1 - self.significand_bits)

    @property
    def x_min(self) -> float:
        """Smallest positive normalized number."""
        return 2.0**self.exponent_min

    @property
    def x_max(self) -> float:
        """Largest finite number."""
        return (2.0 - 2.0 ** (1 - self.significand_bits)) * 2.0**self.exponent_max

    @property
    def is_carrier(self) -> bool:
        """True when rounding into this format is a no-op on the carrier."""
        return self.significand_bits == 53

    def __str__(self) -> str:
        return self.name


BFLOAT16 = FloatFormat("bfloat16", 8, -126, 127)
FP16 = FloatFormat("fp16", 11, -14, 15)
FP32 = FloatFormat("fp32", 24, -126, 127)
FP64 = FloatFormat("fp64", 53, -1022, 1023)

PRESETS = {f.name: f for f in (BFLOAT16, FP16, FP32, FP64)}


def get_format(name: str) -> FloatFormat:
    """Look up a preset by name ("bfloat16", "fp16", "fp32", "fp64")."""
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown format {name!r}; known: {sorted(PRESETS)}"
        ) from None


def _round_significand(x, fmt: FloatFormat, mode: RoundingMode, rng):
    """Round finite carrier values to t significand bits (unbounded range)."""
    t = fmt.significand_bits
    m, e = np.frexp(x)  # x = m * 2**e, |m| in [0.5, 1)
    scaled = np.ldexp(m, t)  # exact: |scaled| in [2**(t-1), 2**t)
    if mode is RoundingMode.NEAREST_EVEN:
        k = np.rint(scaled)
    elif mode is RoundingMode.STOCHASTIC:
        if rng is None:
            raise ValueError("stochastic rounding requires an rng")
        lo = np.floor(scaled)
        frac = scaled - lo
        k = lo + (rng.random(np.shape(frac)) < frac)
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown rounding mode {mode}")
    return np.ldexp(k, e - t)


def _apply_range(y, fmt: FloatFormat):
    a = np.abs(y)
    y = np.where(a > fmt.x_max, np.sign(y) * fmt.x_max, y)
    y = np.where((a < fmt.x_min) & (y != 0.0), 0.0, y)
    return y


def round_to_format(
    x,
    fmt: FloatFormat,
    mode: RoundingMode = RoundingMode.NEAREST_EVEN,
    range_mode: RangeMode = RangeMode.UNBOUNDED,
    rng=None,
):
    """Round real carrier value(s) into ``fmt``.

    Raises ValueError on non-finite input.  Idempotent, monotone under
    nearest-even, and exact on representable inputs.
    """
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError("round_to_format requires finite input")
    if fmt.is_carrier and mode is RoundingMode.NEAREST_EVEN:
        y = x
    else:
        y = _round_significand(x, fmt, mode, rng)
    if range_mode is RangeMode.STRICT_IEEE:
        y = _apply_range(y, fmt)
    if np.ndim(y) == 0:
        return float(y)
    return y


# Internal fast path: skips the finiteness check and scalar conversion.
# Kernels guarantee finite inputs (they validate once at the boundary).
def _round(x, fmt: FloatFormat, mode: RoundingMode, range_mode: RangeMode, rng):
    if fmt.is_carrier and mode is RoundingMode.NEAREST_EVEN:
        if range_mode is RangeMode.STRICT_IEEE:
            return _apply_range(x, fmt)
        return x
    y = _round_significand(x, fmt, mode, rng)
    if range_mode is RangeMode.STRICT_IEEE:
        y = _apply_range(y, fmt)
    return y


_OPS = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
}


def fl_op(
    a,
    b,
    op: str,
    fmt: FloatFormat,
    mode: RoundingMode = RoundingMode.NEAREST_EVEN,
    range_mode: RangeMode = RangeMode.UNBOUNDED,
    rng=None,
):
    """One elementary operation under the standard model: round(a op b).

    Operands are assumed representable in ``fmt``; the relative error of the
    result is at most the format's unit roundoff (unbounded range).
    """
    if op not in _OPS:
        raise ValueError(f"op must be one of {sorted(_OPS)}, got {op!r}")
    if op == "/" and np.any(np.asarray(b) == 0):
        raise ZeroDivisionError("fl_op division by zero")
    exact = _OPS[op](np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64))
    return round_to_format(exact, fmt, mode, range_mode, rng)


def fl_cmul(
    a,
    b,
    fmt: FloatFormat,
    mode: RoundingMode = RoundingMode.NEAREST_EVEN,
    range_mode: RangeMode = RangeMode.UNBOUNDED,
    rng=None,
):
    """Complex multiply via 4 real multiplies + 2 real additions, each rounded.

    This is the naive scheme whose error expands into the 2n-length real
    inner-product model; no 3-multiply tricks.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    rnd = lambda v: round_to_format(v, fmt, mode, range_mode, rng)  # noqa: E731
    p1 = rnd(a.real * b.real)
    p2 = rnd(a.imag * b.imag)
    p3 = rnd(a.real * b.imag)
    p4 = rnd(a.imag * b.real)
    re = rnd(np.subtract(p1, p2))
    im = rnd(np.add(p3, p4))
    out = np.asarray(re) + 1j * np.asarray(im)
    if out.ndim == 0:
        return complex(out)
    return out


def fl_cadd(
    a,
    b,
    fmt: FloatFormat,
    mode: RoundingMode = RoundingMode.NEAREST_EVEN,
    range_mode: RangeMode = RangeMode.UNBOUNDED,
    rng=None,
):
    """Componentwise rounded complex addition."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    re = round_to_format(a.real + b.real, fmt, mode, range_mode, rng)
    im = round_to_format(a.imag + b.imag, fmt, mode, range_mode, rng)
    out = np.asarray(re) + 1j * np.asarray(im)
    if out.ndim == 0:
        return complex(out)
    return out
