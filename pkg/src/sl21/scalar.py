"""Arithmetic at the root of unity xi = exp(2 pi i / ell).

Every computation is tied to a :class:`Context`, which fixes the order ``ell``
of the root of unity, the comparison tolerance and the working precision.

Two numeric backends are provided:

* ``precision == 53`` uses native ``complex`` / ``numpy.complex128``;
* ``precision > 53`` uses ``gmpy2.mpc`` scalars stored in numpy object arrays.

Exponents of ``xi`` are carried as exact :class:`fractions.Fraction` values and
reduced modulo ``ell`` before the single transcendental evaluation.

The gmpy2 working precision is a thread-local setting.  Creating a Context, or
calling :meth:`Context.activate`, raises the precision of the calling thread
to at least ``ctx.precision``.  A high-precision Context used from another
thread must call ``activate()`` there first.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Union

import gmpy2
import numpy as np

Rational = Union[int, Fraction]
Exponent = Union[int, Fraction, float, complex]

DEFAULT_PRECISION = 106
DEFAULT_TOL = 1e-20
FAST_PRECISION = 53
FAST_TOL = 1e-8


class ScalarError(ValueError):
    """Raised for invalid scalar input (non-finite values, out-of-range indices)."""


@dataclass(frozen=True)
class Context:
    """Root-of-unity order, tolerance and precision shared by a computation.

    >>> ctx = Context(3)
    >>> ctx.precision, ctx.tol
    (106, 1e-20)
    """

    ell: int
    tol: float = DEFAULT_TOL
    precision: int = DEFAULT_PRECISION
    seed: int = 0
    corrupt: str = field(default="", compare=True)

    def __post_init__(self) -> None:
        if not isinstance(self.ell, (int, np.integer)) or self.ell < 3 or self.ell % 2 == 0:
            raise ValueError(f"ell must be an odd integer >= 3, got {self.ell!r}")
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise ValueError(f"tol must be positive and finite, got {self.tol!r}")
        if not isinstance(self.precision, (int, np.integer)) or self.precision < 53:
            raise ValueError(f"precision must be an integer >= 53, got {self.precision!r}")
        if self.corrupt not in CORRUPTIONS:
            raise ValueError(f"unknown corruption {self.corrupt!r}; choose from {sorted(CORRUPTIONS)}")
        self.activate()

    @classmethod
    def fast(cls, ell: int, seed: int = 0) -> "Context":
        """Double-precision profile with tol 1e-8."""
        return cls(ell, tol=FAST_TOL, precision=FAST_PRECISION, seed=seed)

    @property
    def is_double(self) -> bool:
        return self.precision == FAST_PRECISION

    @property
    def dtype(self) -> Any:
        return np.complex128 if self.is_double else object

    def activate(self) -> None:
        """Make sure the calling thread computes at ``self.precision`` bits or more."""
        if not self.is_double:
            gctx = gmpy2.get_context()
            if gctx.precision < self.precision:
                gctx.precision = self.precision

    def __getstate__(self) -> dict:
        return {k: getattr(self, k) for k in ("ell", "tol", "precision", "seed", "corrupt")}

    def __setstate__(self, state: dict) -> None:
        for k, v in state.items():
            object.__setattr__(self, k, v)
        self.activate()

    def num(self, value: Any) -> Any:
        """Convert a Python number to this context's scalar type."""
        if self.is_double:
            return complex(value)
        if isinstance(value, Fraction):
            return gmpy2.mpc(gmpy2.mpq(value.numerator, value.denominator))
        return gmpy2.mpc(value)

    @property
    def zero(self) -> Any:
        return self.num(0)

    @property
    def one(self) -> Any:
        return self.num(1)

    def close(self, a: Any, b: Any, tol: float | None = None) -> bool:
        """Scale-aware equality ``|a-b| <= tol * max(1, |a|, |b|)``."""
        return rel_diff(a, b) <= (self.tol if tol is None else tol)


# Deliberately wrong convention variants, used only as negative controls.
CORRUPTIONS = {"", "rmatrix", "f1"}


def rel_diff(a: Any, b: Any) -> float:
    """``|a-b| / max(1, |a|, |b|)`` as a float."""
    return float(abs(a - b)) / max(1.0, float(abs(a)), float(abs(b)))


def as_fraction(x: Any) -> Fraction:
    """Parse ints, Fractions and ``"p/q"`` strings into an exact Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"expected an exact rational, got {type(x).__name__}")


def fraction_str(x: Rational) -> str:
    """Serialize a rational as ``"p/q"`` (``"p"`` for integers)."""
    return str(Fraction(x))


def _check_finite(x: Any) -> None:
    if isinstance(x, (Fraction, int, np.integer)):
        return
    if not cmath.isfinite(complex(x)):
        raise ScalarError(f"non-finite exponent {x!r}")


@lru_cache(maxsize=1 << 16)
def _xi_exact(ell: int, precision: int, r: Fraction) -> Any:
    # r is already reduced to [0, ell)
    if r == 0:
        return complex(1) if precision == FAST_PRECISION else gmpy2.mpc(1)
    if precision == FAST_PRECISION:
        if (4 * r) % ell == 0:  # exact quarter turns
            return [1, 1j, -1, -1j][int(4 * r / ell)]
        return cmath.exp(2j * math.pi * r.numerator / (r.denominator * ell))
    with gmpy2.context(gmpy2.get_context(), precision=precision + 20):
        angle = 2 * gmpy2.const_pi() * gmpy2.mpq(r.numerator, r.denominator * ell)
        s, c = gmpy2.sin_cos(angle)
    # round inside a pinned context so the cached value never depends on the caller's thread
    with gmpy2.context(gmpy2.get_context(), precision=precision):
        return gmpy2.mpc(c, s)


def xi_pow(ctx: Context, x: Exponent) -> Any:
    """``exp(2 pi i x / ell)``; exact rationals are reduced mod ``ell`` first."""
    _check_finite(x)
    if isinstance(x, (int, np.integer, Fraction)):
        return _xi_exact(ctx.ell, ctx.precision, Fraction(x) % ctx.ell)
    if ctx.is_double:
        return cmath.exp(2j * math.pi * complex(x) / ctx.ell)
    z = gmpy2.mpc(x)
    return gmpy2.exp(2 * gmpy2.const_pi() * gmpy2.mpc(0, 1) * z / ctx.ell)


def bracket(ctx: Context, x: Exponent) -> Any:
    """The antisymmetric bracket ``{x} = xi^x - xi^{-x}``."""
    if isinstance(x, (int, np.integer, Fraction)):
        return xi_pow(ctx, x) - xi_pow(ctx, -Fraction(x))
    return xi_pow(ctx, x) - xi_pow(ctx, -x)


def qnum(ctx: Context, x: Exponent) -> Any:
    """Quantum number ``[x] = {x}/{1}``."""
    return bracket(ctx, x) / bracket(ctx, 1)


def qint(ctx: Context, k: int, base: int = 1) -> Any:
    """``(k)_q = (1 - q^k)/(1 - q)`` with ``q = xi^base``."""
    if base % ctx.ell == 0:
        raise ScalarError(f"base {base} is a multiple of ell")
    return (ctx.one - xi_pow(ctx, base * k)) / (ctx.one - xi_pow(ctx, base))


def qfactorial(ctx: Context, i: int, base: int = 1) -> Any:
    """``(i)_q! = (1)_q ... (i)_q`` with ``q = xi^base``, for ``0 <= i <= ell-1``."""
    if not 0 <= i <= ctx.ell - 1:
        raise ScalarError(f"qfactorial index must lie in [0, {ctx.ell - 1}], got {i}")
    out = ctx.one
    for k in range(1, i + 1):
        out = out * qint(ctx, k, base)
    return out


def scalar_to_json(z: Any) -> list[str]:
    """Decimal strings ``[re, im]`` that parse back to the identical value."""
    if isinstance(z, gmpy2.mpc):
        return [str(z.real), str(z.imag)]
    z = complex(z)
    return [repr(z.real), repr(z.imag)]


def scalar_from_json(ctx: Context, pair: list[str]) -> Any:
    re, im = pair
    if ctx.is_double:
        return complex(float(re), float(im))
    return gmpy2.mpc(gmpy2.mpfr(re), gmpy2.mpfr(im))


def to_complex(z: Any) -> complex:
    return complex(z)
