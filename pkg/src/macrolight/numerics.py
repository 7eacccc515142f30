"""Sign-and-log arithmetic for products of huge combinatorial factors.

Probability amplitudes in this package are products of binomial
coefficients (which overflow float64 quickly) and high powers of
reflectivities and trigonometric factors (which underflow just as
quickly).  Every quantity is therefore carried as a pair
``(sign, log|value|)`` and only converted back to a plain float once it
is of moderate size, typically after normalization.

The scalar entry points are :class:`SignedLog`, :func:`signed_product`
and :func:`signed_sum`.  Array variants (used by the vectorized angle
grids) live in the private ``_signed_sum_arrays`` helper and operate on
separate sign / log-magnitude ndarrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "CapacityError",
    "SignedLog",
    "LogFactorialTable",
    "MAX_TABLE_SIZE",
    "log_factorial",
    "log_binomial",
    "signed_product",
    "signed_sum",
]

NEG_INF = float("-inf")

# Relative threshold below which a cancelling signed sum snaps to exact zero.
CANCEL_EPS = 1e-15

# Hard ceiling for factorial arguments; the default table refuses to grow past it.
MAX_TABLE_SIZE = 20000


class CapacityError(Exception):
    """Raised when a computation exceeds a configured size ceiling."""


@dataclass(frozen=True, slots=True)
class SignedLog:
    """A real number stored as ``sign * exp(logmag)``.

    ``sign == 0`` represents exact zero and ``logmag`` is then ignored.
    """

    sign: int
    logmag: float

    @staticmethod
    def zero() -> "SignedLog":
        return SignedLog(0, NEG_INF)

    @staticmethod
    def encode(value: float) -> "SignedLog":
        if value == 0.0:
            return SignedLog(0, NEG_INF)
        return SignedLog(1 if value > 0 else -1, math.log(abs(value)))

    def decode(self) -> float:
        """Back to a plain float; overflows to +-inf past the float64 range."""
        if self.sign == 0:
            return 0.0
        try:
            mag = math.exp(self.logmag)
        except OverflowError:
            mag = math.inf
        return self.sign * mag

    @property
    def is_zero(self) -> bool:
        return self.sign == 0


def signed_product(terms: Iterable[SignedLog]) -> SignedLog:
    """Product of signed-log terms; any zero factor gives exact zero."""
    sign = 1
    logmag = 0.0
    for t in terms:
        if t.sign == 0:
            return SignedLog.zero()
        sign *= t.sign
        logmag += t.logmag
    return SignedLog(sign, logmag)


def signed_sum(terms: Iterable[SignedLog]) -> SignedLog:
    """Sum of signed-log terms.

    The largest magnitude is factored out, the rescaled terms are added
    with compensated summation, and a total below ``CANCEL_EPS`` relative
    to the largest term snaps to exact zero so that cancellations of
    opposite-sign terms cannot leave noise behind.
    """
    live = [(t.sign, t.logmag) for t in terms if t.sign != 0]
    if not live:
        return SignedLog.zero()
    top = max(lm for _, lm in live)
    total = math.fsum(s * math.exp(lm - top) for s, lm in live)
    if abs(total) < CANCEL_EPS:
        return SignedLog.zero()
    return SignedLog(1 if total > 0 else -1, top + math.log(abs(total)))


# Tuple twins of the two functions above.  The cascade recursions call these
# millions of times inside optimizer loops, where dataclass allocation is
# measurable; (sign, logmag) tuples keep that path lean.

def _ssum(terms: Sequence[tuple[int, float]]) -> tuple[int, float]:
    live = [(s, lm) for s, lm in terms if s != 0]
    if not live:
        return (0, NEG_INF)
    top = max(lm for _, lm in live)
    total = math.fsum(s * math.exp(lm - top) for s, lm in live)
    if abs(total) < CANCEL_EPS:
        return (0, NEG_INF)
    return (1 if total > 0 else -1, top + math.log(abs(total)))


def _signed_sum_arrays(
    signs: Sequence[np.ndarray], logmags: Sequence[np.ndarray]
) -> tuple[np.ndarray, np.ndarray]:
    """Elementwise signed sum over parallel term arrays.

    Mirrors :func:`signed_sum`: max factoring per element, Kahan
    accumulation over the (short) term axis, relative snap to zero.
    Inputs broadcast against each other; returns (sign, logmag) arrays.
    """
    shape = np.broadcast_shapes(*(np.shape(l) for l in logmags))
    top = np.full(shape, NEG_INF)
    for lm in logmags:
        np.maximum(top, lm, out=top)
    acc = np.zeros(shape)
    comp = np.zeros(shape)
    with np.errstate(invalid="ignore"):
        for s, lm in zip(signs, logmags):
            term = np.where(lm == NEG_INF, 0.0, s * np.exp(lm - top))
            y = term - comp
            t = acc + y
            comp = (t - acc) - y
            acc = t
    dead = (np.abs(acc) < CANCEL_EPS) | (top == NEG_INF)
    out_sign = np.where(dead, 0, np.sign(acc)).astype(np.int8)
    with np.errstate(divide="ignore", invalid="ignore"):
        out_logmag = np.where(dead, NEG_INF, top + np.log(np.abs(np.where(dead, 1.0, acc))))
    return out_sign, out_logmag


class LogFactorialTable:
    """Precomputed ``values[n] = ln(n!)`` for 0 <= n <= max_n.

    Built once with compensated cumulative summation of ln(n) and then
    read-only, which keeps consecutive differences at ln(n) up to a
    single rounding of the final addition.
    """

    def __init__(self, max_n: int):
        if max_n < 0:
            raise ValueError(f"max_n must be nonnegative, got {max_n}")
        if max_n > MAX_TABLE_SIZE:
            raise CapacityError(
                f"factorial table limited to {MAX_TABLE_SIZE}, requested {max_n}"
            )
        self.max_n = max_n
        values = np.empty(max_n + 1)
        values[0] = 0.0
        acc = 0.0
        comp = 0.0
        for n in range(1, max_n + 1):
            y = math.log(n) - comp
            t = acc + y
            comp = (t - acc) - y
            acc = t
            values[n] = acc
        values.setflags(write=False)
        self.values = values
        # Plain-list copy: Python float lookups are ~3x faster than np scalars
        # in the scalar recursion hot path.
        self._list = values.tolist()

    def log_factorial(self, n: int) -> float:
        if n < 0:
            raise ValueError(f"factorial argument must be nonnegative, got {n}")
        if n > self.max_n:
            raise CapacityError(
                f"log_factorial({n}) exceeds table maximum {self.max_n}"
            )
        return self._list[n]

    def log_binomial(self, n: int, k: int) -> float:
        """ln C(n, k); returns -inf for k outside [0, n] (a structurally
        zero term the caller should drop, not an error)."""
        if n < 0:
            raise ValueError(f"binomial upper index must be nonnegative, got {n}")
        if k < 0 or k > n:
            return NEG_INF
        if n > self.max_n:
            raise CapacityError(
                f"log_binomial({n}, {k}) exceeds table maximum {self.max_n}"
            )
        lst = self._list
        return lst[n] - lst[k] - lst[n - k]


_DEFAULT_TABLE = LogFactorialTable(128)


def _default_table(min_n: int = 0) -> LogFactorialTable:
    """The shared table, grown geometrically on demand up to MAX_TABLE_SIZE."""
    global _DEFAULT_TABLE
    if min_n > _DEFAULT_TABLE.max_n:
        if min_n > MAX_TABLE_SIZE:
            raise CapacityError(
                f"factorial argument {min_n} exceeds hard maximum {MAX_TABLE_SIZE}"
            )
        size = _DEFAULT_TABLE.max_n
        while size < min_n:
            size = min(2 * size, MAX_TABLE_SIZE)
        _DEFAULT_TABLE = LogFactorialTable(size)
    return _DEFAULT_TABLE


def log_factorial(n: int) -> float:
    """ln(n!) from the shared table."""
    if n < 0:
        raise ValueError(f"factorial argument must be nonnegative, got {n}")
    return _default_table(n).log_factorial(n)


def log_binomial(n: int, k: int) -> float:
    """ln C(n, k) from the shared table; -inf for k outside [0, n]."""
    if n < 0:
        raise ValueError(f"binomial upper index must be nonnegative, got {n}")
    if k < 0 or k > n:
        return NEG_INF
    return _default_table(n).log_binomial(n, k)
