"""GF(2^q) arithmetic backed by log/exp tables.

Scalar methods operate on Python ints; the ``*_array`` methods and
:meth:`FieldContext.matmul` operate elementwise on numpy arrays and are
what the codec and simulator use on their hot paths.
"""

from __future__ import annotations

import numpy as np

# Primitive polynomials (x is a generator) for each supported exponent.
DEFAULT_POLYNOMIALS = {
    1: 0x3,
    2: 0x7,
    3: 0xB,
    4: 0x13,
    5: 0x25,
    6: 0x43,
    7: 0x89,
    8: 0x11D,
    9: 0x211,
    10: 0x409,
    11: 0x805,
    12: 0x1053,
    13: 0x201B,
    14: 0x4443,
    15: 0x8003,
    16: 0x1100B,
}


class FieldError(ValueError):
    """Invalid field parameters or an operation outside the field's domain."""


def _clmul_mod(a: int, b: int, q: int, poly: int) -> int:
    result = 0
    top = 1 << q
    while b:
        if b & 1:
            result ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= poly
    return result


class FieldContext:
    """Arithmetic tables for GF(2^q).

    Immutable after construction. Construction fails with :class:`FieldError`
    if ``primitive_element`` does not generate the multiplicative group
    under ``reduction_polynomial``.
    """

    def __init__(self, q: int = 8, reduction_polynomial: int | None = None,
                 primitive_element: int | None = None):
        if not 1 <= q <= 16:
            raise FieldError(f"field exponent q must be in [1, 16], got {q}")
        if reduction_polynomial is None:
            reduction_polynomial = DEFAULT_POLYNOMIALS[q]
        if reduction_polynomial.bit_length() != q + 1:
            raise FieldError(
                f"reduction polynomial {reduction_polynomial:#x} is not of degree {q}")
        if primitive_element is None:
            primitive_element = 2 if q > 1 else 1
        self.q = q
        self.size = 1 << q
        self.order = self.size - 1
        self.reduction_polynomial = reduction_polynomial
        self.primitive_element = primitive_element
        self.dtype = np.uint8 if q <= 8 else np.uint16
        if not 0 < primitive_element < self.size:
            raise FieldError(f"primitive element {primitive_element:#x} not in field")

        exp = np.zeros(2 * self.order, dtype=np.int64)
        log = np.full(self.size, -1, dtype=np.int64)
        x = 1
        for i in range(self.order):
            if log[x] != -1:
                raise FieldError(
                    f"{primitive_element:#x} is not primitive modulo "
                    f"{reduction_polynomial:#x} (order {i})")
            exp[i] = x
            log[x] = i
            x = _clmul_mod(x, primitive_element, q, reduction_polynomial)
        if x != 1:
            raise FieldError(f"{reduction_polynomial:#x} is not irreducible")
        exp[self.order:] = exp[:self.order]
        # doubled exp table lets log sums index without a modulo
        self.exp_table = exp[:self.order].astype(self.dtype)
        self._exp2 = exp
        self.log_table = log
        for arr in (self.exp_table, self._exp2, self.log_table):
            arr.flags.writeable = False

        inv = np.zeros(self.size, dtype=np.int64)
        inv[1:] = exp[(self.order - log[1:]) % self.order]
        self.inv_table = inv.astype(self.dtype)
        self.inv_table.flags.writeable = False

        if q <= 8:
            a = np.arange(self.size)
            la, lb = np.meshgrid(log, log, indexing="ij")
            table = exp[(la + lb) % self.order]
            table[(a == 0)[:, None] | (a == 0)[None, :]] = 0
            self.mul_table = table.astype(self.dtype)
            self.mul_table.flags.writeable = False
        else:
            self.mul_table = None

    def __repr__(self) -> str:
        return (f"FieldContext(q={self.q}, reduction_polynomial="
                f"{self.reduction_polynomial:#x}, primitive_element={self.primitive_element:#x})")

    def __eq__(self, other) -> bool:
        return (isinstance(other, FieldContext) and self.q == other.q
                and self.reduction_polynomial == other.reduction_polynomial
                and self.primitive_element == other.primitive_element)

    def __hash__(self) -> int:
        return hash((self.q, self.reduction_polynomial, self.primitive_element))

    def __reduce__(self):
        return (FieldContext, (self.q, self.reduction_polynomial, self.primitive_element))

    # scalar arithmetic

    def _check(self, a: int) -> int:
        a = int(a)
        if not 0 <= a < self.size:
            raise FieldError(f"{a} is not an element of GF(2^{self.q})")
        return a

    def add(self, a: int, b: int) -> int:
        return self._check(a) ^ self._check(b)

    sub = add

    def mul(self, a: int, b: int) -> int:
        a, b = self._check(a), self._check(b)
        if a == 0 or b == 0:
            return 0
        return int(self._exp2[self.log_table[a] + self.log_table[b]])

    def inv(self, a: int) -> int:
        if self._check(a) == 0:
            raise ZeroDivisionError("zero has no multiplicative inverse")
        return int(self.inv_table[a])

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def pow(self, base: int, exponent: int) -> int:
        base = self._check(base)
        if exponent < 0:
            raise FieldError("negative exponents are not supported")
        if exponent == 0:
            return 1
        if base == 0:
            return 0
        return int(self._exp2[(self.log_table[base] * exponent) % self.order])

    def alpha_pow(self, exponent: int) -> int:
        """``primitive_element ** exponent``; exponent is taken mod 2^q - 1."""
        return int(self.exp_table[exponent % self.order])

    # vectorised arithmetic

    def mul_array(self, a, b) -> np.ndarray:
        a = np.asarray(a)
        b = np.asarray(b)
        if self.mul_table is not None:
            return self.mul_table[a, b]
        la = self.log_table[a]
        lb = self.log_table[b]
        out = self._exp2[(la + lb) % self.order].astype(self.dtype)
        return np.where((a == 0) | (b == 0), self.dtype(0), out)

    def inv_array(self, a) -> np.ndarray:
        a = np.asarray(a)
        if np.any(a == 0):
            raise ZeroDivisionError("zero has no multiplicative inverse")
        return self.inv_table[a]

    def matmul(self, a, b) -> np.ndarray:
        """Matrix product over the field; ``a`` is (r, k), ``b`` is (k, c)."""
        a = np.asarray(a, dtype=self.dtype)
        b = np.asarray(b, dtype=self.dtype)
        if a.shape[1] != b.shape[0]:
            raise ValueError(f"shape mismatch {a.shape} x {b.shape}")
        if a.shape[1] == 0:
            return np.zeros((a.shape[0], b.shape[1]), dtype=self.dtype)
        prod = self.mul_array(a[:, :, None], b[None, :, :])
        return np.bitwise_xor.reduce(prod, axis=1)

    def random_elements(self, rng: np.random.Generator, shape) -> np.ndarray:
        return rng.integers(0, self.size, size=shape, dtype=self.dtype)


GF256 = FieldContext(8)
