"""Laurent polynomials with complex coefficients, stored densely from a lowest exponent."""

from __future__ import annotations

from dataclasses import dataclass
from numbers import Number

import numpy as np

PRUNE_REL = 1e-15


@dataclass(frozen=True, eq=False)
class LaurentPolynomial:
    """``sum_j coeffs[j] * z**(lo + j)``.

    Coefficients below ``1e-15`` times the largest one are zeroed and trimmed
    from both ends, so the stored support is always tight.
    """

    lo: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex)).copy()
        scale = np.max(np.abs(c), initial=0.0)
        c[np.abs(c) <= PRUNE_REL * scale] = 0
        nz = np.flatnonzero(c)
        lo = int(self.lo)
        if nz.size == 0:
            c, lo = np.zeros(0, dtype=complex), 0
        else:
            lo += int(nz[0])
            c = c[nz[0]:nz[-1] + 1]
        c.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def monomial(cls, j: int, c: complex = 1.0) -> "LaurentPolynomial":
        return cls(j, np.array([c]))

    @classmethod
    def from_dict(cls, terms: dict[int, complex]) -> "LaurentPolynomial":
        if not terms:
            return cls(0, np.zeros(0))
        lo, hi = min(terms), max(terms)
        c = np.zeros(hi - lo + 1, dtype=complex)
        for j, v in terms.items():
            c[j - lo] += v
        return cls(lo, c)

    def to_dict(self) -> dict[int, complex]:
        return {self.lo + i: complex(v) for i, v in enumerate(self.coeffs) if v != 0}

    @property
    def hi(self) -> int:
        return self.lo + len(self.coeffs) - 1

    @property
    def support(self) -> tuple[int, int]:
        return self.lo, self.hi

    def is_zero(self) -> bool:
        return len(self.coeffs) == 0

    def coefficient(self, j: int) -> complex:
        i = j - self.lo
        return complex(self.coeffs[i]) if 0 <= i < len(self.coeffs) else 0j

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if self.is_zero():
            return np.zeros_like(z)
        # Horner in z for the nonnegative part, in 1/z for the negative part
        out = np.zeros_like(z)
        for c in self.coeffs[::-1]:
            out = out * z + c
        return out * z ** self.lo

    def __add__(self, other):
        if isinstance(other, Number):
            other = LaurentPolynomial.monomial(0, other)
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        lo, hi = min(self.lo, other.lo), max(self.hi, other.hi)
        c = np.zeros(hi - lo + 1, dtype=complex)
        c[self.lo - lo:self.hi - lo + 1] += self.coeffs
        c[other.lo - lo:other.hi - lo + 1] += other.coeffs
        return LaurentPolynomial(lo, c)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPolynomial(self.lo, -self.coeffs)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, LaurentPolynomial):
            if self.is_zero() or other.is_zero():
                return LaurentPolynomial(0, [])
            return LaurentPolynomial(self.lo + other.lo, np.convolve(self.coeffs, other.coeffs))
        return LaurentPolynomial(self.lo, self.coeffs * complex(other))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return LaurentPolynomial(self.lo, self.coeffs / complex(c))

    def shift(self, m: int) -> "LaurentPolynomial":
        """Multiply by ``z**m``."""
        return LaurentPolynomial(self.lo + m, self.coeffs)

    def reflect(self) -> "LaurentPolynomial":
        """``conj(P(1/conj(z)))``: exponents negated, coefficients conjugated."""
        return LaurentPolynomial(-self.hi, np.conj(self.coeffs[::-1]))

    def max_abs_diff(self, other: "LaurentPolynomial") -> float:
        d = self - other
        return float(np.max(np.abs(d.coeffs), initial=0.0))

    def __repr__(self):
        return f"LaurentPolynomial({self.to_dict()})"
