"""Transfer matrices, the Laurent polynomial solution families and Szego polynomials.

A solution ``(u, v)`` of the CMV eigenvalue system advances one site via
``(u, v)(k) = T(z, k) (u, v)(k - 1)`` where, with ``rho = rho_k``::

    k odd:  T = [[alpha_k, z], [1/z, conj(alpha_k)]] / rho
    k even: T = [[conj(alpha_k), 1], [1, alpha_k]] / rho

``det T = -1``, so stepping backwards uses the adjugate with a sign flip.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError
from .laurent import LaurentPolynomial as LP
from .verblunsky import VerblunskySequence

ONE = LP.monomial(0)
Z = LP.monomial(1)


def _coeffs(seq: VerblunskySequence, k: int):
    alpha = seq[k]
    rho = seq.rho(k)
    if rho == 0:
        raise DomainError(f"cannot transfer across boundary site {k} (rho = 0)")
    return alpha, rho


def transfer_matrix(seq: VerblunskySequence, k: int, z: complex) -> np.ndarray:
    alpha, rho = _coeffs(seq, k)
    if k % 2:
        T = [[alpha, z], [1 / z, np.conj(alpha)]]
    else:
        T = [[np.conj(alpha), 1], [1, alpha]]
    return np.array(T, dtype=complex) / rho


def inverse_transfer_matrix(seq: VerblunskySequence, k: int, z: complex) -> np.ndarray:
    alpha, rho = _coeffs(seq, k)
    if k % 2:
        T = [[-np.conj(alpha), z], [1 / z, -alpha]]
    else:
        T = [[-alpha, 1], [1, -np.conj(alpha)]]
    return np.array(T, dtype=complex) / rho


def szego_transfer(seq: VerblunskySequence, k: int, zeta: complex) -> np.ndarray:
    alpha = seq[k]
    return np.array([[zeta, alpha], [np.conj(alpha) * zeta, 1]], dtype=complex)


def step_forward(seq, k, u, v):
    """Apply ``T(., k)`` to a pair of Laurent polynomials."""
    alpha, rho = _coeffs(seq, k)
    ac = np.conj(alpha)
    if k % 2:
        return (alpha * u + v.shift(1)) / rho, (u.shift(-1) + ac * v) / rho
    return (ac * u + v) / rho, (u + alpha * v) / rho


def step_backward(seq, k, u, v):
    """Apply ``T(., k)^{-1}``, i.e. go from site ``k`` to ``k - 1``."""
    alpha, rho = _coeffs(seq, k)
    ac = np.conj(alpha)
    if k % 2:
        return (-ac * u + v.shift(1)) / rho, (u.shift(-1) - alpha * v) / rho
    return (-alpha * u + v) / rho, (u - ac * v) / rho


def seeds(side: str, k0: int):
    """Initial values ``((p, r), (q, s))`` at ``k0`` as Laurent polynomials."""
    odd = k0 % 2 == 1
    if side == "plus":
        return ((Z, ONE), (Z, -ONE)) if odd else ((ONE, ONE), (-ONE, ONE))
    if side == "minus":
        return ((ONE, -ONE), (ONE, ONE)) if odd else ((-Z, ONE), (Z, ONE))
    raise ConfigError(f"side must be 'plus' or 'minus', got {side!r}")


def tilde_shift(side: str, k0: int) -> int:
    """Power of ``z`` dividing ``p`` and ``q`` in the tilde variants (0 or 1)."""
    odd = k0 % 2 == 1
    return int(odd) if side == "plus" else int(not odd)


@dataclass
class SolutionFamily:
    """Laurent polynomial solutions ``p, q`` (first component) and ``r, s`` (second).

    Entries are keyed by site.  ``(p, r)`` and ``(q, s)`` are the two
    solutions normalised at ``k0`` for the given side.
    """

    side: str
    k0: int
    p: dict = field(default_factory=dict)
    r: dict = field(default_factory=dict)
    q: dict = field(default_factory=dict)
    s: dict = field(default_factory=dict)

    @property
    def sites(self) -> list[int]:
        return sorted(self.p)

    def p_tilde(self, k: int) -> LP:
        return self.p[k].shift(-tilde_shift(self.side, self.k0))

    def q_tilde(self, k: int) -> LP:
        return self.q[k].shift(-tilde_shift(self.side, self.k0))


def solution_family(seq: VerblunskySequence, k0: int, side: str,
                    k_min: int, k_max: int) -> SolutionFamily:
    """Propagate the seeded solutions from ``k0`` out to ``[k_min, k_max]``."""
    if not k_min <= k0 <= k_max:
        raise DomainError(f"k0={k0} not in [{k_min}, {k_max}]")
    fam = SolutionFamily(side, k0)
    (p, r), (q, s) = seeds(side, k0)
    fam.p[k0], fam.r[k0], fam.q[k0], fam.s[k0] = p, r, q, s
    for k in range(k0 + 1, k_max + 1):
        fam.p[k], fam.r[k] = step_forward(seq, k, fam.p[k - 1], fam.r[k - 1])
        fam.q[k], fam.s[k] = step_forward(seq, k, fam.q[k - 1], fam.s[k - 1])
    for k in range(k0 - 1, k_min - 1, -1):
        fam.p[k], fam.r[k] = step_backward(seq, k + 1, fam.p[k + 1], fam.r[k + 1])
        fam.q[k], fam.s[k] = step_backward(seq, k + 1, fam.q[k + 1], fam.s[k + 1])
    return fam


def wronskian(u1, v1, u2, v2):
    return u1 * v2 - u2 * v1


def expected_wronskian(side: str, k0: int, k: int, z):
    """Closed form of ``W((p, r), (q, s))`` at site ``k``."""
    odd = k0 % 2 == 1
    if side == "plus":
        return (-1) ** k * (2 * z if odd else 2 + 0 * z)
    return (-1) ** (k + 1) * (2 + 0 * z if odd else 2 * z)


def conjugation_check(fam: SolutionFamily) -> float:
    """Largest coefficient error in the reflection identities linking ``r, s`` to ``p, q``.

    Plus side: ``r = refl(p~)`` and ``s = -refl(q~)``; minus side carries the
    opposite signs.
    """
    sign = 1 if fam.side == "plus" else -1
    worst = 0.0
    for k in fam.sites:
        worst = max(worst,
                    fam.r[k].max_abs_diff(sign * fam.p_tilde(k).reflect()),
                    fam.s[k].max_abs_diff(-sign * fam.q_tilde(k).reflect()))
    return worst


@dataclass
class FamilyValues:
    """Numerical values of a solution family at a fixed ``z`` on ``[k_min, k_max]``."""

    side: str
    k0: int
    z: complex
    k_min: int
    p: np.ndarray
    r: np.ndarray
    q: np.ndarray
    s: np.ndarray

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_min + len(self.p))

    def at(self, k: int) -> int:
        i = k - self.k_min
        if not 0 <= i < len(self.p):
            raise DomainError(f"site {k} outside the evaluated window")
        return i

    @property
    def tilde(self) -> complex:
        return self.z ** -tilde_shift(self.side, self.k0)


def propagate(seq: VerblunskySequence, k0: int, z: complex, k_min: int, k_max: int,
              side: str = "plus") -> FamilyValues:
    """Evaluate the solution family at ``z`` by running the transfer recursion numerically."""
    if not k_min <= k0 <= k_max:
        raise DomainError(f"k0={k0} not in [{k_min}, {k_max}]")
    z = complex(z)
    n = k_max - k_min + 1
    out = np.zeros((4, n), dtype=complex)
    (p, r), (q, s) = seeds(side, k0)
    i0 = k0 - k_min
    out[:, i0] = [p(z), r(z), q(z), s(z)]
    for k in range(k0 + 1, k_max + 1):
        T = transfer_matrix(seq, k, z)
        i = k - k_min
        out[0:2, i] = T @ out[0:2, i - 1]
        out[2:4, i] = T @ out[2:4, i - 1]
    for k in range(k0 - 1, k_min - 1, -1):
        Ti = inverse_transfer_matrix(seq, k + 1, z)
        i = k - k_min
        out[0:2, i] = Ti @ out[0:2, i + 1]
        out[2:4, i] = Ti @ out[2:4, i + 1]
    return FamilyValues(side, k0, z, k_min, out[0], out[1], out[2], out[3])


def szego_polynomials(seq: VerblunskySequence, n: int) -> tuple[list[LP], list[LP]]:
    """Monic ``phi(k)`` and reversed ``phi*(k)`` for ``k = 0..n`` from
    ``(phi, phi*)(k) = [[z, alpha_k], [conj(alpha_k) z, 1]] (phi, phi*)(k-1)``."""
    phi, phis = [ONE], [ONE]
    for k in range(1, n + 1):
        alpha = seq[k]
        phi.append(phi[-1].shift(1) + alpha * phis[-1])
        phis.append(np.conj(alpha) * phi[-2].shift(1) + phis[-1])
    return phi, phis
