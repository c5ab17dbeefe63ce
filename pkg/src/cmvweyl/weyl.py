"""Weyl-Titchmarsh m-functions, their Riccati equations and the 2x2 M-matrix.

Half-lattice m-functions come from spectral measures of finite truncations.
A context fixes the absolute window ``[lo, hi]`` so that m-functions at
neighbouring sites share both far boundaries, which makes the Riccati
identities exact up to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularError, SizeError
from .spectral import CircleMeasure, caratheodory_integral, measure_from_operator
from .transfer import propagate
from .verblunsky import (BandedUnitary, DerivedCoefficients, VerblunskySequence,
                         build_finite_cmv, derive_coefficients)

SINGULAR_TOL = 1e-13


def _guard(den, what):
    if np.any(np.abs(den) < SINGULAR_TOL):
        raise SingularError(f"{what}: denominator below {SINGULAR_TOL}")
    return den


@dataclass(frozen=True, eq=False)
class MFunctionContext:
    """Everything needed to evaluate ``m_+(., k0)``, ``m_-(., k0-1)`` and ``M_+-(., k0)``.

    ``mu_plus`` is the measure of the plus truncation on ``[k0, hi]`` at
    ``delta_{k0}``; ``mu_minus`` is that of the minus truncation on
    ``[lo, k0-1]`` at ``delta_{k0-1}``.  The far ends carry ``alpha_lo =
    e^{i s_lo}`` and ``alpha_{hi+1} = e^{i s_hi}``.
    """

    seq: VerblunskySequence
    k0: int
    lo: int
    hi: int
    mu_plus: CircleMeasure
    mu_minus: CircleMeasure
    s_lo: float = 0.0
    s_hi: float = 0.0

    @property
    def minus_site(self) -> int:
        return self.k0 - 1

    @property
    def coefficients(self) -> DerivedCoefficients:
        return derive_coefficients(self.seq, self.k0)


def build_context(seq: VerblunskySequence, k0: int, lo: int, hi: int,
                  s_lo: float = 0.0, s_hi: float = 0.0) -> MFunctionContext:
    if k0 - lo < 2 or hi - k0 + 1 < 2:
        raise SizeError(f"window [{lo}, {hi}] leaves fewer than 2 sites on a side of k0={k0}")
    plus = build_finite_cmv(seq, k0, hi, 0.0, s_hi)
    minus = build_finite_cmv(seq, lo, k0 - 1, s_lo, 0.0)
    return MFunctionContext(seq, k0, lo, hi, measure_from_operator(plus, k0),
                            measure_from_operator(minus, k0 - 1), s_lo, s_hi)


def context_from_operator(U: BandedUnitary, seq: VerblunskySequence, k0: int) -> MFunctionContext:
    """Context whose halves are the two pieces of ``U`` split at ``alpha_{k0}``."""
    return build_context(seq, k0, U.offset, U.k_hi, *U.phases)


def m_function(ctx: MFunctionContext, z, side: str = "plus"):
    """``m_+(z, k0)`` or, for ``side='minus'``, ``m_-(z, k0-1)``."""
    if side == "plus":
        return caratheodory_integral(ctx.mu_plus, z)
    if side == "minus":
        return -caratheodory_integral(ctx.mu_minus, z)
    raise DomainError(f"side must be 'plus' or 'minus', got {side!r}")


def _mobius_from_hat(d: DerivedCoefficients, x):
    num = d.a.real + 1j * d.b.imag * x
    den = _guard(1j * d.a.imag + d.b.real * x, "M from hat-M")
    return num / den


def big_M(ctx: MFunctionContext, z, side: str = "plus"):
    """``M_+-(z, k0)``: ``M_+ = m_+`` and ``M_-`` is a Mobius image of ``m_-(z, k0-1)``."""
    if side == "plus":
        return m_function(ctx, z, "plus")
    return _mobius_from_hat(ctx.coefficients, m_function(ctx, z, "minus"))


def hat_M(ctx: MFunctionContext, z, side: str = "plus"):
    """``hat M_+-(z, k0-1)``, the coefficients of the Weyl solutions in the
    minus family normalised at ``k0-1``."""
    if side == "minus":
        return m_function(ctx, z, "minus")
    d = ctx.coefficients
    m = m_function(ctx, z, "plus")
    den = _guard(-1j * d.b.imag + d.b.real * m, "hat-M")
    return (d.a.real - 1j * d.a.imag * m) / den


def M_from_hat(ctx: MFunctionContext, hat):
    return _mobius_from_hat(ctx.coefficients, hat)


def phi_transform(M):
    return (M - 1) / _guard(M + 1, "Phi transform")


def phi_inverse_transform(phi):
    return (1 + phi) / _guard(1 - phi, "inverse Phi transform")


def riccati_residual(seq: VerblunskySequence, k: int, z, mode: str, prev, cur):
    """Residual of the first-order equation linking site ``k-1`` to ``k``.

    ``mode='M'`` takes ``M(k-1), M(k)``; ``'Phi'`` takes ``Phi(k-1), Phi(k)``;
    ``'invPhi'`` takes ``1/Phi_-(k-1), 1/Phi_-(k)``.
    """
    d = derive_coefficients(seq, k)
    a, b, alpha = d.a, d.b, d.alpha
    if mode == "M":
        return ((z * np.conj(b) - b) * prev * cur + (z * np.conj(b) + b) * cur
                - (z * np.conj(a) + a) * prev - (z * np.conj(a) - a))
    if mode == "Phi":
        return alpha * prev * cur - prev + z * cur - np.conj(alpha) * z
    if mode == "invPhi":
        return np.conj(alpha) * z * prev * cur + cur - z * prev - alpha
    raise DomainError(f"unknown Riccati mode {mode!r}")


def schur_series(seq: VerblunskySequence, k: int, J: int, kind: str = "plus") -> np.ndarray:
    """Taylor coefficients at ``z = 0``.

    ``kind='plus'``: ``Phi_+(z, k) = sum_{j>=1} c_j z^j`` (index 0 is 0), using
    ``alpha_{k+1} .. alpha_{k+J}``.  ``kind='minus_inverse'``: ``1/Phi_-(z, k) =
    sum_{j>=0} c_j z^j`` using ``alpha_k .. alpha_{k-J}``.
    """
    if kind == "plus":
        # c[m][j] = coefficient j of Phi_+(., k+m)
        c = {m: np.zeros(J + 1, dtype=complex) for m in range(J + 1)}
        for j in range(1, J + 1):
            for m in range(J - j, -1, -1):
                al = seq[k + m + 1]
                conv = sum(c[m + 1][j - l] * c[m][l] for l in range(1, j))
                c[m][j] = al * conv + c[m + 1][j - 1] - (np.conj(al) if j == 1 else 0)
        return c[0]
    if kind == "minus_inverse":
        c = {m: np.zeros(J + 1, dtype=complex) for m in range(J + 1)}
        for j in range(J + 1):
            for m in range(J - j, -1, -1):
                al = seq[k - m]
                if j == 0:
                    c[m][0] = al
                    continue
                conv = sum(c[m + 1][j - 1 - l] * c[m][l] for l in range(j))
                c[m][j] = -np.conj(al) * conv + c[m + 1][j - 1]
        return c[0]
    raise DomainError(f"unknown series kind {kind!r}")


def recursive_M(seq: VerblunskySequence, k: int, z, side: str = "plus",
                tail: float | None = None):
    """``M_+-(z, k)`` from the Schur-type recursions over the whole coefficient window.

    Plus side runs ``Phi_+`` down from the top of the window, minus side runs
    ``1/Phi_-`` up from the bottom.  ``tail=None`` continues the sequence by
    zeros beyond the window; a float ``s`` closes it with a unit coefficient
    ``e^{is}`` just outside (top) or at the first site (bottom).
    """
    z = np.asarray(z, dtype=complex)
    outside = np.abs(z) > 1
    w = np.where(outside, 1 / np.conj(np.where(z == 0, 1, z)), z)
    lo, hi = seq.window
    if side == "plus":
        phi = np.zeros_like(w) if tail is None else -w * np.exp(-1j * tail)
        for j in range(hi, k, -1):
            al = seq[j]
            phi = w * (phi - np.conj(al)) / (1 - al * phi)
        M = (1 + phi) / (1 - phi)
    else:
        start = lo
        if tail is None:
            x = np.zeros_like(w)
        else:
            x = np.full_like(w, np.exp(1j * tail))
            start = lo + 1
        for j in range(start, k + 1):
            al = seq[j]
            x = (al + w * x) / (1 + np.conj(al) * w * x)
        M = (x + 1) / (x - 1)
    return np.where(outside, -np.conj(M), M)


@dataclass
class WeylSolutions:
    k_min: int
    u_plus: np.ndarray
    v_plus: np.ndarray
    u_minus: np.ndarray
    v_minus: np.ndarray
    M_plus: complex
    M_minus: complex

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_min + len(self.u_plus))


def weyl_solutions(ctx: MFunctionContext, z: complex, k_min: int, k_max: int) -> WeylSolutions:
    """``(u, v)_+- = (q_+, s_+) + M_+-(z, k0) (p_+, r_+)`` on ``[k_min, k_max]``."""
    fam = propagate(ctx.seq, ctx.k0, z, k_min, k_max, "plus")
    Mp, Mm = complex(big_M(ctx, z, "plus")), complex(big_M(ctx, z, "minus"))
    return WeylSolutions(k_min, fam.q + Mp * fam.p, fam.s + Mp * fam.r,
                         fam.q + Mm * fam.p, fam.s + Mm * fam.r, Mp, Mm)


def phi_from_solutions(u, v, k: int, z):
    """``Phi(z, k)`` as ``z v/u`` for odd ``k`` and ``u/v`` for even ``k``."""
    return z * v / u if k % 2 else u / v


# --- 2x2 M-matrix ---------------------------------------------------------------

@dataclass
class MatrixMValue:
    z: complex
    k: int
    route_a: np.ndarray
    route_b: np.ndarray

    @property
    def residual(self) -> float:
        return float(np.max(np.abs(self.route_a - self.route_b)))


def matrix_M_closed(d: DerivedCoefficients, k: int, Mp, Mm) -> np.ndarray:
    """The 2x2 M-matrix at site ``k`` from ``M_+-(z, k)``."""
    rho, a, b = d.rho, d.a, d.b
    ac, bc = np.conj(a), np.conj(b)
    diff = _guard(Mp - Mm, "M-matrix")
    m00 = 1 + (ac - bc * Mp) * (a + b * Mm) / (rho ** 2 * diff)
    m11 = (1 - Mp * Mm) / diff
    left = (1 - Mp) * (ac - bc * Mm)
    right = (1 + Mp) * (a + b * Mm)
    if k % 2:
        m01, m10 = left, right
    else:
        m01, m10 = right, left
    return np.array([[m00, -m01 / (rho * diff)], [-m10 / (rho * diff), m11]])


def matrix_M_dense(U: BandedUnitary, k: int, z: complex) -> np.ndarray:
    """``delta + 2 z (U - z)^{-1}`` restricted to sites ``(k-1, k)``."""
    idx = [U.index(k - 1), U.index(k)]
    rhs = np.zeros((U.size, 2), dtype=complex)
    rhs[idx, [0, 1]] = 1
    G = np.linalg.solve(U.matrix - z * np.eye(U.size), rhs)[idx, :]
    return np.eye(2) + 2 * z * G


def matrix_M(U: BandedUnitary, seq: VerblunskySequence, k: int, z: complex) -> MatrixMValue:
    """M-matrix at ``k`` by the closed form (half-lattice ``M_+-``) and by a dense solve."""
    ctx = context_from_operator(U, seq, k)
    Mp, Mm = big_M(ctx, z, "plus"), big_M(ctx, z, "minus")
    return MatrixMValue(complex(z), k, matrix_M_closed(ctx.coefficients, k, Mp, Mm),
                        matrix_M_dense(U, k, z))


def congruence_matrix(d: DerivedCoefficients, k: int) -> np.ndarray:
    if k % 2:
        return np.array([[d.rho, d.rho], [-d.b, d.a]])
    return np.array([[-d.rho, d.rho], [np.conj(d.b), np.conj(d.a)]])


def matrix_M_tilde(d: DerivedCoefficients, k: int, M: np.ndarray) -> np.ndarray:
    """``A^* M A / 4`` with the parity-dependent congruence ``A``."""
    A = congruence_matrix(d, k)
    return A.conj().T @ M @ A / 4


def matrix_M_tilde_closed(d: DerivedCoefficients, Mp, Mm) -> np.ndarray:
    diff = _guard(Mp - Mm, "tilde M-matrix")
    h = 0.5 * (Mp + Mm) / diff + 0.5 * d.alpha.real
    im = 0.5j * d.alpha.imag
    return np.array([[1 / diff + im, h], [-h, -Mp * Mm / diff - im]])


def phi_11(ctx: MFunctionContext, z: complex) -> tuple[complex, complex]:
    """``Phi_11(z, k0)`` from the ``(1,1)`` entry of the M-matrix and as ``Phi_+/Phi_-``."""
    Mp, Mm = complex(big_M(ctx, z, "plus")), complex(big_M(ctx, z, "minus"))
    m11 = (1 - Mp * Mm) / _guard(Mp - Mm, "Phi_11")
    via_matrix = (m11 - 1) / _guard(m11 + 1, "Phi_11")
    # 1/Phi_- stays finite since Re M_- < 0
    via_ratio = phi_transform(Mp) * (Mm + 1) / _guard(Mm - 1, "Phi_11 ratio")
    return complex(via_matrix), complex(via_ratio)
