"""Spectral measures of finite CMV matrices and orthonormal Laurent polynomials."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import schur

from .errors import IllConditionedError, ParseError, PoleRegionError, PreconditionError, RankError
from .laurent import LaurentPolynomial as LP
from .transfer import solution_family
from .verblunsky import BandedUnitary, VerblunskySequence, derive_coefficients, unitarity_residual

WEIGHT_FLOOR = 1e-14
UNITARITY_TOL = 1e-8
TWO_PI = 2 * np.pi


@dataclass(frozen=True, eq=False)
class CircleMeasure:
    """Finite positive measure on the unit circle.

    Atoms sit at ``exp(i*angles)`` with ``angles`` increasing in ``[0, 2*pi)``.
    ``density`` (optional) holds Radon-Nikodym samples against ``dtheta/(2*pi)``
    on the uniform grid ``2*pi*j/len(density)``.
    """

    angles: np.ndarray
    weights: np.ndarray
    density: np.ndarray | None = None

    def __post_init__(self):
        th = np.mod(np.asarray(self.angles, dtype=float), TWO_PI)
        th[th >= TWO_PI] = 0.0
        w = np.asarray(self.weights, dtype=float)
        if th.shape != w.shape:
            raise ParseError("angles and weights differ in length")
        if np.any(w <= 0):
            raise ParseError("atom weights must be positive")
        order = np.argsort(th, kind="stable")
        th, w = th[order], w[order]
        if th.size > 1 and np.any(np.diff(th) <= 0):
            # merge coincident atoms
            keep = np.concatenate([[True], np.diff(th) > 0])
            groups = np.cumsum(keep) - 1
            w = np.bincount(groups, weights=w)
            th = th[keep]
        object.__setattr__(self, "angles", th)
        object.__setattr__(self, "weights", w)
        if self.density is not None:
            d = np.asarray(self.density, dtype=float)
            if np.any(d < 0):
                raise ParseError("density samples must be nonnegative")
            object.__setattr__(self, "density", d)

    @property
    def points(self) -> np.ndarray:
        return np.exp(1j * self.angles)

    @property
    def total_mass(self) -> float:
        mass = float(self.weights.sum())
        if self.density is not None:
            mass += float(self.density.mean())
        return mass

    def integrate(self, f) -> complex:
        """``integral f dmu`` for a vectorised ``f`` of points on the circle."""
        val = complex(np.sum(self.weights * f(self.points)))
        if self.density is not None:
            g = len(self.density)
            zeta = np.exp(1j * TWO_PI * np.arange(g) / g)
            val += complex(np.mean(self.density * f(zeta)))
        return val

    def to_json(self) -> dict:
        out = {"atoms": [[float(t), float(w)] for t, w in zip(self.angles, self.weights)]}
        if self.density is not None:
            out["density"] = {"grid_size": len(self.density), "values": self.density.tolist()}
        return out

    @classmethod
    def from_json(cls, data: dict) -> "CircleMeasure":
        try:
            atoms = np.asarray(data["atoms"], dtype=float).reshape(-1, 2)
            density = None
            if data.get("density") is not None:
                density = np.asarray(data["density"]["values"], dtype=float)
                if len(density) != int(data["density"]["grid_size"]):
                    raise ParseError("density grid_size does not match values")
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad measure record: {exc}") from exc
        return cls(atoms[:, 0], atoms[:, 1], density)


def read_measure(path: str | Path) -> CircleMeasure:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return CircleMeasure.from_json(data)


def eigensystem(U: BandedUnitary) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and an orthonormal eigenbasis (columns) of a finite CMV matrix.

    The complex Schur form of a normal matrix is diagonal, so the Schur
    vectors are orthonormal eigenvectors even for repeated eigenvalues.
    """
    res = unitarity_residual(U)
    if res > UNITARITY_TOL:
        raise PreconditionError(f"operator is not unitary (residual {res:.3g})")
    T, Z = schur(U.matrix, output="complex")
    return np.diag(T).copy(), Z


def measure_from_operator(U: BandedUnitary, k: int) -> CircleMeasure:
    """Spectral measure of ``U`` at the basis vector ``delta_k``."""
    lam, Z = eigensystem(U)
    w = np.abs(Z[U.index(k), :]) ** 2
    keep = w >= WEIGHT_FLOOR
    return CircleMeasure(np.angle(lam[keep]), w[keep])


def moment(mu: CircleMeasure, j: int) -> complex:
    return mu.integrate(lambda zeta: zeta ** j)


def gram_matrix(polys: list[LP], mu: CircleMeasure) -> np.ndarray:
    """``G[i, j] = integral conj(P_i) P_j dmu`` (atoms and density)."""
    pts = [mu.points]
    wts = [mu.weights]
    if mu.density is not None:
        g = len(mu.density)
        pts.append(np.exp(1j * TWO_PI * np.arange(g) / g))
        wts.append(mu.density / g)
    zeta, w = np.concatenate(pts), np.concatenate(wts)
    vals = np.array([P(zeta) for P in polys])
    return (vals.conj() * w) @ vals.T


# --- Gram-Schmidt on monomials ------------------------------------------------

def _interleave(first, second, n, head=()):
    out = list(head)
    i = 0
    while len(out) < n:
        out.append(first(i))
        if len(out) < n:
            out.append(second(i))
        i += 1
    return out[:n]


def monomial_order(family: str, side: str, k0: int, n: int) -> list[tuple[int, int]]:
    """First ``n`` signed monomials ``(sign, exponent)`` in the order whose
    Gram-Schmidt orthonormalisation reproduces ``p`` or ``r`` for the given side
    and parity of ``k0``."""
    odd = k0 % 2 == 1
    up = lambda i: (1, i + 1)          # z, z^2, ...
    down = lambda i: (1, -(i + 1))     # 1/z, 1/z^2, ...
    down0 = lambda i: (1, -i)          # 1, 1/z, ...
    minus_up = lambda i: (-1, i + 1)   # -z, -z^2, ...
    minus_up0 = lambda i: (-1, i)      # -1, -z, ...
    if side == "plus":
        if family == "p":
            return _interleave(up, down0, n) if odd else _interleave(up, down, n, [(1, 0)])
        return _interleave(up, down, n, [(1, 0)]) if odd else _interleave(down, up, n, [(1, 0)])
    if family == "p":
        return _interleave(down0, minus_up, n) if odd else _interleave(minus_up, down0, n)
    return _interleave(minus_up0, down, n) if odd else _interleave(down0, minus_up, n)


def gram_schmidt_opuc(mu: CircleMeasure, n: int, family: str = "r", side: str = "plus",
                      k0: int = 0) -> list[LP]:
    """Orthonormalise signed monomials in ``L^2(mu)``.

    Modified Gram-Schmidt with one reorthogonalisation pass; each result is
    scaled so its coefficient on the newest signed monomial is positive.
    """
    zeta = mu.points
    if len(zeta) < n:
        raise RankError(f"measure has {len(zeta)} atoms, fewer than the {n} polynomials requested "
                        f"(achievable rank {len(zeta)})")
    sw = np.sqrt(mu.weights)
    order = monomial_order(family, side, k0, n)
    lo = min(e for _, e in order)
    hi = max(e for _, e in order)
    basis_vals: list[np.ndarray] = []
    basis_coef: list[np.ndarray] = []
    out = []
    for sign, e in order:
        coef = np.zeros(hi - lo + 1, dtype=complex)
        coef[e - lo] = sign
        vals = sign * sw * zeta ** e
        for _ in range(2):
            for qv, qc in zip(basis_vals, basis_coef):
                c = np.vdot(qv, vals)
                vals = vals - c * qv
                coef = coef - c * qc
        norm = np.linalg.norm(vals)
        if norm < 1e-13:
            raise RankError(f"Gram-Schmidt lost rank at step {len(out)} (achievable rank {len(out)})")
        lead = coef[e - lo] * sign
        phase = np.conj(lead) / abs(lead)
        vals, coef = vals * phase / norm, coef * phase / norm
        basis_vals.append(vals)
        basis_coef.append(coef)
        out.append(LP(lo, coef))
    return out


def reconstruct_verblunsky(mu: CircleMeasure, n: int, side: str = "plus",
                           k0: int = 0) -> list[tuple[int, complex, float]]:
    """Recover ``(k, alpha_k, rho_k)`` for the ``n`` sites next to ``k0`` from ``mu``.

    Plus side gives ``k0+1 .. k0+n``; minus side gives ``k0, k0-1, .., k0-n+1``.
    """
    if len(mu.angles) < n + 2:
        raise RankError(f"measure has {len(mu.angles)} atoms; need at least {n + 2}")
    P = gram_schmidt_opuc(mu, n + 1, "p", side, k0)
    R = gram_schmidt_opuc(mu, n + 1, "r", side, k0)
    zeta, w = mu.points, mu.weights

    def inner(f, g):
        return complex(np.sum(w * np.conj(f) * g))

    vp = [P_(zeta) for P_ in P]
    vr = [R_(zeta) for R_ in R]
    sign = 1 if side == "plus" else -1
    sites = [k0 + sign * j for j in range(1, n + 1)] if side == "plus" else [k0 - j for j in range(n)]
    out = []
    for k in sites:
        # families are indexed by distance from k0
        i_prev = abs((k - 1) - k0)
        i_cur = abs(k - k0)
        p_prev, r_prev, p_cur = vp[i_prev], vr[i_prev], vp[i_cur]
        if k % 2:
            alpha = -inner(p_prev, zeta * r_prev)
            rho = inner(p_cur, zeta * r_prev).real
        else:
            alpha = -inner(r_prev, p_prev)
            rho = inner(p_cur, r_prev).real
        if abs(alpha) >= 1 - 1e-10:
            raise IllConditionedError(f"reconstructed |alpha_{k}| = {abs(alpha)!r} is not < 1")
        out.append((k, alpha, rho))
    return out


# --- 2x2 matrix measure ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MatrixMeasure2:
    """Atomic 2x2 matrix measure on the pair ``(delta_{k-1}, delta_k)``."""

    k: int
    angles: np.ndarray
    weights: np.ndarray  # shape (n, 2, 2), each Hermitian positive semidefinite

    @property
    def points(self) -> np.ndarray:
        return np.exp(1j * self.angles)

    def integrate(self, f) -> np.ndarray:
        return np.einsum("j,jab->ab", f(self.points), self.weights)

    def marginal(self, i: int) -> CircleMeasure:
        w = self.weights[:, i, i].real
        keep = w >= WEIGHT_FLOOR
        return CircleMeasure(self.angles[keep], w[keep])


def matrix_measure(U: BandedUnitary, k: int) -> MatrixMeasure2:
    lam, Z = eigensystem(U)
    x = Z[[U.index(k - 1), U.index(k)], :].T  # (n, 2): components on delta_{k-1}, delta_k
    weights = np.einsum("ja,jb->jab", x, x.conj())
    return MatrixMeasure2(k, np.mod(np.angle(lam), TWO_PI), weights)


def full_lattice_vectors(seq: VerblunskySequence, k0: int, k_min: int, k_max: int):
    """The 2-vector Laurent systems ``P(k)`` and ``R(k)`` built from the plus family at ``k0``.

    Returns ``(family, P, R)`` with ``P[k]`` and ``R[k]`` pairs of Laurent polynomials.
    """
    fam = solution_family(seq, k0, "plus", k_min, k_max)
    d = derive_coefficients(seq, k0)
    rho, a, b = d.rho, d.a, d.b
    A_plain = np.array([[rho, rho], [-b, a]]) / 2
    A_conj = np.array([[-rho, rho], [np.conj(b), np.conj(a)]]) / 2
    odd = k0 % 2 == 1
    P, R = {}, {}
    for k in fam.sites:
        q, p, s, r = fam.q[k], fam.p[k], fam.s[k], fam.r[k]
        if odd:
            P[k] = tuple((A_conj[i, 0] * q + A_conj[i, 1] * p).shift(-1) for i in range(2))
            R[k] = tuple(A_plain[i, 0] * s + A_plain[i, 1] * r for i in range(2))
        else:
            P[k] = tuple(A_plain[i, 0] * q + A_plain[i, 1] * p for i in range(2))
            R[k] = tuple(A_conj[i, 0] * s + A_conj[i, 1] * r for i in range(2))
    return fam, P, R


def full_lattice_basis_check(U: BandedUnitary, seq: VerblunskySequence, k0: int,
                             k_min: int, k_max: int) -> dict:
    """Deviation from the identity of the Gram matrices of ``R`` (against the
    matrix measure at ``k0``) and ``P`` (against its transpose) over ``[k_min, k_max]``."""
    Om = matrix_measure(U, k0)
    _, P, R = full_lattice_vectors(seq, k0, k_min, k_max)
    sites = list(range(k_min, k_max + 1))
    zeta = Om.points

    def gram(vecs, weights):
        vals = np.array([[vecs[k][0](zeta), vecs[k][1](zeta)] for k in sites])  # (m, 2, n)
        return np.einsum("maj,jab,nbj->mn", vals.conj(), weights, vals)

    WT = np.transpose(Om.weights, (0, 2, 1))
    eye = np.eye(len(sites))
    GR, GP = gram(R, Om.weights), gram(P, WT)
    return {"sites": sites, "gram_R": GR, "gram_P": GP,
            "R_deviation": float(np.max(np.abs(GR - eye))),
            "P_deviation": float(np.max(np.abs(GP - eye)))}


# --- Caratheodory transform ------------------------------------------------------

POLE_TOL = 1e-12


def caratheodory_integral(mu: CircleMeasure, z) -> np.ndarray:
    """``integral (zeta + z)/(zeta - z) dmu(zeta)`` for ``z`` off the unit circle."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(np.abs(z) - 1.0) < POLE_TOL):
        raise PoleRegionError("spectral parameter lies on the unit circle")
    return _kernel_sum(mu, z)


def _kernel_sum(mu: CircleMeasure, z: np.ndarray) -> np.ndarray:
    zeta = mu.points
    flat = z.reshape(-1, 1)
    out = ((zeta + flat) / (zeta - flat)) @ mu.weights
    if mu.density is not None:
        g = len(mu.density)
        grid = np.exp(1j * TWO_PI * np.arange(g) / g)
        out = out + ((grid + flat) / (grid - flat)) @ mu.density / g
    return out.reshape(z.shape)
