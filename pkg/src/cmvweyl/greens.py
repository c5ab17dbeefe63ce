"""Resolvent matrix elements of CMV operators from Weyl solutions, plus the
Stone-formula check of spectral projections."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import IllPosedArcError, PreconditionError, SingularError
from .spectral import caratheodory_integral, eigensystem, measure_from_operator
from .transfer import inverse_transfer_matrix, propagate, transfer_matrix
from .verblunsky import BandedUnitary, VerblunskySequence
from .weyl import MFunctionContext, big_M

INTERIOR_MARGIN = 12


def _check_z(z):
    if z == 0:
        raise SingularError("resolvent closed forms carry 1/(2z); z = 0 is excluded")


def _assemble(sites, z, first_lo, second_lo, first_hi, second_hi, scale):
    """``G[k, k']`` = ``first_lo[k] * second_lo[k']`` when ``k < k'`` or ``k = k'`` odd,
    else ``second_hi[k'] * first_hi[k]``."""
    k = np.asarray(sites)[:, None]
    kp = np.asarray(sites)[None, :]
    lower = (k < kp) | ((k == kp) & (k % 2 == 1))
    G = np.where(lower, first_lo[:, None] * second_lo[None, :],
                 second_hi[None, :] * first_hi[:, None])
    return scale * G


def boundary_solution(seq: VerblunskySequence, z: complex, end: int, phase: float,
                      k_stop: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Solution obeying the unit-coefficient boundary condition at site ``end``.

    If ``k_stop < end`` the boundary is the upper one (``alpha_{end+1} =
    e^{i phase}``) and the solution is run downwards; otherwise it is the lower
    one (``alpha_end = e^{i phase}``) and the solution is run upwards.  Running
    away from the boundary is the numerically stable direction for the
    solution that decays towards it.  Returns ``(u, v, k_min)``.
    """
    e = np.exp(1j * phase)
    if k_stop < end:
        start = np.array([-e if end % 2 else -z / e, 1], dtype=complex)
        ks = range(end, k_stop, -1)
        n = end - k_stop + 1
        out = np.empty((2, n), dtype=complex)
        out[:, n - 1] = start
        for i, k in enumerate(ks):
            out[:, n - 2 - i] = inverse_transfer_matrix(seq, k, z) @ out[:, n - 1 - i]
        return out[0], out[1], k_stop
    start = np.array([z * e if end % 2 else 1 / e, 1], dtype=complex)
    n = k_stop - end + 1
    out = np.empty((2, n), dtype=complex)
    out[:, 0] = start
    for i in range(1, n):
        out[:, i] = transfer_matrix(seq, end + i, z) @ out[:, i - 1]
    return out[0], out[1], end


def _anchored(seq, z, end, phase, k0, target, lo, hi):
    """Boundary solution at ``end`` scaled to equal ``target`` at ``k0``, on ``[lo, hi]``."""
    k_stop = min(lo, k0) if end >= k0 else max(hi, k0)
    u, v, base = boundary_solution(seq, z, end, phase, k_stop)
    i0 = k0 - base
    y0 = np.array([u[i0], v[i0]])
    c = np.vdot(y0, target) / np.vdot(y0, y0)
    sl = slice(lo - base, hi - base + 1)
    return c * u[sl], c * v[sl]


def half_lattice_resolvent(U: BandedUnitary, seq: VerblunskySequence, k0: int, z: complex,
                           side: str = "plus", sites=None) -> np.ndarray:
    """``(U_+-,k0 - z)^{-1}`` on ``sites`` from the half-lattice Weyl solution.

    ``U`` is a half-lattice truncation anchored at ``k0``; its spectral measure
    at ``delta_{k0}`` supplies ``m_+-(z, k0)``.  The split coefficient must be 1.
    """
    z = complex(z)
    _check_z(z)
    split = U.phases[0] if side == "plus" else U.phases[1]
    if abs(np.exp(1j * split) - 1) > 1e-14:
        raise PreconditionError("half-lattice split coefficient must equal 1")
    sites = np.asarray(U.sites if sites is None else sites)
    fam = propagate(seq, k0, z, min(int(sites.min()), k0), max(int(sites.max()), k0), side)
    idx = sites - fam.k_min
    pt, r = fam.p[idx] * fam.tilde, fam.r[idx]
    i0 = fam.at(k0)
    mu = measure_from_operator(U, k0)
    lo, hi = int(sites.min()), int(sites.max())
    if side == "plus":
        m = complex(caratheodory_integral(mu, z))
        target = np.array([fam.q[i0] + m * fam.p[i0], fam.s[i0] + m * fam.r[i0]])
        u, v = _anchored(seq, z, U.k_hi, U.phases[1], k0, target, lo, hi)
        ut, v = u[sites - lo] * fam.tilde, v[sites - lo]
        return _assemble(sites, z, pt, v, ut, r, 1 / (2 * z))
    m = -complex(caratheodory_integral(mu, z))
    target = np.array([fam.q[i0] + m * fam.p[i0], fam.s[i0] + m * fam.r[i0]])
    t, w = _anchored(seq, z, U.offset, U.phases[0], k0, target, lo, hi)
    tt, w = t[sites - lo] * fam.tilde, w[sites - lo]
    return _assemble(sites, z, tt, r, pt, w, 1 / (2 * z))


def full_lattice_green(ctx: MFunctionContext, z: complex, sites) -> np.ndarray:
    """``(U - z)^{-1}`` on ``sites`` from the two Weyl solutions normalised at ``ctx.k0``."""
    z = complex(z)
    _check_z(z)
    sites = np.asarray(sites)
    fam = propagate(ctx.seq, ctx.k0, z, min(int(sites.min()), ctx.k0),
                    max(int(sites.max()), ctx.k0), "plus")
    Mp, Mm = complex(big_M(ctx, z, "plus")), complex(big_M(ctx, z, "minus"))
    if abs(Mp - Mm) < 1e-13:
        raise SingularError("M_+ - M_- vanishes")
    lo, hi = int(sites.min()), int(sites.max())
    i0 = fam.at(ctx.k0)
    seed = np.array([fam.q[i0], fam.s[i0]]), np.array([fam.p[i0], fam.r[i0]])
    up, vp = _anchored(ctx.seq, z, ctx.hi, ctx.s_hi, ctx.k0, seed[0] + Mp * seed[1], lo, hi)
    um, vm = _anchored(ctx.seq, z, ctx.lo, ctx.s_lo, ctx.k0, seed[0] + Mm * seed[1], lo, hi)
    u_plus, v_plus = up[sites - lo] * fam.tilde, vp[sites - lo]
    u_minus, v_minus = um[sites - lo] * fam.tilde, vm[sites - lo]
    return _assemble(sites, z, u_minus, v_plus, u_plus, v_minus, -1 / (2 * z * (Mp - Mm)))


def weyl_wronskian(ctx: MFunctionContext, z: complex, k: int) -> tuple[complex, complex]:
    """``W((u~_+, v_+), (u~_-, v_-))`` at ``k`` and its closed form ``2(-1)^k (M_+ - M_-)``."""
    fam = propagate(ctx.seq, ctx.k0, z, min(k, ctx.k0), max(k, ctx.k0), "plus")
    i = fam.at(k)
    Mp, Mm = complex(big_M(ctx, z, "plus")), complex(big_M(ctx, z, "minus"))
    pt, qt = fam.p[i] * fam.tilde, fam.q[i] * fam.tilde
    up, vp = qt + Mp * pt, fam.s[i] + Mp * fam.r[i]
    um, vm = qt + Mm * pt, fam.s[i] + Mm * fam.r[i]
    return up * vm - um * vp, 2 * (-1) ** k * (Mp - Mm)


def dense_resolvent(U: BandedUnitary, z: complex, sites=None) -> np.ndarray:
    sites = U.sites if sites is None else np.asarray(sites)
    idx = sites - U.offset
    R = np.linalg.inv(U.matrix - z * np.eye(U.size))
    return R[np.ix_(idx, idx)]


def interior_sites(U: BandedUnitary, margin: int = INTERIOR_MARGIN, keep_lower: bool = False):
    """Sites at least ``margin`` away from the truncation edges (the lower edge
    is kept when it is a genuine half-lattice boundary)."""
    lo = U.offset if keep_lower else U.offset + margin
    return np.arange(lo, U.k_hi - margin + 1)


# --- Stone formula -----------------------------------------------------------------

DEFAULT_R = (1 - 1e-2, 1 - 1e-3, 1 - 1e-4)
DEFAULT_DELTA = (1e-2, 1e-3)
ENDPOINT_TOL = 1e-8


@dataclass
class StoneReport:
    arc: tuple[float, float]
    exact: complex
    table: dict = field(default_factory=dict)  # (r, delta) -> value
    finest: tuple[float, float] = (0.0, 0.0)

    @property
    def residual(self) -> float:
        return abs(self.table[self.finest] - self.exact)

    def to_json(self) -> dict:
        return {"arc": list(self.arc), "exact": [self.exact.real, self.exact.imag],
                "schedule": [{"r": r, "delta": d, "re": v.real, "im": v.imag,
                              "error": abs(v - self.exact)}
                             for (r, d), v in self.table.items()],
                "residual": self.residual}


def _in_arc(theta, t1, t2):
    t = np.mod(theta - t1, 2 * np.pi)
    return (t > 0) & (t <= t2 - t1)


def _carath_form(U, f, g, zs, chunk=4096):
    """``<f, (U + z)(U - z)^{-1} g>`` for each ``z`` by direct linear solves."""
    n = U.size
    eye = np.eye(n)
    fg = np.vdot(f, g)
    out = np.empty(len(zs), dtype=complex)
    for start in range(0, len(zs), chunk):
        zc = zs[start:start + chunk]
        A = U.matrix[None, :, :] - zc[:, None, None] * eye
        x = np.linalg.solve(A, np.broadcast_to(g, (len(zc), n))[..., None])[..., 0]
        out[start:start + chunk] = fg + 2 * zc * (x @ f.conj())
    return out


def stone_projection_check(U: BandedUnitary, f, g, arc: tuple[float, float], F=None,
                           r_schedule=DEFAULT_R, delta_schedule=DEFAULT_DELTA,
                           panels: int = 4096) -> StoneReport:
    """Compare ``<f, F(U) E(arc) g>`` from the eigendecomposition with the
    resolvent integral evaluated on the ``(r, delta)`` schedule.

    The trapezoid rule uses at least ``panels`` panels and never fewer than
    three per ``1 - r``, so the Poisson peaks of width ``1 - r`` are resolved.
    """
    t1, t2 = map(float, arc)
    F = F or (lambda zeta: np.ones_like(zeta))
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    lam, Z = eigensystem(U)
    theta = np.mod(np.angle(lam), 2 * np.pi)
    for t in (t1, t2):
        d = np.abs(np.angle(np.exp(1j * (theta - t))))
        if np.any(d < ENDPOINT_TOL):
            raise IllPosedArcError(f"arc endpoint {t!r} is within {ENDPOINT_TOL} of an eigenangle")
    inside = _in_arc(theta, t1, t2)
    cf, cg = Z.conj().T @ f, Z.conj().T @ g
    exact = complex(np.sum((F(lam) * cf.conj() * cg)[inside]))
    report = StoneReport((t1, t2), exact)
    for r in r_schedule:
        n = max(panels, math.ceil(3 * (t2 - t1) / (1 - r)))
        for delta in delta_schedule:
            th = np.linspace(t1 + delta, t2 + delta, n + 1)
            e = np.exp(1j * th)
            vals = F(e) * (_carath_form(U, f, g, r * e) - _carath_form(U, f, g, e / r))
            report.table[(r, delta)] = complex(np.trapezoid(vals, th) / (4 * np.pi))
    report.finest = (r_schedule[-1], delta_schedule[-1])
    return report
