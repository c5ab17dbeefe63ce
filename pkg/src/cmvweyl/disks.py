"""Weyl circles of finite-interval CMV problems.

On ``[k0, k1]`` with ``alpha_{k0} = 1`` and ``alpha_{k1+1} = e^{i s1}``, the
m-function ``m_+(z, k1, k0)`` traces a circle as ``s1`` runs over
``[0, 2*pi)``; the nested circles shrink to a point as ``k1`` grows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDiskError, TangentialParameterError
from .transfer import expected_wronskian, propagate
from .verblunsky import VerblunskySequence

DEFAULT_PHASES = 12


def _endpoint(seq, k0, k1, z):
    fam = propagate(seq, k0, z, k0, k1, "plus")
    i = fam.at(k1)
    return fam, fam.p[i], fam.q[i], fam.r[i], fam.s[i]


def boundary_m(seq: VerblunskySequence, k0: int, k1: int, z: complex, s1) -> np.ndarray:
    """m-function of the interval ``[k0, k1]`` for boundary phase(s) ``s1``."""
    z = complex(z)
    _, p, q, r, s = _endpoint(seq, k0, k1, z)
    s1 = np.asarray(s1, dtype=float)
    if k1 % 2:
        e = np.exp(1j * s1)
        num, den = q + s * e, p + r * e
    else:
        e = np.exp(-1j * s1)
        num, den = q / z + s * e, p / z + r * e
    if np.any(np.abs(den) < 1e-13 * max(abs(p), abs(r), 1.0)):
        raise TangentialParameterError("boundary phase makes the m-function denominator vanish")
    return -num / den


def circle_through(w: np.ndarray) -> tuple[complex, float]:
    """Circumcircle of three complex points.

    Points that coincide to rounding (a circle shrunk below machine
    resolution) give their centroid and the largest distance to it.
    """
    a, b, c = w
    b_, c_ = b - a, c - a
    d = 2 * (b_.real * c_.imag - b_.imag * c_.real)
    if abs(d) <= 1e-30 * max(abs(b_), abs(c_), 1e-300) ** 2 or d == 0:
        mid = complex(np.mean(w))
        return mid, float(np.max(np.abs(np.asarray(w) - mid)))
    ux = (c_.imag * abs(b_) ** 2 - b_.imag * abs(c_) ** 2) / d
    uy = (b_.real * abs(c_) ** 2 - c_.real * abs(b_) ** 2) / d
    center = a + complex(ux, uy)
    return center, abs(center - a)


@dataclass
class WeylDisk:
    center: complex
    radius: float
    z: complex
    k0: int
    k1: int
    fit_center: complex
    fit_radius: float
    on_circle_residual: float
    energy_residual: float

    @property
    def parity(self) -> str:
        return f"{'odd' if self.k0 % 2 else 'even'}/{'odd' if self.k1 % 2 else 'even'}"

    def to_json(self) -> dict:
        return {"k0": self.k0, "k1": self.k1, "parity": self.parity,
                "z": [self.z.real, self.z.imag],
                "center": [self.center.real, self.center.imag], "radius": self.radius,
                "fit_center": [self.fit_center.real, self.fit_center.imag],
                "fit_radius": self.fit_radius,
                "on_circle_residual": self.on_circle_residual,
                "energy_residual": self.energy_residual}


def energy_sum(seq: VerblunskySequence, k0: int, k1: int, z: complex) -> tuple[float, float]:
    """``(1 - |z|^-2) sum_{k0..k1} |p_+(k)|^2`` and the boundary form it should equal."""
    fam, p, _, r, _ = _endpoint(seq, k0, k1, z)
    lhs = (1 - abs(z) ** -2) * float(np.sum(np.abs(fam.p) ** 2))
    rhs = abs(p) ** 2 - abs(r) ** 2 if k1 % 2 else abs(r) ** 2 - abs(z) ** -2 * abs(p) ** 2
    return lhs, rhs


def weyl_disk(seq: VerblunskySequence, k0: int, k1: int, z: complex,
              phases: int = DEFAULT_PHASES) -> WeylDisk:
    """Center and radius of the Weyl circle, with the denominator taken from the
    sum form of the energy identity and the numerator from the exact Wronskian."""
    z = complex(z)
    if abs(abs(z) - 1) < 1e-12:
        raise DegenerateDiskError("Weyl disks degenerate on the unit circle")
    fam, p, q, r, s = _endpoint(seq, k0, k1, z)
    total = (1 - abs(z) ** -2) * float(np.sum(np.abs(fam.p) ** 2))
    W = expected_wronskian("plus", k0, k1, z)  # p s - q r
    if k1 % 2:
        P, S, denom, cross = p, s, total, -W
    else:
        P, S, denom, cross = p / z, s, -total, -W / z
    center = -S / r - np.conj(P) / r * cross / denom
    radius = abs(cross) / abs(denom)
    lhs, rhs = total, (abs(p) ** 2 - abs(r) ** 2 if k1 % 2 else abs(r) ** 2 - abs(z) ** -2 * abs(p) ** 2)
    energy = abs(lhs - rhs) / max(abs(lhs), 1.0)
    samples = boundary_m(seq, k0, k1, z, 2 * np.pi * np.arange(phases) / phases)
    on_circle = float(np.max(np.abs(np.abs(samples - center) - radius))) / max(radius, 1.0)
    fit_c, fit_r = circle_through(boundary_m(seq, k0, k1, z, 2 * np.pi * np.arange(3) / 3))
    return WeylDisk(complex(center), float(radius), z, k0, k1, complex(fit_c), float(fit_r),
                    on_circle, energy)


def limit_point_sweep(seq: VerblunskySequence, k0: int, z: complex, k1_values) -> list[WeylDisk]:
    return [weyl_disk(seq, k0, int(k1), z) for k1 in k1_values]
