"""Caratheodory and Schur function diagnostics: measure recovery from boundary
values, the exponential representation, and reflectionless checks for arc spectra."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BranchError, DomainError
from .spectral import CircleMeasure, caratheodory_integral, eigensystem
from .verblunsky import build_finite_cmv, generate_sequence, geometric_parameters
from .weyl import recursive_M

TWO_PI = 2 * np.pi
EPSILON_SCHEDULE = (1e-3, 1e-4, 1e-5)


@dataclass(frozen=True)
class ArcSpec:
    theta0: float
    theta1: float

    def __post_init__(self):
        if not 0 < self.theta1 - self.theta0 <= TWO_PI:
            raise DomainError(f"arc ({self.theta0}, {self.theta1}) must have width in (0, 2*pi]")

    @property
    def width(self) -> float:
        return self.theta1 - self.theta0

    def distance(self, theta) -> np.ndarray:
        """Angular distance from ``theta`` to the closed arc (0 inside)."""
        t = np.mod(np.asarray(theta) - self.theta0, TWO_PI)
        inside = t <= self.width
        return np.where(inside, 0.0, np.minimum(t - self.width, TWO_PI - t))

    def interior_grid(self, n: int, margin: float = 0.05) -> np.ndarray:
        pad = margin * self.width
        return np.linspace(self.theta0 + pad, self.theta1 - pad, n)


@dataclass
class CaratheodorySample:
    theta: np.ndarray
    r: float
    values: np.ndarray


def herglotz_eval(mu: CircleMeasure, z, c: float = 0.0):
    """``i c + integral (zeta + z)/(zeta - z) dmu``."""
    return 1j * c + caratheodory_integral(mu, z)


def sample_on_circle(f, theta, r: float) -> CaratheodorySample:
    theta = np.asarray(theta, dtype=float)
    return CaratheodorySample(theta, r, np.asarray(f(r * np.exp(1j * theta))))


def reconstruct_measure(f, edges, r: float, delta: float = 0.0,
                        points_per_width: float = 4.0) -> np.ndarray:
    """Masses of the arcs ``(edges[i] + delta, edges[i+1] + delta]`` from
    ``(1/2pi) integral Re f(r e^{i theta}) dtheta``.

    Each arc gets a uniform trapezoid grid with spacing at most
    ``(1 - r)/points_per_width``; equal-width arcs therefore share one
    spacing, and on a full partition the sum is the periodic trapezoid rule.
    """
    if not 0 < r < 1:
        raise DomainError(f"radius r={r!r} must lie in (0, 1)")
    edges = np.asarray(edges, dtype=float)
    masses = np.empty(len(edges) - 1)
    for i, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        n = max(16, math.ceil(points_per_width * (b - a) / (1 - r)))
        th = np.linspace(a + delta, b + delta, n + 1)
        masses[i] = np.trapezoid(np.real(f(r * np.exp(1j * th))), th) / TWO_PI
    return masses


def radial_ac_density(f, theta, r: float) -> np.ndarray:
    """``Re f(r e^{i theta})``, which tends to the a.c. density as ``r -> 1``."""
    return np.real(f(r * np.exp(1j * np.asarray(theta, dtype=float))))


def point_mass(f, theta0: float, r: float) -> complex:
    """``(1 - r)/2 * f(r e^{i theta0})``, which tends to ``mu({e^{i theta0}})``."""
    return complex((1 - r) / 2 * f(r * np.exp(1j * theta0)))


@dataclass
class ExpRepresentation:
    d: float
    theta: np.ndarray
    upsilon: np.ndarray
    r: float


def exp_herglotz(f, theta, r: float, samples: int = 400) -> ExpRepresentation:
    """``d = -Re log f(0)`` and ``Upsilon = pi/2 + Im log f(r e^{i theta})``.

    The logarithm is continued along each ray from 0 with steps that refine
    geometrically towards the circle.
    """
    theta = np.asarray(theta, dtype=float)
    f0 = complex(f(np.zeros(1, dtype=complex))[0])
    if abs(f0) < 1e-12:
        raise BranchError("|f(0)| below 1e-12")
    t = 1 - np.geomspace(1.0, 1 - r, samples)
    path = f(t[None, :] * np.exp(1j * theta)[:, None])
    if np.any(np.abs(path) < 1e-12):
        raise BranchError("|f| below 1e-12 on a ray; logarithm branch is undefined")
    arg = np.unwrap(np.angle(path), axis=1)
    arg += np.angle(f0) - arg[:, :1]
    return ExpRepresentation(-math.log(abs(f0)), theta, np.pi / 2 + arg[:, -1], r)


def reflectionless_residual(seq, arc: ArcSpec, k_values, r: float, grid: int = 64,
                            margin: float = 0.05) -> float:
    """``max |M_+(r zeta, k) + conj(M_-(r zeta, k))|`` over the arc interior.

    ``M_+-`` come from the Schur-type recursions across the whole coefficient
    window, so the window should be long compared to ``1/(1 - r)``.
    """
    z = r * np.exp(1j * arc.interior_grid(grid, margin))
    worst = 0.0
    for k in k_values:
        Mp = recursive_M(seq, k, z, "plus")
        Mm = recursive_M(seq, k, z, "minus")
        worst = max(worst, float(np.max(np.abs(Mp + np.conj(Mm)))))
    return worst


@dataclass
class BorgReport:
    theta0: float
    theta1: float
    n: int
    containment_fraction: float
    max_interior_gap: float
    reflectionless_residual: float
    control_residual: float
    r: float

    def to_json(self) -> dict:
        return {"theta0": self.theta0, "theta1": self.theta1, "n": self.n,
                "containment_fraction": self.containment_fraction,
                "max_interior_gap": self.max_interior_gap,
                "reflectionless_residual": self.reflectionless_residual,
                "control_residual": self.control_residual, "r": self.r}


def borg_verify(theta0: float, theta1: float, n: int, r: float = 1 - 1e-3,
                phase: float = 0.0, k_values=(0, 1, 2, 3), control_seed: int = 0) -> BorgReport:
    """Check the geometric coefficients ``alpha_k = alpha_0 g^k`` against an arc spectrum.

    Spectrum: a size-``n`` two-sided truncation, scored by the fraction of
    eigenangles within ``10/n`` of the arc and the largest gap between
    consecutive eigenangles inside it.  Reflectionless residual: compared
    with a random-coefficient control of the same ``|alpha|`` cap.
    """
    arc = ArcSpec(theta0, theta1)
    if arc.width < 0.1:
        warnings.warn("arc narrower than 0.1 rad; the truncation will resolve it poorly")
    depth = max(n, math.ceil(10 / (1 - r)))
    tag = f"geometric:{theta0!r}:{theta1!r}:{phase!r}"
    seq = generate_sequence(tag, -depth, depth)

    U = build_finite_cmv(seq, -(n // 2), n - n // 2 - 1)
    lam, _ = eigensystem(U)
    theta = np.mod(np.angle(lam), TWO_PI)
    contained = float(np.mean(arc.distance(theta) <= 10 / n))
    inside = np.sort(np.mod(theta[arc.distance(theta) == 0] - theta0, TWO_PI))
    gap = float(np.max(np.diff(inside))) if inside.size > 1 else float(arc.width)

    residual = reflectionless_residual(seq, arc, k_values, r)
    cap = min(abs(geometric_parameters(theta0, theta1, phase)[0]), 0.9)
    control = generate_sequence(f"random:{control_seed}:{max(cap, 0.3)!r}", -depth, depth)
    control_res = reflectionless_residual(control, arc, k_values, r)
    return BorgReport(float(theta0), float(theta1), int(n), contained, gap, residual,
                      control_res, float(r))
