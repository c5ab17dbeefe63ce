"""Verblunsky coefficient sequences and the finite CMV matrices built from them.

Sites are integers.  The 2x2 block ``theta_k`` couples sites ``k-1`` and
``k``; even ``k`` go into the factor V and odd ``k`` into W, so that
``U = V @ W`` is five-diagonal with ``U[k, k] = -conj(alpha_k) * alpha_{k+1}``.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import ConfigError, DomainError, ParseError, SizeError

UNIT_TOL = 1e-14


@dataclass(frozen=True)
class VerblunskySequence:
    """Coefficients ``alpha_k`` on a finite window of sites.

    ``boundary_sites`` lists sites carrying a unit-modulus coefficient; every
    other entry must lie strictly inside the unit disk.
    """

    entries: Mapping[int, complex]
    boundary_sites: frozenset = frozenset()
    generator_tag: str = ""

    def __post_init__(self):
        clean = {int(k): complex(v) for k, v in self.entries.items()}
        for k, a in clean.items():
            mod = abs(a)
            if k in self.boundary_sites:
                if abs(mod - 1.0) > UNIT_TOL:
                    raise DomainError(f"boundary site {k} needs |alpha|=1, got {mod!r}")
            elif not mod < 1.0:
                raise DomainError(f"|alpha_{k}| = {mod!r} is not < 1")
        object.__setattr__(self, "entries", clean)
        object.__setattr__(self, "boundary_sites", frozenset(self.boundary_sites))

    def __getitem__(self, k: int) -> complex:
        try:
            return self.entries[k]
        except KeyError:
            raise DomainError(f"site {k} outside the coefficient window {self.window}") from None

    def __contains__(self, k) -> bool:
        return k in self.entries

    @property
    def window(self) -> tuple[int, int]:
        keys = self.entries.keys()
        return (min(keys), max(keys)) if keys else (0, -1)

    def rho(self, k: int) -> float:
        return math.sqrt(max(0.0, 1.0 - abs(self[k]) ** 2))

    def with_boundary(self, k: int, phase: float = 0.0) -> "VerblunskySequence":
        """Copy with ``alpha_k = exp(i*phase)``, which splits the lattice at ``k``."""
        entries = dict(self.entries)
        entries[k] = complex(np.exp(1j * phase))
        return VerblunskySequence(entries, self.boundary_sites | {k}, self.generator_tag)

    def restricted(self, lo: int, hi: int) -> "VerblunskySequence":
        entries = {k: v for k, v in self.entries.items() if lo <= k <= hi}
        return VerblunskySequence(entries, self.boundary_sites & set(entries), self.generator_tag)


@dataclass(frozen=True)
class DerivedCoefficients:
    alpha: complex
    rho: float
    a: complex
    b: complex


def derive_coefficients(seq: VerblunskySequence, k: int) -> DerivedCoefficients:
    alpha = seq[k]
    return DerivedCoefficients(alpha, seq.rho(k), 1 + alpha, 1 - alpha)


def theta_block(alpha: complex) -> np.ndarray:
    """Unitary symmetric block ``[[-alpha, rho], [rho, conj(alpha)]]``."""
    alpha = complex(alpha)
    if abs(alpha) > 1.0 + UNIT_TOL:
        raise DomainError(f"|alpha| = {abs(alpha)!r} exceeds 1")
    rho = math.sqrt(max(0.0, 1.0 - abs(alpha) ** 2))
    return np.array([[-alpha, rho], [rho, alpha.conjugate()]], dtype=complex)


@dataclass(frozen=True)
class BandedUnitary:
    """Finite CMV matrix on sites ``offset .. offset + n - 1``.

    ``matrix[i, j]`` is the entry for sites ``(offset + i, offset + j)``.
    ``phases`` are the boundary phases ``(s0, s1)`` placed at ``alpha_offset``
    and ``alpha_{offset+n}``.
    """

    offset: int
    matrix: np.ndarray
    V: np.ndarray
    W: np.ndarray
    phases: tuple[float, float] = (0.0, 0.0)

    @property
    def parity_anchor(self) -> int:
        return self.offset % 2

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.size)

    @property
    def k_hi(self) -> int:
        return self.offset + self.size - 1

    def index(self, k: int) -> int:
        i = k - self.offset
        if not 0 <= i < self.size:
            raise DomainError(f"site {k} outside [{self.offset}, {self.k_hi}]")
        return i

    def basis(self, k: int) -> np.ndarray:
        e = np.zeros(self.size, dtype=complex)
        e[self.index(k)] = 1.0
        return e


def _place_blocks(seq, k_lo, k_hi, alpha_lo, alpha_hi, parity):
    n = k_hi - k_lo + 1
    M = np.zeros((n, n), dtype=complex)
    for j in range(k_lo, k_hi + 2):
        if j % 2 != parity:
            continue
        if j == k_lo:
            M[0, 0] = np.conj(alpha_lo)
        elif j == k_hi + 1:
            M[n - 1, n - 1] = -alpha_hi
        else:
            i = j - 1 - k_lo
            M[i:i + 2, i:i + 2] = theta_block(seq[j])
    return M


def build_finite_cmv(seq: VerblunskySequence, k_lo: int, k_hi: int,
                     s0: float = 0.0, s1: float = 0.0) -> BandedUnitary:
    """CMV matrix on ``[k_lo, k_hi]`` with ``alpha_{k_lo} = e^{i s0}`` and
    ``alpha_{k_hi+1} = e^{i s1}``."""
    if k_hi - k_lo + 1 < 2:
        raise SizeError(f"interval [{k_lo}, {k_hi}] has fewer than 2 sites")
    alpha_lo, alpha_hi = np.exp(1j * s0), np.exp(1j * s1)
    V = _place_blocks(seq, k_lo, k_hi, alpha_lo, alpha_hi, parity=0)
    W = _place_blocks(seq, k_lo, k_hi, alpha_lo, alpha_hi, parity=1)
    return BandedUnitary(k_lo, V @ W, V, W, (float(s0), float(s1)))


def build_half_lattice(seq: VerblunskySequence, k0: int, n: int, side: str = "plus",
                       s: float = 0.0, far_phase: float = 0.0) -> BandedUnitary:
    """Size-``n`` truncation of a half-lattice operator.

    ``plus`` lives on ``[k0, k0+n-1]`` and is split at ``alpha_{k0} = e^{is}``;
    ``minus`` lives on ``[k0-n+1, k0]`` and is split at ``alpha_{k0+1} = e^{is}``.
    The far end gets ``far_phase``.
    """
    if side == "plus":
        return build_finite_cmv(seq, k0, k0 + n - 1, s, far_phase)
    if side == "minus":
        return build_finite_cmv(seq, k0 - n + 1, k0, far_phase, s)
    raise ConfigError(f"side must be 'plus' or 'minus', got {side!r}")


def unitarity_residual(U: BandedUnitary | np.ndarray) -> float:
    A = U.matrix if isinstance(U, BandedUnitary) else U
    return float(np.max(np.abs(A.conj().T @ A - np.eye(A.shape[0]))))


def band_violation(U: BandedUnitary | np.ndarray, width: int = 2) -> float:
    """Largest modulus outside the band ``|i - j| <= width``."""
    A = U.matrix if isinstance(U, BandedUnitary) else U
    i, j = np.indices(A.shape)
    outside = np.abs(i - j) > width
    return float(np.max(np.abs(A[outside]), initial=0.0))


# --- generators -------------------------------------------------------------

_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.USub: operator.neg, ast.UAdd: operator.pos}


def parse_number(text: str) -> complex:
    """Evaluate a small arithmetic expression; ``pi`` and ``1j`` literals allowed."""
    text = text.strip()

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)):
            return node.value
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ConfigError(f"cannot parse number {text!r}")

    try:
        return complex(ev(ast.parse(text, mode="eval")))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse number {text!r}") from exc


def parse_real(text: str) -> float:
    z = parse_number(text)
    if z.imag != 0:
        raise ConfigError(f"expected a real number, got {text!r}")
    return z.real


def _site_rng(seed: int, k: int) -> np.random.Generator:
    # zigzag so negative sites get their own stream
    return np.random.default_rng([seed, 2 * k if k >= 0 else -2 * k - 1])


def random_coefficient(seed: int, k: int, cap: float) -> complex:
    u, phi = _site_rng(seed, k).random(2)
    return cap * math.sqrt(u) * complex(math.cos(2 * math.pi * phi), math.sin(2 * math.pi * phi))


def geometric_parameters(theta0: float, theta1: float, phase: float = 0.0) -> tuple[complex, complex]:
    """``(alpha0, g)`` with ``alpha_k = alpha0 * g**k`` whose spectrum is the arc
    ``[theta0, theta1]``."""
    width = theta1 - theta0
    if not 0 < width <= 2 * math.pi:
        raise DomainError(f"arc width {width!r} must lie in (0, 2*pi]")
    g = -np.exp(0.5j * (theta0 + theta1))
    alpha0 = math.cos(width / 4) * np.exp(1j * phase)
    return complex(alpha0), complex(g)


def read_coefficient_file(path: str | Path) -> VerblunskySequence:
    entries: dict[int, complex] = {}
    boundary = set()
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"{path}:{lineno}: expected 'k re im', got {raw!r}")
        try:
            k, re, im = int(parts[0]), float(parts[1]), float(parts[2])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from exc
        if k in entries:
            raise ParseError(f"{path}:{lineno}: duplicate site {k}")
        entries[k] = complex(re, im)
        if abs(abs(entries[k]) - 1.0) <= UNIT_TOL:
            boundary.add(k)
    return VerblunskySequence(entries, frozenset(boundary), f"file:{path}")


def format_coefficient_lines(items) -> list[str]:
    return [f"{k} {a.real:.17g} {a.imag:.17g}" for k, a in items]


def generate_sequence(spec: str, lo: int, hi: int) -> VerblunskySequence:
    """Build coefficients on ``[lo, hi]`` from a generator description.

    Forms: ``constant:C``, ``random:SEED[:CAP]``, ``geometric:T0:T1[:PHASE]``
    and ``file:PATH`` (the window is ignored for files).
    """
    kind, _, rest = spec.partition(":")
    args = rest.split(":") if rest else []
    sites = range(lo, hi + 1)
    if kind == "file":
        if not rest:
            raise ConfigError("file generator needs a path")
        return read_coefficient_file(rest)
    if kind == "constant":
        c = parse_number(args[0]) if args else 0j
        return VerblunskySequence({k: c for k in sites}, generator_tag=spec)
    if kind == "random":
        if not args:
            raise ConfigError("random generator needs a seed")
        seed = int(args[0])
        cap = parse_real(args[1]) if len(args) > 1 else 0.5
        if not 0 <= cap < 1:
            raise DomainError(f"radius cap {cap!r} must lie in [0, 1)")
        return VerblunskySequence({k: random_coefficient(seed, k, cap) for k in sites},
                                  generator_tag=spec)
    if kind == "geometric":
        if len(args) < 2:
            raise ConfigError("geometric generator needs theta0 and theta1")
        phase = parse_real(args[2]) if len(args) > 2 else 0.0
        alpha0, g = geometric_parameters(parse_real(args[0]), parse_real(args[1]), phase)
        return VerblunskySequence({k: alpha0 * g ** k for k in sites}, generator_tag=spec)
    raise ConfigError(f"unknown generator {kind!r}")
