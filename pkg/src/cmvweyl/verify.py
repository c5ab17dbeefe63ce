"""Identity checks run by ``cmvweyl verify`` on a single coefficient sequence."""

from __future__ import annotations

import numpy as np

from .disks import weyl_disk
from .greens import dense_resolvent, full_lattice_green
from .spectral import gram_matrix, measure_from_operator
from .transfer import expected_wronskian, propagate, solution_family, transfer_matrix
from .verblunsky import (band_violation, build_finite_cmv, build_half_lattice,
                         generate_sequence, unitarity_residual)
from .weyl import build_context, big_M, matrix_M, riccati_residual

PROBE_Z = (0.4 + 0.2j, -0.3j, 1.6 + 0.5j)


def _entry(residual: float, tol: float) -> dict:
    return {"residual": float(residual), "tolerance": tol, "passed": bool(residual <= tol)}


def run_checks(alpha: str, n: int = 48) -> dict:
    half = n // 2
    seq = generate_sequence(alpha, -n, n + 1)
    U = build_finite_cmv(seq, -half, half - 1)
    out = {
        "unitarity": _entry(unitarity_residual(U), 1e-12),
        "five_diagonal": _entry(band_violation(U), 0.0),
    }
    out["det_transfer"] = _entry(max(abs(np.linalg.det(transfer_matrix(seq, k, z)) + 1)
                                     for z in PROBE_Z for k in range(0, 6)), 1e-14 * 10)
    worst = 0.0
    for k0 in (0, 1):
        for z in PROBE_Z:
            fam = propagate(seq, k0, z, k0 - 8, k0 + 8, "plus")
            for i, k in enumerate(fam.sites):
                w = fam.p[i] * fam.s[i] - fam.q[i] * fam.r[i]
                scale = max(1.0, abs(fam.p[i] * fam.s[i]))
                worst = max(worst, abs(w - expected_wronskian("plus", k0, int(k), z)) / scale)
    out["wronskian"] = _entry(worst, 1e-12)

    m = min(n, 32)
    worst = 0.0
    for k0 in (0, 1):
        H = build_half_lattice(seq, k0, m, "plus")
        fam = solution_family(seq, k0, "plus", k0, k0 + m - 1)
        G = gram_matrix([fam.r[k] for k in fam.sites], measure_from_operator(H, k0))
        worst = max(worst, float(np.max(np.abs(G - np.eye(m)))))
    out["gram_r_plus"] = _entry(worst, 1e-8)

    lo, hi = -half, half - 1
    worst = 0.0
    for k in range(-2, 3):
        prev, cur = build_context(seq, k - 1, lo, hi), build_context(seq, k, lo, hi)
        for z in PROBE_Z:
            for side in ("plus", "minus"):
                worst = max(worst, abs(riccati_residual(seq, k, z, "M", big_M(prev, z, side),
                                                        big_M(cur, z, side))))
    out["riccati"] = _entry(worst, 1e-9)

    ctx = build_context(seq, 0, lo, hi)
    sites = np.arange(lo + 12, hi - 11)
    worst = max(float(np.max(np.abs(full_lattice_green(ctx, z, sites) - dense_resolvent(U, z, sites))))
                for z in PROBE_Z)
    out["green_full"] = _entry(worst, 1e-6)
    out["matrix_M_routes"] = _entry(max(matrix_M(U, seq, k, z).residual
                                        for k in (0, 1) for z in PROBE_Z), 1e-7)
    out["disk_on_circle"] = _entry(max(weyl_disk(seq, k0, k0 + 20 + j, 0.5).on_circle_residual
                                       for k0 in (0, 1) for j in (0, 1)), 1e-9)
    return out
