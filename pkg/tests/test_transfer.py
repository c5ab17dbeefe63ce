import numpy as np
import pytest
from hypothesis import given, strategies as st

from cmvweyl.errors import DomainError
from cmvweyl.spectral import gram_matrix, measure_from_operator
from cmvweyl.transfer import (conjugation_check, expected_wronskian, inverse_transfer_matrix,
                              propagate, solution_family, szego_polynomials, szego_transfer,
                              transfer_matrix)
from cmvweyl.verblunsky import build_finite_cmv, build_half_lattice, generate_sequence

SEQ = generate_sequence("random:2:0.7", -40, 40)


@pytest.mark.parametrize("k", [-3, 0, 1, 6, 7])
@pytest.mark.parametrize("z", [0.3 + 0.4j, -2.0, 1j])
def test_determinant_and_inverse(k, z):
    T = transfer_matrix(SEQ, k, z)
    assert np.linalg.det(T) == pytest.approx(-1, abs=1e-14)
    assert np.allclose(T @ inverse_transfer_matrix(SEQ, k, z), np.eye(2), atol=1e-14)


def test_szego_transfer_determinant():
    S = szego_transfer(SEQ, 3, 0.5j)
    assert np.linalg.det(S) == pytest.approx(0.5j * (1 - abs(SEQ[3]) ** 2))


def test_boundary_site_is_not_crossable():
    seq = SEQ.with_boundary(4)
    with pytest.raises(DomainError):
        transfer_matrix(seq, 4, 0.5)


def _table(k0, z):
    """Values at k0-1, k0, k0+1 as listed in the closed-form table of the solution families."""
    a0, a1 = SEQ[k0], SEQ[k0 + 1]
    r0, r1 = SEQ.rho(k0), SEQ.rho(k0 + 1)
    c0, c1 = np.conj(a0), np.conj(a1)
    if k0 % 2:
        return {
            ("plus", "pr"): ([z * (1 - c0) / r0, (1 - a0) / r0], [z, 1], [(1 + c1 * z) / r1, (z + a1) / r1]),
            ("plus", "qs"): ([z * (-1 - c0) / r0, (1 + a0) / r0], [z, -1], [(-1 + c1 * z) / r1, (z - a1) / r1]),
            ("minus", "pr"): ([(-z - c0) / r0, (1 / z + a0) / r0], [1, -1], [(-1 + c1) / r1, (1 - a1) / r1]),
            ("minus", "qs"): ([(z - c0) / r0, (1 / z - a0) / r0], [1, 1], [(1 + c1) / r1, (1 + a1) / r1]),
        }
    return {
        ("plus", "pr"): ([(1 - a0) / r0, (1 - c0) / r0], [1, 1], [(z + a1) / r1, (1 / z + c1) / r1]),
        ("plus", "qs"): ([(1 + a0) / r0, (-1 - c0) / r0], [-1, 1], [(z - a1) / r1, (-1 / z + c1) / r1]),
        ("minus", "pr"): ([(1 + a0 * z) / r0, (-z - c0) / r0], [-z, 1], [z * (1 - a1) / r1, (-1 + c1) / r1]),
        ("minus", "qs"): ([(1 - a0 * z) / r0, (z - c0) / r0], [z, 1], [z * (1 + a1) / r1, (1 + c1) / r1]),
    }


@pytest.mark.parametrize("k0", [4, 5])
@pytest.mark.parametrize("side", ["plus", "minus"])
def test_closed_form_table(k0, side):
    z = 0.6 - 0.3j
    fam = solution_family(SEQ, k0, side, k0 - 1, k0 + 1)
    table = _table(k0, z)
    for pair, (first, second) in (("pr", ("p", "r")), ("qs", ("q", "s"))):
        for k, expected in zip((k0 - 1, k0, k0 + 1), table[(side, pair)]):
            got = [getattr(fam, first)[k](z), getattr(fam, second)[k](z)]
            assert np.allclose(got, expected, atol=1e-13), (side, pair, k)


@pytest.mark.parametrize("k0", [0, 1, 6, 9])
@pytest.mark.parametrize("side", ["plus", "minus"])
def test_wronskian_pattern_and_reflections(k0, side):
    fam = solution_family(SEQ, k0, side, k0 - 7, k0 + 7)
    rng = np.random.default_rng(k0)
    for z in 0.2 + 1.5 * rng.random(4) * np.exp(2j * np.pi * rng.random(4)):
        for k in fam.sites:
            ps, qr = fam.p[k](z) * fam.s[k](z), fam.q[k](z) * fam.r[k](z)
            scale = max(1.0, abs(ps), abs(qr))
            assert abs(ps - qr - expected_wronskian(side, k0, k, z)) <= 1e-12 * scale
    assert conjugation_check(fam) < 1e-12


@pytest.mark.parametrize("k0", [0, 3])
def test_support_containment(k0):
    fam = solution_family(SEQ, k0, "plus", k0 - 10, k0 + 10)
    for k in fam.sites:
        kp = abs(k - k0)
        for P in (fam.p[k], fam.r[k]):
            assert -kp <= P.lo and P.hi <= kp + 1


@pytest.mark.parametrize("side", ["plus", "minus"])
def test_numeric_propagation_matches_polynomials(side):
    k0, z = 3, 0.8 + 0.5j
    fam = solution_family(SEQ, k0, side, k0 - 9, k0 + 9)
    vals = propagate(SEQ, k0, z, k0 - 9, k0 + 9, side)
    for i, k in enumerate(vals.sites):
        assert vals.p[i] == pytest.approx(fam.p[k](z), rel=1e-12)
        assert vals.s[i] == pytest.approx(fam.s[k](z), rel=1e-12)
        assert vals.p[i] * vals.tilde == pytest.approx(fam.p_tilde(k)(z), rel=1e-12)


@pytest.mark.parametrize("k0", [2, 5])
def test_eigenvectors_are_polynomial_values(k0):
    """Each eigenvector of a plus truncation is p_+(lambda, ., k0) up to scale;
    its transpose partner is r_+."""
    n = 12
    U = build_finite_cmv(SEQ, k0, k0 + n - 1, 0.0, 0.9)
    lam, vecs = np.linalg.eig(U.matrix)
    lamT, vecsT = np.linalg.eig(U.matrix.T)
    fam = solution_family(SEQ, k0, "plus", k0, k0 + n - 1)
    for j in range(n):
        p = np.array([fam.p[k](lam[j]) for k in U.sites])
        v = vecs[:, j]
        assert np.allclose(v / v[0], p / p[0], atol=1e-11)
        i = np.argmin(abs(lamT - lam[j]))
        r = np.array([fam.r[k](lam[j]) for k in U.sites])
        w = vecsT[:, i]
        assert np.allclose(w / w[0], r / r[0], atol=1e-11)


def test_szego_correspondence_and_norms():
    n = 12
    phi, phis = szego_polynomials(SEQ, n)
    fam = solution_family(SEQ, 0, "plus", 0, n)
    gamma = 1.0
    for k in range(1, n + 1):
        gamma /= SEQ.rho(k)
        if k % 2:
            p, r = gamma * phi[k].shift(-(k - 1) // 2), gamma * phis[k].shift(-(k + 1) // 2)
        else:
            p, r = gamma * phis[k].shift(-k // 2), gamma * phi[k].shift(-k // 2)
        assert fam.p[k].max_abs_diff(p) < 1e-12
        assert fam.r[k].max_abs_diff(r) < 1e-12
        zeta = np.exp(1j * np.linspace(0, 6, 5))
        assert np.allclose(phis[k](zeta), zeta ** k * np.conj(phi[k](zeta)))
    mu = measure_from_operator(build_half_lattice(SEQ, 0, 2 * n), 0)
    G = gram_matrix(phi, mu)
    norms = np.cumprod([1.0] + [SEQ.rho(k) ** 2 for k in range(1, n + 1)])
    assert np.allclose(G, np.diag(norms), atol=1e-12)


@given(st.lists(st.complex_numbers(max_magnitude=0.95, allow_nan=False, allow_infinity=False),
                min_size=6, max_size=6),
       st.complex_numbers(min_magnitude=0.2, max_magnitude=4, allow_nan=False, allow_infinity=False),
       st.integers(0, 1), st.sampled_from(["plus", "minus"]))
def test_wronskian_invariant_hypothesis(values, z, k0, side):
    from cmvweyl.verblunsky import VerblunskySequence
    seq = VerblunskySequence({k0 - 3 + i: v for i, v in enumerate(values)})
    vals = propagate(seq, k0, z, k0 - 3, k0 + 2, side)
    for i, k in enumerate(vals.sites):
        w = vals.p[i] * vals.s[i] - vals.q[i] * vals.r[i]
        scale = max(1.0, abs(vals.p[i] * vals.s[i]), abs(vals.q[i] * vals.r[i]))
        assert abs(w - expected_wronskian(side, k0, int(k), z)) <= 1e-11 * scale
