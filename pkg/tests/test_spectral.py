import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import dense_caratheodory

from cmvweyl.errors import (IllConditionedError, ParseError, PoleRegionError,
                            PreconditionError, RankError)
from cmvweyl.spectral import (CircleMeasure, caratheodory_integral, full_lattice_basis_check,
                              gram_matrix, gram_schmidt_opuc, matrix_measure,
                              measure_from_operator, moment, monomial_order, read_measure,
                              reconstruct_verblunsky)
from cmvweyl.transfer import solution_family
from cmvweyl.verblunsky import (BandedUnitary, build_finite_cmv, build_half_lattice,
                                generate_sequence)


def test_free_measure_equidistributes():
    seq = generate_sequence("constant:0", -1, 70)
    mu = measure_from_operator(build_half_lattice(seq, 0, 64), 0)
    assert len(mu.angles) == 64
    assert mu.total_mass == pytest.approx(1, abs=1e-13)
    assert abs(moment(mu, 1)) < 0.1
    assert np.all(np.diff(mu.angles) > 0) and 0 <= mu.angles[0] and mu.angles[-1] < 2 * np.pi


def test_moments_match_matrix_powers():
    seq = generate_sequence("random:4:0.8", -40, 40)
    U = build_finite_cmv(seq, -10, 13, 0.2, 0.4)
    mu = measure_from_operator(U, 1)
    i = U.index(1)
    P = np.eye(U.size)
    for j in range(6):
        assert moment(mu, j) == pytest.approx(P[i, i], abs=1e-13)
        assert moment(mu, -j) == pytest.approx(np.conj(P[i, i]), abs=1e-13)
        P = P @ U.matrix


def test_first_moment_of_constant_half_lattice():
    # <delta_0, U delta_0> = -conj(alpha_0) alpha_1 with alpha_0 = 1
    seq = generate_sequence("constant:0.3", -1, 40)
    mu = measure_from_operator(build_half_lattice(seq, 0, 32), 0)
    assert moment(mu, 1) == pytest.approx(-0.3, abs=1e-14)


def test_non_unitary_input_is_rejected():
    U = build_finite_cmv(generate_sequence("random:1", 0, 10), 0, 8)
    bad = BandedUnitary(0, U.matrix * 1.01, U.V, U.W)
    with pytest.raises(PreconditionError):
        measure_from_operator(bad, 0)


def test_small_weights_dropped():
    # a split inside the truncation makes delta_0 orthogonal to half the eigenvectors
    seq = generate_sequence("random:3", -10, 10).with_boundary(4)
    mu = measure_from_operator(build_finite_cmv(seq, 0, 9), 0)
    assert len(mu.angles) == 4
    assert np.all(mu.weights >= 1e-14)


def test_measure_json_roundtrip(tmp_path):
    mu = CircleMeasure([0.5, 7.0, 2.0], [0.2, 0.3, 0.5], density=[0.1, 0.2])
    path = tmp_path / "mu.json"
    path.write_text(json.dumps(mu.to_json()))
    back = read_measure(path)
    assert np.allclose(back.angles, np.sort(np.mod([0.5, 7.0, 2.0], 2 * np.pi)))
    assert back.total_mass == pytest.approx(1.15)
    path.write_text('{"atoms": [[0.1, -1]]}')
    with pytest.raises(ParseError):
        read_measure(path)
    path.write_text("{")
    with pytest.raises(ParseError):
        read_measure(path)


def test_coincident_atoms_merge():
    mu = CircleMeasure([1.0, 1.0, 2.0], [0.25, 0.25, 0.5])
    assert mu.angles.tolist() == [1.0, 2.0]
    assert mu.weights.tolist() == [0.5, 0.5]


@pytest.mark.parametrize("side", ["plus", "minus"])
@pytest.mark.parametrize("k0", [0, 1])
def test_recursion_polynomials_are_orthonormal(side, k0):
    n = 48
    seq = generate_sequence("random:21:0.6", -80, 80)
    mu = measure_from_operator(build_half_lattice(seq, k0, n, side), k0)
    lo, hi = (k0, k0 + n - 1) if side == "plus" else (k0 - n + 1, k0)
    fam = solution_family(seq, k0, side, lo, hi)
    for family in (fam.p, fam.r):
        G = gram_matrix([family[k] for k in fam.sites], mu)
        assert np.max(np.abs(G - np.eye(n))) < 1e-8


def test_monomial_orders():
    assert monomial_order("p", "plus", 1, 5) == [(1, 1), (1, 0), (1, 2), (1, -1), (1, 3)]
    assert monomial_order("p", "plus", 0, 5) == [(1, 0), (1, 1), (1, -1), (1, 2), (1, -2)]
    assert monomial_order("r", "plus", 0, 4) == [(1, 0), (1, -1), (1, 1), (1, -2)]
    assert monomial_order("r", "plus", 1, 4) == [(1, 0), (1, 1), (1, -1), (1, 2)]
    assert monomial_order("p", "minus", 1, 4) == [(1, 0), (-1, 1), (1, -1), (-1, 2)]
    assert monomial_order("p", "minus", 0, 4) == [(-1, 1), (1, 0), (-1, 2), (1, -1)]
    assert monomial_order("r", "minus", 1, 5) == [(-1, 0), (1, -1), (-1, 1), (1, -2), (-1, 2)]
    assert monomial_order("r", "minus", 0, 4) == [(1, 0), (-1, 1), (1, -1), (-1, 2)]


@pytest.mark.parametrize("side", ["plus", "minus"])
@pytest.mark.parametrize("k0", [0, 1])
def test_gram_schmidt_reproduces_recursion(side, k0):
    seq = generate_sequence("random:3:0.6", -60, 60)
    mu = measure_from_operator(build_half_lattice(seq, k0, 40, side), k0)
    lo, hi = (k0, k0 + 19) if side == "plus" else (k0 - 19, k0)
    fam = solution_family(seq, k0, side, lo, hi)
    order = sorted(fam.sites, key=lambda k: abs(k - k0))
    for name in ("p", "r"):
        polys = gram_schmidt_opuc(mu, 20, name, side, k0)
        expected = getattr(fam, name)
        assert max(P.max_abs_diff(expected[k]) for P, k in zip(polys, order)) < 1e-8


def test_gram_schmidt_rank_error():
    mu = CircleMeasure([0.1, 1.0, 2.0], [0.3, 0.3, 0.4])
    with pytest.raises(RankError, match="achievable rank 3"):
        gram_schmidt_opuc(mu, 4)


@pytest.mark.parametrize("side,k0", [("plus", 0), ("plus", 1), ("minus", 0), ("minus", 3)])
def test_reconstruction_round_trip(side, k0):
    seq = generate_sequence("random:11:0.8", -80, 80)
    mu = measure_from_operator(build_half_lattice(seq, k0, 64, side), k0)
    out = reconstruct_verblunsky(mu, 20, side, k0)
    expected_sites = list(range(k0 + 1, k0 + 21)) if side == "plus" else list(range(k0, k0 - 20, -1))
    assert [k for k, _, _ in out] == expected_sites
    for k, alpha, rho in out:
        assert abs(alpha - seq[k]) < 1e-7
        assert abs(rho - seq.rho(k)) < 1e-7


def test_reconstruction_guards():
    with pytest.raises(RankError):
        reconstruct_verblunsky(CircleMeasure(np.arange(5.0), np.full(5, 0.2)), 4)
    # two atoms only: the first coefficient already has modulus 1
    mu = CircleMeasure(np.linspace(0, 6, 12), np.r_[0.5, np.full(11, 1e-13)])
    with pytest.raises(IllConditionedError):
        reconstruct_verblunsky(mu, 8)


def test_caratheodory_integral_matches_dense_solve():
    seq = generate_sequence("random:8", -30, 30)
    U = build_half_lattice(seq, 2, 20)
    mu = measure_from_operator(U, 2)
    for z in (0.0, 0.5 - 0.3j, 2.5j):
        assert caratheodory_integral(mu, z) == pytest.approx(dense_caratheodory(U, 2, z), abs=1e-12)
    with pytest.raises(PoleRegionError):
        caratheodory_integral(mu, np.exp(0.3j))


@pytest.mark.parametrize("k0", [0, 1])
def test_matrix_measure(k0):
    seq = generate_sequence("random:5:0.6", -60, 60)
    U = build_finite_cmv(seq, -20, 21, 0.4, 1.3)
    Om = matrix_measure(U, k0)
    total = Om.integrate(lambda z: np.ones_like(z))
    assert np.allclose(total, np.eye(2), atol=1e-13)
    assert np.allclose(Om.weights, np.conj(np.transpose(Om.weights, (0, 2, 1))))
    scalar = measure_from_operator(U, k0)
    marg = Om.marginal(1)
    assert np.allclose(marg.angles, scalar.angles) and np.allclose(marg.weights, scalar.weights)
    report = full_lattice_basis_check(U, seq, k0, k0 - 10, k0 + 10)
    assert report["R_deviation"] < 1e-8 and report["P_deviation"] < 1e-8


@given(st.integers(0, 10_000), st.integers(4, 24), st.integers(-3, 3))
def test_measure_is_probability(seed, n, k0):
    seq = generate_sequence(f"random:{seed}:0.9", k0 - 1, k0 + n + 1)
    mu = measure_from_operator(build_half_lattice(seq, k0, n), k0)
    assert mu.total_mass == pytest.approx(1, abs=1e-12)
    assert np.all(mu.weights > 0)
