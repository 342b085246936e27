import math

import numpy as np
import pytest

from dlgraphs.lattice_spectrum import (
    SpectrumError, build_Qh, eig_sym, eigh, interior_points, jacobi_eigh, lambda_d3, lambda_d3_all,
    psi_d3, psi_d3_matrix, q_apply, rho, rho_prime, simplex, spec_interval, spec_union,
)

from oracles import d2_block_eigenvalues, lattice_points, rho_prime_polygon


def test_q_apply_examples():
    qs = (2, 3, 4)
    D = 2 * 9
    delta = {(0, 0, 0): 1.0}
    assert q_apply(delta, (0, 0, 0), qs) == 0
    assert q_apply(delta, (1, -1, 0), qs) == pytest.approx(math.sqrt(6) / D)
    assert q_apply(lambda k: 1.0, (5, -2, -3), qs) == pytest.approx(rho(qs))


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_simplex_size(d):
    for h in range(2, 13):
        dom = simplex(d, h)
        assert len(dom.points) == math.comb(h + d - 1, d - 1)
        assert sorted(dom.points) == sorted(lattice_points(d, h))
        assert len(dom.interior) == math.comb(h - 1, d - 1)


def test_build_small_blocks():
    assert build_Qh(3, (2, 2, 2), 2).shape == (0, 0)
    assert np.array_equal(build_Qh(3, (2, 2, 2), 3), np.zeros((1, 1)))
    M = build_Qh(2, (2, 2), 3)
    assert np.allclose(M, [[0, 0.5], [0.5, 0]])


def test_eig_small_examples():
    assert np.allclose([p.eigenvalue for p in eig_sym(np.eye(3))], [1, 1, 1])
    vals, vecs = jacobi_eigh(np.array([[0, 0.5], [0.5, 0]]))
    assert np.allclose(vals, [-0.5, 0.5])
    assert all(v[np.flatnonzero(np.abs(v) > 1e-12)[0]] > 0 for v in vecs.T)
    with pytest.raises(SpectrumError):
        jacobi_eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_jacobi_on_random_symmetric_matrices():
    rng = np.random.default_rng(5)
    for n in (1, 2, 5, 17, 40):
        A = rng.normal(size=(n, n))
        A = A + A.T
        vals, V = jacobi_eigh(A)
        ref = np.linalg.eigvalsh(A)
        assert np.allclose(vals, ref, atol=1e-10)
        assert np.abs(A @ V - V * vals).max() <= 1e-10 * max(1, np.abs(vals).max())
        assert np.abs(V.T @ V - np.eye(n)).max() <= 1e-10
        vals2, V2 = jacobi_eigh(A)
        assert np.array_equal(vals, vals2) and np.array_equal(V, V2)


@pytest.mark.parametrize("qs", [(2, 2), (2, 3), (3, 5)])
def test_d2_closed_form(qs):
    for h in range(2, 15):
        assert np.allclose(eigh(build_Qh(2, qs, h))[0], d2_block_eigenvalues(*qs, h), atol=1e-9)


def test_lambda_examples():
    assert lambda_d3((1, 1, -2), 3) == pytest.approx(0, abs=1e-15)
    assert lambda_d3((1, 1, -2), 4) == pytest.approx(1 / 3)
    expected = (math.cos(2 * math.pi / 15) + math.cos(2 * math.pi / 3) + math.cos(8 * math.pi / 15)) / 3
    assert lambda_d3((1, 2, -3), 5) == pytest.approx(expected)
    with pytest.raises(SpectrumError):
        lambda_d3((0, 1, -1), 5)


@pytest.mark.parametrize("h", range(3, 9))
def test_d3_spectrum_matches_closed_form(h):
    vals = eigh(build_Qh(3, (3, 3, 3), h))[0]
    assert np.allclose(vals, np.sort(lambda_d3_all(h)), atol=1e-9)


@pytest.mark.parametrize("h", range(3, 7))
def test_psi_properties(h):
    pts = interior_points(3, h)
    M = build_Qh(3, (2, 2, 2), h)
    Psi = psi_d3_matrix(h)
    assert np.abs(Psi.conj().T @ Psi - np.eye(len(pts))).max() <= 1e-10
    for col, m in enumerate(pts):
        assert np.abs(M @ Psi[:, col] - lambda_d3(m, h) * Psi[:, col]).max() <= 1e-10
        for k in simplex(3, h).points:
            if k not in pts:
                assert abs(psi_d3(m, h, k)) <= 1e-10
    for row, k in enumerate(pts):
        assert psi_d3(pts[0], h, k) == pytest.approx(Psi[row, 0], abs=1e-12)
    if h == 3:
        assert abs(psi_d3((1, 1, -2), 3, (1, 1, -2))) == pytest.approx(1.0)


def test_spec_interval_cases():
    assert spec_interval((3, 3, 3)) == pytest.approx((-0.5, 1.0))
    lo, hi = spec_interval((2, 3))
    assert hi == pytest.approx(2 * math.sqrt(6) / 5) and lo == pytest.approx(-hi)
    assert spec_interval((2, 2, 5, 5))[0] == pytest.approx(-1 / 3)


@pytest.mark.parametrize("qs", [(25, 2, 2), (2, 3, 4), (2, 3, 7), (2, 2, 3, 9), (4, 9, 3)])
def test_rho_prime_numeric_matches_polygon_oracle(qs):
    assert rho_prime(qs) == pytest.approx(rho_prime_polygon(qs), abs=1e-8)


def test_rho_prime_case_i():
    assert rho_prime((25, 2, 2)) > -0.5


def test_spec_union():
    assert spec_union((2, 2, 2), 3) == pytest.approx([0.0])
    expected = sorted({round(math.cos(math.pi * j / h), 12) for h in range(2, 9) for j in range(1, h)})
    assert spec_union((2, 2), 8) == pytest.approx(expected, abs=1e-9)
    lo, hi = spec_interval((2, 2, 2))
    assert all(lo - 1e-9 <= v <= hi + 1e-9 for v in spec_union((2, 2, 2), 10))


def test_max_eigenvalue_monotone():
    tops = [max(spec_union((2, 3, 2), H)) for H in range(3, 11)]
    assert all(b >= a - 1e-12 for a, b in zip(tops, tops[1:]))
    assert tops[-1] <= rho((2, 3, 2)) + 1e-9
