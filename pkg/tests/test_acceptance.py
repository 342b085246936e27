"""End-to-end acceptance checks, one test per requirement, at the stated tolerances."""

import math
import random
import time
from fractions import Fraction

import numpy as np

from dlgraphs import cayley_algebra as ca
from dlgraphs.cell_complex import euler_characteristic, make_octahedron, octahedron_complex
from dlgraphs.dl_graph import DLParams, MoveType, ball, neighbors, neighbors_typed
from dlgraphs.lattice_spectrum import (block_eigenvalues, build_Qh, eigh, interior_points, lambda_d3,
                                       lambda_d3_all, psi_d3, psi_d3_matrix, rho, simplex)
from dlgraphs.random_walk import WalkConfig, drift
from dlgraphs.spectral_basis import (apply_P, combine, inner, make_polyhedron, plancherel_atoms,
                                     polyhedron_eigenfunctions, pullback_weight_d3,
                                     return_probabilities)
from dlgraphs.tree_core import ORIGIN, TreeVertex, ball as tree_ball, coarsen, distance

from oracles import GF4, PrimeField, exact_return_probability, fraction_matches, partial_fractions_by_solve


def test_degree_and_neighbour_type_counts():
    start = time.perf_counter()
    for qs in [(2, 3), (2, 2, 2), (2, 3, 4)]:
        params = DLParams(qs)
        d = params.d
        for x in ball(params, None, 3).vertices:
            assert len(set(neighbors(params, x))) == (d - 1) * sum(qs)
            for i in range(d):
                for j in range(d):
                    if i != j:
                        assert len(set(neighbors_typed(params, x, MoveType(down=j, up=i)))) == qs[j]
    assert time.perf_counter() - start < 10


def test_closed_form_spectrum_for_three_equal_trees():
    start = time.perf_counter()
    for q in (2, 3):
        for h in range(3, 9):
            values = eigh(build_Qh(3, (q, q, q), h), "jacobi")[0]
            assert np.abs(np.sort(values) - np.sort(lambda_d3_all(h))).max() <= 1e-9
    for h in range(3, 9):
        pts = interior_points(3, h)
        Psi = psi_d3_matrix(h)
        M = build_Qh(3, (2, 2, 2), h)
        assert np.abs(Psi.conj().T @ Psi - np.eye(len(pts))).max() <= 1e-10
        for col, m in enumerate(pts):
            assert np.abs(M @ Psi[:, col] - lambda_d3(m, h) * Psi[:, col]).max() <= 1e-10
            boundary = [k for k in simplex(3, h).points if k not in pts]
            assert max(abs(psi_d3(m, h, k)) for k in boundary) <= 1e-10
    assert time.perf_counter() - start < 30


def test_spectrum_containment_and_top_eigenvalue():
    failures = []
    for qs, low, high in [((2, 2, 2), -0.5, 1.0), ((3, 3, 3), -0.5, 1.0),
                          ((2, 3), -2 * math.sqrt(6) / 5, 2 * math.sqrt(6) / 5)]:
        for h in range(2, 13):
            values = block_eigenvalues(qs, h, "jacobi")
            if len(values) and not (low - 1e-9 <= values.min() and values.max() <= high + 1e-9):
                failures.append(f"{qs} h={h}: eigenvalues outside [{low}, {high}]")
        top = float(block_eigenvalues(qs, 12, "jacobi").max())
        if abs(top - rho(qs)) > 0.05:
            failures.append(f"{qs}: top eigenvalue {top:.6f} at h=12 is {rho(qs) - top:.4f} below rho={rho(qs):.6f}")
    assert not failures, failures


def test_eigenfunctions_on_the_graph():
    params = DLParams((2, 2, 2))
    S = make_polyhedron(params, [TreeVertex(-1)] * 3)
    (g,) = polyhedron_eigenfunctions(params, S, (1, 1, 1))
    assert max(abs(v) for v in apply_P(params, g.values).values()) <= 1e-12

    rng = random.Random(2024)
    for qs in [(2, 2), (2, 3, 2)]:
        params, d = DLParams(qs), len(qs)
        picks = {}
        while len(picks) < 20:
            levels = [0] * d
            for _ in range(rng.randint(max(2, d), 4)):
                levels[rng.randrange(d)] -= 1
            anchors = [TreeVertex(h, tuple(rng.randrange(q) for _ in range(rng.randint(0, 2))))
                       for q, h in zip(qs, levels)]
            S = make_polyhedron(params, anchors)
            labels = tuple(rng.randint(1, q - 1) for q in qs)
            functions = polyhedron_eigenfunctions(params, S, labels)
            if functions:
                m = rng.randrange(len(functions))
                picks[(S, m, labels)] = functions[m]
        chosen = list(picks.values())
        for f in chosen:
            residual = combine((1.0, apply_P(params, f.values)), (-f.eigenvalue, f.values))
            assert max(map(abs, residual.values())) <= 1e-10
        gram = np.array([[inner(a.values, b.values) for b in chosen] for a in chosen])
        assert np.abs(gram - np.eye(len(chosen))).max() <= 1e-9


def test_plancherel_mass_and_return_probabilities():
    start = time.perf_counter()
    for qs in [(2, 2), (2, 3), (2, 2, 2)]:
        atoms, tail = plancherel_atoms(qs, 60)
        assert sum((a.weight for a in atoms), Fraction(0)) + tail == 1
        assert float(tail) <= 1e-12
        values, bounds = return_probabilities(qs, list(range(11)), 40, use_trace=False)
        for n in range(11):
            assert abs(values[n] - exact_return_probability(qs, n)) <= bounds[n] + 1e-8
    value, omitted = pullback_weight_d3((1, 1, -2), 3, 2)
    assert abs(value - 1 / 7) <= omitted + 1e-12
    assert time.perf_counter() - start < 120


def test_return_probability_decay_shape():
    ns = np.arange(10, 501)
    values, bounds = return_probabilities((2, 2, 2), 2 * ns, 100, method="closed")
    assert np.all(bounds < 1e-6 * values)
    # the closed-form route agrees with the numerical eigensolver where both are cheap
    check, check_bounds = return_probabilities((2, 2, 2), [20, 60, 100], 40, method="auto")
    assert np.all(np.abs(check - values[[0, 20, 40]]) <= check_bounds + 1e-15)
    correlation = np.corrcoef(ns ** (1 / 3), np.log(values))[0, 1]
    assert correlation <= -0.99


def test_cayley_graph_is_dl_graph():
    start = time.perf_counter()
    rings = [ca.zq_ring(2, d=2), ca.zq_ring(3, d=2), ca.zq_ring(2), ca.zq_ring(6),
             ca.field_product_ring([(2, 2)])]
    for ring in rings:
        report = ca.cayley_ball(ring, 3)
        assert report.ok, (ring.describe(), report.counterexamples)
        assert report.group_size == report.ball_size
    assert time.perf_counter() - start < 60


def test_presentation_relators():
    for q in (2, 3, 5):
        report = ca.relator_check(ca.zq_ring(q))
        assert not report.failures, report.failures[:5]
        assert report.counts["first"] + report.counts["second"] == 3 * 2 * 1 * (q * q + q)


def test_decomposition_uniqueness():
    for ring, field in [(ca.zq_ring(2), PrimeField(2)), (ca.field_product_ring([(2, 2)]), GF4())]:
        rng = random.Random(77)
        for _ in range(1000):
            num = [rng.randrange(ring.q) for _ in range(rng.randint(0, 7))]
            den = [rng.randint(0, 3) for _ in range(ring.d - 1)]
            k = tuple(rng.randint(-3, 3) for _ in range(ring.d - 1))
            P = ca.normalize(ring, num, den)
            parts = ca.decompose(ring, P, k)
            assert ca.check_supports(ring, parts, k)
            total = ca.zero(ring)
            for c in parts:
                total = ca.add(ring, total, c)
            assert ca.laurent_equal(ring, total, P)
            assert ca.decompose(ring, P, k) == parts
            # independent route: partial fractions from a linear solve over the field
            pieces, poly = partial_fractions_by_solve(field, ring.ells, P.num, P.den, k)
            inv_k = ca.inverse_unit(k)
            for i, (numerator, m) in enumerate(pieces):
                local = ca.mul_unit(ring, parts[i], inv_k)
                expected_den = [m if j == i else 0 for j in range(ring.d - 1)]
                assert fraction_matches(field, ring.ells, (local.num, local.den), (numerator, expected_den))
            local = ca.mul_unit(ring, parts[-1], inv_k)
            assert fraction_matches(field, ring.ells, (local.num, local.den), (poly, [0] * (ring.d - 1)))


def test_octahedra_are_spheres():
    for d in (2, 3, 4):
        for R in (1, 2, 3):
            cells = octahedron_complex(make_octahedron((2,) * d, R))
            assert euler_characteristic(cells) == {2: 0, 3: 2, 4: 0}[d]
            if R == 1:
                assert cells.counts()[0] == 2 * d
                assert len(cells.cells[d - 1]) == 2 ** d


def test_drift_of_the_simple_random_walk():
    start = time.perf_counter()
    report = drift(WalkConfig(DLParams((2, 3)), 1000, 10_000, seed=20240601))
    assert report.alpha == [Fraction(-1, 5), Fraction(1, 5)]
    assert report.alpha_sum == 0
    assert abs(report.mean[0] - (-0.2)) <= 3 * report.stderr[0]
    assert time.perf_counter() - start < 120


def test_coarsening_scales_distances():
    s, q = 3, 2
    verts = [v for v in tree_ball(ORIGIN, 6, q) if v.h % s == 0]
    mismatches = [(u, v) for u in verts for v in verts
                  if distance(u, v) != s * distance(coarsen(u, s, q), coarsen(v, s, q))]
    assert not mismatches, f"{len(mismatches)} pairs violate exact scaling, e.g. {mismatches[0]}"
