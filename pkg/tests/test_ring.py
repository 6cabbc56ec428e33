import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gradnet.coupling import builtin_phase_family
from gradnet.graph import GraphError, load_graph, petersen
from gradnet.ring import (
    RingError,
    RingFunction,
    bipartite_s1_hessian,
    bracelets,
    canonical_differences,
    classify_stability,
    differences,
    enumerate_equilibria,
    frustrated_pattern,
    ground_state,
    match_equilibrium,
    phases_from_differences,
    s1_gradient,
    symmetric_distance,
    zero_mode_alignment,
)
from gradnet.spectra import standard_laplacian
from oracles import fd_gradient, ring_energy

COS = builtin_phase_family("cosine")
FOUR_PI2 = 4 * math.pi**2


def test_energy_and_weights_examples():
    rf = RingFunction(4, COS)
    assert rf.energy(np.zeros(4)) == pytest.approx(4.0)
    assert np.allclose(rf.edge_weights(np.zeros(4)), -FOUR_PI2)
    alt = np.array([0, 0.5, 0, 0.5])
    assert rf.energy(alt) == pytest.approx(-4.0)
    assert np.allclose(rf.hessian(alt).weights, FOUR_PI2)


def test_dimension_mismatch():
    with pytest.raises(RingError):
        RingFunction(4, COS).energy(np.zeros(3))


def test_odd_ring_needs_even_delta():
    with pytest.raises(RingError):
        RingFunction(5, builtin_phase_family("shifted_cosine", {"s": 0.1}))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=6, max_size=6), st.floats(-3, 3))
def test_invariances(theta, psi):
    rf = RingFunction(6, builtin_phase_family("two_harmonic", {"b": 0.05}))
    theta = np.array(theta)
    e = rf.energy(theta)
    assert e == pytest.approx(ring_energy(theta, rf.delta), abs=1e-12)
    assert rf.energy(theta + psi) == pytest.approx(e, abs=1e-12)
    assert rf.energy(np.roll(theta, 2)) == pytest.approx(e, abs=1e-12)
    assert rf.energy(theta[::-1]) == pytest.approx(e, abs=1e-12)
    assert np.allclose(rf.gradient(theta), fd_gradient(rf.energy, theta), atol=1e-6)
    h = rf.hessian_matrix(theta)
    assert np.allclose(h @ np.ones(6), 0.0, atol=1e-9)


def test_ring4_table():
    rf = RingFunction(4, COS)
    eqs = enumerate_equilibria(rf)
    iso = {e.label: e.energy for e in eqs if e.isotropy != "trivial"}
    assert iso == {"D4": pytest.approx(4.0), "Z4(1/4)": pytest.approx(0.0, abs=1e-12), "Z4(1/2)": pytest.approx(-4.0)}
    for e in eqs:
        assert e.residual <= 1e-10


def test_ring5_table_includes_interior_point():
    rf = RingFunction(5, COS)
    eqs = enumerate_equilibria(rf)
    labels = [e.label for e in eqs]
    assert labels[:3] == ["D5", "Z5(1/5)", "Z5(2/5)"]
    boundary = [e for e in eqs if e.kind == "boundary"]
    assert sorted(e.p for e in boundary) == [2, 2, 4]
    interior = [e for e in eqs if e.kind == "interior"]
    assert len(interior) == 1
    e = interior[0]
    assert (e.p, e.q, e.m) == (1, 4, 1)
    assert (e.xi, e.eta) == (pytest.approx(1 / 3), pytest.approx(1 / 6))
    assert e.verdict == "unstable" and e.rule_verdict == "unstable"


def test_continuum_families_for_n_divisible_by_4():
    for n, expect in ((4, 2), (8, 8), (5, 0), (6, 0)):
        eqs = enumerate_equilibria(RingFunction(n, COS))
        assert sum(e.family for e in eqs) == expect


def test_family_membership():
    rf = RingFunction(4, COS)
    eqs = enumerate_equilibria(rf)
    theta = phases_from_differences([0.3, 0.3, 0.2, 0.2])
    assert np.max(np.abs(rf.gradient(theta))) < 1e-12
    m = match_equilibrium(theta, eqs, rf)
    assert m is not None and m.family and m.pattern == (1, 1, 0, 0)


def test_stability_examples():
    rf = RingFunction(4, COS)
    half = next(e for e in enumerate_equilibria(rf) if e.label == "Z4(1/2)")
    v = classify_stability(half, rf)
    assert v.verdict == "stable" and v.rule_verdict == "stable"
    for n in range(3, 8):
        rf = RingFunction(n, COS)
        sync = enumerate_equilibria(rf)[0]
        assert classify_stability(sync, rf).verdict == "unstable"


def test_single_frustrated_edge():
    rf = RingFunction(5, COS)
    theta = frustrated_pattern()
    w = rf.hessian(theta)
    assert sorted(np.round(w.weights, 9)) == sorted(np.round([FOUR_PI2] * 4 + [-FOUR_PI2], 9))
    assert w.inertia().as_tuple() == (1, 1, 3)
    eq = next(e for e in enumerate_equilibria(rf) if e.kind == "boundary" and e.q == 1)
    assert eq.rule_verdict == "defer" and eq.verdict == "unstable"


def test_strict_rejects_c3_failure():
    rf = RingFunction(6, builtin_phase_family("two_harmonic", {"b": 0.1}))
    with pytest.raises(RingError, match="C3"):
        enumerate_equilibria(rf)
    eqs = enumerate_equilibria(rf, strict=False)
    assert all(classify_stability(e, rf).agree for e in eqs)


def test_bracelet_counts():
    assert len(bracelets(6, 2)) == 3
    assert len(bracelets(5, 2)) == 2
    assert len(bracelets(8, 4)) == 8


def test_symmetric_distance_invariance():
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 1, 7)
    x[-1] = (-x[:-1].sum()) % 1
    for y in (np.roll(x, 3), x[::-1], (-x) % 1, (-x[::-1]) % 1):
        assert symmetric_distance(x, y) < 1e-12
        assert canonical_differences(x) == canonical_differences(y)


def test_theta_difference_roundtrip():
    x = np.array([0.1, 0.25, 0.4, 0.25])
    assert np.allclose(differences(phases_from_differences(x)), x)


def test_zero_mode_alignment():
    rf = RingFunction(6, COS)
    for e in enumerate_equilibria(rf):
        lam, ang = zero_mode_alignment(rf, e.theta)
        assert lam <= 1e-9 and ang <= 1e-6


def test_bipartite_hessian_pattern_on_seven_cells():
    g = load_graph("figure4")
    delta = builtin_phase_family("shifted_cosine", {"s": 0.13})
    theta = np.random.default_rng(2).uniform(0, 1, 7)
    a = {(i, j): float(delta.dd(theta[i - 1] - theta[j - 1])) for i in range(1, 8) for j in range(1, 8)}
    A = lambda i, j: a[(i, j)]
    expected = np.array([
        [A(2, 1), -A(2, 1), 0, 0, 0, 0, 0],
        [-A(2, 1), A(2, 1) + A(2, 3), -A(2, 3), 0, 0, 0, 0],
        [0, -A(2, 3), A(2, 3) + A(4, 3) + A(5, 3), -A(4, 3), -A(5, 3), 0, 0],
        [0, 0, -A(4, 3), A(4, 3) + A(4, 6), 0, -A(4, 6), 0],
        [0, 0, -A(5, 3), 0, A(5, 3) + A(5, 7), 0, -A(5, 7)],
        [0, 0, 0, -A(4, 6), 0, A(4, 6), 0],
        [0, 0, 0, 0, -A(5, 7), 0, A(5, 7)],
    ])
    assert np.allclose(bipartite_s1_hessian(g, delta, theta, orient=2).matrix, expected)


def test_s1_hessian_synchronous_and_kernel():
    g = load_graph("figure2")
    h = bipartite_s1_hessian(g, COS, np.full(g.n, 0.3))
    assert np.allclose(h.matrix, COS.dd(0.0) * standard_laplacian(g))
    theta = np.random.default_rng(5).uniform(0, 1, g.n)
    assert np.allclose(bipartite_s1_hessian(g, COS, theta).matrix @ np.ones(g.n), 0.0)
    assert abs(np.sum(s1_gradient(g, COS, theta))) < 1e-10


def test_s1_hessian_non_bipartite_needs_even():
    with pytest.raises(GraphError):
        bipartite_s1_hessian(petersen(), builtin_phase_family("shifted_cosine", {"s": 0.1}), np.zeros(10))


def test_ground_state_small_cases():
    rep = ground_state(RingFunction(4, COS), starts=50)
    assert rep.empirical_energy == pytest.approx(-4.0, abs=1e-8)
    rep = ground_state(RingFunction(7, COS), starts=100)
    assert rep.formula_energy == pytest.approx(7 * math.cos(6 * math.pi / 7))
    assert rep.agrees()
