import numpy as np
import pytest

from ghqlab.lattice import (LatticeSpacetime, Region, causal_cone, causal_future,
                            causal_hull, causal_past, causally_disjoint, diamond,
                            is_causally_compatible, is_cauchy_slice_region,
                            spacetime_pairing, time_band)
from ghqlab.ops import FiberPairing, Section


def brute_force_future(lat, a):
    """Enumeration oracle: circle-distance cone membership."""
    out = set()
    for (t0, x0) in a:
        for t in range(t0, lat.n_t):
            for x in range(lat.n_x):
                if lat.circ_dist(x, x0) <= t - t0:
                    out.add((t, x))
    return out


def test_lattice_invariants():
    with pytest.raises(ValueError):
        LatticeSpacetime(6, 8, 0.1, 0.1)
    with pytest.raises(ValueError):
        LatticeSpacetime(8, 3, 0.1, 0.1)
    with pytest.raises(ValueError):
        LatticeSpacetime(8, 8, -0.1, 0.1)
    lat = LatticeSpacetime(8, 8, 0.1, 0.25)
    assert lat.dV == pytest.approx(0.025)
    assert lat.dA == pytest.approx(0.25)


def test_single_point_cone():
    lat = LatticeSpacetime(10, 8, 0.1, 0.1)
    got = causal_future(lat, {(3, 0)})
    want = {(t, x) for t in range(3, 10) for x in range(8)
            if lat.circ_dist(x, 0) <= t - 3}
    assert got == want


def test_full_slice_cone():
    lat = LatticeSpacetime(10, 8, 0.1, 0.1)
    got = causal_future(lat, lat.slice_points(5))
    assert got == {(t, x) for t in range(5, 10) for x in range(8)}


def test_cone_saturates_small_circle():
    # apex (0,0) on a 4-site circle: by t=2 every site is inside
    lat = LatticeSpacetime(8, 4, 0.1, 0.1)
    cone = causal_cone(lat, (0, 0), "future")
    at_t2 = {x for (t, x) in cone.members if t == 2}
    assert at_t2 == {0, 1, 2, 3}
    # and the enumeration oracle agrees everywhere
    assert cone.members == frozenset(brute_force_future(lat, {(0, 0)}))


def test_future_transitive_reflexive(rng):
    lat = LatticeSpacetime(12, 8, 0.1, 0.1)
    for _ in range(5):
        pts = {(int(rng.integers(0, 6)), int(rng.integers(0, 8)))
               for _ in range(3)}
        j = causal_future(lat, pts)
        assert pts <= j
        assert causal_future(lat, j) == j


def test_time_reversal_duality(rng):
    lat = LatticeSpacetime(12, 6, 0.1, 0.1)
    for _ in range(20):
        p = (int(rng.integers(0, 12)), int(rng.integers(0, 6)))
        q = (int(rng.integers(0, 12)), int(rng.integers(0, 6)))
        assert (p in causal_future(lat, {q})) == (q in causal_past(lat, {p}))


def test_band_compatible_and_cauchy():
    lat = LatticeSpacetime(12, 6, 0.1, 0.1)
    band = time_band(lat, 4, 6)
    assert is_causally_compatible(lat, band)
    assert is_cauchy_slice_region(lat, band)
    single = time_band(lat, 5, 5)
    assert is_cauchy_slice_region(lat, single)


def test_diamond_compatible():
    lat = LatticeSpacetime(16, 16, 0.1, 0.1)
    dm = diamond(lat, (4, 3), (12, 3))
    assert is_causally_compatible(lat, dm)
    assert not is_cauchy_slice_region(lat, dm)  # radius 4 < 16 sites


def test_two_point_region_incompatible():
    # q strictly inside the future cone of p, but no interior causal path
    lat = LatticeSpacetime(8, 8, 0.1, 0.1)
    r = Region(frozenset({(2, 0), (4, 0)}))
    assert not is_causally_compatible(lat, r)
    # equal-time pairs carry no causal relations at all, hence compatible
    r2 = Region(frozenset({(2, 0), (2, 4)}))
    assert is_causally_compatible(lat, r2)


def test_causally_disjoint():
    lat = LatticeSpacetime(24, 16, 0.1, 0.1)
    d1 = diamond(lat, (10, 2), (14, 2))
    d2 = diamond(lat, (10, 10), (14, 10))
    assert causally_disjoint(lat, d1, d2)
    assert causally_disjoint(lat, d2, d1)  # symmetric
    d3 = diamond(lat, (10, 4), (14, 4))
    assert not causally_disjoint(lat, d1, d3)  # overlapping cones
    up = diamond(lat, (16, 2), (18, 2))       # inside J_+(d1)
    assert not causally_disjoint(lat, d1, up)


def test_region_validation():
    with pytest.raises(ValueError):
        Region(frozenset())


def test_pairing_point_mass():
    lat = LatticeSpacetime(8, 4, 0.1, 0.1)
    pairing = FiberPairing.identity(1)
    v = np.zeros((8, 4, 1))
    v[3, 2, 0] = 1.0
    phi = Section(lat, v, "real")
    assert spacetime_pairing(lat, pairing, phi, phi) == pytest.approx(0.01)


def test_pairing_disjoint_supports():
    lat = LatticeSpacetime(8, 4, 0.1, 0.1)
    pairing = FiberPairing.identity(1)
    a = np.zeros((8, 4, 1))
    b = np.zeros((8, 4, 1))
    a[3, 2, 0] = 1.0
    b[5, 1, 0] = 2.0
    assert spacetime_pairing(lat, pairing, Section(lat, a, "real"),
                             Section(lat, b, "real")) == 0.0


def test_pairing_hermitian_symmetry(rng):
    lat = LatticeSpacetime(8, 4, 0.1, 0.1)
    pairing = FiberPairing(np.array([[2.0, 1j], [-1j, 1.0]]), True, definite=False)
    a = rng.normal(size=(8, 4, 2)) + 1j * rng.normal(size=(8, 4, 2))
    b = rng.normal(size=(8, 4, 2)) + 1j * rng.normal(size=(8, 4, 2))
    phi, psi = Section(lat, a, "complex"), Section(lat, b, "complex")
    lhs = spacetime_pairing(lat, pairing, phi, psi)
    rhs = np.conj(spacetime_pairing(lat, pairing, psi, phi))
    assert lhs == pytest.approx(rhs)


def test_pairing_shape_mismatch():
    lat = LatticeSpacetime(8, 4, 0.1, 0.1)
    pairing = FiberPairing.identity(1)
    phi = Section.zero(lat, 1, "real")
    psi = Section.zero(lat, 2, "real")
    with pytest.raises(ValueError):
        spacetime_pairing(lat, pairing, phi, psi)


def test_invalid_point_rejected():
    lat = LatticeSpacetime(8, 4, 0.1, 0.1)
    with pytest.raises(ValueError):
        causal_future(lat, {(9, 0)})
    with pytest.raises(ValueError):
        causal_future(lat, set())
