import numpy as np
import pytest

from ghqlab.lattice import LatticeSpacetime, spacetime_pairing
from ghqlab.ops import (COMPLEX, REAL, GAMMA_T, GAMMA_X, SPINOR_PAIRING,
                        DiscreteFormsComplex, FiberPairing, LatticeOperator,
                        Section, build_dalembert, build_dirac_1p1, build_proca,
                        delta_section, direct_sum, dirac_symbol,
                        random_margin_section, zero_dim_operator)


# -- sections ---------------------------------------------------------------------


def test_section_support_exact(lat):
    v = np.zeros((lat.n_t, lat.n_x, 2))
    v[3, 1, 0] = 1e-300
    v[5, 2, 1] = -2.0
    s = Section(lat, v, REAL)
    assert s.support() == {(3, 1), (5, 2)}
    assert s.support_slices() == (3, 5)
    assert Section.zero(lat, 2, REAL).support() == set()


def test_section_immutable(lat):
    s = Section.zero(lat, 1, REAL)
    with pytest.raises(ValueError):
        s.values[0, 0, 0] = 1.0


# -- wave operator ------------------------------------------------------------------


def test_wave_annihilates_constants(lat):
    op = build_dalembert(lat, 0.0)
    phi = Section(lat, np.ones((lat.n_t, lat.n_x, 1)), REAL)
    assert np.abs(op.apply(phi).values).max() == 0.0


def test_wave_stencil_row_by_hand(lat):
    # single-slice cosine profile: rows evaluate the raw stencil arithmetic
    op = build_dalembert(lat, 0.7)
    j = 2
    prof = np.cos(2 * np.pi * j * np.arange(lat.n_x) / lat.n_x)
    v = np.zeros((lat.n_t, lat.n_x, 1))
    t0 = 6
    v[t0, :, 0] = prof
    got = op.apply(Section(lat, v, REAL)).values
    for t in (t0 - 1, t0, t0 + 1):
        for x in range(lat.n_x):
            up = prof[x] if t + 1 == t0 else 0.0
            dn = prof[x] if t - 1 == t0 else 0.0
            mid = prof[x] if t == t0 else 0.0
            mid_l = prof[(x - 1) % lat.n_x] if t == t0 else 0.0
            mid_r = prof[(x + 1) % lat.n_x] if t == t0 else 0.0
            want = ((up - 2 * mid + dn) / lat.dt ** 2
                    - (mid_r - 2 * mid + mid_l) / lat.dx ** 2
                    + 0.7 ** 2 * mid)
            assert got[t, x, 0] == pytest.approx(want, abs=1e-12)


def test_apply_matches_dense_matrix(lat, rng):
    # dense-assembly oracle on an 8x8-ish lattice
    small = LatticeSpacetime(8, 8, 0.1, 0.2)
    op = build_dalembert(small, 1.3)
    mat = op.matrix(padded=False).toarray()
    v = rng.normal(size=(8, 8, 1))
    phi = Section(small, v, REAL)
    got = op.apply(phi).values.ravel()
    want = mat @ v.ravel()
    assert np.abs(got - want).max() <= 1e-13


def test_apply_linearity(wave, lat, rng):
    a = random_margin_section(wave, rng)
    b = random_margin_section(wave, rng)
    lhs = wave.apply(2.5 * a + (-1.25) * b).values
    rhs = 2.5 * wave.apply(a).values - 1.25 * wave.apply(b).values
    assert np.abs(lhs - rhs).max() <= 1e-13 * max(1.0, np.abs(rhs).max())
    assert np.abs(wave.apply(Section.zero(lat, 1, REAL)).values).max() == 0.0


def test_wave_self_adjointness(wave):
    assert wave.self_adjoint
    assert wave.adjointness_defect(samples=100, seed=3) <= 1e-12


def test_asymmetric_stencil_detected(lat):
    # one-sided time difference: grossly non-self-adjoint (negative control)
    eye = np.eye(1)
    entries = [(1, 0, eye / lat.dt), (0, 0, -eye / lat.dt), (-1, 0, 0.5 * eye)]
    op = LatticeOperator(lat, 1, REAL, entries, FiberPairing.identity(1))
    assert op.adjointness_defect(samples=10, seed=0) > 1e-3
    assert not op.self_adjoint


def test_wave_potential_validation(lat):
    build_dalembert(lat, 1.0, potential=np.array([[0.5]]))
    with pytest.raises(ValueError):
        build_dalembert(lat, 1.0, potential=np.array([[0.0, 1.0], [0.0, 0.0]]),
                        k=2)
    with pytest.raises(ValueError):
        build_dalembert(lat, -1.0)


def test_cfl_warning():
    lat = LatticeSpacetime(8, 8, 0.3, 0.1)
    with pytest.warns(UserWarning, match="CFL"):
        build_dalembert(lat, 0.0)


def test_per_site_potential_self_adjoint(lat, rng):
    b = np.abs(rng.normal(size=(lat.n_x, 1, 1)))
    op = build_dalembert(lat, 0.5, potential=b)
    assert op.adjointness_defect(samples=50, seed=1) <= 1e-12


# -- discrete forms and the massive 1-form operator -----------------------------------


@pytest.fixture
def proca_lat():
    # dyadic spacings keep the cochain identities exact in floating point
    return LatticeSpacetime(16, 8, 0.25, 0.25)


def test_dd_zero_exact(proca_lat, rng):
    # integer-valued fields and dyadic spacings: every difference is exact
    forms = DiscreteFormsComplex(proca_lat)
    f = rng.integers(-9, 10, size=(proca_lat.n_t, proca_lat.n_x, 1)).astype(float)
    assert np.abs(forms.d1(forms.d0(f))).max() == 0.0
    b = rng.integers(-9, 10, size=(proca_lat.n_t, proca_lat.n_x, 1)).astype(float)
    assert np.abs(forms.delta1(forms.delta2(b))).max() == 0.0


def test_dd_zero_matrix_level(proca_lat):
    mats = DiscreteFormsComplex(proca_lat).matrices()
    prod = (mats["d1"] @ mats["d0"]).toarray()
    assert np.abs(prod).max() == 0.0
    prod2 = (mats["delta1"] @ mats["delta2"]).toarray()
    assert np.abs(prod2).max() == 0.0


def test_d_delta_adjoint(proca_lat, rng):
    forms = DiscreteFormsComplex(proca_lat)
    lat = proca_lat
    # margin-supported cochains: adjointness <<d a, b>>_1 = <<a, delta b>>_0
    f = np.zeros((lat.n_t, lat.n_x, 1))
    f[2:-2] = rng.normal(size=(lat.n_t - 4, lat.n_x, 1))
    a = np.zeros((lat.n_t, lat.n_x, 2))
    a[2:-2] = rng.normal(size=(lat.n_t - 4, lat.n_x, 2))
    lhs = spacetime_pairing(lat, forms.pairing1,
                            Section(lat, forms.d0(f), REAL), Section(lat, a, REAL))
    rhs = spacetime_pairing(lat, forms.pairing0,
                            Section(lat, f, REAL), Section(lat, forms.delta1(a), REAL))
    assert abs(lhs - rhs) <= 1e-13 * max(1.0, abs(rhs))
    b = np.zeros((lat.n_t, lat.n_x, 1))
    b[2:-2] = rng.normal(size=(lat.n_t - 4, lat.n_x, 1))
    lhs2 = spacetime_pairing(lat, forms.pairing2,
                             Section(lat, forms.d1(a), REAL), Section(lat, b, REAL))
    rhs2 = spacetime_pairing(lat, forms.pairing1,
                             Section(lat, a, REAL), Section(lat, forms.delta2(b), REAL))
    assert abs(lhs2 - rhs2) <= 1e-13 * max(1.0, abs(rhs2))


def test_proca_rejects_massless(proca_lat):
    with pytest.raises(ValueError):
        build_proca(proca_lat, 0.0)


def test_proca_companion_is_componentwise_wave(proca_lat):
    p, pt, forms = build_proca(proca_lat, 1.0)
    wave = build_dalembert(proca_lat, 1.0)
    want = {}
    for dt, dx, c in wave.entries:
        want[(dt, dx)] = c[0, 0, 0]
    got = {(dt, dx): c for dt, dx, c in pt.entries}
    for key, c in got.items():
        target = want.get(key, 0.0) * np.eye(2)
        assert np.abs(c - target[None]).max() == 0.0


def test_proca_commutator_exact(proca_lat, rng):
    p, pt, forms = build_proca(proca_lat, 1.0)
    dd = lambda a: forms.d0(forms.delta1(a))
    ptv = lambda a: pt._apply_values(a, padded=True)
    v = np.zeros((proca_lat.n_t, proca_lat.n_x, 2))
    # integer data + dyadic spacings: the commutator cancels exactly
    v[2:-2] = rng.integers(-9, 10, size=(proca_lat.n_t - 4, proca_lat.n_x, 2))
    assert np.abs(dd(ptv(v)) - ptv(dd(v))).max() == 0.0


def test_proca_not_steppable_companion_is(proca_lat):
    p, pt, forms = build_proca(proca_lat, 1.0)
    assert pt.steppable["ok"]
    assert not p.steppable["ok"]
    assert p.self_adjoint and pt.self_adjoint


# -- Dirac -----------------------------------------------------------------------


def test_dirac_clifford_constants():
    assert np.abs(GAMMA_T @ GAMMA_T - np.eye(2)).max() == 0.0
    assert np.abs(GAMMA_X @ GAMMA_X + np.eye(2)).max() == 0.0
    assert np.abs(GAMMA_T @ GAMMA_X + GAMMA_X @ GAMMA_T).max() == 0.0


def test_dirac_symbol_square(rng):
    for _ in range(20):
        xi = rng.normal(size=2)
        s = dirac_symbol(*xi)
        target = (-xi[0] ** 2 + xi[1] ** 2) * np.eye(2)
        assert np.abs(s @ s - target).max() <= 1e-12


def test_dirac_constant_spinor(lat):
    op = build_dirac_1p1(lat, 0.0)
    v = np.ones((lat.n_t, lat.n_x, 2), dtype=complex)
    assert np.abs(op.apply(Section(lat, v, COMPLEX)).values).max() == 0.0


def test_dirac_self_adjoint(dirac):
    assert dirac.self_adjoint
    assert dirac.adjointness_defect(samples=100, seed=5) <= 1e-12


def test_dirac_square_is_wave_type(lat):
    # -D^2: leading time blocks match a wave stencil on doubled steps, and the
    # principal symbol is the scalar d'Alembert one blockwise
    d = build_dirac_1p1(lat, 0.0)
    d2 = d.compose(d)
    coeffs = {(dt, dx): c for dt, dx, c in d2.entries}
    lead = coeffs[(2, 0)][0]
    # -D^2 marches like a wave stencil on doubled time steps
    assert np.abs(-lead - (1.0 / (2 * lat.dt) ** 2) * np.eye(2)).max() <= 1e-14
    for xi in ((1.0, 0.3), (0.2, -1.4)):
        s = dirac_symbol(*xi)
        sq = -(s @ s)
        want = -(-xi[0] ** 2 + xi[1] ** 2) * np.eye(2)
        assert np.abs(sq - want).max() <= 1e-13


def test_dirac_wrong_pairing_rejected(lat):
    # building with the flipped pairing must fail the definite-type gate
    from ghqlab.quant_ferm import definite_type_certificate
    op = build_dirac_1p1(lat, 1.0)
    flipped = FiberPairing(-SPINOR_PAIRING, sesquilinear=True, definite=False)
    bad = LatticeOperator(lat, 2, COMPLEX, op.entries, flipped)
    cert = definite_type_certificate(bad)
    assert not cert.definite


# -- direct sums -------------------------------------------------------------------


def test_direct_sum_structure(lat):
    w = build_dalembert(lat, 0.5, kind=COMPLEX)
    d = build_dirac_1p1(lat, 1.0)
    s = direct_sum(w, d)
    assert s.k == 3
    assert s.r == 1
    assert s.steppable["ok"]
    assert s.self_adjoint
    bp = s.pairing.matrix
    assert np.abs(bp[:1, :1] - np.eye(1)).max() == 0.0
    assert np.abs(bp[1:, 1:] - SPINOR_PAIRING).max() == 0.0
    assert np.abs(bp[:1, 1:]).max() == 0.0


def test_direct_sum_zero_summand(lat, wave):
    z = zero_dim_operator(lat)
    assert direct_sum(wave, z) is wave
    assert direct_sum(z, wave) is wave


def test_direct_sum_mismatch(lat):
    other = LatticeSpacetime(24, 8, 0.2, 0.25)
    with pytest.raises(ValueError):
        direct_sum(build_dalembert(lat, 1.0), build_dalembert(other, 1.0))
    with pytest.raises(ValueError):
        direct_sum(build_dalembert(lat, 1.0),
                   build_dalembert(lat, 1.0, kind=COMPLEX))


def test_direct_sum_padding(lat):
    d = build_dirac_1p1(lat, 1.0)
    d2 = d.compose(d, name="dirac^2")  # radius 2
    w = build_dalembert(lat, 0.5, kind=COMPLEX)
    s = direct_sum(w, d2)
    assert s.r == 2
    assert s.row_lo == 2 and s.margin_lo == 4


def test_stencil_reach_within_cones(lat):
    # every shipped operator's spatial reach per time step is <= 1 cell
    for op in (build_dalembert(lat, 1.0), build_dirac_1p1(lat, 1.0),
               build_proca(LatticeSpacetime(16, 8, 0.25, 0.25), 1.0)[1]):
        for dt, dx, _ in op.entries:
            assert abs(dx) <= 1
            assert abs(dx) <= max(abs(dt), 1)
