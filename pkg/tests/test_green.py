import numpy as np
import pytest

from ghqlab.lattice import LatticeSpacetime, causal_future, causal_hull, causal_past, \
    spacetime_pairing
from ghqlab.green import (CauchyData, GreenPair, default_t_star, dense_causal_solve,
                          dirac_green, exact_sequence_check, flux_partial_sum,
                          green_axiom_report, proca_green, read_cauchy_data,
                          relative_defect, solution_from_cauchy, time_boundary_flux)
from ghqlab.ops import (COMPLEX, REAL, Section, build_dalembert, build_dirac_1p1,
                        build_proca, delta_section, direct_sum,
                        random_margin_section)


def test_retarded_delta_first_step(lat):
    op = build_dalembert(lat, 0.0)
    gp = GreenPair(op)
    t0, x0 = 5, 3
    psi = gp.retarded(delta_section(op, t0, x0))
    assert psi.values[t0 + 1, x0, 0] == pytest.approx(lat.dt ** 2, rel=1e-14)
    assert np.abs(psi.values[: t0 + 1]).max() == 0.0


def test_retarded_zero_source(lat, gp_wave):
    psi = gp_wave.retarded(Section.zero(lat, 1, REAL))
    assert np.abs(psi.values).max() == 0.0


def test_margin_enforced(lat, gp_wave, wave):
    f = delta_section(wave, 1, 0)
    with pytest.raises(ValueError, match="margin"):
        gp_wave.retarded(f)


def test_support_containment_exact(lat, gp_wave, wave, rng):
    for _ in range(5):
        f = random_margin_section(wave, rng)
        sup = f.support()
        assert gp_wave.retarded(f).support() <= causal_future(lat, sup)
        assert gp_wave.advanced(f).support() <= causal_past(lat, sup)
        assert gp_wave.propagator(f).support() <= causal_hull(lat, sup)


def test_advanced_is_time_reflection(lat, wave, gp_wave, rng):
    gp_r = GreenPair(wave.time_reflected())
    f = random_margin_section(wave, rng)
    fr = Section(lat, f.values[::-1].copy(), REAL)
    mirrored = gp_r.advanced(fr).values[::-1]
    assert np.abs(mirrored - gp_wave.retarded(f).values).max() <= 1e-12


def test_dense_oracle_agreement(lat, rng):
    for op in (build_dalembert(lat, 1.0), build_dirac_1p1(lat, 0.5)):
        gp = GreenPair(op)
        for _ in range(3):
            f = random_margin_section(op, rng)
            for direction in ("retarded", "advanced"):
                got = getattr(gp, direction)(f)
                want = dense_causal_solve(op, f, direction)
                assert relative_defect(lat, got, want) <= 1e-10


def test_oracle_detects_mismatch(lat, rng):
    # negative control: wrong-sign mass in the oracle operator only
    op = build_dalembert(lat, 1.0)
    bad = build_dalembert(lat, 1.0, potential=np.array([[0.5]]))
    f = random_margin_section(op, rng)
    got = GreenPair(op).retarded(f)
    want = dense_causal_solve(bad, f, "retarded")
    assert relative_defect(lat, got, want) > 1e-3


def test_propagator_solves(lat, gp_wave, wave, rng):
    f = random_margin_section(wave, rng)
    gf = gp_wave.propagator(f)
    resid = wave.apply(gf)
    assert np.abs(resid.values).max() <= 1e-10 * max(1.0, np.abs(gf.values).max())
    # G P f = 0 for margin sources
    gpf = gp_wave.propagator(wave.apply_padded(f), check_margin=False)
    assert np.abs(gpf.values).max() <= 1e-10 * max(1.0, np.abs(f.values).max())


def test_axiom_reports_all_operators(rng):
    lat = LatticeSpacetime(32, 16, 0.1, 0.25)
    lat_dy = LatticeSpacetime(32, 16, 0.25, 0.25)
    ops_and_pairs = []
    w = build_dalembert(lat, 0.0)
    ops_and_pairs.append(GreenPair(w))
    d = build_dirac_1p1(lat, 1.0)
    ops_and_pairs.append(GreenPair(d))
    ops_and_pairs.append(dirac_green(d))
    p, pt, forms = build_proca(lat_dy, 1.0)
    ops_and_pairs.append(proca_green(GreenPair(pt), forms, 1.0, p))
    for gp in ops_and_pairs:
        rep = green_axiom_report(gp, samples=5, seed=11)
        assert rep["g1"] <= 1e-10, rep
        assert rep["g2"] <= 1e-10, rep
        assert rep["support_violations"] == 0, rep


def test_dirac_composite_equals_direct(lat, dirac, rng):
    gp1 = GreenPair(dirac)
    gp2 = dirac_green(dirac)
    for _ in range(4):
        f = random_margin_section(gp2.inner.op, rng)
        f = Section(lat, f.values, COMPLEX)
        a = gp1.retarded(f, check_margin=False)
        b = gp2.retarded(f, check_margin=False)
        assert relative_defect(lat, a, b, slice(3, lat.n_t - 3)) <= 1e-10


def test_proca_composite_orders_agree(rng):
    lat = LatticeSpacetime(24, 8, 0.25, 0.25)
    p, pt, forms = build_proca(lat, 1.0)
    gp = proca_green(GreenPair(pt), forms, 1.0, p)
    for _ in range(4):
        f = random_margin_section(pt, rng, deepen=1)
        one = gp.retarded(f)
        two = gp.commuted_retarded(f)
        assert relative_defect(lat, one, two, slice(3, lat.n_t - 3)) <= 1e-10


def test_proca_support_exact(rng):
    lat = LatticeSpacetime(24, 8, 0.25, 0.25)
    p, pt, forms = build_proca(lat, 1.0)
    gp = proca_green(GreenPair(pt), forms, 1.0, p)
    f = delta_section(p, 10, 3, 1)
    psi = gp.retarded(f)
    assert psi.support() <= causal_future(lat, {(10, 3)})


def test_proca_divergence_constraint(rng):
    lat = LatticeSpacetime(24, 8, 0.25, 0.25)
    p, pt, forms = build_proca(lat, 1.0)
    gp = proca_green(GreenPair(pt), forms, 1.0, p)
    two_form = np.zeros((lat.n_t, lat.n_x, 1))
    two_form[4:-4] = rng.normal(size=(lat.n_t - 8, lat.n_x, 1))
    f = Section(lat, forms.delta2(two_form), REAL)  # divergence-free source
    assert np.abs(forms.delta1(f.values)).max() <= 1e-13
    alpha = gp.retarded(f, check_margin=False)
    div = np.abs(forms.delta1(alpha.values)[3:-3]).max()
    assert div <= 1e-10 * max(1.0, np.abs(alpha.values).max())


def test_dual_green_identity(lat, rng):
    for op in (build_dalembert(lat, 1.0), build_dirac_1p1(lat, 0.5)):
        gp = GreenPair(op)
        for _ in range(5):
            f = random_margin_section(op, rng)
            g = random_margin_section(op, rng)
            a = spacetime_pairing(lat, op.pairing, gp.retarded(f), g)
            b = spacetime_pairing(lat, op.pairing, f, gp.advanced(g))
            assert abs(a - b) <= 1e-10 * f.norm() * g.norm()


def test_disjoint_sources_pair_to_zero(lat, gp_wave, wave):
    t0 = default_t_star(wave)
    f = delta_section(wave, t0, 0)
    g = delta_section(wave, t0, lat.n_x // 2)
    val = spacetime_pairing(lat, wave.pairing, gp_wave.propagator(f), g)
    assert val == 0.0


def test_past_compact_uniqueness(lat, gp_wave):
    psi = gp_wave.retarded(Section.zero(lat, 1, REAL))
    assert np.abs(psi.values).max() == 0.0


# -- exact sequence ------------------------------------------------------------------


def test_exact_sequence_wave():
    lat = LatticeSpacetime(24, 8, 0.1, 0.25)
    gp = GreenPair(build_dalembert(lat, 1.0))
    rep = exact_sequence_check(gp)
    assert rep["injective"]
    assert rep["rank_g"] == 16 == rep["dim_data"]
    assert rep["kernel_in_range"]
    assert rep["gp_zero_defect"] <= 1e-10
    assert rep["exact"]


def test_exact_sequence_dirac():
    # the centered first-order scheme carries 2-slice data, so the image of G
    # has dimension 2 r k n_x = 32 (k = 2, n_x = 8)
    lat = LatticeSpacetime(24, 8, 0.1, 0.25)
    gp = GreenPair(build_dirac_1p1(lat, 1.0))
    rep = exact_sequence_check(gp)
    assert rep["injective"]
    assert rep["rank_g"] == 32 == rep["dim_data"]
    assert rep["kernel_in_range"]
    assert rep["exact"]


# -- Cauchy data --------------------------------------------------------------------


def test_solution_from_cauchy_zero(lat, wave):
    data = CauchyData(default_t_star(wave), np.zeros((2, lat.n_x, 1)))
    psi = solution_from_cauchy(wave, data)
    assert np.abs(psi.values).max() == 0.0


def test_solution_from_cauchy_reads_back(lat, wave, rng):
    t0 = default_t_star(wave)
    data = CauchyData(t0, rng.normal(size=(2, lat.n_x, 1)))
    psi = solution_from_cauchy(wave, data)
    assert np.abs(psi.values[t0:t0 + 2] - data.values).max() == 0.0
    resid = wave.apply(psi)
    assert np.abs(resid.values).max() <= 1e-10 * max(1.0, np.abs(psi.values).max())


def test_propagator_roundtrip_through_data(lat, wave, gp_wave, rng):
    f = random_margin_section(wave, rng)
    gf = gp_wave.propagator(f)
    t0 = default_t_star(wave)
    psi = solution_from_cauchy(wave, read_cauchy_data(wave, gf, t0))
    scale = max(np.abs(gf.values).max(), 1e-30)
    assert np.abs(psi.values - gf.values).max() <= 1e-10 * scale


def test_cauchy_shape_validation(lat, wave):
    with pytest.raises(ValueError):
        solution_from_cauchy(wave, CauchyData(5, np.zeros((3, lat.n_x, 1))))


# -- boundary flux -------------------------------------------------------------------


def test_flux_telescoping_identity(lat, rng):
    for op in (build_dalembert(lat, 1.0), build_dirac_1p1(lat, 1.0)):
        for _ in range(3):
            u = random_margin_section(op, rng)
            v = random_margin_section(op, rng)
            for t in (op.margin_lo, default_t_star(op), op.margin_hi):
                a = time_boundary_flux(op, u, v, t)
                b = flux_partial_sum(op, u, v, t)
                assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_kernel_density_converges_to_half():
    # cell-averaged retarded kernel at a fixed interior physical point
    errs = []
    for (n_t, n_x, dt, dx, box) in ((64, 64, 0.1, 0.2, 2),
                                    (128, 128, 0.05, 0.1, 4),
                                    (256, 256, 0.025, 0.05, 8)):
        lat = LatticeSpacetime(n_t, n_x, dt, dx)
        op = build_dalembert(lat, 0.0)
        psi = GreenPair(op).retarded(delta_section(op, 4, n_x // 2),
                                     check_margin=False)
        tc = 4 + int(round(4.0 / dt))
        vals = psi.values[tc - box:tc + box, n_x // 2 - box:n_x // 2 + box, 0]
        errs.append(abs(vals.mean() / (dt * dx) - 0.5))
    orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(orders) >= 1.0
    assert errs[-1] < 5e-4
