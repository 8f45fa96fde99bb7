"""Registry of machine-checkable properties.

Every check carries a short anchor string naming the theorem, definition or
equation it verifies, a suite tag, and a callable returning the observed
defect against its tolerance.  Exact set statements (support containment,
symbolic vanishing) report counts with tolerance zero.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .green import (GreenPair, dense_causal_solve, dirac_green,
                    exact_sequence_check, green_axiom_report, proca_green,
                    read_cauchy_data, relative_defect, solution_from_cauchy,
                    default_t_star)
from .lattice import LatticeSpacetime, causally_disjoint, diamond, spacetime_pairing
from .ops import (build_dalembert, build_dirac_1p1, build_proca, direct_sum,
                  random_margin_section, delta_section, Section)


@dataclass
class CheckResult:
    observed: float
    tolerance: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.observed <= self.tolerance


@dataclass(frozen=True)
class Check:
    name: str
    anchor: str
    suite: str
    run: object  # callable(cfg: dict, seed: int) -> CheckResult


REGISTRY: list[Check] = []


def _register(name, anchor, suite):
    def deco(fn):
        REGISTRY.append(Check(name, anchor, suite, fn))
        return fn
    return deco


def _lat(cfg, default=(24, 8, 0.1, 0.25)) -> LatticeSpacetime:
    p = cfg.get("lattice", {})
    return LatticeSpacetime(
        p.get("n_t", default[0]), p.get("n_x", default[1]),
        p.get("dt", default[2]), p.get("dx", default[3]))


def _samples(cfg, default):
    return int(cfg.get("samples", default))


def _lat_ferm(cfg) -> LatticeSpacetime:
    """Config lattice with the circle clamped so Fock matrices stay <= 2^8."""
    lat = _lat(cfg, default=(24, 4, 0.1, 0.25))
    return LatticeSpacetime(lat.n_t, min(lat.n_x, 4), lat.dt, lat.dx)


# --------------------------------------------------------------------------- green


def _axiom_result(gp, samples, seed, oracle=False):
    rep = green_axiom_report(gp, samples=samples, seed=seed, oracle=oracle)
    observed = max(rep["g1"], rep["g2"], float(rep["support_violations"]))
    return CheckResult(observed, 1e-10, rep)


@_register("green-axioms-wave-massless", "Def 2.6 (G1)-(G3), wave m0=0", "green")
def check_wave0(cfg, seed):
    gp = GreenPair(build_dalembert(_lat(cfg), 0.0))
    return _axiom_result(gp, _samples(cfg, 10), seed)


@_register("green-axioms-wave-massive", "Def 2.6 (G1)-(G3), wave m0=1", "green")
def check_wave1(cfg, seed):
    gp = GreenPair(build_dalembert(_lat(cfg), 1.0))
    return _axiom_result(gp, _samples(cfg, 10), seed)


@_register("green-axioms-dirac-direct", "Def 2.6 (G1)-(G3), Dirac stepping", "green")
def check_dirac_direct(cfg, seed):
    gp = GreenPair(build_dirac_1p1(_lat(cfg), 1.0))
    return _axiom_result(gp, _samples(cfg, 10), seed)


@_register("green-axioms-dirac-composite",
           "Sec 2.5 Remark: D o G+ is an advanced Green's operator", "green")
def check_dirac_composite(cfg, seed):
    d = build_dirac_1p1(_lat(cfg), 1.0)
    return _axiom_result(dirac_green(d), _samples(cfg, 10), seed)


@_register("green-axioms-proca", "Sec 2.4: (m0^-2 d delta + id) o Gt composite",
           "green")
def check_proca(cfg, seed):
    lat = _lat(cfg)
    p, pt, forms = build_proca(lat, 1.0)
    gp = proca_green(GreenPair(pt), forms, 1.0, p)
    return _axiom_result(gp, _samples(cfg, 10), seed)


@_register("green-axioms-direct-sum", "Sec 2.7 Lemma: P1 (+) P2 Green-hyperbolic",
           "green")
def check_sum(cfg, seed):
    lat = _lat(cfg)
    w = build_dalembert(lat, 0.5, kind="complex")
    d = build_dirac_1p1(lat, 1.0)
    s = direct_sum(w, d)
    res = _axiom_result(GreenPair(s), _samples(cfg, 6), seed)
    # block-diagonal identity of the summed Green's operators
    rng = np.random.default_rng(seed)
    f = random_margin_section(s, rng)
    f1 = Section(lat, f.values[:, :, :1], "complex")
    f2 = Section(lat, f.values[:, :, 1:], "complex")
    gs = GreenPair(s).retarded(f)
    blk = np.concatenate([GreenPair(w).retarded(f1).values,
                          GreenPair(d).retarded(f2).values], axis=2)
    block_defect = float(np.abs(gs.values - blk).max())
    res.details["block_diag_defect"] = block_defect
    return CheckResult(max(res.observed, block_defect), res.tolerance, res.details)


@_register("green-uniqueness-oracle", "Remark 3.7: Green's operators are unique",
           "green")
def check_uniqueness(cfg, seed):
    lat = _lat(cfg)
    worst = 0.0
    for op in (build_dalembert(lat, 1.0), build_dirac_1p1(lat, 1.0)):
        rep = green_axiom_report(GreenPair(op), samples=_samples(cfg, 10),
                                 seed=seed, oracle=True)
        worst = max(worst, rep["oracle"])
    # the two Dirac constructions agree
    d = build_dirac_1p1(lat, 1.0)
    gp1, gp2 = GreenPair(d), dirac_green(d)
    rng = np.random.default_rng(seed)
    for _ in range(_samples(cfg, 10)):
        f = random_margin_section(gp2.inner.op, rng)
        f = Section(lat, f.values, "complex")
        a = gp1.retarded(f, check_margin=False)
        b = gp2.retarded(f, check_margin=False)
        worst = max(worst, relative_defect(lat, a, b, slice(3, lat.n_t - 3)))
    return CheckResult(worst, 1e-10)


@_register("green-dual-identity", "Lemma 3.4: <<G+- f, g>> = <<f, G-+ g>>", "green")
def check_dual(cfg, seed):
    lat = _lat(cfg)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for op in (build_dalembert(lat, 1.0), build_dirac_1p1(lat, 0.7)):
        gp = GreenPair(op)
        for _ in range(_samples(cfg, 10)):
            f = random_margin_section(op, rng)
            g = random_margin_section(op, rng)
            a = spacetime_pairing(lat, op.pairing, gp.retarded(f), g)
            b = spacetime_pairing(lat, op.pairing, f, gp.advanced(g))
            worst = max(worst, abs(a - b) / (f.norm() * g.norm()))
    return CheckResult(worst, 1e-10)


@_register("green-time-reversal", "Def 2.6: advanced mirrors retarded", "green")
def check_time_reversal(cfg, seed):
    lat = _lat(cfg)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for op in (build_dalembert(lat, 1.0), build_dirac_1p1(lat, 1.0)):
        gp = GreenPair(op)
        gp_r = GreenPair(op.time_reflected())
        for _ in range(_samples(cfg, 6)):
            f = random_margin_section(op, rng)
            fr = Section(lat, f.values[::-1].copy(), op.kind)
            a = gp_r.advanced(fr)
            b = gp.retarded(f)
            worst = max(worst, float(np.abs(a.values[::-1] - b.values).max()))
    return CheckResult(worst, 1e-12)


@_register("green-disjoint-pairing", "support: <<G f, g>> = 0 for causally disjoint",
           "green")
def check_disjoint_zero(cfg, seed):
    lat = _lat(cfg)
    op = build_dalembert(lat, 1.0)
    gp = GreenPair(op)
    t0 = default_t_star(op)
    f = delta_section(op, t0, 1)
    g = delta_section(op, t0, 1 + lat.n_x // 2)
    val = abs(spacetime_pairing(lat, op.pairing, gp.propagator(f), g))
    return CheckResult(val, 0.0)


@_register("green-past-compact-uniqueness",
           "Remark 3.6: past-compact support forces zero", "green")
def check_past_compact(cfg, seed):
    lat = _lat(cfg)
    op = build_dalembert(lat, 1.0)
    zero = Section.zero(lat, 1, "real")
    psi = GreenPair(op).retarded(zero)
    return CheckResult(float(np.abs(psi.values).max()), 0.0)


@_register("proca-structure", "Sec 2.4: d d = 0, order equality, Eq. (2) constraint",
           "green")
def check_proca_structure(cfg, seed):
    lat = _lat(cfg, default=(24, 8, 0.25, 0.25))
    m0 = 1.0
    p, pt, forms = build_proca(lat, m0)
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(lat.n_t, lat.n_x, 1))
    dd = np.abs(forms.d1(forms.d0(a))).max()
    deltadelta = np.abs(forms.delta1(forms.delta2(a))).max()
    gp = proca_green(GreenPair(pt), forms, m0, p)
    worst = max(dd, deltadelta)
    details = {"dd": dd, "delta_delta": deltadelta}
    for _ in range(_samples(cfg, 6)):
        f = random_margin_section(pt, rng, deepen=1)
        one = gp.retarded(f)
        two = gp.commuted_retarded(f)
        rows = slice(3, lat.n_t - 3)
        worst = max(worst, relative_defect(lat, one, two, rows))
        # divergence-free source -> divergence-free solution (Eq. (2))
        fdf = Section(lat, forms.delta2(random_margin_section(pt, rng, deepen=1)
                                        .values[:, :, :1]), "real")
        sol = gp.retarded(fdf, check_margin=False)
        div = np.abs(forms.delta1(sol.values)[rows]).max()
        scale = max(np.abs(sol.values).max(), 1e-30)
        worst = max(worst, div / scale)
        details["last_div"] = div / scale
    return CheckResult(worst, 1e-10, details)


# ----------------------------------------------------------------------- exact-seq


@_register("exact-sequence-wave", "Thm 3.5 exactness (wave)", "exact-seq")
def check_exseq_wave(cfg, seed):
    gp = GreenPair(build_dalembert(_lat(cfg), 1.0))
    rep = exact_sequence_check(gp)
    ok = rep["exact"]
    return CheckResult(0.0 if ok else 1.0, 0.0, rep)


@_register("exact-sequence-dirac", "Thm 3.5 exactness (Dirac)", "exact-seq")
def check_exseq_dirac(cfg, seed):
    gp = GreenPair(build_dirac_1p1(_lat(cfg), 1.0))
    rep = exact_sequence_check(gp)
    ok = rep["exact"]
    return CheckResult(0.0 if ok else 1.0, 0.0, rep)


@_register("cauchy-roundtrip", "Sec 3.1: solutions <-> Cauchy data", "exact-seq")
def check_cauchy(cfg, seed):
    lat = _lat(cfg)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for op in (build_dalembert(lat, 1.0), build_dirac_1p1(lat, 1.0)):
        gp = GreenPair(op)
        t0 = default_t_star(op)
        for _ in range(_samples(cfg, 5)):
            f = random_margin_section(op, rng)
            u = gp.propagator(f)
            u2 = solution_from_cauchy(op, read_cauchy_data(op, u, t0))
            scale = max(float(np.abs(u.values).max()), 1e-30)
            worst = max(worst, float(np.abs(u.values - u2.values).max()) / scale)
            pu = op.apply(u2)
            worst = max(worst, float(np.abs(pu.values).max()) / scale)
    return CheckResult(worst, 1e-10)


@_register("kernel-continuum-limit",
           "continuum sanity: massless retarded kernel -> 1/2", "exact-seq")
def check_kernel(cfg, seed):
    levels = []
    for (n_t, n_x, dt, dx, box) in ((64, 64, 0.1, 0.2, 2),
                                    (128, 128, 0.05, 0.1, 4),
                                    (256, 256, 0.025, 0.05, 8)):
        lat = LatticeSpacetime(n_t, n_x, dt, dx)
        op = build_dalembert(lat, 0.0)
        f = delta_section(op, 4, n_x // 2)
        psi = GreenPair(op).retarded(f, check_margin=False)
        tc = 4 + int(round(4.0 / dt))
        box_vals = psi.values[tc - box:tc + box, n_x // 2 - box:n_x // 2 + box, 0]
        levels.append(abs(float(box_vals.mean()) / (dt * dx) - 0.5))
    orders = [np.log2(levels[i] / levels[i + 1]) for i in range(2)]
    ok = min(orders) >= 1.0 and levels[-1] < 5e-4
    return CheckResult(0.0 if ok else 1.0, 0.0,
                       {"errors": levels, "orders": orders})


# ------------------------------------------------------------------------- symbols


@_register("clifford-relations", "App. A Eq. (7): v.w + w.v = -2 q(v,w)", "symbols")
def check_clifford(cfg, seed):
    from .symbols import build_clifford
    worst = 0.0
    for m in range(2, 7):
        model = build_clifford(m)
        d = model.dim
        for i in range(m):
            for j in range(m):
                anti = model.gammas[i] @ model.gammas[j] \
                    + model.gammas[j] @ model.gammas[i]
                want = -2.0 * (model.eps[i] if i == j else 0.0) * np.eye(d)
                worst = max(worst, float(np.abs(anti - want).max()))
    return CheckResult(worst, 1e-14)


@_register("dirac-symbol-square", "Ex. 2.13: sigma_D(xi)^2 = <xi,xi> id", "symbols")
def check_symbol_square(cfg, seed):
    from .symbols import Covector, build_clifford, sigma_dirac
    rng = np.random.default_rng(seed)
    worst = 0.0
    for m in (2, 4):
        model = build_clifford(m)
        for _ in range(50):
            xi = Covector(rng.normal(size=m))
            s = sigma_dirac(model, xi)
            worst = max(worst, float(np.abs(s @ s - xi.square * np.eye(model.dim)).max()))
    return CheckResult(worst, 1e-12)


@_register("polarization", "Sec 2.5: anticommutator of Dirac symbols", "symbols")
def check_polarization(cfg, seed):
    from .symbols import Covector, build_clifford, sigma_dirac
    rng = np.random.default_rng(seed)
    model = build_clifford(4)
    worst = 0.0
    for _ in range(30):
        xi = Covector(rng.normal(size=4))
        eta = Covector(rng.normal(size=4))
        a = 1j * sigma_dirac(model, xi)
        b = 1j * sigma_dirac(model, eta)
        lor = float(-xi.components[0] * eta.components[0]
                    + xi.components[1:] @ eta.components[1:])
        worst = max(worst, float(np.abs(a @ b + b @ a + 2 * lor * np.eye(model.dim)).max()))
    return CheckResult(worst, 1e-12)


@_register("symbol-composition", "Sec 2.2: sigma_{QP} = sigma_Q sigma_P", "symbols")
def check_composition(cfg, seed):
    from .symbols import Covector, build_clifford, sigma_dirac, sigma_wave
    rng = np.random.default_rng(seed)
    model = build_clifford(2)
    worst = 0.0
    for _ in range(30):
        xi = Covector(rng.normal(size=2))
        s = sigma_dirac(model, xi)
        # -D^2 is a wave operator: sigma_{D^2} = -sigma_wave
        worst = max(worst, float(np.abs(s @ s + sigma_wave(xi, model.dim)).max()))
    return CheckResult(worst, 1e-12)


@_register("euler-not-definite", "Ex. 3.19: Euler operator not of definite type",
           "symbols")
def check_euler(cfg, seed):
    from .symbols import (Covector, definite_type_test, euler_fiber_pairing,
                          form_covector_vector, sigma_euler)
    worst = 0.0
    details = {}
    for m in (2, 3, 4):
        ep = euler_fiber_pairing(m)
        n_flat = Covector(np.array([-1.0] + [0.0] * (m - 1)))
        nv = form_covector_vector(m, n_flat)
        rep = definite_type_test(lambda xi: sigma_euler(m, xi), ep, m,
                                 candidate_witnesses=[nv])
        if rep.definite:
            return CheckResult(1.0, 0.0, {"m": m})
        val = abs(np.conj(nv) @ (ep @ (1j * sigma_euler(m, n_flat))) @ nv)
        worst = max(worst, val)
        details[f"witness_value_m{m}"] = val
    return CheckResult(worst, 1e-12, details)


@_register("dirac-definite-type", "Ex. 3.16: Dirac operator of definite type",
           "symbols")
def check_dirac_definite(cfg, seed):
    from .symbols import build_clifford, definite_type_test, sigma_dirac
    for m in (2, 4):
        model = build_clifford(m)
        rep = definite_type_test(lambda xi: sigma_dirac(model, xi), model.pairing, m,
                                 seed=seed)
        if not rep.definite:
            return CheckResult(1.0, 0.0, {"m": m})
    return CheckResult(0.0, 0.0)


@_register("rs-classification", "Lemma 2.26: characteristic variety = lightlike",
           "symbols")
def check_rs_classification(cfg, seed):
    from .symbols import Covector, build_rs, is_invertible, sigma_rs
    rng = np.random.default_rng(seed)
    trials = int(cfg.get("rs_trials", 1000))
    errors = 0
    for m in (3, 4, 5, 6):
        rs = build_rs(m)
        for i in range(trials):
            kind = i % 3
            if kind == 0:
                xi = Covector(rng.normal(size=m))
            elif kind == 1:
                sp = rng.normal(size=m - 1)
                xi = Covector(np.concatenate([[np.linalg.norm(sp)], sp]))
            else:
                xi = Covector(np.concatenate([[2 * rng.normal()],
                                              rng.normal(size=m - 1)]))
            if xi.norm2 == 0:
                continue
            inv = is_invertible(sigma_rs(rs, xi))
            if (xi.classification == "lightlike") == inv:
                errors += 1
    return CheckResult(float(errors), 0.0, {"trials_per_m": trials})


@_register("rs-lightlike-null", "Lemma 2.26 proof: explicit null vector", "symbols")
def check_rs_null(cfg, seed):
    from .symbols import build_rs, project_to_kernel, rs_lightlike_null_vector, sigma_rs
    worst = 0.0
    for m in (3, 4, 5, 6):
        rs = build_rs(m)
        xi, psi = rs_lightlike_null_vector(rs)
        psi32 = project_to_kernel(rs, psi)
        worst = max(worst, float(np.abs(sigma_rs(rs, xi) @ psi32).max()
                                 / np.linalg.norm(psi32)))
    return CheckResult(worst, 1e-12)


@_register("rs-not-definite", "Ex. 3.21: Rarita-Schwinger not of definite type",
           "symbols")
def check_rs_witness(cfg, seed):
    from .symbols import (build_rs, definite_type_test, project_to_kernel,
                          rs_nondefinite_witness, sigma_rs)
    worst = 0.0
    for m in (3, 4, 5, 6):
        rs = build_rs(m)
        xi, psi = rs_nondefinite_witness(rs)
        w32 = project_to_kernel(rs, psi)
        form = rs.pairing32 @ (1j * sigma_rs(rs, xi))
        val = abs(np.conj(w32) @ form @ w32) / float((np.conj(w32) @ w32).real)
        worst = max(worst, val)
        rep = definite_type_test(lambda x: sigma_rs(rs, x), rs.pairing32, m,
                                 candidate_witnesses=[w32])
        if rep.definite:
            return CheckResult(1.0, 0.0, {"m": m})
    return CheckResult(worst, 1e-12)


@_register("rs-kernel-dimension", "Sec 2.6: dim Sigma^{3/2} = (m-1) 2^[m/2]",
           "symbols")
def check_rs_dim(cfg, seed):
    from .symbols import build_rs
    for m in (3, 4, 5, 6):
        rs = build_rs(m)
        if rs.dim32 != (m - 1) * 2 ** (m // 2):
            return CheckResult(1.0, 0.0, {"m": m, "got": rs.dim32})
    return CheckResult(0.0, 0.0)


# ----------------------------------------------------------------------------- bos


@_register("sympl-skew-rank", "Prop 3.12: omega skew and non-degenerate", "bos")
def check_sympl(cfg, seed):
    from .quant_bos import SymplSpace, sympl_rank_check
    lat = _lat(cfg)
    op = build_dalembert(lat, 1.0)
    gp = GreenPair(op)
    space = SymplSpace(gp)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(_samples(cfg, 50)):
        f = random_margin_section(op, rng)
        g = random_margin_section(op, rng)
        worst = max(worst, abs(space.omega(f, g) + space.omega(g, f))
                    / (f.norm() * g.norm()))
        if i < 10:
            # omega(P f, g) = 0 since G P = 0
            gpf = gp.propagator(op.apply_padded(f), check_margin=False)
            val = spacetime_pairing(lat, op.pairing, gpf, g)
            worst = max(worst, abs(val) / (f.norm() * g.norm()))
    rep = sympl_rank_check(space)
    if not rep["full_rank"]:
        return CheckResult(1.0, 0.0, rep)
    return CheckResult(worst, 1e-10, rep)


@_register("weyl-relations", "Def A.14: Weyl relations, star, associativity", "bos")
def check_weyl(cfg, seed):
    from .quant_bos import SymplSpace, WeylPolynomial, omega_gram
    lat = _lat(cfg)
    op = build_dalembert(lat, 1.0)
    space = SymplSpace(GreenPair(op))
    rng = np.random.default_rng(seed)
    gens = [random_margin_section(op, rng) for _ in range(3)]
    om = omega_gram(space, gens)
    worst = 0.0
    unit = WeylPolynomial.unit(om)
    for _ in range(_samples(cfg, 20)):
        wa = tuple(int(v) for v in rng.integers(-3, 4, size=3))
        wb = tuple(int(v) for v in rng.integers(-3, 4, size=3))
        wc = tuple(int(v) for v in rng.integers(-3, 4, size=3))
        a, b, c = (WeylPolynomial.word(om, w) for w in (wa, wb, wc))
        worst = max(worst, ((a * b) * c).max_coeff_diff(a * (b * c)))
        # w(phi) w(-phi) = 1
        inv = WeylPolynomial.word(om, tuple(-v for v in wa))
        worst = max(worst, (a * inv).max_coeff_diff(unit))
        # commutation law
        phase = np.exp(-1j * a.omega_of(wa, wb))
        worst = max(worst, (a * b).max_coeff_diff(phase * (b * a)))
        # star properties
        worst = max(worst, (a * b).star().max_coeff_diff(b.star() * a.star()))
        worst = max(worst, a.star().star().max_coeff_diff(a))
    return CheckResult(worst, 1e-12)


@_register("weyl-l2-representation", "Ex. A.15: counting-measure representation",
           "bos")
def check_weyl_l2(cfg, seed):
    from .quant_bos import SymplSpace, omega_gram, weyl_l2_rep_check
    lat = _lat(cfg)
    op = build_dalembert(lat, 1.0)
    space = SymplSpace(GreenPair(op))
    rng = np.random.default_rng(seed)
    gens = [random_margin_section(op, rng) for _ in range(3)]
    om = omega_gram(space, gens)
    rep = weyl_l2_rep_check(om, rng)
    worst = max(rep["unitarity"], rep["relation"],
                0.0 if rep["identity"] else 1.0)
    return CheckResult(worst, 1e-12, rep)


@_register("quantum-causality-bos", "Thm 3.13 (i): Quantum causality", "axioms")
def check_causality_bos(cfg, seed):
    from .functor import causality_check
    lat = _lat(cfg)
    op = build_dalembert(lat, 1.0)
    gp = GreenPair(op)
    t0 = default_t_star(op)
    d1 = diamond(lat, (t0 - 1, 1), (t0 + 1, 1))
    d2 = diamond(lat, (t0 - 1, 1 + lat.n_x // 2), (t0 + 1, 1 + lat.n_x // 2))
    rng = np.random.default_rng(seed)
    rep = causality_check(op, gp, d1, d2, "bos", rng)
    if not rep["applicable"]:
        return CheckResult(1.0, 0.0, rep)
    worst = max(rep["cross_omega"], 0.0 if rep["commutators_vanish"] else 1.0)
    return CheckResult(worst, 0.0, rep)


@_register("time-slice-bos", "Thm 3.13 (ii): Time slice axiom", "axioms")
def check_timeslice_bos(cfg, seed):
    from .functor import RegionEmbedding, timeslice_check
    lat = _lat(cfg)
    op = build_dalembert(lat, 1.0)
    gp = GreenPair(op)
    t0 = default_t_star(op)
    e = RegionEmbedding(op, t0 - 3, t0 + 4)
    rng = np.random.default_rng(seed)
    rep = timeslice_check(e, gp, rng)
    if not (rep["applicable"] and rep["isomorphism"]):
        return CheckResult(1.0, 0.0, rep)
    return CheckResult(max(rep["omega_defect"], rep["repropagation_defect"]),
                       1e-10, rep)


@_register("state-positivity", "Sec 4.1: tau positive and normed", "bos")
def check_state(cfg, seed):
    from .quant_bos import (WeylPolynomial, default_vacuum, domination_check,
                            state_positivity_check)
    lat = _lat(cfg)
    op = build_dalembert(lat, 1.0)
    gp = GreenPair(op)
    st = default_vacuum(gp, 1.0)
    rng = np.random.default_rng(seed)
    gens = [random_margin_section(op, rng) for _ in range(4)]
    neg = state_positivity_check(st, gens, rng, families=5)
    dom = domination_check(st, rng, pairs=_samples(cfg, 200))
    tau1 = abs(st.evaluate(gens, WeylPolynomial.unit(np.zeros((4, 4)))) - 1.0)
    worst = max(-neg, tau1, 0.0 if dom <= 0.25 + 1e-12 else dom)
    return CheckResult(worst, 1e-10, {"min_gram_eig": neg, "domination": dom})


@_register("npoint-ccr", "Thm 4.3 (iii): canonical commutation in tau_n", "bos")
def check_npoint_ccr(cfg, seed):
    from .quant_bos import default_vacuum, npoint
    lat = _lat(cfg)
    op = build_dalembert(lat, 1.0)
    gp = GreenPair(op)
    st = default_vacuum(gp, 1.0)
    rng = np.random.default_rng(seed)
    worst2 = 0.0
    worst4 = 0.0
    for _ in range(_samples(cfg, 30)):
        fs = [random_margin_section(op, rng) for _ in range(4)]
        t2 = st.tau2(fs[0], fs[1]) - st.tau2(fs[1], fs[0])
        worst2 = max(worst2, abs(t2 - 1j * st.omega(fs[0], fs[1])))
        lhs = npoint(st, fs) - npoint(st, [fs[0], fs[2], fs[1], fs[3]])
        rhs = 1j * st.omega(fs[1], fs[2]) * npoint(st, [fs[0], fs[3]])
        worst4 = max(worst4, abs(lhs - rhs))
    worst = max(worst2, worst4 * 0.1)  # tau4 tolerance is 1e-9
    return CheckResult(worst, 1e-10, {"tau2": worst2, "tau4_swap": worst4})


@_register("npoint-wick-oracle",
           "Sec 4.2: Wick tau_4 vs generating-functional derivative", "bos")
def check_npoint_oracle(cfg, seed):
    from .quant_bos import default_vacuum, npoint, npoint_fd_oracle
    lat = _lat(cfg)
    op = build_dalembert(lat, 1.0)
    st = default_vacuum(GreenPair(op), 1.0)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(_samples(cfg, 5)):
        fs = [random_margin_section(op, rng) for _ in range(4)]
        worst = max(worst, abs(npoint(st, fs) - npoint_fd_oracle(st, fs)))
        worst = max(worst, abs(npoint(st, fs[:3])))  # odd -> 0
    return CheckResult(worst, 1e-6)


@_register("field-equation", "Thm 4.3 (i): P tau_n = 0 in each slot", "bos")
def check_field_eq(cfg, seed):
    from .quant_bos import default_vacuum, field_equation_check
    lat = _lat(cfg)
    op = build_dalembert(lat, 1.0)
    st = default_vacuum(GreenPair(op), 1.0)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(3):
        g = random_margin_section(op, rng)
        worst = max(worst, field_equation_check(st, g))
    return CheckResult(worst, 1e-10)


@_register("vacuum-oscillator-oracle",
           "Sec 4.1: one-mode ground state vs truncated oscillator", "bos")
def check_vacuum_oracle(cfg, seed):
    from .quant_bos import default_vacuum, mode_frequencies
    lat = LatticeSpacetime(16, 6, 5e-4, 0.5)
    m0, k, s = 1.0, 1, 0.7
    op = build_dalembert(lat, m0)
    gp = GreenPair(op)
    st = default_vacuum(gp, m0)
    t0 = st.space.t_star
    prof = np.cos(2 * np.pi * k * np.arange(lat.n_x) / lat.n_x)
    vals = np.zeros((lat.n_t, lat.n_x, 1))
    vals[t0, :, 0] = s * prof
    f = Section(lat, vals, "real")
    tau2 = st.tau2(f, f).real
    om_k = mode_frequencies(op, m0)[k]
    n_lev = 200
    aop = np.diag(np.sqrt(np.arange(1, n_lev)), 1)
    m_eff = lat.n_x * lat.dx / 2
    q = (aop + aop.T) / np.sqrt(2 * m_eff * om_k)
    p = 1j * np.sqrt(m_eff * om_k / 2) * (aop.T - aop)
    h = p.conj().T @ p / (2 * m_eff) + m_eff * om_k ** 2 * q @ q / 2
    w, v = np.linalg.eigh((h + h.conj().T) / 2)
    gs = v[:, 0]
    amp = s * lat.dt * lat.dx * (lat.n_x / 2)
    oracle = amp ** 2 * float(np.real(gs.conj() @ (q @ q) @ gs))
    rel = abs(tau2 - oracle) / abs(oracle)
    return CheckResult(rel, 1e-6, {"tau2": tau2, "oracle": oracle})


@_register("ccr-functor", "Cor. A.17 / Lemma 3.9: CCR functor on embeddings", "axioms")
def check_ccr_functor(cfg, seed):
    from .functor import RegionEmbedding
    from .quant_bos import SymplSpace, ccr_functor_check
    lat = _lat(cfg)
    op = build_dalembert(lat, 1.0)
    gp = GreenPair(op)
    e = RegionEmbedding(op, 4, lat.n_t - 5)
    gp_sub = GreenPair(e.sub_op)
    space_sub, space_amb = SymplSpace(gp_sub), SymplSpace(gp)
    rng = np.random.default_rng(seed)
    gens = [random_margin_section(e.sub_op, rng, deepen=1) for _ in range(3)]
    rep = ccr_functor_check(space_sub, space_amb, gens, e.extend_zero, rng)
    return CheckResult(max(rep["gram"], rep["mul"], rep["star"]), 1e-10, rep)


# ---------------------------------------------------------------------------- ferm


@_register("slice-conservation", "Lemma 3.17: independence of the slice", "ferm")
def check_slice_conservation(cfg, seed):
    from .quant_ferm import slice_product
    lat = _lat(cfg, default=(48, 8, 0.1, 0.25))
    op = build_dirac_1p1(lat, 1.0)
    gp = GreenPair(op)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(_samples(cfg, 5)):
        u = gp.propagator(random_margin_section(op, rng))
        v = gp.propagator(random_margin_section(op, rng))
        vals = [slice_product(op, u, v, t)
                for t in range(op.margin_lo, op.margin_hi + 1)]
        scale = max(max(abs(v_) for v_ in vals), 1e-30)
        worst = max(worst, max(abs(v_ - vals[0]) for v_ in vals) / scale)
    return CheckResult(worst, 1e-12)


@_register("slice-continuum-formula",
           "Lemma 3.17 Eq. (5): continuum slice formula, order >= 1", "ferm")
def check_slice_continuum(cfg, seed):
    from .quant_ferm import SolutionSpace, slice_product, slice_product_continuum
    errs = []
    for scale_i, (n_t, dt) in enumerate(((16, 0.08), (28, 0.04), (52, 0.02))):
        lat = LatticeSpacetime(n_t, 8, dt, 0.5)
        op = build_dirac_1p1(lat, 1.0)
        gp = GreenPair(op)
        sol = SolutionSpace.physical(gp)
        onb = sol.orthonormal_basis()
        # smooth low-mode physical solutions
        rngl = np.random.default_rng(7)
        c1 = onb @ rngl.normal(size=sol.dim)
        c2 = onb @ rngl.normal(size=sol.dim)
        u, v = sol.solution(c1), sol.solution(c2)
        t = default_t_star(op)
        a = slice_product(op, u, v, t)
        b = slice_product_continuum(op, u, v, t)
        errs.append(abs(a - b) / max(abs(a), 1e-30))
    orders = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    ok = min(orders) >= 0.9
    return CheckResult(0.0 if ok else 1.0, 0.0, {"errors": errs, "orders": orders})


@_register("definite-type-certificate", "Def 3.15 / Ex. 3.16: slice Gram positive",
           "ferm")
def check_definite_cert(cfg, seed):
    from .ops import COMPLEX, FiberPairing, LatticeOperator, SPINOR_PAIRING
    from .quant_ferm import definite_type_certificate
    lat = _lat(cfg)
    op = build_dirac_1p1(lat, 1.0)
    cert = definite_type_certificate(op)
    if not cert.definite:
        return CheckResult(1.0, 0.0)
    # negative control: sign-flipped pairing
    flipped = FiberPairing(-SPINOR_PAIRING, sesquilinear=True, definite=False)
    bad = LatticeOperator(lat, 2, COMPLEX, op.entries, flipped, name="dirac-flipped")
    cert_bad = definite_type_certificate(bad)
    if cert_bad.definite:
        return CheckResult(1.0, 0.0, {"negative_control": "failed"})
    return CheckResult(0.0, 0.0, {"eigs": [float(cert.eigenvalues[0]),
                                           float(cert.eigenvalues[-1])]})


@_register("car-norms-relations",
           "Def A.1 / Prop A.5(i) norm: ||a(v)|| = |v|, anticommutators", "ferm")
def check_car(cfg, seed):
    from .quant_ferm import (FermionicFields, anticommutator, build_selfdual_car,
                             operator_norm)
    lat = _lat_ferm(cfg)
    op = build_dirac_1p1(lat, 1.0)
    ff = FermionicFields(GreenPair(op))
    car = ff.car
    rng = np.random.default_rng(seed)
    worst_rel = 0.0
    worst_norm = 0.0
    n = car.n
    eye = np.eye(car.dim)
    for _ in range(_samples(cfg, 100)):
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        w = rng.normal(size=n) + 1j * rng.normal(size=n)
        worst_rel = max(worst_rel, operator_norm(
            anticommutator(car.a(v), car.a(w))))
        target = complex(np.vdot(w, v)) * eye
        worst_rel = max(worst_rel, operator_norm(
            anticommutator(car.a_dag(v), car.a(w)) - target))
        worst_norm = max(worst_norm, abs(operator_norm(car.a(v))
                                         - float(np.linalg.norm(v))))
        lam = complex(rng.normal(), rng.normal())
        worst_rel = max(worst_rel, operator_norm(
            car.a(lam * v) - np.conj(lam) * car.a(v)))
    sd = build_selfdual_car(car)
    for _ in range(20):
        vr = rng.normal(size=2 * n)
        bm = sd.b(vr)
        worst_rel = max(worst_rel, float(np.abs(bm - bm.conj().T).max()))
        worst_norm = max(worst_norm, abs(operator_norm(bm)
                                         - float(np.linalg.norm(vr)) / np.sqrt(2)))
    # grading
    for j in range(n):
        g = car.grading
        worst_rel = max(worst_rel, operator_norm(
            g @ car.annihilators[j] + car.annihilators[j] @ g))
    worst = max(worst_rel / 10, worst_norm)  # relations at 1e-12, norms at 1e-10
    return CheckResult(worst, 1e-10, {"relations": worst_rel, "norms": worst_norm})


@_register("fermionic-fields", "Thm 4.5: canonical anti-commutation relations",
           "ferm")
def check_ferm_fields(cfg, seed):
    from .quant_ferm import FermionicFields, anticommutator, operator_norm
    lat = _lat_ferm(cfg)
    op = build_dirac_1p1(lat, 1.0)
    gp = GreenPair(op)
    ff = FermionicFields(gp)
    rng = np.random.default_rng(seed)
    eye = np.eye(ff.car.dim)
    worst = 0.0
    for _ in range(_samples(cfg, 10)):
        f = random_margin_section(op, rng)
        g = random_margin_section(op, rng)
        worst = max(worst, operator_norm(anticommutator(ff.phi(f), ff.phi(g))))
        worst = max(worst, operator_norm(
            anticommutator(ff.phi_plus(f), ff.phi_plus(g))))
        target = 1j * ff.pairing_with_source(ff.physical_propagator(f), g) * eye
        worst = max(worst, operator_norm(
            anticommutator(ff.phi(f), ff.phi_plus(g)) - target))
        pf = op.apply(f)
        worst = max(worst, operator_norm(ff.phi(pf)))
        worst = max(worst, operator_norm(ff.phi_plus(pf)))
    return CheckResult(worst, 1e-10)


@_register("key-identity", "Thm 4.5 proof Eqs. (eq:M-)/(eq:M+)", "ferm")
def check_key_identity(cfg, seed):
    from .quant_ferm import key_identity_check
    lat = _lat(cfg, default=(24, 8, 0.1, 0.25))
    op = build_dirac_1p1(lat, 1.0)
    rep = key_identity_check(GreenPair(op), samples=_samples(cfg, 10), seed=seed)
    return CheckResult(max(rep.values()), 1e-10, rep)


@_register("ferm-npoint", "Sec 4.3 Remark: fermionic n-point functions", "ferm")
def check_ferm_npoint(cfg, seed):
    from .quant_ferm import FermionicFields, ferm_npoint, operator_norm
    lat = _lat_ferm(cfg)
    op = build_dirac_1p1(lat, 1.0)
    ff = FermionicFields(GreenPair(op))
    rng = np.random.default_rng(seed)
    worst = 0.0
    f, g, h = (random_margin_section(op, rng) for _ in range(3))
    # odd parity
    worst = max(worst, abs(ferm_npoint(ff, [f], [])))
    worst = max(worst, abs(ferm_npoint(ff, [f, g], [h])))
    # tau_{1,1} consistency: <Phi(f) Phi+(g)> + <Phi+(g) Phi(f)> = i<<PiGf,g>>
    mixed = ferm_npoint(ff, [f], [g])
    om = ff.car.vacuum
    swapped = complex(om.conj() @ ff.phi_plus(g) @ ff.phi(f) @ om)
    target = 1j * ff.pairing_with_source(ff.physical_propagator(f), g)
    worst = max(worst, abs(mixed + swapped - target))
    # antisymmetry under same-type swap
    a = ferm_npoint(ff, [f, g], [h, h])
    b = ferm_npoint(ff, [g, f], [h, h])
    worst = max(worst, abs(a + b))
    return CheckResult(worst, 1e-10)


@_register("quantum-causality-ferm", "Thm 3.24 (i): super-commute", "axioms")
def check_causality_ferm(cfg, seed):
    from .functor import causality_check
    lat = _lat(cfg)
    op = build_dirac_1p1(lat, 1.0)
    gp = GreenPair(op)
    t0 = default_t_star(op)
    d1 = diamond(lat, (t0 - 1, 1), (t0 + 1, 1))
    d2 = diamond(lat, (t0 - 1, 1 + lat.n_x // 2), (t0 + 1, 1 + lat.n_x // 2))
    rng = np.random.default_rng(seed)
    rep = causality_check(op, gp, d1, d2, "ferm", rng, generators_per_region=2)
    if not rep["applicable"]:
        return CheckResult(1.0, 0.0, rep)
    return CheckResult(max(rep["cross_slice"], rep["anticommutators"]), 1e-12, rep)


@_register("time-slice-ferm", "Thm 3.24 (ii): solution-space isomorphism", "axioms")
def check_timeslice_ferm(cfg, seed):
    from .functor import RegionEmbedding, sol_morphism
    lat = _lat(cfg)
    op = build_dirac_1p1(lat, 1.0)
    gp = GreenPair(op)
    t0 = default_t_star(op)
    e = RegionEmbedding(op, t0 - 3, t0 + 4)
    rng = np.random.default_rng(seed)
    rep = sol_morphism(e, gp, rng, samples=4)
    return CheckResult(max(rep["isometry"], rep["diagram"]), 1e-10, rep)


@_register("car-functor", "Lemma 3.23 / Prop A.5 (iv): CAR functor", "ferm")
def check_car_functor(cfg, seed):
    from .functor import RegionEmbedding
    from .quant_ferm import FermionicFields, car_functor_check
    from .green import solution_from_cauchy, CauchyData
    lat = _lat_ferm(cfg)
    op = build_dirac_1p1(lat, 1.0)
    gp = GreenPair(op)
    t0 = default_t_star(op)
    e = RegionEmbedding(op, t0 - 3, t0 + 4)
    gp_sub = GreenPair(e.sub_op)
    ff_sub = FermionicFields(gp_sub)
    ff_amb = FermionicFields(gp)

    def extend(u_sub):
        data = read_cauchy_data(e.sub_op, u_sub, ff_sub.sol.t_star)
        return solution_from_cauchy(op, CauchyData(ff_sub.sol.t_star + e.t_lo,
                                                   data.values))

    rng = np.random.default_rng(seed)
    rep = car_functor_check(ff_sub, ff_amb, extend, rng)
    return CheckResult(max(rep["isometry"], rep["trace"]), 1e-10, rep)


# --------------------------------------------------------------------------- axioms


@_register("res-green-ext-band", "Lemma 3.2: res o G o ext = G_sub (band)", "axioms")
def check_rge_band(cfg, seed):
    from .functor import RegionEmbedding, res_green_ext_check
    lat = _lat(cfg)
    op = build_dalembert(lat, 1.0)
    gp = GreenPair(op)
    e = RegionEmbedding(op, 4, lat.n_t - 5)
    rng = np.random.default_rng(seed)
    rep = res_green_ext_check(e, gp, rng, samples=_samples(cfg, 8))
    worst = max(rep["retarded"], rep["advanced"], 0.0 if rep["cones"] else 1.0)
    return CheckResult(worst, 1e-10, rep)


@_register("res-green-ext-diamond", "Lemma 3.2: res o G o ext = G_sub (diamond)",
           "axioms")
def check_rge_diamond(cfg, seed):
    from .functor import diamond_green_check
    lat = _lat(cfg)
    op = build_dalembert(lat, 1.0)
    gp = GreenPair(op)
    t0 = default_t_star(op)
    radius = min(4, (lat.n_t - 10) // 2, lat.n_x // 2 - 1)
    dm = diamond(lat, (t0 - radius, 2), (t0 + radius, 2))
    rng = np.random.default_rng(seed)
    rep = diamond_green_check(op, gp, dm, rng, samples=_samples(cfg, 6))
    return CheckResult(max(rep["retarded"], rep["advanced"]), 1e-10, rep)


@_register("ext-operator-commutes", "Lemma 3.2 proof: P2 o ext = ext o P1", "axioms")
def check_ext_commutes(cfg, seed):
    from .functor import RegionEmbedding, restriction_commutes_defect
    lat = _lat(cfg)
    op = build_dalembert(lat, 1.0)
    e = RegionEmbedding(op, 4, lat.n_t - 5)
    rng = np.random.default_rng(seed)
    return CheckResult(restriction_commutes_defect(e, rng), 1e-13)


@_register("sympl-functoriality", "Lemma 3.9 Eq. (4): composition of morphisms",
           "axioms")
def check_functoriality(cfg, seed):
    from .functor import RegionEmbedding, sympl_morphism
    lat = _lat(cfg)
    op = build_dalembert(lat, 1.0)
    gp = GreenPair(op)
    t0 = default_t_star(op)
    e_big = RegionEmbedding(op, t0 - 5, t0 + 6)
    e_small = RegionEmbedding(e_big.sub_op, 2, 9)
    m_big = sympl_morphism(e_big, gp)["matrix"]
    gp_big_sub = GreenPair(e_big.sub_op)
    m_small = sympl_morphism(e_small, gp_big_sub)["matrix"]
    e_direct = RegionEmbedding(op, t0 - 5 + 2, t0 - 5 + 9)
    m_direct = sympl_morphism(e_direct, gp)["matrix"]
    defect = float(np.abs(m_big @ m_small - m_direct).max())
    return CheckResult(defect, 1e-10)


def list_checks() -> list[tuple[str, str, str]]:
    return [(c.name, c.anchor, c.suite) for c in REGISTRY]


def checks_for_suites(suites) -> list[Check]:
    if "all" in suites:
        return list(REGISTRY)
    return [c for c in REGISTRY if c.suite in suites]
