"""Categorical layer: region embeddings (restriction / extension by zero),
the induced maps on symplectic and solution coordinates, and the locally
covariant QFT axiom checks (causality, time slice, restricted Green's
operators).

Sub-regions eligible for operator restriction are time bands (again product
lattices) and causal diamonds (solved by row-wise causal substitution over
the shrinking slice footprints).  Arbitrary point sets can be causality-
checked but not operator-restricted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .green import GreenPair, default_t_star, read_cauchy_data, solution_from_cauchy
from .lattice import (LatticeSpacetime, Region, causal_future, causal_hull,
                      causal_past, causally_disjoint, diamond,
                      is_causally_compatible, is_cauchy_slice_region, time_band)
from .ops import LatticeOperator, Section


@dataclass
class RegionEmbedding:
    """A time band [t_lo, t_hi] x circle as a sub-spacetime, with the operator
    restricted to its interior rows; fibers map by the identity."""

    ambient_op: LatticeOperator
    t_lo: int
    t_hi: int

    def __post_init__(self):
        lat = self.ambient_op.lattice
        r = self.ambient_op.r
        n_sub = self.t_hi - self.t_lo + 1
        if not (0 <= self.t_lo <= self.t_hi < lat.n_t):
            raise ValueError("band outside the ambient lattice")
        if n_sub < 4 * r + 2:
            raise ValueError(f"band too thin for margins: {n_sub} < {4 * r + 2}")
        self.region = time_band(lat, self.t_lo, self.t_hi)
        if not is_causally_compatible(lat, self.region):
            raise ValueError("band region failed causal compatibility")
        object.__setattr__(self, "sub_lattice", LatticeSpacetime.__new__(LatticeSpacetime))
        # bands may be thinner than the public lattice minimum; bypass __post_init__
        object.__setattr__(self.sub_lattice, "n_t", n_sub)
        object.__setattr__(self.sub_lattice, "n_x", lat.n_x)
        object.__setattr__(self.sub_lattice, "dt", lat.dt)
        object.__setattr__(self.sub_lattice, "dx", lat.dx)
        self.sub_op = LatticeOperator(
            self.sub_lattice, self.ambient_op.k, self.ambient_op.kind,
            [(dt, dx, a) for dt, dx, a in self.ambient_op.entries],
            self.ambient_op.pairing, name=self.ambient_op.name + "|band")

    def restrict(self, phi: Section) -> Section:
        return Section(self.sub_lattice,
                       phi.values[self.t_lo:self.t_hi + 1].copy(),
                       phi.kind)

    def extend_zero(self, phi_sub: Section) -> Section:
        """Extension by zero; the support must stay inside the band's margin
        interior so the extension is again margin-admissible."""
        lo, hi = phi_sub.support_slices()
        r = self.sub_op.r
        if lo >= 0 and (lo < 2 * r or hi > self.sub_lattice.n_t - 1 - 2 * r):
            raise ValueError("support touches the sub-region margin")
        lat = self.ambient_op.lattice
        vals = np.zeros((lat.n_t, lat.n_x, phi_sub.fiber_dim),
                        dtype=phi_sub.values.dtype)
        vals[self.t_lo:self.t_hi + 1] = phi_sub.values
        return Section(lat, vals, phi_sub.kind)


def ext_zero(e: RegionEmbedding, phi_sub: Section) -> Section:
    return e.extend_zero(phi_sub)


def restriction_commutes_defect(e: RegionEmbedding, rng: np.random.Generator,
                                samples: int = 10) -> float:
    """max |P_amb(ext phi) - ext(P_sub phi)| on interior rows."""
    from .ops import random_margin_section
    worst = 0.0
    for _ in range(samples):
        phi = random_margin_section(e.sub_op, rng, deepen=1)
        lhs = e.ambient_op.apply_padded(e.extend_zero(phi))
        rhs = e.extend_zero(e.sub_op.apply(phi))
        worst = max(worst, float(np.abs(lhs.values - rhs.values).max()))
    return worst


def res_green_ext_check(e: RegionEmbedding, gp_amb: GreenPair,
                        rng: np.random.Generator, samples: int = 10) -> dict:
    """Lemma-style identity res o G_amb o ext = G_sub on random admissible
    sources, plus exact cone-restriction agreement."""
    from .ops import random_margin_section
    gp_sub = GreenPair(e.sub_op)
    rep = {"retarded": 0.0, "advanced": 0.0, "cones": True}
    for _ in range(samples):
        f = random_margin_section(e.sub_op, rng, deepen=1)
        f_amb = e.extend_zero(f)
        for direction in ("retarded", "advanced"):
            amb = getattr(gp_amb, direction)(f_amb, check_margin=False)
            sub = getattr(gp_sub, direction)(f)
            got = e.restrict(amb)
            scale = max(float(np.abs(sub.values).max()), 1e-30)
            rep[direction] = max(rep[direction],
                                 float(np.abs(got.values - sub.values).max()) / scale)
    # support chain: ambient cone of an interior point, clipped to the band,
    # equals the band cone
    lat = e.ambient_op.lattice
    p = ((e.t_lo + e.t_hi) // 2, 1)
    amb_cone = causal_future(lat, {p}) & e.region.members
    sub_cone = {(t + e.t_lo, x) for (t, x) in
                causal_future(e.sub_lattice, {(p[0] - e.t_lo, p[1])})}
    rep["cones"] = amb_cone == sub_cone
    return rep


# -- diamond regions ------------------------------------------------------------------


class DiamondSolver:
    """Retarded/advanced substitution restricted to a causal diamond.

    Equation rows are the diamond points whose full stencil lies inside the
    region; the leading time blocks of the shipped operators are site-local,
    so the row-wise solves never leave the slice footprint.
    """

    def __init__(self, op: LatticeOperator, region: Region):
        if op.r != 1:
            raise ValueError("diamond solver implemented for time radius 1")
        self.op = op
        self.region = region
        lat = op.lattice
        offs = [(dt, dx) for dt, dx, _ in op.entries]
        self.interior = {
            (t, x) for (t, x) in region.members
            if all((t + dt, (x + dx) % lat.n_x) in region.members for dt, dx in offs)}
        lead = op.time_block(1)
        n = lat.n_x * op.k
        off_diag = lead - np.diag(np.diag(lead)) if op.k == 1 else None
        # site-local leading block: invert per site
        self.lead_inv = {}
        for x in range(lat.n_x):
            blk = lead[x * op.k:(x + 1) * op.k, x * op.k:(x + 1) * op.k]
            self.lead_inv[x] = np.linalg.inv(blk)
        trail = op.time_block(-1)
        self.trail_inv = {}
        for x in range(lat.n_x):
            blk = trail[x * op.k:(x + 1) * op.k, x * op.k:(x + 1) * op.k]
            self.trail_inv[x] = np.linalg.inv(blk)

    def admissible_source(self, f: Section) -> bool:
        sup = f.support()
        if not sup <= self.interior:
            return False
        # one extra interior layer so the source never abuts the boundary
        lat = self.op.lattice
        offs = [(dt, dx) for dt, dx, _ in self.op.entries]
        deep = {p for p in self.interior
                if all((p[0] + dt, (p[1] + dx) % lat.n_x) in self.interior
                       for dt, dx in offs)}
        return sup <= deep

    def solve(self, f: Section, direction: str) -> Section:
        lat, op = self.op.lattice, self.op
        k = op.k
        psi = np.zeros((lat.n_t, lat.n_x, k), dtype=f.values.dtype)
        ts = sorted({t for (t, _x) in self.region.members})
        rows = ts if direction == "retarded" else list(reversed(ts))
        step = 1 if direction == "retarded" else -1
        inv = self.lead_inv if direction == "retarded" else self.trail_inv
        for t in rows:
            for x in range(lat.n_x):
                if (t, x) not in self.interior:
                    continue
                rhs = f.values[t, x].copy()
                for dt, dx, coeff in op.entries:
                    if dt == step:
                        continue
                    rhs = rhs - coeff[x] @ psi[t + dt, (x + dx) % lat.n_x]
                psi[t + step, x] = inv[x] @ rhs
        return Section(lat, psi, f.kind)


def diamond_green_check(op: LatticeOperator, gp: GreenPair, region: Region,
                        rng: np.random.Generator, samples: int = 8) -> dict:
    """res o G o ext for a causal diamond: the ambient solution of a source
    supported deep inside the diamond, restricted to the diamond, equals the
    diamond's own causal solve."""
    lat = op.lattice
    if not is_causally_compatible(lat, region):
        raise ValueError("region is not causally compatible")
    solver = DiamondSolver(op, region)
    deep = [p for p in solver.interior if solver.admissible_source(
        _point_section(op, p))]
    if not deep:
        raise ValueError("diamond has no admissible interior sources")
    rep = {"retarded": 0.0, "advanced": 0.0}
    pts = [deep[int(rng.integers(0, len(deep)))] for _ in range(samples)]
    for p in pts:
        f = _point_section(op, p, value=rng.normal() + (1j * rng.normal()
                           if op.kind == "complex" else 0.0))
        for direction in ("retarded", "advanced"):
            amb = getattr(gp, direction)(f, check_margin=False)
            sub = solver.solve(f, direction)
            mask = np.zeros((lat.n_t, lat.n_x, 1))
            for (t, x) in region.members:
                mask[t, x] = 1.0
            diff = np.abs((amb.values - sub.values) * mask).max()
            scale = max(float(np.abs(sub.values * mask).max()), 1e-30)
            rep[direction] = max(rep[direction], float(diff) / scale)
    return rep


def _point_section(op: LatticeOperator, p, value=1.0) -> Section:
    from .ops import delta_section
    return delta_section(op, p[0], p[1], 0, value)


# -- symplectic / solution morphisms ---------------------------------------------------


def sympl_morphism(e: RegionEmbedding, gp_amb: GreenPair) -> dict:
    """Linear map on canonical coordinates induced by extension by zero;
    injective and omega-preserving."""
    from .quant_bos import SymplSpace, omega_gram
    gp_sub = GreenPair(e.sub_op)
    space_sub = SymplSpace(gp_sub)
    space_amb = SymplSpace(gp_amb)
    secs_sub = space_sub.coordinate_basis_sections()
    secs_amb = [e.extend_zero(f) for f in secs_sub]
    c_sub = np.column_stack([space_sub.coordinates(f) for f in secs_sub])
    c_amb = np.column_stack([space_amb.coordinates(f) for f in secs_amb])
    morphism = c_amb @ np.linalg.pinv(c_sub)
    om_sub = omega_gram(space_sub, secs_sub)
    om_amb = omega_gram(space_amb, secs_amb)
    s = np.linalg.svd(morphism, compute_uv=False)
    return {
        "matrix": morphism,
        "omega_defect": float(np.abs(om_sub - om_amb).max()),
        "injective": bool(s[-1] > 1e-8 * s[0]),
        "spaces": (space_sub, space_amb),
        "sections": (secs_sub, secs_amb),
    }


def timeslice_check(e: RegionEmbedding, gp_amb: GreenPair,
                    rng: np.random.Generator) -> dict:
    """Time-slice axiom: a band containing a Cauchy slice induces a symplectic
    isomorphism; the proof mechanism (restrict then re-propagate equals the
    original) is verified directly."""
    lat = e.ambient_op.lattice
    if not is_cauchy_slice_region(lat, e.region):
        return {"applicable": False}
    rep = sympl_morphism(e, gp_amb)
    m = rep["matrix"]
    square = m.shape[0] == m.shape[1]
    s = np.linalg.svd(m, compute_uv=False)
    iso = square and s[-1] > 1e-8 * s[0]
    # uniqueness of the extension: ambient solution -> band data -> re-propagated
    op = e.ambient_op
    from .ops import random_margin_section
    f = random_margin_section(op, rng)
    gp = gp_amb
    u = gp.propagator(f)
    t_mid = (e.t_lo + e.t_hi) // 2
    t_mid = min(max(t_mid, op.row_lo), op.row_hi - 2 * op.r + 1)
    from .green import CauchyData
    data = read_cauchy_data(op, u, t_mid)
    u2 = solution_from_cauchy(op, data)
    scale = max(float(np.abs(u.values).max()), 1e-30)
    rep_out = {
        "applicable": True,
        "square": square,
        "isomorphism": bool(iso),
        "omega_defect": rep["omega_defect"],
        "repropagation_defect": float(np.abs(u.values - u2.values).max()) / scale,
    }
    return rep_out


def causality_check(op: LatticeOperator, gp: GreenPair, r1: Region, r2: Region,
                    mode: str, rng: np.random.Generator,
                    generators_per_region: int = 3) -> dict:
    """Quantum causality for two causally disjoint regions.

    bos: all omega cross-pairings vanish exactly and Weyl commutators vanish
    symbolically.  ferm: solutions generated from Cauchy data localized in
    the regions' slice footprints have exactly vanishing cross slice products,
    and the mixed CAR generators anti-commute on the Fock matrices.
    """
    lat = op.lattice
    if not causally_disjoint(lat, r1, r2):
        return {"applicable": False}
    if mode == "bos":
        from .quant_bos import (SymplSpace, WeylPolynomial, omega_gram,
                                weyl_commutator)
        space = SymplSpace(gp)
        gens = []
        for region in (r1, r2):
            pts = sorted(region.members)
            for _ in range(generators_per_region):
                t, x = pts[int(rng.integers(0, len(pts)))]
                t = int(min(max(t, op.margin_lo), op.margin_hi))
                gens.append(_point_section(op, (t, x), value=float(rng.normal())))
        om = omega_gram(space, gens)
        cross = np.abs(om[:generators_per_region, generators_per_region:]).max()
        commutator_zero = True
        p = len(gens)
        for i in range(generators_per_region):
            for j in range(generators_per_region, p):
                a = WeylPolynomial.generator(om, i)
                b = WeylPolynomial.generator(om, j)
                if not weyl_commutator(a, b).is_zero():
                    commutator_zero = False
        return {"applicable": True, "cross_omega": float(cross),
                "commutators_vanish": commutator_zero}
    if mode == "ferm":
        from .quant_ferm import (FermionicFields, SolutionSpace, anticommutator,
                                 operator_norm)
        t_star = default_t_star(op)
        n_x, k = lat.n_x, op.k
        data_list = []
        split = []
        for region in (r1, r2):
            xs = sorted({x for (t, x) in region.members
                         if t in (t_star, t_star + 1)})
            if not xs:
                return {"applicable": False}
            cols = []
            for _ in range(generators_per_region):
                vec = np.zeros(2 * n_x * k, dtype=complex)
                for x in xs:
                    z = rng.normal(size=k) + 1j * rng.normal(size=k)
                    vec[x * k:(x + 1) * k] = z
                    vec[n_x * k + x * k:n_x * k + (x + 1) * k] = z
                cols.append(vec)
            split.append(cols)
        sol = SolutionSpace.from_data(op, t_star, split[0] + split[1])
        n1 = len(split[0])
        cross = float(np.abs(sol.gram[:n1, n1:]).max())
        from .quant_ferm import build_car
        car, onb = build_car(sol)
        eye = np.eye(sol.dim, dtype=complex)
        coeffs = np.linalg.inv(onb)  # original generators in the ONB
        anti = 0.0
        for i in range(n1):
            for j in range(n1, sol.dim):
                a_i = car.a(_col(onb, coeffs, i))
                a_j = car.a(_col(onb, coeffs, j))
                anti = max(anti, operator_norm(anticommutator(a_i, a_j)))
                anti = max(anti, operator_norm(anticommutator(a_i.conj().T, a_j)))
        return {"applicable": True, "cross_slice": cross, "anticommutators": anti}
    raise ValueError("mode must be 'bos' or 'ferm'")


def _col(onb: np.ndarray, coeffs: np.ndarray, i: int) -> np.ndarray:
    return coeffs[:, i]


def sol_morphism(e: RegionEmbedding, gp_amb: GreenPair,
                 rng: np.random.Generator, samples: int = 6) -> dict:
    """Solution-space embedding for first-order operators: extend band
    solutions by propagation, check the slice Gram is preserved, and that the
    diagram with the symplectic route commutes (extension by zero of a source
    propagates to the extension-as-solution)."""
    from .quant_ferm import SolutionSpace, slice_product
    gp_sub = GreenPair(e.sub_op)
    op_sub, op_amb = e.sub_op, e.ambient_op

    def extend_solution(u_sub: Section) -> Section:
        t_mid = default_t_star(op_sub)
        data = read_cauchy_data(op_sub, u_sub, t_mid)
        from .green import CauchyData
        amb_data = CauchyData(t_mid + e.t_lo, data.values)
        return solution_from_cauchy(op_amb, amb_data)

    from .ops import random_margin_section
    gram_defect = 0.0
    diagram_defect = 0.0
    t_sub = default_t_star(op_sub)
    for _ in range(samples):
        f = random_margin_section(op_sub, rng, deepen=1)
        g = random_margin_section(op_sub, rng, deepen=1)
        uf, ug = gp_sub.propagator(f), gp_sub.propagator(g)
        ef, eg = extend_solution(uf), extend_solution(ug)
        sub_prod = slice_product(op_sub, uf, ug, t_sub)
        amb_prod = slice_product(op_amb, ef, eg, t_sub + e.t_lo)
        scale = max(abs(sub_prod), 1e-30)
        gram_defect = max(gram_defect, abs(sub_prod - amb_prod) / scale)
        # diagram: G_amb(ext f) equals the extension-as-solution of G_sub f
        amb_route = gp_amb.propagator(e.extend_zero(f), check_margin=False)
        scale2 = max(float(np.abs(amb_route.values).max()), 1e-30)
        diagram_defect = max(diagram_defect,
                             float(np.abs(amb_route.values - ef.values).max()) / scale2)
    return {"isometry": gram_defect, "diagram": diagram_defect}
