"""Bosonic (CCR/Weyl) layer: the symplectic space of source classes, the
symbolic Weyl algebra over a finite generator list, a faithful
counting-measure representation, quasi-free states and n-point functions.

A source class is represented by the Cauchy data of its propagated solution
G f at a fixed central slice; two sources are identified iff the data agree.
The symplectic form is omega([f],[g]) = <<G f, g>>.  Weyl-algebra elements
are finite complex combinations of integer words over a chosen generator
list; products only ever evaluate omega on the generator Gram, so the group
algebra itself stays exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .green import GreenPair, default_t_star, read_cauchy_data
from .lattice import spacetime_pairing
from .ops import REAL, LatticeOperator, Section, delta_section

Word = tuple[int, ...]


def sympl_omega(gp: GreenPair, f: Section, g: Section) -> float:
    """omega([f],[g]) = <<G f, g>> for real margin-supported sections."""
    op = gp.op
    if op.kind != REAL:
        raise TypeError("the symplectic layer is defined for real bundles only")
    gf = gp.propagator(f)
    return float(spacetime_pairing(op.lattice, op.pairing, gf, g))


class SymplSpace:
    """Canonical coordinates for SYMPL = sources / ker(G): the Cauchy data of
    G f at the reference slice."""

    def __init__(self, gp: GreenPair, t_star: int | None = None):
        if gp.op.kind != REAL:
            raise TypeError("the symplectic layer is defined for real bundles only")
        self.gp = gp
        self.op = gp.op
        self.t_star = default_t_star(gp.op) if t_star is None else t_star
        self.dim = 2 * self.op.r * self.op.k * self.op.lattice.n_x

    def coordinates(self, f: Section) -> np.ndarray:
        gf = self.gp.propagator(f, check_margin=False)
        return read_cauchy_data(self.op, gf, self.t_star).vector().real

    def class_equal(self, f: Section, g: Section, tol: float = 1e-10) -> bool:
        cf, cg = self.coordinates(f), self.coordinates(g)
        scale = max(np.abs(cf).max(), np.abs(cg).max(), 1e-30)
        return bool(np.abs(cf - cg).max() <= tol * scale)

    def coordinate_basis_sections(self) -> list[Section]:
        """Delta sources on the data slices; their classes span SYMPL."""
        op = self.op
        secs = []
        for s in range(2 * op.r):
            for x in range(op.lattice.n_x):
                for c in range(op.k):
                    secs.append(delta_section(op, self.t_star + s, x, c))
        return secs

    def omega(self, f: Section, g: Section) -> float:
        return sympl_omega(self.gp, f, g)


@dataclass(frozen=True)
class SymplClass:
    """A source class: representative section plus its canonical coordinates."""

    representative: Section
    coordinates: np.ndarray


def sympl_class(space: SymplSpace, f: Section) -> SymplClass:
    return SymplClass(f, space.coordinates(f))


def sympl_rank_check(space: SymplSpace, svd_tol: float = 1e-8) -> dict:
    """Full-rank checks: the coordinate map on the canonical basis and the
    omega Gram matrix (non-degeneracy of the symplectic form)."""
    secs = space.coordinate_basis_sections()
    coords = np.column_stack([space.coordinates(f) for f in secs])
    omega = omega_gram(space, secs)

    def rank(m):
        s = np.linalg.svd(m, compute_uv=False)
        return int(np.sum(s > svd_tol * s[0])) if s.size and s[0] > 0 else 0

    return {
        "dim": space.dim,
        "rank_coords": rank(coords),
        "rank_omega": rank(omega),
        "full_rank": rank(coords) == space.dim and rank(omega) == space.dim,
    }


def omega_gram(space: SymplSpace, generators: list[Section]) -> np.ndarray:
    n = len(generators)
    gfs = [space.gp.propagator(f, check_margin=False) for f in generators]
    lat, pairing = space.op.lattice, space.op.pairing
    g = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            g[i, j] = float(spacetime_pairing(lat, pairing, gfs[i], generators[j]))
    return g


# -- symbolic Weyl algebra --------------------------------------------------------


class WeylPolynomial:
    """Finite complex combination of Weyl words over a fixed generator list.

    Words are integer coefficient vectors n denoting w(sum_i n_i [f_i]); the
    product phase comes from the omega Gram of the generators:
    w(a) w(b) = exp(-i omega(a,b)/2) w(a+b).
    """

    def __init__(self, omega: np.ndarray, terms: dict[Word, complex] | None = None):
        self.omega = omega
        self.terms: dict[Word, complex] = {}
        if terms:
            for w, c in terms.items():
                if c != 0:
                    self.terms[tuple(int(v) for v in w)] = complex(c)

    @property
    def p(self) -> int:
        return self.omega.shape[0]

    @staticmethod
    def unit(omega: np.ndarray) -> "WeylPolynomial":
        p = omega.shape[0]
        return WeylPolynomial(omega, {tuple([0] * p): 1.0})

    @staticmethod
    def generator(omega: np.ndarray, i: int, n: int = 1) -> "WeylPolynomial":
        p = omega.shape[0]
        w = [0] * p
        w[i] = n
        return WeylPolynomial(omega, {tuple(w): 1.0})

    @staticmethod
    def word(omega: np.ndarray, w: Word, coeff: complex = 1.0) -> "WeylPolynomial":
        return WeylPolynomial(omega, {tuple(w): coeff})

    def omega_of(self, a: Word, b: Word) -> float:
        va, vb = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        return float(va @ self.omega @ vb)

    def __add__(self, other: "WeylPolynomial") -> "WeylPolynomial":
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0.0) + c
            if out[w] == 0:
                del out[w]
        return WeylPolynomial(self.omega, out)

    def __sub__(self, other: "WeylPolynomial") -> "WeylPolynomial":
        return self + (-1.0) * other

    def __rmul__(self, c: complex) -> "WeylPolynomial":
        return WeylPolynomial(self.omega, {w: c * v for w, v in self.terms.items()})

    def __mul__(self, other: "WeylPolynomial") -> "WeylPolynomial":
        out: dict[Word, complex] = {}
        for wa, ca in self.terms.items():
            for wb, cb in other.terms.items():
                phase = np.exp(-0.5j * self.omega_of(wa, wb))
                w = tuple(a + b for a, b in zip(wa, wb))
                c = ca * cb * phase
                out[w] = out.get(w, 0.0) + c
                if out[w] == 0:
                    del out[w]
        return WeylPolynomial(self.omega, out)

    def star(self) -> "WeylPolynomial":
        """w(phi)* = w(-phi), antilinear anti-automorphism."""
        return WeylPolynomial(
            self.omega,
            {tuple(-v for v in w): np.conj(c) for w, c in self.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def max_coeff_diff(self, other: "WeylPolynomial") -> float:
        keys = set(self.terms) | set(other.terms)
        return max((abs(self.terms.get(k, 0.0) - other.terms.get(k, 0.0))
                    for k in keys), default=0.0)


def weyl_mul(a: WeylPolynomial, b: WeylPolynomial) -> WeylPolynomial:
    return a * b


def weyl_star(a: WeylPolynomial) -> WeylPolynomial:
    return a.star()


def weyl_commutator(a: WeylPolynomial, b: WeylPolynomial) -> WeylPolynomial:
    return a * b - b * a


def weyl_l2_apply(omega: np.ndarray, word: Word, f_state: dict[Word, complex]):
    """Counting-measure representation on finitely supported functions:
    (w(a) F)(m) = exp(i omega(a, m)/2) F(a + m)."""
    va = np.asarray(word, dtype=float)
    out: dict[Word, complex] = {}
    for m, c in f_state.items():
        # (wF)(m') = e^{i omega(a, m')/2} F(a + m'); support moves to m' = m - a
        mp = tuple(int(mi - ai) for mi, ai in zip(m, word))
        vmp = np.asarray(mp, dtype=float)
        out[mp] = out.get(mp, 0.0) + np.exp(0.5j * float(va @ omega @ vmp)) * c
        if out[mp] == 0:
            del out[mp]
    return out


def l2_inner(f1: dict[Word, complex], f2: dict[Word, complex]) -> complex:
    keys = set(f1) & set(f2)
    return sum(np.conj(f2[k]) * f1[k] for k in keys)


def weyl_l2_rep_check(omega: np.ndarray, rng: np.random.Generator,
                      words: int = 8, support: int = 12) -> dict:
    """Unitarity of the counting-measure representation and agreement of the
    operator product with the symbolic Weyl relation."""
    p = omega.shape[0]

    def rand_word():
        return tuple(int(v) for v in rng.integers(-2, 3, size=p))

    def rand_state():
        st: dict[Word, complex] = {}
        for _ in range(support):
            st[rand_word()] = complex(rng.normal(), rng.normal())
        return st

    unitary = 0.0
    relation = 0.0
    for _ in range(words):
        a, b = rand_word(), rand_word()
        f1, f2 = rand_state(), rand_state()
        wf1 = weyl_l2_apply(omega, a, f1)
        wf2 = weyl_l2_apply(omega, a, f2)
        unitary = max(unitary, abs(l2_inner(wf1, wf2) - l2_inner(f1, f2)))
        lhs = weyl_l2_apply(omega, a, weyl_l2_apply(omega, b, f1))
        phase = np.exp(-0.5j * float(np.asarray(a, float) @ omega @ np.asarray(b, float)))
        ab = tuple(x + y for x, y in zip(a, b))
        rhs = {k: phase * v for k, v in weyl_l2_apply(omega, ab, f1).items()}
        keys = set(lhs) | set(rhs)
        relation = max(relation,
                       max((abs(lhs.get(k, 0) - rhs.get(k, 0)) for k in keys), default=0.0))
    identity_ok = weyl_l2_apply(omega, tuple([0] * p), {tuple([0] * p): 1.0}) \
        == {tuple([0] * p): (1 + 0j)}
    return {"unitarity": unitary, "relation": relation, "identity": identity_ok}


# -- quasi-free states --------------------------------------------------------------


class QuasiFreeState:
    """Gaussian state tau(w(phi)) = exp(-mu(phi,phi)/4) with a real symmetric
    positive covariance mu on canonical coordinates, dominating omega:
    omega(f,g)^2 <= mu(f,f) mu(g,g)."""

    def __init__(self, space: SymplSpace, mu_matrix: np.ndarray, name: str = "state"):
        self.space = space
        m = np.asarray(mu_matrix, dtype=float)
        if not np.allclose(m, m.T, atol=1e-12):
            raise ValueError("covariance matrix must be symmetric")
        self.mu_matrix = (m + m.T) / 2
        self.name = name

    def mu(self, f: Section, g: Section) -> float:
        cf, cg = self.space.coordinates(f), self.space.coordinates(g)
        return float(cf @ self.mu_matrix @ cg)

    def omega(self, f: Section, g: Section) -> float:
        return self.space.omega(f, g)

    def tau2(self, f: Section, g: Section) -> complex:
        return 0.5 * self.mu(f, g) + 0.5j * self.omega(f, g)

    def evaluate_word(self, generators: list[Section], w: Word) -> complex:
        """tau(w(sum_i n_i [f_i])) through the Gaussian generating rule."""
        comb = None
        for n, f in zip(w, generators):
            if n == 0:
                continue
            comb = f * float(n) if comb is None else comb + f * float(n)
        if comb is None:
            return 1.0 + 0.0j
        return complex(np.exp(-0.25 * self.mu(comb, comb)))

    def evaluate(self, generators: list[Section], poly: WeylPolynomial) -> complex:
        return sum(c * self.evaluate_word(generators, w) for w, c in poly.terms.items())


def mode_frequencies(op: LatticeOperator, m0: float) -> np.ndarray:
    lat = op.lattice
    lam = (2.0 / lat.dx * np.sin(np.pi * np.arange(lat.n_x) / lat.n_x)) ** 2
    return np.sqrt(m0 ** 2 + lam)


def default_vacuum(gp: GreenPair, m0: float, t_star: int | None = None) -> QuasiFreeState:
    """Ground state of the ultrastatic scalar wave operator: per spatial
    Fourier mode k, frequency omega_k = sqrt(m0^2 + (2/dx sin(pi k/n_x))^2),
    with the one-mode ground-state covariance.

    Requires m0 > 0 (the k = 0 mode is not normalizable otherwise).
    """
    op = gp.op
    if op.k != 1 or op.kind != REAL or not op.name.startswith("wave"):
        raise TypeError("the shipped vacuum is defined for the scalar wave operator")
    if m0 <= 0:
        raise ValueError("the shipped vacuum needs m0 > 0 (massless zero mode)")
    lat = op.lattice
    space = SymplSpace(gp, t_star)
    om = mode_frequencies(op, m0)
    step = dt_step_angles(lat.dt, om)
    # positive-frequency amplitude from the two data slices, as a complex
    # linear map L on coordinates (u0, u1) -> a
    n_x = lat.n_x
    fft = np.fft.fft(np.eye(n_x)) / np.sqrt(n_x)
    zero = np.zeros_like(fft)
    to_modes = np.block([[fft, zero], [zero, fft]])
    eiT = np.exp(1j * step)
    denom = 2j * np.sin(step)
    amp = np.hstack([np.diag(eiT / denom), np.diag(-1.0 / denom)])
    L = amp @ to_modes
    weights = 2.0 * lat.dx * om
    mu = 2.0 * np.real(L.conj().T @ np.diag(weights) @ L)
    return QuasiFreeState(space, mu, name=f"vacuum(m={m0})")


def dt_step_angles(dt: float, om: np.ndarray) -> np.ndarray:
    arg = 1.0 - dt ** 2 * om ** 2 / 2.0
    if np.any(np.abs(arg) >= 1.0):
        bad = float(np.max(dt * om))
        raise ValueError(f"time step too coarse for the mode spectrum (dt*omega = {bad:.3f})")
    return np.arccos(arg)


def coordinate_state(space: SymplSpace, scale: float | None = None,
                     name: str = "coordinate-state") -> QuasiFreeState:
    """Generic dominated quasi-free state: mu = kappa * identity on canonical
    coordinates with kappa = ||omega-coordinate matrix||_2 (so the domination
    inequality holds with equality margin)."""
    secs = space.coordinate_basis_sections()
    coords = np.column_stack([space.coordinates(f) for f in secs])
    om = omega_gram(space, secs)
    cinv = np.linalg.pinv(coords)
    w_coord = cinv.T @ om @ cinv  # omega as a form on coordinate space
    kappa = scale if scale is not None else float(np.linalg.norm(w_coord, 2))
    return QuasiFreeState(space, kappa * np.eye(space.dim), name=name)


def state_positivity_check(state: QuasiFreeState, generators: list[Section],
                           rng: np.random.Generator, families: int = 5,
                           words_per_family: int = 6) -> float:
    """Most negative eigenvalue of Gram matrices [tau(w_i^* w_j)] over random
    word families (>= -1e-10 for a state)."""
    om = omega_gram(state.space, generators)
    worst = 0.0
    p = len(generators)
    for _ in range(families):
        words = [tuple(int(v) for v in rng.integers(-2, 3, size=p))
                 for _ in range(words_per_family)]
        gram = np.zeros((len(words), len(words)), dtype=complex)
        for i, wi in enumerate(words):
            for j, wj in enumerate(words):
                poly = WeylPolynomial.word(om, wi).star() * WeylPolynomial.word(om, wj)
                gram[i, j] = state.evaluate(generators, poly)
        ev = np.linalg.eigvalsh((gram + gram.conj().T) / 2)
        worst = min(worst, float(ev.min()))
    return worst


def domination_check(state: QuasiFreeState, rng: np.random.Generator,
                     pairs: int = 200) -> float:
    """max over samples of omega(f,g)^2 / (4 mu(f,f) mu(g,g)); must be <= 1/4
    + roundoff for a quasi-free state (we in fact satisfy omega^2 <= mu mu)."""
    from .ops import random_margin_section
    worst = 0.0
    for _ in range(pairs):
        f = random_margin_section(state.space.op, rng)
        g = random_margin_section(state.space.op, rng)
        o = state.omega(f, g)
        denom = state.mu(f, f) * state.mu(g, g)
        if denom > 0:
            worst = max(worst, 0.25 * o * o / denom)
    return worst


# -- n-point functions ---------------------------------------------------------------


def _pairings(indices: tuple[int, ...]):
    if not indices:
        yield []
        return
    first, rest = indices[0], indices[1:]
    for i, partner in enumerate(rest):
        for sub in _pairings(rest[:i] + rest[i + 1:]):
            yield [(first, partner)] + sub


def npoint(state: QuasiFreeState, sections: list[Section]) -> complex:
    """n-point function by the Wick expansion over pair partitions of the
    two-point kernel tau2 = mu/2 + i omega/2; odd n vanishes."""
    n = len(sections)
    if n % 2 == 1:
        return 0.0 + 0.0j
    if n == 0:
        return 1.0 + 0.0j
    t2 = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            if i != j:
                t2[i, j] = state.tau2(sections[i], sections[j])
    total = 0.0 + 0.0j
    for pairing in _pairings(tuple(range(n))):
        term = 1.0 + 0.0j
        for (i, j) in pairing:
            term *= t2[i, j]
        total += term
    return total


def npoint_fd_oracle(state: QuasiFreeState, sections: list[Section],
                     h: float = 0.05) -> complex:
    """Finite-difference oracle: mixed derivative (-i)^n d^n/dt_1..dt_n of the
    closed-form generating functional, central differences with one Richardson
    step.

    The default step sits in the truncation-dominated regime for fourth-order
    mixed differences in double precision; much smaller steps lose accuracy
    to cancellation.
    """
    n = len(sections)
    mu = np.zeros((n, n))
    om = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            mu[i, j] = state.mu(sections[i], sections[j])
            om[i, j] = state.omega(sections[i], sections[j])

    def gen(ts):
        e = -0.25 * ts @ mu @ ts
        ph = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                ph += ts[i] * ts[j] * om[i, j]
        return np.exp(e - 0.5j * ph)

    def mixed(hh):
        total = 0.0 + 0.0j
        for signs in np.ndindex(*([2] * n)):
            sgn = (-1) ** sum(signs)
            ts = np.array([hh if s == 0 else -hh for s in signs])
            total += sgn * gen(ts)
        return total / (2 * hh) ** n

    d1, d2 = mixed(h), mixed(h / 2)
    richardson = (4 * d2 - d1) / 3
    return (-1j) ** n * richardson


def field_equation_check(state: QuasiFreeState, g: Section) -> float:
    """max over probe sources e of |tau2(P e, g)| (the field equation holds in
    each slot because mu and omega factor through G)."""
    op = state.space.op
    worst = 0.0
    lat = op.lattice
    t_probe = state.space.t_star
    for x in range(lat.n_x):
        for c in range(op.k):
            e = delta_section(op, t_probe, x, c)
            pe = op.apply_padded(e)
            worst = max(worst, abs(state.tau2(pe, g)))
    return worst


def ccr_functor_check(space_sub: SymplSpace, space_amb: SymplSpace,
                      generators_sub: list[Section], extend,
                      rng: np.random.Generator, samples: int = 10) -> dict:
    """Push generator words through a region embedding and verify that the
    induced map is a *-morphism: products and stars computed with the
    sub-region omega Gram agree with those computed with the ambient Gram of
    the extended generators."""
    gens_amb = [extend(f) for f in generators_sub]
    om_sub = omega_gram(space_sub, generators_sub)
    om_amb = omega_gram(space_amb, gens_amb)
    gram_defect = float(np.abs(om_sub - om_amb).max())
    p = len(generators_sub)
    mul_defect = 0.0
    star_defect = 0.0
    for _ in range(samples):
        wa = tuple(int(v) for v in rng.integers(-2, 3, size=p))
        wb = tuple(int(v) for v in rng.integers(-2, 3, size=p))
        a_s, b_s = WeylPolynomial.word(om_sub, wa), WeylPolynomial.word(om_sub, wb)
        a_a, b_a = WeylPolynomial.word(om_amb, wa), WeylPolynomial.word(om_amb, wb)
        prod_s, prod_a = a_s * b_s, a_a * b_a
        mul_defect = max(mul_defect, prod_s.max_coeff_diff(prod_a))
        star_defect = max(star_defect, a_s.star().max_coeff_diff(a_a.star()))
    return {"gram": gram_defect, "mul": mul_defect, "star": star_defect}
