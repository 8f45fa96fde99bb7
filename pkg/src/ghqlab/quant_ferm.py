"""Fermionic (CAR/Clifford) layer: the conserved slice scalar product on
solutions, definite-type certification, CAR and self-dual CAR algebras as
Fock matrices, fermionic quantum fields and anti-commutation identities.

The slice product is the exact discrete boundary form i * Q_t, where Q_t is
the partial time sum of <<P phi, psi>> - <<phi, P psi>> rows for the
zero-padded stencil.  It telescopes to a local expression in slices t, t+1,
is conserved on solutions, and satisfies the half-identities

    (G f, G_+ g)_t = -i * sum_{s<=t} <<G f, g>>-rows,
    (G f, G_- g)_t = +i * sum_{s>t}  <<G f, g>>-rows

to solver accuracy.

A centered, formally self-adjoint time discretization necessarily carries a
spectral doubling: the one-step transfer operator has a continuum-connected
branch (eigenvalues with positive real part) on which the slice product is
positive definite, and a mirror branch of equal dimension on which it is
negative definite, the two being exactly orthogonal.  The fermionic theory
is built on the physical branch; the propagator entering the quantum fields
is the slice-orthogonal projection of G onto it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .green import (CauchyData, GreenPair, default_t_star, read_cauchy_data,
                    solution_from_cauchy, time_boundary_flux)
from .lattice import spacetime_pairing
from .ops import COMPLEX, LatticeOperator, Section

FOCK_CAP = 12


def slice_product(op: LatticeOperator, phi: Section, psi: Section, t: int) -> complex:
    """(phi, psi)_t = i * Q_t: the discrete boundary form at slice t.

    Local in the slice window [t, t+1]; independent of t for solutions of
    first-order operators (exact telescoping).
    """
    if op.kind != COMPLEX or op.r != 1:
        raise TypeError("slice product is defined for first-order complex operators")
    if not (op.margin_lo <= t <= op.margin_hi):
        raise ValueError(f"slice {t} outside admissible window "
                         f"[{op.margin_lo},{op.margin_hi}]")
    return 1j * time_boundary_flux(op, phi, psi, t)


def slice_product_continuum(op: LatticeOperator, phi: Section, psi: Section,
                            t: int) -> complex:
    """Single-slice fiber-symbol formula sum_x <i sigma_P(n^flat) phi, psi> dx,
    evaluated with the pointwise spinor model pairing; the continuum limit of
    `slice_product` (agreement is O(dt) on smooth solutions)."""
    from .symbols import Covector, build_clifford, sigma_dirac
    model = build_clifford(2)
    n_flat = Covector(np.array([-1.0, 0.0]))
    form = model.pairing @ (1j * sigma_dirac(model, n_flat))
    u, v = phi.values[t], psi.values[t]
    return complex(np.einsum("xj,jk,xk->", v.conj(), form, u)) * op.lattice.dx


def transfer_matrix(op: LatticeOperator) -> np.ndarray:
    """One-step map on 2-slice data (psi(t), psi(t+1)) of the free equation."""
    if op.r != 1:
        raise ValueError("transfer map implemented for time radius 1")
    n = op.lattice.n_x * op.k
    lead = op.time_block(1)
    mid = op.time_block(0)
    trail = op.time_block(-1)
    lead_inv = np.linalg.inv(lead)
    t = np.zeros((2 * n, 2 * n), dtype=complex)
    t[:n, n:] = np.eye(n)
    t[n:, :n] = -lead_inv @ trail
    t[n:, n:] = -lead_inv @ mid
    return t


def _data_flux(op: LatticeOperator, x_data: np.ndarray, y_data: np.ndarray) -> complex:
    """Slice product evaluated directly on 2-slice data vectors."""
    from .ops import _pairing_adjoint
    lat = op.lattice
    n_x, k = lat.n_x, op.k
    x0, x1 = x_data[: n_x * k].reshape(n_x, k), x_data[n_x * k:].reshape(n_x, k)
    y0, y1 = y_data[: n_x * k].reshape(n_x, k), y_data[n_x * k:].reshape(n_x, k)
    b = op.pairing.matrix
    total = 0.0 + 0.0j
    for dt_off, dx_off, coeff in op.entries:
        if dt_off != 1:
            continue
        cu = np.einsum("xij,xj->xi", coeff, np.roll(x1, -dx_off, axis=0))
        total += np.einsum("xj,jk,xk->", y0.conj(), b, cu)
        adj = np.stack([_pairing_adjoint(op.pairing, coeff[x]) for x in range(n_x)])
        au = np.einsum("xij,xj->xi", adj, x0)
        total -= np.einsum("xj,jk,xk->", y1.conj(), b, np.roll(au, dx_off, axis=0))
    return 1j * total * lat.dt * lat.dx


class SolutionSpace:
    """A finite-dimensional space of solutions with the slice-product Gram.

    `physical(gp)` builds the continuum-connected branch of the full stepping
    kernel (transfer eigenvalues with positive real part); `from_data` wraps
    an explicit family of Cauchy data.
    """

    def __init__(self, op: LatticeOperator, t_star: int, data_matrix: np.ndarray):
        self.op = op
        self.t_star = t_star
        self.data = data_matrix  # (2 n_x k, n) columns = basis data
        n = data_matrix.shape[1]
        gram = np.zeros((n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                gram[i, j] = _data_flux(op, data_matrix[:, i], data_matrix[:, j])
        self.gram = (gram + gram.conj().T) / 2
        ev = np.linalg.eigvalsh(self.gram)
        self.eigenvalues = ev
        scale = max(abs(ev[0]), abs(ev[-1]), 1e-300)
        self.definite = bool(ev[0] > 1e-10 * scale)

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    @classmethod
    def physical(cls, gp: GreenPair, t_star: int | None = None) -> "SolutionSpace":
        op = gp.op
        if op.kind != COMPLEX or op.r != 1:
            raise TypeError("solution spaces are built for first-order complex operators")
        ts = default_t_star(op) if t_star is None else t_star
        t = transfer_matrix(op)
        tt, z, sdim = sla.schur(t, output="complex", sort=lambda lam: lam.real > 0)
        if sdim == 0:
            raise RuntimeError("empty physical branch; operator not of expected type")
        return cls(op, ts, z[:, :sdim])

    @classmethod
    def from_data(cls, op: LatticeOperator, t_star: int,
                  data_list: list[np.ndarray]) -> "SolutionSpace":
        return cls(op, t_star, np.column_stack(data_list))

    def solution(self, coeffs: np.ndarray) -> Section:
        vec = self.data @ coeffs
        n_x, k, r = self.op.lattice.n_x, self.op.k, self.op.r
        data = CauchyData(self.t_star, vec.reshape(2 * r, n_x, k))
        return solution_from_cauchy(self.op, data)

    def basis_solutions(self) -> list[Section]:
        return [self.solution(np.eye(self.dim)[:, j]) for j in range(self.dim)]

    def orthonormal_basis(self) -> np.ndarray:
        """Coefficient matrix Q with Q^H Gram Q = identity (modified
        Gram-Schmidt with re-orthogonalization; needs a definite Gram)."""
        if not self.definite:
            raise ValueError("orthonormalization needs a positive definite Gram")
        n = self.dim
        q = np.eye(n, dtype=complex)
        for j in range(n):
            for _ in range(2):  # re-orthogonalize once
                for i in range(j):
                    proj = q[:, i].conj() @ self.gram @ q[:, j]
                    q[:, j] = q[:, j] - proj * q[:, i]
            nrm = np.sqrt(np.real(q[:, j].conj() @ self.gram @ q[:, j]))
            if nrm < 1e-12:
                raise RuntimeError("basis numerically degenerate")
            q[:, j] = q[:, j] / nrm
        return q

    def expand_data(self, data_vec: np.ndarray, onb: np.ndarray) -> np.ndarray:
        """Coefficients (v, e_j) of arbitrary 2-slice data against the
        orthonormalized basis (slice product)."""
        cols = self.data @ onb
        return np.array([_data_flux(self.op, data_vec, cols[:, j])
                         for j in range(cols.shape[1])])

    def propagated_coeffs(self, gp: GreenPair, f: Section,
                          onb: np.ndarray) -> np.ndarray:
        """Expansion of the physical part of G f against the orthonormal basis
        (the branch cross terms vanish, so no explicit projection is needed)."""
        gf = gp.propagator(f, check_margin=False)
        data = read_cauchy_data(self.op, gf, self.t_star).vector()
        return self.expand_data(data, onb)

    def project_propagator(self, gp: GreenPair, f: Section,
                           onb: np.ndarray) -> Section:
        """Pi G f: the branch-orthogonal projection of the propagated source
        (no Fock matrices involved)."""
        return self.solution(onb @ self.propagated_coeffs(gp, f, onb))


def definite_type_certificate(op: LatticeOperator) -> "SolutionSpace":
    """Slice-product Gram spectrum on the physical solution branch; definite
    iff all eigenvalues are positive.  Requires a first-order complex operator."""
    gp = GreenPair(op)
    return SolutionSpace.physical(gp)


# -- CAR algebras ---------------------------------------------------------------------


@dataclass
class CarRep:
    """Jordan-Wigner annihilators over an orthonormal solution basis.

    a(v) for v = sum_j c_j e_j is sum_j conj(c_j) a_j (anti-linear); the Fock
    vacuum is annihilated by every a_j.
    """

    n: int
    annihilators: list[np.ndarray]
    grading: np.ndarray
    vacuum: np.ndarray

    @property
    def dim(self) -> int:
        return 2 ** self.n

    def a(self, coeffs: np.ndarray) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for c, mat in zip(coeffs, self.annihilators):
            if c != 0:
                out += np.conj(c) * mat
        return out

    def a_dag(self, coeffs: np.ndarray) -> np.ndarray:
        return self.a(coeffs).conj().T


def build_car(sol: SolutionSpace) -> tuple[CarRep, np.ndarray]:
    """CAR representation over the orthonormalized solution basis; returns the
    representation and the orthonormalizing coefficient matrix."""
    if sol.dim > FOCK_CAP:
        raise ValueError(f"{sol.dim} generators exceed the Fock cap {FOCK_CAP}")
    if not sol.definite:
        raise ValueError("CAR construction needs a positive definite slice Gram")
    onb = sol.orthonormal_basis()
    n = sol.dim
    sz = np.array([[1, 0], [0, -1]], dtype=complex)
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    eye = np.eye(2, dtype=complex)
    ann = []
    for j in range(n):
        mats = [sz] * j + [sm] + [eye] * (n - j - 1)
        m = mats[0]
        for mm in mats[1:]:
            m = np.kron(m, mm)
        ann.append(m)
    grading = np.diag([(-1) ** bin(i).count("1") for i in range(2 ** n)]).astype(complex)
    vacuum = np.zeros(2 ** n, dtype=complex)
    vacuum[0] = 1.0
    return CarRep(n, ann, grading, vacuum), onb


@dataclass
class SelfDualCarRep:
    """Self-dual generators b(v) = (i/sqrt 2)(a(v) - a(v)^*) over the
    realification of the solution space."""

    car: CarRep

    def b(self, real_coeffs: np.ndarray) -> np.ndarray:
        """real_coeffs = (x, y) over the real basis {e_j, i e_j}: the complex
        vector is w = x + i y."""
        n = self.car.n
        w = real_coeffs[:n] + 1j * real_coeffs[n:]
        a = self.car.a(w)
        return (1j / np.sqrt(2)) * (a - a.conj().T)


def build_selfdual_car(car: CarRep) -> SelfDualCarRep:
    return SelfDualCarRep(car)


def operator_norm(m: np.ndarray) -> float:
    return float(np.linalg.norm(m, 2))


def anticommutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b + b @ a


# -- quantum fields --------------------------------------------------------------------


class FermionicFields:
    """Smeared field operators Phi(f) = -a(Pi G f)^* and Phi^+(f) = a(Pi G f)
    on the Fock space of the physical solution branch."""

    def __init__(self, gp: GreenPair, sol: SolutionSpace | None = None):
        self.gp = gp
        self.op = gp.op
        self.sol = sol if sol is not None else SolutionSpace.physical(gp)
        self.car, self.onb = build_car(self.sol)

    def propagated_coeffs(self, f: Section) -> np.ndarray:
        """Expansion of the physical part of G f in the orthonormal basis."""
        return self.sol.propagated_coeffs(self.gp, f, self.onb)

    def physical_propagator(self, f: Section) -> Section:
        """Pi G f, the branch-projected propagator entering the fields."""
        return self.sol.project_propagator(self.gp, f, self.onb)

    def phi(self, f: Section) -> np.ndarray:
        return -self.car.a_dag(self.propagated_coeffs(f))

    def phi_plus(self, f: Section) -> np.ndarray:
        return self.car.a(self.propagated_coeffs(f))

    def pairing_with_source(self, f_sol: Section, g: Section) -> complex:
        """<<u, g>> for a solution u and a source g (enters the
        anti-commutation identity as i <<Pi G f, g>>)."""
        return complex(spacetime_pairing(self.op.lattice, self.op.pairing,
                                         f_sol, g))


def key_identity_check(gp: GreenPair, samples: int = 20, seed: int = 0,
                       project: bool = True) -> dict:
    """The half-identities behind the anti-commutation relations, at the inner
    product level (no Fock matrices):

        (u, G_+ g)_t = -i sum_{s<=t} <<u, g>>-rows
        (u, G_- g)_t = +i sum_{s>t}  <<u, g>>-rows

    with u = Pi G f (physical branch) or u = G f (project=False; the identity
    is branch-blind because it only uses P u = 0).
    """
    from .ops import random_margin_section
    op = gp.op
    lat = op.lattice
    rng = np.random.default_rng(seed)
    if project:
        sol = SolutionSpace.physical(gp)
        onb = sol.orthonormal_basis()
    t = default_t_star(op)
    rep = {"minus": 0.0, "plus": 0.0, "sum": 0.0}
    b = op.pairing.matrix
    for _ in range(samples):
        f = random_margin_section(op, rng)
        g = random_margin_section(op, rng)
        u = sol.project_propagator(gp, f, onb) if project else gp.propagator(f)
        gp_g = gp.retarded(g)
        gm_g = gp.advanced(g)
        # rows_s = sum_x <u(s,x), g(s,x)> dV  (pairing linear in u)
        rows = np.einsum("txj,jk,txk->t", g.values.conj(), b, u.values) * lat.dV
        lhs_m = slice_product(op, u, gp_g, t)
        rhs_m = -1j * np.sum(rows[: t + 1])
        lhs_p = slice_product(op, u, gm_g, t)
        rhs_p = 1j * np.sum(rows[t + 1:])
        scale = max(abs(rhs_m), abs(rhs_p), 1e-30)
        rep["minus"] = max(rep["minus"], abs(lhs_m - rhs_m) / scale)
        rep["plus"] = max(rep["plus"], abs(lhs_p - rhs_p) / scale)
        full = slice_product(op, u, gp_g - gm_g, t)
        rep["sum"] = max(rep["sum"], abs(full - (-1j * np.sum(rows))) / scale)
    return rep


def ferm_npoint(fields: FermionicFields, fs: list[Section],
                gs: list[Section]) -> complex:
    """<Omega, Phi(f_1)...Phi(f_n) Phi^+(g_1)...Phi^+(g_m) Omega>."""
    mat = np.eye(fields.car.dim, dtype=complex)
    for f in fs:
        mat = mat @ fields.phi(f)
    for g in gs:
        mat = mat @ fields.phi_plus(g)
    om = fields.car.vacuum
    return complex(om.conj() @ mat @ om)


def car_functor_check(fields_sub: FermionicFields, fields_amb: FermionicFields,
                      extend, rng: np.random.Generator, samples: int = 6) -> dict:
    """Isometry of the solution-space embedding (slice Gram preserved) and
    agreement of normalized traces of corresponding CAR monomials (the unique
    trace is an isomorphism fingerprint for the simple Clifford algebra)."""
    sub, amb = fields_sub.sol, fields_amb.sol
    n = sub.dim
    # embed basis solutions: extend as solutions, re-expand in ambient data
    emb_cols = []
    onb_sub = fields_sub.onb
    for j in range(n):
        u = sub.solution(onb_sub[:, j])
        u_amb = extend(u)
        data = read_cauchy_data(amb.op, u_amb, amb.t_star).vector()
        emb_cols.append(amb.expand_data(data, fields_amb.onb))
    emb = np.column_stack(emb_cols)
    gram_defect = float(np.abs(emb.conj().T @ emb - np.eye(n)).max())

    def monomial(car, coeff_cols, word):
        m = np.eye(car.dim, dtype=complex)
        for (j, dag) in word:
            mat = car.a(coeff_cols[:, j]) if not dag else car.a_dag(coeff_cols[:, j])
            m = m @ mat
        return m

    eye_sub = np.eye(n, dtype=complex)
    trace_defect = 0.0
    for _ in range(samples):
        length = int(rng.integers(1, 5))
        word = [(int(rng.integers(0, n)), bool(rng.integers(0, 2)))
                for _ in range(length)]
        m_sub = monomial(fields_sub.car, eye_sub, word)
        m_amb = monomial(fields_amb.car, emb, word)
        tr_sub = np.trace(m_sub) / fields_sub.car.dim
        tr_amb = np.trace(m_amb) / fields_amb.car.dim
        trace_defect = max(trace_defect, abs(tr_sub - tr_amb))
    return {"isometry": gram_defect, "trace": trace_defect}
