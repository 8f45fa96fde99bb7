"""Pointwise principal-symbol algebra for Lorentzian fibers of dimension
m <= 6: gamma matrices, wave/Dirac/Euler/Rarita-Schwinger symbols,
characteristic-variety classification and definite-type tests.

Conventions: signature (-,+,...,+) with the timelike direction first;
Clifford multiplication obeys  v.w + w.v = -2 <v,w> 1, so the timelike
gamma squares to +1 and spacelike gammas square to -1.  The spinor pairing
shipped with each model is beta = -gamma_1, which makes the Dirac operator
formally self-adjoint and its definite-type form positive for
future-directed timelike covectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

_S1 = np.array([[0, 1], [1, 0]], dtype=complex)
_S2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
_S3 = np.array([[1, 0], [0, -1]], dtype=complex)

LIGHTLIKE_RTOL = 1e-12
SING_RTOL = 1e-8


def _euclidean_gammas(m: int) -> list[np.ndarray]:
    """Hermitian anticommuting matrices with g_j^2 = +1, size 2^floor(m/2)."""
    if m <= 3:
        return [_S1, _S2, _S3][:m]
    base = _euclidean_gammas(m - 2 if m % 2 == 0 else m - 2)
    # grow by tensoring: need ceil to sizes; rebuild from the odd anchor
    gs = [_S1, _S2, _S3]
    while len(gs) < m:
        d = gs[0].shape[0]
        eye = np.eye(d, dtype=complex)
        gs = [np.kron(_S1, g) for g in gs] + [np.kron(_S2, eye), np.kron(_S3, eye)]
    return gs[:m]


@dataclass(frozen=True)
class CliffordModel:
    """Gamma matrices e_j. for signature (-,+,...,+) and the spinor pairing."""

    m: int
    gammas: tuple
    eps: tuple
    pairing: np.ndarray

    @property
    def dim(self) -> int:
        return self.gammas[0].shape[0]

    def clifford(self, vec: np.ndarray) -> np.ndarray:
        """Clifford action of the tangent vector with components vec."""
        out = np.zeros_like(self.gammas[0])
        for j in range(self.m):
            out = out + vec[j] * self.gammas[j]
        return out

    def sharp(self, xi: np.ndarray) -> np.ndarray:
        """Index raising: (xi^sharp)^j = eps_j xi_j."""
        return np.array([self.eps[j] * xi[j] for j in range(self.m)])

    def fiber_form(self, a: np.ndarray) -> np.ndarray:
        """Matrix F of the sesquilinear form (phi, psi) -> <A phi, psi>,
        i.e. psi^dag F phi with F = pairing @ A."""
        return self.pairing @ a


def build_clifford(m: int) -> CliffordModel:
    """Gamma matrices with e_1.e_1 = +1 (timelike, eps_1 = -1) and
    e_j.e_j = -1 for j >= 2; relations exact."""
    if not (2 <= m <= 6):
        raise ValueError(f"fiber dimension m must be in [2, 6], got {m}")
    eu = _euclidean_gammas(m)
    gammas = [eu[0]] + [1j * g for g in eu[1:]]
    eps = tuple([-1.0] + [1.0] * (m - 1))
    pairing = -gammas[0]
    model = CliffordModel(m, tuple(gammas), eps, pairing)
    _check_relations(model)
    return model


def _check_relations(model: CliffordModel) -> None:
    d = model.dim
    for i in range(model.m):
        for j in range(model.m):
            anti = model.gammas[i] @ model.gammas[j] + model.gammas[j] @ model.gammas[i]
            want = -2.0 * (model.eps[i] if i == j else 0.0) * np.eye(d)
            if np.abs(anti - want).max() > 1e-14:
                raise RuntimeError(f"Clifford relation failed at ({i},{j})")


@dataclass(frozen=True)
class Covector:
    """Covector with cached Lorentzian square and causal classification."""

    components: np.ndarray

    @property
    def square(self) -> float:
        xi = self.components
        return float(-xi[0] ** 2 + np.sum(xi[1:] ** 2))

    @property
    def norm2(self) -> float:
        return float(np.sum(self.components ** 2))

    @property
    def classification(self) -> str:
        q = self.square
        if abs(q) <= LIGHTLIKE_RTOL * max(self.norm2, 1e-300):
            return "lightlike"
        return "timelike" if q < 0 else "spacelike"


def covector(*components) -> Covector:
    return Covector(np.asarray(components, dtype=float))


def sigma_wave(xi: Covector, k: int) -> np.ndarray:
    """Wave-operator symbol -<xi,xi> id_k."""
    return -xi.square * np.eye(k)


def sigma_dirac(model: CliffordModel, xi: Covector) -> np.ndarray:
    """Dirac symbol i xi^sharp. ; squares to <xi,xi> id."""
    return 1j * model.clifford(model.sharp(xi.components))


# -- exterior-algebra fiber (Euler operator) -------------------------------------


def _form_basis(m: int) -> list[tuple]:
    idx = []
    for deg in range(m + 1):
        idx.extend(combinations(range(m), deg))
    return idx


def _wedge_matrix(m: int, j: int, basis, pos) -> np.ndarray:
    n = len(basis)
    w = np.zeros((n, n))
    for col, subset in enumerate(basis):
        if j in subset:
            continue
        new = tuple(sorted(subset + (j,)))
        sign = (-1) ** sum(1 for a in subset if a < j)
        w[pos[new], col] = sign
    return w


def euler_fiber_pairing(m: int) -> np.ndarray:
    """Induced Lorentzian pairing on the exterior algebra fiber:
    <e^I, e^I> = prod_{j in I} eps_j."""
    eps = [-1.0] + [1.0] * (m - 1)
    basis = _form_basis(m)
    diag = [np.prod([eps[j] for j in subset]) if subset else 1.0 for subset in basis]
    return np.diag(diag).astype(complex)


def sigma_euler(m: int, xi: Covector) -> np.ndarray:
    """Symbol of i(d - delta) on the full form fiber: i (xi ^ . - xi^sharp _| .)."""
    if not (2 <= m <= 6):
        raise ValueError("m must be in [2, 6]")
    basis = _form_basis(m)
    pos = {s: i for i, s in enumerate(basis)}
    eps = [-1.0] + [1.0] * (m - 1)
    wedge = np.zeros((len(basis), len(basis)))
    for j in range(m):
        wedge += xi.components[j] * _wedge_matrix(m, j, basis, pos)
    # contraction by xi^sharp is the pairing-adjoint of the wedge:
    # iota_X = sum_j X^j iota_{e_j}, with iota_{e_j} = wedge_j^T (Euclidean)
    contr = np.zeros((len(basis), len(basis)))
    for j in range(m):
        contr += eps[j] * xi.components[j] * _wedge_matrix(m, j, basis, pos).T
    return 1j * (wedge - contr)


def form_covector_vector(m: int, xi: Covector) -> np.ndarray:
    """xi as an element of the degree-1 part of the form fiber."""
    basis = _form_basis(m)
    v = np.zeros(len(basis), dtype=complex)
    for j in range(m):
        v[basis.index((j,))] = xi.components[j]
    return v


# -- Rarita-Schwinger --------------------------------------------------------------


@dataclass(frozen=True)
class RSModel:
    """Spin-3/2 sector: T* tensor Sigma with the Clifford-contraction kernel."""

    clifford: CliffordModel
    kernel_basis: np.ndarray     # (m*d, n32) orthonormal columns spanning ker gamma
    pairing32: np.ndarray        # induced sesquilinear pairing on ker gamma

    @property
    def m(self) -> int:
        return self.clifford.m

    @property
    def dim32(self) -> int:
        return self.kernel_basis.shape[1]


def build_rs(m: int) -> RSModel:
    """Kernel of gamma(theta tensor psi) = theta^sharp . psi, via SVD."""
    if m < 3:
        raise ValueError("Rarita-Schwinger sector needs fiber dimension m >= 3")
    model = build_clifford(m)
    d = model.dim
    gam = np.zeros((d, m * d), dtype=complex)
    for b in range(m):
        gam[:, b * d:(b + 1) * d] = model.eps[b] * model.gammas[b]
    u, s, vh = np.linalg.svd(gam)
    rank = int(np.sum(s > SING_RTOL * s[0]))
    kernel = vh[rank:].conj().T
    expect = (m - 1) * d
    if kernel.shape[1] != expect:
        raise RuntimeError(f"dim ker gamma = {kernel.shape[1]}, expected {expect}")
    # pairing on T* tensor Sigma: <theta tensor phi, theta' tensor phi'> =
    # <theta,theta'>_cometric <phi,phi'>_spinor
    cometric = np.diag(model.eps).astype(complex)
    big = np.kron(cometric, model.pairing)
    pairing32 = kernel.conj().T @ big @ kernel
    return RSModel(model, kernel, pairing32)


def _rs_symbol_full(rs: RSModel, xi: Covector) -> np.ndarray:
    """The displayed symbol on the full T* tensor Sigma fiber."""
    model = rs.clifford
    m, d = rs.m, model.dim
    sharp = model.sharp(xi.components)
    xs = model.clifford(sharp)
    out = np.kron(np.eye(m), xs).astype(complex)
    # -(2/m) sum_b e_b^* tensor e_b . (xi^sharp _| psi); (xi^sharp _| psi) =
    # sum_a e_a^*(xi^sharp) psi_a = sum_a eps_a xi_a psi_a... e_a^*(X) = X^a
    insert = np.zeros((d, m * d), dtype=complex)
    for a in range(m):
        insert[:, a * d:(a + 1) * d] = sharp[a] * np.eye(d)
    lower = np.zeros((m * d, d), dtype=complex)
    for b in range(m):
        lower[b * d:(b + 1) * d, :] = model.gammas[b]
    out = out - (2.0 / m) * (lower @ insert)
    return 1j * out


def sigma_rs(rs: RSModel, xi: Covector) -> np.ndarray:
    """Rarita-Schwinger symbol compressed to the spin-3/2 sector."""
    full = _rs_symbol_full(rs, xi)
    kb = rs.kernel_basis
    return kb.conj().T @ full @ kb


def rs_lightlike_null_vector(rs: RSModel) -> tuple[Covector, np.ndarray]:
    """The explicit kernel element of sigma_Q at the lightlike covector
    xi = e_1^flat + e_2^flat:  psi = e_1^* tensor psi_1 - e_2^* tensor psi_1
    with (e_1 + e_2).psi_1 = 0."""
    model = rs.clifford
    m, d = rs.m, model.dim
    xi = Covector(np.array([-1.0, 1.0] + [0.0] * (m - 2)))
    nilp = model.gammas[0] + model.gammas[1]
    u, s, vh = np.linalg.svd(nilp)
    psi1 = vh[-1].conj()
    if np.abs(nilp @ psi1).max() > 1e-12:
        raise RuntimeError("no null spinor for the lightlike Clifford action")
    psi = np.zeros(m * d, dtype=complex)
    psi[0:d] = psi1
    psi[d:2 * d] = -psi1
    return xi, psi


def rs_nondefinite_witness(rs: RSModel) -> tuple[Covector, np.ndarray]:
    """Witness with vanishing definite-type form at xi = e_1^flat:
    psi_2 = -e_2 . e_1 . psi_1, other components zero."""
    model = rs.clifford
    m, d = rs.m, model.dim
    xi = Covector(np.array([-1.0] + [0.0] * (m - 1)))
    psi1 = np.zeros(d, dtype=complex)
    psi1[0] = 1.0
    psi2 = -model.gammas[1] @ (model.gammas[0] @ psi1)
    psi = np.zeros(m * d, dtype=complex)
    psi[0:d] = psi1
    psi[d:2 * d] = psi2
    return xi, psi


def project_to_kernel(rs: RSModel, psi: np.ndarray) -> np.ndarray:
    return rs.kernel_basis.conj().T @ psi


def min_singular_value(mat: np.ndarray) -> tuple[float, float]:
    s = np.linalg.svd(mat, compute_uv=False)
    return (float(s[-1]), float(s[0])) if s.size else (0.0, 0.0)


def is_invertible(mat: np.ndarray) -> bool:
    smin, smax = min_singular_value(mat)
    return smax > 0 and smin > SING_RTOL * smax


@dataclass
class DefiniteTypeReport:
    definite: bool
    sign: int                 # +1 / -1 for definite forms, 0 otherwise
    min_abs_eigenvalue: float
    witness: np.ndarray | None


def definite_type_test(symbol_fn, pairing: np.ndarray, m: int,
                       trials: int = 20, seed: int = 0,
                       candidate_witnesses=None) -> DefiniteTypeReport:
    """Test whether (phi,psi) -> <i sigma(n^flat) phi, psi> is a positive
    definite Hermitian scalar product for sampled future-directed timelike n.

    Failing Hermiticity counts as failing definite type.  If candidate
    witness vectors are supplied, the first with vanishing form value is
    reported; otherwise the eigenvector closest to the null/negative
    violation is returned.
    """
    rng = np.random.default_rng(seed)
    worst_min = np.inf

    def fail(n_flat, form):
        scale = max(np.abs(form).max(), 1e-30)
        for cand in candidate_witnesses or []:
            val = abs(np.conj(cand) @ form @ cand)
            if val <= 1e-12 * scale * (cand.conj() @ cand).real:
                return DefiniteTypeReport(False, 0, float(val), cand)
        herm = (form + form.conj().T) / 2
        w, v = np.linalg.eigh(herm)
        j = int(np.argmin(np.abs(w)))
        return DefiniteTypeReport(False, 0, float(np.abs(w).min()), v[:, j])

    for trial in range(trials):
        sp = rng.normal(size=m - 1) if trial else np.zeros(m - 1)
        n_vec = np.concatenate([[np.sqrt(1.0 + sp @ sp) * (1 + rng.random())], sp])
        n_flat = np.concatenate([[-n_vec[0]], n_vec[1:]])
        sig = symbol_fn(Covector(n_flat))
        form = pairing @ (1j * sig)
        herm_defect = np.abs(form - form.conj().T).max()
        if herm_defect > 1e-10 * max(np.abs(form).max(), 1e-30):
            return fail(n_flat, form)
        w, v = np.linalg.eigh((form + form.conj().T) / 2)
        scale = max(abs(w[0]), abs(w[-1]), 1e-300)
        if w[0] <= 1e-10 * scale:
            return fail(n_flat, form)
        worst_min = min(worst_min, float(w[0]))
    return DefiniteTypeReport(True, +1, worst_min, None)
