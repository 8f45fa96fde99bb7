"""Sparse stencil operators on lattice sections.

A LatticeOperator is a finite stencil { (dt_off, dx_off, A) } with k x k
coefficient matrices (optionally varying over the spatial site of the
equation row).  Equation rows are the interior slices t in [r, n_t-1-r];
applying the operator outside that range yields zero rows, while the
"padded" application evaluates the stencil on every row with out-of-range
time reads treated as zero.  The padded form is what enters all boundary
(flux) identities.

Shipped constructors: the scalar/vector d'Alembert operator with mass and
symmetric potential, the massive 1-form operator built from the discrete
exterior calculus, the centered 1+1 Dirac operator on a C^2 spinor fiber,
and direct sums.  Each construction certifies time-steppability (leading
and trailing time blocks invertible) and formal self-adjointness with
respect to its fiber pairing.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .lattice import LatticeSpacetime, Point, spacetime_pairing

REAL = "real"
COMPLEX = "complex"

# constant 2x2 spinor data for the 1+1 Dirac operator:
#   gamma_t^2 = +1, gamma_x^2 = -1, anticommuting; pairing beta = gamma_t
# makes the operator formally self-adjoint and the conserved slice form
# positive definite on the physical solution branch.
GAMMA_T = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
GAMMA_X = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)
SPINOR_PAIRING = GAMMA_T.copy()


@dataclass(frozen=True)
class FiberPairing:
    """Non-degenerate constant fiber inner product <u,v> = conj(v)^T B u
    (sesquilinear) or v^T B u (bilinear)."""

    matrix: np.ndarray
    sesquilinear: bool
    definite: bool

    def __post_init__(self):
        b = np.asarray(self.matrix)
        object.__setattr__(self, "matrix", b)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError("pairing matrix must be square")
        herm = b.conj().T if self.sesquilinear else b.T
        if not np.allclose(b, herm, atol=1e-14):
            raise ValueError("pairing matrix must be (conjugate-)symmetric")
        if b.shape[0] and abs(np.linalg.det(b)) < 1e-12:
            raise ValueError("pairing matrix must be non-degenerate")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def fiber(self, u: np.ndarray, v: np.ndarray) -> complex | float:
        if self.sesquilinear:
            return complex(v.conj() @ self.matrix @ u)
        return float(v @ self.matrix @ u)

    @staticmethod
    def identity(k: int, sesquilinear: bool = False) -> "FiberPairing":
        return FiberPairing(np.eye(k), sesquilinear, definite=True)


def _pairing_adjoint(pairing: FiberPairing, a: np.ndarray) -> np.ndarray:
    """Matrix X with <A u, v> = <u, X v> for the given fiber pairing."""
    b = pairing.matrix
    binv = np.linalg.inv(b)
    if pairing.sesquilinear:
        return binv @ a.conj().T @ b
    return binv @ a.T @ b


@dataclass
class Section:
    """Field configuration over the lattice; values indexed (t, x, component)."""

    lattice: LatticeSpacetime
    values: np.ndarray
    kind: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex if self.kind == COMPLEX else float)
        if v.ndim == 2:
            v = v[:, :, None]
        if v.shape[:2] != (self.lattice.n_t, self.lattice.n_x):
            raise ValueError(f"values shape {v.shape} does not match lattice")
        v.flags.writeable = False
        self.values = v

    @property
    def fiber_dim(self) -> int:
        return self.values.shape[2]

    def support(self) -> set[Point]:
        """Exact set of points with a nonzero component."""
        tt, xx = np.nonzero(np.any(self.values != 0, axis=2))
        return set(zip(tt.tolist(), xx.tolist()))

    def support_slices(self) -> tuple[int, int]:
        """(min, max) time indices of the support; (-1, -1) for the zero section."""
        rows = np.nonzero(np.any(self.values != 0, axis=(1, 2)))[0]
        if len(rows) == 0:
            return (-1, -1)
        return (int(rows[0]), int(rows[-1]))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.lattice.dV))

    def __add__(self, other: "Section") -> "Section":
        return Section(self.lattice, self.values + other.values, self.kind)

    def __sub__(self, other: "Section") -> "Section":
        return Section(self.lattice, self.values - other.values, self.kind)

    def __mul__(self, c) -> "Section":
        kind = COMPLEX if (self.kind == COMPLEX or isinstance(c, complex)) else self.kind
        return Section(self.lattice, self.values * c, kind)

    __rmul__ = __mul__

    @staticmethod
    def zero(lat: LatticeSpacetime, k: int, kind: str) -> "Section":
        dtype = complex if kind == COMPLEX else float
        return Section(lat, np.zeros((lat.n_t, lat.n_x, k), dtype=dtype), kind)


def _coeff_array(lat: LatticeSpacetime, k: int, a, kind: str) -> np.ndarray:
    """Normalize a stencil coefficient to shape (n_x, k, k)."""
    dtype = complex if kind == COMPLEX else float
    a = np.asarray(a, dtype=dtype)
    if a.ndim == 2:
        a = np.broadcast_to(a, (lat.n_x, k, k)).copy()
    if a.shape != (lat.n_x, k, k):
        raise ValueError(f"coefficient shape {a.shape}, expected ({lat.n_x},{k},{k})")
    return a


class LatticeOperator:
    """Stencil operator with fiber pairing and steppability data.

    entries: list of (dt_off, dx_off, coeff) with coeff of shape (n_x, k, k),
    indexed by the spatial site of the equation row:

        (P phi)(t, x) = sum_e coeff_e[x] @ phi(t + dt_e, (x + dx_e) mod n_x).
    """

    def __init__(self, lattice: LatticeSpacetime, k: int, kind: str,
                 entries, pairing: FiberPairing, name: str = "custom",
                 component_offsets=None):
        self.lattice = lattice
        self.k = k
        self.kind = kind
        self.name = name
        self.pairing = pairing
        # vertex offsets touched by each fiber component (edge bundles span
        # two vertices); default: pointwise components
        self.component_offsets = component_offsets or [[(0, 0)]] * k
        self.entries = [(int(dt), int(dx), _coeff_array(lattice, k, a, kind))
                        for (dt, dx, a) in entries]
        self.r = max((abs(dt) for dt, _, _ in self.entries), default=0)
        if k > 0 and self.r < 1:
            raise ValueError("operator must couple at least adjacent slices")
        self._lead_cache: dict[int, np.ndarray] = {}
        self.steppable = self._certify_steppable()
        self.self_adjoint = self._certify_self_adjoint()

    # -- row ranges ---------------------------------------------------------

    @property
    def row_lo(self) -> int:
        return self.r

    @property
    def row_hi(self) -> int:
        return self.lattice.n_t - 1 - self.r

    @property
    def margin_lo(self) -> int:
        return 2 * self.r

    @property
    def margin_hi(self) -> int:
        return self.lattice.n_t - 1 - 2 * self.r

    # -- application --------------------------------------------------------

    def _apply_values(self, v: np.ndarray, padded: bool) -> np.ndarray:
        n_t = self.lattice.n_t
        out = np.zeros_like(v)
        for dt_off, dx_off, coeff in self.entries:
            shifted = np.roll(v, -dx_off, axis=1)
            if dt_off >= 0:
                src = shifted[dt_off:]
                contrib = np.einsum("xij,txj->txi", coeff, src)
                out[: n_t - dt_off] += contrib
            else:
                src = shifted[: n_t + dt_off]
                contrib = np.einsum("xij,txj->txi", coeff, src)
                out[-dt_off:] += contrib
        if not padded:
            out[: self.row_lo] = 0
            out[self.row_hi + 1:] = 0
        return out

    def apply(self, phi: Section) -> Section:
        """Stencil application on equation rows; rows outside the range are zero."""
        self._check_section(phi)
        return Section(self.lattice, self._apply_values(phi.values, padded=False), self.kind)

    def apply_padded(self, phi: Section) -> Section:
        """Stencil application on every row, with zero-padded time reads."""
        self._check_section(phi)
        return Section(self.lattice, self._apply_values(phi.values, padded=True), self.kind)

    def _check_section(self, phi: Section) -> None:
        if phi.lattice is not self.lattice and phi.lattice != self.lattice:
            raise ValueError("section lives on a different lattice")
        if phi.fiber_dim != self.k:
            raise ValueError(f"fiber dim {phi.fiber_dim} != operator k={self.k}")
        if self.kind == REAL and phi.kind == COMPLEX:
            raise ValueError("complex section fed to a real operator")

    # -- slice blocks and certificates ---------------------------------------

    def time_block(self, dt_off: int) -> np.ndarray:
        """Dense (n_x k) x (n_x k) block of all entries at the given time offset."""
        if dt_off in self._lead_cache:
            return self._lead_cache[dt_off]
        n_x, k = self.lattice.n_x, self.k
        dtype = complex if self.kind == COMPLEX else float
        m = np.zeros((n_x * k, n_x * k), dtype=dtype)
        for dt, dx, coeff in self.entries:
            if dt != dt_off:
                continue
            for x in range(n_x):
                y = (x + dx) % n_x
                m[x * k:(x + 1) * k, y * k:(y + 1) * k] += coeff[x]
        self._lead_cache[dt_off] = m
        return m

    def _certify_steppable(self) -> dict:
        if self.k == 0:
            return {"ok": True, "cond_lead": 1.0, "cond_trail": 1.0}
        lead = self.time_block(self.r)
        trail = self.time_block(-self.r)
        out = {}
        for label, block in (("lead", lead), ("trail", trail)):
            try:
                c = float(np.linalg.cond(block))
            except np.linalg.LinAlgError:
                c = np.inf
            out[f"cond_{label}"] = c
        out["ok"] = out["cond_lead"] < 1e12 and out["cond_trail"] < 1e12
        return out

    def _certify_self_adjoint(self, samples: int = 10, seed: int = 7) -> bool:
        if self.k == 0:
            return True
        return self.adjointness_defect(samples, seed) <= 1e-12

    def adjointness_defect(self, samples: int = 100, seed: int = 0) -> float:
        """Max |<<P phi, psi>> - <<phi, P psi>>| over random margin-supported pairs,
        normalized by ||phi|| ||psi||."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(samples):
            phi = random_margin_section(self, rng)
            psi = random_margin_section(self, rng)
            a = spacetime_pairing(self.lattice, self.pairing, self.apply_padded(phi), psi)
            b = spacetime_pairing(self.lattice, self.pairing, phi, self.apply_padded(psi))
            worst = max(worst, abs(a - b) / (phi.norm() * psi.norm()))
        return worst

    # -- assembly and composition --------------------------------------------

    def matrix(self, padded: bool = False) -> sp.csr_matrix:
        """Sparse matrix over flattened (t, x, c) indices."""
        n_t, n_x, k = self.lattice.n_t, self.lattice.n_x, self.k
        n = n_t * n_x * k
        rows, cols, vals = [], [], []
        t_lo = 0 if padded else self.row_lo
        t_hi = n_t - 1 if padded else self.row_hi
        for dt, dx, coeff in self.entries:
            for t in range(max(t_lo, -dt), min(t_hi, n_t - 1 - dt) + 1):
                for x in range(n_x):
                    y = (x + dx) % n_x
                    base_r = (t * n_x + x) * k
                    base_c = ((t + dt) * n_x + y) * k
                    for i in range(k):
                        for j in range(k):
                            v = coeff[x, i, j]
                            if v != 0:
                                rows.append(base_r + i)
                                cols.append(base_c + j)
                                vals.append(v)
        dtype = complex if self.kind == COMPLEX else float
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=dtype)

    def compose(self, other: "LatticeOperator", name: str = "composite") -> "LatticeOperator":
        """Stencil of self applied after other (self o other), same pairing."""
        if self.k != other.k or self.kind != other.kind:
            raise ValueError("composition needs matching fiber and scalar kind")
        n_x, k = self.lattice.n_x, self.k
        acc: dict[tuple[int, int], np.ndarray] = {}
        for dt_a, dx_a, ca in self.entries:
            for dt_b, dx_b, cb in other.entries:
                key = (dt_a + dt_b, dx_a + dx_b)
                rolled = np.roll(cb, -dx_a, axis=0)  # cb evaluated at x + dx_a
                prod = np.einsum("xij,xjk->xik", ca, rolled)
                if key in acc:
                    acc[key] = acc[key] + prod
                else:
                    acc[key] = prod
        entries = [(dt, dx, c) for (dt, dx), c in acc.items() if np.any(c != 0)]
        return LatticeOperator(self.lattice, k, self.kind, entries, self.pairing, name)

    def scaled(self, c, name: str | None = None) -> "LatticeOperator":
        entries = [(dt, dx, c * a) for dt, dx, a in self.entries]
        return LatticeOperator(self.lattice, self.k, self.kind, entries,
                               self.pairing, name or self.name)

    def time_reflected(self) -> "LatticeOperator":
        entries = [(-dt, dx, a) for dt, dx, a in self.entries]
        return LatticeOperator(self.lattice, self.k, self.kind, entries,
                               self.pairing, self.name + "_treflect")


# -- shipped operators ---------------------------------------------------------


def build_dalembert(lat: LatticeSpacetime, m0: float = 0.0, potential=None,
                    kind: str = REAL, k: int = 1) -> LatticeOperator:
    """Second-order wave operator  d_t^2 - d_x^2 + m0^2 + B(x)  on k components.

    `potential` is an optional symmetric (Hermitian) k x k matrix, constant or
    per-site with shape (n_x, k, k).
    """
    if m0 < 0:
        raise ValueError("mass must be >= 0")
    if lat.dt / lat.dx > 1 + 1e-12:
        warnings.warn(
            f"CFL ratio dt/dx = {lat.dt / lat.dx:.3f} > 1: solves remain exact, "
            "but continuum-limit checks need dt/dx <= 1", UserWarning)
    eye = np.eye(k)
    c_t = 1.0 / lat.dt ** 2
    c_x = 1.0 / lat.dx ** 2
    diag = (-2.0 * c_t + 2.0 * c_x + m0 ** 2) * eye
    diag = _coeff_array(lat, k, diag, kind)
    if potential is not None:
        b = _coeff_array(lat, k, potential, kind)
        herm = np.swapaxes(b, 1, 2).conj() if kind == COMPLEX else np.swapaxes(b, 1, 2)
        if not np.allclose(b, herm, atol=1e-13):
            raise ValueError("potential must be symmetric (Hermitian)")
        diag = diag + b
    entries = [
        (1, 0, c_t * eye),
        (-1, 0, c_t * eye),
        (0, 1, -c_x * eye),
        (0, -1, -c_x * eye),
        (0, 0, diag),
    ]
    pairing = FiberPairing(np.eye(k), sesquilinear=(kind == COMPLEX), definite=True)
    return LatticeOperator(lat, k, kind, entries, pairing, name=f"wave(m={m0})")


@dataclass
class DiscreteFormsComplex:
    """Cochain calculus on the lattice: 0-forms (k=1), 1-forms (k=2 with
    components (a_t, a_x) on the edges leaving each vertex), 2-forms (k=1 on
    plaquettes).  d is the forward-difference coboundary; delta its adjoint
    with respect to the Lorentzian fiber pairings <dt,dt> = -1, <dx,dx> = +1,
    <dt^dx, dt^dx> = -1.  d o d = 0 and delta o delta = 0 hold exactly.
    """

    lattice: LatticeSpacetime

    @property
    def pairing0(self) -> FiberPairing:
        return FiberPairing(np.eye(1), False, definite=True)

    @property
    def pairing1(self) -> FiberPairing:
        return FiberPairing(np.diag([-1.0, 1.0]), False, definite=False)

    @property
    def pairing2(self) -> FiberPairing:
        return FiberPairing(np.array([[-1.0]]), False, definite=False)

    def _sh_t(self, v: np.ndarray, k: int) -> np.ndarray:
        n_t = self.lattice.n_t
        out = np.zeros_like(v)
        if k >= 0:
            out[: n_t - k] = v[k:]
        else:
            out[-k:] = v[: n_t + k]
        return out

    def d0(self, f: np.ndarray) -> np.ndarray:
        """0-form (n_t, n_x, 1) -> 1-form (n_t, n_x, 2)."""
        lat = self.lattice
        g = f[..., 0]
        out = np.zeros((lat.n_t, lat.n_x, 2))
        out[..., 0] = (self._sh_t(g, 1) - g) / lat.dt
        out[..., 1] = (np.roll(g, -1, axis=1) - g) / lat.dx
        return out

    def d1(self, a: np.ndarray) -> np.ndarray:
        """1-form -> 2-form: the dt^dx component of the curl."""
        lat = self.lattice
        at, ax = a[..., 0], a[..., 1]
        out = (self._sh_t(ax, 1) - ax) / lat.dt - (np.roll(at, -1, axis=1) - at) / lat.dx
        return out[..., None]

    def delta1(self, a: np.ndarray) -> np.ndarray:
        """1-form -> 0-form (codifferential)."""
        lat = self.lattice
        at, ax = a[..., 0], a[..., 1]
        out = (at - self._sh_t(at, -1)) / lat.dt - (ax - np.roll(ax, 1, axis=1)) / lat.dx
        return out[..., None]

    def delta2(self, b: np.ndarray) -> np.ndarray:
        """2-form -> 1-form (codifferential)."""
        lat = self.lattice
        g = b[..., 0]
        out = np.zeros((lat.n_t, lat.n_x, 2))
        out[..., 0] = (g - np.roll(g, 1, axis=1)) / lat.dx
        out[..., 1] = (g - self._sh_t(g, -1)) / lat.dt
        return out

    # sparse matrices over flattened (t, x, c) indices, zero-padded in time

    def _mat(self, fn, k_in: int, k_out: int) -> sp.csr_matrix:
        lat = self.lattice
        n_in = lat.n_t * lat.n_x * k_in
        cols = []
        for j in range(n_in):
            e = np.zeros(n_in)
            e[j] = 1.0
            cols.append(fn(e.reshape(lat.n_t, lat.n_x, k_in)).ravel())
        return sp.csr_matrix(np.array(cols).T)

    def matrices(self) -> dict[str, sp.csr_matrix]:
        return {
            "d0": self._mat(self.d0, 1, 2),
            "d1": self._mat(self.d1, 2, 1),
            "delta1": self._mat(self.delta1, 2, 1),
            "delta2": self._mat(self.delta2, 1, 2),
        }


def build_proca(lat: LatticeSpacetime, m0: float):
    """Massive 1-form operator P = delta d + m0^2 together with the
    time-steppable companion  Pt = d delta + delta d + m0^2  and the cochain
    calculus they are assembled from.

    Pt reduces exactly to the componentwise wave stencil, and d0 delta1
    commutes with Pt at the matrix level (exactly, for dyadic spacings).
    """
    if m0 <= 0:
        raise ValueError("Proca operator needs m0 > 0")
    forms = DiscreteFormsComplex(lat)

    def sec(vals):
        return vals

    p_entries = _entries_from_action(lat, 2,
                                     lambda a: forms.delta2(forms.d1(a)) + m0 ** 2 * a)
    pt_entries = _entries_from_action(lat, 2,
                                      lambda a: forms.d0(forms.delta1(a))
                                      + forms.delta2(forms.d1(a)) + m0 ** 2 * a)
    EDGE_OFFSETS = [[(0, 0), (1, 0)], [(0, 0), (0, 1)]]  # t-edge, x-edge
    p = LatticeOperator(lat, 2, REAL, p_entries, forms.pairing1,
                        name=f"proca(m={m0})", component_offsets=EDGE_OFFSETS)
    pt = LatticeOperator(lat, 2, REAL, pt_entries, forms.pairing1,
                         name=f"proca_wave(m={m0})", component_offsets=EDGE_OFFSETS)
    if not pt.steppable["ok"]:
        raise RuntimeError("companion operator failed the steppability certificate")
    _verify_dd_commutes(lat, forms, pt, m0)
    return p, pt, forms


def _entries_from_action(lat: LatticeSpacetime, k: int, action) -> list:
    """Recover translation-invariant stencil entries by probing `action` with
    deltas placed at a central point."""
    t0, x0 = lat.n_t // 2, 0
    entries = {}
    for c in range(k):
        e = np.zeros((lat.n_t, lat.n_x, k))
        e[t0, x0, c] = 1.0
        out = action(e)
        tt, xx, cc = np.nonzero(out)
        for t, x, i in zip(tt, xx, cc):
            # action output at (t, x) reads the delta at (t0, x0):
            # row offset dt = t0 - t, dx = (x0 - x) mod n_x
            dt_off = t0 - t
            dx_off = (x0 - x) % lat.n_x
            if dx_off > lat.n_x // 2:
                dx_off -= lat.n_x
            key = (dt_off, dx_off)
            if key not in entries:
                entries[key] = np.zeros((k, k))
            entries[key][i, c] = out[t, x, i]
    return [(dt, dx, a) for (dt, dx), a in entries.items()]


def _verify_dd_commutes(lat, forms: DiscreteFormsComplex, pt: LatticeOperator, m0: float):
    """[d0 delta1, Pt] = 0 on margin-supported columns."""
    rng = np.random.default_rng(3)
    dd = lambda a: forms.d0(forms.delta1(a))
    ptv = lambda a: pt._apply_values(a, padded=True)
    v = np.zeros((lat.n_t, lat.n_x, 2))
    lo, hi = 2, lat.n_t - 3
    v[lo:hi + 1] = rng.normal(size=(hi - lo + 1, lat.n_x, 2))
    defect = np.abs(dd(ptv(v)) - ptv(dd(v))).max()
    scale = max(np.abs(ptv(v)).max(), 1.0)
    if defect > 1e-12 * scale:
        raise RuntimeError(f"[d delta, Pt] defect {defect:.2e} exceeds tolerance")


def build_dirac_1p1(lat: LatticeSpacetime, m0: float = 0.0) -> LatticeOperator:
    """Centered 1+1 Dirac operator D = i(-gamma_t d_t + gamma_x d_x) + m0 * beta
    on the C^2 spinor fiber, formally self-adjoint for the indefinite spinor
    pairing beta = gamma_t.

    Build-time certificates: Clifford symbol square, formal self-adjointness,
    and positive definiteness of the conserved slice form on the physical
    solution branch (definite type).
    """
    if m0 < 0:
        raise ValueError("mass must be >= 0")
    ct = 1.0 / (2 * lat.dt)
    cx = 1.0 / (2 * lat.dx)
    entries = [
        (1, 0, -1j * GAMMA_T * ct),
        (-1, 0, 1j * GAMMA_T * ct),
        (0, 1, 1j * GAMMA_X * cx),
        (0, -1, -1j * GAMMA_X * cx),
        (0, 0, m0 * SPINOR_PAIRING),
    ]
    pairing = FiberPairing(SPINOR_PAIRING, sesquilinear=True, definite=False)
    op = LatticeOperator(lat, 2, COMPLEX, entries, pairing, name=f"dirac(m={m0})")
    _dirac_symbol_check(lat)
    if not op.self_adjoint:
        raise RuntimeError("Dirac operator failed the self-adjointness certificate")
    from .quant_ferm import definite_type_certificate
    cert = definite_type_certificate(op)
    if not cert.definite:
        raise RuntimeError("Dirac operator failed the definite-type certificate "
                           "(wrong sign or pairing choice)")
    return op


def dirac_symbol(xi_t: float, xi_x: float) -> np.ndarray:
    """Principal symbol of the shipped Dirac operator at covector (xi_t, xi_x)."""
    return -1j * GAMMA_T * xi_t + 1j * GAMMA_X * xi_x


def _dirac_symbol_check(lat: LatticeSpacetime, trials: int = 20) -> None:
    rng = np.random.default_rng(11)
    for _ in range(trials):
        xi = rng.normal(size=2)
        s = dirac_symbol(*xi)
        target = (-xi[0] ** 2 + xi[1] ** 2) * np.eye(2)
        if np.abs(s @ s - target).max() > 1e-12:
            raise RuntimeError("Dirac symbol square check failed")


def direct_sum(p1: LatticeOperator, p2: LatticeOperator,
               name: str | None = None) -> LatticeOperator:
    """Block-diagonal sum; time radius is the maximum of the two (the smaller
    stencil is padded trivially)."""
    if p1.lattice != p2.lattice:
        raise ValueError("direct sum needs operators on the same lattice")
    if p1.kind != p2.kind:
        raise ValueError("direct sum needs matching scalar kinds")
    if p2.k == 0:
        return p1
    if p1.k == 0:
        return p2
    k = p1.k + p2.k
    n_x = p1.lattice.n_x
    dtype = complex if p1.kind == COMPLEX else float
    acc: dict[tuple[int, int], np.ndarray] = {}

    def put(dt, dx, block, off):
        key = (dt, dx)
        if key not in acc:
            acc[key] = np.zeros((n_x, k, k), dtype=dtype)
        acc[key][:, off:off + block.shape[1], off:off + block.shape[2]] += block

    for dt, dx, a in p1.entries:
        put(dt, dx, a, 0)
    for dt, dx, a in p2.entries:
        put(dt, dx, a, p1.k)
    bp = np.zeros((k, k), dtype=dtype)
    bp[:p1.k, :p1.k] = p1.pairing.matrix
    bp[p1.k:, p1.k:] = p2.pairing.matrix
    pairing = FiberPairing(bp, sesquilinear=(p1.kind == COMPLEX),
                           definite=p1.pairing.definite and p2.pairing.definite)
    entries = [(dt, dx, c) for (dt, dx), c in acc.items()]
    return LatticeOperator(p1.lattice, k, p1.kind, entries, pairing,
                           name=name or f"{p1.name}(+){p2.name}")


def zero_dim_operator(lat: LatticeSpacetime, kind: str = REAL) -> LatticeOperator:
    """The operator on the rank-0 bundle (neutral element for direct sums)."""
    pairing = FiberPairing(np.zeros((0, 0)), sesquilinear=(kind == COMPLEX), definite=True)
    op = LatticeOperator.__new__(LatticeOperator)
    op.lattice, op.k, op.kind, op.name = lat, 0, kind, "zero_dim"
    op.pairing, op.entries, op.r = pairing, [], 1
    op._lead_cache = {}
    op.steppable = {"ok": True, "cond_lead": 1.0, "cond_trail": 1.0}
    op.self_adjoint = True
    return op


def adjointness_defect(op: LatticeOperator, samples: int = 100, seed: int = 0) -> float:
    return op.adjointness_defect(samples, seed)


def apply(op: LatticeOperator, phi: Section) -> Section:
    return op.apply(phi)


def random_margin_section(op: LatticeOperator, rng: np.random.Generator,
                          deepen: int = 0) -> Section:
    """Random section supported in the admissible source margin, optionally
    shrunk by `deepen` extra slices at each end."""
    lat = op.lattice
    lo = op.margin_lo + deepen
    hi = op.margin_hi - deepen
    if lo > hi:
        raise ValueError("margin is empty for this lattice size")
    vals = np.zeros((lat.n_t, lat.n_x, op.k),
                    dtype=complex if op.kind == COMPLEX else float)
    shape = (hi - lo + 1, lat.n_x, op.k)
    if op.kind == COMPLEX:
        vals[lo:hi + 1] = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    else:
        vals[lo:hi + 1] = rng.normal(size=shape)
    return Section(lat, vals, op.kind)


def delta_section(op: LatticeOperator, t: int, x: int, c: int = 0,
                  value=1.0) -> Section:
    lat = op.lattice
    vals = np.zeros((lat.n_t, lat.n_x, op.k),
                    dtype=complex if op.kind == COMPLEX else float)
    vals[t, x, c] = value
    return Section(lat, vals, op.kind)
