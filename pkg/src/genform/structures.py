"""Model structures: generalized SL_n(C) spinors, Calabi-Yau pairs, hyperKaehler
triples, the G2 pair and the Spin(7) form, with their linear data."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Sequence

import numpy as np

from .clifford import (
    CL2Element,
    exp_cl2,
    generator_matrices,
    pairing,
    so_to_cl2,
)
from .multivector import (
    Basis,
    FormTuple,
    Multivector,
    hodge_star,
    interior,
    mask_of,
    wedge,
)
from .subspace import SubspaceBasis, nullspace, span, split_real

__all__ = [
    "Degenerate",
    "StructureSpec",
    "IsotropicData",
    "make_sl",
    "make_cy",
    "make_hk",
    "make_g2",
    "make_spin7",
    "symplectic_spinor",
    "annihilator",
    "u_spaces",
    "gcs_from_spinor",
    "spin_lift",
    "cy_check",
    "hk_relations",
    "octonion_mul",
    "g2_form",
    "cayley_form",
    "FANO_TRIPLES",
]

FANO_TRIPLES = ((1, 2, 4), (2, 3, 5), (3, 4, 6), (4, 5, 7), (5, 6, 1), (6, 7, 2), (7, 1, 3))

# The Fano frame e_1..e_7 induces the orientation -e^{1..7}; the G2 form is
# evaluated on f_i = -e_i so that it induces the fixed orientation and
# psi = *phi is its dual 4-form.
G2_FRAME_SIGN = -1.0


class Degenerate(ValueError):
    pass


# linear data of pure spinors ----------------------------------------------------


def _as_tuple(phi) -> FormTuple:
    return phi if isinstance(phi, FormTuple) else FormTuple.of(phi, reality=True)


def _vector_action(phi: FormTuple) -> np.ndarray:
    """Matrix of ``E -> E . phi`` from V + V* (complexified) to the stacked forms."""
    gens = generator_matrices(phi.n)
    arr = phi.array
    return np.stack([(arr @ g.T).reshape(-1) for g in gens], axis=1)


@dataclass(frozen=True, eq=False)
class IsotropicData:
    L: SubspaceBasis
    U: tuple[SubspaceBasis, ...] = field(default=())

    @property
    def n(self) -> int:
        return self.L.ambient_dim // 4

    def u(self, p: int) -> SubspaceBasis:
        return self.U[p + self.n]

    def dims(self) -> list[int]:
        return [u.rank for u in self.U]


def annihilator(phi) -> IsotropicData:
    """Complex annihilator ``L_phi`` in (V + V*) (x) C of a pure spinor."""
    phi = _as_tuple(phi)
    dim = phi.n
    if dim % 2:
        raise Degenerate("pure spinors need an even-dimensional V")
    L = nullspace(_vector_action(phi).astype(complex))
    if L.rank != dim:
        raise Degenerate(f"annihilator has dimension {L.rank}, expected {dim}")
    both = np.hstack([L.basis, L.basis.conj()])
    if np.linalg.matrix_rank(both, tol=1e-9) != 2 * dim:
        raise Degenerate("annihilator meets its conjugate")
    return IsotropicData(L)


def u_spaces(phi) -> IsotropicData:
    """``U^{-n+i}`` spanned by products of ``i`` elements of ``conj(L)`` applied to ``phi``."""
    phi = _as_tuple(phi)
    if len(phi) != 1:
        raise ValueError("u_spaces takes a single spinor")
    iso = annihilator(phi)
    dim = phi.n
    gens = generator_matrices(dim)
    lbar = iso.L.basis.conj()
    ops = [sum(lbar[k, j] * gens[k] for k in range(2 * dim)) for j in range(dim)]
    current = {0: phi[0].coeffs.astype(complex)}
    U = []
    for i in range(dim + 1):
        U.append(span(np.stack(list(current.values()), axis=1)))
        nxt = {}
        for mask, vec in current.items():
            top = mask.bit_length()
            for j in range(top, dim):
                nxt[mask | (1 << j)] = ops[j] @ vec
        current = nxt
        if not current:
            break
    return IsotropicData(iso.L, tuple(U))


def gcs_from_spinor(phi) -> np.ndarray:
    """Generalized complex structure: ``+i`` on ``conj(L)``, ``-i`` on ``L``."""
    L = annihilator(phi).L.basis
    B = np.hstack([L.conj(), L])
    k = L.shape[1]
    D = np.diag(np.concatenate([np.full(k, 1j), np.full(k, -1j)]))
    J = B @ D @ np.linalg.inv(B)
    if np.abs(J.imag).max() > 1e-9:
        raise Degenerate("structure is not real")
    return J.real


def spin_lift(A: np.ndarray) -> CL2Element:
    """CL^2 element acting on V + V* by commutator as ``A`` (for ``A`` in so(V + V*))."""
    return so_to_cl2(A)


def preserves_pairing(A: np.ndarray, tol: float = 1e-10) -> bool:
    n = A.shape[0] // 2
    g = np.zeros((2 * n, 2 * n))
    g[:n, n:] = g[n:, :n] = 0.5 * np.eye(n)
    return bool(np.allclose(A.T @ g @ A, g, atol=tol))


# model constructors -------------------------------------------------------------


def make_sl(n: int) -> FormTuple:
    """``Omega = theta^1 ^ ... ^ theta^n`` with ``theta^k = e^{2k-1} + i e^{2k}`` on R^{2n}."""
    if n < 1:
        raise ValueError("n must be positive")
    basis = Basis(2 * n)
    omega = Multivector.scalar(basis, 1.0 + 0j)
    for k in range(n):
        theta = Multivector.monomial(basis, 2 * k + 1) + Multivector.monomial(basis, 2 * k + 2, coeff=1j)
        omega = wedge(omega, theta)
    return FormTuple.of(omega, reality=True)


def _exp_form(a: Multivector) -> Multivector:
    out = Multivector.scalar(a.basis, 1.0 + 0j)
    term = out
    for k in range(1, a.n // 2 + 1):
        term = wedge(term, a) / k
        out = out + term
    return out


def symplectic_spinor(omega: Multivector) -> Multivector:
    """``e^{i omega}``."""
    return _exp_form(omega * 1j)


def standard_symplectic(dim: int) -> Multivector:
    basis = Basis(dim)
    out = Multivector.zero(basis)
    for k in range(dim // 2):
        out = out + Multivector.monomial(basis, 2 * k + 1, 2 * k + 2)
    return out


def make_cy(n: int) -> FormTuple:
    """Calabi-Yau pair ``(Omega, e^{i omega})`` with ``omega = sum e^{2k-1,2k}``."""
    omega_sl = make_sl(n)[0]
    omega = standard_symplectic(2 * n)
    return FormTuple.of(omega_sl, symplectic_spinor(omega), reality=True)


def hk_forms(m: int) -> tuple[Multivector, Multivector, Multivector]:
    """Quaternionic Kaehler forms on R^{4m}, block by block."""
    if m < 1:
        raise ValueError("m must be positive")
    basis = Basis(4 * m)
    wI = Multivector.zero(basis)
    wJ = Multivector.zero(basis)
    wK = Multivector.zero(basis)
    mono = lambda *i: Multivector.monomial(basis, *i)
    for k in range(m):
        a, b, c, d = 4 * k + 1, 4 * k + 2, 4 * k + 3, 4 * k + 4
        wI = wI + mono(a, b) + mono(c, d)
        wJ = wJ + mono(a, c) - mono(b, d)
        wK = wK + mono(a, d) + mono(b, c)
    return wI, wJ, wK


def make_hk(m: int) -> FormTuple:
    return FormTuple(tuple(symplectic_spinor(w) for w in hk_forms(m)), reality=True)


def octonion_mul(x: Sequence[float], y: Sequence[float]) -> np.ndarray:
    """Octonion product; index 0 is the unit and ``e_i e_{i+1} = e_{i+3}`` (mod 7)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    table = _octonion_table()
    return np.einsum("i,j,ijk->k", x, y, table)


_OCT: np.ndarray | None = None


def _octonion_table() -> np.ndarray:
    global _OCT
    if _OCT is None:
        t = np.zeros((8, 8, 8))
        t[0, 0, 0] = 1.0
        for i in range(1, 8):
            t[0, i, i] = t[i, 0, i] = 1.0
            t[i, i, 0] = -1.0
        for a, b, c in FANO_TRIPLES:
            for p, q, r in ((a, b, c), (b, c, a), (c, a, b)):
                t[p, q, r] = 1.0
                t[q, p, r] = -1.0
        t.setflags(write=False)
        _OCT = t
    return _OCT


def g2_form() -> Multivector:
    """``phi(x, y, z) = <xy, z>`` on Im O, in the oriented frame ``f_i = -e_i``."""
    basis = Basis(7)
    out = np.zeros(basis.size)
    eye = np.eye(8)
    for a in range(1, 8):
        for b in range(a + 1, 8):
            for c in range(b + 1, 8):
                val = octonion_mul(eye[a], eye[b]) @ eye[c]
                out[mask_of((a, b, c))] = G2_FRAME_SIGN**3 * val
    return Multivector(basis, out)


def make_g2() -> FormTuple:
    """The pair ``(vol_7 - phi, 1 - psi)`` with ``psi = *phi``."""
    phi = g2_form()
    psi = hodge_star(phi)
    basis = phi.basis
    vol = Multivector.monomial(basis, *range(1, 8))
    return FormTuple.of(vol - phi, Multivector.scalar(basis) - psi)


def _embed_shift(a: Multivector, basis: Basis) -> Multivector:
    c = np.zeros(basis.size, dtype=a.coeffs.dtype)
    for k, v in a.terms().items():
        c[k << 1] = v
    return Multivector(basis, c)


def cayley_form() -> Multivector:
    """``e^1 ^ phi + psi`` on R^8 = R + Im O (coordinate 1 is the real part)."""
    basis = Basis(8)
    phi = g2_form()
    psi = hodge_star(phi)
    return wedge(Multivector.monomial(basis, 1), _embed_shift(phi, basis)) + _embed_shift(psi, basis)


def make_spin7() -> FormTuple:
    """``1 - phi_Spin + vol_8``."""
    basis = Basis(8)
    out = Multivector.scalar(basis) - cayley_form() + Multivector.monomial(basis, *range(1, 9))
    return FormTuple.of(out)


# spec -----------------------------------------------------------------------------

_DIMS = {"sl": lambda n: 2 * n, "cy": lambda n: 2 * n, "hk": lambda n: 4 * n, "g2": lambda n: 7, "spin7": lambda n: 8}


@dataclass(frozen=True, eq=False)
class StructureSpec:
    kind: str
    n: int = 1
    transforms: tuple[CL2Element, ...] = ()

    def __post_init__(self) -> None:
        kind = self.kind.lower()
        aliases = {"sln": "sl", "cypair": "cy", "hktriple": "hk", "g2pair": "g2"}
        kind = aliases.get(kind, kind)
        if kind not in _DIMS:
            raise ValueError(f"unknown structure kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind in ("g2", "spin7"):
            object.__setattr__(self, "n", {"g2": 7, "spin7": 8}[kind] if self.n in (1, 7, 8) else self.n)
        if self.n < 1:
            raise ValueError("n must be positive")
        dim = self.dim
        for t in self.transforms:
            if t.n != dim:
                raise ValueError(f"transform over dimension {t.n}, structure has {dim}")
        object.__setattr__(self, "transforms", tuple(self.transforms))

    @property
    def dim(self) -> int:
        return _DIMS[self.kind](self.n)

    def model(self) -> FormTuple:
        if self.kind == "sl":
            return make_sl(self.n)
        if self.kind == "cy":
            return make_cy(self.n)
        if self.kind == "hk":
            return make_hk(self.n)
        if self.kind == "g2":
            return make_g2()
        return make_spin7()

    def build(self) -> FormTuple:
        phi = self.model()
        for t in self.transforms:
            g = exp_cl2(t).matrix
            phi = FormTuple.from_array(phi.basis, phi.array @ g.T, phi.reality)
        return phi

    def to_json(self) -> dict:
        return {"kind": self.kind, "n": self.n, "transforms": [t.to_json() for t in self.transforms]}

    @classmethod
    def from_json(cls, data: dict) -> "StructureSpec":
        kind = data["kind"]
        n = int(data.get("n", 1))
        tmp = cls(kind, n)
        ts = tuple(CL2Element.from_json(t, tmp.dim) for t in data.get("transforms", []))
        return cls(kind, n, ts)


# checks -------------------------------------------------------------------------


def complex_structure_from_sl(omega: Multivector) -> np.ndarray:
    """Complex structure on V for which ``Omega`` has type (n, 0).

    ``ker Omega`` (vectors ``v`` with ``i_v Omega = 0``) is the ``-i`` eigenspace.
    """
    dim = omega.n
    cols = np.stack([interior(np.eye(dim)[k], omega).coeffs for k in range(dim)], axis=1)
    K = nullspace(cols.astype(complex)).basis
    if K.shape[1] != dim // 2:
        raise Degenerate("Omega is not decomposable of maximal type")
    B = np.hstack([K.conj(), K])
    D = np.diag(np.concatenate([np.full(dim // 2, 1j), np.full(dim // 2, -1j)]))
    return (B @ D @ np.linalg.inv(B)).real


@dataclass(frozen=True)
class CYReport:
    type_condition: float
    proportionality_residual: float
    c: complex
    metric: np.ndarray
    min_eigenvalue: float
    ok: bool

    def to_json(self) -> dict:
        return {
            "omega_wedge_residual": self.type_condition,
            "monge_ampere_residual": self.proportionality_residual,
            "c": [float(np.real(self.c)), float(np.imag(self.c))],
            "metric_min_eigenvalue": self.min_eigenvalue,
            "pass": self.ok,
        }


def cy_check(Omega: Multivector, omega: Multivector, tol: float = 1e-10) -> CYReport:
    """The three Calabi-Yau conditions; the constant ``c`` is measured, not assumed."""
    dim = Omega.n
    n = dim // 2
    t1 = float(np.abs(wedge(Omega, omega).coeffs).max())
    lhs = wedge(Omega, Omega.conj())
    omn = Multivector.scalar(omega.basis)
    for _ in range(n):
        omn = wedge(omn, omega)
    top = omega.basis.top()
    c = lhs.coeffs[top] / omn.coeffs[top] if omn.coeffs[top] != 0 else np.nan
    resid = float(np.abs(lhs.coeffs - c * omn.coeffs).max()) if np.isfinite(c) else np.inf
    J = complex_structure_from_sl(Omega)
    W = omega.two_form_matrix().real
    g = W @ J  # g(u, v) = omega(u, J v)
    sym = 0.5 * (g + g.T)
    mine = float(np.linalg.eigvalsh(sym).min())
    ok = t1 <= tol and resid <= tol and abs(c) > tol and np.allclose(g, g.T, atol=tol) and mine > 0
    return CYReport(t1, resid, c, g, mine, bool(ok))


@dataclass(frozen=True)
class HKReport:
    structures: dict
    residuals: dict
    G: np.ndarray
    ok: bool

    def to_json(self) -> dict:
        return {"residuals": self.residuals, "pass": self.ok}


def hk_relations(triple: FormTuple, tol: float = 1e-10) -> HKReport:
    """Six generalized complex structures of a hyperKaehler triple and their relations."""
    if len(triple) != 3:
        raise ValueError("expected a triple of spinors")
    I1, J1, K1 = (gcs_from_spinor(FormTuple.of(c, reality=True)) for c in triple)
    I0, J0, K0 = J1 @ K1, K1 @ I1, I1 @ J1
    eye = np.eye(I1.shape[0])
    G = -I0 @ I1
    r = {
        "I0^2": np.abs(I0 @ I0 + eye).max(),
        "J0^2": np.abs(J0 @ J0 + eye).max(),
        "K0^2": np.abs(K0 @ K0 + eye).max(),
        "I0J0K0": np.abs(I0 @ J0 @ K0 + eye).max(),
        "I0I1": np.abs(I0 @ I1 + G).max(),
        "I1I0": np.abs(I1 @ I0 + G).max(),
        "J0J1": np.abs(J0 @ J1 + G).max(),
        "J1J0": np.abs(J1 @ J0 + G).max(),
        "K0K1": np.abs(K0 @ K1 + G).max(),
        "K1K0": np.abs(K1 @ K0 + G).max(),
        "G^2": np.abs(G @ G - eye).max(),
        "G_orthogonal": 0.0 if preserves_pairing(G, tol) else 1.0,
    }
    r = {k: float(v) for k, v in r.items()}
    ok = all(v <= tol for v in r.values())
    mats = {"I0": I0, "J0": J0, "K0": K0, "I1": I1, "J1": J1, "K1": K1}
    return HKReport(mats, r, G, ok)
