"""Clifford algebra of V + V* with the split pairing, realized on S = Lambda V*.

Vectors of V + V* are arrays ``x`` of length ``2n``: ``x[:n]`` are the
coefficients on ``v_1..v_n`` and ``x[n:]`` those on ``e^1..e^n``.  The pairing
is ``<v + eta, w + zeta> = (zeta(v) + eta(w)) / 2`` and the algebra relation is
``E E = <E, E>``, so ``E F + F E = 2 <E, F>``.

A :class:`CliffordElement` is stored as its spin matrix (``v -> i_v``,
``eta -> eta ^``).  The Lambda(V + V*) symbol is recovered on demand.  Symbol
keys are bitmasks over ``2n`` generators: bit ``i < n`` is ``e^{i+1}``, bit
``n + j`` is ``v_{j+1}``; a key stands for ``e_I ^ v_J`` with both parts
ascending.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import comb

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .multivector import (
    Basis,
    BasisMismatch,
    Multivector,
    interior_generator,
    wedge_generator,
    wedge_sign_table,
)

__all__ = [
    "SplitPairing",
    "CliffordElement",
    "CL2Element",
    "NotInCpin",
    "SingularElement",
    "MixedParity",
    "Membership",
    "pairing",
    "clifford_product",
    "involution_tilde",
    "reversal_sigma",
    "clifford_norm2",
    "exp_cl2",
    "ad_tilde",
    "group_membership",
    "filtration_degree",
    "tau",
    "cl2_dim",
    "cl2_basis",
    "cl2_basis_stack",
    "parity_operator",
    "quantize",
    "dequantize",
    "ad_tilde_matrix",
    "generator_matrices",
    "vector_coords",
    "so_to_cl2",
    "cl2_adjoint",
]

AD_TOL = 1e-9


class NotInCpin(ValueError):
    pass


class SingularElement(np.linalg.LinAlgError):
    pass


class MixedParity(ValueError):
    pass


@dataclass(frozen=True)
class SplitPairing:
    basis: Basis

    @property
    def n(self) -> int:
        return self.basis.n

    def __call__(self, x: np.ndarray, y: np.ndarray) -> complex:
        return pairing(x, y)

    def gram(self) -> np.ndarray:
        """Gram matrix of the pairing in the (v, e) coordinates."""
        n = self.n
        g = np.zeros((2 * n, 2 * n))
        g[:n, n:] = g[n:, :n] = 0.5 * np.eye(n)
        return g


def pairing(x: np.ndarray, y: np.ndarray) -> complex:
    x = np.asarray(x)
    y = np.asarray(y)
    n = x.shape[-1] // 2
    return 0.5 * (x[..., n:] @ y[..., :n] + y[..., n:] @ x[..., :n])


# sign and bit tables --------------------------------------------------------


@lru_cache(maxsize=None)
def _popcount(bits: int) -> np.ndarray:
    t = np.zeros(1 << bits, dtype=np.int64)
    for i in range(1, 1 << bits):
        t[i] = t[i >> 1] + (i & 1)
    return t


def _pc(arr: np.ndarray, n: int) -> np.ndarray:
    return _popcount(n)[arr]


@lru_cache(maxsize=None)
def parity_operator(n: int) -> np.ndarray:
    p = np.where(_popcount(n) % 2 == 0, 1.0, -1.0)
    return p


@lru_cache(maxsize=None)
def _pair_sign(n: int) -> np.ndarray:
    """Sign of moving each paired ``v_k`` next to ``e^k`` in the word ``e_I v_J``.

    Indexed by symbol key ``I | J << n``.
    """
    size = 1 << n
    keys = np.arange(size * size)
    I = keys & (size - 1)
    J = keys >> n
    K = I & J
    free_J = J & ~K
    swaps = np.zeros(size * size, dtype=np.int64)
    for k in range(n):
        has = (K >> k) & 1
        swaps += has * (_pc(I >> (k + 1), n) + _pc(free_J & ((1 << k) - 1), n))
    out = np.where(swaps % 2 == 0, 1.0, -1.0)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _reverse_sign(k: int) -> float:
    return -1.0 if (k * (k - 1) // 2) % 2 else 1.0


def _normal_to_matrix(n: int, normal: np.ndarray) -> np.ndarray:
    """Spin matrix of ``sum c(I, J) eps_I iota_J`` from normal-ordered coefficients."""
    size = 1 << n
    c = normal.reshape(size, size).T  # c[I, J]
    table = wedge_sign_table(n)
    rows = np.arange(size)
    mat = np.zeros((size, size), dtype=normal.dtype)
    active_J = np.flatnonzero(np.any(c != 0, axis=0))
    for J in active_J:
        r_base = _reverse_sign(grade_of(J))
        col_c = c[:, J]
        nz_I = np.flatnonzero(col_c)
        # every L containing J
        comp = (size - 1) ^ J
        K = comp
        while True:
            L = J | K
            r = r_base * table[J, K]
            ok = nz_I[(nz_I & K) == 0]
            if ok.size:
                mat[ok | K, L] += r * col_c[ok] * table[ok, K]
            if K == 0:
                break
            K = (K - 1) & comp
    return mat


def _matrix_to_normal(n: int, mat: np.ndarray) -> np.ndarray:
    """Inverse of :func:`_normal_to_matrix` by back-substitution on columns ordered by grade."""
    size = 1 << n
    table = wedge_sign_table(n)
    c = np.zeros((size, size), dtype=mat.dtype)  # c[I, J]
    order = sorted(range(size), key=grade_of)
    rows = np.arange(size)
    for L in order:
        resid = mat[:, L].copy()
        # proper subsets J of L
        J = (L - 1) & L
        while True:
            if J != L:
                K = L ^ J
                col_c = c[:, J]
                if np.any(col_c):
                    r = _reverse_sign(grade_of(J)) * table[J, K]
                    ok = rows[((rows & K) == 0) & (col_c != 0)]
                    resid[ok | K] -= r * col_c[ok] * table[ok, K]
            if J == 0:
                break
            J = (J - 1) & L
        c[:, L] = _reverse_sign(grade_of(L)) * resid
    return c.T.reshape(-1).copy()


def grade_of(mask: int) -> int:
    return int(mask).bit_count()


def _convert(n: int, coeffs: np.ndarray, half: float) -> np.ndarray:
    """Symbol <-> normal order: expand each pair ``e^k v_k`` with ``+-1/2``.

    ``half = -0.5`` maps symbol coefficients to normal-ordered ones;
    ``half = +0.5`` maps normal-ordered coefficients to symbol ones.
    """
    size = 1 << n
    keys = np.flatnonzero(coeffs)
    if keys.size == 0:
        return np.zeros_like(coeffs)
    ps = _pair_sign(n)
    I = keys & (size - 1)
    J = keys >> n
    K = I & J
    out = np.zeros_like(coeffs)
    vals = coeffs[keys] * ps[keys]
    no_pair = K == 0
    out[keys[no_pair]] += coeffs[keys[no_pair]]
    paired = np.flatnonzero(~no_pair)
    for idx in paired:
        k_all = int(K[idx])
        i0, j0 = int(I[idx]) & ~k_all, int(J[idx]) & ~k_all
        kp = k_all
        while True:
            target = (i0 | kp) | ((j0 | kp) << n)
            out[target] += vals[idx] * ps[target] * half ** grade_of(k_all ^ kp)
            if kp == 0:
                break
            kp = (kp - 1) & k_all
    return out


def quantize(n: int, symbol: np.ndarray) -> np.ndarray:
    """Spin matrix of the skew-symmetrized image of a Lambda(V + V*) element."""
    symbol = np.asarray(symbol)
    if symbol.shape != (1 << (2 * n),):
        raise ValueError("symbol array has the wrong length")
    return _normal_to_matrix(n, _convert(n, symbol, -0.5))


def dequantize(n: int, mat: np.ndarray) -> np.ndarray:
    return _convert(n, _matrix_to_normal(n, np.asarray(mat)), 0.5)


@lru_cache(maxsize=None)
def _reversal_conj(n: int) -> np.ndarray:
    """Signed permutation ``C`` with ``C iota_i C^{-1} = eps_i`` (and vice versa)."""
    size = 1 << n
    s = np.zeros(size)
    s[0] = 1.0
    for K in range(1, size):
        i = (K & -K).bit_length() - 1
        rest = K ^ (1 << i)
        comp = (size - 1) ^ K
        below = (1 << i) - 1
        sign_iota = -1.0 if grade_of(rest & below) % 2 else 1.0
        sign_eps = -1.0 if grade_of(comp & below) % 2 else 1.0
        s[K] = s[rest] * sign_iota * sign_eps
    C = np.zeros((size, size))
    C[(size - 1) ^ np.arange(size), np.arange(size)] = s
    C.setflags(write=False)
    return C


@lru_cache(maxsize=None)
def _reversal_perm(n: int) -> tuple[np.ndarray, np.ndarray]:
    """``(idx, sign)`` with ``C[k, idx[k]] = sign[k]``."""
    C = _reversal_conj(n)
    idx = np.argmax(np.abs(C), axis=1)
    return idx, C[np.arange(len(idx)), idx]


@lru_cache(maxsize=None)
def _vector_generators(n: int) -> np.ndarray:
    gens = np.stack([interior_generator(n, i) for i in range(n)] + [wedge_generator(n, i) for i in range(n)])
    gens.setflags(write=False)
    return gens


# elements ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CliffordElement:
    """Element of CL(V + V*) held as its spin matrix on Lambda V*."""

    basis: Basis
    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix)
        if m.dtype.kind not in "fc":
            m = m.astype(float)
        size = self.basis.size
        if m.shape != (size, size):
            raise ValueError(f"spin matrix must be {size}x{size}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.basis.n

    @classmethod
    def _wrap(cls, basis: Basis, m: np.ndarray) -> "CliffordElement":
        """Adopt a freshly computed matrix without the defensive copy."""
        if m.dtype.kind not in "fc" or m.shape != (basis.size, basis.size):
            return cls(basis, m)
        out = object.__new__(cls)
        m.setflags(write=False)
        object.__setattr__(out, "basis", basis)
        object.__setattr__(out, "matrix", m)
        return out

    @classmethod
    def scalar(cls, basis: Basis, value: complex = 1.0) -> "CliffordElement":
        return cls(basis, value * np.eye(basis.size))

    @classmethod
    def vector(cls, basis: Basis, x: np.ndarray) -> "CliffordElement":
        n = basis.n
        x = np.asarray(x)
        if x.shape != (2 * n,):
            raise BasisMismatch(f"expected a vector of length {2 * n}")
        return cls._wrap(basis, np.tensordot(x, _vector_generators(n), axes=1))

    @classmethod
    def from_symbol(cls, basis: Basis, symbol) -> "CliffordElement":
        """From Lambda(V + V*) coefficients (dense array or ``{key: value}``)."""
        if isinstance(symbol, dict):
            vals = list(symbol.values())
            dtype = complex if any(np.iscomplexobj(v) for v in vals) else float
            arr = np.zeros(1 << (2 * basis.n), dtype=dtype)
            for k, v in symbol.items():
                arr[k] += v
            symbol = arr
        return cls(basis, quantize(basis.n, symbol))

    @cached_property
    def lambda_coeffs(self) -> np.ndarray:
        out = dequantize(self.n, self.matrix)
        out.setflags(write=False)
        return out

    def symbol_terms(self, tol: float = 1e-12) -> dict[int, complex]:
        c = self.lambda_coeffs
        return {int(k): c[k] for k in np.flatnonzero(np.abs(c) > tol)}

    def __mul__(self, other):
        if isinstance(other, CliffordElement):
            return clifford_product(self, other)
        return CliffordElement(self.basis, self.matrix * other)

    def __rmul__(self, s):
        return CliffordElement(self.basis, self.matrix * s)

    def __add__(self, other):
        if isinstance(other, CliffordElement):
            _check(self, other)
            return CliffordElement(self.basis, self.matrix + other.matrix)
        return CliffordElement(self.basis, self.matrix + other * np.eye(self.basis.size))

    __radd__ = __add__

    def __neg__(self):
        return CliffordElement(self.basis, -self.matrix)

    def __sub__(self, other):
        return self + (-other)

    def __matmul__(self, phi: Multivector) -> Multivector:
        return Multivector(phi.basis, self.matrix @ phi.coeffs)

    def commutator(self, other: "CliffordElement") -> "CliffordElement":
        return CliffordElement(self.basis, self.matrix @ other.matrix - other.matrix @ self.matrix)

    def allclose(self, other: "CliffordElement", atol: float = 1e-10) -> bool:
        return bool(np.allclose(self.matrix, other.matrix, atol=atol, rtol=0))

    def is_scalar(self, atol: float = 1e-10) -> bool:
        m = self.matrix
        return bool(np.allclose(m, m[0, 0] * np.eye(len(m)), atol=atol, rtol=0))

    @property
    def is_even(self) -> bool:
        return _parity_part(self.matrix, odd=True).max(initial=0.0) == 0.0

    def inverse(self) -> "CliffordElement":
        try:
            cond = np.linalg.cond(self.matrix)
        except np.linalg.LinAlgError as exc:
            raise SingularElement("Clifford element is not invertible") from exc
        if not np.isfinite(cond) or cond > 1e12:
            raise SingularElement("Clifford element is not invertible")
        return CliffordElement(self.basis, np.linalg.inv(self.matrix))


def _check(a, b) -> None:
    if not a.basis.compatible(b.basis):
        raise BasisMismatch("Clifford elements live over different bases")


def _parity_part(m: np.ndarray, odd: bool) -> np.ndarray:
    p = parity_operator(int(np.log2(len(m))))
    flip = np.not_equal.outer(p, p)
    return np.abs(np.where(flip if odd else ~flip, m, 0))


def clifford_product(a: CliffordElement, b: CliffordElement) -> CliffordElement:
    _check(a, b)
    return CliffordElement._wrap(a.basis, a.matrix @ b.matrix)


def involution_tilde(a: CliffordElement) -> CliffordElement:
    """Algebra automorphism acting as +1 on even and -1 on odd elements."""
    p = parity_operator(a.n)
    return CliffordElement._wrap(a.basis, p[:, None] * a.matrix * p[None, :])


def reversal_sigma(a: CliffordElement) -> CliffordElement:
    """Anti-automorphism reversing products and fixing V + V*."""
    # C is a signed permutation, so C M^T C^T is a signed re-indexing of M^T
    idx, sign = _reversal_perm(a.n)
    return CliffordElement._wrap(a.basis, np.outer(sign, sign) * a.matrix.T[np.ix_(idx, idx)])


@dataclass(frozen=True)
class Norm2:
    element: CliffordElement
    is_scalar: bool
    value: complex | None


def clifford_norm2(a: CliffordElement, atol: float = 1e-10) -> Norm2:
    """``sigma(a) a`` together with whether it is a scalar (and which)."""
    g = clifford_product(reversal_sigma(a), a)
    scal = g.is_scalar(atol * max(1.0, np.abs(g.matrix).max()))
    val = g.matrix[0, 0] if scal else None
    if val is not None and np.isrealobj(val) is False and abs(val.imag) < atol:
        val = val.real
    return Norm2(g, scal, val)


def filtration_degree(a: CliffordElement, tol: float = 1e-10) -> int:
    """Smallest ``k`` with ``a`` in ``CL^k``: the top grade of the symbol."""
    c = a.lambda_coeffs
    scale = max(1.0, float(np.abs(c).max(initial=0.0)))
    keys = np.flatnonzero(np.abs(c) > tol * scale)
    if keys.size == 0:
        return 0
    grades = _pc(keys, 2 * a.n)
    if np.any(grades % 2) and not np.all(grades % 2):
        raise MixedParity("element has both even and odd parts")
    return int(grades.max())


# CL^2 -----------------------------------------------------------------------


def cl2_dim(n: int) -> int:
    return 1 + n * n + 2 * comb(n, 2)


@lru_cache(maxsize=None)
def _pairs(n: int) -> tuple[tuple[int, int], ...]:
    return tuple((i, j) for i in range(n) for j in range(i + 1, n))


def tau(A: np.ndarray) -> np.ndarray:
    """Spin matrix of the CL^2 element quantizing ``A`` in End(V).

    Fixed by ``[tau(A), E] = (A v, -A^T eta)`` for ``E = v + eta``; it acts
    on forms as the derivation induced by ``-A^T`` plus ``tr(A) / 2``.
    """
    A = np.asarray(A)
    n = A.shape[0]
    size = 1 << n
    m = np.zeros((size, size), dtype=np.result_type(A, float))
    for l in range(n):
        for k in range(n):
            if A[l, k] != 0:
                m -= A[l, k] * (wedge_generator(n, k) @ interior_generator(n, l))
    m += 0.5 * np.trace(A) * np.eye(size)
    return m


@lru_cache(maxsize=None)
def cl2_basis(n: int) -> tuple[sp.csr_matrix, ...]:
    """Spin matrices of the standard CL^2 basis.

    Order: scalar; endo ``E_ij`` (row-major); ``e^i e^j`` for ``i < j``;
    ``v_i v_j`` for ``i < j`` (acting as ``i_{v_i} i_{v_j}``).
    """
    size = 1 << n
    eye = np.eye(size)
    out = [sp.csr_matrix(eye)]
    for i in range(n):
        for j in range(n):
            m = -(wedge_generator(n, j) @ interior_generator(n, i))
            if i == j:
                m = m + 0.5 * eye
            out.append(sp.csr_matrix(m))
    for i, j in _pairs(n):
        out.append(sp.csr_matrix(wedge_generator(n, i) @ wedge_generator(n, j)))
    for i, j in _pairs(n):
        out.append(sp.csr_matrix(interior_generator(n, i) @ interior_generator(n, j)))
    return tuple(out)


@lru_cache(maxsize=None)
def cl2_basis_stack(n: int) -> sp.csr_matrix:
    """All CL^2 basis matrices stacked vertically: shape ``(dim * 2^n, 2^n)``."""
    return sp.vstack(cl2_basis(n)).tocsr()


@dataclass(frozen=True, eq=False)
class CL2Element:
    """Element of CL^2 = R + End(V) + Lambda^2 V* + Lambda^2 V (complex entries allowed)."""

    scalar: complex
    endo: np.ndarray
    two_form: Multivector
    two_vector: np.ndarray

    def __post_init__(self) -> None:
        n = self.two_form.n
        endo = np.array(self.endo)
        tv = np.array(self.two_vector)
        if endo.shape != (n, n) or tv.shape != (n, n):
            raise BasisMismatch("endo and two_vector must be n x n")
        if not np.allclose(tv, -tv.T, atol=1e-12):
            raise ValueError("two_vector must be antisymmetric")
        if self.two_form.grades() - {2}:
            raise ValueError("two_form must be of pure degree 2")
        endo.setflags(write=False)
        tv.setflags(write=False)
        object.__setattr__(self, "endo", endo)
        object.__setattr__(self, "two_vector", tv)

    @property
    def n(self) -> int:
        return self.two_form.n

    @property
    def basis(self) -> Basis:
        return self.two_form.basis

    @classmethod
    def zero(cls, n: int) -> "CL2Element":
        return cls.from_vector(n, np.zeros(cl2_dim(n)))

    @classmethod
    def from_parts(cls, n: int, scalar=0.0, endo=None, two_form=None, two_vector=None) -> "CL2Element":
        basis = Basis(n)
        endo = np.zeros((n, n)) if endo is None else np.asarray(endo)
        if two_form is None:
            two_form = Multivector.zero(basis)
        elif not isinstance(two_form, Multivector):
            two_form = Multivector.two_form(basis, np.asarray(two_form))
        tv = np.zeros((n, n)) if two_vector is None else np.asarray(two_vector)
        return cls(scalar, endo, two_form, tv)

    @classmethod
    def from_vector(cls, n: int, x: np.ndarray) -> "CL2Element":
        x = np.asarray(x)
        if x.shape != (cl2_dim(n),):
            raise ValueError(f"expected {cl2_dim(n)} coordinates")
        pairs = _pairs(n)
        p = len(pairs)
        endo = x[1 : 1 + n * n].reshape(n, n)
        b = np.zeros((n, n), dtype=x.dtype)
        beta = np.zeros((n, n), dtype=x.dtype)
        off = 1 + n * n
        for k, (i, j) in enumerate(pairs):
            b[i, j], b[j, i] = x[off + k], -x[off + k]
            beta[i, j], beta[j, i] = x[off + p + k], -x[off + p + k]
        return cls(x[0], endo, Multivector.two_form(Basis(n), b), beta)

    def to_vector(self) -> np.ndarray:
        n = self.n
        b = self.two_form.two_form_matrix()
        iu = np.triu_indices(n, 1)
        return np.concatenate(
            [np.atleast_1d(self.scalar), self.endo.reshape(-1), b[iu], self.two_vector[iu]]
        )

    def matrix(self) -> np.ndarray:
        x = self.to_vector()
        out = np.zeros((self.basis.size,) * 2, dtype=np.result_type(x, float))
        for c, m in zip(x, cl2_basis(self.n)):
            if c != 0:
                out += c * m.toarray()
        return out

    def to_clifford(self) -> CliffordElement:
        return CliffordElement(self.basis, self.matrix())

    @classmethod
    def from_clifford(cls, g: CliffordElement, tol: float = 1e-9) -> "CL2Element":
        """Coordinates of ``g`` on the CL^2 basis; raises if ``g`` is not in CL^2."""
        mats = np.stack([m.toarray().reshape(-1) for m in cl2_basis(g.n)], axis=1)
        target = g.matrix.reshape(-1)
        x, *_ = np.linalg.lstsq(mats, target, rcond=None)
        resid = np.linalg.norm(mats @ x - target)
        if resid > tol * max(1.0, np.linalg.norm(target)):
            raise ValueError(f"element is not in CL^2 (residual {resid:.2e})")
        return cls.from_vector(g.n, x)

    def __add__(self, other: "CL2Element") -> "CL2Element":
        return CL2Element.from_vector(self.n, self.to_vector() + other.to_vector())

    def __mul__(self, s) -> "CL2Element":
        return CL2Element.from_vector(self.n, self.to_vector() * s)

    __rmul__ = __mul__

    def __neg__(self) -> "CL2Element":
        return self * -1

    def to_json(self) -> dict:
        def enc(arr):
            arr = np.asarray(arr)
            return np.real(arr).tolist()

        x = self.to_vector()
        if np.iscomplexobj(x) and np.any(np.imag(x) != 0):
            re = CL2Element.from_vector(self.n, np.real(x)).to_json()
            im = CL2Element.from_vector(self.n, np.imag(x)).to_json()
            return {"re": re, "im": im}
        return {
            "scalar": float(np.real(self.scalar)),
            "endo": enc(self.endo),
            "two_form": self.two_form.real.to_json(),
            "two_vector": enc(self.two_vector),
        }

    @classmethod
    def from_json(cls, data: dict, n: int | None = None) -> "CL2Element":
        if "re" in data:
            re = cls.from_json(data["re"], n)
            im = cls.from_json(data["im"], n)
            return cls.from_vector(re.n, re.to_vector() + 1j * im.to_vector())
        endo = np.asarray(data["endo"], dtype=float)
        dim = endo.shape[0]
        if n is not None and n != dim:
            raise BasisMismatch("CL2 json dimension mismatch")
        basis = Basis(dim)
        b = Multivector.from_json(data["two_form"], basis)
        return cls(float(data["scalar"]), endo, b, np.asarray(data["two_vector"], dtype=float))


def exp_cl2(a: CL2Element) -> CliffordElement:
    """Exponential in CL; pure b- and beta-fields use their finite nilpotent series."""
    x = a.to_vector()
    n = a.n
    m = a.matrix()
    off = 1 + n * n
    pure_nilpotent = not np.any(x[:off]) and (not np.any(x[off + comb(n, 2) :]) or not np.any(x[off : off + comb(n, 2)]))
    if pure_nilpotent:
        out = np.eye(len(m), dtype=m.dtype)
        term = out
        for k in range(1, n // 2 + 1):
            term = term @ m / k
            out = out + term
        return CliffordElement(a.basis, out)
    return CliffordElement(a.basis, scipy.linalg.expm(m))


def _ad_image(ginv_t: np.ndarray, g: np.ndarray, basis: Basis, E: np.ndarray, tol: float) -> np.ndarray:
    img = ginv_t @ CliffordElement.vector(basis, E).matrix @ g
    out = vector_coords(img)
    resid = np.linalg.norm(img - CliffordElement.vector(basis, out).matrix)
    scale = max(np.linalg.norm(img), np.linalg.norm(E) * np.sqrt(2.0 ** (basis.n - 1)))
    if resid > tol * max(scale, 1e-300):
        raise NotInCpin(f"twisted adjoint leaves V + V* (residual {resid:.2e})")
    return out


def ad_tilde(g: CliffordElement, E: np.ndarray, tol: float = AD_TOL) -> np.ndarray:
    """Twisted adjoint ``tilde(g)^{-1} E g`` as a vector of V + V*.

    Raises :class:`NotInCpin` when the image leaves V + V*.
    """
    ginv_t = involution_tilde(g).inverse().matrix
    return _ad_image(ginv_t, g.matrix, g.basis, np.asarray(E), tol)


def ad_tilde_matrix(g: CliffordElement, tol: float = AD_TOL) -> np.ndarray:
    """Matrix of ``E -> Ad_g(E)`` on V + V*."""
    ginv_t = involution_tilde(g).inverse().matrix
    eye = np.eye(2 * g.n)
    return np.stack([_ad_image(ginv_t, g.matrix, g.basis, eye[k], tol) for k in range(2 * g.n)], axis=1)


@dataclass(frozen=True)
class Membership:
    cpin: bool
    pin: bool
    spin: bool
    spin0: bool
    norm2: complex | None

    def to_json(self) -> dict:
        v = self.norm2
        return {
            "cpin": self.cpin,
            "pin": self.pin,
            "spin": self.spin,
            "spin0": self.spin0,
            "norm2": None if v is None else float(np.real(v)),
        }


def group_membership(g: CliffordElement, tol: float = 1e-9) -> Membership:
    g.inverse()  # raises SingularElement
    try:
        ad_tilde_matrix(g, tol)
        cpin = True
    except NotInCpin:
        cpin = False
    nrm = clifford_norm2(g, tol)
    pin = cpin and nrm.is_scalar and abs(abs(nrm.value) - 1) < tol and abs(np.imag(nrm.value)) < tol
    spin = pin and _parity_part(g.matrix, odd=True).max(initial=0.0) <= tol * np.abs(g.matrix).max()
    spin0 = spin and abs(nrm.value - 1) < tol
    return Membership(cpin, bool(pin), bool(spin), bool(spin0), nrm.value)


# so(V + V*) <-> CL^2 ------------------------------------------------------


def generator_matrices(n: int) -> tuple[np.ndarray, ...]:
    """Spin matrices of ``v_1..v_n, e^1..e^n`` in vector-coordinate order."""
    return tuple(interior_generator(n, i) for i in range(n)) + tuple(wedge_generator(n, i) for i in range(n))


@lru_cache(maxsize=None)
def _wedge_entries(n: int, i: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    rows, cols = np.nonzero(wedge_generator(n, i))
    return rows, cols, wedge_generator(n, i)[rows, cols]


def vector_coords(mat: np.ndarray) -> np.ndarray:
    """Coordinates of the V + V* component of a spin matrix (Frobenius projection)."""
    size = mat.shape[0]
    n = size.bit_length() - 1
    half = 2.0 ** (n - 1)
    out = np.zeros(2 * n, dtype=np.result_type(mat, float))
    for i in range(n):
        rows, cols, signs = _wedge_entries(n, i)
        # iota_i and eps_i are Frobenius-orthogonal with squared norm 2^{n-1}
        out[i] = signs @ mat[cols, rows] / half
        out[n + i] = signs @ mat[rows, cols] / half
    return out


@lru_cache(maxsize=None)
def cl2_adjoint_matrices(n: int) -> np.ndarray:
    """``M[a]`` is the matrix of ``E -> [X_a, E]`` on V + V* for each CL^2 basis element."""
    gens = [sp.csr_matrix(g) for g in generator_matrices(n)]
    out = np.zeros((cl2_dim(n), 2 * n, 2 * n))
    for a, X in enumerate(cl2_basis(n)):
        if a == 0:
            continue
        for k, g in enumerate(gens):
            out[a, :, k] = vector_coords((X @ g - g @ X).toarray())
    out.setflags(write=False)
    return out


def so_to_cl2(A: np.ndarray, tol: float = 1e-9) -> CL2Element:
    """The scalar-free CL^2 element whose commutator action on V + V* is ``A``."""
    A = np.asarray(A)
    n = A.shape[0] // 2
    M = cl2_adjoint_matrices(n)[1:].reshape(cl2_dim(n) - 1, -1).T
    x, *_ = np.linalg.lstsq(M, A.reshape(-1), rcond=None)
    resid = np.linalg.norm(M @ x - A.reshape(-1))
    if resid > tol * max(1.0, np.linalg.norm(A)):
        raise ValueError(f"matrix is not in so(V + V*) (residual {resid:.2e})")
    return CL2Element.from_vector(n, np.concatenate([[0.0], x]))


def cl2_adjoint(a: CL2Element) -> np.ndarray:
    """Matrix of ``E -> [a, E]`` on V + V*."""
    return np.tensordot(a.to_vector(), cl2_adjoint_matrices(a.n), axes=1)
