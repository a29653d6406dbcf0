"""Exterior algebra over V* with monomials encoded as subset bitmasks.

Bit ``i`` of a mask stands for the basis covector ``e^{i+1}``; a monomial is
always read in ascending index order.  Coefficients are stored densely (a
vector of length ``2**n``), which is cheap for the dimensions this package
works in (n <= 8).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

__all__ = [
    "Basis",
    "BasisMismatch",
    "Multivector",
    "FormTuple",
    "wedge",
    "interior",
    "hodge_star",
    "pullback",
    "grade_projection",
    "inner",
    "grade",
    "mask_of",
    "star_matrix",
    "left_wedge_matrix",
    "interior_matrix",
    "compound",
    "pullback_matrix",
    "metric_gram",
    "wedge_generator",
    "interior_generator",
    "wedge_sign_table",
    "indices_of",
]

TOL = 1e-10


class BasisMismatch(ValueError):
    pass


def grade(mask: int) -> int:
    return int(mask).bit_count()


def mask_of(indices: Iterable[int]) -> int:
    """Mask of a monomial given 1-based labels, e.g. ``(1, 3) -> 0b101``."""
    m = 0
    for i in indices:
        if i < 1:
            raise ValueError(f"labels are 1-based, got {i}")
        if m >> (i - 1) & 1:
            raise ValueError(f"repeated label {i}")
        m |= 1 << (i - 1)
    return m


def indices_of(mask: int) -> tuple[int, ...]:
    return tuple(i + 1 for i in range(mask.bit_length()) if mask >> i & 1)


@lru_cache(maxsize=None)
def _grades(n: int) -> np.ndarray:
    return np.array([grade(m) for m in range(1 << n)], dtype=np.int64)


@lru_cache(maxsize=None)
def wedge_sign_table(n: int) -> np.ndarray:
    """``T[a, b]`` = sign of ``e^a ^ e^b`` relative to ``e^(a|b)``; 0 if they overlap."""
    size = 1 << n
    a = np.arange(size)[:, None]
    b = np.arange(size)[None, :]
    swaps = np.zeros((size, size), dtype=np.int64)
    for j in range(n):
        # each bit j of b passes every bit of a above j
        above = _grades(n)[(np.arange(size) >> (j + 1))][:, None]
        swaps += np.where((b >> j) & 1, above, 0)
    sign = np.where(swaps % 2 == 0, 1, -1).astype(np.int8)
    sign[(a & b) != 0] = 0
    sign.setflags(write=False)
    return sign


@lru_cache(maxsize=None)
def wedge_generator(n: int, i: int) -> np.ndarray:
    """Matrix of ``e^{i+1} ^ .`` on the dense coefficient vector."""
    size = 1 << n
    mat = np.zeros((size, size))
    bit = 1 << i
    below = bit - 1
    for k in range(size):
        if not k & bit:
            mat[k | bit, k] = -1.0 if grade(k & below) % 2 else 1.0
    mat.setflags(write=False)
    return mat


@lru_cache(maxsize=None)
def interior_generator(n: int, i: int) -> np.ndarray:
    """Matrix of ``i_{v_{i+1}}``; the transpose of :func:`wedge_generator`."""
    mat = wedge_generator(n, i).T.copy()
    mat.setflags(write=False)
    return mat


@dataclass(frozen=True)
class Basis:
    """A basis ``v_1..v_n`` of V with dual ``e^1..e^n``, oriented by ``e^{1..n}``."""

    n: int
    metric: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("dimension must be positive")
        if self.metric is not None:
            g = np.asarray(self.metric, dtype=float)
            if g.shape != (self.n, self.n):
                raise ValueError("metric must be n x n")
            if not np.allclose(g, g.T, atol=1e-12):
                raise ValueError("metric must be symmetric")
            if np.linalg.eigvalsh(g).min() <= 0:
                raise ValueError("metric must be positive definite")
            g = g.copy()
            g.setflags(write=False)
            object.__setattr__(self, "metric", g)

    @property
    def size(self) -> int:
        return 1 << self.n

    @property
    def g(self) -> np.ndarray:
        return np.eye(self.n) if self.metric is None else self.metric

    @property
    def euclidean(self) -> bool:
        return self.metric is None or np.array_equal(self.metric, np.eye(self.n))

    def compatible(self, other: "Basis") -> bool:
        return self.n == other.n and np.array_equal(self.g, other.g)

    def top(self) -> int:
        return (1 << self.n) - 1


def _check(a: "Multivector", b: "Multivector") -> None:
    if not a.basis.compatible(b.basis):
        raise BasisMismatch(f"basis mismatch: n={a.basis.n} vs n={b.basis.n}")


@dataclass(frozen=True, eq=False)
class Multivector:
    """Element of the exterior algebra of V*, stored as a dense coefficient vector."""

    basis: Basis
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs)
        if c.dtype.kind not in "fc":
            c = c.astype(float)
        if c.shape != (self.basis.size,):
            raise ValueError(f"expected {self.basis.size} coefficients, got {c.shape}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # construction -----------------------------------------------------

    @classmethod
    def zero(cls, basis: Basis, dtype=float) -> "Multivector":
        return cls(basis, np.zeros(basis.size, dtype=dtype))

    @classmethod
    def scalar(cls, basis: Basis, value: complex = 1.0) -> "Multivector":
        c = np.zeros(basis.size, dtype=complex if np.iscomplexobj(value) else float)
        c[0] = value
        return cls(basis, c)

    @classmethod
    def monomial(cls, basis: Basis, *labels: int, coeff: complex = 1.0) -> "Multivector":
        """Wedge e^{l1} ^ ... ^ e^{lk} of 1-based labels, in the given order."""
        c = np.zeros(basis.size, dtype=complex if isinstance(coeff, complex) else float)
        if len(set(labels)) < len(labels):
            return cls(basis, c)
        inversions = sum(a > b for i, a in enumerate(labels) for b in labels[i + 1 :])
        c[mask_of(labels)] = coeff * (-1) ** inversions
        return cls(basis, c)

    @classmethod
    def from_terms(cls, basis: Basis, terms: Mapping[int, complex]) -> "Multivector":
        vals = list(terms.values())
        dtype = complex if any(isinstance(v, complex) or np.iscomplexobj(v) for v in vals) else float
        c = np.zeros(basis.size, dtype=dtype)
        for k, v in terms.items():
            c[k] += v
        return cls(basis, c)

    @classmethod
    def one_form(cls, basis: Basis, vec: Sequence[complex]) -> "Multivector":
        vec = np.asarray(vec)
        c = np.zeros(basis.size, dtype=vec.dtype if vec.dtype.kind == "c" else float)
        for i in range(basis.n):
            c[1 << i] = vec[i]
        return cls(basis, c)

    @classmethod
    def two_form(cls, basis: Basis, mat: np.ndarray) -> "Multivector":
        """2-form sum_{i<j} b_ij e^{ij} from an antisymmetric array ``b``."""
        mat = np.asarray(mat)
        c = np.zeros(basis.size, dtype=mat.dtype if mat.dtype.kind == "c" else float)
        for i in range(basis.n):
            for j in range(i + 1, basis.n):
                c[(1 << i) | (1 << j)] = mat[i, j]
        return cls(basis, c)

    def two_form_matrix(self) -> np.ndarray:
        n = self.basis.n
        out = np.zeros((n, n), dtype=self.coeffs.dtype)
        for i in range(n):
            for j in range(i + 1, n):
                out[i, j] = self.coeffs[(1 << i) | (1 << j)]
                out[j, i] = -out[i, j]
        return out

    # views --------------------------------------------------------------

    @property
    def n(self) -> int:
        return self.basis.n

    def terms(self, tol: float = 0.0) -> dict[int, complex]:
        return {int(k): self.coeffs[k] for k in np.flatnonzero(np.abs(self.coeffs) > tol)}

    def __getitem__(self, labels) -> complex:
        if isinstance(labels, int):
            labels = (labels,)
        return self.coeffs[mask_of(labels)]

    def grade_part(self, k: int) -> "Multivector":
        return grade_projection(self, k)

    def grades(self, tol: float = TOL) -> set[int]:
        return {grade(k) for k in self.terms(tol)}

    @property
    def is_real(self) -> bool:
        return self.coeffs.dtype.kind != "c" or bool(np.all(self.coeffs.imag == 0))

    @property
    def real(self) -> "Multivector":
        return Multivector(self.basis, self.coeffs.real)

    @property
    def imag(self) -> "Multivector":
        return Multivector(self.basis, self.coeffs.imag if self.coeffs.dtype.kind == "c" else np.zeros(self.basis.size))

    def conj(self) -> "Multivector":
        return Multivector(self.basis, np.conj(self.coeffs))

    def norm(self) -> float:
        return float(np.sqrt(np.real(inner(self, self.conj()))))

    # arithmetic ---------------------------------------------------------

    def __add__(self, other: "Multivector") -> "Multivector":
        if isinstance(other, (int, float, complex)):
            return self + Multivector.scalar(self.basis, other)
        _check(self, other)
        return Multivector(self.basis, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __neg__(self) -> "Multivector":
        return Multivector(self.basis, -self.coeffs)

    def __sub__(self, other: "Multivector") -> "Multivector":
        return self + (-other)

    def __rsub__(self, other) -> "Multivector":
        return (-self) + other

    def __mul__(self, s) -> "Multivector":
        if isinstance(s, Multivector):
            return wedge(self, s)
        return Multivector(self.basis, self.coeffs * s)

    def __rmul__(self, s) -> "Multivector":
        return Multivector(self.basis, self.coeffs * s)

    def __truediv__(self, s) -> "Multivector":
        return Multivector(self.basis, self.coeffs / s)

    def __xor__(self, other: "Multivector") -> "Multivector":
        return wedge(self, other)

    def allclose(self, other: "Multivector", atol: float = TOL) -> bool:
        _check(self, other)
        return bool(np.allclose(self.coeffs, other.coeffs, atol=atol, rtol=0))

    def __repr__(self) -> str:
        parts = []
        for k, v in self.terms(1e-14).items():
            label = "1" if k == 0 else "e" + "".join(str(i) for i in indices_of(k))
            parts.append(f"{v:+.6g}*{label}")
        return f"Multivector(n={self.n}: {' '.join(parts) or '0'})"

    # serialization ----------------------------------------------------------

    def to_json(self) -> dict:
        terms = []
        for k in np.flatnonzero(self.coeffs != 0):
            v = complex(self.coeffs[k])
            terms.append({"monomial": list(indices_of(int(k))), "re": v.real, "im": v.imag})
        return {"n": self.n, "terms": terms}

    @classmethod
    def from_json(cls, data: Mapping, basis: Basis | None = None) -> "Multivector":
        basis = basis or Basis(int(data["n"]))
        if basis.n != int(data["n"]):
            raise BasisMismatch("json dimension does not match basis")
        cplx = any(float(t.get("im", 0.0)) != 0.0 for t in data["terms"])
        c = np.zeros(basis.size, dtype=complex if cplx else float)
        for t in data["terms"]:
            c[mask_of(t["monomial"])] = complex(t["re"], t.get("im", 0.0)) if cplx else float(t["re"])
        return cls(basis, c)


def wedge(a: Multivector, b: Multivector) -> Multivector:
    _check(a, b)
    n = a.n
    table = wedge_sign_table(n)
    dtype = np.result_type(a.coeffs, b.coeffs)
    out = np.zeros(a.basis.size, dtype=dtype)
    idx = np.arange(a.basis.size)
    nz_b = np.flatnonzero(b.coeffs)
    for k in np.flatnonzero(a.coeffs):
        s = table[k, nz_b]
        ok = s != 0
        np.add.at(out, k | idx[nz_b[ok]], a.coeffs[k] * s[ok] * b.coeffs[nz_b[ok]])
    return Multivector(a.basis, out)


def left_wedge_matrix(a: Multivector) -> np.ndarray:
    """Matrix of ``a ^ .`` acting on coefficient vectors."""
    n = a.n
    size = a.basis.size
    table = wedge_sign_table(n)
    mat = np.zeros((size, size), dtype=a.coeffs.dtype)
    cols = np.arange(size)
    for k in np.flatnonzero(a.coeffs):
        s = table[k]
        ok = s != 0
        np.add.at(mat, (k | cols[ok], cols[ok]), a.coeffs[k] * s[ok])
    return mat


def interior_matrix(n: int, v: Sequence[complex]) -> np.ndarray:
    v = np.asarray(v)
    mat = np.zeros((1 << n, 1 << n), dtype=np.result_type(v, float))
    for i in range(n):
        if v[i] != 0:
            mat = mat + v[i] * interior_generator(n, i)
    return mat


def interior(v: Sequence[complex], a: Multivector) -> Multivector:
    """Contraction ``i_v a`` with a vector given by its coefficients in v_1..v_n."""
    v = np.asarray(v)
    if v.shape != (a.n,):
        raise BasisMismatch(f"vector of length {v.shape} for n={a.n}")
    return Multivector(a.basis, interior_matrix(a.n, v) @ a.coeffs)


def grade_projection(a: Multivector, k: int) -> Multivector:
    keep = _grades(a.n) == k
    return Multivector(a.basis, np.where(keep, a.coeffs, 0))


@lru_cache(maxsize=None)
def _subsets_by_grade(n: int) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(m for m in range(1 << n) if grade(m) == k) for k in range(n + 1))


def compound(mat: np.ndarray, n: int) -> np.ndarray:
    """Induced action on the exterior algebra of a 1-form coefficient map ``mat``.

    ``mat[j, i]`` is the coefficient of ``e^{j+1}`` in the image of ``e^{i+1}``;
    the result has entries ``det(mat[J, I])``.
    """
    size = 1 << n
    out = np.zeros((size, size), dtype=np.result_type(mat, float))
    out[0, 0] = 1.0
    for subsets in _subsets_by_grade(n)[1:]:
        idx = [np.array(indices_of(m)) - 1 for m in subsets]
        rows = np.stack(idx)
        blocks = mat[rows[:, None, :, None], rows[None, :, None, :]]
        out[np.ix_(subsets, subsets)] = np.linalg.det(blocks)
    return out


@lru_cache(maxsize=16)
def _star_matrix(n: int, metric_bytes: bytes | None) -> np.ndarray:
    g = np.eye(n) if metric_bytes is None else np.frombuffer(metric_bytes).reshape(n, n)
    ginv = np.linalg.inv(g)
    gram = compound(ginv, n)
    top = (1 << n) - 1
    table = wedge_sign_table(n)
    size = 1 << n
    w = np.zeros((size, size))
    for i in range(size):
        w[i, top ^ i] = table[i, top ^ i]
    star = np.sqrt(np.linalg.det(g)) * (w.T @ gram)
    star.setflags(write=False)
    return star


def star_matrix(basis: Basis) -> np.ndarray:
    """Matrix of the Hodge star, fixed by ``a ^ *b = <a, b> vol_g``."""
    key = None if basis.euclidean else np.ascontiguousarray(basis.g, dtype=float).tobytes()
    return _star_matrix(basis.n, key)


def hodge_star(a: Multivector) -> Multivector:
    return Multivector(a.basis, star_matrix(a.basis) @ a.coeffs)


def metric_gram(basis: Basis) -> np.ndarray:
    """Gram matrix of the induced inner product on the exterior algebra."""
    return compound(np.linalg.inv(basis.g), basis.n)


def inner(a: Multivector, b: Multivector) -> complex:
    """Bilinear (not sesquilinear) induced pairing of two multivectors."""
    _check(a, b)
    if a.basis.euclidean:
        return a.coeffs @ b.coeffs
    return a.coeffs @ metric_gram(a.basis) @ b.coeffs


def pullback_matrix(g: np.ndarray, n: int) -> np.ndarray:
    """Matrix of the pullback ``g^*`` on the exterior algebra: ``(g^* eta)(v) = eta(g v)``."""
    g = np.asarray(g)
    if g.shape != (n, n):
        raise ValueError("g must be n x n")
    if abs(np.linalg.det(g)) < 1e-14 * max(1.0, np.abs(g).max() ** n):
        raise np.linalg.LinAlgError("singular linear map")
    # g^* e^i = sum_j g[i, j] e^j, so the 1-form coefficient map is g^T
    return compound(g.T, n)


def pullback(g: np.ndarray, a: Multivector) -> Multivector:
    """Pullback of ``a`` along the linear map ``g`` of V (an algebra map of the exterior algebra)."""
    return Multivector(a.basis, pullback_matrix(g, a.n) @ a.coeffs)


@dataclass(frozen=True, eq=False)
class FormTuple:
    """A tuple of multivectors over one basis.

    When ``reality`` is set, complex components stand for pairs of real forms
    (real and imaginary parts); :meth:`split` produces that real view.
    """

    components: tuple[Multivector, ...]
    reality: bool = False

    def __post_init__(self) -> None:
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a FormTuple needs at least one component")
        for c in comps[1:]:
            _check(comps[0], c)
        object.__setattr__(self, "components", comps)

    @classmethod
    def of(cls, *components: Multivector, reality: bool = False) -> "FormTuple":
        return cls(tuple(components), reality)

    @classmethod
    def from_array(cls, basis: Basis, arr: np.ndarray, reality: bool = False) -> "FormTuple":
        arr = np.atleast_2d(np.asarray(arr))
        return cls(tuple(Multivector(basis, row) for row in arr), reality)

    @property
    def basis(self) -> Basis:
        return self.components[0].basis

    @property
    def n(self) -> int:
        return self.basis.n

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self) -> Iterator[Multivector]:
        return iter(self.components)

    def __getitem__(self, i: int) -> Multivector:
        return self.components[i]

    @property
    def array(self) -> np.ndarray:
        return np.stack([c.coeffs for c in self.components])

    @property
    def is_real(self) -> bool:
        return all(c.is_real for c in self.components)

    def split(self) -> "FormTuple":
        """Real view: each component ``c`` becomes ``(Re c, Im c)``; real tuples pass through."""
        if self.is_real and not self.reality:
            return FormTuple(tuple(c.real for c in self.components))
        comps = []
        for c in self.components:
            comps.extend([c.real, c.imag])
        return FormTuple(tuple(comps))

    def conj(self) -> "FormTuple":
        return FormTuple(tuple(c.conj() for c in self.components), self.reality)

    def map(self, fn) -> "FormTuple":
        return FormTuple(tuple(fn(c) for c in self.components), self.reality)

    def __add__(self, other: "FormTuple") -> "FormTuple":
        if len(other) != len(self):
            raise ValueError("tuple lengths differ")
        return FormTuple(tuple(a + b for a, b in zip(self, other)), self.reality)

    def __sub__(self, other: "FormTuple") -> "FormTuple":
        return self + other * -1

    def __mul__(self, s) -> "FormTuple":
        return FormTuple(tuple(c * s for c in self.components), self.reality)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(np.linalg.norm(self.array))

    def allclose(self, other: "FormTuple", atol: float = TOL) -> bool:
        return len(self) == len(other) and all(a.allclose(b, atol) for a, b in zip(self, other))

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "reality": self.reality,
            "components": [c.to_json() for c in self.components],
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "FormTuple":
        basis = Basis(int(data["n"]))
        comps = tuple(Multivector.from_json(c, basis) for c in data["components"])
        return cls(comps, bool(data.get("reality", False)))

    def dumps(self) -> str:
        return json.dumps(self.to_json())
