"""Fourier-series forms and Clifford fields on the flat torus ``R^n / Z^n``."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Iterable, Mapping

import numpy as np

from ..clifford import cl2_basis, cl2_dim, generator_matrices
from ..multivector import Basis, FormTuple, Multivector, wedge_generator, wedge_sign_table

__all__ = [
    "TruncationTooSmall",
    "FourierForm",
    "FourierField",
    "FourierCL1Field",
    "FourierCL2Field",
    "frequency_grid",
    "dform",
    "covector_wedge",
    "apply_field",
    "fourier_wedge",
    "sup_norm",
]

Freq = tuple[int, ...]


class TruncationTooSmall(ValueError):
    """A product would create frequencies beyond the truncation ``|m|_inf <= N``."""


def sup_norm(m: Iterable[int]) -> int:
    return max((abs(int(x)) for x in m), default=0)


def frequency_grid(n: int, trunc: int, active: Iterable[int] | None = None) -> list[Freq]:
    """All frequencies with ``|m|_inf <= trunc`` supported on the ``active`` coordinates."""
    active = tuple(range(n)) if active is None else tuple(sorted(set(active)))
    out = []
    for vals in product(range(-trunc, trunc + 1), repeat=len(active)):
        m = [0] * n
        for j, v in zip(active, vals):
            m[j] = v
        out.append(tuple(m))
    return out


def _key(m) -> Freq:
    return tuple(int(x) for x in m)


def _neg(m: Freq) -> Freq:
    return tuple(-x for x in m)


@lru_cache(maxsize=None)
def covector_wedge_cached(n: int, m: Freq) -> np.ndarray:
    out = np.zeros((1 << n, 1 << n))
    for j, mj in enumerate(m):
        if mj:
            out += mj * wedge_generator(n, j)
    out.setflags(write=False)
    return out


def covector_wedge(n: int, m) -> np.ndarray:
    """Matrix of ``alpha -> (sum_j m_j e^j) ^ alpha``."""
    return covector_wedge_cached(n, _key(m))


@dataclass(eq=False)
class FourierForm:
    """Sparse Fourier series of a tuple of forms; absent frequencies are zero.

    ``coeffs[m]`` has shape ``(ncomp, 2^n)``. With ``reality`` set the series
    represents real forms, so ``coeffs[-m] = conj(coeffs[m])``.
    """

    basis: Basis
    trunc: int
    coeffs: dict[Freq, np.ndarray] = field(default_factory=dict)
    reality: bool = True
    ncomp: int = 1

    def __post_init__(self) -> None:
        clean = {}
        for m, c in self.coeffs.items():
            m = _key(m)
            if len(m) != self.n:
                raise ValueError(f"frequency {m} has the wrong length")
            if sup_norm(m) > self.trunc:
                raise TruncationTooSmall(f"frequency {m} exceeds truncation {self.trunc}")
            c = np.asarray(c, dtype=complex).reshape(self.ncomp, -1)
            if c.shape[1] != self.basis.size:
                raise ValueError("coefficient has the wrong size")
            clean[m] = c
        self.coeffs = clean

    @property
    def n(self) -> int:
        return self.basis.n

    @classmethod
    def zero(cls, basis: Basis, trunc: int, ncomp: int = 1, reality: bool = True) -> "FourierForm":
        return cls(basis, trunc, {}, reality, ncomp)

    @classmethod
    def constant(cls, phi: FormTuple, trunc: int) -> "FourierForm":
        arr = phi.array.astype(complex)
        return cls(phi.basis, trunc, {(0,) * phi.n: arr}, phi.is_real, len(phi))

    @classmethod
    def single_mode(cls, coeff: np.ndarray, m, trunc: int, basis: Basis) -> "FourierForm":
        """The real series ``c e^{2 pi i m.x} + conj(c) e^{-2 pi i m.x}``."""
        c = np.atleast_2d(np.asarray(coeff, dtype=complex))
        m = _key(m)
        if not any(m):
            return cls(basis, trunc, {m: 2 * c.real.astype(complex)}, True, c.shape[0])
        return cls(basis, trunc, {m: c, _neg(m): c.conj()}, True, c.shape[0])

    @classmethod
    def random(
        cls,
        basis: Basis,
        trunc: int,
        rng: np.random.Generator,
        ncomp: int = 1,
        modes: int | None = None,
        grades: Iterable[int] | None = None,
    ) -> "FourierForm":
        """Random real series on ``modes`` random frequencies (all of them when ``None``)."""
        freqs = frequency_grid(basis.n, trunc)
        if modes is not None:
            pick = rng.choice(len(freqs), size=min(modes, len(freqs)), replace=False)
            freqs = [freqs[i] for i in sorted(pick)]
        mask = np.ones(basis.size, dtype=bool)
        if grades is not None:
            g = set(grades)
            mask = np.array([bin(k).count("1") in g for k in range(basis.size)])
        out = cls.zero(basis, trunc, ncomp)
        for m in freqs:
            c = (rng.normal(size=(ncomp, basis.size)) + 1j * rng.normal(size=(ncomp, basis.size))) * mask
            out = out + cls.single_mode(c, m, trunc, basis)
        return out

    def frequencies(self) -> list[Freq]:
        return sorted(self.coeffs)

    def coeff(self, m) -> np.ndarray:
        c = self.coeffs.get(_key(m))
        return np.zeros((self.ncomp, self.basis.size), dtype=complex) if c is None else c

    def support(self) -> int:
        return max((sup_norm(m) for m, c in self.coeffs.items() if np.any(c)), default=0)

    def _like(self, coeffs: dict, reality: bool | None = None) -> "FourierForm":
        return FourierForm(self.basis, self.trunc, coeffs, self.reality if reality is None else reality, self.ncomp)

    def _check(self, other: "FourierForm") -> None:
        if other.n != self.n or other.ncomp != self.ncomp:
            raise ValueError("Fourier forms over different fibers")

    def __add__(self, other: "FourierForm") -> "FourierForm":
        self._check(other)
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out[m] + c if m in out else c
        return FourierForm(self.basis, max(self.trunc, other.trunc), out, self.reality and other.reality, self.ncomp)

    def __neg__(self) -> "FourierForm":
        return self._like({m: -c for m, c in self.coeffs.items()})

    def __sub__(self, other: "FourierForm") -> "FourierForm":
        return self + (-other)

    def __mul__(self, s) -> "FourierForm":
        real = self.reality and np.isreal(s)
        return self._like({m: s * c for m, c in self.coeffs.items()}, real)

    __rmul__ = __mul__

    def __truediv__(self, s) -> "FourierForm":
        return self * (1.0 / s)

    def norm(self) -> float:
        """L2 norm on the unit torus (Parseval)."""
        return float(np.sqrt(sum(np.vdot(c, c).real for c in self.coeffs.values())))

    def map_coeffs(self, fn, reality: bool | None = None) -> "FourierForm":
        return self._like({m: fn(m, c) for m, c in self.coeffs.items()}, reality)

    def apply_matrix(self, mat: np.ndarray) -> "FourierForm":
        """Apply a constant fiber operator to every coefficient."""
        real = self.reality and np.isrealobj(mat)
        return self._like({m: c @ mat.T for m, c in self.coeffs.items()}, real)

    def reality_residual(self) -> float:
        worst = 0.0
        for m, c in self.coeffs.items():
            worst = max(worst, float(np.abs(c - self.coeff(_neg(m)).conj()).max(initial=0.0)))
        return worst

    def mode_zero(self) -> FormTuple:
        c = self.coeff((0,) * self.n)
        if self.reality:
            c = c.real
        return FormTuple.from_array(self.basis, c)

    def pruned(self, atol: float = 0.0) -> "FourierForm":
        return self._like({m: c for m, c in self.coeffs.items() if np.abs(c).max(initial=0.0) > atol})

    def with_trunc(self, trunc: int) -> "FourierForm":
        return FourierForm(self.basis, trunc, self.coeffs, self.reality, self.ncomp)

    def allclose(self, other: "FourierForm", atol: float = 1e-10) -> bool:
        return (self - other).norm() <= atol

    def to_json(self) -> dict:
        modes = []
        for m in self.frequencies():
            c = self.coeffs[m]
            modes.append({"m": list(m), "re": c.real.tolist(), "im": c.imag.tolist()})
        return {"n": self.n, "trunc": self.trunc, "ncomp": self.ncomp, "reality": self.reality, "modes": modes}

    @classmethod
    def from_json(cls, data: Mapping) -> "FourierForm":
        basis = Basis(int(data["n"]))
        coeffs = {_key(e["m"]): np.asarray(e["re"]) + 1j * np.asarray(e["im"]) for e in data["modes"]}
        return cls(basis, int(data["trunc"]), coeffs, bool(data.get("reality", True)), int(data.get("ncomp", 1)))


def dform(omega: FourierForm) -> FourierForm:
    """Exterior derivative: ``alpha e^{2 pi i m.x} -> 2 pi i (m_j e^j) ^ alpha``."""
    n = omega.n
    out = {}
    for m, c in omega.coeffs.items():
        if any(m):
            out[m] = 2j * np.pi * (c @ covector_wedge(n, m).T)
    return omega._like(out)


# Clifford fields ------------------------------------------------------------------


@lru_cache(maxsize=None)
def _basis_tensor(n: int, kind: str) -> np.ndarray:
    if kind == "cl2":
        mats = [m.toarray() for m in cl2_basis(n)]
    else:
        mats = list(generator_matrices(n))
    out = np.stack(mats)
    out.setflags(write=False)
    return out


@dataclass(eq=False)
class FourierField:
    """Fourier series with coefficients in CL^1 = V + V* or CL^2 (complexified)."""

    n: int
    trunc: int
    coeffs: dict[Freq, np.ndarray] = field(default_factory=dict)
    kind: str = "cl2"
    reality: bool = True

    def __post_init__(self) -> None:
        if self.kind not in ("cl1", "cl2"):
            raise ValueError("kind must be 'cl1' or 'cl2'")
        dim = self.dim
        clean = {}
        for m, c in self.coeffs.items():
            m = _key(m)
            if len(m) != self.n:
                raise ValueError(f"frequency {m} has the wrong length")
            if sup_norm(m) > self.trunc:
                raise TruncationTooSmall(f"frequency {m} exceeds truncation {self.trunc}")
            c = np.asarray(c, dtype=complex).reshape(-1)
            if c.shape != (dim,):
                raise ValueError(f"expected {dim} coordinates per frequency")
            clean[m] = c
        self.coeffs = clean
        self._mats: dict[Freq, np.ndarray] = {}

    @property
    def dim(self) -> int:
        return cl2_dim(self.n) if self.kind == "cl2" else 2 * self.n

    @classmethod
    def zero(cls, n: int, trunc: int) -> "FourierField":
        return cls(n, trunc, {})

    @classmethod
    def constant(cls, n: int, trunc: int, vec: np.ndarray) -> "FourierField":
        return cls(n, trunc, {(0,) * n: np.asarray(vec)})

    @classmethod
    def single_mode(cls, n: int, trunc: int, m, vec: np.ndarray) -> "FourierField":
        m = _key(m)
        vec = np.asarray(vec, dtype=complex)
        if not any(m):
            return cls(n, trunc, {m: 2 * vec.real})
        return cls(n, trunc, {m: vec, _neg(m): vec.conj()})

    def frequencies(self) -> list[Freq]:
        return sorted(self.coeffs)

    def support(self) -> int:
        return max((sup_norm(m) for m, c in self.coeffs.items() if np.any(c)), default=0)

    def active_coordinates(self) -> set[int]:
        return {j for m, c in self.coeffs.items() if np.any(c) for j, x in enumerate(m) if x}

    def is_constant(self) -> bool:
        return all(not any(m) for m, c in self.coeffs.items() if np.any(c))

    def matrix(self, m) -> np.ndarray:
        """Spin matrix of the coefficient at frequency ``m``."""
        m = _key(m)
        if m not in self._mats:
            c = self.coeffs.get(m)
            size = 1 << self.n
            if c is None:
                return np.zeros((size, size), dtype=complex)
            self._mats[m] = np.tensordot(c, _basis_tensor(self.n, self.kind), axes=1)
        return self._mats[m]

    def __add__(self, other: "FourierField") -> "FourierField":
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out[m] + c if m in out else c
        return type(self)(self.n, max(self.trunc, other.trunc), out, self.kind, self.reality and other.reality)

    def __mul__(self, s) -> "FourierField":
        return type(self)(self.n, self.trunc, {m: s * c for m, c in self.coeffs.items()}, self.kind, self.reality and np.isreal(s))

    __rmul__ = __mul__

    def __neg__(self) -> "FourierField":
        return self * -1.0

    def norm(self) -> float:
        return float(np.sqrt(sum(np.vdot(c, c).real for c in self.coeffs.values())))

    def reality_residual(self) -> float:
        worst = 0.0
        for m, c in self.coeffs.items():
            other = self.coeffs.get(_neg(m), np.zeros_like(c))
            worst = max(worst, float(np.abs(c - other.conj()).max(initial=0.0)))
        return worst

    def to_json(self) -> dict:
        modes = [
            {"m": list(m), "re": self.coeffs[m].real.tolist(), "im": self.coeffs[m].imag.tolist()}
            for m in self.frequencies()
        ]
        return {"n": self.n, "kind": self.kind, "trunc": self.trunc, "modes": modes}

    @classmethod
    def from_json(cls, data: Mapping, n: int | None = None) -> "FourierField":
        modes = data.get("modes", [])
        if n is None:
            n = int(data["n"]) if "n" in data else len(modes[0]["m"])
        coeffs = {_key(e["m"]): np.asarray(e["re"], float) + 1j * np.asarray(e.get("im", 0.0), float) for e in modes}
        return cls(n, int(data["trunc"]), coeffs, data.get("kind", cls._default_kind))

    _default_kind = "cl2"

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


class FourierCL2Field(FourierField):
    """CL^2-valued field: coordinates in the standard CL^2 basis at each frequency."""

    def __init__(self, n: int, trunc: int, coeffs=None, kind: str = "cl2", reality: bool = True) -> None:
        super().__init__(n, trunc, dict(coeffs or {}), "cl2", reality)


class FourierCL1Field(FourierField):
    """(V + V*)-valued field, coordinates ``(v, eta)`` at each frequency."""

    _default_kind = "cl1"

    def __init__(self, n: int, trunc: int, coeffs=None, kind: str = "cl1", reality: bool = True) -> None:
        super().__init__(n, trunc, dict(coeffs or {}), "cl1", reality)


def apply_field(a: FourierField, omega: FourierForm, trunc: int | None = None) -> FourierForm:
    """Pointwise Clifford action ``a . omega`` as a convolution of Fourier series.

    Raises :class:`TruncationTooSmall` instead of silently dropping modes beyond ``trunc``.
    """
    if a.n != omega.n:
        raise ValueError("field and form live over different tori")
    trunc = max(a.trunc, omega.trunc) if trunc is None else trunc
    out: dict[Freq, np.ndarray] = {}
    if not omega.coeffs:
        return FourierForm(omega.basis, trunc, {}, omega.reality and a.reality, omega.ncomp)
    keys = list(omega.coeffs)
    stack = np.stack([omega.coeffs[m] for m in keys])
    for m1 in a.frequencies():
        if not np.any(a.coeffs[m1]):
            continue
        prod = stack @ a.matrix(m1).T
        for m2, block in zip(keys, prod):
            m = tuple(x + y for x, y in zip(m1, m2))
            if sup_norm(m) > trunc:
                if np.any(block):
                    raise TruncationTooSmall(f"product reaches frequency {m} beyond truncation {trunc}")
                continue
            out[m] = out[m] + block if m in out else block
    return FourierForm(omega.basis, trunc, out, omega.reality and a.reality, omega.ncomp)


def fourier_wedge(alpha: FourierForm, beta: FourierForm, trunc: int | None = None) -> FourierForm:
    """Pointwise wedge of a single-component ``alpha`` into each component of ``beta``."""
    if alpha.ncomp != 1:
        raise ValueError("the left factor of fourier_wedge must have one component")
    n = alpha.n
    trunc = max(alpha.trunc, beta.trunc) if trunc is None else trunc
    size = 1 << n
    table = wedge_sign_table(n)
    idx = np.arange(size)
    out: dict[Freq, np.ndarray] = {}
    for m1, a in alpha.coeffs.items():
        # left multiplication by ``a`` as a matrix: (A b)[i | j] += table[i, j] a_i b_j
        A = np.zeros((size, size), dtype=complex)
        for i in np.nonzero(a[0])[0]:
            ok = (idx & i) == 0
            A[(i | idx)[ok], idx[ok]] += table[i, idx[ok]] * a[0, i]
        for m2, b in beta.coeffs.items():
            m = tuple(x + y for x, y in zip(m1, m2))
            block = b @ A.T
            if sup_norm(m) > trunc:
                if np.any(block):
                    raise TruncationTooSmall(f"product reaches frequency {m} beyond truncation {trunc}")
                continue
            out[m] = out[m] + block if m in out else block
    return FourierForm(alpha.basis, trunc, out, alpha.reality and beta.reality, beta.ncomp)
