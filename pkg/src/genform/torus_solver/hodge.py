"""Per-frequency Hodge theory of the deformation subcomplex on the flat torus."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..multivector import FormTuple
from ..orbit_analysis import FiberComplex, fiber_complex, symbol_matrices
from ..subspace import RANK_TOL, batched_ranks
from .fourier import Freq, covector_wedge, frequency_grid

__all__ = [
    "FrequencyHodge",
    "HodgePackage",
    "hodge_package",
    "de_rham_hodge",
    "TopologicalReport",
    "topological_check",
    "real_structure",
]

PINV_RCOND = 1e-10


def real_structure(phi: FormTuple) -> FormTuple:
    """Real tuple carrying the same information: complex components split into real and imaginary parts."""
    if phi.reality or not phi.is_real:
        return phi.split()
    return FormTuple(tuple(c.real for c in phi.components))


def _hermitian_pinv(mat: np.ndarray) -> np.ndarray:
    if mat.size == 0:
        return mat.copy()
    return np.linalg.pinv(mat, rcond=PINV_RCOND, hermitian=True)


@dataclass(eq=False)
class FrequencyHodge:
    """Differentials ``d_k(m)`` in orthonormal fiber coordinates, for ``k = lo .. hi - 1``.

    ``laplacian(k)``, ``green(k)`` and ``harmonic(k)`` are defined for ``lo <= k <= hi - 1``
    (the top fiber has no outgoing differential available).
    """

    m: Freq
    lo: int
    d: dict[int, np.ndarray]
    dims: dict[int, int]

    def dk(self, k: int) -> np.ndarray:
        if k in self.d:
            return self.d[k]
        rows = self.dims.get(k + 1, 0)
        cols = self.dims.get(k, 0)
        return np.zeros((rows, cols), dtype=complex)

    def adjoint(self, k: int) -> np.ndarray:
        return self.dk(k).conj().T

    @cached_property
    def _lap(self) -> dict[int, np.ndarray]:
        out = {}
        for k in sorted(self.d):
            out[k] = self.adjoint(k) @ self.dk(k) + self.dk(k - 1) @ self.adjoint(k - 1)
        return out

    def laplacian(self, k: int) -> np.ndarray:
        return self._lap[k]

    @cached_property
    def _green(self) -> dict[int, np.ndarray]:
        return {k: _hermitian_pinv(L) for k, L in self._lap.items()}

    def green(self, k: int) -> np.ndarray:
        return self._green[k]

    def harmonic(self, k: int) -> np.ndarray:
        dim = self.dims[k]
        return np.eye(dim) - self.laplacian(k) @ self.green(k)

    def identity_residual(self, k: int) -> float:
        L, G, P = self.laplacian(k), self.green(k), self.harmonic(k)
        res = L @ G + P - np.eye(self.dims[k])
        return float(np.abs(res).max(initial=0.0))

    def harmonic_dim(self, k: int) -> int:
        return int(round(np.trace(self.harmonic(k)).real))


@dataclass(eq=False)
class HodgePackage:
    """Fibers ``E^k`` of a constant structure with per-frequency Hodge data (cached)."""

    structure: FormTuple
    fibers: FiberComplex
    depth: int
    _cache: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.structure.n

    @property
    def ncomp(self) -> int:
        return len(self.structure)

    def Q(self, k: int) -> np.ndarray:
        return self.fibers.E(k).basis

    def dims(self) -> dict[int, int]:
        return {k: self.fibers.E(k).rank for k in range(-1, self.depth + 1)}

    def wedge_operator(self, m) -> np.ndarray:
        """``2 pi i m ^`` on the stacked real-tuple fiber (real coefficient matrix times ``2 pi i``)."""
        return 2j * np.pi * np.kron(np.eye(self.ncomp), covector_wedge(self.n, m))

    def at(self, m) -> FrequencyHodge:
        m = tuple(int(x) for x in m)
        if m not in self._cache:
            dims = self.dims()
            d = {}
            if any(m):
                op = np.kron(np.eye(self.ncomp), covector_wedge(self.n, m))
                for k in range(-1, self.depth):
                    d[k] = 2j * np.pi * (self.Q(k + 1).T @ op @ self.Q(k))
            else:
                for k in range(-1, self.depth):
                    d[k] = np.zeros((dims[k + 1], dims[k]), dtype=complex)
            self._cache[m] = FrequencyHodge(m, -1, d, dims)
        return self._cache[m]

    def to_fiber(self, k: int, vec: np.ndarray) -> np.ndarray:
        """Orthonormal coordinates of a (complexified) fiber vector in ``E^k``."""
        return self.Q(k).T @ vec

    def from_fiber(self, k: int, coords: np.ndarray) -> np.ndarray:
        return self.Q(k) @ coords

    def fiber_residual(self, k: int, vec: np.ndarray) -> float:
        """Distance of a complexified vector from ``E^k (x) C``."""
        Q = self.Q(k)
        return float(np.linalg.norm(vec - Q @ (Q.T @ vec)))


def hodge_package(phi: FormTuple, depth: int = 3, fibers: FiberComplex | None = None) -> HodgePackage:
    """Hodge package of the subcomplex ``E^{-1} -> ... -> E^{depth}`` of a constant structure."""
    real = real_structure(phi)
    fc = fibers if fibers is not None else fiber_complex(real, depth)
    return HodgePackage(real, fc, depth)


def de_rham_hodge(n: int, m) -> FrequencyHodge:
    """The full de Rham complex at frequency ``m`` (all of ``Lambda*`` as one graded fiber)."""
    size = 1 << n
    d = {0: 2j * np.pi * covector_wedge(n, m).astype(complex)}
    # a single self-map: the Laplacian is d d* + d* d
    hodge = FrequencyHodge(tuple(m), 0, {}, {0: size})
    D = d[0]
    hodge.__dict__["_lap"] = {0: D.conj().T @ D + D @ D.conj().T}
    return hodge


@dataclass(frozen=True)
class TopologicalReport:
    degrees: tuple[int, ...]
    frequencies: int
    zero_mode_dims: dict[int, int]
    max_cohomology: dict[int, int]
    failing: tuple[Freq, ...]

    @property
    def ok(self) -> bool:
        return not self.failing

    def to_json(self) -> dict:
        return {
            "degrees": list(self.degrees),
            "frequencies": self.frequencies,
            "zero_mode_dims": {str(k): v for k, v in self.zero_mode_dims.items()},
            "max_nonzero_mode_cohomology": {str(k): v for k, v in self.max_cohomology.items()},
            "failing": [list(m) for m in self.failing[:20]],
            "pass": self.ok,
        }


def topological_check(
    phi: FormTuple | None,
    trunc: int,
    degrees=(1, 2),
    frequencies=None,
    n: int | None = None,
    tol: float = 1e-8,
) -> TopologicalReport:
    """Per-frequency cohomology of the subcomplex at the given degrees.

    At ``m = 0`` the differentials vanish, so the cohomology is the whole fiber
    and the map to de Rham cohomology is the fiber inclusion. At ``m != 0`` the
    cohomology must vanish. ``phi=None`` runs the full de Rham complex on ``R^n``.
    """
    degrees = tuple(degrees)
    if phi is None:
        if n is None:
            raise ValueError("the de Rham check needs n")
        from math import comb

        freqs = frequency_grid(n, trunc) if frequencies is None else [tuple(int(x) for x in m) for m in frequencies]
        grade = np.array([bin(i).count("1") for i in range(1 << n)])
        worst = {k: 0 for k in degrees}
        for m in freqs:
            if not any(m):
                continue
            W = covector_wedge(n, m)
            for k in degrees:
                r_in = np.linalg.matrix_rank(W[np.ix_(grade == k, grade == k - 1)]) if k > 0 else 0
                r_out = np.linalg.matrix_rank(W[np.ix_(grade == k + 1, grade == k)])
                worst[k] = max(worst[k], comb(n, k) - r_in - r_out)
        zero = {k: comb(n, k) for k in degrees}
        # constant forms are all harmonic: the zero mode carries the whole fiber
        failing = tuple(m for m in freqs if not any(m))
        return TopologicalReport(degrees, len(freqs), zero, worst, failing)
    real = real_structure(phi)
    top = max(degrees)
    fc = fiber_complex(real, top + 1)
    freqs = frequency_grid(real.n, trunc) if frequencies is None else [tuple(int(x) for x in m) for m in frequencies]
    nonzero = np.array([m for m in freqs if any(m)], dtype=float).reshape(-1, real.n)
    mats = symbol_matrices(fc, top + 1)
    worst = {k: 0 for k in degrees}
    bad = np.zeros(len(nonzero), dtype=bool)
    if len(nonzero):
        ranks = {}
        for k in set(d - 1 for d in degrees) | set(degrees):
            ranks[k] = batched_ranks(np.einsum("bj,jrc->brc", nonzero, mats[k + 1]), tol)
        for d in degrees:
            h = fc.E(d).rank - ranks[d - 1] - ranks[d]
            worst[d] = int(h.max())
            bad |= h != 0
    failing = tuple(tuple(int(x) for x in m) for m in nonzero[bad])
    zero = {k: fc.E(k).rank for k in degrees}
    return TopologicalReport(degrees, len(freqs), zero, worst, failing)
