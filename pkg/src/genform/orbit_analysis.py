"""Fiberwise analysis at a point: isotropy, the filtration E^k = CL^{k+1} Phi,
Spin(7) linear algebra, generalized metrics and symbol complexes."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .clifford import (
    CL2Element,
    CliffordElement,
    cl2_adjoint,
    cl2_basis,
    cl2_dim,
    generator_matrices,
    pairing,
    so_to_cl2,
    tau,
)
from .multivector import (
    Basis,
    FormTuple,
    Multivector,
    grade,
    hodge_star,
    interior_generator,
    left_wedge_matrix,
    star_matrix,
    wedge_generator,
)
from .spinrep import gl_lift_action
from .structures import annihilator, cayley_form, gcs_from_spinor, make_spin7, u_spaces
from .subspace import (
    RANK_TOL,
    SubspaceBasis,
    batched_ranks,
    numerical_rank,
    nullspace,
    span,
)

__all__ = [
    "FiberComplex",
    "GeneralizedMetric",
    "IsotropyReport",
    "real_view",
    "is_complex_tuple",
    "cl2_action_matrix",
    "isotropy_algebra",
    "fiber_complex",
    "fiber_vectors",
    "lambda2_decompose",
    "generalized_metric",
    "star_from_metric",
    "asd_even_check",
    "symbol_complex",
    "ellipticity_scan",
    "primitive_frequencies",
    "cy_kernel_fibers",
    "sl_dimension_table",
]


# real views -----------------------------------------------------------------------


def is_complex_tuple(phi: FormTuple) -> bool:
    return phi.reality or not phi.is_real


def real_view(vecs: np.ndarray, complex_: bool) -> np.ndarray:
    """Columns of stacked complex forms as real vectors ``[Re; Im]``."""
    vecs = np.asarray(vecs)
    if not complex_:
        return np.real(vecs).astype(float)
    return np.concatenate([vecs.real, vecs.imag], axis=0)


def _apply(mat: np.ndarray, phi_arr: np.ndarray) -> np.ndarray:
    return (phi_arr @ mat.T).reshape(-1)


def cl2_action_matrix(phi: FormTuple) -> np.ndarray:
    """Real matrix of ``a -> a . Phi`` on CL^2 coordinates (split view for complex tuples)."""
    arr = phi.array
    cols = [(m @ arr.T).T.reshape(-1) for m in cl2_basis(phi.n)]
    return real_view(np.stack(cols, axis=1), is_complex_tuple(phi))


# isotropy -------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IsotropyReport:
    algebra: SubspaceBasis
    scalar_max: float
    endo_rank: int
    two_form_rank: int
    two_vector_rank: int
    q_plus_qstar_residual: float
    closure_residual: float

    @property
    def dim(self) -> int:
        return self.algebra.rank

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "scalar_max": self.scalar_max,
            "endo_rank": self.endo_rank,
            "two_form_rank": self.two_form_rank,
            "two_vector_rank": self.two_vector_rank,
            "q_plus_qstar_residual": self.q_plus_qstar_residual,
            "closure_residual": self.closure_residual,
        }


def isotropy_algebra(phi: FormTuple, closure_pairs: int | None = 200, seed: int = 0) -> IsotropyReport:
    """Kernel of ``a -> a . Phi`` in CL^2, with its decomposition and a bracket-closure check."""
    n = phi.n
    M = cl2_action_matrix(phi)
    ker = nullspace(M)
    X = ker.basis
    p = comb(n, 2)
    off = 1 + n * n
    scalar_max = float(np.abs(X[0]).max(initial=0.0))
    endo_rank = numerical_rank(X[1:off]) if X.size else 0
    b_rank = numerical_rank(X[off : off + p]) if X.size else 0
    beta_rank = numerical_rank(X[off + p :]) if X.size else 0
    qq = float(np.abs(X[off : off + p] - X[off + p :]).max(initial=0.0))
    # brackets of kernel elements stay in the kernel
    k = X.shape[1]
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    if closure_pairs is not None and len(pairs) > closure_pairs:
        rng = np.random.default_rng(seed)
        pairs = [pairs[i] for i in rng.choice(len(pairs), closure_pairs, replace=False)]
    ads = [cl2_adjoint(CL2Element.from_vector(n, X[:, i])) for i in range(k)]
    worst = 0.0
    for i, j in pairs:
        br = ads[i] @ ads[j] - ads[j] @ ads[i]
        c = so_to_cl2(br).to_vector()
        worst = max(worst, ker.residual(c[:, None]) / max(1.0, np.linalg.norm(c)))
    return IsotropyReport(ker, scalar_max, endo_rank, b_rank, beta_rank, qq, worst)


# filtration -----------------------------------------------------------------------


def _fiber_products(phi: FormTuple, k: int) -> list[np.ndarray]:
    """Ordered products ``g_{a_1} ... g_{a_j} Phi`` of distinct generators.

    Here ``a_1 < ... < a_j``, ``j <= k + 1`` and ``j = k + 1 mod 2``; these span
    CL^{k+1} . Phi = E^k.
    """
    if k < -1:
        raise ValueError("k must be >= -1")
    gens = generator_matrices(phi.n)
    ngen = len(gens)
    arr = phi.array
    layer = [(ngen, arr)]
    keep = [arr.reshape(-1)] if (k + 1) % 2 == 0 else []
    for j in range(1, k + 2):
        nxt = []
        for first, v in layer:
            for b in range(first):
                nxt.append((b, v @ gens[b].T))
        if j % 2 == (k + 1) % 2:
            keep.extend(v.reshape(-1) for _, v in nxt)
        layer = nxt
    return keep


def fiber_vectors(phi: FormTuple, k: int) -> np.ndarray:
    """Complex columns spanning E^k."""
    return np.stack(_fiber_products(phi, k), axis=1)


def fiber_span(phi: FormTuple, k: int, tol: float = RANK_TOL) -> SubspaceBasis:
    """Real subspace E^k (split view for complex tuples)."""
    cols = _fiber_products(phi, k)
    if not cols:
        size = phi.array.size * (2 if is_complex_tuple(phi) else 1)
        return SubspaceBasis(size, np.zeros((size, 0)))
    return span(real_view(np.stack(cols, axis=1), is_complex_tuple(phi)), tol)


@dataclass(frozen=True, eq=False)
class FiberComplex:
    structure: FormTuple
    spaces: tuple[SubspaceBasis, ...]  # E^{-1}, E^0, ...
    complex_dims: tuple[int, ...] | None = None

    def E(self, k: int) -> SubspaceBasis:
        return self.spaces[k + 1]

    @property
    def dims(self) -> list[int]:
        return [s.rank for s in self.spaces]

    @property
    def depth(self) -> int:
        return len(self.spaces) - 2

    def nesting_residual(self) -> float:
        worst = 0.0
        for k in range(1, self.depth + 1):
            worst = max(worst, self.E(k).residual(self.E(k - 2).basis))
        return worst

    def to_json(self) -> dict:
        out = {"dims": {str(k): d for k, d in zip(range(-1, self.depth + 1), self.dims)}}
        if self.complex_dims is not None:
            out["complex_dims"] = {str(k): d for k, d in zip(range(-1, self.depth + 1), self.complex_dims)}
        out["nesting_residual"] = self.nesting_residual()
        return out


def fiber_complex(phi: FormTuple, depth: int = 2, tol: float = RANK_TOL) -> FiberComplex:
    """E^{-1}, ..., E^{depth} as real subspaces; complex dims are reported for complex tuples."""
    if depth < 2:
        raise ValueError("depth must be at least 2")
    spaces = []
    cdims = [] if is_complex_tuple(phi) else None
    for k in range(-1, depth + 1):
        cols = _fiber_products(phi, k)
        mat = np.stack(cols, axis=1)
        spaces.append(span(real_view(mat, is_complex_tuple(phi)), tol))
        if cdims is not None:
            cdims.append(numerical_rank(mat.astype(complex), tol))
    return FiberComplex(phi, tuple(spaces), None if cdims is None else tuple(cdims))


def sl_dimension_table(n: int, depth: int = 3) -> dict[int, int]:
    """Real dims of E^k for generalized SL_n(C) from the binomial formula."""
    out = {}
    for k in range(-1, depth + 1):
        if k % 2:  # k = 2j - 1
            j = (k + 1) // 2
            out[k] = 2 * sum(comb(2 * n, 2 * i) for i in range(j + 1))
        else:
            j = k // 2
            out[k] = 2 * sum(comb(2 * n, 2 * i + 1) for i in range(j + 1))
    return out


# Spin(7) -------------------------------------------------------------------------


def _grade_indices(n: int, k: int) -> np.ndarray:
    return np.array([m for m in range(1 << n) if grade(m) == k])


@dataclass(frozen=True, eq=False)
class Lambda2Report:
    seven: SubspaceBasis
    twentyone: SubspaceBasis
    eigenvalues: tuple[float, float]
    multiplicities: tuple[int, int]
    wedge_constants: tuple[float, float]
    beta_constants: tuple[tuple[float, float], tuple[float, float]]
    annihilation_residual: float
    ok: bool

    def to_json(self) -> dict:
        return {
            "eigenvalues": list(self.eigenvalues),
            "multiplicities": list(self.multiplicities),
            "p_wedge_Phi_star_coefficient": list(self.wedge_constants),
            "qstar_action_coefficients": [list(c) for c in self.beta_constants],
            "q_plus_qstar_residual": self.annihilation_residual,
            "pass": self.ok,
        }


def _fit(target: np.ndarray, p: np.ndarray, sp_: np.ndarray) -> tuple[tuple[float, float], float]:
    A = np.stack([p, sp_], axis=1)
    c, *_ = np.linalg.lstsq(A, target, rcond=None)
    return (float(c[0]), float(c[1])), float(np.linalg.norm(A @ c - target))


def lambda2_decompose(tol: float = 1e-8) -> Lambda2Report:
    """Eigen-decomposition of ``p -> *(p ^ phi_Spin)`` on 2-forms and the wedge/contraction identities."""
    basis = Basis(8)
    phis = cayley_form()
    S = star_matrix(basis)
    idx2 = _grade_indices(8, 2)
    op = (S @ left_wedge_matrix(phis))[np.ix_(idx2, idx2)]
    w, v = np.linalg.eigh(0.5 * (op + op.T))
    sym_err = float(np.abs(op - op.T).max())
    groups: dict[float, list[int]] = {}
    for i, val in enumerate(w):
        for key in groups:
            if abs(val - key) < tol * max(1.0, abs(key)) * 1e2:
                groups[key].append(i)
                break
        else:
            groups[float(val)] = [i]
    if len(groups) != 2 or sym_err > tol:
        raise ValueError(f"eigenvalues do not form two clusters: {sorted(groups)}")
    (la, ia), (lb, ib) = sorted(groups.items(), key=lambda kv: len(kv[1]))
    ambient = basis.size
    def lift(cols):
        out = np.zeros((ambient, cols.shape[1]))
        out[idx2] = cols
        return out
    seven = SubspaceBasis(ambient, lift(v[:, ia]))
    twentyone = SubspaceBasis(ambient, lift(v[:, ib]))
    Phi = make_spin7()[0].coeffs
    consts = []
    beta_consts = []
    worst_fit = 0.0
    for sub in (seven, twentyone):
        pcol = sub.basis[:, 0]
        b = Multivector(basis, pcol)
        sp_ = S @ pcol
        c, r = _fit(left_wedge_matrix(b) @ Phi, pcol, sp_)
        consts.append(c[1])
        worst_fit = max(worst_fit, r, abs(c[0] - 1))
        beta = CL2Element.from_parts(8, two_vector=b.two_form_matrix()).matrix()
        cb, rb = _fit(beta @ Phi, pcol, sp_)
        beta_consts.append(cb)
        worst_fit = max(worst_fit, rb)
    ann = 0.0
    for col in twentyone.basis.T:
        bm = Multivector(basis, col).two_form_matrix()
        a = CL2Element.from_parts(8, two_form=bm, two_vector=bm).matrix()
        ann = max(ann, float(np.abs(a @ Phi).max()))
    mults = (len(ia), len(ib))
    ok = mults == (7, 21) and abs(la - 3) < tol and abs(lb + 1) < tol and ann < 1e-9 and worst_fit < 1e-9
    return Lambda2Report(
        seven, twentyone, (la, lb), mults, (consts[0], consts[1]), (beta_consts[0], beta_consts[1]), ann, bool(ok)
    )


@dataclass(frozen=True, eq=False)
class GeneralizedMetric:
    G: np.ndarray
    star: np.ndarray

    def checks(self) -> dict:
        n = self.G.shape[0] // 2
        g = np.zeros((2 * n, 2 * n))
        g[:n, n:] = g[n:, :n] = 0.5 * np.eye(n)
        eye = np.eye(2 * n)
        return {
            "G2_residual": float(np.abs(self.G @ self.G - eye).max()),
            "G_symmetric_residual": float(np.abs(g @ self.G - (g @ self.G).T).max()),
            "star2_residual": float(np.abs(self.star @ self.star - np.eye(len(self.star))).max()),
        }

    def to_json(self) -> dict:
        return self.checks()


def star_from_metric(G: np.ndarray) -> np.ndarray:
    """Involution on forms given by the Pin element of the ``-1`` eigenspace of ``G``.

    The ``-1`` eigenspace is negative definite for the pairing; the Clifford
    product of a pairing-orthonormal basis squares to ``+-1``; it is rescaled to
    square to one and its sign is fixed by a positive coefficient of ``vol`` in ``*1``.
    """
    n = G.shape[0] // 2
    w, vecs = np.linalg.eig(G)
    neg = np.real(vecs[:, np.abs(w + 1) < 1e-8])
    if neg.shape[1] != n:
        raise ValueError("G must have an n-dimensional -1 eigenspace")
    # Gram-Schmidt for the (negative definite) pairing
    ortho = []
    for col in neg.T:
        u = col.copy()
        for o in ortho:
            u = u + pairing(u, o) * o  # <o, o> = -1
        nrm = pairing(u, u)
        if nrm >= -1e-12:
            raise ValueError("-1 eigenspace of G is not negative definite")
        ortho.append(u / np.sqrt(-nrm))
    size = 1 << n
    P = np.eye(size)
    for u in ortho:
        P = P @ CliffordElement.vector(Basis(n), u).matrix
    sq = (P @ P)[0, 0]
    P = P / np.sqrt(abs(sq)) if sq > 0 else P / np.sqrt(abs(sq)) * 1j
    P = np.real_if_close(P)
    top = size - 1
    if np.real(P[top, 0]) < 0:
        P = -P
    return P


def generalized_metric(kind: str = "spin7", transform: CliffordElement | None = None, G: np.ndarray | None = None) -> GeneralizedMetric:
    """Flat model metric ``G_0`` (``v_i <-> e^i``) or a given ``G``, transformed by ``Ad_h``."""
    kind = kind.lower()
    if G is None:
        dim = {"spin7": 8, "g2": 7}.get(kind)
        if dim is None:
            raise ValueError(f"kind {kind!r} needs an explicit G")
        G = np.block([[np.zeros((dim, dim)), np.eye(dim)], [np.eye(dim), np.zeros((dim, dim))]])
    star = star_from_metric(G)
    if transform is not None:
        from .clifford import ad_tilde_matrix

        A = ad_tilde_matrix(transform)
        Ainv = np.linalg.inv(A)
        G = A @ G @ Ainv
        h = transform.matrix
        star = h @ star @ np.linalg.inv(h)
    return GeneralizedMetric(np.asarray(G, dtype=float), star)


def _scaling_derivative(Phi: FormTuple, h: float = 1e-3) -> np.ndarray:
    """d/dl of the lifted scaling ``l * id`` at ``l = 1`` (Richardson-extrapolated central difference)."""
    def central(step):
        plus = gl_lift_action((1 + step) * np.eye(Phi.n), Phi).array[0]
        minus = gl_lift_action((1 - step) * np.eye(Phi.n), Phi).array[0]
        return (plus - minus) / (2 * step)

    return (4 * central(h / 2) - central(h)) / 3


@dataclass(frozen=True, eq=False)
class ASDReport:
    dim: int
    grade_dims: dict
    containment_residual: float
    scaling_line_residual: float
    two_six_residual: float
    sym0_rank: int
    star_table: dict
    ok: bool

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "grade_dims": self.grade_dims,
            "containment_residual": self.containment_residual,
            "scaling_line_residual": self.scaling_line_residual,
            "two_six_residual": self.two_six_residual,
            "sym0_rank": self.sym0_rank,
            "star_vs_hodge": self.star_table,
            "pass": self.ok,
        }


def asd_even_check(tol: float = 1e-9) -> ASDReport:
    """Anti-self-dual even forms of the Spin(7) model and their containment in E^1."""
    basis = Basis(8)
    size = basis.size
    gm = generalized_metric("spin7")
    star = gm.star
    hodge = star_matrix(basis)
    Phi = make_spin7()
    grades = np.array([grade(m) for m in range(size)])
    table = {}
    for k in range(9):
        ix = np.flatnonzero(grades == k)
        jx = np.flatnonzero(grades == 8 - k)
        blk, hs = star[np.ix_(jx, ix)], hodge[np.ix_(jx, ix)]
        table[k] = "+" if np.allclose(blk, hs) else ("-" if np.allclose(blk, -hs) else "?")
    even = np.flatnonzero(grades % 2 == 0)
    S_even = star[np.ix_(even, even)]
    asd_cols = nullspace(S_even + np.eye(len(even))).basis
    asd = np.zeros((size, asd_cols.shape[1]))
    asd[even] = asd_cols
    asd_space = SubspaceBasis(size, asd)
    grade_dims = {}
    for k in range(0, 9, 2):
        mask = grades == k
        grade_dims[k] = numerical_rank(asd[mask]) if asd.size else 0
    E1 = fiber_span(Phi, 1)
    containment = E1.residual(asd)
    # generating families
    vol = Multivector.monomial(basis, *range(1, 9)).coeffs
    one = Multivector.scalar(basis).coeffs
    deriv = _scaling_derivative(Phi)
    line = span(one - vol)
    scaling = line.residual(deriv[:, None]) / max(1.0, np.linalg.norm(deriv))
    scaling = max(scaling, E1.residual((one - vol)[:, None]))
    idx2 = _grade_indices(8, 2)
    fam = []
    for i in idx2:
        p = np.zeros(size)
        p[i] = 1.0
        fam.append(p + hodge @ p)
    fam = np.stack(fam, axis=1)
    two_six = max(asd_space.residual(fam), E1.residual(fam))
    sym = []
    for i in range(8):
        for j in range(i, 8):
            a = np.zeros((8, 8))
            a[i, j] = a[j, i] = 1.0
            sym.append(a)
    sym0 = [a - np.trace(a) / 8 * np.eye(8) for a in sym]
    idx4 = _grade_indices(8, 4)
    asd4_space = span(asd[idx4])
    imgs = np.stack([(tau(a) @ Phi.array[0])[idx4] for a in sym0], axis=1)
    proj = asd4_space.basis.T @ imgs
    sym0_rank = numerical_rank(proj)
    dim = asd_space.rank
    ok = dim == 64 and containment <= tol and scaling <= 1e-9 and two_six <= tol and sym0_rank == 35
    return ASDReport(dim, grade_dims, float(containment), float(scaling), float(two_six), sym0_rank, table, bool(ok))


# symbol complex -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SymbolComplex:
    xi: np.ndarray
    maps: tuple[np.ndarray, ...]  # sigma_k in orthonormal fiber coordinates, k = -1..depth-1
    ranks: tuple[int, ...]
    dims: tuple[int, ...]

    def exact_at(self, k: int) -> bool:
        # sigma_{k-1}: E^{k-1} -> E^k has index k in the tuple (starting at k = -1)
        r_in = self.ranks[k]
        r_out = self.ranks[k + 1]
        return r_in + r_out == self.dims[k + 1]

    def defect(self, k: int) -> int:
        return self.dims[k + 1] - self.ranks[k] - self.ranks[k + 1]


def _wedge_covector(n: int, xi: np.ndarray) -> np.ndarray:
    out = np.zeros((1 << n, 1 << n))
    for j in range(n):
        if xi[j] != 0:
            out = out + xi[j] * wedge_generator(n, j)
    return out


def _lift_real(op: np.ndarray, blocks: int, complex_: bool) -> np.ndarray:
    """Block-diagonal real operator on the stacked (split) fiber."""
    big = np.kron(np.eye(blocks), op)
    if complex_:
        big = np.kron(np.eye(2), big)
    return big


def symbol_matrices(fc: FiberComplex, upto: int) -> list[np.ndarray]:
    """Coefficient matrices ``D_k^{(j)}`` with ``sigma_k(xi) = sum_j xi_j D_k^{(j)}`` in fiber bases."""
    phi = fc.structure
    n = phi.n
    cplx = is_complex_tuple(phi)
    out = []
    for k in range(-1, upto):
        src = fc.E(k).basis
        dst = fc.E(k + 1).basis
        mats = []
        for j in range(n):
            op = _lift_real(wedge_generator(n, j), len(phi), cplx)
            mats.append(dst.T @ op @ src)
        out.append(np.stack(mats))
    return out


def symbol_complex(phi: FormTuple, xi: Sequence[float], depth: int = 3, fc: FiberComplex | None = None, tol: float = 1e-8) -> SymbolComplex:
    """Maps ``sigma_k(xi) = xi .`` between consecutive fibers and their ranks."""
    xi = np.asarray(xi, dtype=float)
    if not np.any(xi):
        raise ValueError("symbol complex needs a nonzero covector")
    fc = fc or fiber_complex(phi, depth)
    mats = symbol_matrices(fc, fc.depth)
    maps = tuple(np.tensordot(xi, D, axes=1) for D in mats)
    ranks = tuple(numerical_rank(m, tol) if m.size else 0 for m in maps) + (0,)
    return SymbolComplex(xi, maps, ranks, tuple(fc.dims))


def primitive_frequencies(n: int, bound: int) -> np.ndarray:
    """Integer vectors with ``0 < |m|_inf <= bound``, gcd 1, first nonzero entry positive."""
    grids = np.stack(np.meshgrid(*[np.arange(-bound, bound + 1)] * n, indexing="ij"), -1).reshape(-1, n)
    grids = grids[np.any(grids != 0, axis=1)]
    g = np.gcd.reduce(np.abs(grids), axis=1)
    grids = grids[g == 1]
    first = grids[np.arange(len(grids)), np.argmax(grids != 0, axis=1)]
    return grids[first > 0]


@dataclass(frozen=True)
class ScanReport:
    samples: int
    degrees: tuple[int, ...]
    max_defect: int
    failures: int
    dims: tuple[int, ...]

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def to_json(self) -> dict:
        return {
            "samples": self.samples,
            "degrees": list(self.degrees),
            "max_defect": self.max_defect,
            "failures": self.failures,
            "dims": list(self.dims),
            "pass": self.ok,
        }


def ellipticity_scan(
    phi: FormTuple,
    covectors: np.ndarray,
    degrees: Iterable[int] = (1, 2),
    tol: float = 1e-8,
    fc: FiberComplex | None = None,
    chunk: int = 2048,
) -> ScanReport:
    """Exactness of the symbol complex at the given degrees for each covector (batched SVDs)."""
    degrees = tuple(degrees)
    covectors = np.atleast_2d(np.asarray(covectors, dtype=float))
    if np.any(~np.any(covectors, axis=1)):
        raise ValueError("zero covector in scan")
    top = max(degrees)
    fc = fc or fiber_complex(phi, top + 1)
    mats = symbol_matrices(fc, top + 1)
    worst = 0
    failures = np.zeros(len(covectors), dtype=bool)
    for start in range(0, len(covectors), chunk):
        xs = covectors[start : start + chunk]
        ranks = {}
        for k in set(d - 1 for d in degrees) | set(degrees):
            D = mats[k + 1]
            ranks[k] = batched_ranks(np.einsum("bj,jrc->brc", xs, D), tol)
        for d in degrees:
            defect = fc.dims[d + 1] - ranks[d - 1] - ranks[d]
            worst = max(worst, int(np.abs(defect).max()))
            failures[start : start + chunk] |= defect != 0
    return ScanReport(len(covectors), degrees, worst, int(failures.sum()), tuple(fc.dims))


# Calabi-Yau pair -----------------------------------------------------------------


@dataclass(frozen=True)
class CYKernelReport:
    commutator: float
    upq_dims: dict
    ker_dims: dict
    formula_dims: dict
    containment: dict
    scaling_line: bool
    ok: bool

    def to_json(self) -> dict:
        return {
            "commutator_residual": self.commutator,
            "U_pq_complex_dims": {f"{p},{q}": d for (p, q), d in sorted(self.upq_dims.items())},
            "ker_real_dims": self.ker_dims,
            "formula_real_dims": self.formula_dims,
            "containment_residual": self.containment,
            "ker1_extra_scaling_line": self.scaling_line,
            "pass": self.ok,
        }


def _complex_to_real_span(vecs: np.ndarray) -> np.ndarray:
    """Real view of the complex span: columns ``v`` and ``i v``."""
    return np.hstack([real_view(vecs, True), real_view(1j * vecs, True)])


def cy_kernel_fibers(pair: FormTuple, tol: float = 1e-9) -> CYKernelReport:
    """Kernel of the first-component projection on the CY fibers, compared with U^{p,q}.

    ``ker^1`` lies in ``U^{0,-n+2} + U^{0,-n}`` and meets the complex line
    ``U^{0,-n} = C phi_1`` in exactly one real direction (the relative scale
    of the pair), so its real dimension exceeds ``2 dim U^{0,-n+2}`` by one.
    ``ker^2`` is the sum of the four ``U^{+-1,-n+1}``, ``U^{+-1,-n+3}`` summands.
    """
    if len(pair) != 2:
        raise ValueError("expected a pair of spinors")
    phi0 = FormTuple.of(pair[0], reality=True)
    phi1 = FormTuple.of(pair[1], reality=True)
    J0, J1 = gcs_from_spinor(phi0), gcs_from_spinor(phi1)
    comm = float(np.abs(J0 @ J1 - J1 @ J0).max())
    if comm > tol:
        raise ValueError(f"generalized complex structures do not commute ({comm:.2e})")
    n = pair.n // 2
    U0, U1 = u_spaces(phi0), u_spaces(phi1)
    upq_space = {}
    for p in range(-n, n + 1):
        for q in range(-n, n + 1):
            inter = U0.u(p).intersect(U1.u(q))
            if inter.rank:
                upq_space[(p, q)] = inter
    upq = {k: v.rank for k, v in upq_space.items()}
    size = pair.basis.size
    empty = np.zeros((size, 0), dtype=complex)
    U = lambda p, q: upq_space[(p, q)].basis if (p, q) in upq_space else empty
    models = {
        0: np.zeros((2 * size, 0)),
        1: _complex_to_real_span(np.hstack([U(0, -n + 2), U(0, -n)])),
        2: _complex_to_real_span(np.hstack([U(1, -n + 1), U(-1, -n + 1), U(1, -n + 3), U(-1, -n + 3)])),
    }
    labels = sorted(upq_space)
    full = np.hstack([upq_space[l].basis for l in labels])
    ker, contain = {}, {}
    line_rank = 0
    both = FormTuple(pair.components, reality=True)
    for k in range(0, 3):
        cols = fiber_vectors(both, k)
        coef = nullspace(real_view(cols[:size], True)).basis
        vecs = cols[size:] @ coef
        ker[k] = numerical_rank(real_view(vecs, True)) if coef.size else 0
        contain[k] = float(span(models[k]).residual(real_view(vecs, True))) if ker[k] else 0.0
        if k == 1 and ker[k]:
            c = np.linalg.solve(full, vecs)
            off = sum(upq_space[l].rank for l in labels[: labels.index((0, -n))])
            line_rank = numerical_rank(real_view(c[off : off + upq[(0, -n)]], True))
    formula = {0: 0, 1: 2 * upq.get((0, -n + 2), 0), 2: span(models[2]).rank}
    scaling = line_rank == 1 and ker[1] == formula[1] + 1
    ok = (
        ker[0] == 0
        and scaling
        and ker[2] == formula[2]
        and all(v <= 1e-8 for v in contain.values())
        and sum(upq.values()) == 1 << (2 * n)
    )
    return CYKernelReport(comm, upq, ker, formula, contain, bool(scaling), bool(ok))
