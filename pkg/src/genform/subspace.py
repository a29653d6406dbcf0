"""Numerically orthonormalized subspaces and rank utilities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "RANK_TOL",
    "SubspaceBasis",
    "numerical_rank",
    "span",
    "nullspace",
    "split_real",
    "join_complex",
]

RANK_TOL = 1e-9


def _cutoff(s: np.ndarray, tol: float) -> float:
    return tol * (s[0] if s.size else 0.0)


def numerical_rank(mat: np.ndarray, tol: float = RANK_TOL) -> int:
    """Rank with singular values below ``tol * sigma_max`` treated as zero."""
    mat = np.asarray(mat)
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > _cutoff(s, tol)))


def batched_ranks(mats: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Ranks of a stack of matrices, each with its own relative cutoff."""
    mats = np.asarray(mats)
    if mats.shape[-1] == 0 or mats.shape[-2] == 0:
        return np.zeros(mats.shape[:-2], dtype=int)
    s = np.linalg.svd(mats, compute_uv=False)
    top = s[..., :1]
    return np.sum((s > tol * top) & (top > 0), axis=-1)


@dataclass(frozen=True, eq=False)
class SubspaceBasis:
    """Orthonormal columns spanning a subspace of a (real or complex) fiber."""

    ambient_dim: int
    basis: np.ndarray
    tol: float = RANK_TOL

    def __post_init__(self) -> None:
        b = np.asarray(self.basis)
        if b.ndim != 2 or b.shape[0] != self.ambient_dim:
            raise ValueError("basis must be ambient_dim x rank")
        b = b.copy()
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)

    @property
    def rank(self) -> int:
        return self.basis.shape[1]

    @property
    def dim(self) -> int:
        return self.rank

    @property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T

    def coords(self, vecs: np.ndarray) -> np.ndarray:
        return self.basis.conj().T @ vecs

    def residual(self, vecs: np.ndarray) -> float:
        """Largest distance of the columns of ``vecs`` from the subspace."""
        vecs = np.atleast_2d(np.asarray(vecs).T).T
        r = vecs - self.basis @ (self.basis.conj().T @ vecs)
        return float(np.linalg.norm(r, axis=0).max(initial=0.0))

    def contains(self, vecs: np.ndarray, tol: float = 1e-9) -> bool:
        vecs = np.atleast_2d(np.asarray(vecs).T).T
        scale = max(1.0, float(np.linalg.norm(vecs, axis=0).max(initial=0.0)))
        return self.residual(vecs) <= tol * scale

    def contains_subspace(self, other: "SubspaceBasis", tol: float = 1e-9) -> bool:
        return self.residual(other.basis) <= tol

    def complement(self) -> "SubspaceBasis":
        return nullspace(self.basis.conj().T, self.tol)

    def intersect(self, other: "SubspaceBasis") -> "SubspaceBasis":
        """Intersection via the nullspace of ``[A, -B]``."""
        if self.rank == 0 or other.rank == 0:
            return SubspaceBasis(self.ambient_dim, np.zeros((self.ambient_dim, 0), dtype=self.basis.dtype))
        ns = nullspace(np.hstack([self.basis, -other.basis]), self.tol)
        return span(self.basis @ ns.basis[: self.rank], self.tol)

    def __add__(self, other: "SubspaceBasis") -> "SubspaceBasis":
        return span(np.hstack([self.basis, other.basis]), self.tol)

    def to_json(self) -> dict:
        return {"ambient_dim": self.ambient_dim, "rank": self.rank, "tol": self.tol}


def span(vecs: np.ndarray, tol: float = RANK_TOL) -> SubspaceBasis:
    """Orthonormal basis of the column span of ``vecs``."""
    vecs = np.asarray(vecs)
    if vecs.ndim == 1:
        vecs = vecs[:, None]
    if vecs.shape[1] == 0:
        return SubspaceBasis(vecs.shape[0], np.zeros((vecs.shape[0], 0), dtype=vecs.dtype), tol)
    u, s, _ = np.linalg.svd(vecs, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return SubspaceBasis(vecs.shape[0], np.zeros((vecs.shape[0], 0), dtype=vecs.dtype), tol)
    r = int(np.sum(s > _cutoff(s, tol)))
    return SubspaceBasis(vecs.shape[0], u[:, :r], tol)


def nullspace(mat: np.ndarray, tol: float = RANK_TOL) -> SubspaceBasis:
    """Orthonormal basis of the kernel of ``mat``."""
    mat = np.asarray(mat)
    cols = mat.shape[1]
    if mat.shape[0] == 0:
        return SubspaceBasis(cols, np.eye(cols, dtype=mat.dtype), tol)
    _, s, vh = np.linalg.svd(mat, full_matrices=True)
    r = 0 if s.size == 0 or s[0] == 0 else int(np.sum(s > _cutoff(s, tol)))
    return SubspaceBasis(cols, vh[r:].conj().T, tol)


def split_real(vecs: np.ndarray) -> np.ndarray:
    """Real view of complex column vectors: stacks real parts over imaginary parts."""
    vecs = np.asarray(vecs)
    return np.concatenate([vecs.real, vecs.imag], axis=0) if np.iscomplexobj(vecs) else np.concatenate(
        [vecs, np.zeros_like(vecs)], axis=0
    )


def join_complex(vecs: np.ndarray) -> np.ndarray:
    half = vecs.shape[0] // 2
    return vecs[:half] + 1j * vecs[half:]
