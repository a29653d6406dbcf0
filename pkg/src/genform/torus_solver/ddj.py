"""The generalized dd^J property and the SL_n exact sequence at the level of fibers."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from ..multivector import FormTuple, Multivector
from ..orbit_analysis import fiber_vectors
from ..structures import u_spaces
from ..subspace import numerical_rank, nullspace, span
from .fourier import covector_wedge, frequency_grid

__all__ = ["DDJReport", "ddJ_check", "SLSequenceReport", "sl_sequence_check", "u_projectors"]


def _single(phi) -> Multivector:
    if isinstance(phi, FormTuple):
        if len(phi) != 1:
            raise ValueError("expected a single spinor")
        return phi[0]
    return phi


def u_projectors(phi) -> dict[int, np.ndarray]:
    """Projectors onto ``U^p`` along the other eigenspaces (``p = -n .. n``)."""
    iso = u_spaces(_single(phi))
    half = iso.n
    blocks = [iso.u(p).basis for p in range(-half, half + 1)]
    B = np.hstack(blocks)
    if B.shape[0] != B.shape[1] or numerical_rank(B) != B.shape[0]:
        raise ValueError("U^p spaces do not decompose the forms")
    C = np.linalg.inv(B)
    out = {}
    start = 0
    for p, b in zip(range(-half, half + 1), blocks):
        r = b.shape[1]
        out[p] = b @ C[start : start + r]
        start += r
    return out


@dataclass(frozen=True)
class DDJReport:
    frequencies: int
    split_residual: float
    degree_residual: float
    max_rank_mismatch: int
    failing: tuple[tuple[int, ...], ...]

    @property
    def ok(self) -> bool:
        return not self.failing and self.split_residual <= 1e-9 and self.degree_residual <= 1e-9

    def to_json(self) -> dict:
        return {
            "frequencies": self.frequencies,
            "split_residual": self.split_residual,
            "degree_residual": self.degree_residual,
            "max_rank_mismatch": self.max_rank_mismatch,
            "failing": [list(m) for m in self.failing[:20]],
            "pass": self.ok,
        }


def _same_subspace(A: np.ndarray, B: np.ndarray, tol: float) -> int:
    ra = A.shape[1]
    rb = B.shape[1]
    both = numerical_rank(np.hstack([A, B]), tol) if ra + rb else 0
    return max(abs(both - ra), abs(both - rb))


def ddJ_check(phi, trunc: int = 2, tol: float = 1e-9, frequencies=None) -> DDJReport:
    """Per-frequency dd^J property with ``d^J = i (dbar - d')`` built from ``U^p`` projections.

    For each frequency the subspaces ``ker d & im d^J``, ``im d & ker d^J`` and
    ``im d d^J`` are compared by rank.
    """
    omega = _single(phi)
    n = omega.n
    P = u_projectors(omega)
    half = n // 2
    freqs = frequency_grid(n, trunc) if frequencies is None else [tuple(int(x) for x in m) for m in frequencies]
    split = 0.0
    degree = 0.0
    worst = 0
    failing = []
    for m in freqs:
        if not any(m):
            continue
        d = 2j * np.pi * covector_wedge(n, m)
        dbar = sum(P[p + 1] @ d @ P[p] for p in range(-half, half))
        dprime = sum(P[p - 1] @ d @ P[p] for p in range(-half + 1, half + 1))
        split = max(split, float(np.abs(d - dbar - dprime).max()))
        for p in range(-half, half + 1):
            near = sum(P[q] for q in (p - 1, p + 1) if q in P)
            off = d @ P[p] - near @ d @ P[p]
            degree = max(degree, float(np.abs(off).max()))
        dJ = 1j * (dbar - dprime)
        ker_d = nullspace(d, tol).basis
        ker_dJ = nullspace(dJ, tol).basis
        im_d = span(d, tol).basis
        im_dJ = span(dJ, tol).basis
        one = span(ker_d, tol).intersect(span(im_dJ, tol)).basis
        two = span(im_d, tol).intersect(span(ker_dJ, tol)).basis
        three = span(d @ dJ, tol).basis
        mismatch = max(_same_subspace(one, three, tol), _same_subspace(two, three, tol))
        worst = max(worst, mismatch)
        if mismatch:
            failing.append(m)
    return DDJReport(len(freqs), split, degree, worst, tuple(failing))


@dataclass(frozen=True)
class SLSequenceReport:
    n: int
    h_minus1: int
    h1: int
    h2_dbar: int
    projection_rank: int
    kernel_is_e_minus1: bool

    @property
    def ok(self) -> bool:
        return self.h1 == self.h_minus1 + self.h2_dbar and self.projection_rank == self.h2_dbar and self.kernel_is_e_minus1

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "dim_H-1": self.h_minus1,
            "dim_H1": self.h1,
            "dim_H2_dbar": self.h2_dbar,
            "projection_rank": self.projection_rank,
            "kernel_is_E-1": self.kernel_is_e_minus1,
            "pass": self.ok,
        }


def sl_sequence_check(phi, tol: float = 1e-9) -> SLSequenceReport:
    """``0 -> H^{-1} -> H^1 -> H^2_dbar -> 0`` at frequency zero (complex dimensions).

    ``H^1`` is the ``E^1`` fiber, ``H^{-1}`` the ``E^{-1}`` fiber (the line of
    ``phi``) and ``H^2_dbar`` the ``U^{-n+2}`` fiber; the map is the projection
    onto ``U^{-n+2}`` along the other ``U^p``.
    """
    omega = _single(phi)
    tup = FormTuple.of(omega)
    half = omega.n // 2
    e1 = span(fiber_vectors(tup, 1).astype(complex), tol).basis
    em1 = span(fiber_vectors(tup, -1).astype(complex), tol).basis
    P = u_projectors(omega)
    proj = P[-half + 2] @ e1
    rank = numerical_rank(proj, tol)
    ker = e1 @ nullspace(proj, tol).basis
    same = _same_subspace(span(ker, tol).basis, em1, tol) == 0
    h2 = u_spaces(omega).u(-half + 2).rank
    return SLSequenceReport(half, em1.shape[1], e1.shape[1], h2, rank, same)
