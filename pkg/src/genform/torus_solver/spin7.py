"""Anti-self-dual correction for Spin(7) structures on the flat 8-torus."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..multivector import grade
from ..orbit_analysis import fiber_span, generalized_metric
from ..structures import make_spin7
from .fourier import FourierForm, covector_wedge, dform

__all__ = ["CorrectionReport", "spin7_correction", "spin7_star", "asd_even_projector"]


@lru_cache(maxsize=None)
def spin7_star() -> np.ndarray:
    """The involution ``*`` of the model generalized metric (``*^2 = 1``)."""
    star = np.real(generalized_metric("spin7").star)
    star.setflags(write=False)
    return star


@lru_cache(maxsize=None)
def asd_even_projector() -> np.ndarray:
    """Orthogonal projector onto even forms with ``* x = -x``."""
    star = spin7_star()
    even = np.diag([1.0 if grade(k) % 2 == 0 else 0.0 for k in range(256)])
    P = even @ (np.eye(256) - star) / 2 @ even
    P = (P + P.T) / 2
    P.setflags(write=False)
    return P


@lru_cache(maxsize=None)
def _e1_basis() -> np.ndarray:
    return fiber_span(make_spin7(), 1).basis


@dataclass(frozen=True)
class CorrectionReport:
    d_residual: float
    asd_residual: float
    containment_residual: float
    tol_d: float = 1e-9
    tol_asd: float = 1e-10

    @property
    def ok(self) -> bool:
        return self.d_residual <= self.tol_d and self.asd_residual <= self.tol_asd and self.containment_residual <= self.tol_d

    def to_json(self) -> dict:
        return {
            "d_residual": self.d_residual,
            "asd_residual": self.asd_residual,
            "containment_residual": self.containment_residual,
            "pass": self.ok,
        }


def spin7_correction(alpha: FourierForm, star: np.ndarray | None = None) -> tuple[FourierForm, CorrectionReport]:
    """``alpha_- = gamma - * gamma`` with ``gamma = d* d G alpha`` for the flat Laplacian.

    Per frequency ``gamma(m) = i_m (m ^ alpha(m)) / |m|^2``. The report checks
    ``d alpha_- = d alpha``, ``* alpha_- = -alpha_-`` and that each coefficient of
    ``alpha_-`` lies in ``Lambda^even_-`` and hence in ``E^1``.
    """
    if alpha.n != 8 or alpha.ncomp != 1:
        raise ValueError("spin7_correction takes single-component forms on the 8-torus")
    odd = [k for k in range(256) if grade(k) % 2]
    if any(np.any(c[:, odd]) for c in alpha.coeffs.values()):
        raise ValueError("spin7_correction needs an even form")
    star = spin7_star() if star is None else star
    out = {}
    for m, c in alpha.coeffs.items():
        if not any(m):
            continue
        W = covector_wedge(8, m)
        gamma = c @ (W.T @ W) / float(np.dot(m, m))  # i_m = W^T for the flat metric
        out[m] = gamma - gamma @ star.T
    minus = alpha._like(out)
    dres = (dform(minus) - dform(alpha)).norm() / max(1.0, dform(alpha).norm())
    asd = max((float(np.abs(c @ star.T + c).max()) for c in out.values()), default=0.0)
    P = asd_even_projector()
    Q = _e1_basis()
    cont = 0.0
    for c in out.values():
        v = c[0]
        cont = max(cont, float(np.linalg.norm(v - v @ P)), float(np.linalg.norm(v - Q @ (Q.T @ v))) / max(1.0, np.linalg.norm(v)))
    return minus, CorrectionReport(dres, asd, cont)
