"""Spin representation of CL(V + V*) on tuples of forms and the GL(V) lift."""

from __future__ import annotations

import numpy as np

from .clifford import CL2Element, CliffordElement, SplitPairing, exp_cl2
from .multivector import (
    Basis,
    BasisMismatch,
    FormTuple,
    Multivector,
    left_wedge_matrix,
    pullback_matrix,
)

__all__ = ["SpinAction", "act", "gl_lift_action", "b_transform", "beta_transform", "beta_matrix"]


def act(a: CliffordElement | CL2Element | np.ndarray, phi: FormTuple) -> FormTuple:
    """Apply a Clifford element (or a V + V* vector) componentwise to a tuple of forms."""
    if isinstance(a, CL2Element):
        a = a.to_clifford()
    elif not isinstance(a, CliffordElement):
        a = CliffordElement.vector(phi.basis, np.asarray(a))
    if a.n != phi.n:
        raise BasisMismatch("Clifford element and forms have different dimensions")
    out = phi.array @ a.matrix.T
    return FormTuple.from_array(phi.basis, out, phi.reality)


class SpinAction:
    """Bound spin action for a fixed split pairing."""

    def __init__(self, pairing: SplitPairing) -> None:
        self.pairing = pairing

    def __call__(self, a, phi: FormTuple) -> FormTuple:
        if phi.n != self.pairing.n:
            raise BasisMismatch("forms live over a different basis")
        return act(a, phi)


def gl_lift_action(g: np.ndarray, phi: FormTuple) -> FormTuple:
    """``(det g)^{1/2}`` times the pullback of ``phi`` along ``g^{-1}``."""
    g = np.asarray(g, dtype=float)
    det = np.linalg.det(g)
    if det <= 0:
        raise ValueError("gl_lift_action needs det g > 0")
    mat = np.sqrt(det) * pullback_matrix(np.linalg.inv(g), phi.n)
    return FormTuple.from_array(phi.basis, phi.array @ mat.T, phi.reality)


def b_transform(b: Multivector, phi: FormTuple) -> FormTuple:
    """``e^b ^ phi`` for a 2-form ``b``."""
    if b.grades() - {2}:
        raise ValueError("b must be a 2-form")
    m = left_wedge_matrix(b)
    out = phi.array
    term = out
    for k in range(1, phi.n // 2 + 1):
        term = term @ m.T / k
        out = out + term
    return FormTuple.from_array(phi.basis, out, phi.reality)


def beta_matrix(beta: np.ndarray) -> np.ndarray:
    """Spin matrix of a 2-vector ``sum_{i<j} beta_ij v_i ^ v_j`` (``i_{u^w} = i_u i_w``)."""
    beta = np.asarray(beta)
    n = beta.shape[0]
    return CL2Element.from_parts(n, two_vector=beta).matrix()


def beta_transform(beta: np.ndarray, phi: FormTuple) -> FormTuple:
    """``e^beta . phi`` for a 2-vector given as an antisymmetric array."""
    m = beta_matrix(beta)
    out = phi.array
    term = out
    for k in range(1, phi.n // 2 + 1):
        term = term @ m.T / k
        out = out + term
    return FormTuple.from_array(phi.basis, out, phi.reality)


def exp_action(a: CL2Element, phi: FormTuple) -> FormTuple:
    return act(exp_cl2(a), phi)
