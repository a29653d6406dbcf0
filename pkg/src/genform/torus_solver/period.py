"""Period map: de Rham classes of closed Fourier forms are their constant parts."""

from __future__ import annotations

import numpy as np

from ..multivector import FormTuple
from .fourier import FourierForm, apply_field, dform, fourier_wedge

__all__ = ["NotClosed", "period", "period_derivative", "exp_wedge"]


class NotClosed(ValueError):
    pass


def period(omega: FourierForm, tol: float = 1e-9) -> FormTuple:
    """Frequency-zero coefficient of a closed series."""
    res = dform(omega).norm()
    if res > tol * max(1.0, omega.norm()):
        raise NotClosed(f"form is not closed (|d omega| = {res:.2e})")
    return omega.mode_zero()


def period_derivative(series) -> FormTuple:
    """Frequency-zero part of ``a_1 . Phi`` for a deformation series."""
    first = apply_field(series.fields[0], series.structure, series.trunc)
    return first.mode_zero()


def exp_wedge(beta: FourierForm, omega: FourierForm, trunc: int | None = None) -> FourierForm:
    """``e^beta ^ omega`` for an even single-component ``beta`` (the series terminates)."""
    trunc = max(beta.trunc, omega.trunc) if trunc is None else trunc
    out = omega.with_trunc(trunc)
    term = out
    for j in range(1, beta.n // 2 + 2):
        term = fourier_wedge(beta, term, trunc) / j
        if term.norm() == 0.0:
            break
        out = out + term
    return out
