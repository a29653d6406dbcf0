"""Clifford-Lie operators on Fourier forms: Lie derivatives, brackets and ``exp(Ad_a) d``."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, factorial

import numpy as np
from scipy.linalg import expm

from ..multivector import Basis
from .fourier import (
    FourierCL1Field,
    FourierField,
    FourierForm,
    Freq,
    apply_field,
    dform,
    sup_norm,
)

__all__ = [
    "ConjugatedD",
    "conjugated_d",
    "exp_apply",
    "lie_derivative",
    "BracketReport",
    "bracket_check",
    "dorfman_formula",
]

SERIES_TOL = 1e-13
MAX_TERMS = 64


def exp_apply(a: FourierField, omega: FourierForm, sign: float = 1.0, trunc: int | None = None) -> FourierForm:
    """``e^{sign a} . omega``; exact matrix exponential for constant fields, series otherwise."""
    if a.is_constant():
        mat = expm(sign * a.matrix((0,) * a.n))
        return omega.apply_matrix(mat)
    out = omega
    term = omega
    for j in range(1, MAX_TERMS + 1):
        term = apply_field(a, term, trunc) * (sign / j)
        out = out + term
        if term.norm() <= SERIES_TOL * max(out.norm(), 1e-300):
            return out
    raise ArithmeticError("exponential series did not converge")


@dataclass(eq=False)
class ConjugatedD:
    """The operator ``d + [d, a] + [[d, a], a] / 2 + ...`` applied lazily.

    The l-th nested commutator is ``sum_j (-1)^j C(l, j) a^j d a^{l-j}``; the
    series stops once a term falls below ``SERIES_TOL`` relative to the running sum.
    """

    a: FourierField
    max_terms: int = MAX_TERMS
    trunc: int | None = None
    last_terms: int = 0
    converged: bool = True

    def __call__(self, omega: FourierForm) -> FourierForm:
        a, trunc = self.a, self.trunc
        if not a.coeffs or a.norm() == 0:
            self.last_terms, self.converged = 1, True
            return dform(omega)
        powers = [omega]  # a^i omega
        chains: list[list[FourierForm]] = []  # chains[i][j] = a^j d a^i omega
        total = dform(omega)
        chains.append([total])
        for l in range(1, self.max_terms + 1):
            powers.append(apply_field(a, powers[-1], trunc))
            chains.append([dform(powers[l])])
            for i in range(l):
                chains[i].append(apply_field(a, chains[i][-1], trunc))
            term = None
            for j in range(l + 1):
                piece = chains[l - j][j] * ((-1) ** j * comb(l, j) / factorial(l))
                term = piece if term is None else term + piece
            total = total + term
            tn = term.norm()
            if tn <= SERIES_TOL * max(total.norm(), 1.0) or tn == 0.0:
                self.last_terms, self.converged = l + 1, True
                return total
        self.last_terms, self.converged = self.max_terms + 1, False
        return total

    def reference(self, omega: FourierForm) -> FourierForm:
        """``e^{-a} d e^{a} omega`` computed directly."""
        return exp_apply(self.a, dform(exp_apply(self.a, omega, 1.0, self.trunc)), -1.0, self.trunc)


def conjugated_d(a: FourierField, max_terms: int = MAX_TERMS, trunc: int | None = None) -> ConjugatedD:
    return ConjugatedD(a, max_terms, trunc)


def lie_derivative(E: FourierField, omega: FourierForm, trunc: int | None = None) -> FourierForm:
    """``L_E = d E + E d`` for an odd (CL^1) field ``E``."""
    if E.kind != "cl1":
        raise ValueError("lie_derivative takes a V + V* field")
    return dform(apply_field(E, omega, trunc)) + apply_field(E, dform(omega), trunc)


# brackets -------------------------------------------------------------------------


def _scalar_conv(f: dict[Freq, np.ndarray], g: dict[Freq, np.ndarray]) -> dict[Freq, np.ndarray]:
    out: dict[Freq, np.ndarray] = {}
    for m1, a in f.items():
        for m2, b in g.items():
            m = tuple(x + y for x, y in zip(m1, m2))
            out[m] = out.get(m, 0) + a * b
    return out


def _component(field: FourierField, i: int) -> dict[Freq, complex]:
    return {m: c[i] for m, c in field.coeffs.items()}


def _partial(f: dict[Freq, complex], j: int) -> dict[Freq, complex]:
    return {m: 2j * np.pi * m[j] * c for m, c in f.items()}


def _add_into(out: dict, f: dict, s: float = 1.0) -> None:
    for m, c in f.items():
        out[m] = out.get(m, 0) + s * c


def dorfman_formula(E: FourierField, F: FourierField, trunc: int) -> FourierCL1Field:
    """``[v, w] + L_v zeta - i_w d theta`` for ``E = v + theta``, ``F = w + zeta``."""
    n = E.n
    comps = [dict() for _ in range(2 * n)]
    v = [_component(E, j) for j in range(n)]
    th = [_component(E, n + j) for j in range(n)]
    w = [_component(F, j) for j in range(n)]
    ze = [_component(F, n + j) for j in range(n)]
    for i in range(n):
        for j in range(n):
            # [v, w]^i = v^j d_j w^i - w^j d_j v^i
            _add_into(comps[i], _scalar_conv(v[j], _partial(w[i], j)))
            _add_into(comps[i], _scalar_conv(w[j], _partial(v[i], j)), -1.0)
            # (L_v zeta)_i = v^j d_j zeta_i + zeta_j d_i v^j
            _add_into(comps[n + i], _scalar_conv(v[j], _partial(ze[i], j)))
            _add_into(comps[n + i], _scalar_conv(ze[j], _partial(v[j], i)))
            # (i_w d theta)_i = w^j (d_j theta_i - d_i theta_j)
            _add_into(comps[n + i], _scalar_conv(w[j], _partial(th[i], j)), -1.0)
            _add_into(comps[n + i], _scalar_conv(w[j], _partial(th[j], i)))
    freqs = set().union(*[set(c) for c in comps])
    coeffs = {m: np.array([c.get(m, 0) for c in comps], dtype=complex) for m in freqs if sup_norm(m) <= trunc}
    return FourierCL1Field(n, trunc, coeffs)


@dataclass(frozen=True)
class BracketReport:
    recovered: FourierCL1Field
    formula: FourierCL1Field
    operator_residual: float
    formula_residual: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.operator_residual <= self.tol and self.formula_residual <= self.tol

    def to_json(self) -> dict:
        return {
            "operator_residual": self.operator_residual,
            "formula_residual": self.formula_residual,
            "pass": self.ok,
        }


def bracket_check(E: FourierField, F: FourierField, trunc: int, samples: int = 4, seed: int = 0, tol: float = 1e-9) -> BracketReport:
    """Recover ``G`` with ``[L_E, F] = G`` as operators and compare with the Dorfman formula.

    ``G`` is read off from the images of the constant forms ``1`` (giving its
    1-form part) and ``e^i`` (whose scalar part is the ``i``-th vector component).
    """
    n = E.n
    basis = Basis(n)

    def bracket(omega: FourierForm) -> FourierForm:
        return lie_derivative(E, apply_field(F, omega, trunc), trunc) - apply_field(F, lie_derivative(E, omega, trunc), trunc)

    zero = (0,) * n
    one = np.zeros((1, basis.size))
    one[0, 0] = 1.0
    image_one = bracket(FourierForm(basis, trunc, {zero: one}))
    coeffs: dict[Freq, np.ndarray] = {}

    def slot(m):
        return coeffs.setdefault(m, np.zeros(2 * n, dtype=complex))

    for m, c in image_one.coeffs.items():
        for i in range(n):
            slot(m)[n + i] += c[0, 1 << i]
    for i in range(n):
        e = np.zeros((1, basis.size))
        e[0, 1 << i] = 1.0
        img = bracket(FourierForm(basis, trunc, {zero: e}))
        for m, c in img.coeffs.items():
            slot(m)[i] += c[0, 0]
    G = FourierCL1Field(n, trunc, coeffs)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        omega = FourierForm.random(basis, 1, rng, modes=3).with_trunc(trunc)
        diff = bracket(omega) - apply_field(G, omega, trunc)
        worst = max(worst, diff.norm() / max(omega.norm(), 1.0))
    formula = dorfman_formula(E, F, trunc)
    fres = 0.0
    for m in set(formula.coeffs) | set(G.coeffs):
        a = formula.coeffs.get(m, np.zeros(2 * n))
        b = G.coeffs.get(m, np.zeros(2 * n))
        fres = max(fres, float(np.abs(a - b).max()))
    return BracketReport(G, formula, worst, fres, tol)
