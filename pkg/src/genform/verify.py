"""Randomized identity suites shared by the command line and the test-suite."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .clifford import CL2Element, CliffordElement, cl2_dim, pairing, reversal_sigma
from .multivector import Basis, FormTuple, Multivector
from .orbit_analysis import lambda2_decompose
from .spinrep import act, b_transform, exp_action, gl_lift_action
from .structures import hk_relations, make_hk
from .torus_solver.fourier import FourierField, FourierForm
from .torus_solver.operators import conjugated_d

__all__ = ["SuiteResult", "SUITES", "run_suites", "clifford_identities", "DEFAULT_TOL"]

DEFAULT_TOL = 1e-9


@dataclass
class SuiteResult:
    name: str
    residuals: dict[str, float]
    tol: float
    seconds: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(np.isfinite(v) and v <= self.tol for v in self.residuals.values())

    def worst(self) -> tuple[str, float]:
        return max(self.residuals.items(), key=lambda kv: kv[1])

    def to_json(self, timing: bool = False) -> dict:
        out = {"residuals": self.residuals, "tol": self.tol, "pass": self.ok}
        out.update(self.extra)
        if timing:
            out["seconds"] = self.seconds
        return out


def _random_element(basis: Basis, rng: np.random.Generator) -> CliffordElement:
    size = basis.size
    # uniform entries are cheaper to draw than normal ones at 256 x 256
    return CliffordElement(basis, rng.uniform(-1.0, 1.0, size=(size, size)) / np.sqrt(size))


def clifford_identities(n: int, cases: int, rng: np.random.Generator) -> dict[str, float]:
    """Max residuals of the defining Clifford relations and spin-representation identities."""
    basis = Basis(n)
    size = basis.size
    eye = np.eye(size)
    worst = dict.fromkeys(["square", "polarized", "associativity", "sigma_anti", "act_homomorphism"], 0.0)
    phi = FormTuple.of(Multivector(basis, rng.normal(size=size)), Multivector(basis, rng.normal(size=size)))
    for _ in range(cases):
        x, y = rng.normal(size=2 * n), rng.normal(size=2 * n)
        X = CliffordElement.vector(basis, x).matrix
        Y = CliffordElement.vector(basis, y).matrix
        worst["square"] = max(worst["square"], float(np.abs(X @ X - pairing(x, x) * eye).max()))
        worst["polarized"] = max(worst["polarized"], float(np.abs(X @ Y + Y @ X - 2 * pairing(x, y) * eye).max()))
        a, b, c = (_random_element(basis, rng) for _ in range(3))
        ab = a * b
        lhs = (ab * c).matrix
        rhs = (a * (b * c)).matrix
        worst["associativity"] = max(worst["associativity"], float(np.abs(lhs - rhs).max()))
        sig = reversal_sigma(ab).matrix - (reversal_sigma(b) * reversal_sigma(a)).matrix
        worst["sigma_anti"] = max(worst["sigma_anti"], float(np.abs(sig).max()))
        hom = act(ab, phi).array - act(a, act(b, phi)).array
        worst["act_homomorphism"] = max(worst["act_homomorphism"], float(np.abs(hom).max()))
    return worst


def _suite_clifford(rng, cases):
    out = {}
    for n in (4, 7):
        for k, v in clifford_identities(n, cases, rng).items():
            out[f"n{n}_{k}"] = v
    return out


def _suite_spinrep(rng, cases):
    n = 4
    basis = Basis(n)
    phi = FormTuple.of(Multivector(basis, rng.normal(size=basis.size)))
    worst = {"gl_lift_composition": 0.0, "b_transform": 0.0}
    for _ in range(cases):
        g = np.eye(n) + 0.2 * rng.normal(size=(n, n))
        h = np.eye(n) + 0.2 * rng.normal(size=(n, n))
        if np.linalg.det(g) <= 0 or np.linalg.det(h) <= 0:
            continue
        lhs = gl_lift_action(g @ h, phi).array
        rhs = gl_lift_action(g, gl_lift_action(h, phi)).array
        worst["gl_lift_composition"] = max(worst["gl_lift_composition"], float(np.abs(lhs - rhs).max()))
        b = rng.normal(size=(n, n))
        b = b - b.T
        via_exp = exp_action(CL2Element.from_parts(n, two_form=b), phi).array
        direct = b_transform(Multivector.two_form(basis, b), phi).array
        worst["b_transform"] = max(worst["b_transform"], float(np.abs(via_exp - direct).max()))
    return worst


def _suite_conjugation(rng, cases):
    n = 4
    basis = Basis(n)
    dim = cl2_dim(n)
    off = 1 + n * n
    b = np.zeros(dim)
    b[off : off + n * (n - 1) // 2] = rng.normal(size=n * (n - 1) // 2)
    general = 0.3 * rng.normal(size=dim)
    out = {}
    for label, vec in (("nilpotent", b), ("general", general)):
        op = conjugated_d(FourierField.constant(n, 2, vec))
        worst = 0.0
        for _ in range(max(1, cases // 10)):
            om = FourierForm.random(basis, 1, rng, modes=4).with_trunc(2)
            worst = max(worst, (op(om) - op.reference(om)).norm() / max(1.0, om.norm()))
        out[label] = worst
        out[f"{label}_converged"] = 0.0 if op.converged else 1.0
    return out


def _suite_spin7(rng, cases):
    rep = lambda2_decompose()
    return {
        "eigenvalue_3": abs(rep.eigenvalues[0] - 3.0),
        "eigenvalue_-1": abs(rep.eigenvalues[1] + 1.0),
        "multiplicities": float(rep.multiplicities != (7, 21)),
        "q_plus_qstar": rep.annihilation_residual,
    }


def _suite_hk(rng, cases):
    return hk_relations(make_hk(1)).residuals


SUITES: dict[str, Callable] = {
    "clifford": _suite_clifford,
    "spinrep": _suite_spinrep,
    "conjugation": _suite_conjugation,
    "spin7": _suite_spin7,
    "hk": _suite_hk,
}


def run_suites(names=None, cases: int = 50, seed: int = 0, tol: float = DEFAULT_TOL) -> list[SuiteResult]:
    names = list(SUITES) if names is None else list(names)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s): {', '.join(unknown)}")
    results = []
    for name in names:
        rng = np.random.default_rng(seed)
        start = time.perf_counter()
        res = {k: float(v) for k, v in SUITES[name](rng, cases).items()}
        results.append(SuiteResult(name, res, tol, time.perf_counter() - start))
    return results
