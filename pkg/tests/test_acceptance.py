"""Acceptance criteria at their stated tolerances and runtime budgets."""

import time

import numpy as np
import pytest

from genform.clifford import CL2Element, cl2_dim
from genform.multivector import Basis, FormTuple, grade
from genform.orbit_analysis import (
    asd_even_check,
    cl2_action_matrix,
    ellipticity_scan,
    fiber_complex,
    isotropy_algebra,
    lambda2_decompose,
    numerical_rank,
    primitive_frequencies,
)
from genform.structures import hk_relations, make_hk, make_sl, make_spin7
from genform.torus_solver import (
    FourierCL2Field,
    FourierForm,
    closed_perturbation,
    conjugated_d,
    ddJ_check,
    deform,
    dform,
    exp_wedge,
    hodge_package,
    period,
    period_derivative,
    sl_sequence_check,
    spin7_correction,
)
from genform.torus_solver.hodge import real_structure
from genform.verify import clifford_identities

pytestmark = pytest.mark.acceptance


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.seconds = time.perf_counter() - self.start


def test_criterion_01_clifford_identities(criterion):
    rng = np.random.default_rng(1)
    with Timer() as t:
        worst = {n: max(clifford_identities(n, 500, rng).values()) for n in (4, 7, 8)}
    ok = max(worst.values()) <= 1e-9 and t.seconds < 10
    criterion(1, "Clifford/spin identities, 500 cases, n=4,7,8", ok, t.seconds, f"max residual {max(worst.values()):.1e}")
    assert max(worst.values()) <= 1e-9, worst
    assert t.seconds < 10


def test_criterion_02_conjugated_d(criterion):
    rng = np.random.default_rng(2)
    n = 4
    b = rng.normal(size=(n, n))
    fields = {
        "nilpotent": FourierCL2Field.constant(n, 2, CL2Element.from_parts(n, two_form=b - b.T).to_vector()),
        "general": FourierCL2Field.constant(n, 2, 0.3 * rng.normal(size=cl2_dim(n))),
    }
    worst, converged = 0.0, True
    with Timer() as t:
        for a in fields.values():
            op = conjugated_d(a)
            for _ in range(20):
                w = FourierForm.random(Basis(n), 1, rng, modes=4).with_trunc(2)
                worst = max(worst, (op(w) - op.reference(w)).norm() / max(1.0, w.norm()))
                converged &= op.converged
    ok = worst <= 1e-10 and converged and t.seconds < 10
    criterion(2, "exp(ad a) d = e^-a d e^a, nilpotent and general a on T^4", ok, t.seconds, f"max residual {worst:.1e}")
    assert converged and worst <= 1e-10
    assert t.seconds < 10


def test_criterion_03_spin7_fiber_facts(criterion):
    with Timer() as t:
        phi = make_spin7()
        iso = isotropy_algebra(phi)
        lam = lambda2_decompose()
        e1_rank = numerical_rank(cl2_action_matrix(phi))
        fc = fiber_complex(phi, 2)
        asd = asd_even_check()
    checks = {
        "isotropy 42": iso.dim == 42,
        "scalar part 0": iso.scalar_max < 1e-12,
        "endo rank 21": iso.endo_rank == 21,
        "b+beta = q+q*": iso.q_plus_qstar_residual < 1e-10,
        "eigenvalues": np.allclose(lam.eigenvalues, (3, -1), atol=1e-8),
        "multiplicities": lam.multiplicities == (7, 21),
        "dim E1 rank oracle": e1_rank == 79 == cl2_dim(8) - 42,
        "dim E1 fiber": fc.E(1).rank == 79,
        "asd dim 64": asd.dim == 64,
        "containment": asd.containment_residual <= 1e-9,
        "families": asd.ok,
    }
    ok = all(checks.values()) and t.seconds < 30
    criterion(3, "Spin(7) fiber facts", ok, t.seconds, ", ".join(k for k, v in checks.items() if not v))
    assert all(checks.values()), checks
    assert t.seconds < 30


def test_criterion_04_sl_dimension_tables(criterion):
    with Timer() as t:
        got = {n: fiber_complex(make_sl(n), 2) for n in (2, 3)}
    expect = {2: (4, 7, 8), 3: (6, 16, 26)}
    ok = all(
        tuple(got[n].complex_dims[1:4]) == expect[n] and got[n].dims[1:4] == [2 * d for d in expect[n]] for n in (2, 3)
    )
    ok_all = ok and t.seconds < 30
    detail = "; ".join(f"n={n}: {tuple(got[n].complex_dims[1:4])}" for n in (2, 3))
    criterion(4, "SL_n fiber dimension tables, n=2,3", ok_all, t.seconds, detail)
    assert ok
    assert t.seconds < 30


def test_criterion_05_ellipticity(criterion):
    rng = np.random.default_rng(5)
    results = {}
    with Timer() as t:
        for n in (2, 3):
            phi = make_sl(n)
            fc = fiber_complex(phi, 3)
            xs = rng.normal(size=(100, 2 * n))
            xs /= np.linalg.norm(xs, axis=1, keepdims=True)
            # symbol exactness is invariant under xi -> c xi, so primitive frequencies up to sign cover all m
            freqs = primitive_frequencies(2 * n, 3).astype(float)
            results[n] = (
                ellipticity_scan(phi, xs, (1, 2), tol=1e-8, fc=fc),
                ellipticity_scan(phi, freqs, (1, 2), tol=1e-8, fc=fc),
            )
    ok = all(r.ok and r.max_defect == 0 for pair in results.values() for r in pair)
    detail = ", ".join(f"SL{n}: {pair[0].samples}+{pair[1].samples} covectors" for n, pair in results.items())
    criterion(5, "symbol ellipticity at degrees 1, 2 for SL2, SL3", ok and t.seconds < 60, t.seconds, detail)
    assert ok
    assert t.seconds < 60


def test_criterion_06_ddj_and_sequences(criterion):
    with Timer() as t:
        rep = ddJ_check(make_sl(2), trunc=2)
        seq = {n: sl_sequence_check(make_sl(n)) for n in (2, 3)}
    dims_ok = (seq[2].h1, seq[2].h_minus1, seq[2].h2_dbar) == (7, 1, 6) and (
        seq[3].h1,
        seq[3].h_minus1,
        seq[3].h2_dbar,
    ) == (16, 1, 15)
    ok = rep.ok and all(s.ok for s in seq.values()) and dims_ok
    criterion(6, "ddJ equivalence on T^4 and 7=1+6, 16=1+15", ok and t.seconds < 60, t.seconds, f"{rep.frequencies} frequencies")
    assert ok
    assert t.seconds < 60


def test_criterion_07_sl_deformation(criterion):
    rng = np.random.default_rng(0)
    phi = make_sl(2)
    with Timer() as t:
        a1 = closed_perturbation(phi, [(1, 1, 0, 0)], 8, rng, 0.3)
        s = deform(phi, a1, 6, 8)
    unobstructed = all(h <= 1e-9 * tot + 1e-12 for h, tot in zip(s.obstruction_norms, s.obstruction_totals))
    ok = unobstructed and len(s.residuals) == 6 and s.max_residual <= 1e-8
    criterion(7, "unobstructed SL2 deformation, K=6, N=8", ok and t.seconds < 120, t.seconds, f"max residual {s.max_residual:.1e}")
    assert ok
    assert t.seconds < 120


def test_criterion_08_spin7_correction_and_deformation(criterion):
    rng = np.random.default_rng(8)
    basis = Basis(8)
    worst_d, worst_asd, contained = 0.0, 0.0, 0.0
    with Timer() as t:
        for _ in range(20):
            gamma = FourierForm.random(basis, 1, rng, modes=2, grades=[1, 3, 5, 7])
            alpha = dform(gamma)
            _, rep = spin7_correction(alpha)
            worst_d = max(worst_d, rep.d_residual)
            worst_asd = max(worst_asd, rep.asd_residual)
            contained = max(contained, rep.containment_residual)
        phi = make_spin7()
        modes = [(1, 0) + (0,) * 6, (0, 1) + (0,) * 6, (1, 1) + (0,) * 6, (1, -1) + (0,) * 6]
        a1 = closed_perturbation(phi, modes, 4, rng, 0.3)
        s = deform(phi, a1, 3, 4, route="spin7")
    ok = worst_d <= 1e-9 and worst_asd <= 1e-10 and contained <= 1e-9 and s.ok()
    assert a1.active_coordinates() == {0, 1}
    detail = f"d {worst_d:.1e}, asd {worst_asd:.1e}, deform residual {s.max_residual:.1e}"
    criterion(8, "Spin(7) correction and deformation on T^8, K=3, N=4", ok and t.seconds < 600, t.seconds, detail)
    assert ok
    assert t.seconds < 600


def test_criterion_09_hyperkaehler(criterion):
    with Timer() as t:
        rep = hk_relations(make_hk(1))
    ok = rep.ok and max(rep.residuals.values()) <= 1e-10 and np.allclose(rep.G @ rep.G, np.eye(len(rep.G)), atol=1e-10)
    criterion(9, "hyperKaehler relations, m=1", ok and t.seconds < 5, t.seconds, f"max residual {max(rep.residuals.values()):.1e}")
    assert ok
    assert t.seconds < 5


def _period_invariance(phi: FormTuple, rng, count: int) -> float:
    real = real_structure(phi)
    n = real.n
    Phi = FourierForm.constant(real, 1)
    one_forms = np.array([grade(k) == 1 for k in range(1 << n)])
    worst = 0.0
    for _ in range(count):
        m = tuple(rng.integers(-1, 2, size=n))
        if not any(m):
            m = (1,) + m[1:]
        coeff = (rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)) * one_forms
        gamma = FourierForm.single_mode(coeff, m, 1, Basis(n))
        moved = exp_wedge(dform(gamma), Phi, 2 * n)
        worst = max(worst, float(np.abs(period(moved).array - real.array).max()))
    return worst


def _period_rank(phi: FormTuple) -> tuple[int, int]:
    real = real_structure(phi)
    n = real.n
    fc = fiber_complex(real, 2)
    pkg = hodge_package(real, 3, fibers=None)
    Mpinv = np.linalg.pinv(cl2_action_matrix(real), rcond=1e-10)
    images = []
    for col in fc.E(1).basis.T:
        a1 = FourierCL2Field.constant(n, 1, Mpinv @ col)
        s = deform(phi, a1, 1, 1, check_residual=False, package=pkg)
        images.append(period_derivative(s).array.reshape(-1))
    return numerical_rank(np.stack(images, axis=1)), fc.E(1).rank


def test_criterion_10_period(criterion):
    rng = np.random.default_rng(10)
    with Timer() as t:
        inv = {name: _period_invariance(phi, rng, 20) for name, phi in (("T4", make_sl(2)), ("T8", make_spin7()))}
        ranks = {name: _period_rank(phi) for name, phi in (("SL2", make_sl(2)), ("Spin7", make_spin7()))}
    ok = max(inv.values()) <= 1e-11 and all(r == d for r, d in ranks.values())
    detail = f"invariance {max(inv.values()):.1e}, ranks " + ", ".join(f"{k} {r}/{d}" for k, (r, d) in ranks.items())
    criterion(10, "period invariance and full-rank period derivative", ok and t.seconds < 30, t.seconds, detail)
    assert ok
    assert t.seconds < 30
