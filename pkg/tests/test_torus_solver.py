import json

import numpy as np
import pytest

from genform.clifford import CL2Element, cl2_dim
from genform.multivector import Basis, FormTuple, Multivector, grade
from genform.orbit_analysis import cl2_action_matrix
from genform.structures import make_sl, make_spin7
from genform.torus_solver import (
    FourierCL1Field,
    FourierCL2Field,
    FourierForm,
    NotClosed,
    NotClosedPerturbation,
    Obstructed,
    TruncationTooSmall,
    apply_field,
    bracket_check,
    closed_perturbation,
    conjugated_d,
    ddJ_check,
    de_rham_hodge,
    deform,
    dform,
    exp_wedge,
    fourier_wedge,
    hodge_package,
    period,
    period_derivative,
    residual_oracle,
    sl_sequence_check,
    spin7_correction,
    topological_check,
)
from genform.torus_solver import hodge as hodge_mod
from genform.torus_solver.hodge import real_structure


def mono(n, *labels):
    return Multivector.monomial(Basis(n), *labels).coeffs


@pytest.fixture(scope="module")
def sl2_package():
    return hodge_package(real_structure(make_sl(2)), 3)


def test_dform_single_mode():
    m = (1, 0, 0, 0)
    alpha = FourierForm(Basis(4), 2, {m: mono(4, 2)[None]}, reality=False)
    d = dform(alpha)
    assert np.allclose(d.coeff(m)[0], 2j * np.pi * mono(4, 1, 2))
    assert dform(d).norm() == 0.0


def test_dform_squares_to_zero_and_keeps_reality(rng):
    w = FourierForm.random(Basis(4), 2, rng, ncomp=2, modes=5)
    assert w.reality_residual() < 1e-14
    assert dform(dform(w)).norm() < 1e-10
    assert dform(w).reality_residual() < 1e-12


def test_leibniz_rule(rng):
    b = Basis(3)
    a = FourierForm.random(b, 1, rng, modes=2, grades=[1])
    c = FourierForm.random(b, 1, rng, modes=2)
    lhs = dform(fourier_wedge(a, c, 2))
    rhs = fourier_wedge(dform(a), c, 2) - fourier_wedge(a, dform(c), 2)
    assert (lhs - rhs).norm() < 1e-9


def test_truncation_errors(rng):
    with pytest.raises(TruncationTooSmall):
        FourierForm(Basis(2), 1, {(2, 0): np.ones((1, 4))})
    a = FourierCL2Field.single_mode(2, 1, (1, 0), rng.normal(size=cl2_dim(2)))
    w = FourierForm.single_mode(np.ones(4), (1, 0), 1, Basis(2))
    with pytest.raises(TruncationTooSmall):
        apply_field(a, w, 1)


def test_fourier_json_round_trip(rng):
    w = FourierForm.random(Basis(3), 1, rng, ncomp=2, modes=3)
    back = FourierForm.from_json(json.loads(json.dumps(w.to_json())))
    assert all(np.array_equal(back.coeff(m), w.coeff(m)) for m in w.frequencies())
    f = FourierCL2Field.single_mode(3, 2, (1, 0, 1), rng.normal(size=cl2_dim(3)))
    g = FourierCL2Field.from_json(json.loads(f.dumps()))
    assert all(np.array_equal(g.coeffs[m], f.coeffs[m]) for m in f.frequencies())


def test_parseval_norm():
    w = FourierForm.single_mode(np.array([1.0, 0, 0, 0]), (1, 0), 1, Basis(2))
    assert np.isclose(w.norm(), np.sqrt(2.0))


def test_de_rham_laplacian():
    for m in [(1, 0, 0, 0), (1, -2, 0, 3)]:
        h = de_rham_hodge(4, m)
        expect = 4 * np.pi**2 * np.dot(m, m)
        assert np.allclose(h.laplacian(0), expect * np.eye(16))


def test_hodge_identities(sl2_package):
    for m in [(1, 0, 0, 0), (1, 1, 0, 0), (2, -1, 1, 0)]:
        h = sl2_package.at(m)
        for k in (0, 1, 2):
            assert h.identity_residual(k) < 1e-9
            P = h.harmonic(k)
            assert np.abs(P @ P - P).max() < 1e-9
        assert h.harmonic_dim(1) == 0 and h.harmonic_dim(2) == 0
        # E^{-1} is a real line, so the i*Phi direction survives at degree 0
        assert h.harmonic_dim(0) == 1
        assert np.abs(h.dk(1) @ h.dk(0)).max() < 1e-9


def test_topological_check():
    rep = topological_check(make_sl(2), 1)
    assert rep.ok
    assert rep.zero_mode_dims == {1: 14, 2: 16}
    dr = topological_check(None, 1, n=3)
    assert dr.max_cohomology == {1: 0, 2: 0}
    # constant forms carry cohomology, so the zero mode is reported
    assert dr.failing == ((0, 0, 0),)


def test_conjugated_d_nilpotent_and_general(rng):
    n = 4
    b = rng.normal(size=(n, n))
    nil = FourierCL2Field.constant(n, 2, CL2Element.from_parts(n, two_form=b - b.T).to_vector())
    gen = FourierCL2Field.constant(n, 2, 0.3 * rng.normal(size=cl2_dim(n)))
    for a in (nil, gen):
        op = conjugated_d(a)
        for _ in range(3):
            w = FourierForm.random(Basis(n), 1, rng, modes=3).with_trunc(2)
            assert (op(w) - op.reference(w)).norm() <= 1e-10 * max(1.0, w.norm())
            assert op.converged
    op = conjugated_d(nil)
    op(w)
    assert op.last_terms <= 3


def test_bracket_check(rng):
    n = 3
    E = FourierCL1Field.single_mode(n, 1, (1, 0, 0), rng.normal(size=2 * n) + 1j * rng.normal(size=2 * n))
    F = FourierCL1Field.single_mode(n, 1, (0, 1, 0), rng.normal(size=2 * n) + 1j * rng.normal(size=2 * n))
    rep = bracket_check(E, F, 3)
    assert rep.ok, rep.to_json()


def test_deform_zero_field():
    phi = make_sl(2)
    zero = FourierCL2Field.zero(4, 4)
    s = deform(phi, zero, 3, 4)
    assert all(f.norm() == 0 for f in s.fields)
    assert s.max_residual == 0.0


def test_deform_constant_field(rng, sl2_package):
    phi = make_sl(2)
    real = real_structure(phi)
    # a constant a1 in the stabilizer of d: any constant element works since d of a constant vanishes
    a1 = FourierCL2Field.constant(4, 2, 0.2 * rng.normal(size=cl2_dim(4)))
    s = deform(phi, a1, 3, 2, package=sl2_package)
    assert s.ok()
    assert all(f.norm() == 0 for f in s.fields[1:])
    assert np.allclose(period_derivative(s).array, (real.array @ a1.matrix((0,) * 4).real.T))


def test_deform_single_mode(rng, sl2_package):
    phi = make_sl(2)
    a1 = closed_perturbation(phi, [(1, 0, 0, 0)], 6, rng, 0.3)
    s = deform(phi, a1, 4, 6, package=sl2_package)
    assert s.ok() and s.max_residual < 1e-8
    assert all(h <= 1e-9 * t + 1e-12 for h, t in zip(s.obstruction_norms, s.obstruction_totals))
    assert max(s.e2_residuals) < 1e-9
    again = deform(phi, a1, 4, 6, package=sl2_package)
    assert all(
        np.array_equal(f.coeffs[m], g.coeffs[m]) for f, g in zip(s.fields, again.fields) for m in f.coeffs
    )
    assert json.dumps(s.to_json()) == json.dumps(again.to_json())


def test_deform_errors(rng, sl2_package, monkeypatch):
    phi = make_sl(2)
    a1 = closed_perturbation(phi, [(1, 0, 0, 0)], 6, rng, 0.3)
    with pytest.raises(TruncationTooSmall):
        deform(phi, a1, 7, 6, package=sl2_package)
    bad = FourierCL2Field.single_mode(4, 2, (1, 0, 0, 0), rng.normal(size=cl2_dim(4)))
    with pytest.raises(NotClosedPerturbation):
        deform(phi, bad, 2, 2, package=sl2_package)
    # an injected harmonic projector that keeps everything must be reported as an obstruction
    monkeypatch.setattr(hodge_mod.FrequencyHodge, "harmonic", lambda self, k: np.eye(self.dims[k]))
    with pytest.raises(Obstructed) as err:
        deform(phi, a1, 3, 6, package=hodge_package(real_structure(phi), 3))
    assert err.value.k == 2


def test_residual_oracle_detects_wrong_fields(rng, sl2_package):
    phi = make_sl(2)
    a1 = closed_perturbation(phi, [(1, 1, 0, 0)], 4, rng, 0.3)
    s = deform(phi, a1, 2, 4, package=sl2_package)
    broken = [s.fields[0], s.fields[1] * 1.5]
    res = residual_oracle(real_structure(phi), broken, 2, 4)
    assert res[0] < 1e-10 and res[1] > 1e-4


def test_period_examples(rng):
    Phi = FourierForm.constant(make_sl(2).split(), 3)
    assert period(Phi).allclose(make_sl(2).split())
    w = FourierForm.single_mode(mono(4, 2), (1, 0, 0, 0), 3, Basis(4))
    with pytest.raises(NotClosed):
        period(w)
    gamma = FourierForm.single_mode(rng.normal(size=16) * (np.array([grade(k) for k in range(16)]) == 1), (0, 1, 0, 0), 1, Basis(4))
    re_omega = FormTuple.of(make_sl(2).split()[0])
    moved = exp_wedge(dform(gamma), FourierForm.constant(re_omega, 1), 3)
    assert np.abs(period(moved).array - re_omega.array).max() < 1e-11


def test_spin7_correction(rng):
    alpha = FourierForm.random(Basis(8), 1, rng, modes=2, grades=[0, 2, 4, 6, 8])
    minus, rep = spin7_correction(alpha)
    assert rep.ok, rep.to_json()
    assert rep.d_residual <= 1e-9 and rep.asd_residual <= 1e-10
    with pytest.raises(ValueError):
        spin7_correction(FourierForm.random(Basis(8), 1, rng, modes=1, grades=[1]))


def test_ddj_and_sequence(rng):
    assert ddJ_check(make_sl(2), trunc=1).ok
    for n, (h1, hm1, h2) in [(2, (7, 1, 6)), (3, (16, 1, 15))]:
        rep = sl_sequence_check(make_sl(n))
        assert rep.ok and (rep.h1, rep.h_minus1, rep.h2_dbar) == (h1, hm1, h2)
    b = rng.normal(size=(4, 4))
    g = CL2Element.from_parts(4, two_form=0.3 * (b - b.T))
    from genform.structures import StructureSpec

    moved = StructureSpec("sl", 2, (g,)).build()
    assert sl_sequence_check(moved).ok


def test_wedge_into_each_component(rng):
    b = Basis(3)
    a = FourierForm.random(b, 1, rng, modes=2, grades=[1])
    pair = FourierForm.random(b, 1, rng, ncomp=2, modes=2)
    both = fourier_wedge(a, pair, 2)
    for k in range(2):
        single = FourierForm(b, 1, {m: c[k : k + 1] for m, c in pair.coeffs.items()})
        one = fourier_wedge(a, single, 2)
        assert all(np.allclose(both.coeff(m)[k], one.coeff(m)[0]) for m in one.frequencies())
    with pytest.raises(ValueError):
        fourier_wedge(pair, a, 2)
