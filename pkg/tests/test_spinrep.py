import numpy as np
import pytest
from scipy.linalg import expm

from genform.clifford import CL2Element, CliffordElement, ad_tilde, cl2_dim, exp_cl2, pairing, tau
from genform.multivector import Basis, FormTuple, Multivector, grade, interior, wedge
from genform.spinrep import act, b_transform, beta_transform, gl_lift_action
from genform.structures import cayley_form, make_spin7


def rand_tuple(rng, n, l=1):
    return FormTuple(tuple(Multivector(Basis(n), rng.normal(size=1 << n)) for _ in range(l)))


def test_act_examples(rng):
    n = 3
    x = rng.normal(size=2 * n)
    one = FormTuple.of(Multivector.scalar(Basis(n)))
    out = act(x, one)
    assert out[0].allclose(Multivector.one_form(Basis(n), x[n:]))
    phi = rand_tuple(rng, n, 2)
    twice = act(x, act(x, phi))
    assert twice.allclose(phi * pairing(x, x), 1e-10)


def test_act_homomorphism_and_parity(rng):
    n = 3
    basis = Basis(n)
    a = CliffordElement(basis, rng.normal(size=(8, 8)))
    b = CliffordElement(basis, rng.normal(size=(8, 8)))
    phi = rand_tuple(rng, n, 2)
    assert act(a * b, phi).allclose(act(a, act(b, phi)), 1e-10)
    even = CL2Element.from_vector(n, rng.normal(size=cl2_dim(n)))
    psi = FormTuple.of(Multivector(basis, rng.normal(size=8) * np.array([grade(k) % 2 == 0 for k in range(8)])))
    out = act(even, psi)[0].coeffs
    assert np.allclose(out[[k for k in range(8) if grade(k) % 2]], 0)


def test_gl_lift_examples(rng):
    phi = make_spin7()
    assert gl_lift_action(np.eye(8), phi).allclose(phi)
    lam = 1.3
    out = gl_lift_action(lam * np.eye(8), phi)[0]
    vol = Multivector.monomial(Basis(8), *range(1, 9))
    expect = Multivector.scalar(Basis(8), lam**4) - cayley_form() + vol * lam**-4
    assert out.allclose(expect, 1e-10)
    with pytest.raises(ValueError):
        gl_lift_action(-np.eye(8) @ np.diag([1] * 7 + [-1]) @ np.diag([1] * 7 + [-1]) * np.diag([1] * 7 + [-1]), phi)


def test_gl_lift_derivative_is_tau(rng):
    n = 4
    A = rng.normal(size=(n, n))
    phi = rand_tuple(rng, n)
    h = 1e-4
    deriv = (gl_lift_action(expm(h * A), phi).array - gl_lift_action(expm(-h * A), phi).array) / (2 * h)
    assert np.allclose(deriv, phi.array @ tau(A).T, atol=1e-8)


def test_gl_lift_is_a_representation(rng):
    n = 4
    g = np.eye(n) + 0.2 * rng.normal(size=(n, n))
    h = np.eye(n) + 0.2 * rng.normal(size=(n, n))
    phi = rand_tuple(rng, n)
    assert gl_lift_action(g @ h, phi).allclose(gl_lift_action(g, gl_lift_action(h, phi)), 1e-10)


def test_b_and_beta_transforms(rng):
    n = 4
    basis = Basis(n)
    b = rng.normal(size=(n, n))
    b = b - b.T
    one = FormTuple.of(Multivector.scalar(basis))
    bf = Multivector.two_form(basis, b)
    expect = Multivector.scalar(basis) + bf + wedge(bf, bf) * 0.5
    assert b_transform(bf, one)[0].allclose(expect)
    assert b_transform(Multivector.zero(basis), one).allclose(one)
    phi = rand_tuple(rng, n, 2)
    assert b_transform(bf, phi).allclose(act(exp_cl2(CL2Element.from_parts(n, two_form=b)), phi), 1e-10)
    # beta on the volume form: i_beta = sum_{i<j} beta_ij i_{v_i} i_{v_j}
    beta = rng.normal(size=(n, n))
    beta = beta - beta.T
    vol = Multivector.monomial(basis, 1, 2, 3, 4)
    ib = Multivector.zero(basis)
    for i in range(n):
        for j in range(i + 1, n):
            ei = np.eye(n)[i]
            ej = np.eye(n)[j]
            ib = ib + interior(ei, interior(ej, vol)) * beta[i, j]
    out = beta_transform(beta, FormTuple.of(vol))[0]
    assert out.grade_part(4).allclose(vol) and out.grade_part(2).allclose(ib)


def test_equivariance_of_twisted_adjoint(rng):
    n = 3
    g = exp_cl2(CL2Element.from_vector(n, 0.3 * rng.normal(size=cl2_dim(n))))
    x = rng.normal(size=2 * n)
    y = ad_tilde(g, x)
    E = CliffordElement.vector(Basis(n), x)
    F = CliffordElement.vector(Basis(n), y)
    from genform.clifford import involution_tilde

    lhs = involution_tilde(g).inverse() * E * g
    assert lhs.allclose(F, 1e-9)
