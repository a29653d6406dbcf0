import json

import numpy as np
import pytest

from genform.clifford import CL2Element, cl2_dim
from genform.multivector import Basis, Multivector, hodge_star, wedge
from genform.orbit_analysis import isotropy_algebra
from genform.spinrep import gl_lift_action
from genform.structures import (
    Degenerate,
    StructureSpec,
    annihilator,
    cayley_form,
    cy_check,
    g2_form,
    gcs_from_spinor,
    hk_relations,
    make_cy,
    make_g2,
    make_hk,
    make_sl,
    make_spin7,
    octonion_mul,
    preserves_pairing,
    standard_symplectic,
    u_spaces,
)


def mono(n, *labels, coeff=1.0):
    return Multivector.monomial(Basis(n), *labels, coeff=coeff)


def test_sl2_expansion():
    omega = make_sl(2)[0]
    expect = mono(4, 1, 3) - mono(4, 2, 4) + mono(4, 1, 4, coeff=1j) + mono(4, 2, 3, coeff=1j)
    assert omega.allclose(expect)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_sl_annihilator(n):
    iso = annihilator(make_sl(n))
    assert iso.L.rank == 2 * n


def test_u_space_dims():
    U = u_spaces(make_sl(2))
    assert U.dims() == [1, 4, 6, 4, 1]
    assert sum(U.dims()) == 16
    assert U.u(-2).residual(make_sl(2)[0].coeffs[:, None]) < 1e-12


def test_degenerate_rejected():
    with pytest.raises(Degenerate):
        annihilator(Multivector.scalar(Basis(3)))
    with pytest.raises(Degenerate):
        annihilator(mono(4, 1, 2) + mono(4, 3, 4, coeff=0.0))  # not pure in dim 4 without the unit term


def test_gcs_properties():
    for phi in (make_sl(2), make_sl(3), make_cy(2)[1]):
        J = gcs_from_spinor(phi)
        assert np.allclose(J @ J, -np.eye(len(J)))
        assert preserves_pairing(J)


def test_symplectic_gcs_is_standard():
    omega = standard_symplectic(2)
    phi = make_cy(1)[1]
    J = gcs_from_spinor(phi)
    W = omega.two_form_matrix()
    assert np.allclose(W, -W.T)
    n = 2
    # block form (0, -W^{-1}; W, 0) up to an overall sign convention
    assert np.allclose(J[:n, :n], 0) and np.allclose(J[n:, n:], 0)
    assert np.allclose(np.abs(J[n:, :n]), np.abs(W))


def test_cy_model():
    Omega, e_iomega = make_cy(2)
    omega = mono(4, 1, 2) + mono(4, 3, 4)
    assert (e_iomega.grade_part(2) * -1j).allclose(omega)
    assert wedge(Omega, omega).allclose(Multivector.zero(Basis(4)))
    assert wedge(omega, omega).allclose(mono(4, 1, 2, 3, 4, coeff=2.0))
    assert wedge(Omega, Omega.conj()).allclose(mono(4, 1, 2, 3, 4, coeff=4.0))
    rep = cy_check(Omega, omega)
    assert rep.ok
    assert np.isclose(rep.c, 2.0)
    assert np.allclose(rep.metric, np.eye(4))


def test_cy_check_reports_failures():
    Omega, _ = make_cy(2)
    rep = cy_check(Omega, mono(4, 1, 3))
    assert not rep.ok


def test_hk_relations():
    rep = hk_relations(make_hk(1))
    assert rep.ok, rep.residuals
    assert rep.residuals["G^2"] <= 1e-10
    assert np.allclose(rep.G @ rep.G, np.eye(8))


def test_octonions(rng):
    one = np.eye(8)[0]
    for i in range(1, 8):
        ei = np.eye(8)[i]
        assert np.allclose(octonion_mul(ei, ei), -one)
        assert np.allclose(octonion_mul(one, ei), ei) and np.allclose(octonion_mul(ei, one), ei)
    for _ in range(100):
        x, y = rng.normal(size=8), rng.normal(size=8)
        assert np.isclose(np.linalg.norm(octonion_mul(x, y)), np.linalg.norm(x) * np.linalg.norm(y))


def test_g2_and_spin7_forms():
    phi = g2_form()
    assert np.count_nonzero(np.abs(phi.coeffs) > 1e-12) == 7
    assert set(np.abs(phi.coeffs[np.abs(phi.coeffs) > 1e-12])) == {1.0}
    phis = cayley_form()
    assert np.count_nonzero(np.abs(phis.coeffs) > 1e-12) == 14
    sq = wedge(phis, phis)
    top = Basis(8).top()
    assert sq.coeffs[top] > 0
    assert np.allclose(np.delete(sq.coeffs, top), 0)
    Phi = make_spin7()[0]
    vol = mono(8, *range(1, 9))
    assert Phi.allclose(Multivector.scalar(Basis(8)) - phis + vol)
    pair = make_g2()
    assert len(pair) == 2
    assert pair[1].grade_part(4).allclose(-hodge_star(phi))


def test_structure_spec_json_round_trip(rng):
    t = CL2Element.from_vector(4, 0.1 * rng.normal(size=cl2_dim(4)))
    spec = StructureSpec("sl", 2, (t,))
    back = StructureSpec.from_json(json.loads(json.dumps(spec.to_json())))
    assert back.kind == "sl" and back.n == 2
    assert back.build().allclose(spec.build())
    with pytest.raises(ValueError):
        StructureSpec("bogus")
    with pytest.raises(ValueError):
        StructureSpec("sl", 2, (CL2Element.zero(3),))


def test_isotropy_dim_invariant_under_transform(rng):
    base = StructureSpec("sl", 2)
    t = CL2Element.from_vector(4, 0.2 * rng.normal(size=cl2_dim(4)))
    moved = StructureSpec("sl", 2, (t,))
    assert isotropy_algebra(base.build()).dim == isotropy_algebra(moved.build()).dim
    assert annihilator(moved.build()).L.rank == 4


def test_gl_lift_reaches_orbit_points(rng):
    # a GL_0 transform of the SL structure has the same isotropy dimension
    g = np.eye(4) + 0.2 * rng.normal(size=(4, 4))
    phi = make_sl(2)
    moved = gl_lift_action(g, phi)
    assert annihilator(moved).L.rank == 4
    assert isotropy_algebra(moved).dim == isotropy_algebra(phi).dim
