from math import comb

import numpy as np
import pytest

from genform.clifford import cl2_dim
from genform.multivector import Basis, FormTuple, Multivector, grade, left_wedge_matrix, star_matrix
from genform.orbit_analysis import (
    asd_even_check,
    cy_kernel_fibers,
    ellipticity_scan,
    fiber_complex,
    generalized_metric,
    isotropy_algebra,
    lambda2_decompose,
    primitive_frequencies,
    sl_dimension_table,
    symbol_complex,
)
from genform.structures import make_cy, make_sl, make_spin7


@pytest.fixture(scope="module")
def spin7_fibers():
    return fiber_complex(make_spin7(), 3)


def test_spin7_isotropy():
    rep = isotropy_algebra(make_spin7(), closure_pairs=100)
    assert rep.dim == 42
    assert rep.scalar_max < 1e-12
    assert rep.endo_rank == 21
    assert rep.two_form_rank == 21 and rep.two_vector_rank == 21
    assert rep.q_plus_qstar_residual < 1e-10
    assert rep.closure_residual < 1e-10


def test_scalar_spinor_isotropy():
    n = 3
    rep = isotropy_algebra(FormTuple.of(Multivector.scalar(Basis(n))))
    # all beta, plus endos A with tr A compensated by the scalar: n^2 + C(n,2)
    assert rep.dim == n * n + comb(n, 2)
    assert rep.closure_residual < 1e-10


def test_spin7_fibers(spin7_fibers):
    assert spin7_fibers.dims == [1, 16, 79, 128, 128]
    assert spin7_fibers.dims[2] == cl2_dim(8) - 42
    assert spin7_fibers.nesting_residual() < 1e-10


@pytest.mark.parametrize("n,complex_dims", [(2, (4, 7, 8)), (3, (6, 16, 26))])
def test_sl_dimension_tables(n, complex_dims):
    fc = fiber_complex(make_sl(n), 2)
    assert tuple(fc.complex_dims[1:4]) == complex_dims
    assert fc.dims[1:4] == [2 * d for d in complex_dims]
    table = sl_dimension_table(n, 2)
    assert [table[k] for k in (0, 1, 2)] == fc.dims[1:4]
    assert fc.nesting_residual() < 1e-10


def test_sl_minus_one_fiber_is_real_scalar_line():
    # CL^0 is the real scalars, so E^{-1} is a real line although the formula gives 2
    fc = fiber_complex(make_sl(2), 2)
    assert fc.dims[0] == 1
    assert sl_dimension_table(2, 2)[-1] == 2


def test_lambda2():
    rep = lambda2_decompose()
    assert rep.ok
    assert rep.multiplicities == (7, 21)
    assert np.allclose(rep.eigenvalues, (3.0, -1.0), atol=1e-8)
    assert rep.annihilation_residual < 1e-9


def test_generalized_metric_model():
    gm = generalized_metric("spin7")
    assert all(v < 1e-10 for v in gm.checks().values())
    basis = Basis(8)
    one = Multivector.scalar(basis).coeffs
    vol = Multivector.monomial(basis, *range(1, 9)).coeffs
    assert np.allclose(gm.star @ one, vol) and np.allclose(gm.star @ vol, one)
    hodge = star_matrix(basis)
    g = np.array([grade(m) for m in range(256)])
    i2, i6 = np.flatnonzero(g == 2), np.flatnonzero(g == 6)
    assert np.allclose(gm.star[np.ix_(i6, i2)], -hodge[np.ix_(i6, i2)])
    with pytest.raises(ValueError):
        generalized_metric("sl")


def test_asd_even():
    rep = asd_even_check()
    assert rep.ok
    assert rep.dim == 64
    # (1 - vol), (p + *p) and the 35 self-pairing 4-forms: 1 + 28 + 35
    assert rep.grade_dims == {0: 1, 2: 28, 4: 35, 6: 28, 8: 1}
    assert rep.containment_residual <= 1e-9
    assert rep.sym0_rank == 35


@pytest.mark.parametrize("n", [2, 3])
def test_sl_symbol_exact(rng, n):
    phi = make_sl(n)
    fc = fiber_complex(phi, 3)
    xs = rng.normal(size=(100, 2 * n))
    xs /= np.linalg.norm(xs, axis=1, keepdims=True)
    rep = ellipticity_scan(phi, xs, (1, 2), fc=fc)
    assert rep.ok and rep.max_defect == 0
    sc = symbol_complex(phi, xs[0], 3, fc=fc)
    assert sc.exact_at(1) and sc.exact_at(2)


def test_symbol_rejects_zero_covector():
    with pytest.raises(ValueError):
        ellipticity_scan(make_sl(2), np.zeros((1, 4)))


def test_de_rham_koszul_control(rng):
    n = 5
    xi = rng.normal(size=n)
    W = sum(xi[j] * left_wedge_matrix(Multivector.monomial(Basis(n), j + 1)) for j in range(n))
    g = np.array([grade(m) for m in range(1 << n)])
    ranks = [np.linalg.matrix_rank(W[np.ix_(g == k + 1, g == k)]) for k in range(n)]
    for k in range(1, n):
        assert ranks[k - 1] + ranks[k] == comb(n, k)


def test_primitive_frequencies():
    m = primitive_frequencies(2, 1)
    assert sorted(map(tuple, m)) == [(0, 1), (1, -1), (1, 0), (1, 1)]
    m3 = primitive_frequencies(4, 3)
    assert np.all(np.gcd.reduce(np.abs(m3), axis=1) == 1)
    assert len({tuple(r) for r in m3} & {tuple(-r) for r in m3}) == 0


def test_cy_kernel():
    rep = cy_kernel_fibers(make_cy(2))
    assert rep.ok
    assert rep.ker_dims[0] == 0
    assert rep.ker_dims[1] == rep.formula_dims[1] + 1 and rep.scaling_line
    assert rep.ker_dims[2] == rep.formula_dims[2]
