import numpy as np
import pytest
import scipy.sparse as sp

from borrowfac import (
    CAR,
    AsymmetricAdjacency,
    DimensionError,
    IIDBlocks,
    NotPositiveDefinite,
    RhoOutOfRange,
    SpaceTimeAR,
    build_block_precision,
    build_car_precision,
    build_spacetime_precision,
    validate_adjacency,
)
from borrowfac import synth

PATH2 = np.array([[0.0, 1.0], [1.0, 0.0]])


def test_car_two_node_path_frozen():
    # Leroux form: rho*(diag(A1) - A) + (1-rho)*I, divided by sigma2
    q = build_car_precision(0.5, PATH2)
    np.testing.assert_allclose(q.matrix.toarray(), [[1.0, -0.5], [-0.5, 1.0]])


def test_car_rho_zero_is_identity():
    q = build_car_precision(0.0, PATH2, sigma2=4.0)
    np.testing.assert_allclose(q.matrix.toarray(), np.eye(2) / 4.0)


def test_car_sigma_scaling():
    a = synth.grid_adjacency(2, 3)
    q1 = build_car_precision(0.3, a, sigma2=1.0).matrix.toarray()
    q2 = build_car_precision(0.3, a, sigma2=2.5).matrix.toarray()
    np.testing.assert_allclose(q2 * 2.5, q1)


def test_car_positive_definite_even_near_one():
    a = synth.grid_adjacency(3, 3)
    q = build_car_precision(0.999, a).matrix.toarray()
    assert np.linalg.eigvalsh(q).min() > 0


@pytest.mark.parametrize("rho", [-0.1, 1.0, 1.5])
def test_car_rho_out_of_range(rho):
    with pytest.raises(RhoOutOfRange):
        build_car_precision(rho, PATH2)


def test_car_rejects_bad_sigma():
    with pytest.raises(DimensionError):
        build_car_precision(0.5, PATH2, sigma2=0.0)


def test_spacetime_frozen_two_periods_one_site():
    q = build_car_precision(0.0, np.zeros((1, 1)))
    qt = build_spacetime_precision(0.5, q, periods=2)
    np.testing.assert_allclose(qt.matrix.toarray(), [[1.25, -0.5], [-0.5, 1.0]])


def test_spacetime_block_structure():
    a = synth.grid_adjacency(2, 2)
    q = build_car_precision(0.4, a)
    qt = build_spacetime_precision(0.6, q, periods=3).matrix.toarray()
    assert qt.shape == (12, 12)
    # quadratic form of (I - rho_t H)' blockdiag(Q) (I - rho_t H), time-major
    h = sp.kron(sp.eye(3, k=-1), sp.eye(4)).toarray()
    big_q = sp.block_diag([q.matrix] * 3).toarray()
    shift = np.eye(12) - 0.6 * h
    np.testing.assert_allclose(qt, shift.T @ big_q @ shift, atol=1e-14)


def test_spacetime_rho_time_out_of_range():
    q = build_car_precision(0.2, PATH2)
    with pytest.raises(RhoOutOfRange):
        build_spacetime_precision(1.0, q, periods=2)


def test_iid_blocks_precision_is_inverse_variance_diagonal():
    blocks = IIDBlocks((2, 3), (0.5, 2.0))
    q = blocks.precision().matrix.toarray()
    np.testing.assert_allclose(np.diag(q), [2.0, 2.0, 0.5, 0.5, 0.5])
    assert np.count_nonzero(q - np.diag(np.diag(q))) == 0


def test_iid_blocks_validation():
    with pytest.raises(DimensionError):
        IIDBlocks((2,), (1.0, 2.0)).precision()
    with pytest.raises(DimensionError):
        IIDBlocks((2,), (0.0,)).precision()


def test_block_precision_assembly():
    both = build_block_precision([(2, 0.5), (3, 1.0)]).matrix.toarray()
    assert both.shape == (5, 5)
    np.testing.assert_allclose(np.diag(both), [2.0, 2.0, 1.0, 1.0, 1.0])
    assert np.count_nonzero(both - np.diag(np.diag(both))) == 0
    with pytest.raises(DimensionError):
        build_block_precision([(0, 1.0)])


def test_structure_dataclasses_build_their_precisions():
    a = synth.grid_adjacency(2, 2)
    car = CAR(adjacency=a, rho=0.3, sigma2=2.0)
    np.testing.assert_allclose(
        car.precision().matrix.toarray(),
        build_car_precision(0.3, a, sigma2=2.0).matrix.toarray(),
    )
    st = SpaceTimeAR(adjacency=a, rho_space=0.3, rho_time=0.5, periods=2, sigma2=2.0)
    expect = build_spacetime_precision(
        0.5, build_car_precision(0.3, a, sigma2=1.0), periods=2, sigma2=2.0
    )
    np.testing.assert_allclose(st.precision().matrix.toarray(), expect.matrix.toarray())


def test_validate_adjacency_rejects_asymmetry():
    bad = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(AsymmetricAdjacency):
        validate_adjacency(bad)


def test_validate_adjacency_rejects_self_loops_and_weights():
    with pytest.raises(AsymmetricAdjacency):
        validate_adjacency(np.array([[1.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(AsymmetricAdjacency):
        validate_adjacency(np.array([[0.0, 0.5], [0.5, 0.0]]))


def test_validate_adjacency_accepts_sparse():
    a = sp.csr_matrix(PATH2)
    out = validate_adjacency(a)
    np.testing.assert_allclose(out.toarray(), PATH2)


def test_grid_adjacency_rook_moves():
    a = synth.grid_adjacency(2, 3)
    assert a.shape == (6, 6)
    np.testing.assert_allclose(a, a.T)
    # corner of a 2x3 grid has 2 neighbours, middle of the top row has 3
    assert a[0].sum() == 2
    assert a[1].sum() == 3
    # total degree = 2 * number of rook edges = 2 * (rows*(cols-1) + cols*(rows-1))
    assert a.sum() == 2 * (2 * 2 + 3 * 1)


def test_precision_matrix_requires_square():
    from borrowfac import PrecisionMatrix

    with pytest.raises(DimensionError):
        PrecisionMatrix.from_matrix(np.ones((2, 3)))


def test_precision_matrix_strict_rejects_indefinite():
    from borrowfac import DensePrecision, PrecisionMatrix

    m = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3, -1
    with pytest.raises(NotPositiveDefinite):
        PrecisionMatrix.from_matrix(m, strict=True)
    # the semidefinite route stays open for the no-shrinkage structure
    zero = PrecisionMatrix.from_matrix(np.zeros((2, 2)), strict=False)
    np.testing.assert_allclose(DensePrecision(zero).precision().toarray(), 0.0)
