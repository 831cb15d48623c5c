import numpy as np
import pytest

from multispec.boundary import (
    BoundaryMatrix,
    NotUnitaryError,
    bound_blocks,
    component_layout,
    decompose,
    degenerate_orthogonality_check,
    gauge_action,
    is_corner_normal,
    is_degenerate,
    operator_split_form,
    random_degenerate,
    random_unitary,
    unitarity_residual,
)

from conftest import random_boundary


def test_corner_coordinates():
    m = np.arange(9).reshape(3, 3) * (1 + 1j)
    m, _ = np.linalg.qr(m + np.eye(3))
    B = BoundaryMatrix(m)
    np.testing.assert_array_equal(B.u, m[:2, 0])
    np.testing.assert_array_equal(B.corner, m[:2, 1:])
    assert B.c == m[2, 0]
    np.testing.assert_array_equal(B.w, m[2, 1:].conj())


def test_non_unitary_rejected_unless_reunitarized():
    m = np.array([[1.0, 0.01], [0.0, 1.0]])
    with pytest.raises(NotUnitaryError):
        BoundaryMatrix(m)
    B = BoundaryMatrix(m, reunitarize=True)
    assert unitarity_residual(B.entries) < 1e-12


def test_su2_requires_unit_row():
    with pytest.raises(NotUnitaryError):
        BoundaryMatrix.su2(0.6, 0.6)


def test_from_cycles_matches_permutation():
    B = BoundaryMatrix.from_cycles(4, [(1, 3), (2, 4)])
    expected = np.array([[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]])
    np.testing.assert_array_equal(B.entries.real, expected)


def test_isometry_on_boundary_values(rng):
    B = random_boundary(5, rng)
    x = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    y = rng.standard_normal(5) + 1j * rng.standard_normal(5)
    m = B.entries
    assert abs(np.vdot(m @ x, m @ y) - np.vdot(x, y)) <= 1e-12


def test_degeneracy_detection(rng):
    B, zeta = random_degenerate(4, rng)
    found, z = is_degenerate(B)
    assert found
    assert abs(abs(np.vdot(z, zeta)) - 1) < 1e-10
    ru, rw = degenerate_orthogonality_check(B, zeta)
    assert ru < 1e-10 and rw < 1e-10
    assert not is_degenerate(random_boundary(4, rng))[0]


def test_orthogonality_check_rejects_non_fixed_vector(rng):
    B, zeta = random_degenerate(4, rng)
    other = np.roll(zeta, 1)
    with pytest.raises(ValueError):
        degenerate_orthogonality_check(B, other)


def test_corner_normal_cases():
    assert is_corner_normal(BoundaryMatrix.split_su2(0.6, 0.8))
    assert is_corner_normal(BoundaryMatrix.su2(0.6, 0.8))
    perm = BoundaryMatrix(np.array([[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]]))
    assert not is_corner_normal(perm)


def test_gauge_action_stays_unitary(rng):
    B = random_boundary(4, rng)
    g = random_unitary(3, rng)
    Bg = gauge_action(g, B)
    assert unitarity_residual(Bg.entries) < 1e-12
    np.testing.assert_allclose(Bg.corner, g @ B.corner @ g.conj().T, atol=1e-13)
    assert Bg.c == pytest.approx(B.c)
    with pytest.raises(ValueError):
        gauge_action(np.eye(2), B)


def test_c_zero_iff_corner_gram_is_projection(rng):
    # c = 0: B'*B' = I - ww* is a rank n-2 projection
    B, _ = random_degenerate(3, rng)
    for M in (BoundaryMatrix.from_cycles(3, [(1, 2, 3)]), random_boundary(3, rng)):
        gram = M.corner.conj().T @ M.corner
        is_projection = np.linalg.norm(gram @ gram - gram) < 1e-10 and np.linalg.norm(gram) > 1e-10
        assert is_projection == (abs(M.c) < 1e-10)
    del B


def test_decompose_permutation_and_idempotence(rng):
    blocks = [random_unitary(2, rng), random_unitary(1, rng), random_unitary(2, rng)]
    m = np.zeros((5, 5), dtype=complex)
    m[np.ix_([0, 3], [0, 3])] = blocks[0]
    m[2, 2] = blocks[1][0, 0]
    m[np.ix_([1, 4], [1, 4])] = blocks[2]
    report = decompose(BoundaryMatrix(m))
    assert report.is_decomposable
    assert sorted(map(sorted, report.blocks)) == [[1, 4], [2, 5], [3]]
    p = np.array(report.permutation) - 1
    again = decompose(m[np.ix_(p, p)])
    assert sorted(map(len, again.blocks)) == sorted(map(len, report.blocks))
    assert not decompose(random_boundary(4, rng)).is_decomposable


def test_block_away_from_half_lines_is_unitary_in_corner(rng):
    # component layout [[B', u], [w*, c]] with a closed block on bounded slots 1, 2;
    # the corner restricted to it is unitary, so its eigenvalues are unimodular
    layout = np.zeros((4, 4), dtype=complex)
    layout[:2, :2] = random_unitary(2, rng)
    layout[2:, 2:] = random_unitary(2, rng)
    B = BoundaryMatrix(np.roll(layout, 1, axis=1))
    np.testing.assert_allclose(component_layout(B), layout)
    assert bound_blocks(B) == [[1, 2]]
    sub = B.corner[:2, :2]
    np.testing.assert_allclose(np.abs(np.linalg.eigvals(sub)), 1.0, atol=1e-12)


def test_operator_split_form():
    assert operator_split_form(BoundaryMatrix.split_su2(1 / np.sqrt(2), 1 / np.sqrt(2)))
    assert not operator_split_form(BoundaryMatrix.leaky_su2(0.6, 0.8))
    # u = w = 0 with a unimodular c and unitary corner
    assert operator_split_form(BoundaryMatrix.phase_template(0.3, [0.1, 0.7]))
