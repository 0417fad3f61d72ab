import numpy as np
import pytest

from engine.errors import NonCommuting, SingularMatrix, SingularParameter
from engine.matrix_core import (
    BinomialPencil,
    CommutingFamily,
    FamilyKind,
    casimirs,
    char_poly_coeffs,
    commutator_norm,
    det,
    family_eval,
    inverse,
    is_singular,
    matrix_from_json,
    matrix_to_json,
    require_commuting,
    vector_from_json,
    vector_to_json
)


def test_closed_form_determinants_match_numpy(crandom):

    for n in (1, 2, 3):
        m = crandom((n, n))
        assert abs(det(m) - np.linalg.det(m)) <= 1e-13 * (1 + abs(np.linalg.det(m)))


def test_singular_matrix_is_rejected():

    m = np.array([[1.0, 2.0], [2.0, 4.0]])

    assert is_singular(m)

    with pytest.raises(SingularMatrix):
        inverse(m)


def test_zero_matrix_is_singular():
    assert is_singular(np.zeros((3, 3)))


def test_char_poly_of_small_example():

    f = casimirs(np.array([[1.0, 2.0], [3.0, 4.0]]))

    # det(X - z I) = z^2 - 5 z - 2
    assert f[0] == pytest.approx(-2.0)
    assert f[1] == pytest.approx(5.0)
    assert f[2] == pytest.approx(1.0)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_char_poly_evaluates_to_pencil_determinant(n, crandom):

    X = crandom((n, n))
    A = np.diag(crandom(n, 0.5, 1.5))
    f = char_poly_coeffs(BinomialPencil(X, A))

    for z in (0.3, -1.2 + 0.4j, 2j):
        expected = np.linalg.det(X - z * A)
        assert abs(f.evaluate(z) - expected) <= 1e-10 * (1 + abs(expected))


def test_char_poly_with_singular_leading_matrix(crandom):

    X = crandom((4, 4))
    A = np.diag([1.0, 2.0, 0.5, 0.0])
    f = char_poly_coeffs(BinomialPencil(X, A))

    assert abs(f[4]) <= 1e-14

    for z in (0.7, 1j):
        expected = np.linalg.det(X - z * A)
        assert abs(f.evaluate(z) - expected) <= 1e-10 * (1 + abs(expected))


def test_pencil_arrays_are_read_only():

    p = BinomialPencil(np.eye(2), np.eye(2))

    with pytest.raises(ValueError):
        p.point[0, 0] = 5.0


def test_pencil_rejects_mismatched_shapes():

    with pytest.raises(ValueError):
        BinomialPencil(np.eye(2), np.eye(3))


@pytest.mark.parametrize("kind", list(FamilyKind))
def test_family_members_commute(kind, crandom):

    fam = CommutingFamily(kind)
    a = family_eval(fam, crandom(2, 0.5, 1.5))
    b = family_eval(fam, crandom(2, 0.5, 1.5))

    assert commutator_norm(a, b) <= 1e-14 * (1 + np.abs(a).max() * np.abs(b).max())
    require_commuting(a, b)


def test_jordan_family_in_dimension_three():

    K = family_eval(CommutingFamily(FamilyKind.JORDAN_II, 3), [2.0, 0.5])

    assert np.allclose(K, [[2.0, 0.5, 0.0], [0.0, 2.0, 0.5], [0.0, 0.0, 2.0]])


def test_family_edge_cases():

    with pytest.raises(SingularParameter):
        family_eval(CommutingFamily(FamilyKind.DIAGONAL_I), [0.0, 1.0])

    with pytest.raises(SingularParameter):
        family_eval(CommutingFamily(FamilyKind.ROTATION_III), [1.0, 1j])

    with pytest.raises(ValueError):
        CommutingFamily(FamilyKind.ROTATION_III, 3)


def test_non_commuting_leading_matrices():

    with pytest.raises(NonCommuting):
        require_commuting(np.array([[1.0, 1.0], [0.0, 1.0]]), np.diag([1.0, 2.0]))


def test_matrix_json_codec(crandom):

    m = crandom((3, 3))
    doc = matrix_to_json(m)

    assert doc["rows"] == 3 and len(doc["re"]) == 9
    assert np.array_equal(matrix_from_json(doc), m)


def test_vector_json_accepts_plain_and_paired_lists():

    assert np.array_equal(vector_from_json([1.0, 2.0]), np.array([1.0, 2.0], dtype=complex))
    assert np.array_equal(vector_from_json([[1.0, -1.0], [0.0, 2.0]]), np.array([1 - 1j, 2j]))
    assert np.array_equal(vector_from_json(vector_to_json([3 + 4j])), np.array([3 + 4j]))
