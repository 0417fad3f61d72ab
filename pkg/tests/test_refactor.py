import numpy as np
import pytest

from engine.errors import DegeneratePi, DegenerateSimilarity, IllConditioned, NonCommuting, SingularMatrix
from engine.maps_2x2 import CASE_I, case_lax
from engine.maps_3x3 import leaf_lax
from engine.matrix_core import CommutingFamily, FamilyKind, family_eval, matrix_norm
from engine.refactor import (
    cayley_hamilton_residual,
    condition_limit,
    lax_residual,
    recurrence_residual,
    refactor_2x2,
    refactor_nxn,
    similarity_check,
    system_residual,
    triple_uniqueness_probe
)


def _instance(crandom, n=2):

    X = crandom((n, n))
    Y = crandom((n, n))
    A = np.diag(crandom(n, 0.5, 1.5))
    B = np.diag(crandom(n, 0.5, 1.5))

    return X, Y, A, B


def test_refactor_2x2_satisfies_lax_equation(crandom):

    checked = 0

    for _ in range(50):

        X, Y, A, B = _instance(crandom)
        result = refactor_2x2(X, Y, A, B)

        if result.condition > 1e4:
            continue

        residual, scale = lax_residual(result.U, result.V, X, Y, A, B)

        assert residual <= 1e-10 * scale
        assert result.casimir_drift <= 1e-10

        checked += 1

    assert checked >= 40


def test_equal_levels_give_the_exchange(crandom):

    X = crandom((2, 2))
    P = crandom((2, 2)) + 2 * np.eye(2)
    Y = P @ X @ np.linalg.inv(P)
    identity = np.eye(2)

    result = refactor_2x2(X, Y, identity, identity)

    assert np.allclose(result.U, Y, atol=1e-10)
    assert np.allclose(result.V, X, atol=1e-10)


def test_degenerate_pi():

    identity = np.eye(2)

    with pytest.raises(DegeneratePi):
        refactor_2x2(identity, identity, identity, identity)


def test_leading_matrix_errors():

    X = np.array([[1.0, 2.0], [3.0, 4.0]])

    with pytest.raises(NonCommuting):
        refactor_2x2(X, X, np.array([[1.0, 1.0], [0.0, 1.0]]), np.diag([1.0, 2.0]))

    with pytest.raises(SingularMatrix):
        refactor_2x2(X, X, np.diag([1.0, 0.0]), np.diag([1.0, 2.0]))


def test_condition_limit_rejects_ill_conditioned_pi(crandom):

    X, Y, A, B = _instance(crandom)

    with condition_limit(0.5):
        with pytest.raises(IllConditioned):
            refactor_2x2(X, Y, A, B)

    refactor_2x2(X, Y, A, B)


def test_nxn_solver_agrees_with_closed_form(crandom):

    for _ in range(20):

        X, Y, A, B = _instance(crandom)

        closed = refactor_2x2(X, Y, A, B)
        generic = refactor_nxn(X, Y, A, B)

        scale = 1 + matrix_norm(closed.U) + matrix_norm(closed.V)

        assert matrix_norm(closed.U - generic.U) <= 1e-9 * scale
        assert matrix_norm(closed.V - generic.V) <= 1e-9 * scale


@pytest.mark.parametrize("kind", [FamilyKind.DIAGONAL_I, FamilyKind.JORDAN_II])
def test_nxn_solver_in_dimension_three(kind, crandom):

    fam = CommutingFamily(kind, 3)
    params = 3 if kind is FamilyKind.DIAGONAL_I else 2

    X = crandom((3, 3))
    Y = crandom((3, 3))
    K_alpha = family_eval(fam, crandom(params, 0.3, 1.5))
    K_beta = family_eval(fam, crandom(params, 0.3, 1.5))

    result = refactor_nxn(X, Y, K_alpha, K_beta)

    size = (1 + matrix_norm(X) + matrix_norm(Y) + matrix_norm(result.U)) ** 3

    assert cayley_hamilton_residual(result.U, X, K_alpha) <= 1e-9 * size
    assert recurrence_residual(result.U, X, Y, K_alpha, K_beta) <= 1e-10 * size

    product, linear = system_residual(result.U, result.V, X, Y, K_alpha, K_beta)

    assert product <= 1e-9 * size
    assert linear <= 1e-9 * size
    assert similarity_check(result.U, result.V, X, Y, K_alpha, K_beta)


def _case1_triple(rng):

    coords = [np.array([0.5, 1.0]) + 0.3 * rng.uniform(-1, 1, 2) for _ in range(3)]
    params = [np.array([1.5, 0.5, 1.0, 1.0]) + 0.3 * rng.uniform(-1, 1, 4) for _ in range(3)]

    return coords, params


def test_uniqueness_returns_to_the_triple(rng):

    coords, params = _case1_triple(rng)

    report = triple_uniqueness_probe(lambda c, a: case_lax(CASE_I, c, a), coords, params, 1e-4, rng=rng)

    assert report.initial_distance > 0
    assert report.distance <= 1e-8
    assert report.residual <= 1e-10


def test_uniqueness_without_perturbation(rng):

    coords, params = _case1_triple(rng)

    report = triple_uniqueness_probe(lambda c, a: case_lax(CASE_I, c, a), coords, params, 0.0, rng=rng)

    assert report.distance == 0.0
    assert report.evaluations == 0
    assert report.residual == 0.0


@pytest.mark.parametrize("seed", range(3))
def test_uniqueness_on_three_by_three_leaves(seed, crandom):

    rng = np.random.default_rng(seed)
    coords = [crandom(4, 0.6, [0.0, 0.0, 1.0, 1.0]) for _ in range(3)]
    params = [crandom(2, 0.5, [1.0, 0.5]) for _ in range(3)]

    report = triple_uniqueness_probe(leaf_lax, coords, params, 1e-3, rng=rng)

    assert report.initial_distance > 1e-4
    assert report.distance <= 1e-8
    assert report.residual <= 1e-10


def _similar_pair(crandom):

    X, Y, A, B = _instance(crandom)
    result = refactor_2x2(X, Y, A, B)

    return result.U, result.V, X, Y, A, B


def test_similarity_rejects_a_perturbed_solution(crandom):

    U, V, X, Y, A, B = _similar_pair(crandom)

    assert not similarity_check(U + 1e-3 * crandom((2, 2)), V, X, Y, A, B)


def test_similarity_with_a_singular_gap(crandom):

    X, Y, A, _ = _instance(crandom)

    with pytest.raises(DegenerateSimilarity):
        similarity_check(Y, X, X, Y, A, A)
