import numpy as np
import pytest

from engine.errors import PoleError
from engine.maps_3x3 import (
    MINOR_INDEX_SETS,
    GVVector,
    LeafPoint3,
    boussinesq_map,
    boussinesq_params,
    casimirs_closed_form,
    complete_matrix,
    discriminant_surface,
    entries_from_canonical,
    gv_inverse_transform,
    gv_params,
    gv_projective_lax,
    gv_transform,
    gv_vector_lax,
    gv_vector_map,
    leaf_casimirs,
    leaf_coordinates,
    leaf_embed_3x3,
    leaf_lax,
    leaf_params_from_casimirs,
    map_3x3,
    map_3x3_oracle,
    omega_bracket,
    omega_form,
    rank_minors,
    table_minor
)
from engine.matrix_core import casimirs, max_abs
from engine.sklyanin import (
    Observable,
    canonical_structure,
    casimir_check,
    jacobian,
    sklyanin_3x3_identity,
    structure_rank
)


LEAF_CENTER = [0.0, 0.0, 1.0, 1.0]


def _leaf_site(crandom):
    return crandom(4, 0.6, LEAF_CENTER), crandom(2, 0.5, [1.0, 0.5])


# -------- rank-four constraint --------

def test_completed_matrix_satisfies_the_minors(crandom):

    X = complete_matrix(*crandom(6, 0.5, 1.0))

    assert max(abs(m) for m in rank_minors(X)) <= 1e-12 * (1 + max_abs(X)) ** 8


def test_transcribed_minors_are_minors_of_the_transposed_table(crandom):

    X = crandom((3, 3))
    minors = rank_minors(X)

    for value, key in zip(minors, ("m1", "m2", "m3")):
        rows, cols = MINOR_INDEX_SETS[key]
        expected = table_minor(X, rows, cols)
        assert abs(value - expected) <= 1e-10 * (1 + abs(expected))


def test_bracket_rank_generic_and_on_the_leaf(crandom):

    J = sklyanin_3x3_identity()

    assert structure_rank(J, crandom(9)) == 6
    assert structure_rank(J, complete_matrix(*crandom(6, 0.5, 1.0)).reshape(-1)) == 4


def test_bracket_entry_symmetric_in_subscripts(crandom):

    X = crandom((3, 3))

    # {x12, x21} = x22 - x11
    assert sklyanin_3x3_identity()(X.reshape(-1))[1, 3] == pytest.approx(X[1, 1] - X[0, 0])


def test_closed_form_casimirs(crandom):

    entries = crandom(6, 0.5, 1.0)
    f = casimirs(complete_matrix(*entries))

    assert np.allclose(casimirs_closed_form(*entries), [f[0], f[1], f[2]], rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("index", range(3))
def test_closed_form_casimirs_are_casimirs_on_the_constrained_set(index, rng):

    # free entries x12, x13, x21, x22, x23, x33 in row-major position
    free = [1, 2, 3, 4, 5, 8]
    f = Observable(9, lambda p: casimirs_closed_form(*p[free])[index], name=f"f{index}")

    def sampler(r):
        noise = r.uniform(-1.0, 1.0, 6) + 1j * r.uniform(-1.0, 1.0, 6)
        return complete_matrix(*(1.0 + 0.5 * noise)).reshape(-1)

    assert casimir_check(sklyanin_3x3_identity(), f, 50, sampler, rng) <= 1e-7


# -------- discriminant surface --------

@pytest.mark.parametrize("alpha", [1.0, 2.0, 3.0])
def test_named_curves_lie_on_the_surface(alpha):

    assert discriminant_surface(alpha ** 3, 3 * alpha ** 2, 3 * alpha) == 0
    assert discriminant_surface(-alpha ** 3, -alpha ** 2, alpha) == 0


def test_leaf_casimirs_lie_on_the_surface(crandom):

    c1, c2 = crandom(2)
    f0, f1, f2 = leaf_casimirs(c1, c2)

    assert abs(discriminant_surface(f0, f1, f2)) <= 1e-12 * (1 + abs(f0) + abs(f1) + abs(f2)) ** 4


def test_leaf_params_from_casimirs():

    _, f1, f2 = leaf_casimirs(1.0, 0.5)

    assert leaf_params_from_casimirs(f1, f2) == pytest.approx((1.0, 0.5))
    assert leaf_params_from_casimirs(f1, f2, branch=-1) == pytest.approx((1.0, -0.5))

    assert boussinesq_params(2.0) == pytest.approx([2.0, 0.0])
    assert gv_params(3.0) == pytest.approx([1.0, 2.0])


# -------- leaf embedding and canonical coordinates --------

def test_leaf_embedding_has_the_leaf_casimirs(crandom):

    coords, params = _leaf_site(crandom)

    f = casimirs(leaf_embed_3x3(LeafPoint3(coords, params)))

    assert np.allclose([f[0], f[1], f[2]], leaf_casimirs(*params), rtol=1e-12, atol=1e-12)


def test_leaf_coordinates_invert_the_embedding(crandom):

    coords, params = _leaf_site(crandom)

    assert np.allclose(leaf_coordinates(leaf_lax(coords, params).point), coords, atol=1e-13)


def test_leaf_coordinates_pole():

    with pytest.raises(PoleError):
        leaf_coordinates(np.eye(3))


def test_omega_form_inverts_the_reduced_bracket(crandom):

    q = entries_from_canonical(crandom(4, 0.6, LEAF_CENTER))

    assert np.allclose(omega_bracket()(q) @ omega_form(q), -np.eye(4), atol=1e-12)


def test_canonical_change_of_variables_pushes_forward_to_the_reduced_bracket(crandom):

    p = crandom(4, 0.6, LEAF_CENTER)
    D = jacobian(entries_from_canonical, p)

    pushed = D @ canonical_structure(2)(p) @ D.T

    assert np.allclose(pushed, omega_bracket()(entries_from_canonical(p)), atol=1e-8)


# -------- maps --------

def test_closed_form_map_agrees_with_the_oracle(crandom):

    for _ in range(50):

        (x, alpha), (y, beta) = _leaf_site(crandom), _leaf_site(crandom)

        u, v = map_3x3(x, alpha, y, beta)
        u2, v2 = map_3x3_oracle(x, alpha, y, beta)

        scale = 1 + max(max_abs(u2), max_abs(v2))

        assert max_abs(u - u2) <= 1e-8 * scale
        assert max_abs(v - v2) <= 1e-8 * scale


def test_map_with_equal_parameters_exchanges(crandom):

    (x, alpha), (y, _) = _leaf_site(crandom), _leaf_site(crandom)

    u, v = map_3x3(x, alpha, y, alpha)

    assert np.allclose(u, y, atol=1e-12)
    assert np.allclose(v, x, atol=1e-12)


def test_map_pole_on_vanishing_denominator():

    # base = 0.7 and (x - y).Y = -0.7
    x = np.array([0.3, 0.2, 1.0, 1.0])
    y = np.array([1.0, 0.5, 1.0, 0.0])

    with pytest.raises(PoleError):
        map_3x3(x, [1.0, 0.5], y, [0.5, 0.2])


def test_boussinesq_is_the_alpha_zero_member(crandom):

    (x, _), (y, _) = _leaf_site(crandom), _leaf_site(crandom)

    u, v = boussinesq_map(x, 1.3, y, 0.8)
    u2, v2 = map_3x3(x, [1.3, 0.0], y, [0.8, 0.0])

    assert np.array_equal(u, u2)
    assert np.array_equal(v, v2)


# -------- vector form --------

def _gv_vector(crandom):
    return GVVector(xi=crandom(2, 0.5), eta=crandom(2, 0.5), lam=complex(crandom(1, 0.5, 1.0)[0]))


def test_vector_lax_is_the_transformed_leaf_lax(crandom):

    for _ in range(50):

        g = _gv_vector(crandom)
        leaf = gv_transform(g)

        assert np.allclose(leaf.params, gv_params(-g.lam))

        for z in (0.0, 1.0, -1.0, 1j, 2.0):
            diff = gv_vector_lax(g)(z) - leaf_lax(leaf.coords, leaf.params)(z)
            assert max_abs(diff) <= 1e-10


def test_projective_lax_is_scale_invariant(crandom):

    g = _gv_vector(crandom)
    scaled = GVVector(xi=2.5 * g.xi, eta=(-0.4 + 1j) * g.eta, lam=g.lam)

    for z in (0.5, -1.0, 3j):
        assert max_abs(gv_projective_lax(g, z) - gv_projective_lax(scaled, z)) <= 1e-12


def test_inverse_transform(crandom):

    g = _gv_vector(crandom)
    back = gv_inverse_transform(gv_transform(g).coords, g.lam)

    assert np.allclose(back.xi, g.xi, atol=1e-12)
    assert np.allclose(back.eta, g.eta, atol=1e-12)


def test_vector_map_lax_equation(crandom):

    x, y = crandom(4, 0.5), crandom(4, 0.5)
    lam, mu = 1.2 + 0.1j, 0.7 - 0.2j

    u, v = gv_vector_map(x, lam, y, mu)

    def lax(c, s):
        return gv_vector_lax(GVVector(xi=c[:2], eta=c[2:], lam=s))

    for z in (0.0, 1.0, 1j):
        left = lax(u, lam)(z) @ lax(v, mu)(z)
        right = lax(y, mu)(z) @ lax(x, lam)(z)
        assert max_abs(left - right) <= 1e-9 * (1 + max_abs(right))
