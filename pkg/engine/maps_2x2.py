import os
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from engine.errors import BranchCut, DomainError, LeafMismatch, PoleError
from engine.matrix_core import (
    SAMPLED_ZETAS,
    BinomialPencil,
    CommutingFamily,
    FamilyKind,
    family_eval,
    inverse,
    max_abs
)
from engine.refactor import refactor_2x2
from engine.sklyanin import planar_structure, sklyanin_2x2


DOMAIN_TOL = float(os.getenv("YB_DOMAIN_TOL", "1e-12"))

POLE_TOL = float(os.getenv("YB_POLE_TOL", "1e-10"))

LEAF_TOL = 1e-8

CASE_I = "I"
CASE_II = "II"

FAMILIES = {
    CASE_I: CommutingFamily(FamilyKind.DIAGONAL_I),
    CASE_II: CommutingFamily(FamilyKind.JORDAN_II)
}


@dataclass(frozen=True)
class LeafPoint2:

    coords: np.ndarray
    params: np.ndarray

    def __post_init__(self):

        coords = np.asarray(self.coords, dtype=complex)
        params = np.asarray(self.params, dtype=complex)

        if coords.shape != (2,):
            raise ValueError("a 2x2 leaf point has two coordinates")

        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "params", params)


@dataclass(frozen=True)
class YBMapDescriptor:
    """A parametric YB map together with its strong Lax matrix and leaf bracket."""

    name: str
    coord_names: tuple
    param_dim: int
    evaluate: Callable
    lax: Callable
    structure: Optional[Callable] = None

    @property
    def coord_dim(self):
        return len(self.coord_names)

    def embed(self, coords, params):
        return np.array(self.lax(coords, params).point)


def _split(values, size):

    values = np.atleast_1d(np.asarray(values, dtype=complex))

    if values.shape != (size,):
        raise ValueError(f"expected {size} values, got {values.shape}")

    return values


def _nonzero(value, label, error=DomainError, tol=DOMAIN_TOL):

    if abs(value) < tol:
        raise error(f"{label} vanishes", {"value": abs(value)})


# =====================================================
# LEAF EMBEDDINGS
# =====================================================

def case1_embed(x1, x2, alpha):

    a1, a2, a3, a4 = _split(alpha, 4)

    _nonzero(a1, "alpha_1")
    _nonzero(x2, "x_2")

    x4 = (a4 - a2 * x1) / a1
    x3 = (x1 * (a4 - a2 * x1) - a1 * a3) / (a1 * x2)

    return np.array([[x1, x2], [x3, x4]], dtype=complex)


def case2_embed(x1, x2, alpha):

    a1, a2, a3, a4 = _split(alpha, 4)

    den = a1 * x2 - a2 * x1
    _nonzero(den, "alpha_1 x_2 - alpha_2 x_1")

    x3 = (a4 * x1 - a1 * (x1 ** 2 + a3)) / den
    x4 = (a2 * a3 - a4 * x2 + a1 * x1 * x2) / (-den)

    return np.array([[x1, x2], [x3, x4]], dtype=complex)


EMBEDDINGS = {
    CASE_I: case1_embed,
    CASE_II: case2_embed
}


def case_lax(case, coords, alpha):

    alpha = _split(alpha, 4)
    x1, x2 = _split(coords, 2)

    return BinomialPencil(EMBEDDINGS[case](x1, x2, alpha), family_eval(FAMILIES[case], alpha[:2]))


# =====================================================
# CASE MAPS
# =====================================================

def _project(M):
    return np.array(M[0, :], dtype=complex)


def _assert_on_leaf(case, coords, alpha, M):

    embedded = EMBEDDINGS[case](coords[0], coords[1], alpha)
    mismatch = max_abs(embedded - M)

    if mismatch > LEAF_TOL * (1.0 + max_abs(M)):
        raise LeafMismatch("re-factorized matrix left the symplectic leaf", {"mismatch": mismatch})


def case_map(case, x, alpha, y, beta):

    if case not in EMBEDDINGS:
        raise ValueError(f"unknown case {case!r}")

    X = case_lax(case, x, alpha)
    Y = case_lax(case, y, beta)

    result = refactor_2x2(X.point, Y.point, X.leading, Y.leading)

    u = _project(result.U)
    v = _project(result.V)

    _assert_on_leaf(case, u, _split(alpha, 4), result.U)
    _assert_on_leaf(case, v, _split(beta, 4), result.V)

    return u, v


def invert_strong_lax(case, u, alpha, y, beta):
    """Recover (v, x) from (u, y) through the similarity form of the Lax equation."""

    U = case_lax(case, u, alpha)
    Y = case_lax(case, y, beta)

    K_alpha, K_beta = U.leading, Y.leading
    gap = U.point @ K_beta - Y.point @ K_alpha
    gap_inv = inverse(gap)

    V = K_beta @ gap_inv @ Y.point @ inverse(K_beta) @ gap
    X = K_alpha @ gap_inv @ U.point @ inverse(K_alpha) @ gap

    return _project(V), _project(X)


def general_map_2x2(X, alpha, Y, beta, family=FAMILIES[CASE_I]):
    """The 8-dimensional map on full 2x2 matrices, entries flattened row-major."""

    X = np.asarray(X, dtype=complex).reshape(2, 2)
    Y = np.asarray(Y, dtype=complex).reshape(2, 2)

    result = refactor_2x2(X, Y, family_eval(family, alpha), family_eval(family, beta))

    return result.U.reshape(-1), result.V.reshape(-1)


# =====================================================
# DEGENERATE LIMIT: GENERALIZED ADLER-YAMILOV
# =====================================================

def ay_lax(coords, alpha):

    x1, x2 = _split(coords, 2)
    a1, a2, a3 = _split(alpha, 3)

    _nonzero(a1, "alpha_1", PoleError)
    _nonzero(a3, "alpha_3", PoleError)

    point = np.array([[a1 * (a2 + x1 * x2) / a3, x1], [x2, a3 / a1]], dtype=complex)
    leading = np.array([[a1, 0], [0, 0]], dtype=complex)

    return BinomialPencil(point, leading)


def adler_yamilov_general(x, alpha, y, beta):

    x1, x2 = _split(x, 2)
    y1, y2 = _split(y, 2)
    a1, a2, a3 = _split(alpha, 3)
    b1, b2, b3 = _split(beta, 3)

    for value, label in ((a1, "alpha_1"), (b1, "beta_1"), (a3, "alpha_3"), (b3, "beta_3")):
        _nonzero(value, label, PoleError, POLE_TOL)

    den = a3 * b3 + a1 * b1 * x1 * y2

    if abs(den) < POLE_TOL * (1.0 + abs(a3 * b3)):
        raise PoleError("alpha_3 beta_3 + alpha_1 beta_1 x_1 y_2 vanishes", {"denominator": abs(den)})

    q = a1 * b1 * (a2 * b3 - a3 * b2) / den

    u = np.array([b1 * (a3 * y1 - q * x1) / (a1 * b3), a1 * y2 / b1], dtype=complex)
    v = np.array([b1 * x1 / a1, a1 * (b3 * x2 + q * y2) / (b1 * a3)], dtype=complex)

    return u, v


def ay_lax_epsilon(coords, alpha, eps):
    """Non-degenerate Lax matrix whose eps -> 0 limit is ay_lax (principal square root)."""

    x1, x2 = _split(coords, 2)
    a1, a2, a3 = _split(alpha, 3)

    _nonzero(a1, "alpha_1", PoleError)

    if eps == 0:
        raise DomainError("eps must be nonzero")

    radicand = a3 ** 2 - 4 * a1 * eps * (a2 + x1 * x2)

    if abs(radicand.imag) <= 1e-15 * (1.0 + abs(radicand)) and radicand.real <= 0:
        raise BranchCut("radicand is a nonpositive real", {"radicand": radicand.real})

    root = np.sqrt(complex(radicand))

    # (a3 - root)/(2 eps), rewritten where it would cancel
    if abs(a3 + root) >= abs(a3 - root):
        top = 2 * a1 * (a2 + x1 * x2) / (a3 + root)
    else:
        top = (a3 - root) / (2 * eps)

    point = np.array([[top, x1], [x2, (a3 + root) / (2 * a1)]], dtype=complex)
    leading = np.array([[a1, 0], [0, eps]], dtype=complex)

    return BinomialPencil(point, leading)


def ay_limit_probe(x1, x2, alpha, eps, zetas=SAMPLED_ZETAS):

    finite = ay_lax_epsilon((x1, x2), alpha, eps)
    limit = ay_lax((x1, x2), alpha)

    return max(max_abs(finite(z) - limit(z)) for z in zetas)


def ay_limit_order(x1, x2, alpha, eps_list):
    """Observed convergence order of ay_limit_probe under eps -> eps/2, one value per eps."""

    orders = []

    for eps in eps_list:

        coarse = ay_limit_probe(x1, x2, alpha, eps)
        fine = ay_limit_probe(x1, x2, alpha, eps / 2)

        orders.append(float(np.log2(coarse / fine)) if fine > 0 else float("inf"))

    return orders


def ay_map_epsilon(x, alpha, y, beta, eps):
    """Finite-eps map by re-factorization with K = diag(alpha_1, eps)."""

    X = ay_lax_epsilon(x, alpha, eps)
    Y = ay_lax_epsilon(y, beta, eps)

    result = refactor_2x2(X.point, Y.point, X.leading, Y.leading, tol_lax=1e-6, tol_cas=1e-6)

    u = np.array([result.U[0, 1], result.U[1, 0]], dtype=complex)
    v = np.array([result.V[0, 1], result.V[1, 0]], dtype=complex)

    return u, v


# =====================================================
# REDUCED BRACKETS
# =====================================================

def case1_bracket(alpha):

    a1 = complex(_split(alpha, 4)[0])

    return planar_structure(lambda p: -a1 * p[1], name="case1")


def case2_bracket(alpha):

    a1, a2 = _split(alpha, 4)[:2]

    return planar_structure(lambda p: a2 * p[0] - a1 * p[1], name="case2")


def ay_bracket(alpha):

    a3 = complex(_split(alpha, 3)[2])

    return planar_structure(lambda p: a3, name="adler-yamilov")


# =====================================================
# DESCRIPTORS
# =====================================================

CASE1 = YBMapDescriptor(
    name="case1",
    coord_names=("x1", "x2"),
    param_dim=4,
    evaluate=lambda x, a, y, b: case_map(CASE_I, x, a, y, b),
    lax=lambda c, a: case_lax(CASE_I, c, a),
    structure=case1_bracket
)

CASE2 = YBMapDescriptor(
    name="case2",
    coord_names=("x1", "x2"),
    param_dim=4,
    evaluate=lambda x, a, y, b: case_map(CASE_II, x, a, y, b),
    lax=lambda c, a: case_lax(CASE_II, c, a),
    structure=case2_bracket
)

ADLER_YAMILOV = YBMapDescriptor(
    name="ay",
    coord_names=("x1", "x2"),
    param_dim=3,
    evaluate=adler_yamilov_general,
    lax=ay_lax,
    structure=ay_bracket
)

GENERAL_2X2 = YBMapDescriptor(
    name="general2",
    coord_names=("x1", "x2", "x3", "x4"),
    param_dim=2,
    evaluate=general_map_2x2,
    lax=lambda c, a: BinomialPencil(
        np.asarray(c, dtype=complex).reshape(2, 2),
        family_eval(FAMILIES[CASE_I], a)
    ),
    structure=lambda a: sklyanin_2x2(family_eval(FAMILIES[CASE_I], a))
)
