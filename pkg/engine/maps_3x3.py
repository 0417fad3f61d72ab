"""Four-dimensional symplectic leaves of 3x3 pencils X - zeta*I and the YB maps living on them.

Leaf parameters (c1, c2) are the map parameters of the closed-form family:

    f2 = 3 c1,   f1 = 3 (c1^2 - c2^2),   f0 = (c1 + c2)^2 (c1 - 2 c2)

Boussinesq is (alpha, 0), Goncharenko-Veselov is (alpha/3, 2 alpha/3).
"""

import os
from dataclasses import dataclass

import numpy as np

from engine.errors import DomainError, PoleError
from engine.maps_2x2 import YBMapDescriptor
from engine.matrix_core import BinomialPencil
from engine.refactor import refactor_nxn
from engine.sklyanin import PoissonStructure, canonical_structure


POLE_TOL = float(os.getenv("YB_POLE_TOL", "1e-10"))

DOMAIN_TOL = float(os.getenv("YB_DOMAIN_TOL", "1e-12"))

IDENTITY3 = np.eye(3, dtype=complex)

# (rows, columns), 1-based, of the sixth-order minors of transposed_structure_table
MINOR_INDEX_SETS = {
    "m1": ((1, 2, 3, 4, 5, 6), (3, 4, 6, 7, 8, 9)),
    "m2": ((1, 2, 3, 4, 6, 7), (3, 4, 5, 6, 8, 9)),
    "m3": ((1, 2, 3, 5, 6, 9), (1, 2, 3, 5, 6, 9))
}


@dataclass(frozen=True)
class LeafPoint3:

    coords: np.ndarray
    params: np.ndarray

    def __post_init__(self):

        coords = np.asarray(self.coords, dtype=complex)
        params = np.asarray(self.params, dtype=complex)

        if coords.shape != (4,) or params.shape != (2,):
            raise ValueError("a 3x3 leaf point is (x1, x2, X1, X2) with parameters (c1, c2)")

        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "params", params)


@dataclass(frozen=True)
class GVVector:

    xi: np.ndarray
    eta: np.ndarray
    lam: complex

    def __post_init__(self):

        xi = np.asarray(self.xi, dtype=complex)
        eta = np.asarray(self.eta, dtype=complex)

        if xi.shape == (2,):
            xi = np.append(xi, 1.0)

        if eta.shape == (2,):
            eta = np.append(eta, 1.0)

        if xi.shape != (3,) or eta.shape != (3,):
            raise ValueError("GV vectors are 3-vectors (or affine 2-vectors)")

        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "lam", complex(self.lam))

    @property
    def pairing(self):
        return complex(self.xi @ self.eta)


def _require(value, label, error=DomainError, tol=DOMAIN_TOL, scale=1.0):

    if abs(value) < tol * scale:
        raise error(f"{label} vanishes", {"value": abs(value)})


# =====================================================
# RANK-FOUR CONSTRAINT
# =====================================================

def minors_solution(x12, x13, x21, x22, x23, x33):

    _require(x13, "x13")
    _require(x23, "x23")

    x11 = x13 * x21 / x23 + x22 - x12 * x23 / x13
    x31 = x21 * (x12 * x23 + x13 * (x33 - x22)) / (x13 * x23)
    x32 = x12 * (x12 * x23 + x13 * (x33 - x22)) / x13 ** 2

    return x11, x31, x32


def complete_matrix(x12, x13, x21, x22, x23, x33):

    x11, x31, x32 = minors_solution(x12, x13, x21, x22, x23, x33)

    return np.array([
        [x11, x12, x13],
        [x21, x22, x23],
        [x31, x32, x33]
    ], dtype=complex)


def rank_minors(X):

    (x11, x12, x13), (x21, x22, x23), (x31, x32, x33) = np.asarray(X, dtype=complex)

    m1 = -(x21 * x13 ** 2 - x11 * x23 * x13 + x22 * x23 * x13 - x12 * x23 ** 2) ** 2
    m2 = -(x23 * x12 ** 2 - x13 * x22 * x12 + x13 * x33 * x12 - x13 ** 2 * x32) ** 2
    m3 = -(x12 * x23 * x31 - x13 * x21 * x32) ** 2

    return complex(m1), complex(m2), complex(m3)


def transposed_structure_table(X):
    """delta_il x_jk - delta_kj x_il: the 3x3 bracket table with the first term transposed.

    Not antisymmetric. rank_minors are sixth-order minors of this table (MINOR_INDEX_SETS);
    the bracket itself is sklyanin.sklyanin_3x3_identity.
    """

    X = np.asarray(X, dtype=complex)
    delta = np.eye(3)

    table = np.einsum("il,jk->ijkl", delta, X) - np.einsum("kj,il->ijkl", delta, X)

    return table.reshape(9, 9)


def table_minor(X, rows, cols):

    table = transposed_structure_table(X)
    rows = [r - 1 for r in rows]
    cols = [c - 1 for c in cols]

    return complex(np.linalg.det(table[np.ix_(rows, cols)]))


def casimirs_closed_form(x12, x13, x21, x22, x23, x33):
    """(f0, f1, f2) of the completed matrix."""

    _require(x13, "x13")
    _require(x23, "x23")

    shear = x13 * x22 - x12 * x23

    f0 = shear ** 2 * (x21 * x13 ** 2 + x23 * x33 * x13 + x12 * x23 ** 2) / (x13 ** 3 * x23)
    f1 = shear * (2 * x21 * x13 ** 2 + x23 * (x22 + 2 * x33) * x13 + x12 * x23 ** 2) / (x13 ** 2 * x23)
    f2 = x13 * x21 / x23 + 2 * x22 - x12 * x23 / x13 + x33

    return complex(f0), complex(f1), complex(f2)


def discriminant_surface(f0, f1, f2):
    return 4 * f0 * f2 ** 3 - f1 ** 2 * f2 ** 2 + 4 * f1 ** 3 - 18 * f0 * f1 * f2 + 27 * f0 ** 2


# =====================================================
# LEAF PARAMETERS
# =====================================================

def leaf_casimirs(c1, c2):

    f0 = (c1 + c2) ** 2 * (c1 - 2 * c2)
    f1 = 3 * (c1 ** 2 - c2 ** 2)
    f2 = 3 * c1

    return complex(f0), complex(f1), complex(f2)


def leaf_params_from_casimirs(f1, f2, branch=1):

    if branch not in (1, -1):
        raise ValueError("branch is +1 or -1")

    c1 = f2 / 3
    c2 = branch * np.sqrt(complex(f2 ** 2 - 3 * f1)) / 3

    return complex(c1), complex(c2)


def boussinesq_params(alpha):
    return np.array([alpha, 0.0], dtype=complex)


def gv_params(alpha):
    return np.array([alpha / 3, 2 * alpha / 3], dtype=complex)


# =====================================================
# EMBEDDING / CANONICAL COORDINATES
# =====================================================

def leaf_embed_3x3(p):

    if not (np.all(np.isfinite(p.coords)) and np.all(np.isfinite(p.params))):
        raise DomainError("leaf point is not finite", {"coords": p.coords, "params": p.params})

    x1, x2, X1, X2 = p.coords
    c1, c2 = p.params

    w3 = x1 * X1 + x2 * X2 - 3 * c2
    shift = c1 + c2

    return np.array([
        [shift - x1 * X1, -x2 * X1, X1],
        [-x1 * X2, shift - x2 * X2, X2],
        [-x1 * w3, -x2 * w3, shift + w3]
    ], dtype=complex)


def leaf_lax(coords, params):
    return BinomialPencil(leaf_embed_3x3(LeafPoint3(coords, params)), IDENTITY3)


def leaf_coordinates(M):
    """(x1, x2, X1, X2) of a matrix on the leaf."""

    M = np.asarray(M, dtype=complex)

    _require(M[0, 2], "entry (1,3)", PoleError, POLE_TOL)
    _require(M[1, 2], "entry (2,3)", PoleError, POLE_TOL)

    return np.array([-M[1, 0] / M[1, 2], -M[0, 1] / M[0, 2], M[0, 2], M[1, 2]], dtype=complex)


def entries_from_canonical(p):
    """(x1, x2, X1, X2) -> (x12, x13, x21, x23)."""

    x1, x2, X1, X2 = np.asarray(p, dtype=complex)

    return np.array([-x2 * X1, X1, -x1 * X2, X2], dtype=complex)


def _omega_entries(p):

    x12, x13, x21, x23 = p

    _require(x13, "x13")
    _require(x23, "x23")

    return x12, x13, x21, x23


def omega_bracket():
    """Reduced bracket of the leaf on (x12, x13, x21, x23)."""

    def evaluate(p):

        x12, x13, x21, x23 = _omega_entries(p)
        J = np.zeros((4, 4), dtype=complex)

        J[0, 2] = x12 * x23 / x13 - x13 * x21 / x23
        J[0, 3] = -x13
        J[1, 2] = x23

        return J

    return PoissonStructure(4, evaluate, name="leaf-omega")


def omega_form(p):
    """Coefficient matrix of the leaf 2-form; omega_bracket(p) @ omega_form(p) = -I."""

    x12, x13, x21, x23 = _omega_entries(np.asarray(p, dtype=complex))
    W = np.zeros((4, 4), dtype=complex)

    W[1, 2] = 1 / x23
    W[0, 3] = -1 / x13
    W[1, 3] = x12 / x13 ** 2 - x21 / x23 ** 2

    return W - W.T


def leaf_structure(params=None):
    return canonical_structure(2)


# =====================================================
# MAPS
# =====================================================

def _blocks(values):

    values = np.asarray(values, dtype=complex)

    if values.shape != (4,):
        raise ValueError("3x3 leaf coordinates are (x1, x2, X1, X2)")

    return values[:2], values[2:]


def map_3x3(x, alpha, y, beta):

    (xs, Xs), (ys, Ys) = _blocks(x), _blocks(y)
    a1, a2 = np.asarray(alpha, dtype=complex)
    b1, b2 = np.asarray(beta, dtype=complex)

    base = 2 * a2 - a1 + b1 + b2
    d_u = base + xs @ Ys - ys @ Ys
    d_v = base + ys @ Xs - xs @ Xs

    scale = 1.0 + abs(base) + float(np.abs(xs * Xs).sum() + np.abs(ys * Ys).sum() + np.abs(ys * Xs).sum())

    _require(d_u, "u-denominator", PoleError, POLE_TOL, scale)
    _require(d_v, "v-denominator", PoleError, POLE_TOL, scale)

    gap = xs - ys

    u = ys - (a1 - b1 - 2 * (a2 - b2)) / d_u * gap
    v = xs + (a1 - b1 + a2 - b2) / d_v * gap

    U = np.zeros(2, dtype=complex)
    V = np.zeros(2, dtype=complex)

    for i in range(2):

        split = u[i] - v[i]
        _require(split, f"u_{i + 1} - v_{i + 1}", PoleError, POLE_TOL, 1.0 + abs(u[i]) + abs(v[i]))

        U[i] = ((xs[i] - v[i]) * Xs[i] + (ys[i] - v[i]) * Ys[i]) / split
        V[i] = ((xs[i] - u[i]) * Xs[i] + (ys[i] - u[i]) * Ys[i]) / (-split)

    return np.concatenate([u, U]), np.concatenate([v, V])


def map_3x3_oracle(x, alpha, y, beta):

    X = leaf_lax(x, alpha).point
    Y = leaf_lax(y, beta).point

    result = refactor_nxn(X, Y, IDENTITY3, IDENTITY3)

    return leaf_coordinates(result.U), leaf_coordinates(result.V)


def boussinesq_map(x, alpha, y, beta):
    return map_3x3(x, boussinesq_params(_scalar(alpha)), y, boussinesq_params(_scalar(beta)))


def gv_map(x, alpha, y, beta):
    return map_3x3(x, gv_params(_scalar(alpha)), y, gv_params(_scalar(beta)))


def _scalar(value):
    return complex(np.asarray(value, dtype=complex).reshape(-1)[0])


# =====================================================
# GONCHARENKO-VESELOV VECTOR FORM
# =====================================================

def gv_transform(g):
    """Leaf point of L_GV(.; -lam) for the vector data (xi, eta, lam)."""

    s = g.pairing
    _require(s, "(xi, eta)")

    coords = np.array([
        -g.eta[0],
        -g.eta[1],
        2 * g.lam * g.xi[0] / s,
        2 * g.lam * g.xi[1] / s
    ], dtype=complex)

    return LeafPoint3(coords, gv_params(-g.lam))


def gv_inverse_transform(coords, lam):

    x1, x2, X1, X2 = np.asarray(coords, dtype=complex)
    lam = complex(lam)

    den = 2 * lam + x1 * X1 + x2 * X2
    _require(den, "2 lam + x.X")

    return GVVector(xi=[X1 / den, X2 / den, 1.0], eta=[-x1, -x2, 1.0], lam=lam)


def gv_vector_lax(g):

    s = g.pairing
    _require(s, "(xi, eta)")

    point = g.lam * (2 * np.outer(g.xi, g.eta) / s - IDENTITY3)

    return BinomialPencil(point, IDENTITY3)


def gv_projective_lax(g, zeta):
    """I + 2 lam/(zeta - lam) * xi (x) eta / (xi, eta); invariant under rescaling xi and eta."""

    s = g.pairing
    _require(s, "(xi, eta)")
    _require(zeta - g.lam, "zeta - lam", PoleError)

    return IDENTITY3 + (2 * g.lam / (zeta - g.lam)) * np.outer(g.xi, g.eta) / s


def _vector(coords, lam):
    return GVVector(xi=[coords[0], coords[1], 1.0], eta=[coords[2], coords[3], 1.0], lam=_scalar(lam))


def _vector_coords(g):
    return np.array([g.xi[0], g.xi[1], g.eta[0], g.eta[1]], dtype=complex)


def gv_vector_map(x, lam, y, mu):
    """GV map in (xi1, xi2, eta1, eta2) coordinates with YB parameters lam, mu."""

    lam, mu = _scalar(lam), _scalar(mu)

    left = gv_transform(_vector(x, lam))
    right = gv_transform(_vector(y, mu))

    u, v = map_3x3(left.coords, left.params, right.coords, right.params)

    return _vector_coords(gv_inverse_transform(u, lam)), _vector_coords(gv_inverse_transform(v, mu))


# =====================================================
# DESCRIPTORS
# =====================================================

LEAF_COORDS = ("x1", "x2", "X1", "X2")

YB3 = YBMapDescriptor(
    name="yb3",
    coord_names=LEAF_COORDS,
    param_dim=2,
    evaluate=map_3x3,
    lax=leaf_lax,
    structure=leaf_structure
)

BOUSSINESQ = YBMapDescriptor(
    name="boussinesq",
    coord_names=LEAF_COORDS,
    param_dim=1,
    evaluate=boussinesq_map,
    lax=lambda c, a: leaf_lax(c, boussinesq_params(_scalar(a))),
    structure=leaf_structure
)

GV = YBMapDescriptor(
    name="gv",
    coord_names=LEAF_COORDS,
    param_dim=1,
    evaluate=gv_map,
    lax=lambda c, a: leaf_lax(c, gv_params(_scalar(a))),
    structure=leaf_structure
)

GV_VECTOR = YBMapDescriptor(
    name="gv-vector",
    coord_names=("xi1", "xi2", "eta1", "eta2"),
    param_dim=1,
    evaluate=gv_vector_map,
    lax=lambda c, a: gv_vector_lax(_vector(c, a)),
    structure=None
)
