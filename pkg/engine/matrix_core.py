"""Small dense complex matrices, binomial pencils X - zeta*A and commuting families K(alpha).

Casimir convention used everywhere in the package:

    det(X - zeta*A) = sum_i (-1)**i * f_i * zeta**i,   f_0 = det X,  f_n = det A.
"""

import os
from dataclasses import dataclass
from enum import Enum
from itertools import combinations

import numpy as np

from engine.errors import NonCommuting, SingularMatrix, SingularParameter


SINGULAR_THRESHOLD = float(os.getenv("YB_SINGULAR_THRESHOLD", "1e-12"))

COMMUTE_TOL = float(os.getenv("YB_COMMUTE_TOL", "1e-14"))

# sampled spectral parameters for residual checks
SAMPLED_ZETAS = (0.0, 1.0, -1.0, 1j, -1j, 2.0)


def as_matrix(m):

    arr = np.array(m, dtype=complex)

    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {arr.shape}")

    return arr


def _frozen(m):

    arr = as_matrix(m)
    arr.flags.writeable = False

    return arr


def matrix_norm(m):
    """Infinity norm (max absolute row sum)."""

    m = np.asarray(m)

    if m.size == 0:
        return 0.0

    return float(np.max(np.sum(np.abs(m), axis=1)))


def max_abs(m):

    m = np.asarray(m)

    if m.size == 0:
        return 0.0

    return float(np.max(np.abs(m)))


# =====================================================
# DETERMINANT / INVERSE
# =====================================================

def det(m):

    m = as_matrix(m)
    n, cols = m.shape

    if n != cols:
        raise ValueError("determinant of a non-square matrix")

    if n == 0:
        return 1.0 + 0j

    if n == 1:
        return complex(m[0, 0])

    if n == 2:
        return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    if n == 3:
        return complex(
            m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
            - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
            + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0])
        )

    return complex(np.linalg.det(m))


def is_singular(m, threshold=None):

    m = as_matrix(m)
    threshold = SINGULAR_THRESHOLD if threshold is None else threshold
    scale = matrix_norm(m) ** m.shape[0]

    return abs(det(m)) < threshold * scale or scale == 0.0


def inverse(m, threshold=None):

    m = as_matrix(m)

    if is_singular(m, threshold):
        raise SingularMatrix("matrix is singular to working precision", {
            "det": abs(det(m)),
            "norm": matrix_norm(m)
        })

    return np.linalg.inv(m)


def commutator_norm(a, b):

    a = as_matrix(a)
    b = as_matrix(b)

    return matrix_norm(a @ b - b @ a)


def require_commuting(a, b, tol=None):

    tol = COMMUTE_TOL if tol is None else tol
    residual = commutator_norm(a, b)

    if residual > tol * max(1.0, matrix_norm(a) * matrix_norm(b)):
        raise NonCommuting("leading matrices do not commute", {"commutator": residual})


# =====================================================
# PENCILS
# =====================================================

@dataclass(frozen=True)
class BinomialPencil:

    point: np.ndarray
    leading: np.ndarray

    def __post_init__(self):

        point = _frozen(self.point)
        leading = _frozen(self.leading)

        if point.shape != leading.shape or point.shape[0] != point.shape[1]:
            raise ValueError(
                f"pencil needs square matrices of equal size, got {point.shape} and {leading.shape}"
            )

        object.__setattr__(self, "point", point)
        object.__setattr__(self, "leading", leading)

    @property
    def n(self):
        return self.point.shape[0]

    def __call__(self, zeta):
        return pencil_eval(self, zeta)


@dataclass(frozen=True)
class CharPolyCoeffs:

    coeffs: np.ndarray

    def __post_init__(self):

        coeffs = np.array(self.coeffs, dtype=complex)
        coeffs.flags.writeable = False

        object.__setattr__(self, "coeffs", coeffs)

    def __getitem__(self, i):
        return complex(self.coeffs[i])

    def __len__(self):
        return len(self.coeffs)

    def evaluate(self, zeta):

        signs = np.array([(-1) ** i for i in range(len(self.coeffs))])
        powers = np.array([zeta ** i for i in range(len(self.coeffs))], dtype=complex)

        return complex(np.sum(signs * self.coeffs * powers))

    def relative_drift(self, other):

        other = np.asarray(other.coeffs if isinstance(other, CharPolyCoeffs) else other)

        return float(np.max(np.abs(self.coeffs - other) / (1.0 + np.abs(self.coeffs))))


def pencil_eval(p, zeta):
    return p.point - zeta * p.leading


def _mixed_determinant_coeffs(x, a):

    n = x.shape[0]
    coeffs = np.zeros(n + 1, dtype=complex)

    for i in range(n + 1):

        total = 0j

        for cols in combinations(range(n), i):

            mixed = x.copy()
            mixed[:, list(cols)] = a[:, list(cols)]
            total += det(mixed)

        coeffs[i] = total

    return coeffs


def _faddeev_leverrier(m):
    """Coefficients c_0..c_n of det(zeta*I - m) = sum c_k zeta**k."""

    n = m.shape[0]
    c = np.zeros(n + 1, dtype=complex)
    c[n] = 1.0

    identity = np.eye(n, dtype=complex)
    work = np.zeros_like(m)

    for k in range(1, n + 1):

        work = m @ work + c[n - k + 1] * identity
        c[n - k] = -np.trace(m @ work) / k

    return c


def char_poly_coeffs(p):

    x = np.array(p.point)
    a = np.array(p.leading)
    n = p.n

    if n <= 3 or is_singular(a):
        return CharPolyCoeffs(_mixed_determinant_coeffs(x, a))

    # det(X - zeta A) = det A * det(A^-1 X - zeta I) = det A * (-1)^n * det(zeta I - A^-1 X)
    c = _faddeev_leverrier(np.linalg.solve(a, x))
    scale = det(a) * (-1) ** n
    coeffs = np.array([scale * c[i] * (-1) ** i for i in range(n + 1)], dtype=complex)

    return CharPolyCoeffs(coeffs)


def casimirs(point, leading=None):

    point = as_matrix(point)

    if leading is None:
        leading = np.eye(point.shape[0], dtype=complex)

    return char_poly_coeffs(BinomialPencil(point, leading))


# =====================================================
# COMMUTING FAMILIES
# =====================================================

class FamilyKind(str, Enum):

    DIAGONAL_I = "DiagonalI"
    JORDAN_II = "JordanII"
    ROTATION_III = "RotationIII"


@dataclass(frozen=True)
class CommutingFamily:

    kind: FamilyKind
    dimension: int = 2

    def __post_init__(self):

        kind = FamilyKind(self.kind)
        object.__setattr__(self, "kind", kind)

        if kind is FamilyKind.ROTATION_III and self.dimension != 2:
            raise ValueError("the rotation family is 2x2 only")

        if self.dimension < 1:
            raise ValueError("family dimension must be positive")

    def __call__(self, alpha):
        return family_eval(self, alpha)


def family_eval(fam, alpha):

    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    n = fam.dimension

    if fam.kind is FamilyKind.DIAGONAL_I:

        if len(alpha) != n:
            raise ValueError(f"diagonal family needs {n} parameters, got {len(alpha)}")

        if np.any(alpha == 0):
            raise SingularParameter("diagonal family needs nonzero parameters", {"alpha": alpha})

        return np.diag(alpha)

    if fam.kind is FamilyKind.JORDAN_II:

        if len(alpha) != 2:
            raise ValueError("Jordan family takes (alpha_1, alpha_2)")

        if alpha[0] == 0:
            raise SingularParameter("Jordan family needs alpha_1 != 0", {"alpha": alpha})

        return alpha[0] * np.eye(n, dtype=complex) + alpha[1] * np.eye(n, k=1, dtype=complex)

    if len(alpha) != 2:
        raise ValueError("rotation family takes (alpha_1, alpha_2)")

    if alpha[0] ** 2 + alpha[1] ** 2 == 0:
        raise SingularParameter("rotation family needs alpha_1^2 + alpha_2^2 != 0", {"alpha": alpha})

    return np.array([[alpha[0], -alpha[1]], [alpha[1], alpha[0]]], dtype=complex)


# =====================================================
# JSON CODECS
# =====================================================

def matrix_to_json(m):

    m = as_matrix(m)
    flat = m.reshape(-1)

    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "re": [float(v) for v in flat.real],
        "im": [float(v) for v in flat.imag]
    }


def matrix_from_json(doc):

    rows, cols = int(doc["rows"]), int(doc["cols"])
    re = np.asarray(doc["re"], dtype=float)
    im = np.asarray(doc.get("im", [0.0] * len(doc["re"])), dtype=float)

    if re.size != rows * cols or im.size != rows * cols:
        raise ValueError("matrix JSON has inconsistent sizes")

    return (re + 1j * im).reshape(rows, cols)


def vector_to_json(v):

    v = np.atleast_1d(np.asarray(v, dtype=complex))

    return {
        "re": [float(x) for x in v.real],
        "im": [float(x) for x in v.imag]
    }


def vector_from_json(doc):

    if isinstance(doc, dict):

        re = np.asarray(doc["re"], dtype=float)
        im = np.asarray(doc.get("im", [0.0] * len(re)), dtype=float)

        if re.shape != im.shape:
            raise ValueError("vector JSON has inconsistent sizes")

        return re + 1j * im

    if not isinstance(doc, (list, tuple)):
        doc = np.atleast_1d(doc).tolist()

    out = []

    for item in doc:

        if isinstance(item, (list, tuple)):
            out.append(complex(item[0], item[1]))
        else:
            out.append(complex(item))

    return np.array(out, dtype=complex)
