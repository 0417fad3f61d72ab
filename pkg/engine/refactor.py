import os
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.optimize import least_squares

from engine.errors import (
    DegenerateDenominator,
    DegeneratePi,
    DegenerateSimilarity,
    IllConditioned,
    ResidualExceeded
)
from engine.matrix_core import (
    SAMPLED_ZETAS,
    BinomialPencil,
    as_matrix,
    char_poly_coeffs,
    inverse,
    is_singular,
    matrix_norm,
    require_commuting
)
from services.logging_service import get_logger


TOL_LAX = float(os.getenv("YB_TOL_LAX", "1e-9"))
TOL_CAS = float(os.getenv("YB_TOL_CAS", "1e-9"))

MAX_CONDITION = float(os.getenv("YB_MAX_CONDITION", "1e8"))
CONDITION_WARN = float(os.getenv("YB_CONDITION_WARN", "1e6"))

# stop criteria of the uniqueness descent, applied to xtol, ftol and gtol alike
UNIQUENESS_TOL = float(os.getenv("YB_UNIQUENESS_TOL", "1e-15"))
UNIQUENESS_MAX_NFEV = int(os.getenv("YB_UNIQUENESS_MAX_NFEV", "20000"))
UNIQUENESS_RESTARTS = int(os.getenv("YB_UNIQUENESS_RESTARTS", "3"))

# None: no limit. Verification runs install one per worker thread.
_condition_limit = ContextVar("condition_limit", default=None)


@contextmanager
def condition_limit(value=MAX_CONDITION):

    token = _condition_limit.set(value)

    try:
        yield value
    finally:
        _condition_limit.reset(token)


@dataclass(frozen=True)
class RefactorResult:

    U: np.ndarray
    V: np.ndarray
    lax_residual: float
    casimir_drift: float
    condition: float = 1.0


# =====================================================
# RESIDUALS
# =====================================================

def lax_residual(U, V, X, Y, A, B, zetas=SAMPLED_ZETAS):
    """Absolute residual and scale of (U - zA)(V - zB) = (Y - zB)(X - zA)."""

    worst = 0.0
    scale = 1.0

    for z in zetas:

        left = (U - z * A) @ (V - z * B)
        right = (Y - z * B) @ (X - z * A)

        worst = max(worst, float(np.max(np.abs(left - right))))
        scale = max(scale, 1.0 + matrix_norm(Y - z * B) * matrix_norm(X - z * A))

    return worst, scale


def casimir_drift(U, V, X, Y, A, B):

    before_x = char_poly_coeffs(BinomialPencil(X, A))
    before_y = char_poly_coeffs(BinomialPencil(Y, B))

    after_u = char_poly_coeffs(BinomialPencil(U, A))
    after_v = char_poly_coeffs(BinomialPencil(V, B))

    return max(before_x.relative_drift(after_u), before_y.relative_drift(after_v))


def system_residual(U, V, X, Y, K_alpha, K_beta):

    product = matrix_norm(U @ V - Y @ X)
    linear = matrix_norm(U @ K_beta + K_alpha @ V - Y @ K_alpha - K_beta @ X)

    return product, linear


def _finish(U, V, X, Y, A, B, condition, tol_lax, tol_cas):

    tol_lax = TOL_LAX if tol_lax is None else tol_lax
    tol_cas = TOL_CAS if tol_cas is None else tol_cas

    residual, scale = lax_residual(U, V, X, Y, A, B)
    drift = casimir_drift(U, V, X, Y, A, B)

    if residual > tol_lax * scale or drift > tol_cas or not np.all(np.isfinite(U)):
        raise ResidualExceeded("re-factorization failed its residual checks", {
            "lax_residual": residual,
            "lax_scale": scale,
            "casimir_drift": drift,
            "condition": condition
        })

    return RefactorResult(U=U, V=V, lax_residual=residual, casimir_drift=drift, condition=condition)


def _check_condition(matrix, label):

    condition = float(np.linalg.cond(matrix))

    if condition > CONDITION_WARN:
        get_logger().log("REFACTOR_CONDITION", {"matrix": label, "condition": condition})

    limit = _condition_limit.get()

    if limit is not None and condition > limit:
        raise IllConditioned(f"{label} is ill-conditioned", {"condition": condition, "limit": limit})

    return condition


# =====================================================
# 2x2 CLOSED FORM
# =====================================================

def pi_matrices(X, Y, A, B):

    X, Y, A, B = (as_matrix(m) for m in (X, Y, A, B))

    f = char_poly_coeffs(BinomialPencil(X, A))

    pi1 = f[2] * (Y @ A + B @ X) - f[1] * (A @ B)
    pi2 = f[2] * (Y @ X) - f[0] * (A @ B)

    return pi1, pi2


def refactor_2x2(X, Y, A, B, tol_lax=None, tol_cas=None):

    X, Y, A, B = (as_matrix(m) for m in (X, Y, A, B))

    if any(m.shape != (2, 2) for m in (X, Y, A, B)):
        raise ValueError("refactor_2x2 takes 2x2 matrices")

    require_commuting(A, B)

    a_inv = inverse(A)
    inverse(B)

    pi1, pi2 = pi_matrices(X, Y, A, B)

    if is_singular(pi1):
        raise DegeneratePi("det Pi^1 vanishes at this point", {"norm_pi1": matrix_norm(pi1)})

    condition = _check_condition(pi1, "pi1")

    # U = Pi^2 (Pi^1)^-1 A
    U = np.linalg.solve(pi1.T, pi2.T).T @ A
    V = a_inv @ (Y @ A + B @ X - U @ B)

    return _finish(U, V, X, Y, A, B, condition, tol_lax, tol_cas)


# =====================================================
# n x n CAYLEY-HAMILTON SOLUTION
# =====================================================

def power_recurrence(X, Y, K_alpha, K_beta):
    """Matrices M_0..M_n, N_0..N_n with (U K_alpha^-1)^k = U K_alpha^-1 M_{k-1} + N_{k-1}."""

    X, Y, K_alpha, K_beta = (as_matrix(m) for m in (X, Y, K_alpha, K_beta))
    n = X.shape[0]

    inv_prod = inverse(K_beta) @ inverse(K_alpha)

    m1 = (Y @ K_alpha + K_beta @ X) @ inv_prod
    n1 = -(Y @ X) @ inv_prod

    ms = [np.eye(n, dtype=complex), m1]
    ns = [np.zeros((n, n), dtype=complex), n1]

    for _ in range(2, n + 1):

        ms.append(m1 @ ms[-1] + ns[-1])
        ns.append(n1 @ ms[-2])

    return ms, ns


def refactor_nxn(X, Y, K_alpha, K_beta, tol_lax=None, tol_cas=None):

    X, Y, K_alpha, K_beta = (as_matrix(m) for m in (X, Y, K_alpha, K_beta))
    n = X.shape[0]

    require_commuting(K_alpha, K_beta)

    a_inv = inverse(K_alpha)
    f = char_poly_coeffs(BinomialPencil(X, K_alpha))
    ms, ns = power_recurrence(X, Y, K_alpha, K_beta)

    numerator = -f[0] * np.eye(n, dtype=complex)
    denominator = np.zeros((n, n), dtype=complex)

    for i in range(1, n + 1):

        sign = (-1) ** i

        numerator = numerator - sign * f[i] * ns[i - 1]
        denominator = denominator + sign * f[i] * ms[i - 1]

    if is_singular(denominator):
        raise DegenerateDenominator("Cayley-Hamilton denominator is singular", {
            "norm": matrix_norm(denominator)
        })

    condition = _check_condition(denominator, "denominator")

    # U K_alpha^-1 * denominator = numerator, solved through the transposed LU
    lu = lu_factor(denominator)
    u_tilde = lu_solve(lu, numerator.T, trans=1).T

    U = u_tilde @ K_alpha
    V = a_inv @ (Y @ K_alpha + K_beta @ X - U @ K_beta)

    return _finish(U, V, X, Y, K_alpha, K_beta, condition, tol_lax, tol_cas)


def cayley_hamilton_residual(U, X, K_alpha):

    U, X, K_alpha = (as_matrix(m) for m in (U, X, K_alpha))
    n = X.shape[0]

    f = char_poly_coeffs(BinomialPencil(X, K_alpha))
    u_tilde = U @ inverse(K_alpha)

    total = f[0] * np.eye(n, dtype=complex)
    power = np.eye(n, dtype=complex)

    for i in range(1, n + 1):

        power = power @ u_tilde
        total = total + (-1) ** i * f[i] * power

    return matrix_norm(total)


def recurrence_residual(U, X, Y, K_alpha, K_beta):

    U = as_matrix(U)
    n = U.shape[0]

    ms, ns = power_recurrence(X, Y, K_alpha, K_beta)
    u_tilde = U @ inverse(as_matrix(K_alpha))

    worst = 0.0
    power = np.eye(n, dtype=complex)

    for k in range(1, n + 1):

        power = power @ u_tilde
        worst = max(worst, matrix_norm(power - (u_tilde @ ms[k - 1] + ns[k - 1])))

    return worst


# =====================================================
# SIMILARITY
# =====================================================

def similarity_check(U, V, X, Y, K_alpha, K_beta, tol=None):

    U, V, X, Y, K_alpha, K_beta = (as_matrix(m) for m in (U, V, X, Y, K_alpha, K_beta))
    tol = TOL_CAS if tol is None else tol

    gap = U @ K_beta - Y @ K_alpha

    if is_singular(gap):
        raise DegenerateSimilarity("U K_beta - Y K_alpha is singular", {"norm": matrix_norm(gap)})

    a_inv = inverse(K_alpha)
    b_inv = inverse(K_beta)
    identity = np.eye(U.shape[0], dtype=complex)

    left_u = char_poly_coeffs(BinomialPencil(U @ a_inv, identity))
    left_x = char_poly_coeffs(BinomialPencil(a_inv @ X, identity))

    right_v = char_poly_coeffs(BinomialPencil(b_inv @ V, identity))
    right_y = char_poly_coeffs(BinomialPencil(Y @ b_inv, identity))

    return left_x.relative_drift(left_u) <= tol and right_y.relative_drift(right_v) <= tol


# =====================================================
# UNIQUENESS PROBE
# =====================================================

@dataclass(frozen=True)
class UniquenessReport:

    distance: float
    initial_distance: float
    residual: float
    evaluations: int


def _triple_product(lax, coords, params, zeta):

    product = None

    for c, p in zip(coords, params):

        pencil = lax(c, p)
        value = pencil.point - zeta * pencil.leading
        product = value if product is None else product @ value

    return product


def triple_uniqueness_probe(lax, coords, params, perturbation_scale, rng=None, zetas=SAMPLED_ZETAS):
    """Descend from perturbed leaf coordinates back to the triple that reproduces L(x1)L(x2)L(x3).

    `lax(coords, params)` returns the BinomialPencil of one site; leaf coordinates keep the
    Casimir levels fixed, so the descent runs on the levels of the original triple.
    """

    rng = np.random.default_rng() if rng is None else rng

    coords = [np.asarray(c, dtype=complex) for c in coords]
    sizes = [len(c) for c in coords]
    target = [_triple_product(lax, coords, params, z) for z in zetas]
    origin = np.concatenate(coords)

    def unpack(z):

        values = z[:len(origin)] + 1j * z[len(origin):]
        out, start = [], 0

        for size in sizes:
            out.append(values[start:start + size])
            start += size

        return out

    def residuals(z):

        trial = unpack(z)
        parts = []

        for zeta, goal in zip(zetas, target):

            diff = (_triple_product(lax, trial, params, zeta) - goal).reshape(-1)
            parts.append(diff.real)
            parts.append(diff.imag)

        return np.concatenate(parts)

    noise = rng.standard_normal(origin.shape) + 1j * rng.standard_normal(origin.shape)
    start = origin + perturbation_scale * noise
    x0 = np.concatenate([start.real, start.imag])

    initial_distance = float(np.max(np.abs(start - origin)))

    if initial_distance == 0.0:
        return UniquenessReport(0.0, 0.0, float(np.max(np.abs(residuals(x0)))), 0)

    criteria = {"xtol": UNIQUENESS_TOL, "ftol": UNIQUENESS_TOL, "gtol": UNIQUENESS_TOL}

    fit = least_squares(residuals, x0, jac="3-point", method="lm", max_nfev=UNIQUENESS_MAX_NFEV, **criteria)
    evaluations = int(fit.nfev)

    # restart from the best iterate while the cost keeps dropping
    for _ in range(UNIQUENESS_RESTARTS):

        if fit.cost == 0.0:
            break

        again = least_squares(residuals, fit.x, jac="3-point", method="lm", max_nfev=UNIQUENESS_MAX_NFEV, **criteria)
        evaluations += int(again.nfev)

        if again.cost >= fit.cost:
            break

        fit = again

    found = fit.x[:len(origin)] + 1j * fit.x[len(origin):]

    return UniquenessReport(
        distance=float(np.max(np.abs(found - origin))),
        initial_distance=initial_distance,
        residual=float(np.max(np.abs(fit.fun))),
        evaluations=evaluations
    )
