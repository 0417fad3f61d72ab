"""Poisson structure matrices and finite-difference checks on them.

Points are complex vectors; brackets are treated as holomorphic, so derivatives are
taken along real steps.
"""

import os
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from engine.errors import StepTooLarge
from engine.matrix_core import as_matrix


FD_STEP = float(os.getenv("YB_FD_STEP", "1e-6"))

RANK_RTOL = float(os.getenv("YB_RANK_RTOL", "1e-8"))

# map check: base step, relative floor, number of halvings
MAP_CHECK_STEP = float(os.getenv("YB_MAP_CHECK_STEP", "1e-3"))
MAP_CHECK_RTOL = float(os.getenv("YB_MAP_CHECK_RTOL", "1e-10"))
MAP_CHECK_HALVINGS = int(os.getenv("YB_MAP_CHECK_HALVINGS", "5"))

# residual ratios under one halving: shrinking below 1/STALL_RATIO, growing above GROWTH_RATIO
STALL_RATIO = 2.0
GROWTH_RATIO = 1.5


@dataclass(frozen=True)
class PoissonStructure:
    """Structure matrix J(p). Only the strict upper triangle of the evaluator is used."""

    dim: int
    evaluator: Callable
    name: str = "structure"

    def __call__(self, p):

        p = np.asarray(p, dtype=complex)

        if p.shape != (self.dim,):
            raise ValueError(f"{self.name} expects a point of dimension {self.dim}, got {p.shape}")

        upper = np.triu(np.asarray(self.evaluator(p), dtype=complex), 1)

        return upper - upper.T


@dataclass(frozen=True)
class Observable:

    dim: int
    evaluator: Callable
    gradient: Optional[Callable] = None
    name: str = "observable"

    def __call__(self, p):
        return complex(self.evaluator(np.asarray(p, dtype=complex)))


def coordinate(k, dim):
    """The coordinate function x_k."""

    unit = np.zeros(dim, dtype=complex)
    unit[k] = 1.0

    return Observable(dim, lambda p: p[k], lambda p: unit, name=f"x{k + 1}")


# =====================================================
# DIFFERENTIATION
# =====================================================

def _steps(p, h=None):

    base = FD_STEP if h is None else h

    return base * (1.0 + np.abs(p))


def grad(f, p, h=None):

    p = np.asarray(p, dtype=complex)

    if f.gradient is not None:
        return np.asarray(f.gradient(p), dtype=complex)

    out = np.zeros(len(p), dtype=complex)

    for k, step in enumerate(_steps(p, h)):

        e = np.zeros(len(p), dtype=complex)
        e[k] = step

        out[k] = (f.evaluator(p + e) - f.evaluator(p - e)) / (2 * step)

    return out


def jacobian(F, p, h=None):
    """Central-difference Jacobian DF(p), rows indexed by outputs."""

    p = np.asarray(p, dtype=complex)
    columns = []

    for k, step in enumerate(_steps(p, h)):

        e = np.zeros(len(p), dtype=complex)
        e[k] = step

        plus = np.asarray(F(p + e), dtype=complex)
        minus = np.asarray(F(p - e), dtype=complex)

        columns.append((plus - minus) / (2 * step))

    return np.stack(columns, axis=1)


def richardson_jacobian(F, p, h=None):
    """Central differences at h, h/2, h/4 combined to cancel the h^2 and h^4 error terms."""

    h = MAP_CHECK_STEP if h is None else h
    D1, D2, D4 = (jacobian(F, p, h / m) for m in (1, 2, 4))

    coarse = (4.0 * D2 - D1) / 3.0
    fine = (4.0 * D4 - D2) / 3.0

    return (16.0 * fine - coarse) / 15.0


# =====================================================
# BRACKETS
# =====================================================

def bracket(J, f, g, p):

    p = np.asarray(p, dtype=complex)

    return complex(grad(f, p) @ J(p) @ grad(g, p))


def casimir_check(J, f, samples, sampler, rng):
    """max over sampled points and coordinates of |{f, x_k}|."""

    worst = 0.0

    for _ in range(samples):

        p = np.asarray(sampler(rng), dtype=complex)
        worst = max(worst, float(np.max(np.abs(grad(f, p) @ J(p)))))

    return worst


def _map_residual(F, J_source, J_target, p, h):

    D = richardson_jacobian(F, p, h)
    pushed = D @ J_source(p) @ D.T

    return float(np.max(np.abs(pushed - J_target(np.asarray(F(p), dtype=complex)))))


def poisson_map_check(F, J_source, J_target, p, h=None, rtol=None):
    """max |DF J_source DF^T - J_target o F| at p, with DF from Richardson-extrapolated differences.

    The step is halved until the residual stops shrinking or falls below rtol relative to
    |J_target o F|. A residual that is still shrinking after MAP_CHECK_HALVINGS halvings, or
    that grows under halving, raises StepTooLarge.
    """

    p = np.asarray(p, dtype=complex)
    h = MAP_CHECK_STEP if h is None else h
    rtol = MAP_CHECK_RTOL if rtol is None else rtol

    floor = rtol * (1.0 + float(np.max(np.abs(J_target(np.asarray(F(p), dtype=complex))))))
    history = [_map_residual(F, J_source, J_target, p, h)]

    if history[0] <= floor:
        return history[0]

    for k in range(1, MAP_CHECK_HALVINGS + 1):

        residual = _map_residual(F, J_source, J_target, p, h / 2 ** k)
        previous = history[-1]
        history.append(residual)

        if residual <= floor:
            return residual

        if residual > GROWTH_RATIO * previous:
            break

        # step-independent value
        if previous <= STALL_RATIO * residual:
            return min(previous, residual)

    raise StepTooLarge("finite-difference residual did not settle under step halving", {
        "residuals": history,
        "h": h
    })


def jacobi_residual(J, p, h=None):
    """max |{x_i,{x_j,x_k}} + cyclic| with the derivatives of J taken by central differences."""

    p = np.asarray(p, dtype=complex)
    n = len(p)

    dJ = np.zeros((n, n, n), dtype=complex)

    for m, step in enumerate(_steps(p, h)):

        e = np.zeros(n, dtype=complex)
        e[m] = step

        dJ[m] = (J(p + e) - J(p - e)) / (2 * step)

    Jp = J(p)

    # T[i,j,k] = sum_m J_im d_m J_jk
    T = np.einsum("im,mjk->ijk", Jp, dJ)
    cyclic = T + np.transpose(T, (1, 2, 0)) + np.transpose(T, (2, 0, 1))

    return float(np.max(np.abs(cyclic)))


def structure_rank(J, p, rtol=None):

    rtol = RANK_RTOL if rtol is None else rtol
    s = np.linalg.svd(J(np.asarray(p, dtype=complex)), compute_uv=False)

    if s[0] == 0:
        return 0

    return int(np.sum(s > rtol * s[0]))


# =====================================================
# STRUCTURES
# =====================================================

def sklyanin_nxn(A):
    """{x_ij, x_kl} = a_il x_kj - x_il a_kj on the row-major entries of X."""

    A = as_matrix(A)
    n = A.shape[0]

    def evaluate(p):

        X = p.reshape(n, n)
        table = np.einsum("il,kj->ijkl", A, X) - np.einsum("il,kj->ijkl", X, A)

        return table.reshape(n * n, n * n)

    return PoissonStructure(n * n, evaluate, name=f"sklyanin-{n}x{n}")


def sklyanin_2x2(A):

    A = as_matrix(A)

    if A.shape != (2, 2):
        raise ValueError("sklyanin_2x2 takes a 2x2 leading matrix")

    a1, a2, a3, a4 = A.reshape(-1)

    def evaluate(p):

        x1, x2, x3, x4 = p
        J = np.zeros((4, 4), dtype=complex)

        J[0, 1] = -x2 * a1 + x1 * a2
        J[0, 2] = x3 * a1 - x1 * a3
        J[0, 3] = x3 * a2 - x2 * a3
        J[1, 2] = x4 * a1 - x1 * a4
        J[1, 3] = x4 * a2 - x2 * a4
        J[2, 3] = -x4 * a3 + x3 * a4

        return J

    return PoissonStructure(4, evaluate, name="sklyanin-2x2")


def sklyanin_3x3_identity():
    """Sklyanin structure for L = X - zeta*I on (x11, x12, x13, x21, ..., x33)."""

    structure = sklyanin_nxn(np.eye(3))

    return PoissonStructure(9, structure.evaluator, name="sklyanin-3x3")


def product_structure(first, second):

    d1, d2 = first.dim, second.dim

    def evaluate(p):

        J = np.zeros((d1 + d2, d1 + d2), dtype=complex)
        J[:d1, :d1] = first(p[:d1])
        J[d1:, d1:] = second(p[d1:])

        return J

    return PoissonStructure(d1 + d2, evaluate, name=f"{first.name}x{second.name}")


def planar_structure(value, name="planar"):
    """Two coordinates with {x_1, x_2} = value(p)."""

    def evaluate(p):

        J = np.zeros((2, 2), dtype=complex)
        J[0, 1] = value(p)

        return J

    return PoissonStructure(2, evaluate, name=name)


def canonical_structure(pairs):
    """Darboux structure on (q_1..q_k, p_1..p_k) with {q_i, p_j} = delta_ij."""

    k = pairs
    J = np.zeros((2 * k, 2 * k), dtype=complex)
    J[:k, k:] = np.eye(k)

    return PoissonStructure(2 * k, lambda p: J, name=f"canonical-{2 * k}")


# -------- Casimirs of the 2x2 structure --------

def casimir_observables_2x2(A):

    a1, a2, a3, a4 = as_matrix(A).reshape(-1)

    f0 = Observable(
        4,
        lambda p: p[0] * p[3] - p[1] * p[2],
        lambda p: np.array([p[3], -p[2], -p[1], p[0]]),
        name="f0"
    )

    f1 = Observable(
        4,
        lambda p: a4 * p[0] - a3 * p[1] - a2 * p[2] + a1 * p[3],
        lambda p: np.array([a4, -a3, -a2, a1]),
        name="f1"
    )

    return f0, f1
