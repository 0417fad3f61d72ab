import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt
from tqdm import tqdm

from data.presets import (
    DEFAULT_CURVE_ALPHAS,
    DEFAULT_TOLERANCES,
    SAMPLING_PRESETS,
    SAMPLING_WINDOW,
    SURFACE_CURVES
)
from engine.errors import ConfigError, DomainError, NumericalDegeneracy, OutOfWindow, StepTooLarge
from engine.lattice import integrals_ay, integrals_independence, integrals_involution
from engine.map_registry import get_map
from engine.maps_2x2 import CASE_I, CASE_II, invert_strong_lax
from engine.maps_3x3 import (
    boussinesq_params,
    complete_matrix,
    discriminant_surface,
    gv_params,
    map_3x3_oracle
)
from engine.matrix_core import casimirs, max_abs
from engine.refactor import casimir_drift, condition_limit, lax_residual
from engine.sklyanin import poisson_map_check, product_structure
from services.logging_service import get_logger


BATCH_SIZE = int(os.getenv("YB_BATCH_SIZE", "50"))

MAX_REDRAWS = int(os.getenv("YB_MAX_REDRAWS", "25"))

REDRAW_ERRORS = (DomainError, NumericalDegeneracy, StepTooLarge)

MAX_RESIDUAL = "max_residual"
MIN_RATIO = "min_ratio"


# =====================================================
# SAMPLING
# =====================================================

class Sampler:
    """Complex samples in a box around a per-map centre; real parts and imaginary parts uniform."""

    def __init__(self, map_id, preset=None):

        self.map_id = map_id
        self.preset = SAMPLING_PRESETS[map_id] if preset is None else preset

    def _draw(self, rng, block):

        center = np.asarray(block["center"], dtype=complex)
        noise = rng.uniform(-1.0, 1.0, center.shape) + 1j * rng.uniform(-1.0, 1.0, center.shape)

        return center + block["spread"] * noise

    def coords(self, rng):
        return self._draw(rng, self.preset["coords"])

    def params(self, rng):
        return self._draw(rng, self.preset["params"])

    def site(self, rng):
        return self.coords(rng), self.params(rng)


def _in_window(*values):

    for value in values:

        value = np.asarray(value)

        if not np.all(np.isfinite(value)) or float(np.max(np.abs(value))) > SAMPLING_WINDOW:
            raise OutOfWindow("sample left the magnitude window", {"window": SAMPLING_WINDOW})


def _apply(descriptor, x, a, y, b):

    u, v = descriptor.evaluate(x, a, y, b)
    _in_window(u, v)

    return np.asarray(u, dtype=complex), np.asarray(v, dtype=complex)


def _relative(a, b):

    a = np.concatenate([np.ravel(v) for v in a])
    b = np.concatenate([np.ravel(v) for v in b])

    return max_abs(a - b) / (1.0 + max_abs(b))


# =====================================================
# YANG-BAXTER COMPOSITIONS
# =====================================================

def yb_compositions(apply, x, a, y, b, z, c):
    """(R23 R13 R12)(x, y, z) and (R12 R13 R23)(x, y, z)."""

    x1, y1 = apply(x, a, y, b)
    x2, z1 = apply(x1, a, z, c)
    y2, z2 = apply(y1, b, z1, c)

    y3, z3 = apply(y, b, z, c)
    x3, z4 = apply(x, a, z3, c)
    x4, y4 = apply(x3, a, y3, b)

    return (x2, y2, z2), (x4, y4, z4)


def yb_residual(map_id, x, a, y, b, z, c):

    descriptor = get_map(map_id)
    left, right = yb_compositions(lambda *args: _apply(descriptor, *args), x, a, y, b, z, c)

    return _relative(left, right)


# =====================================================
# CHECKS
# =====================================================

def _yb_check(descriptor, sampler, rng):

    (x, a), (y, b), (z, c) = sampler.site(rng), sampler.site(rng), sampler.site(rng)
    left, right = yb_compositions(lambda *args: _apply(descriptor, *args), x, a, y, b, z, c)

    return _relative(left, right)


def _pencils(descriptor, sampler, rng):

    (x, a), (y, b) = sampler.site(rng), sampler.site(rng)
    u, v = _apply(descriptor, x, a, y, b)

    X, Y = descriptor.lax(x, a), descriptor.lax(y, b)
    U, V = descriptor.lax(u, a), descriptor.lax(v, b)

    return U.point, V.point, X.point, Y.point, X.leading, Y.leading


def _lax_check(descriptor, sampler, rng):

    worst, scale = lax_residual(*_pencils(descriptor, sampler, rng))

    return worst / scale


def _casimir_check(descriptor, sampler, rng):
    return casimir_drift(*_pencils(descriptor, sampler, rng))


def _poisson_check(descriptor, sampler, rng):

    (x, a), (y, b) = sampler.site(rng), sampler.site(rng)
    k = descriptor.coord_dim

    def F(p):
        return np.concatenate(descriptor.evaluate(p[:k], a, p[k:], b))

    J = product_structure(descriptor.structure(a), descriptor.structure(b))
    p = np.concatenate([x, y])

    _in_window(F(p))
    residual = poisson_map_check(F, J, J, p)

    return residual / (1.0 + max_abs(J(F(p))))


STRONG_LAX_CASES = {
    "case1": CASE_I,
    "case2": CASE_II
}


def _strong_lax_check(descriptor, sampler, rng):

    (x, a), (y, b) = sampler.site(rng), sampler.site(rng)
    u, v = _apply(descriptor, x, a, y, b)

    v2, x2 = invert_strong_lax(STRONG_LAX_CASES[descriptor.name], u, a, y, b)

    return _relative((v2, x2), (v, x))


ORACLE_PARAMS = {
    "yb3": lambda a: a,
    "boussinesq": lambda a: boussinesq_params(complex(np.ravel(a)[0])),
    "gv": lambda a: gv_params(complex(np.ravel(a)[0]))
}


def _oracle_check(descriptor, sampler, rng):

    (x, a), (y, b) = sampler.site(rng), sampler.site(rng)
    u, v = _apply(descriptor, x, a, y, b)

    to_leaf = ORACLE_PARAMS[descriptor.name]
    u2, v2 = map_3x3_oracle(x, to_leaf(a), y, to_leaf(b))

    return _relative((u, v), (u2, v2))


def _involution_check(descriptor, sampler, rng):

    (x, a), (y, b) = sampler.site(rng), sampler.site(rng)

    return integrals_involution(x, y, a, b)


def _integrals_check(descriptor, sampler, rng):

    (x, a), (y, b) = sampler.site(rng), sampler.site(rng)
    u, v = _apply(descriptor, x, a, y, b)

    before = np.array(integrals_ay(*x, *y, a, b))
    after = np.array(integrals_ay(*u, *v, a, b))

    # size of the individual terms, the sums may cancel
    terms = np.abs(integrals_ay(*np.abs(u), *np.abs(v), np.abs(a), np.abs(b)))

    return float(np.max(np.abs(after - before) / (1.0 + terms)))


def _independence_check(descriptor, sampler, rng):

    (x, a), (y, b) = sampler.site(rng), sampler.site(rng)

    return integrals_independence(x, y, a, b)


@dataclass(frozen=True)
class Check:

    name: str
    run: Callable
    statistic: str = MAX_RESIDUAL


BASE_CHECKS = (
    Check("yb", _yb_check),
    Check("lax", _lax_check),
    Check("casimir", _casimir_check)
)

EXTRA_CHECKS = {
    "case1": (Check("strong_lax", _strong_lax_check),),
    "case2": (Check("strong_lax", _strong_lax_check),),
    "ay": (
        Check("involution", _involution_check),
        Check("integrals", _integrals_check),
        Check("independence", _independence_check, MIN_RATIO)
    ),
    "yb3": (Check("oracle", _oracle_check),),
    "boussinesq": (Check("oracle", _oracle_check),),
    "gv": (Check("oracle", _oracle_check),)
}


def checks_for(map_id):

    descriptor = get_map(map_id)
    checks = list(BASE_CHECKS)

    if descriptor.structure is not None:
        checks.append(Check("poisson", _poisson_check))

    checks.extend(EXTRA_CHECKS.get(map_id, ()))

    return checks


# =====================================================
# RESULTS
# =====================================================

@dataclass
class CheckResult:

    name: str
    statistic: str
    tolerance: float
    value: float
    samples: int
    rejected: int

    @property
    def passed(self):

        if self.statistic == MIN_RATIO:
            return self.value >= self.tolerance

        return self.value <= self.tolerance

    def to_dict(self):

        return {
            self.statistic: self.value,
            "tolerance": self.tolerance,
            "samples": self.samples,
            "rejected": self.rejected,
            "passed": self.passed
        }


@dataclass
class VerificationReport:

    map_id: str
    seed: int
    samples: int
    tolerances: dict
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def to_dict(self):

        return {
            "schema": "1",
            "command": "verify",
            "map": self.map_id,
            "seed": self.seed,
            "samples": self.samples,
            "tolerances": dict(self.tolerances),
            "checks": {c.name: c.to_dict() for c in self.checks},
            "passed": self.passed
        }


# =====================================================
# SUITE RUNNER
# =====================================================

def _admissible(draw):
    """Run draw() until it returns; returns (value, rejected draws)."""

    retrying = Retrying(
        stop=stop_after_attempt(MAX_REDRAWS),
        retry=retry_if_exception_type(REDRAW_ERRORS),
        reraise=True
    )

    for attempt in retrying:
        with attempt:
            value = draw()

    return value, attempt.retry_state.attempt_number - 1


def _run_batch(check, descriptor, sampler, seed_seq, count):

    rng = np.random.default_rng(seed_seq)
    values = []
    rejected = 0

    with condition_limit():

        for _ in range(count):

            value, redraws = _admissible(lambda: check.run(descriptor, sampler, rng))
            values.append(float(value))
            rejected += redraws

    return values, rejected


def _batch_sizes(samples, size):

    full, rest = divmod(samples, size)

    return [size] * full + ([rest] if rest else [])


def resolve_tolerances(overrides=None):

    tolerances = dict(DEFAULT_TOLERANCES)
    tolerances.update(overrides or {})

    return tolerances


def run_suite(map_id, samples, seed, tolerances=None, workers=None, progress=False):

    descriptor = get_map(map_id)

    if samples < 1:
        raise ConfigError("samples must be at least 1", {"samples": samples})

    tolerances = resolve_tolerances(tolerances)
    sampler = Sampler(map_id)
    logger = get_logger()

    checks = checks_for(map_id)
    sizes = _batch_sizes(samples, BATCH_SIZE)

    # one child seed per (check, batch): results do not depend on scheduling
    children = np.random.SeedSequence(seed).spawn(len(checks) * len(sizes))

    logger.log("VERIFY_START", {"map": map_id, "samples": samples, "seed": seed})

    report = VerificationReport(map_id=map_id, seed=seed, samples=samples, tolerances=tolerances)

    with ThreadPoolExecutor(max_workers=workers) as pool:

        futures = []

        for i, check in enumerate(checks):
            for j, count in enumerate(sizes):
                seq = children[i * len(sizes) + j]
                futures.append((check, pool.submit(_run_batch, check, descriptor, sampler, seq, count)))

        merged = {check.name: ([], 0) for check in checks}

        for check, future in tqdm(futures, desc=f"verify {map_id}", disable=not progress):

            values, rejected = future.result()
            old_values, old_rejected = merged[check.name]
            merged[check.name] = (old_values + values, old_rejected + rejected)

    for check in checks:

        values, rejected = merged[check.name]
        value = min(values) if check.statistic == MIN_RATIO else max(values)

        result = CheckResult(
            name=check.name,
            statistic=check.statistic,
            tolerance=float(tolerances[check.name]),
            value=value,
            samples=len(values),
            rejected=rejected
        )

        report.checks.append(result)

        if rejected:
            logger.log("SAMPLES_REJECTED", {"map": map_id, "check": check.name, "rejected": rejected})

        if not result.passed:
            logger.log("CHECK_FAILED", {"map": map_id, "check": check.name, **result.to_dict()})

    logger.log("VERIFY_COMPLETE", {"map": map_id, "passed": report.passed})

    return report


# =====================================================
# SINGLE EVALUATION
# =====================================================

def evaluate_point(map_id, x, alpha, y, beta):

    descriptor = get_map(map_id)

    x = np.atleast_1d(np.asarray(x, dtype=complex))
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    beta = np.atleast_1d(np.asarray(beta, dtype=complex))

    for name, value, size in (("x", x, descriptor.coord_dim), ("y", y, descriptor.coord_dim),
                              ("alpha", alpha, descriptor.param_dim), ("beta", beta, descriptor.param_dim)):
        if value.shape != (size,):
            raise ConfigError(f"{name} must have {size} entries for map {map_id!r}", {"got": len(value)})

    u, v = descriptor.evaluate(x, alpha, y, beta)

    return np.asarray(u, dtype=complex), np.asarray(v, dtype=complex)


# =====================================================
# DISCRIMINANT SURFACE SCAN
# =====================================================

def surface_residual(f0, f1, f2):
    """|discriminant| relative to the size of its terms."""

    terms = (
        4 * f0 * f2 ** 3,
        f1 ** 2 * f2 ** 2,
        4 * f1 ** 3,
        18 * f0 * f1 * f2,
        27 * f0 ** 2
    )

    return float(abs(discriminant_surface(f0, f1, f2)) / (1.0 + sum(abs(t) for t in terms)))


def _leaf_triple(rng):
    """Casimirs of a random real matrix satisfying the rank-four minors constraint."""

    entries = rng.uniform(0.5, 2.0, 6) * rng.choice((-1.0, 1.0), 6)
    coeffs = casimirs(complete_matrix(*entries)).coeffs[:3]

    return tuple(float(np.real(c)) for c in coeffs)


def surface_scan(curve=None, alphas=None, samples=None, seed=0):
    """Rows (f0, f1, f2, residual) along a named curve or at random leaf points."""

    if curve is not None:

        if curve not in SURFACE_CURVES:
            raise ConfigError(f"unknown curve {curve!r}", {"known": sorted(SURFACE_CURVES)})

        alphas = DEFAULT_CURVE_ALPHAS if alphas is None else alphas
        triples = [SURFACE_CURVES[curve](float(a)) for a in alphas]

    else:

        rng = np.random.default_rng(np.random.SeedSequence(seed))
        triples = [_leaf_triple(rng) for _ in range(samples or 0)]

    return [(f0, f1, f2, surface_residual(f0, f1, f2)) for f0, f1, f2 in triples]
