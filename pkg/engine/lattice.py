import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from engine.errors import PoleEncountered, YBError
from engine.map_registry import get_map
from engine.matrix_core import SAMPLED_ZETAS, casimirs
from engine.refactor import condition_limit
from engine.sklyanin import Observable, bracket, product_structure
from engine.maps_2x2 import ay_bracket
from services.logging_service import get_logger


TRAJECTORY_CAP = int(os.getenv("YB_TRAJECTORY_CAP", "10000"))

# near-pole detection during evolution
POLE_GROWTH = float(os.getenv("YB_POLE_GROWTH", "10"))
DRIFT_TOL = float(os.getenv("YB_DRIFT_TOL", "1e-8"))
LATTICE_MAX_CONDITION = float(os.getenv("YB_LATTICE_MAX_CONDITION", "1e6"))


@dataclass(frozen=True)
class Site:

    coords: np.ndarray
    params: np.ndarray

    def __post_init__(self):

        object.__setattr__(self, "coords", np.atleast_1d(np.asarray(self.coords, dtype=complex)))
        object.__setattr__(self, "params", np.atleast_1d(np.asarray(self.params, dtype=complex)))


@dataclass(frozen=True)
class StaircaseState:
    """m-periodic staircase: x-sites x_1..x_m and y-sites y_1..y_m, monodromy L(y_m)L(x_m)...L(y_1)L(x_1)."""

    map_id: str
    x_sites: tuple
    y_sites: tuple

    def __post_init__(self):

        xs = tuple(s if isinstance(s, Site) else Site(*s) for s in self.x_sites)
        ys = tuple(s if isinstance(s, Site) else Site(*s) for s in self.y_sites)

        if len(xs) != len(ys) or not xs:
            raise ValueError("a staircase needs the same positive number of x- and y-sites")

        object.__setattr__(self, "x_sites", xs)
        object.__setattr__(self, "y_sites", ys)

    @property
    def period(self):
        return len(self.x_sites)


def monodromy(state, zeta):

    descriptor = get_map(state.map_id)
    result = None

    for x, y in zip(state.x_sites, state.y_sites):

        block = descriptor.lax(y.coords, y.params)(zeta) @ descriptor.lax(x.coords, x.params)(zeta)
        result = block if result is None else block @ result

    return result


def monodromy_spectrum(state, zetas=SAMPLED_ZETAS):
    """Characteristic-polynomial coefficients of the monodromy matrix, one row per zeta."""

    return np.array([casimirs(monodromy(state, z)).coeffs for z in zetas])


def spectrum_drift(before, after):
    return float(np.max(np.abs(after - before) / (1.0 + np.abs(before))))


def transfer_step(state):

    descriptor = get_map(state.map_id)
    images = [
        descriptor.evaluate(x.coords, x.params, y.coords, y.params)
        for x, y in zip(state.x_sites, state.y_sites)
    ]

    m = state.period

    new_y = tuple(Site(images[k][1], state.y_sites[k].params) for k in range(m))
    new_x = tuple(Site(images[k - 1][0], state.x_sites[k - 1].params) for k in range(m))

    return StaircaseState(state.map_id, new_x, new_y)


# =====================================================
# ADLER-YAMILOV INTEGRALS
# =====================================================

def integrals_ay(x1, x2, y1, y2, alpha, beta):

    a1, a2, a3 = np.asarray(alpha, dtype=complex)
    b1, b2, b3 = np.asarray(beta, dtype=complex)

    j1 = (a1 * b1 / a3) * x1 * x2 + (a1 * b1 / b3) * y1 * y2
    j2 = x2 * y1 + x1 * y2 + (a1 * b1 / (a3 * b3)) * (a2 + x1 * x2) * (b2 + y1 * y2)

    return complex(j1), complex(j2)


def integral_observables_ay(alpha, beta):
    """J1, J2 on (x1, x2, y1, y2) with exact gradients."""

    a1, a2, a3 = np.asarray(alpha, dtype=complex)
    b1, b2, b3 = np.asarray(beta, dtype=complex)

    ka = a1 * b1 / a3
    kb = a1 * b1 / b3
    c = a1 * b1 / (a3 * b3)

    def j1_grad(p):
        x1, x2, y1, y2 = p
        return np.array([ka * x2, ka * x1, kb * y2, kb * y1])

    def j2_grad(p):

        x1, x2, y1, y2 = p
        P = a2 + x1 * x2
        Q = b2 + y1 * y2

        return np.array([y2 + c * x2 * Q, y1 + c * x1 * Q, x2 + c * y2 * P, x1 + c * y1 * P])

    j1 = Observable(4, lambda p: integrals_ay(*p, alpha, beta)[0], j1_grad, name="J1")
    j2 = Observable(4, lambda p: integrals_ay(*p, alpha, beta)[1], j2_grad, name="J2")

    return j1, j2


def integrals_involution(x, y, alpha, beta):

    j1, j2 = integral_observables_ay(alpha, beta)
    structure = product_structure(ay_bracket(alpha), ay_bracket(beta))

    return abs(bracket(structure, j1, j2, np.concatenate([x, y])))


def integrals_independence(x, y, alpha, beta):
    """sigma_2 / sigma_1 of the 4x2 gradient matrix of (J1, J2)."""

    j1, j2 = integral_observables_ay(alpha, beta)
    p = np.concatenate([np.asarray(x, dtype=complex), np.asarray(y, dtype=complex)])

    s = np.linalg.svd(np.stack([j1.gradient(p), j2.gradient(p)], axis=1), compute_uv=False)

    return float(s[1] / s[0]) if s[0] > 0 else 0.0


def _integrals(state):

    if state.map_id != "ay" or state.period != 1:
        return None

    x, y = state.x_sites[0], state.y_sites[0]

    return np.array(integrals_ay(*x.coords, *y.coords, x.params, y.params))


# =====================================================
# EVOLUTION
# =====================================================

@dataclass
class EvolutionReport:

    steps: int
    final_state: StaircaseState
    trajectory: list = field(default_factory=list)
    coeff_drift: list = field(default_factory=list)
    max_coeff_drift: float = 0.0
    j1_drift: Optional[float] = None
    j2_drift: Optional[float] = None
    drift_slope: float = 0.0

    def to_dict(self):

        return {
            "steps": self.steps,
            "max_coeff_drift": self.max_coeff_drift,
            "j1_drift": self.j1_drift,
            "j2_drift": self.j2_drift,
            "drift_slope": self.drift_slope,
            "stored_states": len(self.trajectory)
        }


def _peak(state):
    return max(float(np.max(np.abs(s.coords))) for s in state.x_sites + state.y_sites)


def transfer_evolve(state, steps, trajectory_cap=None, zetas=SAMPLED_ZETAS):
    """Iterate transfer_step, tracking the drift of the monodromy spectrum.

    Steps run under a condition limit on the refactorizations. A step whose drift exceeds
    DRIFT_TOL after the coordinates have grown by more than POLE_GROWTH raises PoleEncountered.
    """

    cap = TRAJECTORY_CAP if trajectory_cap is None else trajectory_cap

    spectrum0 = monodromy_spectrum(state, zetas)
    integrals0 = _integrals(state)
    scale0 = 1.0 + _peak(state)

    report = EvolutionReport(steps=0, final_state=state, trajectory=[state] if cap > 0 else [])

    if integrals0 is not None:
        report.j1_drift = 0.0
        report.j2_drift = 0.0

    current = state
    growth = 1.0

    for step in range(1, steps + 1):

        try:
            with condition_limit(LATTICE_MAX_CONDITION):
                current = transfer_step(current)
            spectrum = monodromy_spectrum(current, zetas)
        except YBError as e:
            get_logger().log("POLE_ENCOUNTERED", {"step": step, "map": state.map_id, "error": e.to_dict()})
            raise PoleEncountered(f"transfer step {step} left the admissible domain", step, {
                "cause": e.to_dict(),
                "max_coeff_drift": report.max_coeff_drift
            }) from e

        drift = spectrum_drift(spectrum0, spectrum)
        report.coeff_drift.append(drift)
        report.max_coeff_drift = max(report.max_coeff_drift, drift)

        step_drift = drift

        if integrals0 is not None:

            values = _integrals(current)
            rel = np.abs(values - integrals0) / (1.0 + np.abs(integrals0))

            report.j1_drift = max(report.j1_drift, float(rel[0]))
            report.j2_drift = max(report.j2_drift, float(rel[1]))
            step_drift = max(step_drift, float(np.max(rel)))

        growth = max(growth, (1.0 + _peak(current)) / scale0)

        if step_drift > DRIFT_TOL and growth > POLE_GROWTH:

            details = {"growth": growth, "drift": step_drift, "max_coeff_drift": report.max_coeff_drift}
            get_logger().log("POLE_ENCOUNTERED", {"step": step, "map": state.map_id, **details})

            raise PoleEncountered(f"transfer step {step} passed close to a pole", step, details)

        if len(report.trajectory) < cap:
            report.trajectory.append(current)

        report.steps = step

    report.final_state = current

    if len(report.coeff_drift) >= 2:
        report.drift_slope = float(np.polyfit(np.arange(1, len(report.coeff_drift) + 1), report.coeff_drift, 1)[0])

    get_logger().log("LATTICE_DRIFT", {"map": state.map_id, **report.to_dict()})

    return report
