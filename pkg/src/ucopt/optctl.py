"""Robust optimal control of the scalar UC error dynamics.

With stage cost ``q*e**2 + r*u**2`` and the perturbation-dominating term
``gamma = v_e**2/4 + d_max**2``, the Hamiltonian is minimized by
``u* = -g*v_e/(2r)``. Substituting back gives a scalar HJB in the value
gradient ``v_e`` alone which, for ``D = 0``, has the closed-form root used here
as ground truth for the critic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IllPosedSpecError, InconclusiveHorizonError

__all__ = [
    "CostSpec",
    "CostBound",
    "stage_cost",
    "gamma_bound",
    "hamiltonian",
    "optimal_law",
    "hjb_residual",
    "check_well_posed",
    "scalar_hjb_oracle",
    "oracle_value",
    "cost_bound_check",
    "stage_cost_integrate",
    "modified_cost_integrate",
]


@dataclass(frozen=True)
class CostSpec:
    q_weight: float = 20.0  # weight on e**2
    r_weight: float = 0.01  # weight on u**2
    d_max: float = 0.0  # V/s, perturbation bound assumed by the designer

    def __post_init__(self):
        if not self.q_weight > 0:
            raise ValueError(f"q_weight must be > 0, got {self.q_weight}")
        if not self.r_weight > 0:
            raise ValueError(f"r_weight must be > 0, got {self.r_weight}")
        if not self.d_max >= 0:
            raise ValueError(f"d_max must be >= 0, got {self.d_max}")


def stage_cost(spec: CostSpec, e, u):
    return spec.q_weight * e * e + spec.r_weight * u * u


def gamma_bound(spec: CostSpec, v_e):
    return 0.25 * v_e * v_e + spec.d_max**2


def hamiltonian(spec: CostSpec, e, u, v_e, g_val, d=0.0):
    return stage_cost(spec, e, u) + v_e * (g_val * u + d) + gamma_bound(spec, v_e)


def optimal_law(spec: CostSpec, g_val, v_e):
    return -0.5 / spec.r_weight * g_val * v_e


def hjb_residual(spec: CostSpec, e, v_e, g_val, d=0.0):
    """HJB left-hand side after substituting the optimal law.

    Zero exactly when ``v_e`` solves the HJB at ``(e, d)``. The unknown
    perturbation enters through ``d``; pass ``d=0`` for the design condition
    and the actual sample when auditing a trajectory.
    """
    return (
        spec.q_weight * e * e
        + 0.25 * v_e * v_e
        + spec.d_max**2
        + v_e * d
        - 0.25 * v_e * v_e * g_val * g_val / spec.r_weight
    )


def check_well_posed(spec: CostSpec, g_val: float) -> float:
    """Return ``g**2/r`` or raise if the scalar HJB has no real root."""
    k = g_val * g_val / spec.r_weight
    if not k > 1.0:
        raise IllPosedSpecError(
            f"g^2/r = {k:.6g} <= 1: the HJB has no real solution; "
            f"reduce r_weight below g^2 = {g_val * g_val:.6g}"
        )
    return k


def scalar_hjb_oracle(spec: CostSpec, e, g_val):
    """Exact value gradient ``v_e*`` solving the HJB with ``D = 0``.

    Odd in ``e`` and of the same sign, so the implied value function is
    positive definite. Works elementwise on arrays.
    """
    k = check_well_posed(spec, g_val)
    mag = 2.0 * np.sqrt((spec.q_weight * np.square(e) + spec.d_max**2) / (k - 1.0))
    out = np.sign(e) * mag
    return float(out) if np.ndim(out) == 0 else out


def oracle_value(spec: CostSpec, e0: float, g_val: float, panels: int = 10_000) -> float:
    """Optimal value ``V*(e0)``: trapezoid quadrature of the oracle gradient from 0."""
    if e0 == 0.0:
        return 0.0
    s = np.linspace(0.0, e0, panels + 1)
    v = scalar_hjb_oracle(spec, s, g_val)
    # v jumps at s=0 when d_max > 0; use the one-sided limit there
    v[0] = math.copysign(2.0 * spec.d_max / math.sqrt(g_val * g_val / spec.r_weight - 1.0), e0)
    return float(np.trapezoid(v, s))


def _intervals(trajectory):
    """Per-interval (e_start, e_end, u_held, dt) arrays for a run record.

    Controls are held over each interval; the error moves linearly, so the
    endpoint pair is enough for trapezoid quadrature.
    """
    e = np.asarray(trajectory.e, dtype=float)
    u = np.asarray(trajectory.u_actual, dtype=float)
    t = np.asarray(trajectory.t, dtype=float)
    e_end = np.append(e[1:], trajectory.e_final)
    t_end = np.append(t[1:], trajectory.t_final)
    return e, e_end, u, t_end - t


def stage_cost_integrate(spec: CostSpec, trajectory) -> float:
    """Accumulated stage cost over a run (trapezoid in time)."""
    ea, eb, u, h = _intervals(trajectory)
    fa = stage_cost(spec, ea, u)
    fb = stage_cost(spec, eb, u)
    return float(np.sum(0.5 * h * (fa + fb)))


def modified_cost_integrate(spec: CostSpec, trajectory, v_e=None) -> float:
    """Accumulated ``r(e,u) + gamma(e)`` over a run.

    ``v_e`` defaults to the value-gradient series carried by the trajectory
    (the critic's estimate, or the oracle's for baseline runs). It is held
    across each interval like the control.
    """
    v = np.asarray(trajectory.v_e if v_e is None else v_e, dtype=float)
    ea, eb, u, h = _intervals(trajectory)
    gam = gamma_bound(spec, v)
    fa = stage_cost(spec, ea, u) + gam
    fb = stage_cost(spec, eb, u) + gam
    return float(np.sum(0.5 * h * (fa + fb)))


@dataclass(frozen=True)
class CostBound:
    j_actual: float
    j_bound: float
    holds: bool


def cost_bound_check(
    spec: CostSpec, trajectory, oracle_v0: float | None = None, rtol: float = 0.01
) -> CostBound:
    """Compare a run's accrued cost against the guaranteed bound.

    The bound is ``V*(e0) + integral (u - u*)' R (u - u*) dt`` with ``u*`` the
    oracle law along the visited errors. ``holds`` allows ``rtol`` of the bound
    for quadrature error. ``trajectory`` needs ``t, e, u_actual`` series, the
    scalars ``e_final, t_final`` and the plant gain ``g_val``.
    """
    g_val = trajectory.g_val
    e = np.asarray(trajectory.e, dtype=float)
    e0 = float(e[0])
    if abs(trajectory.e_final) > 0.01 * abs(e0):
        raise InconclusiveHorizonError(
            f"|e| = {abs(trajectory.e_final):.3g} V at the end of the run is above "
            f"1% of |e0| = {abs(e0):.3g} V; extend the horizon"
        )
    if oracle_v0 is None:
        oracle_v0 = oracle_value(spec, e0, g_val)

    ea, eb, u, h = _intervals(trajectory)
    j_actual = float(np.sum(0.5 * h * (stage_cost(spec, ea, u) + stage_cost(spec, eb, u))))
    da = u - optimal_law(spec, g_val, scalar_hjb_oracle(spec, ea, g_val))
    db = u - optimal_law(spec, g_val, scalar_hjb_oracle(spec, eb, g_val))
    excess = float(np.sum(0.5 * h * spec.r_weight * (da * da + db * db)))
    j_bound = oracle_v0 + excess
    return CostBound(j_actual=j_actual, j_bound=j_bound, holds=j_actual <= j_bound * (1.0 + rtol))
