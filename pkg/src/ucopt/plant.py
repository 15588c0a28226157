"""Ultra-capacitor plant: ideal capacitor dynamics in error coordinates.

The UC terminal voltage ``u_c`` obeys ``du_c/dt = g*i + d`` with
``g = +1/C_uc`` in discharge mode and ``-1/C_uc`` in charge mode, ``i`` the
controller's current and ``d`` a bounded unmodelled perturbation. The tracking
error is ``e = u_c - u_ref``, so ``de/dt`` has the same right-hand side.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DivergenceError, RejectedInputError

__all__ = [
    "Direction",
    "PerturbationKind",
    "UcParams",
    "PlantState",
    "Perturbation",
    "gain",
    "uc_ideal_rate",
    "error_rate",
    "perturbation_sample",
    "integrate_step",
    "initial_state",
    "soc_fraction",
]


class Direction(str, enum.Enum):
    CHARGE = "charge"
    DISCHARGE = "discharge"


class PerturbationKind(str, enum.Enum):
    NONE = "none"
    SINUSOID = "sinusoid"
    FILTERED_NOISE = "filtered_noise"


@dataclass(frozen=True)
class UcParams:
    capacitance_uc: float = 5.7  # F
    v_min: float = 10.0  # V
    v_max: float = 32.4  # V
    i_max: float = 20.0  # A, symmetric

    def __post_init__(self):
        if not self.capacitance_uc > 0:
            raise ValueError(f"capacitance_uc must be > 0, got {self.capacitance_uc}")
        if not self.v_min < self.v_max:
            raise ValueError(f"need v_min < v_max, got [{self.v_min}, {self.v_max}]")
        if not self.i_max > 0:
            raise ValueError(f"i_max must be > 0, got {self.i_max}")


@dataclass(frozen=True)
class PlantState:
    u_c: float  # V, terminal voltage
    e: float  # V, u_c - reference
    t: float = 0.0  # s


@dataclass(frozen=True)
class Perturbation:
    """Bounded disturbance ``d(t)`` with ``|d(t)| <= d_max``.

    For ``sinusoid`` the signal is ``d_max*sin(2*pi*frequency*t)``. For
    ``filtered_noise`` it is Gaussian noise drawn on knots spaced
    ``1/frequency`` apart and joined by cosine interpolation, which acts as a
    low-pass filter of bandwidth ``~frequency``; ``seed`` fixes the knots.
    """

    kind: PerturbationKind = PerturbationKind.NONE
    d_max: float = 0.0  # V/s
    frequency: float = 1.0  # Hz
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", PerturbationKind(self.kind))
        if not self.d_max >= 0:
            raise ValueError(f"d_max must be >= 0, got {self.d_max}")
        if self.kind is not PerturbationKind.NONE and not self.frequency > 0:
            raise ValueError(f"frequency must be > 0, got {self.frequency}")


def gain(params: UcParams, direction: Direction) -> float:
    """Input gain ``g`` of the error dynamics (1/F)."""
    if direction == Direction.DISCHARGE:
        return 1.0 / params.capacitance_uc
    if direction == Direction.CHARGE:
        return -1.0 / params.capacitance_uc
    raise ValueError(f"unknown direction {direction!r}")


def uc_ideal_rate(params: UcParams, direction: Direction, i_c: float) -> float:
    """Terminal-voltage rate of the ideal UC for current ``i_c``."""
    if abs(i_c) > params.i_max:
        raise RejectedInputError(
            f"|i_c| = {abs(i_c):.6g} A exceeds the current limit {params.i_max:.6g} A"
        )
    return gain(params, direction) * i_c


def error_rate(g_val: float, u: float, d: float) -> float:
    return g_val * u + d


# Noise knots are cached so repeated queries of the same run stay cheap.
@lru_cache(maxsize=65536)
def _noise_knot(seed: int, index: int) -> float:
    return float(np.random.default_rng([seed, index]).standard_normal())


def perturbation_sample(p: Perturbation, t: float) -> float:
    """Disturbance value at time ``t`` (a pure function of ``p`` and ``t``)."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    if p.kind is PerturbationKind.NONE or p.d_max == 0.0:
        return 0.0
    if p.kind is PerturbationKind.SINUSOID:
        d = p.d_max * math.sin(2.0 * math.pi * p.frequency * t)
    else:
        s = t * p.frequency
        k = math.floor(s)
        w = 0.5 - 0.5 * math.cos(math.pi * (s - k))
        z = (1.0 - w) * _noise_knot(p.seed, k) + w * _noise_knot(p.seed, k + 1)
        # half-bound scaling keeps clipping rare (|z| > 2 about 5% of knots)
        d = 0.5 * p.d_max * z
    return min(p.d_max, max(-p.d_max, d))


def initial_state(u_c0: float, reference: float) -> PlantState:
    return PlantState(u_c=u_c0, e=u_c0 - reference, t=0.0)


def integrate_step(
    state: PlantState,
    controller_output: float,
    p: Perturbation,
    dt: float,
    *,
    params: UcParams,
    direction: Direction,
    reference: float,
    scheme: str = "rk4",
    d: float | None = None,
) -> PlantState:
    """Advance the plant one step of length ``dt``.

    Control and perturbation are held constant over the step (zero-order
    hold); ``d`` overrides the sample at ``state.t`` when the caller already
    has it. The error is recomputed from the new voltage, never integrated
    separately.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if d is None:
        d = perturbation_sample(p, state.t)
    rate_u = uc_ideal_rate(params, direction, controller_output)

    def f(_u_c):
        # the ideal UC has no voltage dependence; kept as a function of state
        # so that both schemes share the same right-hand side
        return rate_u + d

    u_c = state.u_c
    if scheme == "euler":
        u_next = u_c + dt * f(u_c)
    elif scheme == "rk4":
        k1 = f(u_c)
        k2 = f(u_c + 0.5 * dt * k1)
        k3 = f(u_c + 0.5 * dt * k2)
        k4 = f(u_c + dt * k3)
        u_next = u_c + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    else:
        raise ValueError(f"unknown integration scheme {scheme!r}")

    t_next = state.t + dt
    if not math.isfinite(u_next):
        raise DivergenceError("non-finite UC voltage", t_next)
    return PlantState(u_c=u_next, e=u_next - reference, t=t_next)


def soc_fraction(params: UcParams, u_c: float) -> float:
    """Reporting-only SOC: position of ``u_c`` in the ``[v_min, v_max]`` window."""
    return (u_c - params.v_min) / (params.v_max - params.v_min)

