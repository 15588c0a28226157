"""Reduced-order DC bus seen by the UC converter.

The UC converter injects its averaged output current ``i_inj`` into the
output-filter capacitor ``C_f``; the filter (``R_f``, ``L_f``) carries
current ``i_l`` to the point of common coupling (PCC). At the PCC the stiff
source (diesel generator or main grid, lumped as ``v_nominal`` behind
``source_resistance``) and a constant background load meet the filter::

    i_inj -> [C_f] --R_f--L_f--> PCC <--R_s-- v_nominal
                                  |
                                 load

    C_f dv_cf/dt = i_inj - i_l
    L_f di_l/dt  = v_cf - (R_f + R_s) i_l - v_nominal + R_s i_load
    v_bus        = v_nominal + R_s (i_l - i_load)

A small ``R_s`` (grid-tied) holds the PCC voltage tighter than a large one
(islanded).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

from ..errors import DivergenceError

__all__ = [
    "BusMode",
    "BusModel",
    "BusState",
    "DEFAULT_SOURCE_RESISTANCE",
    "interface_step",
    "bus_step",
    "bus_voltage",
    "quiescent_state",
    "injection_current",
]


class BusMode(str, enum.Enum):
    ISLANDED = "islanded"
    GRID_TIED = "grid_tied"


DEFAULT_SOURCE_RESISTANCE = {BusMode.ISLANDED: 0.5, BusMode.GRID_TIED: 0.05}  # ohm


@dataclass(frozen=True)
class BusModel:
    mode: BusMode = BusMode.ISLANDED
    v_nominal: float = 48.0  # V
    source_resistance: float | None = None  # ohm; None -> mode default
    c_f: float = 20e-6  # F
    r_f: float = 0.1  # ohm
    l_f: float = 2e-3  # H
    load_current: float = 2.0  # A, drawn at the PCC

    def __post_init__(self):
        object.__setattr__(self, "mode", BusMode(self.mode))
        if self.source_resistance is None:
            object.__setattr__(self, "source_resistance", DEFAULT_SOURCE_RESISTANCE[self.mode])
        if not self.v_nominal > 0:
            raise ValueError(f"v_nominal must be > 0, got {self.v_nominal}")
        if not (self.c_f > 0 and self.l_f > 0):
            raise ValueError(f"c_f and l_f must be > 0, got {self.c_f}, {self.l_f}")
        if not self.r_f >= 0:
            raise ValueError(f"r_f must be >= 0, got {self.r_f}")
        if not self.source_resistance >= 0:
            raise ValueError(f"source_resistance must be >= 0, got {self.source_resistance}")

    @property
    def resonance_period(self) -> float:
        return 2.0 * math.pi * math.sqrt(self.l_f * self.c_f)


class BusState(NamedTuple):
    v_cf: float  # V, converter-side filter capacitor
    i_l: float  # A, filter inductor current toward the PCC


def bus_voltage(bus: BusModel, state: BusState) -> float:
    return bus.v_nominal + bus.source_resistance * (state.i_l - bus.load_current)


def quiescent_state(bus: BusModel) -> BusState:
    """Equilibrium with no injection: no filter current, PCC sagged by the load."""
    return BusState(v_cf=bus.v_nominal - bus.source_resistance * bus.load_current, i_l=0.0)


def injection_current(u_c: float, i_out: float, v_cf: float) -> float:
    """Averaged converter output current for UC terminal current ``i_out``.

    Lossless power balance ``u_c i_out = v_cf i_inj``; ``i_out > 0`` means the
    UC is delivering energy.
    """
    return u_c * i_out / v_cf


def interface_step(commanded: float, i_actual: float, dt: float, tau: float) -> float:
    """First-order lag of the converter's current tracking."""
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")
    return i_actual + (dt / tau) * (commanded - i_actual)


@lru_cache(maxsize=64)
def _discretize(bus: BusModel, dt: float):
    r = bus.r_f + bus.source_resistance
    a = np.array([[0.0, -1.0 / bus.c_f], [1.0 / bus.l_f, -r / bus.l_f]])
    # inputs: [i_inj, constant drive (-v_nominal + R_s i_load)]
    b = np.array([[1.0 / bus.c_f, 0.0], [0.0, 1.0 / bus.l_f]])
    m = np.zeros((4, 4))
    m[:2, :2] = a
    m[:2, 2:] = b
    ed = expm(m * dt)
    ad, bd = ed[:2, :2], ed[:2, 2:]
    drive = -bus.v_nominal + bus.source_resistance * bus.load_current
    # plain floats keep the per-step update cheap
    return (
        float(ad[0, 0]), float(ad[0, 1]), float(ad[1, 0]), float(ad[1, 1]),
        float(bd[0, 0]), float(bd[1, 0]),
        float(bd[0, 1] * drive), float(bd[1, 1] * drive),
    )


def bus_step(bus: BusModel, i_injection: float, state: BusState, dt: float) -> BusState:
    """Advance the bus one step with ``i_injection`` held over the step.

    Exact for the linear RLC (zero-order-hold discretization), so any ``dt``
    is stable; resolving the ~1.3 ms filter resonance still needs
    ``dt`` well below ``bus.resonance_period``.
    """
    a00, a01, a10, a11, b0, b1, c0, c1 = _discretize(bus, dt)
    v, i = state
    v_next = a00 * v + a01 * i + b0 * i_injection + c0
    i_next = a10 * v + a11 * i + b1 * i_injection + c1
    if not (math.isfinite(v_next) and math.isfinite(i_next)):
        raise DivergenceError("non-finite bus state")
    return BusState(v_next, i_next)
