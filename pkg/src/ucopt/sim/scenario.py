"""Scenario, run-record and metric types, plus the Case I / Case II presets."""

from __future__ import annotations

import dataclasses
import enum
from dataclasses import dataclass, field

import numpy as np

from ..baselines import ConstCurrentSpec, PiGains
from ..critic import BasisSpec, ValueCritic, oracle_projection
from ..optctl import CostSpec
from ..plant import Direction, Perturbation, UcParams, gain
from .bus import BusMode, BusModel

__all__ = [
    "Controller",
    "EdotSource",
    "CriticConfig",
    "Scenario",
    "Metrics",
    "RunRecord",
    "scenario_to_dict",
    "comparable_fields",
    "validate_scenario",
    "case_one",
    "case_two",
]


class Controller(str, enum.Enum):
    CRITIC = "critic"
    PI_BASELINE = "pi_baseline"
    CONST_CURRENT = "const_current"


class EdotSource(str, enum.Enum):
    MODEL = "model"  # g*u + d from the plant model
    DIFFERENCE = "difference"  # (e_k - e_{k-1})/dt, measurement only


@dataclass(frozen=True)
class CriticConfig:
    n_neurons: int = 2
    scale: float = 1.0  # V
    alpha1: float = 2.0
    alpha2: float = 0.24
    warm_start: bool = False
    edot_source: EdotSource = EdotSource.MODEL

    def __post_init__(self):
        object.__setattr__(self, "edot_source", EdotSource(self.edot_source))

    def build(self, cost: CostSpec | None = None, g_val: float | None = None) -> ValueCritic:
        basis = BasisSpec(n_neurons=self.n_neurons, scale=self.scale)
        w0 = None
        if self.warm_start:
            w0, _ = oracle_projection(basis, cost, g_val)
        return ValueCritic(basis=basis, w_hat=w0, alpha1=self.alpha1, alpha2=self.alpha2)


@dataclass(frozen=True)
class Scenario:
    name: str
    controller: Controller = Controller.CRITIC
    direction: Direction = Direction.DISCHARGE
    soc_start: float = 30.0  # V
    soc_target: float = 29.0  # V
    duration: float = 5.0  # s
    dt: float = 1e-4  # s
    uc: UcParams = field(default_factory=UcParams)
    perturbation: Perturbation = field(default_factory=Perturbation)
    bus: BusModel = field(default_factory=BusModel)
    cost: CostSpec = field(default_factory=CostSpec)
    critic: CriticConfig = field(default_factory=CriticConfig)
    pi: PiGains = field(default_factory=PiGains)
    const_current: ConstCurrentSpec = field(default_factory=ConstCurrentSpec)
    tau: float = 1e-3  # s, converter current-tracking lag
    scheme: str = "rk4"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "controller", Controller(self.controller))
        object.__setattr__(self, "direction", Direction(self.direction))
        if self.const_current.soc_target != self.soc_target:
            object.__setattr__(
                self, "const_current",
                dataclasses.replace(self.const_current, soc_target=self.soc_target),
            )
        if not self.duration > 0:
            raise ValueError(f"duration must be > 0, got {self.duration}")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.soc_start == self.soc_target:
            raise ValueError("soc_start must differ from soc_target")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.duration / self.dt)))

    @property
    def g_val(self) -> float:
        return gain(self.uc, self.direction)


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    return obj


def scenario_to_dict(s: Scenario) -> dict:
    return _plain(s)


_CONTROLLER_ONLY = ("name", "controller", "critic", "pi", "const_current", "seed")


def comparable_fields(d: dict) -> dict:
    """Scenario dict without the fields that only configure the controller."""
    return {k: v for k, v in d.items() if k not in _CONTROLLER_ONLY}


def validate_scenario(s: Scenario) -> list[str]:
    """Every static problem with ``s`` that would make a run meaningless."""
    out = []
    n = s.duration / s.dt
    if abs(n - round(n)) > 1e-9 * max(1.0, n):
        out.append(f"duration_s {s.duration} is not a whole number of dt_s {s.dt} steps")
    if s.dt > s.tau:
        out.append(f"dt_s {s.dt} exceeds the interface lag tau_s {s.tau}; the lag would overshoot")
    if s.dt > s.bus.resonance_period / 10:
        out.append(
            f"dt_s {s.dt} does not resolve the bus filter resonance "
            f"(period {s.bus.resonance_period:.3g} s, need dt <= period/10)"
        )
    for label, v in (("soc_start_v", s.soc_start), ("soc_target_v", s.soc_target)):
        if not s.uc.v_min <= v <= s.uc.v_max:
            out.append(f"{label} {v} outside the UC window [{s.uc.v_min}, {s.uc.v_max}]")
    if s.scheme not in ("rk4", "euler"):
        out.append(f"scheme {s.scheme!r} is not one of rk4, euler")
    if s.controller is Controller.CRITIC:
        k = s.g_val**2 / s.cost.r_weight
        if not k > 1.0:
            out.append(
                f"ill-posed cost: g^2/r = {k:.6g} <= 1 (g = {s.g_val:.6g} 1/F); "
                f"r_weight must be below {s.g_val**2:.6g}"
            )
    return out


@dataclass
class Metrics:
    peak_bus_deviation: float  # V
    peak_bus_deviation_pct: float  # % of v_nominal
    current_overshoot: float  # A
    settling_time: float  # s, inf if never settled
    integrated_cost: float
    saturation_events: int
    voltage_violations: int
    peak_current: float  # A
    final_abs_error: float  # V

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


# lower is better for every metric
METRIC_NAMES = tuple(f.name for f in dataclasses.fields(Metrics))


@dataclass
class RunRecord:
    """Per-step series of one closed-loop run.

    Row ``k`` holds the state at ``t[k]`` and the inputs held over
    ``[t[k], t[k] + dt)``; ``*_final`` give the state after the last step.
    """

    scenario: Scenario
    t: np.ndarray
    u_c: np.ndarray
    e: np.ndarray
    u_commanded: np.ndarray
    u_actual: np.ndarray
    d: np.ndarray
    v_bus: np.ndarray
    theta: np.ndarray
    h_hat: np.ndarray
    v_e: np.ndarray
    i_inj: np.ndarray
    i_l: np.ndarray
    w_hat: np.ndarray | None
    u_c_final: float
    e_final: float
    t_final: float
    g_val: float
    v_bus_ref: float
    metrics: Metrics | None = None
    v_bus_final: float = float("nan")  # V
    w_hat_final: np.ndarray | None = None

    def __len__(self):
        return len(self.t)


def case_one(controller=Controller.CRITIC, **overrides) -> Scenario:
    """Islanded discharge of the 5.7 F UC from 30 V to 29 V on a 48 V bus."""
    controller = Controller(controller)
    kw = dict(
        name=f"case1_{controller.value}",
        controller=controller,
        direction=Direction.DISCHARGE,
        soc_start=30.0,
        soc_target=29.0,
        duration=5.0,
        dt=1e-4,
        bus=BusModel(mode=BusMode.ISLANDED),
    )
    kw.update(overrides)
    return Scenario(**kw)


def case_two(controller=Controller.CRITIC, **overrides) -> Scenario:
    """Case I settings on a grid-tied bus."""
    controller = Controller(controller)
    kw = dict(name=f"case2_{controller.value}", bus=BusModel(mode=BusMode.GRID_TIED))
    kw.update(overrides)
    return case_one(controller, **kw)

