"""Comparison controllers: constant current with hard cutoff, and two-loop P/PI.

Both work in "positive raises the UC voltage" current units; the simulator
maps them onto the plant input with the sign of the plant gain.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "PiGains",
    "ConstCurrentSpec",
    "const_current_step",
    "pi_outer_step",
    "pi_inner_step",
]


@dataclass(frozen=True)
class PiGains:
    kp_v: float = 10.0  # A/V, outer voltage loop (P only)
    kp_i: float = 0.5  # inner current loop, proportional
    ki_i: float = 500.0  # 1/s, inner current loop, integral
    i_ref_max: float = 10.0  # A, outer-loop reference limit
    i_out_max: float = 20.0  # A, inner-loop output limit

    def __post_init__(self):
        for name in ("kp_v", "kp_i", "ki_i"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not self.i_ref_max > 0:
            raise ValueError(f"i_ref_max must be > 0, got {self.i_ref_max}")
        if not self.i_out_max > 0:
            raise ValueError(f"i_out_max must be > 0, got {self.i_out_max}")

    @property
    def integ_max(self) -> float:
        """Integrator clamp (A*s): the state that alone saturates the output."""
        return self.i_out_max / self.ki_i if self.ki_i > 0 else 0.0


@dataclass(frozen=True)
class ConstCurrentSpec:
    i_const: float = 5.0  # A
    soc_target: float = 29.0  # V
    deadband: float = 0.01  # V

    def __post_init__(self):
        if not self.i_const > 0:
            raise ValueError(f"i_const must be > 0, got {self.i_const}")
        if not self.deadband >= 0:
            raise ValueError(f"deadband must be >= 0, got {self.deadband}")


def const_current_step(spec: ConstCurrentSpec, u_c: float) -> float:
    """Full current toward the target until inside the deadband, then exactly 0."""
    err = u_c - spec.soc_target
    if abs(err) <= spec.deadband:
        return 0.0
    return -spec.i_const if err > 0 else spec.i_const


def pi_outer_step(gains: PiGains, e: float) -> float:
    i_ref = -gains.kp_v * e
    return min(gains.i_ref_max, max(-gains.i_ref_max, i_ref))


def pi_inner_step(gains: PiGains, i_ref: float, i_meas: float, integ: float, dt: float):
    """One PI update with conditional-integration anti-windup.

    Returns ``(command, integ')``. The integrator only accepts the new error
    when the resulting output is inside the limit, and is clamped to
    ``gains.integ_max`` regardless.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    err = i_ref - i_meas
    lim = gains.integ_max
    trial = min(lim, max(-lim, integ + err * dt))
    out = gains.kp_i * err + gains.ki_i * trial
    if abs(out) > gains.i_out_max:
        trial = min(lim, max(-lim, integ))
        out = gains.kp_i * err + gains.ki_i * trial
        out = min(gains.i_out_max, max(-gains.i_out_max, out))
    return out, trial
