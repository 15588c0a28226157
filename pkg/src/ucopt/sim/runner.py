"""Closed-loop execution: controller -> interface lag -> UC plant + DC bus."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..baselines import const_current_step, pi_inner_step, pi_outer_step
from ..critic import critic_step
from ..errors import ConfigError, DivergenceError, IllPosedSpecError, MismatchedScenarioError
from ..optctl import scalar_hjb_oracle, stage_cost_integrate
from ..plant import PlantState, integrate_step, perturbation_sample
from .bus import bus_step, bus_voltage, injection_current, interface_step, quiescent_state
from .scenario import (
    METRIC_NAMES,
    Controller,
    EdotSource,
    Metrics,
    RunRecord,
    Scenario,
    comparable_fields,
    scenario_to_dict,
    validate_scenario,
)

log = logging.getLogger(__name__)

__all__ = ["run_scenario", "run_many", "compute_metrics", "compare", "compare_dicts", "ComparisonReport"]

# |e| below this fraction of |e0| counts as settled
SETTLE_FRACTION = 0.02


def _make_controller(s: Scenario):
    """Return ``step(e, e_prev, u_prev, d) -> (u_cmd, theta, h_hat, v_e)`` and the critic."""
    g = s.g_val
    sign = 1.0 if g > 0 else -1.0

    if s.controller is Controller.CRITIC:
        critic = s.critic.build(s.cost, g)
        cost, dt = s.cost, s.dt
        from_model = s.critic.edot_source is EdotSource.MODEL

        def step(e, e_prev, u_prev, d):
            if from_model:
                e_dot = g * u_prev + d
            else:
                e_dot = 0.0 if e_prev is None else (e - e_prev) / dt
            u, lg = critic_step(critic, cost, g, e, e_dot, dt)
            return u, lg.theta, lg.h_hat, lg.v_e_hat

        return step, critic

    if s.controller is Controller.PI_BASELINE:
        gains, dt = s.pi, s.dt
        integ = 0.0

        def step(e, e_prev, u_prev, d):
            nonlocal integ
            i_ref = pi_outer_step(gains, e)
            out, integ = pi_inner_step(gains, i_ref, sign * u_prev, integ, dt)
            return sign * out, 0, math.nan, math.nan

        return step, None

    spec = s.const_current
    ref = s.soc_target

    def step(e, e_prev, u_prev, d):
        return sign * const_current_step(spec, e + ref), 0, math.nan, math.nan

    return step, None


def run_scenario(s: Scenario) -> RunRecord:
    """Simulate ``s`` for ``s.n_steps`` steps and return the full record.

    Deterministic: the same scenario always yields bit-identical series.
    """
    problems = validate_scenario(s)
    if problems:
        if s.controller is Controller.CRITIC and any(p.startswith("ill-posed") for p in problems):
            raise IllPosedSpecError("; ".join(problems))
        raise ConfigError(f"scenario {s.name!r} is invalid", problems)

    n, dt, g = s.n_steps, s.dt, s.g_val
    uc, bus, pert = s.uc, s.bus, s.perturbation
    i_max = uc.i_max
    step, critic = _make_controller(s)

    t = np.arange(n) * dt
    cols = {k: np.empty(n) for k in ("u_c", "e", "u_cmd", "u_act", "d", "v_bus", "h", "v_e", "i_inj", "i_l")}
    theta = np.zeros(n, dtype=np.int8)
    w_hist = np.empty((n, critic.basis.n_neurons)) if critic is not None else None

    state = PlantState(u_c=s.soc_start, e=s.soc_start - s.soc_target, t=0.0)
    bstate = quiescent_state(bus)
    # converter terminal current per unit plant input, sign-free of the mode
    out_sign = -1.0 if g > 0 else 1.0
    u_act = 0.0
    e_prev = None
    saturations = 0
    violations = 0

    for k in range(n):
        tk = t[k]
        e = state.e
        d = perturbation_sample(pert, tk)
        if critic is not None:
            w_hist[k] = critic.w_hat
        try:
            u_cmd, th, h, v_e = step(e, e_prev, u_act, d)
        except DivergenceError as exc:
            raise type(exc)(f"scenario {s.name!r} diverged: {exc}", tk) from exc
        if abs(u_cmd) > i_max:
            u_cmd = math.copysign(i_max, u_cmd)
            saturations += 1
        if not (uc.v_min <= state.u_c <= uc.v_max):
            violations += 1
        u_act = interface_step(u_cmd, u_act, dt, s.tau)
        i_inj = injection_current(state.u_c, out_sign * u_act, bstate.v_cf)

        cols["u_c"][k] = state.u_c
        cols["e"][k] = e
        cols["u_cmd"][k] = u_cmd
        cols["u_act"][k] = u_act
        cols["d"][k] = d
        cols["v_bus"][k] = bus_voltage(bus, bstate)
        cols["h"][k] = h
        cols["v_e"][k] = v_e
        cols["i_inj"][k] = i_inj
        cols["i_l"][k] = bstate.i_l
        theta[k] = th

        e_prev = e
        try:
            state = integrate_step(
                state, u_act, pert, dt,
                params=uc, direction=s.direction, reference=s.soc_target, scheme=s.scheme, d=d,
            )
            bstate = bus_step(bus, i_inj, bstate, dt)
        except DivergenceError as exc:
            raise DivergenceError(f"scenario {s.name!r} diverged: {exc}", tk) from exc

    if s.controller is not Controller.CRITIC and g * g / s.cost.r_weight > 1.0:
        cols["v_e"] = np.asarray(scalar_hjb_oracle(s.cost, cols["e"], g), dtype=float)

    rec = RunRecord(
        scenario=s,
        t=t,
        u_c=cols["u_c"],
        e=cols["e"],
        u_commanded=cols["u_cmd"],
        u_actual=cols["u_act"],
        d=cols["d"],
        v_bus=cols["v_bus"],
        theta=theta,
        h_hat=cols["h"],
        v_e=cols["v_e"],
        i_inj=cols["i_inj"],
        i_l=cols["i_l"],
        w_hat=w_hist,
        u_c_final=state.u_c,
        e_final=state.e,
        t_final=n * dt,
        g_val=g,
        v_bus_ref=bus_voltage(bus, quiescent_state(bus)),
        v_bus_final=bus_voltage(bus, bstate),
        w_hat_final=None if critic is None else critic.w_hat.copy(),
    )
    rec.metrics = compute_metrics(rec, saturations, violations)
    return rec


def settling_time(t, e, e_final, t_final, fraction=SETTLE_FRACTION) -> float:
    """Time after which ``|e|`` stays below ``fraction*|e0|`` to the end of the run."""
    thr = fraction * abs(e[0])
    if abs(e_final) >= thr and thr > 0:
        return math.inf
    above = np.nonzero(np.abs(e) >= thr)[0]
    if above.size == 0:
        return 0.0
    last = above[-1]
    return float(t[last + 1]) if last + 1 < len(t) else float(t_final)


def compute_metrics(rec: RunRecord, saturation_events=0, voltage_violations=0) -> Metrics:
    s = rec.scenario
    dev = float(np.max(np.abs(rec.v_bus - rec.v_bus_ref)))
    overshoot = float(max(0.0, np.max(np.abs(rec.i_l) - np.abs(rec.i_inj))))
    return Metrics(
        peak_bus_deviation=dev,
        peak_bus_deviation_pct=100.0 * dev / s.bus.v_nominal,
        current_overshoot=overshoot,
        settling_time=settling_time(rec.t, rec.e, rec.e_final, rec.t_final),
        integrated_cost=stage_cost_integrate(s.cost, rec),
        saturation_events=int(saturation_events),
        voltage_violations=int(voltage_violations),
        peak_current=float(np.max(np.abs(rec.u_actual))),
        final_abs_error=abs(rec.e_final),
    )


def run_many(scenarios, jobs: int = 1) -> list[RunRecord]:
    """Run independent scenarios, optionally in worker processes.

    Results come back ordered by scenario name whatever the completion order.
    """
    ordered = sorted(scenarios, key=lambda s: s.name)
    if jobs <= 1 or len(ordered) <= 1:
        return [run_scenario(s) for s in ordered]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run_scenario, ordered))


@dataclass
class ComparisonReport:
    name_a: str
    name_b: str
    metrics_a: dict
    metrics_b: dict
    deltas: dict  # b - a
    winners: dict  # metric -> "a" | "b" | "tie"

    def as_dict(self) -> dict:
        return {
            "a": self.name_a,
            "b": self.name_b,
            "metrics_a": self.metrics_a,
            "metrics_b": self.metrics_b,
            "deltas": self.deltas,
            "winners": self.winners,
        }

    def table(self) -> str:
        head = f"{'metric':<24} {self.name_a:>18} {self.name_b:>18} {'delta(b-a)':>14}  winner"
        lines = [head, "-" * len(head)]
        for m in self.deltas:
            win = {"a": self.name_a, "b": self.name_b}.get(self.winners[m], "tie")
            lines.append(
                f"{m:<24} {_fmt(self.metrics_a[m]):>18} {_fmt(self.metrics_b[m]):>18} "
                f"{_fmt(self.deltas[m]):>14}  {win}"
            )
        return "\n".join(lines)


def _fmt(x):
    return f"{x:.6g}" if isinstance(x, float) else str(x)


def _delta(a, b):
    if a is None or b is None:
        return None
    if math.isinf(a) and math.isinf(b) and a == b:
        return 0.0
    return b - a


def compare_dicts(name_a, metrics_a, scen_a, name_b, metrics_b, scen_b) -> ComparisonReport:
    """Compare two metric dicts whose scenarios match apart from the controller."""
    ka, kb = comparable_fields(scen_a), comparable_fields(scen_b)
    if ka != kb:
        diff = sorted(k for k in set(ka) | set(kb) if ka.get(k) != kb.get(k))
        raise MismatchedScenarioError(f"scenarios differ beyond the controller in: {', '.join(diff)}")
    deltas, winners = {}, {}
    for m in METRIC_NAMES:
        a, b = metrics_a[m], metrics_b[m]
        deltas[m] = _delta(a, b)
        if a == b or deltas[m] is None:
            winners[m] = "tie"
        else:
            winners[m] = "a" if a < b else "b"
    return ComparisonReport(name_a, name_b, dict(metrics_a), dict(metrics_b), deltas, winners)


def compare(a: RunRecord, b: RunRecord) -> ComparisonReport:
    """Side-by-side metrics of two runs of the same scenario; lower wins."""
    return compare_dicts(
        a.scenario.name, a.metrics.as_dict(), scenario_to_dict(a.scenario),
        b.scenario.name, b.metrics.as_dict(), scenario_to_dict(b.scenario),
    )
