"""YAML scenario configuration: schema, unit-suffixed keys, validation.

A document has an optional ``defaults`` mapping and a ``scenarios`` list.
Each scenario is deep-merged over the defaults, so shared settings are
written once::

    defaults:
      cost: {q_weight: 20.0, r_weight: 0.01, d_max_vps: 0.0}
      bus: {mode: islanded}
    scenarios:
      - name: case1_critic
        controller: critic
        soc_start_v: 30.0
        soc_target_v: 29.0

Every key carrying a physical quantity ends in its unit. Unknown keys are
errors, not warnings.
"""

from __future__ import annotations

import copy
import math
from pathlib import Path

import yaml

from .baselines import ConstCurrentSpec, PiGains
from .errors import ConfigError, ConfigParseError
from .optctl import CostSpec
from .plant import Direction, Perturbation, PerturbationKind, UcParams
from .sim.bus import BusMode, BusModel
from .sim.scenario import Controller, CriticConfig, EdotSource, Scenario, validate_scenario

__all__ = ["load_document", "parse_scenarios", "load_scenarios", "validate_document", "validate_file"]


def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _any(x):
    return True


# key -> (field name, type, check, description of the check)
_POS = (_pos, "> 0")
_NONNEG = (_nonneg, ">= 0")
_ANY = (_any, "")

TOP_LEVEL = {
    "name": ("name", str, *_ANY),
    "controller": ("controller", Controller, *_ANY),
    "direction": ("direction", Direction, *_ANY),
    "soc_start_v": ("soc_start", float, *_POS),
    "soc_target_v": ("soc_target", float, *_POS),
    "duration_s": ("duration", float, *_POS),
    "dt_s": ("dt", float, *_POS),
    "tau_s": ("tau", float, *_POS),
    "scheme": ("scheme", str, *_ANY),
    "seed": ("seed", int, *_NONNEG),
}

SECTIONS = {
    "uc": (UcParams, {
        "capacitance_f": ("capacitance_uc", float, *_POS),
        "v_min_v": ("v_min", float, *_NONNEG),
        "v_max_v": ("v_max", float, *_POS),
        "i_max_a": ("i_max", float, *_POS),
    }),
    "cost": (CostSpec, {
        "q_weight": ("q_weight", float, *_POS),
        "r_weight": ("r_weight", float, *_POS),
        "d_max_vps": ("d_max", float, *_NONNEG),
    }),
    "critic": (CriticConfig, {
        "n_neurons": ("n_neurons", int, lambda n: n >= 1, ">= 1"),
        "scale_v": ("scale", float, *_POS),
        "alpha1": ("alpha1", float, *_POS),
        "alpha2": ("alpha2", float, *_POS),
        "warm_start": ("warm_start", bool, *_ANY),
        "edot_source": ("edot_source", EdotSource, *_ANY),
    }),
    "pi": (PiGains, {
        "kp_v_a_per_v": ("kp_v", float, *_NONNEG),
        "kp_i": ("kp_i", float, *_NONNEG),
        "ki_i_per_s": ("ki_i", float, *_NONNEG),
        "i_ref_max_a": ("i_ref_max", float, *_POS),
        "i_out_max_a": ("i_out_max", float, *_POS),
    }),
    "const_current": (ConstCurrentSpec, {
        "i_const_a": ("i_const", float, *_POS),
        "deadband_v": ("deadband", float, *_NONNEG),
    }),
    "bus": (BusModel, {
        "mode": ("mode", BusMode, *_ANY),
        "v_nominal_v": ("v_nominal", float, *_POS),
        "source_resistance_ohm": ("source_resistance", float, *_NONNEG),
        "c_f_f": ("c_f", float, *_POS),
        "r_f_ohm": ("r_f", float, *_NONNEG),
        "l_f_h": ("l_f", float, *_POS),
        "load_current_a": ("load_current", float, *_ANY),
    }),
    "perturbation": (Perturbation, {
        "kind": ("kind", PerturbationKind, *_ANY),
        "d_max_vps": ("d_max", float, *_NONNEG),
        "frequency_hz": ("frequency", float, *_POS),
        "seed": ("seed", int, *_NONNEG),
    }),
}


def load_document(path) -> dict:
    """Read and parse a config file (``FileNotFoundError`` if absent)."""
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigParseError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigParseError(f"{path}: top level must be a mapping")
    return doc


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _coerce(value, typ, where, problems):
    try:
        if typ is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError
            value = float(value)
            if not math.isfinite(value):
                raise TypeError
            return value
        if typ is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise TypeError
            return value
        if typ is bool:
            if not isinstance(value, bool):
                raise TypeError
            return value
        if typ is str:
            if not isinstance(value, str):
                raise TypeError
            return value
        return typ(value)  # enums
    except (TypeError, ValueError):
        if isinstance(typ, type) and issubclass(typ, (Controller, Direction, BusMode, PerturbationKind, EdotSource)):
            allowed = ", ".join(m.value for m in typ)
            problems.append(f"{where}: {value!r} is not one of {allowed}")
        else:
            problems.append(f"{where}: expected {typ.__name__}, got {value!r}")
        return None


def _fields(raw, schema, where, problems):
    if not isinstance(raw, dict):
        problems.append(f"{where}: expected a mapping")
        return {}
    kw = {}
    for key, value in raw.items():
        if key not in schema:
            problems.append(f"{where}.{key}: unknown key")
            continue
        field, typ, check, desc = schema[key]
        v = _coerce(value, typ, f"{where}.{key}", problems)
        if v is None:
            continue
        if not check(v):
            problems.append(f"{where}.{key}: must be {desc}, got {v!r}")
            continue
        kw[field] = v
    return kw


def _build_scenario(raw: dict, where: str, problems: list):
    if not isinstance(raw, dict):
        problems.append(f"{where}: expected a mapping")
        return None
    start = len(problems)
    top = {k: v for k, v in raw.items() if k not in SECTIONS}
    kw = _fields(top, TOP_LEVEL, where, problems)
    if "name" not in kw:
        problems.append(f"{where}: missing required key 'name'")
    else:
        where = f"scenario {kw['name']!r}"
    for section, (cls, schema) in SECTIONS.items():
        if section not in raw:
            continue
        skw = _fields(raw[section], schema, f"{where}.{section}", problems)
        if section == "uc" and "v_min" in skw and "v_max" in skw and not skw["v_min"] < skw["v_max"]:
            problems.append(f"{where}.uc: v_min_v must be below v_max_v")
            continue
        try:
            kw[section] = cls(**skw)
        except (TypeError, ValueError) as exc:
            problems.append(f"{where}.{section}: {exc}")
    if "perturbation" not in raw or "seed" not in (raw.get("perturbation") or {}):
        # the scenario seed drives the disturbance unless one is given explicitly
        if "seed" in kw and isinstance(kw.get("perturbation", Perturbation()), Perturbation):
            pert = kw.get("perturbation", Perturbation())
            kw["perturbation"] = Perturbation(pert.kind, pert.d_max, pert.frequency, kw["seed"])
    if len(problems) > start:
        return None
    try:
        s = Scenario(**kw)
    except (TypeError, ValueError) as exc:
        problems.append(f"{where}: {exc}")
        return None
    problems.extend(f"{where}: {p}" for p in validate_scenario(s))
    return s


def parse_scenarios(doc: dict) -> tuple[list[Scenario], list[str]]:
    """Build every scenario of a parsed document; also return all violations."""
    problems = []
    unknown = sorted(set(doc) - {"defaults", "scenarios"})
    problems.extend(f"{k}: unknown top-level key" for k in unknown)
    defaults = doc.get("defaults") or {}
    if not isinstance(defaults, dict):
        problems.append("defaults: expected a mapping")
        defaults = {}
    raw_list = doc.get("scenarios")
    if not isinstance(raw_list, list) or not raw_list:
        problems.append("scenarios: expected a non-empty list")
        return [], problems
    scenarios, seen = [], set()
    for i, raw in enumerate(raw_list):
        merged = _merge(defaults, raw) if isinstance(raw, dict) else raw
        s = _build_scenario(merged, f"scenarios[{i}]", problems)
        if s is None:
            continue
        if s.name in seen:
            problems.append(f"scenario {s.name!r}: duplicate name")
            continue
        seen.add(s.name)
        scenarios.append(s)
    return scenarios, problems


def load_scenarios(path) -> dict[str, Scenario]:
    """Scenarios of a config file by name; raises ``ConfigError`` listing every violation."""
    scenarios, problems = parse_scenarios(load_document(path))
    if problems:
        raise ConfigError(f"{path}: {len(problems)} violation(s)", problems)
    return {s.name: s for s in scenarios}


def validate_document(doc: dict) -> list[str]:
    return parse_scenarios(doc)[1]


def validate_file(path) -> list[str]:
    return validate_document(load_document(path))
