"""Flat ``key = value`` run configurations.

Lines are tokenised with python-dotenv's parser (comments, quoting and
line numbers come from there); keys are routed to the RunConfig section
that owns them and validated by the pydantic models.
"""

import io
import json
import math
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Tuple, Type, Union

from dotenv.parser import parse_stream
from pydantic import BaseModel, ValidationError

from ..analysis.units import angular_per_ms_to_hz, hz_to_gamma
from ..core.exceptions import ConfigError, OutOfRangeError, ParseError, UnknownKeyError
from ..core.models import (
    AnalysisParams,
    EnsembleParams,
    FitParams,
    ModelKind,
    NoiseParams,
    PhaseGrid,
    RunConfig,
    RunManifest,
    SweepSpec,
    ThreeLevelParams,
    TwoLevelParams,
    UnitParams,
)
from ..dynamics.three_level import omega_mw2_from_beta

logger = logging.getLogger(__name__)

SECTIONS: Dict[str, Type[BaseModel]] = {
    "analysis": AnalysisParams,
    "ensemble": EnsembleParams,
    "noise": NoiseParams,
    "sweep": SweepSpec,
    "phase": PhaseGrid,
    "fit": FitParams,
    "units": UnitParams,
}
MODEL_SECTIONS: Dict[ModelKind, Tuple[str, Type[BaseModel]]] = {
    ModelKind.THREE_LEVEL: ("three_level", ThreeLevelParams),
    ModelKind.TWO_LEVEL: ("two_level", TwoLevelParams),
}
LIST_KEYS = {"sweep_values", "sweep_paired_values", "potential_deltas"}
RANGE_ERRORS = {"greater_than", "greater_than_equal", "less_than", "less_than_equal"}
CONSISTENCY_RTOL = 1e-12


def _source_line(original) -> int:
    # a binding's original text starts with any blank lines before it
    source = original.string
    return original.line + source[:len(source) - len(source.lstrip())].count("\n")


def _tokenise(text: str) -> Tuple[Dict[str, str], Dict[str, int]]:
    values: Dict[str, str] = {}
    lines: Dict[str, int] = {}
    for binding in parse_stream(io.StringIO(text)):
        line = _source_line(binding.original)
        if binding.error:
            raise ParseError(f"cannot parse '{binding.original.string.strip()}'", line=line)
        if binding.key is None:
            continue
        if binding.value is None or binding.value.strip() == "":
            raise ParseError(f"missing value for '{binding.key}'", line=line)
        if binding.key in values:
            raise ParseError(f"duplicate key '{binding.key}' (first on line {lines[binding.key]})", line=line)
        values[binding.key] = binding.value.strip()
        lines[binding.key] = line
    return values, lines


def _coerce(key: str, raw: str, line: int) -> Any:
    if key not in LIST_KEYS:
        return raw
    items = [item for item in raw.replace(",", " ").split() if item]
    try:
        return [float(item) for item in items]
    except ValueError:
        raise ParseError(f"'{key}' expects a comma-separated list of numbers", line=line)


def _validate(model: Type[BaseModel], data: Dict[str, Any], lines: Dict[str, int]) -> BaseModel:
    try:
        return model.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        key = str(err["loc"][0]) if err["loc"] else ""
        message = f"{key}: {err['msg']}" if key else err["msg"]
        if err["type"] in RANGE_ERRORS:
            raise OutOfRangeError(f"line {lines.get(key, '?')}: {message}") from e
        raise ParseError(message, line=lines.get(key)) from e


def _check_consistent(name: str, given: float, derived: float, line: int):
    if not math.isclose(given, derived, rel_tol=CONSISTENCY_RTOL, abs_tol=0.0):
        raise ParseError(f"'{name}' = {given} conflicts with the value {derived} implied by unit keys",
                         line=line)


def parse_config(text: str) -> RunConfig:
    """Resolve a flat key = value document into a RunConfig with defaults."""
    values, lines = _tokenise(text)
    if "model" not in values:
        raise ParseError("'model' is required (three_level or two_level)")
    try:
        model = ModelKind(values.pop("model"))
    except ValueError:
        raise ParseError("model must be three_level or two_level", line=lines["model"])

    model_field, model_cls = MODEL_SECTIONS[model]
    owners = {name: section for section, cls in SECTIONS.items() for name in cls.model_fields}
    buckets: Dict[str, Dict[str, Any]] = {section: {} for section in SECTIONS}
    params: Dict[str, Any] = {}

    for key, raw in values.items():
        value = _coerce(key, raw, lines[key])
        if key in model_cls.model_fields:
            params[key] = value
        elif key in owners:
            buckets[owners[key]][key] = value
        else:
            raise UnknownKeyError(f"line {lines[key]}: unknown key '{key}' for model {model.value}")

    units = _validate(UnitParams, buckets["units"], lines)
    lab_frequencies = {"delta_f_hz": units.delta_f_hz}
    if units.omega_mod_per_ms is not None:
        lab_frequencies["omega_mod_per_ms"] = angular_per_ms_to_hz(units.omega_mod_per_ms)
    for key, f_hz in lab_frequencies.items():
        if f_hz is None:
            continue
        derived = hz_to_gamma(f_hz, units.gamma_hz)
        if "delta_f" in params:
            _check_consistent("delta_f", float(params["delta_f"]), derived, lines.get("delta_f", lines[key]))
        params["delta_f"] = derived
    if units.beta_db is not None:
        if model != ModelKind.THREE_LEVEL:
            raise UnknownKeyError(f"line {lines['beta_db']}: beta_db only applies to three_level")
        mw1 = float(params.get("Omega_MW1", ThreeLevelParams.model_fields["Omega_MW1"].default))
        derived = omega_mw2_from_beta(mw1, units.beta_db)
        if "Omega_MW2" in params:
            _check_consistent("Omega_MW2", float(params["Omega_MW2"]), derived, lines["Omega_MW2"])
        params["Omega_MW2"] = derived

    resolved: Dict[str, Any] = {"model": model, model_field: _validate(model_cls, params, lines)}
    for section, cls in SECTIONS.items():
        resolved[section] = units if section == "units" else _validate(cls, buckets[section], lines)

    try:
        config = RunConfig(**resolved)
    except ValidationError as e:
        raise ConfigError(str(e)) from e
    logger.debug(f"Parsed {model.value} config with {len(values) + 1} keys")
    return config


def _format(value: Any) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, list):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_config(config: RunConfig) -> str:
    """Fully resolved document; parse_config(emit_config(c)) == c."""
    model_field, _ = MODEL_SECTIONS[config.model]
    blocks: List[Tuple[str, BaseModel]] = [(model_field, config.params)]
    blocks += [(section, getattr(config, section)) for section in SECTIONS]

    out = [f"model = {config.model.value}"]
    for section, values in blocks:
        out.append(f"\n# {section}")
        for key in type(values).model_fields:
            value = getattr(values, key)
            if value is None or (isinstance(value, list) and not value):
                continue
            out.append(f"{key} = {_format(value)}")
    return "\n".join(out) + "\n"


def load_config_file(path: Union[str, Path]) -> Tuple[RunConfig, str]:
    """Read a config document or a run manifest; returns the config and its source text."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e

    if text.lstrip().startswith("{"):
        try:
            manifest = RunManifest.model_validate(json.loads(text))
        except (ValueError, ValidationError) as e:
            raise ParseError(f"{path} is not a valid run manifest: {e}") from e
        logger.info(f"Rerunning '{manifest.command}' from manifest {path}")
        text = manifest.config_text

    return parse_config(text), text
