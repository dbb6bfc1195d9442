"""Configuration for the CLI pipeline and the HTTP service.

Config files are JSON with two optional sections, "pipeline" and "service".
Unknown keys anywhere are rejected.  Environment variables override file
values with the prefix INKLABEL_<SECTION>_<KEY>, e.g. INKLABEL_SERVICE_PORT
or INKLABEL_PIPELINE_EPSILON; values are parsed as JSON when possible and
taken as strings otherwise.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from .binarize import ThresholdParams
from .errors import ConfigError
from .morphology import Close, Step, StructuringElement, recipe_from_json, recipe_to_json

ENV_PREFIX = "INKLABEL_"


def _default_recipe() -> list[Step]:
    return [Close(StructuringElement("rect", 15, 3))]


@dataclass
class PipelineConfig:
    threshold: ThresholdParams = field(default_factory=ThresholdParams)
    invert: bool = False
    recipe: list[Step] = field(default_factory=_default_recipe)
    epsilon: float = 1.0
    labels: list[dict] = field(default_factory=list)
    label_map: dict[str, object] = field(default_factory=dict)
    output_dir: str = "."

    def to_json(self) -> dict:
        return {
            "threshold": self.threshold.to_json(),
            "invert": self.invert,
            "recipe": recipe_to_json(self.recipe),
            "epsilon": self.epsilon,
            "labels": self.labels,
            "label_map": self.label_map,
            "output_dir": self.output_dir,
        }


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8077
    max_upload_mb: int = 64
    session_timeout_s: float = 3600.0
    worker_threads: int = 8
    snapshot_dir: Optional[str] = None
    snapshot_every: int = 1

    def to_json(self) -> dict:
        return {
            "host": self.host,
            "port": self.port,
            "max_upload_mb": self.max_upload_mb,
            "session_timeout_s": self.session_timeout_s,
            "worker_threads": self.worker_threads,
            "snapshot_dir": self.snapshot_dir,
            "snapshot_every": self.snapshot_every,
        }


@dataclass
class AppConfig:
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    service: ServiceConfig = field(default_factory=ServiceConfig)

    def to_json(self) -> dict:
        return {"pipeline": self.pipeline.to_json(), "service": self.service.to_json()}


def _expect(cond: bool, msg: str):
    if not cond:
        raise ConfigError(msg)


def _parse_labels(raw) -> list[dict]:
    _expect(isinstance(raw, list), "pipeline.labels must be a list")
    out = []
    for i, item in enumerate(raw):
        _expect(isinstance(item, dict), f"pipeline.labels[{i}] must be an object")
        unknown = set(item) - {"name", "color"}
        _expect(not unknown, f"pipeline.labels[{i}]: unknown keys {sorted(unknown)}")
        _expect(isinstance(item.get("name"), str) and item["name"].strip() != "",
                f"pipeline.labels[{i}] needs a non-empty name")
        entry = {"name": item["name"]}
        if "color" in item:
            _expect(isinstance(item["color"], str), f"pipeline.labels[{i}].color must be a #RRGGBB string")
            entry["color"] = item["color"]
        out.append(entry)
    return out


def _parse_label_map(raw) -> dict[str, object]:
    _expect(isinstance(raw, dict), "pipeline.label_map must be an object")
    out: dict[str, object] = {}
    for key, val in raw.items():
        _expect(key == "*" or key.isdigit(),
                f"pipeline.label_map key {key!r} must be a unit ordinal or '*'")
        _expect(isinstance(val, (str, int)),
                f"pipeline.label_map[{key!r}] must be a label name or index")
        out[key] = val
    return out


def _parse_pipeline(raw: dict) -> PipelineConfig:
    _expect(isinstance(raw, dict), "pipeline section must be an object")
    allowed = {"threshold", "invert", "recipe", "epsilon", "labels", "label_map", "output_dir"}
    unknown = set(raw) - allowed
    _expect(not unknown, f"pipeline: unknown keys {sorted(unknown)}")
    cfg = PipelineConfig()
    if "threshold" in raw:
        cfg.threshold = ThresholdParams.from_json(raw["threshold"])
    if "invert" in raw:
        _expect(isinstance(raw["invert"], bool), "pipeline.invert must be a boolean")
        cfg.invert = raw["invert"]
    if "recipe" in raw:
        cfg.recipe = recipe_from_json(raw["recipe"])
    if "epsilon" in raw:
        _expect(isinstance(raw["epsilon"], (int, float)) and raw["epsilon"] >= 0,
                "pipeline.epsilon must be a number >= 0")
        cfg.epsilon = float(raw["epsilon"])
    if "labels" in raw:
        cfg.labels = _parse_labels(raw["labels"])
    if "label_map" in raw:
        cfg.label_map = _parse_label_map(raw["label_map"])
    if "output_dir" in raw:
        _expect(isinstance(raw["output_dir"], str), "pipeline.output_dir must be a string")
        cfg.output_dir = raw["output_dir"]
    return cfg


def _parse_service(raw: dict) -> ServiceConfig:
    _expect(isinstance(raw, dict), "service section must be an object")
    allowed = {"host", "port", "max_upload_mb", "session_timeout_s",
               "worker_threads", "snapshot_dir", "snapshot_every"}
    unknown = set(raw) - allowed
    _expect(not unknown, f"service: unknown keys {sorted(unknown)}")
    cfg = ServiceConfig()
    if "host" in raw:
        _expect(isinstance(raw["host"], str) and raw["host"], "service.host must be a string")
        cfg.host = raw["host"]
    if "port" in raw:
        _expect(isinstance(raw["port"], int) and 1 <= raw["port"] <= 65535,
                "service.port must be an integer in 1..65535")
        cfg.port = raw["port"]
    if "max_upload_mb" in raw:
        _expect(isinstance(raw["max_upload_mb"], int) and raw["max_upload_mb"] >= 1,
                "service.max_upload_mb must be an integer >= 1")
        cfg.max_upload_mb = raw["max_upload_mb"]
    if "session_timeout_s" in raw:
        _expect(isinstance(raw["session_timeout_s"], (int, float)) and raw["session_timeout_s"] > 0,
                "service.session_timeout_s must be a positive number")
        cfg.session_timeout_s = float(raw["session_timeout_s"])
    if "worker_threads" in raw:
        _expect(isinstance(raw["worker_threads"], int) and raw["worker_threads"] >= 1,
                "service.worker_threads must be an integer >= 1")
        cfg.worker_threads = raw["worker_threads"]
    if "snapshot_dir" in raw:
        _expect(raw["snapshot_dir"] is None or isinstance(raw["snapshot_dir"], str),
                "service.snapshot_dir must be a string or null")
        cfg.snapshot_dir = raw["snapshot_dir"]
    if "snapshot_every" in raw:
        _expect(isinstance(raw["snapshot_every"], int) and raw["snapshot_every"] >= 1,
                "service.snapshot_every must be an integer >= 1")
        cfg.snapshot_every = raw["snapshot_every"]
    return cfg


def _env_overrides(env: Mapping[str, str]) -> dict:
    """Collect INKLABEL_<SECTION>_<KEY> variables into section dicts."""
    out: dict[str, dict] = {}
    for var, value in sorted(env.items()):
        if not var.startswith(ENV_PREFIX):
            continue
        rest = var[len(ENV_PREFIX):]
        section, _, key = rest.partition("_")
        section = section.lower()
        key = key.lower()
        if section not in ("pipeline", "service") or not key:
            raise ConfigError(f"unrecognized environment override {var}")
        try:
            parsed = json.loads(value)
        except ValueError:
            parsed = value
        out.setdefault(section, {})[key] = parsed
    return out


def load_config(path=None, env: Optional[Mapping[str, str]] = None) -> AppConfig:
    """Merge defaults, an optional JSON file, and environment overrides."""
    raw: dict = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            raw = json.loads(p.read_text(encoding="utf-8"))
        except ValueError as exc:
            raise ConfigError(f"{p}: not valid JSON: {exc}") from exc
        _expect(isinstance(raw, dict), f"{p}: top level must be an object")
        unknown = set(raw) - {"pipeline", "service"}
        _expect(not unknown, f"{p}: unknown sections {sorted(unknown)}")
    overrides = _env_overrides(env if env is not None else os.environ)
    merged = {
        "pipeline": {**raw.get("pipeline", {}), **overrides.get("pipeline", {})},
        "service": {**raw.get("service", {}), **overrides.get("service", {})},
    }
    return AppConfig(
        pipeline=_parse_pipeline(merged["pipeline"]),
        service=_parse_service(merged["service"]),
    )
