"""Experiment configuration: one JSON file, every field overridable by a
CLI flag of the same dotted name (``--array.n 64``)."""

from __future__ import annotations

import dataclasses
import json
import math
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from undervolt.errmodel import DEFAULT_GRID
from undervolt.harness.errors import ConfigError
from undervolt.policies import PolicyKind


@dataclass
class DatasetConfig:
    images: Optional[str] = None  # None: the bundled held-out MNIST images
    labels: Optional[str] = None


@dataclass
class ArraySection:
    n: int = 256
    zero_skip: bool = False
    batch: int = 256


@dataclass
class PolicySection:
    kind: str = "tedrop"
    R: int = 1


@dataclass
class VoltageSection:
    grid: list = field(default_factory=lambda: list(DEFAULT_GRID))
    r_min: float = 0.65
    p_total: float = 0.1
    p_total_grid: list = field(
        default_factory=lambda: [0.0, 1e-4, 1e-3, 3e-3, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5]
    )


@dataclass
class ErrorsSection:
    profile: Optional[str] = None  # profile file; None: built-in curve with per-layer spread
    spread: float = 10.0
    flat_p: Optional[float] = None


@dataclass
class EnergySection:
    e_mac_nominal: float = 1.0
    razor_overhead: float = 0.0335
    zero_skip_cost: float = 0.0


@dataclass
class SplitsSection:
    validation: int = 256
    test: int = 1536
    seed: int = 0


@dataclass
class SweepSection:
    policies: list = field(default_factory=lambda: ["tep", "ted", "tedrop"])
    p_grid: list = field(default_factory=list)  # non-empty: also sweep flat per-MAC p


@dataclass
class SelectSection:
    max_loss: float = 0.01


@dataclass
class VariationSection:
    chips: int = 50
    sigma: float = 0.05
    samples: int = 256


@dataclass
class Config:
    model: Optional[str] = None  # None: the bundled reference MLP
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    array: ArraySection = field(default_factory=ArraySection)
    policy: PolicySection = field(default_factory=PolicySection)
    voltage: VoltageSection = field(default_factory=VoltageSection)
    errors: ErrorsSection = field(default_factory=ErrorsSection)
    energy: EnergySection = field(default_factory=EnergySection)
    splits: SplitsSection = field(default_factory=SplitsSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    select: SelectSection = field(default_factory=SelectSection)
    variation: VariationSection = field(default_factory=VariationSection)
    seed: int = 0
    workers: int = 1
    output_dir: str = "out"
    plots: bool = True

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _leaf_types(cls, prefix=""):
    hints = typing.get_type_hints(cls)
    for f in dataclasses.fields(cls):
        tp = hints[f.name]
        key = f"{prefix}{f.name}"
        if dataclasses.is_dataclass(tp):
            yield from _leaf_types(tp, key + ".")
        else:
            yield key, tp


LEAVES = dict(_leaf_types(Config))


def _coerce(key: str, tp, value):
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        if value is None or (isinstance(value, str) and value.lower() in ("none", "null", "")):
            return None
        tp = next(t for t in typing.get_args(tp) if t is not type(None))
    if tp is bool:
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("1", "true", "yes", "on"):
            return True
        if isinstance(value, str) and value.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{key}: expected a boolean, got {value!r}")
    if tp is int:
        if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
            raise ValueError(f"{key}: expected an integer, got {value!r}")
        return int(value)
    if tp is float:
        if isinstance(value, bool):
            raise ValueError(f"{key}: expected a number, got {value!r}")
        return float(value)
    if tp is list:
        if isinstance(value, str):
            text = value.strip()
            if text.startswith("["):
                value = json.loads(text)
            else:
                value = [v.strip() for v in text.split(",") if v.strip()]
                value = [_maybe_number(v) for v in value]
        if not isinstance(value, list):
            raise ValueError(f"{key}: expected a list, got {value!r}")
        return value
    if tp is str:
        return str(value)
    raise TypeError(f"unsupported config type for {key}")


def _maybe_number(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def _set(cfg: Config, key: str, value, problems: list):
    if key not in LEAVES:
        problems.append(f"unknown config field {key!r}")
        return
    try:
        value = _coerce(key, LEAVES[key], value)
    except (ValueError, json.JSONDecodeError) as exc:
        msg = str(exc)
        problems.append(msg if msg.startswith(f"{key}:") else f"{key}: {msg}")
        return
    *path, last = key.split(".")
    obj = cfg
    for part in path:
        obj = getattr(obj, part)
    setattr(obj, last, value)


def _flatten(doc: dict, prefix="") -> dict:
    out = {}
    for k, v in doc.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def build_config(path=None, overrides: dict | None = None) -> Config:
    """Defaults <- JSON file <- dotted overrides, then validate everything."""
    cfg = Config()
    problems: list[str] = []
    if path is not None:
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path}: invalid JSON ({exc})") from None
        for key, value in _flatten(doc).items():
            _set(cfg, key, value, problems)
    for key, value in (overrides or {}).items():
        _set(cfg, key, value, problems)
    problems += validate(cfg)
    if problems:
        raise ConfigError(problems)
    return cfg


def validate(cfg: Config) -> list[str]:
    problems = []
    if cfg.array.n < 1:
        problems.append("array.n must be >= 1")
    if cfg.array.batch < 1:
        problems.append("array.batch must be >= 1")
    try:
        kind = PolicyKind.parse(cfg.policy.kind)
        if kind is PolicyKind.TED and cfg.policy.R < 1:
            problems.append("policy.R must be >= 1 for TED")
    except ValueError as exc:
        problems.append(f"policy.kind: {exc}")
    for name in cfg.sweep.policies:
        try:
            PolicyKind.parse(name)
        except ValueError as exc:
            problems.append(f"sweep.policies: {exc}")
    grid = cfg.voltage.grid
    if not grid:
        problems.append("voltage.grid must not be empty")
    else:
        try:
            g = [float(r) for r in grid]
            cfg.voltage.grid = g
            if any(not 0 < r <= 1 for r in g):
                problems.append("voltage.grid ratios must lie in (0, 1]")
            if any(b >= a for a, b in zip(g, g[1:])):
                problems.append("voltage.grid must be sorted strictly descending")
            if not any(math.isclose(r, cfg.voltage.r_min) for r in g):
                problems.append(f"voltage.r_min={cfg.voltage.r_min} is not on voltage.grid")
        except (TypeError, ValueError):
            problems.append("voltage.grid must contain numbers")
    for name, values in (("voltage.p_total_grid", cfg.voltage.p_total_grid), ("sweep.p_grid", cfg.sweep.p_grid)):
        try:
            vals = [float(v) for v in values]
            if any(not 0 <= v <= 1 for v in vals) and name == "sweep.p_grid":
                problems.append(f"{name} values must lie in [0, 1]")
            if any(v < 0 for v in vals):
                problems.append(f"{name} values must be non-negative")
            setattr(cfg.voltage if name.startswith("voltage") else cfg.sweep, name.split(".")[1], vals)
        except (TypeError, ValueError):
            problems.append(f"{name} must contain numbers")
    if cfg.voltage.p_total < 0:
        problems.append("voltage.p_total must be non-negative")
    if cfg.errors.flat_p is not None and not 0 <= cfg.errors.flat_p <= 1:
        problems.append("errors.flat_p must lie in [0, 1]")
    if cfg.errors.spread < 1:
        problems.append("errors.spread must be >= 1")
    if cfg.errors.profile is not None and not Path(cfg.errors.profile).exists():
        problems.append(f"errors.profile file {cfg.errors.profile} not found")
    for name in ("e_mac_nominal", "razor_overhead", "zero_skip_cost"):
        if getattr(cfg.energy, name) < 0:
            problems.append(f"energy.{name} must be non-negative")
    if cfg.splits.validation < 1 or cfg.splits.test < 1:
        problems.append("splits.validation and splits.test must be >= 1")
    if not 0 <= cfg.select.max_loss <= 1:
        problems.append("select.max_loss must lie in [0, 1]")
    if cfg.variation.chips < 1:
        problems.append("variation.chips must be >= 1")
    if cfg.variation.sigma < 0:
        problems.append("variation.sigma must be non-negative")
    if cfg.variation.samples < 1:
        problems.append("variation.samples must be >= 1")
    if cfg.workers < 1:
        problems.append("workers must be >= 1")
    for name in ("model", "dataset.images", "dataset.labels"):
        obj = cfg
        for part in name.split("."):
            obj = getattr(obj, part)
        if obj is not None and not Path(obj).exists():
            problems.append(f"{name}: file {obj} not found")
    return problems


def dump_config(cfg: Config) -> dict:
    return cfg.to_dict()
