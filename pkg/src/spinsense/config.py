"""Run configuration: one structured file plus dotted-path overrides."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import DomainError
from .inference import FieldGrid
from .protocol import Schedule
from .scaling import TimeBudget
from .spin import MAX_SITES, ChainSpec


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ChainConfig(_Section):
    N: int = Field(5, ge=1, le=MAX_SITES)
    J: float = Field(1.0, gt=0)
    B: float = 0.1  # true field, units of J


class ScheduleConfig(_Section):
    taus: Optional[list[float]] = None  # explicit intervals (units 1/J); overrides the rule below
    n_seq: int = Field(5, ge=1, le=16)
    start: float = Field(6.0, gt=0)
    step: float = Field(2.0, ge=0)

    @field_validator("taus")
    @classmethod
    def _positive(cls, v):
        if v is not None and (not v or any(t <= 0 for t in v)):
            raise ValueError("taus must be a non-empty list of positive intervals")
        return v


class InferenceConfig(_Section):
    lo: float = 0.0  # grid interval, units of J
    hi: float = 0.2
    resolution: int = Field(201, ge=3)
    repeats: int = Field(100, ge=1)
    M_sam: int = Field(1000, ge=1)
    average: Literal["deltaB", "deltaB2"] = "deltaB"


class BudgetConfig(_Section):
    init_ratio: float = Field(100.0, gt=0)
    meas_ratio: float = Field(10.0, gt=0)


class SweepConfig(_Section):
    n_seqs: list[int] = [1, 4, 5, 6, 10]
    B_values: list[float] = [0.04, 0.06, 0.08, 0.1, 0.12, 0.14, 0.16, 0.18, 0.2]
    JT_values: list[float] = [2e5, 4e5, 8e5, 1.6e6, 3.2e6, 6.4e6]
    b_window: tuple[float, float] = (0.04, 0.2)
    t_window: Optional[tuple[float, float]] = None
    compare: bool = True

    @field_validator("n_seqs")
    @classmethod
    def _nseq(cls, v):
        if not v or any(n < 1 for n in v):
            raise ValueError("n_seqs must be a non-empty list of integers >= 1")
        return v

    @field_validator("B_values", "JT_values")
    @classmethod
    def _pos(cls, v):
        if not v or any(x <= 0 for x in v):
            raise ValueError("values must be a non-empty list of positive numbers")
        return v


class TraceConfig(_Section):
    t_max: float = Field(60.0, gt=0)
    dt: float = Field(0.1, gt=0)
    measure: bool = False  # also emit a trace with the schedule's measurements


class SyntheticConfig(_Section):
    A: float = Field(1e-3, gt=0)
    delta: float = -1.0
    alpha: float = 0.5
    noise: float = Field(0.0, ge=0)


class RunConfig(_Section):
    chain: ChainConfig = ChainConfig()
    schedule: ScheduleConfig = ScheduleConfig()
    inference: InferenceConfig = InferenceConfig()
    budget: BudgetConfig = BudgetConfig()
    sweep: SweepConfig = SweepConfig()
    trace: TraceConfig = TraceConfig()
    synthetic: SyntheticConfig = SyntheticConfig()
    seed: int = 0
    workers: int = Field(1, ge=1)
    out_dir: str = "runs"
    use_synthetic: bool = False

    @model_validator(mode="after")
    def _module_preconditions(self):
        try:
            self.chain_spec()
        except DomainError as exc:
            raise ValueError(f"chain: {exc}") from exc
        try:
            self.field_grid()
        except DomainError as exc:
            raise ValueError(f"inference: {exc}") from exc
        try:
            self.schedule_for(self.schedule.n_seq)
        except DomainError as exc:
            raise ValueError(f"schedule: {exc}") from exc
        return self

    def chain_spec(self) -> ChainSpec:
        J = self.chain.J
        return ChainSpec(self.chain.N, J, self.chain.B * J)

    def field_grid(self) -> FieldGrid:
        J = self.chain.J
        return FieldGrid(self.inference.lo * J, self.inference.hi * J, self.inference.resolution)

    def schedule_for(self, n_seq: int | None = None) -> Schedule:
        """Explicit taus when given, else the arithmetic rule with n_seq intervals (in 1/J)."""
        s = self.schedule
        J = self.chain.J
        if s.taus is not None and (n_seq is None or n_seq == len(s.taus)):
            return Schedule(tuple(t / J for t in s.taus))
        n = n_seq or s.n_seq
        return Schedule.arithmetic(n, s.start / J, s.step / J)

    def budget_for(self, schedule: Schedule) -> TimeBudget:
        return TimeBudget.for_schedule(schedule, self.budget.init_ratio, self.budget.meas_ratio)

    def config_hash(self) -> str:
        """Hash of everything that affects results (not workers or output location)."""
        doc = self.model_dump(mode="json", exclude={"workers", "out_dir"})
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


def _set_path(doc: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = doc
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ValueError(f"{dotted}: {k} is not a section")
    node[keys[-1]] = value


def load_config(path: str | Path | None = None, overrides: list[str] | None = None, **flags) -> RunConfig:
    """Build a RunConfig from a YAML/JSON file, `key.path=value` overrides, and explicit flags."""
    doc: dict = {}
    if path is not None:
        doc = yaml.safe_load(Path(path).read_text()) or {}
        if not isinstance(doc, dict):
            raise ValueError(f"{path}: top level must be a mapping")
    for item in overrides or []:
        if "=" not in item:
            raise ValueError(f"override {item!r} is not of the form key.path=value")
        k, v = item.split("=", 1)
        _set_path(doc, k.strip(), yaml.safe_load(v))
    for k, v in flags.items():
        if v is not None:
            _set_path(doc, k, v)
    return RunConfig.model_validate(doc)
