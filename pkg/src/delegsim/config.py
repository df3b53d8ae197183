"""Scenario configuration: TOML loading, deep-merge onto defaults, validation.

Validation is strict: unknown keys are errors, and every violated
invariant is reported with its dotted location in one
:class:`~delegsim.errors.ConfigValidationError`.
"""

from __future__ import annotations

import copy
import hashlib
import json
import sys
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

StrategyName = Literal["alpha", "gamma", "beta", "epsilon", "delta"]
STRATEGY_NAMES = ("alpha", "gamma", "beta", "epsilon", "delta")
Unit = Field(ge=0.0, le=1.0)


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class DynamicsBlock(_Block):
    mode: Literal["deterministic", "stochastic"]
    temperature: float = Field(gt=0.0)
    learning_rate: float = Field(ge=0.0, le=1.0)
    effort_scale: float = Field(gt=0.0)
    ewma_decay: float = Field(gt=0.0, le=1.0)
    history_capacity: int = Field(ge=1)
    allowed_moves: List[Literal["toward_alpha", "stay", "toward_delta"]] = Field(min_length=1)


class ReliabilityBlock(_Block):
    process: Literal["iid", "markov"]
    reliable_rate: float = Unit
    stay_reliable: float = Unit
    stay_error_prone: float = Unit


class UserTypeBlock(_Block):
    weights: Tuple[float, float, float]
    persistence: int = Field(ge=1)
    trust_hi: float = Unit
    trust_lo: float = Unit
    error_hi: float = Unit
    error_lo: float = Unit
    burden_hi: float = Unit
    burden_lo: float = Unit

    @field_validator("weights")
    @classmethod
    def _weights(cls, v):
        if any(w < 0 for w in v):
            raise ValueError("weights must be >= 0")
        if abs(sum(v) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 within 1e-12, got {sum(v)!r}")
        return v

    @model_validator(mode="after")
    def _ordered(self):
        bad = [f"{a}_lo > {a}_hi" for a in ("trust", "error", "burden")
               if getattr(self, f"{a}_lo") > getattr(self, f"{a}_hi")]
        if bad:
            raise ValueError("; ".join(bad))
        return self


class UserTypesBlock(_Block):
    reflective: UserTypeBlock
    throughput: UserTypeBlock
    assurance: UserTypeBlock


class DisclosureMix(_Block):
    disclose: float = Field(default=0.0, ge=0.0)
    conceal: float = Field(default=0.0, ge=0.0)
    misdirect: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def _sum(self):
        if abs(self.disclose + self.conceal + self.misdirect - 1.0) > 1e-9:
            raise ValueError("disclosure shares must sum to 1")
        return self


class CohortBlock(_Block):
    user_type: Literal["reflective", "throughput", "assurance"]
    share: float = Field(default=1.0, gt=0.0, le=1.0)
    initial_strategy: StrategyName = "beta"
    initial_signal: Tuple[float, float, float] = (0.5, 0.0, 0.5)
    disclosure: DisclosureMix = DisclosureMix(disclose=1.0)

    @field_validator("initial_signal")
    @classmethod
    def _signal(cls, v):
        if any(not (0.0 <= x <= 1.0) for x in v):
            raise ValueError("signal components must lie in [0, 1]")
        return v


class OutcomeCellBlock(_Block):
    mean: Tuple[float, float, float]
    noise: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    @model_validator(mode="after")
    def _ranges(self):
        q, e, g = self.mean
        if not (0 <= q <= 1 and e >= 0 and 0 <= g <= 1):
            raise ValueError("mean must be (quality in [0,1], effort >= 0, gain in [0,1])")
        if any(w < 0 for w in self.noise):
            raise ValueError("noise widths must be >= 0")
        return self


class OutcomeRow(_Block):
    reliable: OutcomeCellBlock
    error_prone: OutcomeCellBlock


class OutcomesBlock(_Block):
    alpha: OutcomeRow
    gamma: OutcomeRow
    beta: OutcomeRow
    epsilon: OutcomeRow
    delta: OutcomeRow


class PerStrategyUnit(_Block):
    alpha: float = Unit
    gamma: float = Unit
    beta: float = Unit
    epsilon: float = Unit
    delta: float = Unit


class ValenceBlock(_Block):
    alpha: float = Field(ge=-1.0, le=1.0)
    gamma: float = Field(ge=-1.0, le=1.0)
    beta: float = Field(ge=-1.0, le=1.0)
    epsilon: float = Field(ge=-1.0, le=1.0)
    delta: float = Field(ge=-1.0, le=1.0)


class GraphBlock(_Block):
    kind: Literal["none", "complete", "ring", "watts_strogatz", "edgelist"]
    degree: int = Field(ge=2)
    rewire: float = Unit
    weight: float
    path: str
    influence_threshold: float = Field(ge=0.0)
    misdirect_discount: float = Unit
    misdirect_claim: StrategyName
    disclosure_following: bool
    disclosure_flip_threshold: float = Unit
    valence: ValenceBlock

    @field_validator("degree")
    @classmethod
    def _even(cls, v):
        if v % 2:
            raise ValueError("degree must be even")
        return v


class PdBlock(_Block):
    T: float
    R: float
    P: float
    S: float

    @model_validator(mode="after")
    def _order(self):
        if not (self.T > self.R > self.P > self.S):
            raise ValueError("prisoner's dilemma payoffs must satisfy T > R > P > S")
        return self


class CoordinationBlock(_Block):
    A: float
    B: float
    C: float
    D: float

    @model_validator(mode="after")
    def _order(self):
        if not (self.A > self.B and self.A > self.D and self.B > self.C):
            raise ValueError("coordination payoffs must satisfy A > B, A > D, B > C")
        return self


class GamesBlock(_Block):
    cooperative: List[StrategyName]
    pd: PdBlock
    coordination: CoordinationBlock


class InstitutionBlock(_Block):
    disclosure_required: bool
    provenance_required: bool
    audit_probability: float = Unit
    penalty_defect: float = Field(ge=0.0)
    reward_cooperate: float = Field(ge=0.0)
    mandate: Literal["", "alpha", "gamma", "beta", "epsilon", "delta"]
    sanction_salience: float = Unit
    provenance_compliance: float = Unit
    alignment_strength: float = Unit
    disclosure_compliance: float = Unit


class LockInBlock(_Block):
    base_quality: float = Field(gt=0.0)
    process_cost: float = Field(gt=0.0)
    coordination_gain: float = Field(ge=0.0)
    critical_threshold: float = Field(gt=0.0)
    decay_rate: float = Field(gt=0.0)
    switch_cost: float = Field(ge=0.0)
    externality: float = Field(ge=0.0)
    adoption_scale: float = Field(gt=0.0)
    window: int = Field(ge=2)


class RegimesBlock(_Block):
    window: int = Field(ge=2)
    entropy_threshold: float = Field(gt=0.0)


class ClassificationBlock(_Block):
    lockin_delta_share: float = Unit
    stratified_min: float = Unit
    stratified_max: float = Unit
    provenance_delta_share: float = Unit
    provenance_disclosure: float = Unit
    stationary_window: int = Field(ge=1)
    stationary_tol: float = Field(ge=0.0)


class MacroBlock(_Block):
    alpha: Tuple[float, float, float]
    gamma: Tuple[float, float, float]
    beta: Tuple[float, float, float]
    epsilon: Tuple[float, float, float]
    delta: Tuple[float, float, float]

    @model_validator(mode="after")
    def _unit(self):
        for s in STRATEGY_NAMES:
            if any(not (0.0 <= x <= 1.0) for x in getattr(self, s)):
                raise ValueError(f"macro coefficients for {s} must lie in [0, 1]")
        return self


class OutputBlock(_Block):
    dir: str
    events: bool


class ScenarioConfig(_Block):
    name: str
    seed: int = Field(ge=0)
    horizon: int = Field(ge=1)
    population: int = Field(ge=1)
    thinning: int = Field(ge=1)
    dynamics: DynamicsBlock
    reliability: ReliabilityBlock
    user_types: UserTypesBlock
    cohorts: List[CohortBlock] = Field(min_length=1)
    outcomes: OutcomesBlock
    detection: PerStrategyUnit
    graph: GraphBlock
    games: GamesBlock
    institution: InstitutionBlock
    lockin: LockInBlock
    regimes: RegimesBlock
    classification: ClassificationBlock
    macro: MacroBlock
    output: OutputBlock


def _cross_checks(cfg: ScenarioConfig, base_dir: Optional[Path]) -> List[Tuple[str, str]]:
    problems = []
    total = sum(c.share for c in cfg.cohorts)
    if abs(total - 1.0) > 1e-9:
        problems.append(("cohorts", f"cohort shares must sum to 1, got {total!r}"))
    for name in ("reflective", "throughput", "assurance"):
        ut = getattr(cfg.user_types, name)
        if cfg.dynamics.history_capacity < ut.persistence - 1:
            problems.append((f"dynamics.history_capacity",
                             f"capacity {cfg.dynamics.history_capacity} cannot hold the "
                             f"persistence window of user_types.{name} ({ut.persistence})"))
    if cfg.graph.kind == "edgelist":
        if not cfg.graph.path:
            problems.append(("graph.path", "edgelist graphs need a path"))
        else:
            p = Path(cfg.graph.path)
            if base_dir is not None and not p.is_absolute():
                p = base_dir / p
            if not p.exists():
                problems.append(("graph.path", f"edge list file {str(p)!r} not found"))
    if cfg.graph.kind in ("ring", "watts_strogatz") and cfg.graph.degree >= cfg.population:
        problems.append(("graph.degree", "degree must be smaller than the population"))
    c = cfg.classification
    if c.stratified_min > c.stratified_max:
        problems.append(("classification.stratified_min", "must not exceed stratified_max"))
    return problems


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _read_toml_text(text: str, origin: str) -> Dict[str, Any]:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigValidationError([(origin, f"TOML syntax error: {exc}")]) from None


def default_raw() -> Dict[str, Any]:
    text = resources.files("delegsim.presets").joinpath("defaults.toml").read_text()
    return _read_toml_text(text, "defaults.toml")


def preset_raw(name: str) -> Dict[str, Any]:
    """Override table of a shipped preset (not yet merged onto defaults)."""
    res = resources.files("delegsim.presets").joinpath(f"{name}.toml")
    if not res.is_file():
        raise ConfigValidationError([("preset", f"no shipped preset named {name!r}")])
    return _read_toml_text(res.read_text(), f"{name}.toml")


def list_presets() -> List[str]:
    return sorted(p.name[:-5] for p in resources.files("delegsim.presets").iterdir()
                  if p.name.endswith(".toml") and p.name != "defaults.toml")


def _loc(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (("." if out else "") + str(p))
    return out


def validate(raw: Dict[str, Any], base_dir: Optional[Path] = None) -> ScenarioConfig:
    """Merge ``raw`` onto the defaults and validate it."""
    merged = deep_merge(default_raw(), raw)
    try:
        cfg = ScenarioConfig.model_validate(merged)
    except ValidationError as exc:
        problems = []
        for err in exc.errors():
            msg = err["msg"]
            if err["type"] == "extra_forbidden":
                msg = "unknown key"
            problems.append((_loc(err["loc"]), msg))
        raise ConfigValidationError(problems) from None
    problems = _cross_checks(cfg, base_dir)
    if problems:
        raise ConfigValidationError(problems)
    return cfg


def load_config(path, base: Optional[str] = None) -> Tuple[ScenarioConfig, Dict[str, Any]]:
    """Load a scenario file; returns the validated config and its raw override table.

    A scenario may name a shipped preset to start from via a top-level
    ``preset = "<name>"`` key; its own keys then override the preset.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigValidationError([(str(path), "config file not found")])
    raw = _read_toml_text(path.read_text(), str(path))
    raw = resolve_preset(raw)
    return validate(raw, base_dir=path.parent), raw


def resolve_preset(raw: Dict[str, Any]) -> Dict[str, Any]:
    if "preset" not in raw:
        return raw
    raw = dict(raw)
    name = raw.pop("preset")
    if not isinstance(name, str):
        raise ConfigValidationError([("preset", "must be a preset name")])
    return deep_merge(preset_raw(name), raw)


def config_hash(cfg: ScenarioConfig) -> str:
    blob = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def set_dotted(raw: Dict[str, Any], dotted: str, value: Any) -> Dict[str, Any]:
    out = copy.deepcopy(raw)
    node = out
    parts = dotted.split(".")
    for p in parts[:-1]:
        nxt = node.get(p)
        if not isinstance(nxt, dict):
            nxt = {}
            node[p] = nxt
        node = nxt
    node[parts[-1]] = value
    return out
