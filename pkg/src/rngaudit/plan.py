"""Experiment plans and their expansion into cells."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .errors import ConfigError, EmptyPlanError
from .prompts import Language, PromptCatalog, default_catalog
from .providers import DEFAULT_MAX_TOKENS, ProviderConfig

DEFAULT_TEMPERATURES = (0.1, 0.3, 0.5, 0.8, 1.0, 2.0)
DEFAULT_RANGES = (5, 10, 100)
_NAME_RE = re.compile(r"^[A-Za-z0-9][A-Za-z0-9.\-]*(?:_[A-Za-z0-9.\-]+)*$")


def temperature_tag(t: float) -> str:
    return repr(float(t))


@dataclass(frozen=True, order=True)
class Cell:
    """One experimental condition; ordering is (provider, language, upper, temperature)."""

    provider: str
    language: str
    upper: int
    temperature: float

    lower = 1

    @property
    def key(self) -> str:
        return f"{self.provider}__{self.language}__1-{self.upper}__T{temperature_tag(self.temperature)}"

    @classmethod
    def from_key(cls, key: str) -> "Cell":
        try:
            provider, language, rng, temp = key.split("__")
            lo, hi = rng.split("-")
            if lo != "1" or not temp.startswith("T"):
                raise ValueError
            return cls(provider, language, int(hi), float(temp[1:]))
        except ValueError:
            raise ValueError(f"not a cell key: {key!r}") from None


def _parse_range(r: Any) -> int:
    if isinstance(r, str):
        parts = r.replace("–", "-").split("-")
        r = [int(p) for p in parts] if len(parts) == 2 else int(parts[0])
    if isinstance(r, (list, tuple)):
        if len(r) != 2 or int(r[0]) != 1:
            raise ConfigError(f"ranges must start at 1, got {r!r}")
        r = r[1]
    upper = int(r)
    if upper < 2:
        raise ConfigError(f"range upper bound must be >= 2, got {upper}")
    return upper


@dataclass
class ExperimentPlan:
    providers: list[str]
    languages: list[str] = field(default_factory=lambda: [lang.value for lang in Language])
    ranges: list[int] = field(default_factory=lambda: list(DEFAULT_RANGES))
    temperatures: list[float] = field(default_factory=lambda: list(DEFAULT_TEMPERATURES))
    calls_per_cell: int = 100
    run_id: str = "run"
    seed: int | None = None
    max_tokens: int = DEFAULT_MAX_TOKENS

    def __post_init__(self):
        self.languages = [str(lang.value if isinstance(lang, Language) else lang).upper()
                          for lang in self.languages]
        self.ranges = [_parse_range(r) for r in self.ranges]
        self.temperatures = [float(t) for t in self.temperatures]

    def validate(self) -> None:
        for dim in ("providers", "languages", "ranges", "temperatures"):
            values = getattr(self, dim)
            if not values:
                raise EmptyPlanError(f"plan has no {dim}")
            if len(set(values)) != len(values):
                raise ConfigError(f"duplicate entries in {dim}: {values}")
        for p in self.providers:
            if not _NAME_RE.match(p):
                raise ConfigError(f"provider name {p!r} must be filename-safe and free of '__'")
        for t in self.temperatures:
            if not 0.0 <= t <= 2.0:
                raise ConfigError(f"temperature {t} outside [0, 2]")
        if self.calls_per_cell < 1:
            raise ConfigError("calls_per_cell must be positive")

    @property
    def total_calls(self) -> int:
        return len(expand_plan(self)) * self.calls_per_cell

    def dimensions(self) -> dict:
        """Everything that identifies the run's layout; used for drift checks."""
        return {
            "providers": sorted(self.providers),
            "languages": sorted(self.languages),
            "ranges": sorted(self.ranges),
            "temperatures": sorted(self.temperatures),
            "calls_per_cell": self.calls_per_cell,
            "seed": self.seed,
        }


def expand_plan(plan: ExperimentPlan) -> list[Cell]:
    """All cells of the plan in deterministic lexicographic order."""
    plan.validate()
    return sorted(
        Cell(p, lang, upper, t)
        for p in plan.providers
        for lang in plan.languages
        for upper in plan.ranges
        for t in plan.temperatures
    )


@dataclass
class AuditConfig:
    plan: ExperimentPlan
    providers: dict[str, ProviderConfig]
    catalog: PromptCatalog

    def validate(self) -> None:
        self.plan.validate()
        missing = [p for p in self.plan.providers if p not in self.providers]
        if missing:
            raise ConfigError(f"plan references undefined providers: {missing}")
        for lang in self.plan.languages:
            self.catalog.template(lang)


def config_from_dict(d: Mapping[str, Any], base_dir: Path | None = None) -> AuditConfig:
    d = dict(d)
    provider_defs = d.pop("providers", None)
    if not provider_defs:
        raise EmptyPlanError("config defines no providers")
    providers = {}
    for pd in provider_defs:
        cfg = ProviderConfig.from_dict(pd, base_dir)
        providers[cfg.name] = cfg
    prompts = d.pop("prompts", None)
    if prompts:
        path = Path(prompts)
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        catalog = PromptCatalog.from_file(path)
    else:
        catalog = default_catalog()
    names = d.pop("use_providers", None) or list(providers)
    known = set(ExperimentPlan.__dataclass_fields__) - {"providers"}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown plan fields: {sorted(unknown)}")
    plan = ExperimentPlan(providers=names, **d)
    config = AuditConfig(plan, providers, catalog)
    config.validate()
    return config


def load_config(path: str | Path) -> AuditConfig:
    """Read a YAML or JSON plan file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    if not isinstance(data, Mapping):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data, path.parent)
