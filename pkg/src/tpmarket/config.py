"""Run configuration files.

A config is a YAML document with a ``kind`` and three sections: ``model``
(supply side), ``population`` (demand side) and ``run``. Unknown keys are
rejected, and physical quantities carry their unit in the key name. For
normalized systems, set ``v_max_usd_per_mbps_month`` and ``total_alpha_tbps``
to 1 so that prices come out in normalized units.
"""
from __future__ import annotations

from pathlib import Path
from typing import Annotated, Literal, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .core import GEOMETRIC_RATIO, APPopulation, DiscreteDistribution, Market, TPSegment, canonicalize
from .evolution import SENSITIVITY_KNOBS, Scenario
from .quality import DirectEta, MG1FIFO
from .sweep import PARTITION_AXES, SWEEP_AXES, MenuSpec, PartitionSweepSpec, SweepSpec, SystemSpec

__all__ = [
    "ConfigError",
    "EquilibriumConfig",
    "PartitionConfig",
    "EvolutionConfig",
    "load_config",
    "parse_config",
    "preset_path",
    "list_presets",
]

PRESET_DIR = Path(__file__).parent / "presets"

PositiveFloat = Annotated[float, Field(gt=0)]
NonNegFloat = Annotated[float, Field(ge=0)]


class ConfigError(ValueError):
    """Invalid config; the message names the offending field path."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class MG1FIFOModel(_Strict):
    kind: Literal["mg1_fifo"]
    mean_service_time: PositiveFloat = 1.0


class DirectEtaModel(_Strict):
    kind: Literal["direct_eta"]
    eta: Annotated[float, Field(gt=0, le=1)]


QualityModelConfig = Annotated[Union[MG1FIFOModel, DirectEtaModel], Field(discriminator="kind")]


class Points(_Strict):
    """Evenly spaced sweep points, endpoints included."""

    start: float
    stop: float
    num: Annotated[int, Field(ge=1)] = 50

    def values(self) -> list[float]:
        return [float(x) for x in np.linspace(self.start, self.stop, self.num)]


def _points(p) -> list:
    return p.values() if isinstance(p, Points) else list(p)


# equilibrium and sweep runs

class SegmentConfig(_Strict):
    name: str
    quality: PositiveFloat
    effective_capacity_tbps: NonNegFloat | None = None
    raw_capacity_tbps: NonNegFloat | None = None
    quality_model: QualityModelConfig | None = None
    price_floor_usd_per_mbps_month: NonNegFloat = 0.0

    @model_validator(mode="after")
    def _one_capacity(self):
        if self.effective_capacity_tbps is not None and self.raw_capacity_tbps is not None:
            raise ValueError("give effective_capacity_tbps or raw_capacity_tbps, not both")
        if self.raw_capacity_tbps is not None and self.quality_model is None:
            raise ValueError("raw_capacity_tbps needs a quality_model")
        return self

    def segment(self) -> TPSegment:
        if self.raw_capacity_tbps is None:
            return TPSegment(self.quality, self.effective_capacity_tbps, self.price_floor_usd_per_mbps_month,
                             name=self.name)
        qm = self.quality_model
        model = MG1FIFO(qm.mean_service_time) if qm.kind == "mg1_fifo" else DirectEta(qm.eta)
        return TPSegment(self.quality, self.raw_capacity_tbps, self.price_floor_usd_per_mbps_month, model, self.name)

    @property
    def has_capacity(self) -> bool:
        return self.effective_capacity_tbps is not None or self.raw_capacity_tbps is not None


class EquilibriumModel(_Strict):
    segments: list[SegmentConfig] = Field(default_factory=list)
    capacity_shares: list[NonNegFloat] | None = None
    rho: NonNegFloat | None = None
    grid_step_usd_per_mbps_month: PositiveFloat | None = None

    @model_validator(mode="after")
    def _capacities(self):
        names = [s.name for s in self.segments]
        if len(set(names)) != len(names):
            raise ValueError("segment names must be unique")
        given = [s.has_capacity for s in self.segments]
        if self.capacity_shares is not None or self.rho is not None:
            if self.capacity_shares is None or self.rho is None:
                raise ValueError("capacity_shares and rho go together")
            if any(given):
                raise ValueError("per-segment capacities conflict with capacity_shares/rho")
            if len(self.capacity_shares) != len(self.segments):
                raise ValueError("capacity_shares needs one entry per segment")
            if self.segments and not sum(self.capacity_shares) > 0:
                raise ValueError("capacity_shares must not all be zero")
        elif not all(given):
            raise ValueError("every segment needs a capacity, or give capacity_shares and rho")
        return self


class APTypeConfig(_Strict):
    alpha_tbps: PositiveFloat
    beta: NonNegFloat
    v_usd_per_mbps_month: float


class EquilibriumPopulation(_Strict):
    f_beta: str = "Geo"
    f_v: str = "BN(0.5)"
    levels: Annotated[int, Field(ge=1)] = 50
    geometric_ratio: Annotated[float, Field(gt=0, lt=1)] = GEOMETRIC_RATIO
    total_alpha_tbps: PositiveFloat = 1.0
    beta_max: PositiveFloat = 1.0
    v_max_usd_per_mbps_month: PositiveFloat = 1.0
    types: list[APTypeConfig] | None = None

    @model_validator(mode="after")
    def _distributions(self):
        for name in ("f_beta", "f_v"):
            try:
                DiscreteDistribution.parse(getattr(self, name), self.levels, self.geometric_ratio)
            except ValueError as exc:
                raise ValueError(f"{name}: {exc}") from None
        return self


class SweepConfig(_Strict):
    axis: str
    segment: str | None = None
    points: Points | list[float | str]

    @model_validator(mode="after")
    def _axis(self):
        if self.axis not in SWEEP_AXES:
            raise ValueError(f"unknown sweep axis {self.axis!r}; expected one of {list(SWEEP_AXES)}")
        return self


class EquilibriumRun(_Strict):
    competitive: bool = True
    sweep: SweepConfig | None = None
    n_jobs: Annotated[int, Field(ge=1)] = 1
    seed: int | None = None


class EquilibriumConfig(_Strict):
    kind: Literal["equilibrium"]
    description: str = ""
    model: EquilibriumModel
    population: EquilibriumPopulation = Field(default_factory=EquilibriumPopulation)
    run: EquilibriumRun = Field(default_factory=EquilibriumRun)

    @model_validator(mode="after")
    def _consistent(self):
        if self.run.sweep is not None:
            if self.population.types is not None:
                raise ValueError("sweeps need a distribution-based population, not explicit types")
            if any(s.raw_capacity_tbps is not None for s in self.model.segments):
                raise ValueError("sweeps take effective capacities; raw_capacity_tbps is for solve only")
            if self.run.sweep.axis in ("mu", "p_min"):
                names = [s.name for s in self.model.segments]
                if self.run.sweep.segment not in names:
                    raise ValueError(f"sweep segment {self.run.sweep.segment!r} not among {names}")
        return self

    def system(self) -> SystemSpec:
        """Distribution-based system for sweeps (and for solve without explicit types)."""
        m, pop = self.model, self.population
        segs = m.segments
        kw = dict(
            qualities=tuple(s.quality for s in segs),
            names=tuple(s.name for s in segs),
            f_beta=pop.f_beta,
            f_v=pop.f_v,
            levels=pop.levels,
            geometric_ratio=pop.geometric_ratio,
            p_min=tuple(s.price_floor_usd_per_mbps_month for s in segs),
            grid_step=m.grid_step_usd_per_mbps_month,
            total_alpha=pop.total_alpha_tbps,
            beta_max=pop.beta_max,
            v_max=pop.v_max_usd_per_mbps_month,
        )
        if m.capacity_shares is not None:
            return SystemSpec(mu=None, shares=tuple(m.capacity_shares), rho=m.rho, **kw)
        return SystemSpec(mu=tuple(s.segment().mu for s in segs), shares=None, rho=None, **kw)

    def build(self) -> tuple[Market, APPopulation]:
        if self.population.types is None:
            if self.model.capacity_shares is not None:
                return self.system().build()
            market, pop = self.system().build()
            return canonicalize([s.segment() for s in self.model.segments]), pop
        t = self.population.types
        pop = APPopulation([a.alpha_tbps for a in t], [a.beta for a in t], [a.v_usd_per_mbps_month for a in t],
                           allow_negative_v=True)
        return canonicalize([s.segment() for s in self.model.segments]), pop

    def sweep_spec(self) -> SweepSpec:
        if self.run.sweep is None:
            raise ConfigError("run.sweep: missing sweep section")
        sw = self.run.sweep
        return SweepSpec(sw.axis, tuple(_points(sw.points)), self.system(), sw.segment)


# partition runs

class MenuEntry(_Strict):
    name: str
    quality: PositiveFloat
    price_usd_per_mbps_month: NonNegFloat


class PartitionModel(_Strict):
    menu: Annotated[list[MenuEntry], Field(min_length=1)]


class PartitionPopulation(_Strict):
    beta_max: PositiveFloat = 1.0
    v_max_usd_per_mbps_month: PositiveFloat = 1.0
    resolution: Annotated[int, Field(ge=1)] = 100


class PartitionSweep(_Strict):
    axis: str
    segment: str | None = None
    points: Points | list[float]

    @model_validator(mode="after")
    def _axis(self):
        if self.axis not in PARTITION_AXES:
            raise ValueError(f"unknown partition axis {self.axis!r}; expected one of {list(PARTITION_AXES)}")
        return self


class PartitionRun(_Strict):
    sweep: PartitionSweep


class PartitionConfig(_Strict):
    kind: Literal["partition"]
    description: str = ""
    model: PartitionModel
    population: PartitionPopulation = Field(default_factory=PartitionPopulation)
    run: PartitionRun

    def sweep_spec(self) -> PartitionSweepSpec:
        menu = MenuSpec(
            qualities=tuple(e.quality for e in self.model.menu),
            prices=tuple(e.price_usd_per_mbps_month for e in self.model.menu),
            names=tuple(e.name for e in self.model.menu),
            beta_max=self.population.beta_max,
            v_max=self.population.v_max_usd_per_mbps_month,
            resolution=self.population.resolution,
        )
        sw = self.run.sweep
        return PartitionSweepSpec(sw.axis, tuple(_points(sw.points)), menu, sw.segment)


# yearly projections

class ServiceConfig(_Strict):
    quality: PositiveFloat
    raw_capacity_anchor_tbps: NonNegFloat
    utilization_eta: Annotated[float, Field(gt=0, le=1)]
    price_floor_usd_per_mbps_month: NonNegFloat = 0.0


class EvolutionModel(_Strict):
    cdn: ServiceConfig
    transit: ServiceConfig
    capacity_growth_multiplier: PositiveFloat = 1.5
    capacity_growth_multiplier_after_anchor: PositiveFloat | None = None
    horizon_capacity_split_cdn_to_transit: Annotated[list[NonNegFloat], Field(min_length=2, max_length=2)] | None = None
    grid_step_usd_per_mbps_month: PositiveFloat | None = None


class APClassConfig(_Strict):
    beta: NonNegFloat
    weight_start: PositiveFloat
    weight_growth_multiplier: PositiveFloat


class EvolutionPopulation(_Strict):
    demand_start_tbps: PositiveFloat = 10.0
    demand_growth_multiplier: PositiveFloat = 1.22
    video: APClassConfig = APClassConfig(beta=10.0, weight_start=0.02, weight_growth_multiplier=2.5)
    web: APClassConfig = APClassConfig(beta=1.0, weight_start=0.75, weight_growth_multiplier=1.5)
    inelastic: APClassConfig = APClassConfig(beta=0.1, weight_start=0.23, weight_growth_multiplier=1.2)
    v_max_usd_per_mbps_month: PositiveFloat = 10.0
    v_levels: Annotated[int, Field(ge=1)] = 100


class SensitivityConfig(_Strict):
    knob: str
    values: Annotated[list[float], Field(min_length=1)]

    @model_validator(mode="after")
    def _knob(self):
        if self.knob not in SENSITIVITY_KNOBS:
            raise ValueError(f"unknown sensitivity knob {self.knob!r}; expected one of {list(SENSITIVITY_KNOBS)}")
        return self


class DecisionConfig(_Strict):
    variant: Literal["growth", "ratio"]
    capacity_growth_multipliers: list[PositiveFloat] | None = None
    horizon_splits_cdn_to_transit: list[Annotated[list[NonNegFloat], Field(min_length=2, max_length=2)]] | None = None

    @model_validator(mode="after")
    def _values(self):
        if self.variant == "growth" and self.horizon_splits_cdn_to_transit is not None:
            raise ValueError("horizon_splits_cdn_to_transit belongs to the ratio variant")
        if self.variant == "ratio" and self.capacity_growth_multipliers is not None:
            raise ValueError("capacity_growth_multipliers belongs to the growth variant")
        return self

    def values(self):
        if self.variant == "growth":
            return self.capacity_growth_multipliers
        if self.horizon_splits_cdn_to_transit is None:
            return None
        return [tuple(s) for s in self.horizon_splits_cdn_to_transit]


class EvolutionRun(_Strict):
    start_year: int = 2007
    anchor_year: int = 2011
    end_year: int = 2014
    sensitivity: SensitivityConfig | None = None
    decision: DecisionConfig | None = None

    @model_validator(mode="after")
    def _years(self):
        if self.end_year < self.start_year:
            raise ValueError("end_year precedes start_year")
        return self


class EvolutionConfig(_Strict):
    kind: Literal["evolution"]
    description: str = ""
    model: EvolutionModel = Field(default_factory=lambda: EvolutionModel(
        cdn=ServiceConfig(quality=0.01, raw_capacity_anchor_tbps=14.0, utilization_eta=0.3),
        transit=ServiceConfig(quality=1.0, raw_capacity_anchor_tbps=7.0, utilization_eta=0.9)))
    population: EvolutionPopulation = Field(default_factory=EvolutionPopulation)
    run: EvolutionRun = Field(default_factory=EvolutionRun)

    @model_validator(mode="after")
    def _order(self):
        if not self.model.cdn.quality < self.model.transit.quality:
            raise ValueError("model.cdn.quality must be smaller (better) than model.transit.quality")
        return self

    def scenario(self) -> Scenario:
        m, p, r = self.model, self.population, self.run
        classes = (p.video, p.web, p.inelastic)
        split = m.horizon_capacity_split_cdn_to_transit
        return Scenario(
            start_year=r.start_year,
            anchor_year=r.anchor_year,
            end_year=r.end_year,
            nu_anchor=(m.cdn.raw_capacity_anchor_tbps, m.transit.raw_capacity_anchor_tbps),
            r_nu=m.capacity_growth_multiplier,
            r_nu_future=m.capacity_growth_multiplier_after_anchor,
            horizon_split=tuple(split) if split is not None else None,
            eta=(m.cdn.utilization_eta, m.transit.utilization_eta),
            alpha_start=p.demand_start_tbps,
            r_alpha=p.demand_growth_multiplier,
            weights_start=tuple(c.weight_start for c in classes),
            weight_growth=tuple(c.weight_growth_multiplier for c in classes),
            betas=tuple(c.beta for c in classes),
            qualities=(m.cdn.quality, m.transit.quality),
            v_max=p.v_max_usd_per_mbps_month,
            v_levels=p.v_levels,
            p_min=(m.cdn.price_floor_usd_per_mbps_month, m.transit.price_floor_usd_per_mbps_month),
            grid_step=m.grid_step_usd_per_mbps_month,
        )


AnyConfig = Union[EquilibriumConfig, PartitionConfig, EvolutionConfig]
_KINDS = {"equilibrium": EquilibriumConfig, "partition": PartitionConfig, "evolution": EvolutionConfig}


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(x) for x in e["loc"]) or "<root>"
        msg = e["msg"]
        if e["type"] == "extra_forbidden":
            msg = "unknown key"
        lines.append(f"{path}: {msg}")
    return "\n".join(lines)


def parse_config(data) -> AnyConfig:
    """Validate an already-loaded mapping."""
    if not isinstance(data, dict):
        raise ConfigError("<root>: config must be a mapping")
    kind = data.get("kind")
    if kind not in _KINDS:
        raise ConfigError(f"kind: expected one of {sorted(_KINDS)}, got {kind!r}")
    try:
        return _KINDS[kind].model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None


def load_config(path: str | Path) -> AnyConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    return parse_config(data)


def list_presets() -> list[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.yaml"))


def preset_path(name: str) -> Path:
    path = PRESET_DIR / f"{name}.yaml"
    if not path.exists():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(list_presets())}")
    return path
