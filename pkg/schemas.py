# Pydantic models for experiment configs, stanzas and result records

from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from config import DEFAULT_MC_SAMPLES, DEFAULT_SEED, DEFAULT_WORKERS

RuleReference = Union[str, dict]
Mode = Literal["exact", "mc"]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GeometrySpec(StrictModel):
    sides: list[int]
    alphabet: int = 2


class SplitSettings(StrictModel):
    axis: int = 0
    boundary: int = 0
    hot_width: Optional[int] = None


class SearchSettings(StrictModel):
    kind: Literal["exhaustive", "sampled"] = "exhaustive"
    samples: int = 10_000


class MapSpec(StrictModel):
    """A map on A^R: a named builder, a swap of two subregions, or a two-column table"""

    builder: Literal["identity", "complement", "swap", "table"]
    swap: Optional[tuple[str, str]] = None
    table: Optional[str] = None

    @model_validator(mode="after")
    def _check_builder(self):
        if self.builder == "swap" and self.swap is None:
            raise ValueError("swap maps need the two regions to exchange")
        if self.builder == "table" and self.table is None:
            raise ValueError("table maps need the table text")
        return self


class EventSpec(StrictModel):
    time: int
    config: str


class _Stanza(StrictModel):
    id: str
    rule: Optional[RuleReference] = None


class SimulateStanza(_Stanza):
    kind: Literal["simulate"]
    initial: Optional[str] = None
    state: Optional[str] = None
    steps: int = 1
    direction: Literal["forward", "backward"] = "forward"
    phase: int = 0
    show_state: bool = True


class ReversibilityStanza(_Stanza):
    kind: Literal["reversibility"]
    mode: Literal["exhaustive", "sampled"] = "exhaustive"
    samples: int = 10_000
    covariance: Optional[list[int]] = None


class FreeEnergyStanza(_Stanza):
    kind: Literal["free-energy"]
    events: list[EventSpec]
    window: Optional[str] = None


class SearchPrepStanza(_Stanza):
    kind: Literal["search-prep"]
    region: str
    target: str
    initial: Optional[str] = None
    max_time: int
    window: str
    policy: Literal["zero", "enumerate"] = "zero"
    search: SearchSettings = SearchSettings()


class SearchMapStanza(_Stanza):
    kind: Literal["search-map"]
    region: str
    map: MapSpec
    max_time: int
    window: str
    policy: Literal["zero", "enumerate"] = "zero"
    search: SearchSettings = SearchSettings()


class PriorStanza(_Stanza):
    kind: Literal["prior"]
    split: SplitSettings = SplitSettings()
    target: str
    time: int
    mode: Mode = "exact"
    samples: int = DEFAULT_MC_SAMPLES
    distribution: bool = False
    average_to: Optional[int] = None


class ComplexityStanza(_Stanza):
    kind: Literal["complexity"]
    split: SplitSettings = SplitSettings()
    target: Optional[str] = None
    region: Optional[str] = None
    map: Optional[MapSpec] = None
    max_time: int
    window: Optional[str] = None
    max_program: Optional[int] = None
    check_bound: bool = True

    @model_validator(mode="after")
    def _check_target(self):
        if (self.target is None) == (self.map is None):
            raise ValueError("give exactly one of target or map")
        if self.map is not None and self.region is None:
            raise ValueError("map targets need a region")
        return self


class KraftStanza(_Stanza):
    kind: Literal["kraft"]
    split: SplitSettings = SplitSettings()
    members: Optional[list[str]] = None
    region: Optional[str] = None
    max_time: int
    window: Optional[str] = None
    max_program: Optional[int] = None

    @model_validator(mode="after")
    def _check_family(self):
        if (self.members is None) == (self.region is None):
            raise ValueError("give exactly one of members or region")
        return self


class CycleCostStanza(_Stanza):
    kind: Literal["cycle-cost"]
    config: Optional[str] = None
    sequence: Optional[list[str]] = None
    tau: int = 1
    repeats: int
    window: Optional[str] = None
    tau_window: Optional[tuple[int, int]] = None
    mode: Mode = "exact"
    samples: int = DEFAULT_MC_SAMPLES

    @model_validator(mode="after")
    def _check_target(self):
        if (self.config is None) == (self.sequence is None):
            raise ValueError("give exactly one of config or sequence")
        return self


class InfluxStanza(_Stanza):
    kind: Literal["influx"]
    region: str
    displacement: list[int]
    program: Optional[str] = None
    time: Optional[int] = None
    max_time: int = 4
    window: Optional[str] = None
    max_program: Optional[int] = None
    initial: Optional[str] = None

    @model_validator(mode="after")
    def _check_program(self):
        if (self.program is None) != (self.time is None):
            raise ValueError("a fixed transfer needs both program and time")
        return self


class MixingStanza(_Stanza):
    kind: Literal["mixing"]
    first: str
    second: str
    extra: list[str] = []
    horizon: int
    mode: Mode = "exact"
    samples: int = DEFAULT_MC_SAMPLES


class PersistenceStanza(_Stanza):
    kind: Literal["persistence"]
    region: str
    program: str
    target: str
    initial: Optional[str] = None
    horizon: int
    samples: int = 10_000


Stanza = Annotated[
    Union[
        SimulateStanza,
        ReversibilityStanza,
        FreeEnergyStanza,
        SearchPrepStanza,
        SearchMapStanza,
        PriorStanza,
        ComplexityStanza,
        KraftStanza,
        CycleCostStanza,
        InfluxStanza,
        MixingStanza,
        PersistenceStanza,
    ],
    Field(discriminator="kind"),
]


class ExperimentConfig(StrictModel):
    rule: RuleReference
    geometry: GeometrySpec
    seed: int = DEFAULT_SEED
    cap: Optional[int] = None
    out: Optional[str] = None
    experiments: list[Stanza] = Field(min_length=1)

    @model_validator(mode="after")
    def _check_ids(self):
        ids = [stanza.id for stanza in self.experiments]
        if len(set(ids)) != len(ids):
            raise ValueError("experiment ids must be unique")
        return self


class RunSettings(BaseModel):
    """Resolved run options: CLI flags win over the config file"""

    seed: int = DEFAULT_SEED
    cap: int
    workers: int = DEFAULT_WORKERS


class ExperimentRecord(BaseModel):
    experiment: str
    kind: str
    rule: dict
    geometry: dict
    seed: int
    caps: dict
    inputs: dict
    result: dict
    holds: Optional[bool] = None


class VerificationRecord(BaseModel):
    experiment: str
    kind: str
    passed: bool
    inputs_checked: int = 0
    digest: str = ""
    detail: str = ""
