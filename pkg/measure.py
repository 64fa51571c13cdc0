# Uniform measure, cylinder sets, free energies, exact pushforwards and Monte-Carlo estimates

import logging
import math
from typing import Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationInfo, field_validator, model_validator
from scipy import stats

from config import CONFIDENCE_LEVEL, DEFAULT_MC_SAMPLES, DEFAULT_SEED, DEFAULT_WORKERS, MC_SHARD_SIZE, NORMALIZATION_TOLERANCE, get_enumeration_cap
from engine import Rule, check_geometry, influence_cone, row_codes, shard_rng, sweep
from errors import CapExceeded, CoverageError, LightConeViolation
from lattice import Configuration, Geometry, Region, light_cone_valid, moore_neighborhood

logger = logging.getLogger(__name__)

# F = infinity: the requested event has measure zero
IMPOSSIBLE = math.inf


class CylinderSet(BaseModel):
    """A region plus a set of configurations on it, stored as sorted member codes"""

    model_config = ConfigDict(frozen=True)

    region: Region
    codes: tuple[int, ...] = ()

    @field_validator("codes", mode="before")
    @classmethod
    def _normalize_codes(cls, codes, info: ValidationInfo):
        codes = tuple(sorted(set(int(c) for c in codes)))
        region = info.data.get("region")
        if region is not None and codes:
            size = region.geometry.alphabet ** len(region)
            if codes[0] < 0 or codes[-1] >= size:
                raise ValueError("member code outside A^R")
        return codes

    @classmethod
    def of(cls, region: Region, members: Sequence[Configuration]) -> "CylinderSet":
        for member in members:
            if member.region != region:
                raise CoverageError("cylinder member lives on a different region")
        return cls(region=region, codes=[m.code() for m in members])

    @classmethod
    def single(cls, config: Configuration) -> "CylinderSet":
        return cls(region=config.region, codes=[config.code()])

    @classmethod
    def everything(cls, region: Region) -> "CylinderSet":
        return cls(region=region, codes=range(region.geometry.alphabet ** len(region)))

    @property
    def geometry(self) -> Geometry:
        return self.region.geometry

    def __len__(self) -> int:
        return len(self.codes)

    def members(self) -> list[Configuration]:
        return [Configuration.from_code(self.region, c) for c in self.codes]

    def contains(self, config: Configuration) -> bool:
        return config.region == self.region and config.code() in set(self.codes)


class RegionDistribution(BaseModel):
    """Explicit probability table over A^R, indexed by configuration code"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    region: Region
    probabilities: np.ndarray

    @model_validator(mode="before")
    @classmethod
    def _check_table(cls, data):
        region, probabilities = data["region"], np.array(data["probabilities"], dtype=np.float64)
        size = region.geometry.alphabet ** len(region)
        if probabilities.shape != (size,):
            raise ValueError(f"distribution needs {size} entries")
        if np.any(probabilities < 0):
            raise ValueError("negative probability")
        if abs(probabilities.sum() - 1.0) > NORMALIZATION_TOLERANCE:
            raise ValueError("probabilities do not sum to 1")
        probabilities.flags.writeable = False
        return {"region": region, "probabilities": probabilities}

    @classmethod
    def point_mass(cls, config: Configuration) -> "RegionDistribution":
        table = np.zeros(config.geometry.alphabet ** len(config))
        table[config.code()] = 1.0
        return cls(region=config.region, probabilities=table)

    @classmethod
    def uniform(cls, region: Region) -> "RegionDistribution":
        size = region.geometry.alphabet ** len(region)
        return cls(region=region, probabilities=np.full(size, 1.0 / size))

    def probability(self, config: Configuration) -> float:
        return float(self.probabilities[config.code()])

    def marginal(self, subregion: Region) -> "RegionDistribution":
        if not subregion.issubset(self.region):
            raise CoverageError("marginal region is not inside the distribution's region")
        a = self.region.geometry.alphabet
        keep = [self.region.position(cell) for cell in subregion.cells]
        drop = tuple(i for i in range(len(self.region)) if i not in keep)
        table = self.probabilities.reshape((a,) * len(self.region)).sum(axis=drop)
        return RegionDistribution(region=subregion, probabilities=np.asarray(table).ravel())


class ProbabilityEstimate(BaseModel):
    """Point estimate with a Wilson interval; exact values carry zero width"""

    value: float
    mode: str = "mc"
    samples: int = 0
    seed: Optional[int] = None
    low: float
    high: float
    half_width: float

    @classmethod
    def exact(cls, value: float) -> "ProbabilityEstimate":
        return cls(value=value, mode="exact", low=value, high=value, half_width=0.0)

    def covers(self, value: float) -> bool:
        return self.low <= value <= self.high


class InitialSpec(BaseModel):
    """delta(fixed) on its region, uniform on window minus fixed, zero outside the window"""

    model_config = ConfigDict(frozen=True)

    geometry: Geometry
    fixed: Optional[Configuration] = None
    window: Optional[Region] = None

    @classmethod
    def uniform(cls, geometry: Geometry) -> "InitialSpec":
        return cls(geometry=geometry)

    def uniform_cells(self) -> Region:
        cells = self.window if self.window is not None else Region.full(self.geometry)
        if self.fixed is not None:
            cells = cells.difference(self.fixed.region)
        return cells

    def split(self, involved: Region) -> tuple[Region, Optional[Configuration]]:
        """Free (uniform) cells of `involved` and the fixed part restricted to it"""
        free = involved.intersection(self.uniform_cells())
        fixed = None
        if self.fixed is not None:
            lookup = self.fixed.as_dict()
            kept = {cell: lookup[cell] for cell in involved.cells if cell in lookup}
            fixed = Configuration.from_cells(self.geometry, kept)
        return free, fixed


Constraint = tuple[int, Union[CylinderSet, Configuration]]


def _as_cylinder(event: Union[CylinderSet, Configuration]) -> CylinderSet:
    if isinstance(event, Configuration):
        return CylinderSet.single(event)
    return event


def cylinder_measure(cylinder: CylinderSet) -> float:
    """mu(B) = |members| * a^-|R|"""
    return len(cylinder) / cylinder.geometry.alphabet ** len(cylinder.region)


def free_energy(cylinder: CylinderSet) -> float:
    """F(B) = -log2 mu(B); IMPOSSIBLE for the empty set"""
    return bits(cylinder_measure(cylinder))


def bits(probability: float) -> float:
    if probability <= 0:
        return IMPOSSIBLE
    return max(0.0, -math.log2(probability))


def check_light_cone(geometry: Geometry, region: Region, t: int) -> None:
    if not light_cone_valid(geometry, region, t):
        raise LightConeViolation(f"region {region.to_text()} at t={t} wraps around the torus")


def check_joint_light_cone(geometry: Geometry, constraints: Sequence[Constraint]) -> None:
    """All constrained regions together, at the latest constrained time, must fit inside the torus"""
    if not constraints:
        return
    union = Region(geometry=geometry).union(*(_as_cylinder(event).region for _, event in constraints))
    latest = max(t for t, _ in constraints)
    if not light_cone_valid(geometry, union, latest):
        raise LightConeViolation(f"events on {union.to_text()} up to t={latest} wrap around the torus together")


def check_window(window: Optional[Region], region: Region, t: int) -> None:
    if window is not None and not moore_neighborhood(region, t).issubset(window):
        raise CoverageError(f"window does not cover the radius-{t} neighborhood of {region.to_text()}")


def involved_cells(rule: Rule, constraints: Sequence[Constraint], phase: int = 0) -> Region:
    """Union of the influence cones of all constrained regions"""
    geometry = _as_cylinder(constraints[0][1]).geometry
    involved = Region(geometry=geometry)
    for t, event in constraints:
        involved = involved.union(influence_cone(rule, _as_cylinder(event).region, t, phase))
    return involved


def _joint_hits(
    rule: Rule,
    constraints: Sequence[Constraint],
    free: Region,
    fixed: Optional[Configuration],
    assignments: Optional[np.ndarray] = None,
    workers: int = DEFAULT_WORKERS,
) -> np.ndarray:
    """Boolean per assignment: every constraint holds"""
    cylinders = [(t, _as_cylinder(event)) for t, event in constraints]
    geometry = cylinders[0][1].geometry
    observe = Region(geometry=geometry).union(*(c.region for _, c in cylinders))
    recorded = sweep(rule, geometry, [free], observe, [t for t, _ in cylinders], fixed=fixed, assignments=assignments, workers=workers)
    rows = next(iter(recorded.values())).shape[0]
    hits = np.ones(rows, dtype=bool)
    for t, cylinder in cylinders:
        columns = [observe.position(cell) for cell in cylinder.region.cells]
        if not columns:
            if not cylinder.codes:
                hits[:] = False
            continue
        codes = row_codes(recorded[t][:, columns], geometry.alphabet)
        hits &= np.isin(codes, np.asarray(cylinder.codes, dtype=np.int64))
    return hits


def joint_probability(
    rule: Rule,
    constraints: Sequence[Constraint],
    initial: Optional[InitialSpec] = None,
    cap: Optional[int] = None,
    workers: int = DEFAULT_WORKERS,
) -> float:
    """Exact probability that alpha_t(s)|R_j lies in B_j for every constraint (t_j, B_j).

    Only the influence cones of the constrained regions are enumerated; every other
    cell factors out of the measure.
    """
    if not constraints:
        return 1.0
    geometry = _as_cylinder(constraints[0][1]).geometry
    check_geometry(rule, geometry)
    check_joint_light_cone(geometry, constraints)
    initial = initial or InitialSpec.uniform(geometry)
    free, fixed = initial.split(involved_cells(rule, constraints))
    total = geometry.alphabet ** len(free)
    limit = get_enumeration_cap(cap)
    if total > limit:
        raise CapExceeded(f"exact measure needs {total} states, cap is {limit}")
    hits = _joint_hits(rule, constraints, free, fixed, workers=workers)
    return int(hits.sum()) / total


def joint_event_free_energy(
    rule: Rule,
    constraints: Sequence[Constraint],
    window: Optional[Region] = None,
    cap: Optional[int] = None,
    workers: int = DEFAULT_WORKERS,
) -> float:
    """-log2 mu(intersection of alpha_{t_j}^-1(B_j)): free energy of a transition sequence"""
    for t, event in constraints:
        check_window(window, _as_cylinder(event).region, t)
    return bits(joint_probability(rule, constraints, cap=cap, workers=workers))


def prep_free_energy(
    rule: Rule,
    initial: Configuration,
    final: Configuration,
    t: int,
    window: Optional[Region] = None,
    cap: Optional[int] = None,
    workers: int = DEFAULT_WORKERS,
) -> float:
    """-log2 mu(c_i intersected with alpha_t^-1(c_f))"""
    return joint_event_free_energy(rule, [(0, initial), (t, final)], window, cap, workers)


def preimage_measure(rule: Rule, cylinder: CylinderSet, t: int, cap: Optional[int] = None) -> float:
    """mu(alpha_t^-1(B)); equal to mu(B) for every measure-preserving rule"""
    return joint_probability(rule, [(t, cylinder)], cap=cap)


def marginal_entropy(dist: RegionDistribution, subregion: Optional[Region] = None) -> float:
    """Shannon entropy in bits of the marginal on `subregion`"""
    marginal = dist.marginal(subregion) if subregion is not None else dist
    if len(marginal.region) == 0:
        return 0.0
    return max(0.0, float(stats.entropy(marginal.probabilities, base=2)))


def pushforward(
    initial: InitialSpec,
    rule: Rule,
    t: int,
    target: Region,
    cap: Optional[int] = None,
    workers: int = DEFAULT_WORKERS,
) -> RegionDistribution:
    """Exact law of alpha_t(s)|target for s drawn from `initial`"""
    geometry = target.geometry
    check_geometry(rule, geometry)
    check_light_cone(geometry, target, t)
    free, fixed = initial.split(influence_cone(rule, target, t))
    a = geometry.alphabet
    total = a ** len(free)
    limit = get_enumeration_cap(cap)
    if total > limit:
        raise CapExceeded(f"pushforward needs {total} states, cap is {limit}")
    observed = sweep(rule, geometry, [free], target, [t], fixed=fixed, workers=workers)[t]
    size = a ** len(target)
    if len(target):
        counts = np.bincount(row_codes(observed, a), minlength=size)
    else:
        counts = np.array([len(observed)])
    return RegionDistribution(region=target, probabilities=counts / total)


def wilson_interval(hits: int, samples: int, confidence: float = CONFIDENCE_LEVEL) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion"""
    if samples <= 0:
        return 0.0, 1.0
    z = float(stats.norm.ppf(1 - (1 - confidence) / 2))
    p = hits / samples
    denominator = 1 + z * z / samples
    center = (p + z * z / (2 * samples)) / denominator
    half = z * math.sqrt(p * (1 - p) / samples + z * z / (4 * samples * samples)) / denominator
    return max(0.0, center - half), min(1.0, center + half)


def sample_hits(
    rule: Rule,
    constraints: Sequence[Constraint],
    initial: InitialSpec,
    samples: int,
    seed: int,
    workers: int = DEFAULT_WORKERS,
) -> int:
    """Count seeded samples of `initial` meeting every constraint; shard-keyed, so worker count never matters"""
    geometry = initial.geometry
    check_joint_light_cone(geometry, constraints)
    free, fixed = initial.split(involved_cells(rule, constraints))
    hits = 0
    for shard, start in enumerate(range(0, samples, MC_SHARD_SIZE)):
        size = min(MC_SHARD_SIZE, samples - start)
        rows = shard_rng(seed, shard).integers(0, geometry.alphabet, size=(size, len(free)), dtype=np.uint8)
        hits += int(_joint_hits(rule, constraints, free, fixed, assignments=rows, workers=workers).sum())
    return hits


def estimate_event_probability(
    initial: InitialSpec,
    rule: Rule,
    t: int,
    event: Union[CylinderSet, Configuration],
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = DEFAULT_SEED,
    confidence: float = CONFIDENCE_LEVEL,
    workers: int = DEFAULT_WORKERS,
) -> ProbabilityEstimate:
    """Monte-Carlo frequency of alpha_t(s)|R in B with a Wilson interval"""
    event = _as_cylinder(event)
    check_geometry(rule, event.geometry)
    check_light_cone(event.geometry, event.region, t)
    hits = sample_hits(rule, [(t, event)], initial, samples, seed, workers)
    low, high = wilson_interval(hits, samples, confidence)
    logger.debug("mc estimate: %d/%d hits (seed %d)", hits, samples, seed)
    return ProbabilityEstimate(
        value=hits / samples if samples else 0.0,
        samples=samples,
        seed=seed,
        low=low,
        high=high,
        half_width=(high - low) / 2,
    )


class RecurrenceReport(BaseModel):
    terms: list[float]
    first_return: Optional[int] = None
    horizon: int


def recurrence_probe(rule: Rule, source: CylinderSet, target: CylinderSet, horizon: int, cap: Optional[int] = None) -> RecurrenceReport:
    """Exact mu(alpha_t^-1(B) intersected with D) for t <= horizon, and the first t >= 1 where it is positive"""
    terms = [joint_probability(rule, [(0, target), (t, source)], cap=cap) for t in range(horizon + 1)]
    first = next((t for t in range(1, horizon + 1) if terms[t] > 0), None)
    return RecurrenceReport(terms=terms, first_return=first, horizon=horizon)
