# Hot/cold universe, physical prior, physical complexity and free-energy experiments

import hashlib
import itertools
import json
import logging
import math
from typing import Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from config import BOUND_TOLERANCE, CONFIDENCE_LEVEL, DEFAULT_MC_SAMPLES, DEFAULT_SEED, DEFAULT_WORKERS, get_enumeration_cap
from engine import Rule, assignment_digits, check_geometry, evolve_cells, influence_cone, row_codes, shard_rng, sweep
from errors import CapExceeded, ConfigError, CoverageError, InvariantViolation, LightConeViolation, PreconditionError
from lattice import Configuration, FullState, Geometry, Region, moore_neighborhood
from measure import (
    IMPOSSIBLE,
    CylinderSet,
    InitialSpec,
    ProbabilityEstimate,
    RegionDistribution,
    bits,
    check_joint_light_cone,
    check_light_cone,
    cylinder_measure,
    estimate_event_probability,
    free_energy,
    joint_event_free_energy,
    joint_probability,
    marginal_entropy,
    pushforward,
    sample_hits,
    wilson_interval,
)
from universality import CertificateCheck, NotFoundWithinBounds

logger = logging.getLogger(__name__)

Mode = Literal["exact", "mc"]


class SplitSpec(BaseModel):
    """L+ is the band of `hot_width` rows starting at `boundary` along `axis`; L- is the rest"""

    model_config = ConfigDict(frozen=True)

    geometry: Geometry
    axis: int = 0
    boundary: int = 0
    hot_width: Optional[int] = None

    @model_validator(mode="before")
    @classmethod
    def _default_width(cls, data):
        if not isinstance(data, dict):
            return data
        geometry = data.get("geometry")
        if isinstance(geometry, dict):
            geometry = Geometry(**geometry)
        axis = data.get("axis", 0)
        if geometry is None or not 0 <= axis < geometry.dimension:
            raise ValueError("split axis outside the torus dimension")
        n = geometry.sides[axis]
        width = data.get("hot_width")
        if width is None:
            width = n // 2
        if not 0 < width < n:
            raise ValueError("both halves of the split must be nonempty")
        return {**data, "geometry": geometry, "boundary": data.get("boundary", 0) % n, "hot_width": width}

    @property
    def length(self) -> int:
        return self.geometry.sides[self.axis]

    def is_hot(self, cell) -> bool:
        cell = self.geometry.wrap(cell)
        return (cell[self.axis] - self.boundary) % self.length < self.hot_width

    def hot_mask(self) -> np.ndarray:
        """Boolean array over the torus, True on L+"""
        n = self.length
        band = (np.arange(n) - self.boundary) % n < self.hot_width
        shape = [1] * self.geometry.dimension
        shape[self.axis] = n
        return np.broadcast_to(band.reshape(shape), self.geometry.sides)

    def hot_region(self) -> Region:
        return self.hot_part(Region.full(self.geometry))

    def cold_region(self) -> Region:
        return Region.full(self.geometry).difference(self.hot_region())

    def hot_part(self, region: Region) -> Region:
        return Region(geometry=self.geometry, cells=[c for c in region.cells if self.is_hot(c)])

    def interfaces(self) -> list[int]:
        """Axis coordinates p where cells p-1 and p lie in different halves"""
        return [self.boundary, (self.boundary + self.hot_width) % self.length]

    def crossings(self, region: Region) -> int:
        n = self.length
        coords = {cell[self.axis] for cell in region.cells}
        return sum(1 for p in self.interfaces() if p in coords and (p - 1) % n in coords)

    def initial_spec(self) -> InitialSpec:
        """Uniform on L+, zero on L-"""
        return InitialSpec(geometry=self.geometry, window=self.hot_region())

    def to_text(self) -> str:
        return f"axis={self.axis} boundary={self.boundary} hot={self.hot_width}"


def check_prior_query(split: SplitSpec, region: Region, t: int) -> None:
    if region.geometry != split.geometry:
        raise ConfigError("region and split live on different tori")
    check_light_cone(split.geometry, region, t)
    if split.crossings(moore_neighborhood(region, t)) > 1:
        raise LightConeViolation(f"radius-{t} neighborhood of {region.to_text()} reaches both hot/cold interfaces")


def sample_initial_state(split: SplitSpec, seed: int = DEFAULT_SEED) -> FullState:
    """One draw of the hot/cold universe: L+ i.i.d. uniform, L- zero"""
    geometry = split.geometry
    cells = shard_rng(seed, 0).integers(0, geometry.alphabet, size=geometry.sides, dtype=np.uint8)
    cells[~split.hot_mask()] = 0
    return FullState(geometry=geometry, cells=cells)


class PriorQuery(BaseModel):
    model_config = ConfigDict(frozen=True)

    rule: Rule
    split: SplitSpec
    target: Configuration
    time: int
    mode: Mode = "exact"
    samples: int = DEFAULT_MC_SAMPLES
    seed: int = DEFAULT_SEED
    cap: Optional[int] = None
    workers: int = DEFAULT_WORKERS

    @model_validator(mode="after")
    def _check_query(self):
        if self.target.geometry != self.split.geometry:
            raise ValueError("target and split live on different tori")
        if self.time < 0:
            raise ValueError("time must be non-negative")
        return self


def physical_prior(query: PriorQuery) -> Union[float, ProbabilityEstimate]:
    """P_t(c): probability that the hot/cold universe shows c on its region at time t"""
    check_geometry(query.rule, query.split.geometry)
    check_prior_query(query.split, query.target.region, query.time)
    initial = query.split.initial_spec()
    if query.mode == "exact":
        return joint_probability(query.rule, [(query.time, query.target)], initial, query.cap, query.workers)
    return estimate_event_probability(
        initial, query.rule, query.time, query.target, query.samples, query.seed, workers=query.workers
    )


def prior_distribution(
    rule: Rule, split: SplitSpec, region: Region, t: int, cap: Optional[int] = None, workers: int = DEFAULT_WORKERS
) -> RegionDistribution:
    """The whole exact P_t on A^R"""
    check_prior_query(split, region, t)
    return pushforward(split.initial_spec(), rule, t, region, cap, workers)


def integer_code_length(t: int) -> int:
    """Length of the Elias-gamma code of t+1; sum over t of 2^-length is 1"""
    if t < 0:
        raise ValueError("code lengths are defined for non-negative integers")
    return 2 * (t + 1).bit_length() - 1


def elias_gamma_code(t: int) -> str:
    if t < 0:
        raise ValueError("code words are defined for non-negative integers")
    binary = format(t + 1, "b")
    return "0" * (len(binary) - 1) + binary


class TimeAveragedPrior(BaseModel):
    value: float
    terms: list[float]
    t_max: int
    approximate: bool = True


def time_averaged_prior(
    rule: Rule, split: SplitSpec, target: Configuration, t_max: int, cap: Optional[int] = None, workers: int = DEFAULT_WORKERS
) -> TimeAveragedPrior:
    """Sum over t <= t_max of P_t(c) * 2^-length(t), a truncated time-independent prior"""
    check_prior_query(split, target.region, t_max)
    terms = [
        physical_prior(PriorQuery(rule=rule, split=split, target=target, time=t, cap=cap, workers=workers))
        for t in range(t_max + 1)
    ]
    value = sum(p * 2.0 ** -integer_code_length(t) for t, p in enumerate(terms))
    return TimeAveragedPrior(value=value, terms=terms, t_max=t_max)


# Minimal robust programs

def _minimal_mask(success: np.ndarray, width: int, alphabet: int, candidates: Sequence[int], max_size: int):
    """Smallest set of pinned positions (then first positions, then lowest values) whose
    pinning makes `success` true for every assignment of the remaining positions.

    `success` holds one flag per assignment code of `width` cells, first cell most
    significant. Returns (positions, code of the pinned values) or None, plus the number
    of masks tried.
    """
    table = np.asarray(success, dtype=bool).reshape((alphabet,) * width)
    tried = 0
    for size in range(min(max_size, len(candidates)) + 1):
        for combo in itertools.combinations(candidates, size):
            tried += 1
            others = tuple(i for i in range(width) if i not in combo)
            reduced = np.all(table, axis=others) if others else table
            hits = np.flatnonzero(np.ravel(reduced))
            if hits.size:
                return (combo, int(hits[0])), tried
    return None, tried


def _enumerated_batch(geometry: Geometry, fixed: Optional[Configuration], quantified: Sequence[Region], cap: Optional[int]) -> np.ndarray:
    """Full torus states for every assignment of the quantified cells, first region most significant"""
    a = geometry.alphabet
    cells = [cell for region in quantified for cell in region.cells]
    total = a ** len(cells)
    limit = get_enumeration_cap(cap)
    if total > limit:
        raise CapExceeded(f"re-verification needs {total} states, cap is {limit}")
    base = np.zeros(geometry.cell_count, dtype=np.uint8)
    if fixed is not None and len(fixed):
        base[fixed.region.flat_indices()] = fixed.symbols
    batch = np.tile(base, (total, 1))
    if cells:
        index = np.ravel_multi_index(tuple(np.array(cells, dtype=np.int64).T), geometry.sides)
        batch[:, index] = assignment_digits(0, total, len(cells), a)
    return batch


class MapTarget(BaseModel):
    """A map on A^R, output code per input code"""

    model_config = ConfigDict(frozen=True)

    region: Region
    mapping: tuple[int, ...]

    @model_validator(mode="after")
    def _check_mapping(self):
        size = self.region.geometry.alphabet ** len(self.region)
        if len(self.mapping) != size or any(c < 0 or c >= size for c in self.mapping):
            raise ValueError(f"map needs {size} entries inside A^R")
        return self


class ComplexityCertificate(BaseModel):
    model_config = ConfigDict(frozen=True)

    rule: Rule
    split: SplitSpec
    region: Region
    target: Optional[Configuration] = None
    mapping: Optional[tuple[int, ...]] = None
    program: Configuration
    time: int
    value: float
    code_length: int
    verification_digest: str = ""

    def expected_outputs(self, initial_codes: np.ndarray) -> np.ndarray:
        if self.mapping is not None:
            return np.asarray(self.mapping, dtype=np.int64)[initial_codes]
        return np.full(len(initial_codes), self.target.code(), dtype=np.int64)


def verify_complexity_certificate(cert: ComplexityCertificate, cap: Optional[int] = None) -> CertificateCheck:
    """Re-simulate every hot assignment of the influence cone and R outside the program, L- zero"""
    geometry = cert.region.geometry
    a = geometry.alphabet
    cone = influence_cone(cert.rule, cert.region, cert.time).union(cert.region)
    quantified = cert.split.hot_part(cone).difference(cert.program.region)
    batch = _enumerated_batch(geometry, cert.program, [quantified], cap)
    total = len(batch)
    index = cert.region.flat_indices()
    initial_codes = row_codes(batch[:, index], a)
    final = evolve_cells(cert.rule, batch.reshape((total,) + geometry.sides), cert.time)
    outputs = row_codes(final.reshape(total, -1)[:, index], a)
    payload = cert.model_dump(mode="json", exclude={"verification_digest"})
    h = hashlib.sha256(json.dumps(payload, sort_keys=True).encode())
    h.update(outputs.astype(np.int64).tobytes())
    passed = bool(np.array_equal(outputs, cert.expected_outputs(initial_codes)))
    return CertificateCheck(passed=passed, inputs_checked=total, digest=h.hexdigest())


ComplexityResult = Union[ComplexityCertificate, NotFoundWithinBounds]


def physical_complexity(
    rule: Rule,
    split: SplitSpec,
    target: Union[Configuration, MapTarget],
    max_time: int,
    window: Optional[Region] = None,
    max_program: Optional[int] = None,
    cap: Optional[int] = None,
    workers: int = DEFAULT_WORKERS,
) -> ComplexityResult:
    """Minimal |R_M| log2 a + length(t) over programs R_M in L+ that reach the target
    for every content of the rest of the hot half.

    Ties go to the smaller time, then the earlier program cells, then the lower program
    content. `window` restricts where program cells may sit.
    """
    region = target.region
    geometry = region.geometry
    a = geometry.alphabet
    check_geometry(rule, geometry)
    check_prior_query(split, region, max_time)
    limit = get_enumeration_cap(cap)
    mapping = np.asarray(target.mapping, dtype=np.int64) if isinstance(target, MapTarget) else None
    symbol_bits = math.log2(a)

    best: Optional[ComplexityCertificate] = None
    checked = 0
    for t in range(max_time + 1):
        length = integer_code_length(t)
        if best is not None and length >= best.value:
            break
        free = split.hot_part(influence_cone(rule, region, t).union(region))
        candidates = free.difference(region)
        if window is not None:
            candidates = candidates.intersection(window)
        budget = len(candidates) if max_program is None else min(max_program, len(candidates))
        if best is not None:
            budget = min(budget, math.floor((best.value - length) / symbol_bits - BOUND_TOLERANCE))
        if budget < 0:
            continue
        total = a ** len(free)
        if total > limit:
            raise CapExceeded(f"complexity search at t={t} needs {total} states, cap is {limit}")

        recorded = sweep(rule, geometry, [free], region, sorted({0, t}), workers=workers)
        outputs = row_codes(recorded[t], a)
        if mapping is None:
            success = outputs == target.code()
        else:
            success = outputs == mapping[row_codes(recorded[0], a)]
        positions = [free.position(cell) for cell in candidates.cells]
        found, tried = _minimal_mask(success, len(free), a, positions, budget)
        checked += tried
        if found is None:
            continue
        combo, code = found
        program = Configuration.from_code(Region(geometry=geometry, cells=[free.cells[i] for i in combo]), code)
        best = ComplexityCertificate(
            rule=rule,
            split=split,
            region=region,
            target=target if mapping is None else None,
            mapping=None if mapping is None else target.mapping,
            program=program,
            time=t,
            value=len(combo) * symbol_bits + length,
            code_length=length,
        )

    if best is None:
        logger.info("complexity: nothing found up to t=%d (%d masks)", max_time, checked)
        return NotFoundWithinBounds(
            kind="complexity",
            max_time=max_time,
            window=window.to_text() if window is not None else "hot",
            policy="enumerate",
            candidates_checked=checked,
        )
    check = verify_complexity_certificate(best, cap=max(limit, a ** len(split.hot_part(influence_cone(rule, region, best.time).union(region)))))
    if not check.passed:
        raise InvariantViolation(f"complexity certificate at t={best.time} failed re-verification")
    logger.info("complexity %.3f bits at t=%d with %d program cells", best.value, best.time, len(best.program))
    return best.model_copy(update={"verification_digest": check.digest})


class PriorBoundReport(BaseModel):
    complexity: float
    certificate: Optional[ComplexityCertificate] = None
    bound: float
    bound_time: Optional[int] = None
    priors: list[float]
    holds: bool


def check_complexity_prior_bound(
    rule: Rule,
    split: SplitSpec,
    target: Configuration,
    max_time: int,
    window: Optional[Region] = None,
    max_program: Optional[int] = None,
    cap: Optional[int] = None,
    workers: int = DEFAULT_WORKERS,
) -> PriorBoundReport:
    """C(c) >= min over t of -log2 P_t(c) + length(t)"""
    result = physical_complexity(rule, split, target, max_time, window, max_program, cap, workers)
    priors = [
        physical_prior(PriorQuery(rule=rule, split=split, target=target, time=t, cap=cap, workers=workers))
        for t in range(max_time + 1)
    ]
    sides = [bits(p) + integer_code_length(t) for t, p in enumerate(priors)]
    bound = min(sides)
    bound_time = sides.index(bound) if bound != IMPOSSIBLE else None
    certificate = result if isinstance(result, ComplexityCertificate) else None
    complexity = certificate.value if certificate is not None else IMPOSSIBLE
    return PriorBoundReport(
        complexity=complexity,
        certificate=certificate,
        bound=bound,
        bound_time=bound_time,
        priors=priors,
        holds=complexity >= bound - BOUND_TOLERANCE,
    )


def mutually_exclusive(first: Configuration, second: Configuration) -> bool:
    """True iff the two configurations disagree on some shared cell"""
    lookup = second.as_dict()
    return any(cell in lookup and lookup[cell] != symbol for cell, symbol in first.as_dict().items())


class KraftReport(BaseModel):
    total: float
    holds: bool
    complexities: list[Optional[float]]
    found: int


def kraft_check(
    rule: Rule,
    split: SplitSpec,
    members: Sequence[Configuration],
    max_time: int,
    window: Optional[Region] = None,
    max_program: Optional[int] = None,
    cap: Optional[int] = None,
    workers: int = DEFAULT_WORKERS,
) -> KraftReport:
    """Sum of 2^-C(c) over a family of mutually exclusive configurations; unfound members add 0"""
    for first, second in itertools.combinations(members, 2):
        if not mutually_exclusive(first, second):
            raise PreconditionError(f"{first.to_text()} and {second.to_text()} are not mutually exclusive")
    complexities = []
    for member in members:
        result = physical_complexity(rule, split, member, max_time, window, max_program, cap, workers)
        complexities.append(result.value if isinstance(result, ComplexityCertificate) else None)
    total = sum(2.0 ** -c for c in complexities if c is not None)
    return KraftReport(
        total=total,
        holds=total <= 1.0 + BOUND_TOLERANCE,
        complexities=complexities,
        found=sum(c is not None for c in complexities),
    )


# Free energy of repeated restoration

class CycleCostReport(BaseModel):
    config: Configuration
    tau: int
    repeats: int
    mode: Mode = "exact"
    free_energy: float
    lower_bound: Optional[float] = None
    single_free_energy: float
    averaged: Optional[float] = None
    tau_window: Optional[tuple[int, int]] = None


def _repeat_constraints(config: Configuration, tau: int, repeats: int):
    return [(j * tau, config) for j in range(repeats)]


def cycle_cost(
    rule: Rule,
    config: Configuration,
    tau: int,
    repeats: int,
    window: Optional[Region] = None,
    tau_window: Optional[tuple[int, int]] = None,
    mode: Mode = "exact",
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = DEFAULT_SEED,
    cap: Optional[int] = None,
    workers: int = DEFAULT_WORKERS,
) -> CycleCostReport:
    """-log2 mu(c at times 0, tau, ..., (k-1) tau).

    Monte-Carlo mode reports the point estimate plus a lower bound taken from the upper
    end of the Wilson interval. `tau_window` adds the average over tau0..tau1.
    """
    if tau < 1 or repeats < 1:
        raise ConfigError("cycle period and repeat count must be positive")
    geometry = config.geometry
    check_geometry(rule, geometry)
    constraints = _repeat_constraints(config, tau, repeats)
    lower = None
    if mode == "exact":
        value = joint_event_free_energy(rule, constraints, window, cap, workers)
    else:
        check_joint_light_cone(geometry, constraints)
        hits = sample_hits(rule, constraints, InitialSpec.uniform(geometry), samples, seed, workers)
        _, high = wilson_interval(hits, samples, CONFIDENCE_LEVEL)
        value = bits(hits / samples) if samples else IMPOSSIBLE
        lower = bits(high)

    averaged = None
    if tau_window is not None:
        first, last = tau_window
        if not 1 <= first <= last:
            raise ConfigError("tau window must satisfy 1 <= tau0 <= tau1")
        values = [
            joint_event_free_energy(rule, _repeat_constraints(config, s, repeats), window, cap, workers)
            for s in range(first, last + 1)
        ]
        averaged = IMPOSSIBLE if IMPOSSIBLE in values else sum(values) / len(values)

    return CycleCostReport(
        config=config,
        tau=tau,
        repeats=repeats,
        mode=mode,
        free_energy=value,
        lower_bound=lower,
        single_free_energy=free_energy(CylinderSet.single(config)),
        averaged=averaged,
        tau_window=tau_window,
    )


def cycle_sequence_cost(
    rule: Rule, sequence: Sequence[Configuration], repeats: int, cap: Optional[int] = None, workers: int = DEFAULT_WORKERS
) -> float:
    """Free energy of running the one-step cycle c_1 -> ... -> c_n -> c_1 `repeats` times"""
    if not sequence or repeats < 1:
        raise ConfigError("cycle needs at least one configuration and one repeat")
    region = sequence[0].region
    if any(c.region != region for c in sequence):
        raise CoverageError("cycle configurations must share a region")
    n = len(sequence)
    constraints = [(j, sequence[j % n]) for j in range(n * repeats)]
    return joint_event_free_energy(rule, constraints, cap=cap, workers=workers)


# Entropy influx

class TransferCertificate(BaseModel):
    """alpha_t(c_p, c)|_{R+x} = c for every c on R, whatever the rest of the cone holds"""

    model_config = ConfigDict(frozen=True)

    rule: Rule
    region: Region
    displacement: tuple[int, ...]
    program: Configuration
    time: int

    @property
    def destination(self) -> Region:
        return self.region.translate(self.displacement)


def _destination_columns(region: Region, destination: Region, displacement: tuple[int, ...]) -> list[int]:
    """Column of R+x holding the image of each cell of R, in R's canonical order"""
    geometry = region.geometry
    return [
        destination.position(geometry.wrap(tuple(c + v for c, v in zip(cell, displacement))))
        for cell in region.cells
    ]


def _check_transfer_geometry(rule: Rule, region: Region, displacement: tuple[int, ...], t: int) -> Region:
    geometry = region.geometry
    check_geometry(rule, geometry)
    destination = region.translate(displacement)
    if not region.isdisjoint(destination):
        raise PreconditionError("R and R+x overlap")
    check_light_cone(geometry, destination, t)
    return destination


def search_transfer(
    rule: Rule,
    region: Region,
    displacement,
    max_time: int,
    window: Optional[Region] = None,
    max_program: Optional[int] = None,
    cap: Optional[int] = None,
    workers: int = DEFAULT_WORKERS,
) -> Union[TransferCertificate, NotFoundWithinBounds]:
    """Earliest robust program moving the content of R to R+x.

    Order: time, program size, program cells, program content.
    """
    geometry = region.geometry
    a = geometry.alphabet
    displacement = geometry.vector(displacement)
    destination = _check_transfer_geometry(rule, region, displacement, max_time)
    columns = _destination_columns(region, destination, displacement)
    limit = get_enumeration_cap(cap)
    n_in = a ** len(region)
    inputs = np.arange(n_in, dtype=np.int64)
    checked = 0
    for t in range(max_time + 1):
        environment = influence_cone(rule, destination, t).difference(region)
        candidates = environment if window is None else environment.intersection(window)
        total = a ** len(environment) * n_in
        if total > limit:
            raise CapExceeded(f"transfer search at t={t} needs {total} states, cap is {limit}")
        observed = sweep(rule, geometry, [environment, region], destination, [t], workers=workers)[t]
        moved = row_codes(observed[:, columns], a).reshape(-1, n_in)
        success = np.all(moved == inputs[None, :], axis=1)
        positions = [environment.position(cell) for cell in candidates.cells]
        budget = len(positions) if max_program is None else max_program
        found, tried = _minimal_mask(success, len(environment), a, positions, budget)
        checked += tried
        if found is not None:
            combo, code = found
            program = Configuration.from_code(Region(geometry=geometry, cells=[environment.cells[i] for i in combo]), code)
            logger.info("transfer certificate at t=%d with %d program cells", t, len(program))
            return TransferCertificate(rule=rule, region=region, displacement=displacement, program=program, time=t)
    return NotFoundWithinBounds(
        kind="transfer",
        max_time=max_time,
        window=window.to_text() if window is not None else "cone",
        policy="enumerate",
        candidates_checked=checked,
    )


def verify_transfer(cert: TransferCertificate, cap: Optional[int] = None) -> bool:
    """Full torus re-simulation over every content of R and of the cone outside R and the program"""
    geometry = cert.region.geometry
    a = geometry.alphabet
    destination = _check_transfer_geometry(cert.rule, cert.region, cert.displacement, cert.time)
    if not cert.program.region.isdisjoint(cert.region):
        raise PreconditionError("transfer program overlaps R")
    rest = influence_cone(cert.rule, destination, cert.time).difference(cert.region).difference(cert.program.region)
    batch = _enumerated_batch(geometry, cert.program, [rest, cert.region], cap)
    total = len(batch)
    initial = row_codes(batch[:, cert.region.flat_indices()], a)
    final = evolve_cells(cert.rule, batch.reshape((total,) + geometry.sides), cert.time).reshape(total, -1)
    moved = final[:, destination.flat_indices()][:, _destination_columns(cert.region, destination, cert.displacement)]
    return bool(np.array_equal(row_codes(moved, a), initial))


class InfluxReport(BaseModel):
    transfer_verified: bool
    measured: float
    bound: float
    holds: Optional[bool] = None
    time: int
    program: str


def influx_bound(region_size: int, program_size: int, alphabet: int) -> float:
    """|R| / a^|R_p| * log2 a"""
    return region_size / alphabet ** program_size * math.log2(alphabet)


def entropy_influx_experiment(
    rule: Rule,
    region: Region,
    displacement,
    program: Configuration,
    t: int,
    window: Optional[Region] = None,
    initial: Optional[Configuration] = None,
    cap: Optional[int] = None,
    workers: int = DEFAULT_WORKERS,
) -> InfluxReport:
    """Entropy R gains by time t when it starts in a fixed content and everything else is uniform.

    The transfer (R_p, c_p, t) is verified first; the comparison with the bound is only
    made when it passes.
    """
    geometry = region.geometry
    cert = TransferCertificate(
        rule=rule, region=region, displacement=geometry.vector(displacement), program=program, time=t
    )
    verified = verify_transfer(cert, cap)
    initial = initial or Configuration.zeros(region)
    if initial.region != region:
        raise CoverageError("initial content must live on R")
    nu = InitialSpec(geometry=geometry, fixed=initial, window=window)
    measured = marginal_entropy(pushforward(nu, cert.rule, cert.time, region, cap, workers))
    bound = influx_bound(len(region), len(cert.program), geometry.alphabet)
    holds = measured >= bound - BOUND_TOLERANCE if verified else None
    logger.info("influx: measured %.4f bits, bound %.4f bits, transfer verified %s", measured, bound, verified)
    return InfluxReport(
        transfer_verified=verified,
        measured=measured,
        bound=bound,
        holds=holds,
        time=cert.time,
        program=cert.program.to_text(),
    )


# Mixing diagnostics

class MixingReport(BaseModel):
    terms: list[float]
    average: float
    product: float
    gap: float
    horizon: int
    order: int
    mode: Mode = "exact"


def weak_mixing_estimate(
    rule: Rule,
    first: CylinderSet,
    second: CylinderSet,
    horizon: int,
    extra: Sequence[CylinderSet] = (),
    mode: Mode = "exact",
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = DEFAULT_SEED,
    cap: Optional[int] = None,
    workers: int = DEFAULT_WORKERS,
) -> MixingReport:
    """Cesaro average over j < horizon of mu(D, B at time j, E_i at time (i+2) j) against the product of the measures.

    `first` is B and `second` is D; `extra` gives the higher-order sets E_i.
    """
    if horizon < 1:
        raise ConfigError("mixing horizon must be positive")
    geometry = second.geometry
    check_geometry(rule, geometry)
    terms = []
    for j in range(horizon):
        constraints = [(0, second), (j, first)] + [((i + 2) * j, e) for i, e in enumerate(extra)]
        if mode == "exact":
            terms.append(joint_probability(rule, constraints, cap=cap, workers=workers))
        else:
            check_joint_light_cone(geometry, constraints)
            hits = sample_hits(rule, constraints, InitialSpec.uniform(geometry), samples, seed, workers)
            terms.append(hits / samples)
    product = cylinder_measure(first) * cylinder_measure(second)
    for e in extra:
        product *= cylinder_measure(e)
    average = sum(terms) / horizon
    return MixingReport(
        terms=terms,
        average=average,
        product=product,
        gap=abs(average - product),
        horizon=horizon,
        order=2 + len(extra),
        mode=mode,
    )
