# Certificate searches for state preparation and maps, plus stability probes

import hashlib
import itertools
import json
import logging
from typing import Callable, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from config import DEFAULT_SEED, DEFAULT_WORKERS, get_enumeration_cap
from engine import Rule, assignment_digits, check_geometry, evolve_cells, influence_cone, row_codes, shard_rng, sweep
from errors import CapExceeded, ConfigError, InvariantViolation, LightConeViolation, PreconditionError
from lattice import Configuration, Geometry, Region, light_cone_valid, moore_neighborhood

logger = logging.getLogger(__name__)

Policy = Literal["zero", "enumerate"]
CertificateKind = Literal["cond-prep", "uncond-prep", "map"]


class SearchMode(BaseModel):
    """Exhaustive search, or seeded sampling of programs once exhaustive search would pass the cap"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["exhaustive", "sampled"] = "exhaustive"
    samples: int = 10_000
    seed: int = DEFAULT_SEED


class _SearchTask(BaseModel):
    model_config = ConfigDict(frozen=True)

    rule: Rule
    region: Region
    max_time: int
    window: Region
    policy: Policy = "zero"
    mode: SearchMode = SearchMode()
    cap: Optional[int] = None
    workers: int = DEFAULT_WORKERS

    @model_validator(mode="after")
    def _check_window(self):
        if self.window.geometry != self.region.geometry:
            raise ValueError("window and region live on different tori")
        if not self.window.isdisjoint(self.region):
            raise ValueError("search window overlaps the target region")
        if self.max_time < 0:
            raise ValueError("max_time must be non-negative")
        return self

    @property
    def geometry(self) -> Geometry:
        return self.region.geometry


class PreparationTask(_SearchTask):
    """Prepare `target` on R; `initial` None means every initial content of R"""

    initial: Optional[Configuration] = None
    target: Configuration

    @model_validator(mode="after")
    def _check_configs(self):
        if self.target.region != self.region:
            raise ValueError("target must live on the task region")
        if self.initial is not None and self.initial.region != self.region:
            raise ValueError("initial configuration must live on the task region")
        return self


class BijectionTask(_SearchTask):
    """Implement the map pi on A^R, given as output codes indexed by input code"""

    mapping: tuple[int, ...]

    @model_validator(mode="after")
    def _check_mapping(self):
        size = self.geometry.alphabet ** len(self.region)
        if len(self.mapping) != size:
            raise ValueError(f"map needs {size} entries, got {len(self.mapping)}")
        if any(c < 0 or c >= size for c in self.mapping):
            raise ValueError("map output outside A^R")
        return self

    @property
    def bijective(self) -> bool:
        return len(set(self.mapping)) == len(self.mapping)


class Certificate(BaseModel):
    """Program region and content plus a time; re-verified by simulation when built"""

    model_config = ConfigDict(frozen=True)

    kind: CertificateKind
    rule: Rule
    region: Region
    program: Configuration
    time: int
    policy: Policy = "zero"
    initial: Optional[Configuration] = None
    target: Optional[Configuration] = None
    mapping: Optional[tuple[int, ...]] = None
    verification_digest: str = ""

    def expected_outputs(self) -> np.ndarray:
        """Required output code per input code of R (one entry for conditional preparation)"""
        if self.kind == "map":
            return np.asarray(self.mapping, dtype=np.int64)
        if self.kind == "cond-prep":
            return np.asarray([self.target.code()], dtype=np.int64)
        size = self.region.geometry.alphabet ** len(self.region)
        return np.full(size, self.target.code(), dtype=np.int64)


class NotFoundWithinBounds(BaseModel):
    """No certificate inside the searched bounds; this is not a disproof"""

    kind: str
    max_time: int
    window: str
    policy: Policy
    candidates_checked: int
    sampled: bool = False


class CertificateCheck(BaseModel):
    passed: bool
    inputs_checked: int
    digest: str


SearchResult = Union[Certificate, NotFoundWithinBounds]


# Verification

def _fill(batch: np.ndarray, region: Region, rows: np.ndarray) -> None:
    if len(region):
        batch[:, region.flat_indices()] = rows


def certificate_digest(cert: Certificate) -> str:
    """sha256 over the certificate's canonical fields"""
    payload = cert.model_dump(mode="json", exclude={"verification_digest"})
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def verify_certificate(cert: Certificate, cap: Optional[int] = None) -> CertificateCheck:
    """Re-simulate full torus states for every quantified input and compare with the target.

    Inputs are all contents of R (unless conditional) and, under the enumerate policy,
    every assignment of the influence cone outside R and the program. Everything else
    is zero.
    """
    geometry = cert.region.geometry
    a = geometry.alphabet
    quantified = Region(geometry=geometry)
    if cert.policy == "enumerate":
        cone = influence_cone(cert.rule, cert.region, cert.time)
        quantified = cone.difference(cert.region).difference(cert.program.region)
    inputs = cert.region if cert.kind != "cond-prep" else Region(geometry=geometry)
    n_env, n_in = a ** len(quantified), a ** len(inputs)
    total = n_env * n_in
    limit = get_enumeration_cap(cap)
    if total > limit:
        raise CapExceeded(f"certificate re-verification needs {total} states, cap is {limit}")

    base = np.zeros(geometry.cell_count, dtype=np.uint8)
    if len(cert.program):
        base[cert.program.region.flat_indices()] = cert.program.symbols
    if cert.kind == "cond-prep":
        base[cert.region.flat_indices()] = cert.initial.symbols
    batch = np.tile(base, (total, 1))
    _fill(batch, quantified, np.repeat(assignment_digits(0, n_env, len(quantified), a), n_in, axis=0))
    _fill(batch, inputs, np.tile(assignment_digits(0, n_in, len(inputs), a), (n_env, 1)))

    final = evolve_cells(cert.rule, batch.reshape((total,) + geometry.sides), cert.time)
    outputs = row_codes(final.reshape(total, -1)[:, cert.region.flat_indices()], a)
    expected = np.tile(cert.expected_outputs(), n_env)
    h = hashlib.sha256(certificate_digest(cert).encode())
    h.update(outputs.astype(np.int64).tobytes())
    return CertificateCheck(passed=bool(np.array_equal(outputs, expected)), inputs_checked=total, digest=h.hexdigest())


# Search core

def _successful_programs(
    task: _SearchTask,
    program: Region,
    quantified: Region,
    t: int,
    initial: Optional[Configuration],
    expected: np.ndarray,
    program_rows: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, int]:
    """Program codes (ascending) that reach `expected` for every quantified assignment"""
    geometry = task.geometry
    a = geometry.alphabet
    inputs = task.region if initial is None else Region(geometry=geometry)
    n_env, n_in = a ** len(quantified), a ** len(inputs)
    if program_rows is None:
        n_prog = a ** len(program)
        observed = sweep(task.rule, geometry, [program, quantified, inputs], task.region, [t], fixed=initial, workers=task.workers)[t]
        program_codes = np.arange(n_prog, dtype=np.int64)
    else:
        n_prog = len(program_rows)
        rest = assignment_digits(0, n_env * n_in, len(quantified) + len(inputs), a)
        rows = np.concatenate(
            [np.repeat(program_rows, len(rest), axis=0), np.tile(rest, (n_prog, 1))], axis=1
        )
        observed = sweep(task.rule, geometry, [program, quantified, inputs], task.region, [t], fixed=initial, assignments=rows, workers=task.workers)[t]
        program_codes = row_codes(program_rows, a)
    codes = row_codes(observed, a).reshape(n_prog, n_env, n_in)
    ok = np.all(codes == expected[None, None, :], axis=(1, 2))
    return np.unique(program_codes[ok]), n_prog


def _program_candidates(task: _SearchTask, candidates: Region):
    geometry = task.geometry
    if task.policy == "zero":
        yield candidates
        return
    for size in range(len(candidates) + 1):
        for combo in itertools.combinations(candidates.cells, size):
            yield Region(geometry=geometry, cells=list(combo))


def _search(
    task: _SearchTask,
    kind: CertificateKind,
    initial: Optional[Configuration],
    expected: np.ndarray,
    build: Callable[[Configuration, int], Certificate],
) -> SearchResult:
    geometry = task.geometry
    check_geometry(task.rule, geometry)
    if not light_cone_valid(geometry, task.region, task.max_time):
        raise LightConeViolation(f"max_time {task.max_time} wraps the light cone of {task.region.to_text()}")
    if task.policy == "enumerate" and task.mode.kind == "sampled":
        raise ConfigError("sampled search only supports the zero background policy")

    a = geometry.alphabet
    limit = get_enumeration_cap(task.cap)
    n_in = a ** len(task.region) if initial is None else 1
    checked = 0
    sampled = False
    for t in range(task.max_time + 1):
        cone = influence_cone(task.rule, task.region, t)
        env_cone = cone.difference(task.region)
        candidates = env_cone.intersection(task.window)
        for program in _program_candidates(task, candidates):
            quantified = env_cone.difference(program) if task.policy == "enumerate" else Region(geometry=geometry)
            total = a ** len(program) * a ** len(quantified) * n_in
            program_rows = None
            if total > limit:
                if task.mode.kind != "sampled":
                    raise CapExceeded(f"search at t={t} needs {total} simulations, cap is {limit}")
                sampled = True
                program_rows = shard_rng(task.mode.seed, t).integers(
                    0, a, size=(task.mode.samples, len(program)), dtype=np.uint8
                )
            found, tried = _successful_programs(task, program, quantified, t, initial, expected, program_rows)
            checked += tried
            if found.size:
                cert = build(Configuration.from_code(program, int(found[0])), t)
                check = verify_certificate(cert, cap=max(limit, a ** len(quantified) * n_in))
                if not check.passed:
                    raise InvariantViolation(f"{kind} certificate at t={t} failed re-verification")
                logger.info("%s certificate found at t=%d with %d program cells", kind, t, len(program))
                return cert.model_copy(update={"verification_digest": check.digest})
    logger.info("%s: nothing found up to t=%d (%d candidates)", kind, task.max_time, checked)
    return NotFoundWithinBounds(
        kind=kind,
        max_time=task.max_time,
        window=task.window.to_text(),
        policy=task.policy,
        candidates_checked=checked,
        sampled=sampled,
    )


def search_conditional_prep(task: PreparationTask) -> SearchResult:
    """Minimal (t, program) with alpha_t(e, c_i)|R = c_f"""
    if task.initial is None:
        raise ConfigError("conditional preparation needs an initial configuration")

    def build(program: Configuration, t: int) -> Certificate:
        return Certificate(
            kind="cond-prep", rule=task.rule, region=task.region, program=program, time=t,
            policy=task.policy, initial=task.initial, target=task.target,
        )

    return _search(task, "cond-prep", task.initial, np.asarray([task.target.code()], dtype=np.int64), build)


def search_unconditional_prep(task: PreparationTask) -> SearchResult:
    """Minimal (t, program) with alpha_t(e, c)|R = c_f for every c on R"""
    size = task.geometry.alphabet ** len(task.region)

    def build(program: Configuration, t: int) -> Certificate:
        return Certificate(
            kind="uncond-prep", rule=task.rule, region=task.region, program=program, time=t,
            policy=task.policy, target=task.target,
        )

    return _search(task, "uncond-prep", None, np.full(size, task.target.code(), dtype=np.int64), build)


def search_map(task: BijectionTask) -> SearchResult:
    """Minimal (t, program) whose induced map on R equals pi"""

    def build(program: Configuration, t: int) -> Certificate:
        return Certificate(
            kind="map", rule=task.rule, region=task.region, program=program, time=t,
            policy=task.policy, mapping=task.mapping,
        )

    return _search(task, "map", None, np.asarray(task.mapping, dtype=np.int64), build)


# Map builders

def pi_table_from_text(region: Region, text: str) -> tuple[int, ...]:
    """Parse 'input output' lines (symbol strings, '#' comments) into a total table"""
    size = region.geometry.alphabet ** len(region)
    table: dict[int, int] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError(f"map line {number}: expected 'input output'")
        try:
            source = Configuration.of(region, parts[0]).code()
            image = Configuration.of(region, parts[1]).code()
        except ValueError as e:
            raise ConfigError(f"map line {number}: {e}")
        if source in table:
            raise ConfigError(f"map line {number}: input {parts[0]} listed twice")
        table[source] = image
    if len(table) != size:
        raise ConfigError(f"map covers {len(table)} of {size} inputs")
    return tuple(table[c] for c in range(size))


def map_from_function(region: Region, fn: Callable[[Configuration], Configuration]) -> tuple[int, ...]:
    size = region.geometry.alphabet ** len(region)
    return tuple(fn(Configuration.from_code(region, c)).code() for c in range(size))


def swap_map(region: Region, first: list, second: list) -> tuple[int, ...]:
    """Exchange the symbols of two equally sized cell lists inside R"""
    geometry = region.geometry
    first = [geometry.wrap(c) for c in first]
    second = [geometry.wrap(c) for c in second]
    if len(first) != len(second) or not set(first + second) <= set(region.cells):
        raise ConfigError("swap needs two equally sized cell lists inside the region")
    pairing = dict(zip(first, second)) | dict(zip(second, first))

    def swapped(config: Configuration) -> Configuration:
        lookup = config.as_dict()
        return Configuration.from_cells(geometry, {cell: lookup[pairing.get(cell, cell)] for cell in region.cells})

    return map_from_function(region, swapped)


def complement_map(region: Region) -> tuple[int, ...]:
    a = region.geometry.alphabet
    return map_from_function(region, lambda c: Configuration.of(region, [a - 1 - s for s in c.symbols]))


def identity_map(region: Region) -> tuple[int, ...]:
    return tuple(range(region.geometry.alphabet ** len(region)))


# Stability probes

def instability_witness(rule: Rule, region: Region, cell, cap: Optional[int] = None) -> Optional[Configuration]:
    """Lexicographically first c on R whose designated cell changes after one step, whatever lies outside R"""
    geometry = region.geometry
    check_geometry(rule, geometry)
    x = Region.of(geometry, [cell])
    if not moore_neighborhood(x, 1).issubset(region):
        raise PreconditionError("region must contain the radius-1 neighborhood of the designated cell")
    total = geometry.alphabet ** len(region)
    limit = get_enumeration_cap(cap)
    if total > limit:
        raise CapExceeded(f"instability scan needs {total} configurations, cap is {limit}")
    after = sweep(rule, geometry, [region], x, [1])[1][:, 0]
    before = assignment_digits(0, total, len(region), geometry.alphabet)[:, region.position(cell)]
    changed = np.flatnonzero(after != before)
    if not changed.size:
        return None
    return Configuration.from_code(region, int(changed[0]))


class PersistenceReport(BaseModel):
    held: bool
    horizon: int
    deviation_time: Optional[int] = None
    witness: Optional[Configuration] = None
    exhaustive_steps: list[int] = []
    sampled_steps: list[int] = []


def persistence_probe(
    rule: Rule,
    region: Region,
    program: Configuration,
    target: Configuration,
    horizon: int,
    initial: Optional[Configuration] = None,
    samples: int = 10_000,
    seed: int = DEFAULT_SEED,
    cap: Optional[int] = None,
) -> PersistenceReport:
    """Earliest t <= horizon at which some environment pushes R away from c_f.

    R starts in `initial` (default c_f) and the program region in its program. For each
    t the free frontier is the influence cone of R outside R and the program; it is
    enumerated in lexicographic order, or sampled once it exceeds the cap. A report
    that held for the full horizon is inconclusive.
    """
    geometry = region.geometry
    check_geometry(rule, geometry)
    if not region.isdisjoint(program.region):
        raise PreconditionError("program region overlaps R")
    if not light_cone_valid(geometry, region, horizon):
        raise LightConeViolation(f"horizon {horizon} wraps the light cone of {region.to_text()}")
    initial = initial or target
    a = geometry.alphabet
    limit = get_enumeration_cap(cap)
    fixed = initial.merge(program)
    if initial.code() != target.code():
        return PersistenceReport(held=False, horizon=horizon, deviation_time=0, witness=Configuration.zeros(Region(geometry=geometry)))

    exhaustive, sampled = [], []
    for t in range(1, horizon + 1):
        frontier = influence_cone(rule, region, t).difference(region).difference(program.region)
        total = a ** len(frontier)
        if total <= limit:
            observed = sweep(rule, geometry, [frontier], region, [t], fixed=fixed)[t]
            rows = None
            exhaustive.append(t)
        else:
            rows = shard_rng(seed, t).integers(0, a, size=(samples, len(frontier)), dtype=np.uint8)
            observed = sweep(rule, geometry, [frontier], region, [t], fixed=fixed, assignments=rows)[t]
            sampled.append(t)
        failing = np.flatnonzero(row_codes(observed, a) != target.code())
        if failing.size:
            if rows is None:
                code = int(failing[0])
            else:
                code = int(row_codes(rows[failing], a).min())
            witness = Configuration.from_code(frontier, code)
            return PersistenceReport(
                held=False, horizon=horizon, deviation_time=t, witness=witness,
                exhaustive_steps=exhaustive, sampled_steps=sampled,
            )
    return PersistenceReport(held=True, horizon=horizon, exhaustive_steps=exhaustive, sampled_steps=sampled)
