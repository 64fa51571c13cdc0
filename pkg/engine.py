# Reversible rule families, exact evolution and structural verifiers

import itertools
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Annotated, Literal, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator, model_validator

from config import (
    BUNDLED_RULES,
    DEFAULT_SEED,
    DEFAULT_WORKERS,
    EXHAUSTIVE_STATE_CAP,
    MC_SHARD_SIZE,
    SWEEP_CHUNK_CELLS,
)
from errors import CapExceeded, ConfigError, CoverageError, GeometryError, LightConeViolation, PreconditionError
from lattice import Configuration, FullState, Geometry, Region, light_cone_valid

logger = logging.getLogger(__name__)

FORWARD = "forward"
BACKWARD = "backward"
Direction = Literal["forward", "backward"]


def neighborhood_offsets(dimension: int) -> list[tuple[int, ...]]:
    """Radius-1 offsets in table order: lexicographic, first offset most significant"""
    return list(itertools.product((-1, 0, 1), repeat=dimension))


def _varies_along(table: np.ndarray, axis: int) -> bool:
    return not np.all(table == table.take([0], axis=axis))


# Rule families

class ShiftRule(BaseModel):
    """Bernoulli shift: every symbol moves by `vector` each step"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: Literal["shift"] = "shift"
    name: str = "shift"
    vector: tuple[int, ...]
    alphabet: Optional[int] = None

    @field_validator("vector")
    @classmethod
    def _check_vector(cls, vector: tuple[int, ...]) -> tuple[int, ...]:
        if not vector:
            raise ValueError("shift vector needs at least one coordinate")
        if any(abs(v) > 1 for v in vector):
            raise ValueError("shift vector must stay inside the radius-1 neighborhood")
        return vector

    @property
    def dimension(self) -> int:
        return len(self.vector)

    @property
    def time_period(self) -> int:
        return 1

    @property
    def covariance_step(self) -> int:
        return 1


class TableRule(BaseModel):
    """Radius-1 lookup table with an explicit inverse table"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: Literal["table"] = "table"
    name: str = "table"
    dimension: int = 1
    alphabet: int = 2
    forward: tuple[int, ...]
    backward: tuple[int, ...]

    @model_validator(mode="after")
    def _check_tables(self) -> "TableRule":
        if self.dimension < 1 or self.alphabet < 2:
            raise ValueError("table rule needs dimension >= 1 and alphabet >= 2")
        size = self.alphabet ** (3 ** self.dimension)
        if size > EXHAUSTIVE_STATE_CAP:
            raise ValueError("local table too large")
        for label, table in (("forward", self.forward), ("backward", self.backward)):
            if len(table) != size:
                raise ValueError(f"{label} table needs {size} entries, got {len(table)}")
            if any(s < 0 or s >= self.alphabet for s in table):
                raise ValueError(f"{label} table has a symbol outside the alphabet")
        return self

    @property
    def time_period(self) -> int:
        return 1

    @property
    def covariance_step(self) -> int:
        return 1


class MargolusRule(BaseModel):
    """Block rule on 2^d-cell blocks whose partition alternates with the time parity"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: Literal["margolus"] = "margolus"
    name: str = "margolus"
    dimension: int = 2
    alphabet: int = 2
    block_map: tuple[int, ...]
    parity_offsets: tuple[int, int] = (0, 1)

    @model_validator(mode="after")
    def _check_permutation(self) -> "MargolusRule":
        size = self.alphabet ** (2 ** self.dimension)
        if len(self.block_map) != size:
            raise ValueError(f"block map needs {size} entries, got {len(self.block_map)}")
        if sorted(self.block_map) != list(range(size)):
            raise ValueError("block map is not a permutation of the block states")
        if any(o not in (0, 1) for o in self.parity_offsets):
            raise ValueError("parity offsets must be 0 or 1")
        return self

    @property
    def block_size(self) -> int:
        return 2 ** self.dimension

    def inverse_map(self) -> tuple[int, ...]:
        inverse = [0] * len(self.block_map)
        for source, image in enumerate(self.block_map):
            inverse[image] = source
        return tuple(inverse)

    def offset_for_step(self, phase: int) -> int:
        return self.parity_offsets[phase % 2]

    @property
    def time_period(self) -> int:
        return 2

    @property
    def covariance_step(self) -> int:
        return 2


class SecondOrderRule(BaseModel):
    """Second-order rule p' = f(N(p)) - q, q' = p, packed into symbol p + base*q"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    family: Literal["second_order"] = "second_order"
    name: str = "second-order"
    dimension: int = 1
    base: int = 2
    local_table: tuple[int, ...]

    @model_validator(mode="after")
    def _check_table(self) -> "SecondOrderRule":
        size = self.base ** (3 ** self.dimension)
        if self.base < 2 or size > EXHAUSTIVE_STATE_CAP:
            raise ValueError("unsupported base or dimension")
        if len(self.local_table) != size:
            raise ValueError(f"local table needs {size} entries, got {len(self.local_table)}")
        if any(s < 0 or s >= self.base for s in self.local_table):
            raise ValueError("local table has a value outside the base alphabet")
        return self

    @property
    def alphabet(self) -> int:
        return self.base * self.base

    @property
    def time_period(self) -> int:
        return 1

    @property
    def covariance_step(self) -> int:
        return 1


Rule = Annotated[
    Union[ShiftRule, TableRule, MargolusRule, SecondOrderRule],
    Field(discriminator="family"),
]
_rule_adapter = TypeAdapter(Rule)


class InducedMap(BaseModel):
    """Table of alpha_t(env, c)|target for every c on `region`, indexed by input code"""

    model_config = ConfigDict(frozen=True)

    region: Region
    target: Region
    time: int
    environment: Configuration
    table: tuple[int, ...]

    @model_validator(mode="after")
    def _check_size(self) -> "InducedMap":
        expected = self.region.geometry.alphabet ** len(self.region)
        if len(self.table) != expected:
            raise ValueError(f"induced map needs {expected} entries, got {len(self.table)}")
        return self

    def apply(self, config: Configuration) -> Configuration:
        return Configuration.from_code(self.target, self.table[config.code()])

    def is_bijective(self) -> bool:
        return len(self.region) == len(self.target) and len(set(self.table)) == len(self.table)


class ReversibilityReport(BaseModel):
    passed: bool
    mode: str
    states_checked: int
    counterexample: Optional[str] = None
    collision: Optional[tuple[str, str]] = None
    phase: Optional[int] = None


class CovarianceReport(BaseModel):
    passed: bool
    vector: tuple[int, ...]
    mode: str
    states_checked: int
    counterexample: Optional[str] = None

    def __bool__(self) -> bool:
        return self.passed


# Loading and builders

def get_bundled_rule(name: str) -> dict:
    """Get a bundled rule description by name"""
    description = next((rule for rule in BUNDLED_RULES if rule["name"] == name), None)
    if description is None:
        raise ConfigError(f"unknown bundled rule '{name}'")
    return description


def load_rule(reference) -> Rule:
    """Load a rule from a bundled name, a JSON rule file path, a dict, or pass a rule through"""
    if isinstance(reference, (ShiftRule, TableRule, MargolusRule, SecondOrderRule)):
        return reference
    if isinstance(reference, str):
        if os.path.exists(reference):
            try:
                with open(reference) as f:
                    reference = json.load(f)
            except (OSError, json.JSONDecodeError) as e:
                raise ConfigError(f"cannot read rule file {reference}: {e}")
        else:
            reference = get_bundled_rule(reference)
    if not isinstance(reference, dict):
        raise ConfigError("rule reference must be a name, a file path or an object")
    try:
        return _rule_adapter.validate_python(reference)
    except ValidationError as e:
        raise ConfigError(f"invalid rule description: {e.errors()[0]['msg']}")


def shift_rule(vector, alphabet: Optional[int] = None, name: str = "shift") -> ShiftRule:
    if isinstance(vector, int):
        vector = (vector,)
    return ShiftRule(vector=tuple(vector), alphabet=alphabet, name=name)


def table_rule_from_function(fn, dimension: int = 1, alphabet: int = 2, inverse_fn=None, name: str = "table") -> TableRule:
    """Tabulate fn(neighborhood tuple) in table order; the inverse defaults to fn itself"""
    inverse_fn = inverse_fn or fn
    neighborhoods = list(itertools.product(range(alphabet), repeat=3 ** dimension))
    return TableRule(
        name=name,
        dimension=dimension,
        alphabet=alphabet,
        forward=tuple(int(fn(n)) for n in neighborhoods),
        backward=tuple(int(inverse_fn(n)) for n in neighborhoods),
    )


def identity_rule(dimension: int = 1, alphabet: int = 2) -> TableRule:
    center = (3 ** dimension) // 2
    return table_rule_from_function(lambda n: n[center], dimension, alphabet, name="identity")


def rule_label(rule: Rule) -> str:
    return f"{rule.family}:{rule.name}"


def check_geometry(rule: Rule, geometry: Geometry) -> None:
    """Raise GeometryError unless the rule can run on the torus"""
    if rule.dimension != geometry.dimension:
        raise GeometryError(f"rule '{rule.name}' is {rule.dimension}D but the torus is {geometry.dimension}D")
    if rule.alphabet is not None and rule.alphabet != geometry.alphabet:
        raise GeometryError(f"rule '{rule.name}' needs alphabet {rule.alphabet}, torus has {geometry.alphabet}")
    if isinstance(rule, MargolusRule) and any(n % 2 for n in geometry.sides):
        raise GeometryError("block rules need even side lengths")


# Batched stepping on arrays of shape (batch, *sides)

def _neighborhood_index(cells: np.ndarray, dimension: int, base: int) -> np.ndarray:
    spatial = tuple(range(1, dimension + 1))
    index = np.zeros(cells.shape, dtype=np.int64)
    for offset in neighborhood_offsets(dimension):
        index = index * base + np.roll(cells, shift=tuple(-o for o in offset), axis=spatial)
    return index


def _apply_blocks(cells: np.ndarray, block_map: np.ndarray, offset: int, alphabet: int, dimension: int) -> np.ndarray:
    spatial = tuple(range(1, dimension + 1))
    batch, sides = cells.shape[0], cells.shape[1:]
    shifted = np.roll(cells, shift=(-offset,) * dimension, axis=spatial)
    split = [batch] + [x for n in sides for x in (n // 2, 2)]
    order = [0] + [1 + 2 * i for i in range(dimension)] + [2 + 2 * i for i in range(dimension)]
    blocks = shifted.reshape(split).transpose(order)
    outer = blocks.shape[: dimension + 1]
    size = 2 ** dimension
    weights = alphabet ** np.arange(size - 1, -1, -1, dtype=np.int64)
    codes = blocks.reshape(outer + (size,)).astype(np.int64) @ weights
    images = block_map[codes]
    digits = ((images[..., None] // weights) % alphabet).astype(np.uint8)
    restored = digits.reshape(outer + (2,) * dimension).transpose(np.argsort(order)).reshape(cells.shape)
    return np.roll(restored, shift=(offset,) * dimension, axis=spatial)


def step_cells(rule: Rule, cells: np.ndarray, phase: int, direction: Direction = FORWARD) -> np.ndarray:
    """One step on a batch of torus arrays; `phase` is the time parity before the step"""
    forward = direction == FORWARD
    spatial = tuple(range(1, rule.dimension + 1))

    if isinstance(rule, ShiftRule):
        vector = rule.vector if forward else tuple(-v for v in rule.vector)
        return np.roll(cells, shift=vector, axis=spatial)

    if isinstance(rule, TableRule):
        table = np.asarray(rule.forward if forward else rule.backward, dtype=np.uint8)
        return table[_neighborhood_index(cells, rule.dimension, rule.alphabet)]

    if isinstance(rule, MargolusRule):
        if forward:
            block_map, offset = rule.block_map, rule.offset_for_step(phase)
        else:
            block_map, offset = rule.inverse_map(), rule.offset_for_step(phase - 1)
        return _apply_blocks(cells, np.asarray(block_map, dtype=np.int64), offset, rule.alphabet, rule.dimension)

    # second order
    b = rule.base
    table = np.asarray(rule.local_table, dtype=np.int64)
    present, previous = cells % b, cells // b
    if forward:
        new_present = (table[_neighborhood_index(present, rule.dimension, b)] - previous) % b
        new_previous = present
    else:
        new_present = previous
        new_previous = (table[_neighborhood_index(previous, rule.dimension, b)] - present) % b
    return (new_present + b * new_previous).astype(np.uint8)


def evolve_cells(rule: Rule, cells: np.ndarray, t: int, phase: int = 0) -> np.ndarray:
    """Apply |t| steps to a batch; backward when t < 0"""
    if isinstance(rule, ShiftRule):
        spatial = tuple(range(1, rule.dimension + 1))
        return np.roll(cells, shift=tuple(v * t for v in rule.vector), axis=spatial)
    direction = FORWARD if t >= 0 else BACKWARD
    for _ in range(abs(t)):
        cells = step_cells(rule, cells, phase, direction)
        phase = phase + 1 if t >= 0 else phase - 1
    return cells


def step(state: FullState, rule: Rule, direction: Direction = FORWARD) -> FullState:
    """Apply alpha_{+1} or alpha_{-1}"""
    check_geometry(rule, state.geometry)
    cells = step_cells(rule, state.cells[None], state.phase, direction)[0]
    delta = 1 if direction == FORWARD else -1
    return FullState(geometry=state.geometry, cells=cells, phase=(state.phase + delta) % rule.time_period)


def evolve(state: FullState, rule: Rule, t: int) -> FullState:
    """Apply alpha_t; backward when t < 0"""
    check_geometry(rule, state.geometry)
    cells = evolve_cells(rule, state.cells[None], t, state.phase)[0]
    return FullState(geometry=state.geometry, cells=cells, phase=(state.phase + t) % rule.time_period)


# Batched exact simulation

def assignment_digits(start: int, stop: int, width: int, alphabet: int) -> np.ndarray:
    """Rows for assignment codes start..stop-1, first column most significant"""
    codes = np.arange(start, stop, dtype=np.int64)
    weights = alphabet ** np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] // weights) % alphabet).astype(np.uint8)


def row_codes(rows: np.ndarray, alphabet: int) -> np.ndarray:
    """Integer code of each row, first column most significant"""
    width = rows.shape[1]
    if width * math.log2(alphabet) > 62:
        raise CapExceeded(f"cannot index {width} cells in a 64-bit code")
    weights = alphabet ** np.arange(width - 1, -1, -1, dtype=np.int64)
    return rows.astype(np.int64) @ weights


def sweep(
    rule: Rule,
    geometry: Geometry,
    free: Sequence[Region],
    observe: Region,
    times: Sequence[int],
    fixed: Optional[Configuration] = None,
    assignments: Optional[np.ndarray] = None,
    phase: int = 0,
    workers: int = DEFAULT_WORKERS,
) -> dict[int, np.ndarray]:
    """Simulate many initial assignments of the free cells at once.

    Free cells are the concatenation of the `free` regions in the given order. Every
    cell that is neither free nor fixed starts at zero. Without explicit `assignments`
    all a^k assignments are enumerated in lexicographic order (first free cell most
    significant), so row r of each result is the assignment with code r. Returns,
    for every requested time, an array (rows, |observe|) of observed symbols.
    """
    check_geometry(rule, geometry)
    a = geometry.alphabet
    free_cells = [cell for region in free for cell in region.cells]
    if len(set(free_cells)) != len(free_cells):
        raise CoverageError("free regions overlap")
    # caller order, not canonical order
    free_index = np.zeros(0, dtype=np.int64)
    if free_cells:
        free_index = np.ravel_multi_index(tuple(np.array(free_cells, dtype=np.int64).T), geometry.sides)
    if fixed is not None and set(fixed.region.cells) & set(free_cells):
        raise CoverageError("fixed and free cells overlap")

    base = np.zeros(geometry.cell_count, dtype=np.uint8)
    if fixed is not None and len(fixed):
        base[fixed.region.flat_indices()] = fixed.symbols
    observe_index = observe.flat_indices()
    times = sorted(set(int(t) for t in times))
    if any(t < 0 for t in times):
        raise ValueError("sweep records non-negative times only")

    k = len(free_cells)
    if assignments is None:
        total = a ** k
        if total > EXHAUSTIVE_STATE_CAP:
            raise CapExceeded(f"{total} assignments exceed the sweep limit {EXHAUSTIVE_STATE_CAP}")
    else:
        assignments = np.asarray(assignments, dtype=np.uint8)
        if assignments.ndim != 2 or assignments.shape[1] != k:
            raise ValueError(f"assignments must be rows of {k} symbols")
        total = assignments.shape[0]

    rows_per_chunk = max(1, SWEEP_CHUNK_CELLS // geometry.cell_count)
    bounds = [(start, min(start + rows_per_chunk, total)) for start in range(0, total, rows_per_chunk)]
    logger.debug("sweep %s: %d states, %d chunks, %d workers", rule.name, total, len(bounds), workers)

    def run_chunk(bound):
        start, stop = bound
        if assignments is None:
            digits = assignment_digits(start, stop, k, a)
        else:
            digits = assignments[start:stop]
        batch = np.tile(base, (stop - start, 1))
        if k:
            batch[:, free_index] = digits
        cells = batch.reshape((stop - start,) + geometry.sides)
        recorded = {}
        current = 0
        for t in times:
            cells = evolve_cells(rule, cells, t - current, phase + current)
            current = t
            recorded[t] = cells.reshape(stop - start, -1)[:, observe_index]
        return recorded

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            parts = list(executor.map(run_chunk, bounds))
    else:
        parts = [run_chunk(bound) for bound in bounds]

    if not parts:
        return {t: np.zeros((0, len(observe)), dtype=np.uint8) for t in times}
    return {t: np.concatenate([part[t] for part in parts]) for t in times}


# Dependency structure

def _offset_dependencies(rule: Rule) -> list[tuple[int, ...]]:
    """Offsets o such that a cell's next value depends on the cell at position + o"""
    if isinstance(rule, ShiftRule):
        return [tuple(-v for v in rule.vector)]
    offsets = neighborhood_offsets(rule.dimension)
    if isinstance(rule, TableRule):
        table = np.asarray(rule.forward).reshape((rule.alphabet,) * len(offsets))
        return [o for axis, o in enumerate(offsets) if _varies_along(table, axis)]
    table = np.asarray(rule.local_table).reshape((rule.base,) * len(offsets))
    relevant = {o for axis, o in enumerate(offsets) if _varies_along(table, axis)}
    relevant.add((0,) * rule.dimension)
    return sorted(relevant)


def block_relevance(rule: MargolusRule) -> np.ndarray:
    """relevance[j, k]: output block position j depends on input block position k"""
    m, a = rule.block_size, rule.alphabet
    weights = a ** np.arange(m - 1, -1, -1, dtype=np.int64)
    images = np.asarray(rule.block_map, dtype=np.int64)
    digits = (images[:, None] // weights) % a
    relevance = np.zeros((m, m), dtype=bool)
    for j in range(m):
        out = digits[:, j].reshape((a,) * m)
        for k in range(m):
            relevance[j, k] = _varies_along(out, k)
    return relevance


def influence_cone(rule: Rule, region: Region, t: int, phase: int = 0) -> Region:
    """Time-0 cells whose values can influence `region` at time t"""
    if t < 0:
        raise ValueError("time must be non-negative")
    geometry = region.geometry
    cells = set(region.cells)
    if isinstance(rule, MargolusRule):
        relevance = block_relevance(rule)
        positions = list(itertools.product((0, 1), repeat=rule.dimension))
        for s in range(t - 1, -1, -1):
            offset = rule.offset_for_step(phase + s)
            previous = set()
            for cell in cells:
                local = tuple((c - offset) % 2 for c in cell)
                origin = tuple(c - l for c, l in zip(cell, local))
                j = positions.index(local)
                for k, position in enumerate(positions):
                    if relevance[j, k]:
                        previous.add(geometry.wrap(tuple(o + p for o, p in zip(origin, position))))
            cells = previous
    else:
        offsets = _offset_dependencies(rule)
        for _ in range(t):
            cells = {geometry.wrap(tuple(c + o for c, o in zip(cell, offset))) for cell in cells for offset in offsets}
    return Region(geometry=geometry, cells=list(cells))


def induced_map(rule: Rule, env: Configuration, region: Region, target: Region, t: int, phase: int = 0) -> InducedMap:
    """Tabulate c -> alpha_t(env, c)|target over all c on `region`"""
    geometry = region.geometry
    check_geometry(rule, geometry)
    if not env.region.isdisjoint(region):
        raise CoverageError("environment and input region overlap")
    if not light_cone_valid(geometry, target, t):
        raise LightConeViolation(f"target {target.to_text()} at t={t} wraps around the torus")
    cone = influence_cone(rule, target, t, phase)
    if not cone.issubset(env.region.union(region)):
        missing = cone.difference(env.region.union(region))
        raise CoverageError(f"cells {missing.to_text()} influence the target but are not covered")
    symbols = sweep(rule, geometry, [region], target, [t], fixed=env, phase=phase)[t]
    codes = row_codes(symbols, geometry.alphabet) if len(target) else np.zeros(len(symbols), dtype=np.int64)
    return InducedMap(region=region, target=target, time=t, environment=env, table=tuple(int(c) for c in codes))


# Verifiers

def shard_rng(seed: int, shard: int) -> np.random.Generator:
    """Counter-keyed substream: shard i of a run always draws the same numbers"""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(shard,)))


def sample_states(geometry: Geometry, count: int, seed: int, alphabet: Optional[int] = None) -> np.ndarray:
    """Uniform random torus states, one seeded substream per fixed-size shard"""
    a = alphabet or geometry.alphabet
    parts = []
    for shard, start in enumerate(range(0, count, MC_SHARD_SIZE)):
        size = min(MC_SHARD_SIZE, count - start)
        parts.append(shard_rng(seed, shard).integers(0, a, size=(size, geometry.cell_count), dtype=np.uint8))
    if not parts:
        return np.zeros((0, geometry.cell_count), dtype=np.uint8)
    return np.concatenate(parts)


def _state_batches(geometry: Geometry, mode: str, samples: int, seed: int, cap: Optional[int]):
    a, n = geometry.alphabet, geometry.cell_count
    if mode == "exhaustive":
        cap = cap or EXHAUSTIVE_STATE_CAP
        total = a ** n
        if total > cap:
            raise CapExceeded(f"exhaustive check needs {total} states, cap is {cap}")
        rows = max(1, SWEEP_CHUNK_CELLS // n)
        for start in range(0, total, rows):
            yield start, assignment_digits(start, min(start + rows, total), n, a)
    elif mode == "sampled":
        yield 0, sample_states(geometry, samples, seed)
    else:
        raise ConfigError(f"unknown verification mode '{mode}'")


def verify_reversibility(
    rule: Rule,
    geometry: Geometry,
    mode: str = "exhaustive",
    samples: int = 10_000,
    seed: int = DEFAULT_SEED,
    cap: Optional[int] = None,
) -> ReversibilityReport:
    """Check backward(forward(s)) == s for every phase; exhaustive mode also looks for image collisions"""
    check_geometry(rule, geometry)
    checked = 0
    for phase in range(rule.time_period):
        for _, rows in _state_batches(geometry, mode, samples, seed, cap):
            cells = rows.reshape((len(rows),) + geometry.sides)
            forward = step_cells(rule, cells, phase, FORWARD)
            restored = step_cells(rule, forward, phase + 1, BACKWARD)
            mismatch = np.flatnonzero(np.any((restored != cells).reshape(len(rows), -1), axis=1))
            checked += len(rows)
            if mismatch.size:
                witness = FullState(geometry=geometry, cells=rows[mismatch[0]], phase=phase)
                report = ReversibilityReport(
                    passed=False, mode=mode, states_checked=checked, counterexample=witness.to_text(), phase=phase
                )
                if mode == "exhaustive":
                    report.collision = find_collision(rule, geometry, phase)
                logger.info("rule %s is not reversible on %s", rule.name, geometry.sides)
                return report
    return ReversibilityReport(passed=True, mode=mode, states_checked=checked)


def find_collision(rule: Rule, geometry: Geometry, phase: int = 0) -> Optional[tuple[str, str]]:
    """Two distinct states with the same forward image, lowest pair in sorted image order"""
    a, n = geometry.alphabet, geometry.cell_count
    rows = assignment_digits(0, a ** n, n, a)
    images = step_cells(rule, rows.reshape((len(rows),) + geometry.sides), phase, FORWARD)
    codes = row_codes(images.reshape(len(rows), -1), a)
    order = np.argsort(codes, kind="stable")
    duplicates = np.flatnonzero(codes[order][1:] == codes[order][:-1])
    if not duplicates.size:
        return None
    i = duplicates[0]
    first, second = sorted((int(order[i]), int(order[i + 1])))
    return (
        FullState(geometry=geometry, cells=rows[first]).to_text(),
        FullState(geometry=geometry, cells=rows[second]).to_text(),
    )


def verify_translation_covariance(
    rule: Rule,
    geometry: Geometry,
    shift_vector,
    mode: str = "sampled",
    samples: int = 1_000,
    seed: int = DEFAULT_SEED,
    cap: Optional[int] = None,
) -> CovarianceReport:
    """Check evolve(translate(s)) == translate(evolve(s)) for one step at every phase"""
    check_geometry(rule, geometry)
    vector = geometry.vector(shift_vector)
    if any(v % rule.covariance_step for v in vector):
        raise PreconditionError(
            f"vector {vector} is outside the covariance sublattice {rule.covariance_step}Z^{rule.dimension}"
        )
    spatial = tuple(range(1, geometry.dimension + 1))
    checked = 0
    for phase in range(rule.time_period):
        for _, rows in _state_batches(geometry, mode, samples, seed, cap):
            cells = rows.reshape((len(rows),) + geometry.sides)
            moved_then_stepped = step_cells(rule, np.roll(cells, vector, axis=spatial), phase)
            stepped_then_moved = np.roll(step_cells(rule, cells, phase), vector, axis=spatial)
            mismatch = np.flatnonzero(
                np.any((moved_then_stepped != stepped_then_moved).reshape(len(rows), -1), axis=1)
            )
            checked += len(rows)
            if mismatch.size:
                witness = FullState(geometry=geometry, cells=rows[mismatch[0]], phase=phase)
                return CovarianceReport(
                    passed=False, vector=vector, mode=mode, states_checked=checked, counterexample=witness.to_text()
                )
    return CovarianceReport(passed=True, vector=vector, mode=mode, states_checked=checked)
