# Experiment services: validated stanzas in, JSON-ready records out

import json
import logging
import math
from typing import Callable, Iterator, Optional

import numpy as np
from pydantic import ValidationError

from config import get_enumeration_cap
from engine import Rule, check_geometry, evolve, load_rule, rule_label, sample_states, verify_reversibility, verify_translation_covariance
from errors import BenchException, ConfigError, InvariantViolation
from lattice import Configuration, FullState, Geometry, Region
from measure import CylinderSet, joint_event_free_energy
from schemas import (
    ComplexityStanza,
    CycleCostStanza,
    ExperimentConfig,
    ExperimentRecord,
    FreeEnergyStanza,
    InfluxStanza,
    KraftStanza,
    MapSpec,
    MixingStanza,
    PersistenceStanza,
    PriorStanza,
    ReversibilityStanza,
    RunSettings,
    SearchMapStanza,
    SearchPrepStanza,
    SimulateStanza,
    SplitSettings,
    VerificationRecord,
)
from thermo import (
    ComplexityCertificate,
    MapTarget,
    PriorQuery,
    SplitSpec,
    TransferCertificate,
    check_complexity_prior_bound,
    cycle_cost,
    cycle_sequence_cost,
    entropy_influx_experiment,
    kraft_check,
    physical_complexity,
    physical_prior,
    prior_distribution,
    search_transfer,
    time_averaged_prior,
    verify_complexity_certificate,
    verify_transfer,
    weak_mixing_estimate,
)
from universality import (
    BijectionTask,
    Certificate,
    NotFoundWithinBounds,
    PreparationTask,
    SearchMode,
    complement_map,
    identity_map,
    persistence_probe,
    pi_table_from_text,
    search_conditional_prep,
    search_map,
    search_unconditional_prep,
    swap_map,
    verify_certificate,
)

logger = logging.getLogger(__name__)

IMPOSSIBLE_TEXT = "impossible"


# Loading

def _describe(error: ValidationError) -> str:
    first = error.errors()[0]
    location = ".".join(str(part) for part in first["loc"])
    return f"{location}: {first['msg']}" if location else first["msg"]


def parse_config(data) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid experiment config at {_describe(e)}")


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}")
    return parse_config(data)


def resolve_settings(config: ExperimentConfig, seed: Optional[int] = None, cap: Optional[int] = None, workers: int = 1) -> RunSettings:
    """CLI flag > config file > environment > default"""
    return RunSettings(
        seed=config.seed if seed is None else seed,
        cap=get_enumeration_cap(config.cap if cap is None else cap),
        workers=max(1, workers),
    )


def build_geometry(spec) -> Geometry:
    try:
        return Geometry(sides=tuple(spec.sides), alphabet=spec.alphabet)
    except ValidationError as e:
        raise ConfigError(f"invalid geometry: {_describe(e)}")


# Text helpers

def _region(geometry: Geometry, text: str) -> Region:
    try:
        return Region.parse(geometry, text)
    except ValueError as e:
        raise ConfigError(f"bad region '{text}': {e}")


def _config(geometry: Geometry, text: str) -> Configuration:
    try:
        return Configuration.parse(geometry, text)
    except ValueError as e:
        raise ConfigError(f"bad configuration '{text}': {e}")


def _symbols(region: Region, text: str) -> Configuration:
    try:
        return Configuration.of(region, text)
    except ValueError as e:
        raise ConfigError(f"bad symbols '{text}' for region {region.to_text()}: {e}")


def _optional_region(geometry: Geometry, text: Optional[str]) -> Optional[Region]:
    return _region(geometry, text) if text is not None else None


def _split(geometry: Geometry, settings: SplitSettings) -> SplitSpec:
    return SplitSpec(geometry=geometry, **settings.model_dump())


def _mapping(region: Region, spec: MapSpec) -> tuple[int, ...]:
    if spec.builder == "identity":
        return identity_map(region)
    if spec.builder == "complement":
        return complement_map(region)
    if spec.builder == "swap":
        first, second = (_region(region.geometry, text) for text in spec.swap)
        return swap_map(region, list(first.cells), list(second.cells))
    return pi_table_from_text(region, spec.table)


def encode_value(value):
    """JSON-ready copy: tuples become lists, infinite values become 'impossible'"""
    if isinstance(value, dict):
        return {str(k): encode_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode_value(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and math.isinf(value):
        return IMPOSSIBLE_TEXT
    return value


def decode_value(value) -> float:
    return math.inf if value == IMPOSSIBLE_TEXT else float(value)


def dumps_record(record: dict) -> str:
    return json.dumps(record, sort_keys=True)


# Result shapes

def certificate_result(cert: Certificate) -> dict:
    return {
        "found": True,
        "kind": cert.kind,
        "region": cert.region.to_text(),
        "program": cert.program.to_text(),
        "program_size": len(cert.program),
        "time": cert.time,
        "policy": cert.policy,
        "initial": cert.initial.symbol_text() if cert.initial is not None else None,
        "target": cert.target.symbol_text() if cert.target is not None else None,
        "mapping": list(cert.mapping) if cert.mapping is not None else None,
        "verification_digest": cert.verification_digest,
    }


def not_found_result(result: NotFoundWithinBounds) -> dict:
    return {"found": False, **result.model_dump()}


def complexity_result(cert: Optional[ComplexityCertificate]) -> Optional[dict]:
    if cert is None:
        return None
    return {
        "value": cert.value,
        "time": cert.time,
        "code_length": cert.code_length,
        "program": cert.program.to_text(),
        "program_size": len(cert.program),
        "verification_digest": cert.verification_digest,
    }


# Handlers, one per stanza kind

def simulate(stanza: SimulateStanza, rule: Rule, geometry: Geometry, settings: RunSettings):
    if stanza.state is not None:
        state = FullState.from_text(geometry, stanza.state, phase=stanza.phase)
    elif stanza.initial is not None:
        cells = FullState.from_configuration(_config(geometry, stanza.initial)).cells
        state = FullState(geometry=geometry, cells=cells, phase=stanza.phase)
    else:
        state = FullState(geometry=geometry, cells=sample_states(geometry, 1, settings.seed)[0], phase=stanza.phase)
    steps = stanza.steps if stanza.direction == "forward" else -stanza.steps
    final = evolve(state, rule, steps)
    result = {"initial_digest": state.digest(), "digest": final.digest(), "phase": final.phase, "steps": steps}
    if stanza.show_state:
        result["state"] = final.to_text()
    return result, None


def reversibility(stanza: ReversibilityStanza, rule: Rule, geometry: Geometry, settings: RunSettings):
    report = verify_reversibility(rule, geometry, stanza.mode, stanza.samples, settings.seed, settings.cap)
    result = {"reversibility": report.model_dump()}
    if stanza.covariance is not None:
        covariance = verify_translation_covariance(
            rule, geometry, stanza.covariance, stanza.mode, stanza.samples, settings.seed, settings.cap
        )
        result["covariance"] = covariance.model_dump()
    return result, None


def free_energy_experiment(stanza: FreeEnergyStanza, rule: Rule, geometry: Geometry, settings: RunSettings):
    events = [(event.time, _config(geometry, event.config)) for event in stanza.events]
    window = _optional_region(geometry, stanza.window)
    value = joint_event_free_energy(rule, events, window, settings.cap, settings.workers)
    return {"free_energy": value, "probability": 2.0 ** -value}, None


def _search_mode(search, settings: RunSettings) -> SearchMode:
    return SearchMode(kind=search.kind, samples=search.samples, seed=settings.seed)


def search_preparation(stanza: SearchPrepStanza, rule: Rule, geometry: Geometry, settings: RunSettings):
    region = _region(geometry, stanza.region)
    task = PreparationTask(
        rule=rule,
        region=region,
        max_time=stanza.max_time,
        window=_region(geometry, stanza.window),
        policy=stanza.policy,
        mode=_search_mode(stanza.search, settings),
        cap=settings.cap,
        workers=settings.workers,
        initial=_symbols(region, stanza.initial) if stanza.initial is not None else None,
        target=_symbols(region, stanza.target),
    )
    result = search_conditional_prep(task) if task.initial is not None else search_unconditional_prep(task)
    if isinstance(result, NotFoundWithinBounds):
        return not_found_result(result), None
    return certificate_result(result), None


def search_bijection(stanza: SearchMapStanza, rule: Rule, geometry: Geometry, settings: RunSettings):
    region = _region(geometry, stanza.region)
    task = BijectionTask(
        rule=rule,
        region=region,
        max_time=stanza.max_time,
        window=_region(geometry, stanza.window),
        policy=stanza.policy,
        mode=_search_mode(stanza.search, settings),
        cap=settings.cap,
        workers=settings.workers,
        mapping=_mapping(region, stanza.map),
    )
    result = search_map(task)
    if isinstance(result, NotFoundWithinBounds):
        return not_found_result(result), None
    return {**certificate_result(result), "bijective": task.bijective}, None


def prior(stanza: PriorStanza, rule: Rule, geometry: Geometry, settings: RunSettings):
    split = _split(geometry, stanza.split)
    target = _config(geometry, stanza.target)
    query = PriorQuery(
        rule=rule, split=split, target=target, time=stanza.time, mode=stanza.mode,
        samples=stanza.samples, seed=settings.seed, cap=settings.cap, workers=settings.workers,
    )
    value = physical_prior(query)
    result = {"split": split.to_text()}
    if stanza.mode == "exact":
        result["probability"] = value
    else:
        result["estimate"] = value.model_dump()
    if stanza.distribution:
        dist = prior_distribution(rule, split, target.region, stanza.time, settings.cap, settings.workers)
        result["distribution"] = {
            member.symbol_text(): dist.probability(member)
            for member in CylinderSet.everything(target.region).members()
        }
    if stanza.average_to is not None:
        result["time_averaged"] = time_averaged_prior(rule, split, target, stanza.average_to, settings.cap, settings.workers).model_dump()
    return result, None


def complexity(stanza: ComplexityStanza, rule: Rule, geometry: Geometry, settings: RunSettings):
    split = _split(geometry, stanza.split)
    window = _optional_region(geometry, stanza.window)
    bounds = dict(window=window, max_program=stanza.max_program, cap=settings.cap, workers=settings.workers)
    if stanza.map is not None:
        region = _region(geometry, stanza.region)
        target = MapTarget(region=region, mapping=_mapping(region, stanza.map))
    else:
        target = _config(geometry, stanza.target)

    if stanza.map is None and stanza.check_bound:
        report = check_complexity_prior_bound(rule, split, target, stanza.max_time, **bounds)
        result = {
            "found": report.certificate is not None,
            "complexity": report.complexity,
            "bound": report.bound,
            "bound_time": report.bound_time,
            "priors": report.priors,
            "certificate": complexity_result(report.certificate),
        }
        return result, report.holds

    found = physical_complexity(rule, split, target, stanza.max_time, **bounds)
    if isinstance(found, NotFoundWithinBounds):
        return {**not_found_result(found), "certificate": None}, None
    return {"found": True, "complexity": found.value, "certificate": complexity_result(found)}, None


def kraft(stanza: KraftStanza, rule: Rule, geometry: Geometry, settings: RunSettings):
    split = _split(geometry, stanza.split)
    if stanza.members is not None:
        members = [_config(geometry, text) for text in stanza.members]
    else:
        members = CylinderSet.everything(_region(geometry, stanza.region)).members()
    report = kraft_check(
        rule, split, members, stanza.max_time, _optional_region(geometry, stanza.window),
        stanza.max_program, settings.cap, settings.workers,
    )
    result = {
        "total": report.total,
        "members": [m.to_text() for m in members],
        "complexities": report.complexities,
        "found": report.found,
    }
    return result, report.holds


def cycle(stanza: CycleCostStanza, rule: Rule, geometry: Geometry, settings: RunSettings):
    if stanza.sequence is not None:
        sequence = [_config(geometry, text) for text in stanza.sequence]
        value = cycle_sequence_cost(rule, sequence, stanza.repeats, settings.cap, settings.workers)
        return {"free_energy": value, "cycle_length": len(sequence)}, None
    report = cycle_cost(
        rule, _config(geometry, stanza.config), stanza.tau, stanza.repeats,
        window=_optional_region(geometry, stanza.window), tau_window=stanza.tau_window, mode=stanza.mode,
        samples=stanza.samples, seed=settings.seed, cap=settings.cap, workers=settings.workers,
    )
    result = report.model_dump(exclude={"config"})
    result["config"] = report.config.to_text()
    return result, None


def influx(stanza: InfluxStanza, rule: Rule, geometry: Geometry, settings: RunSettings):
    region = _region(geometry, stanza.region)
    window = _optional_region(geometry, stanza.window)
    if stanza.program is not None:
        program, t = _config(geometry, stanza.program), stanza.time
    else:
        found = search_transfer(
            rule, region, stanza.displacement, stanza.max_time, window, stanza.max_program, settings.cap, settings.workers
        )
        if isinstance(found, NotFoundWithinBounds):
            return {"transfer": not_found_result(found)}, None
        program, t = found.program, found.time
    initial = _symbols(region, stanza.initial) if stanza.initial is not None else None
    report = entropy_influx_experiment(
        rule, region, stanza.displacement, program, t, initial=initial, cap=settings.cap, workers=settings.workers
    )
    return report.model_dump(exclude={"holds"}), report.holds


def mixing(stanza: MixingStanza, rule: Rule, geometry: Geometry, settings: RunSettings):
    def cylinder(text: str) -> CylinderSet:
        return CylinderSet.single(_config(geometry, text))

    report = weak_mixing_estimate(
        rule, cylinder(stanza.first), cylinder(stanza.second), stanza.horizon,
        extra=[cylinder(text) for text in stanza.extra], mode=stanza.mode, samples=stanza.samples,
        seed=settings.seed, cap=settings.cap, workers=settings.workers,
    )
    return report.model_dump(), None


def persistence(stanza: PersistenceStanza, rule: Rule, geometry: Geometry, settings: RunSettings):
    region = _region(geometry, stanza.region)
    report = persistence_probe(
        rule, region, _config(geometry, stanza.program), _symbols(region, stanza.target), stanza.horizon,
        initial=_symbols(region, stanza.initial) if stanza.initial is not None else None,
        samples=stanza.samples, seed=settings.seed, cap=settings.cap,
    )
    result = report.model_dump(exclude={"witness"})
    result["witness"] = report.witness.to_text() if report.witness is not None else None
    # a probe that held for the whole horizon proves nothing beyond it
    result["inconclusive"] = report.held
    return result, None


EXPERIMENT_HANDLERS: dict[str, Callable] = {
    "simulate": simulate,
    "reversibility": reversibility,
    "free-energy": free_energy_experiment,
    "search-prep": search_preparation,
    "search-map": search_bijection,
    "prior": prior,
    "complexity": complexity,
    "kraft": kraft,
    "cycle-cost": cycle,
    "influx": influx,
    "mixing": mixing,
    "persistence": persistence,
}


# Running

def execute_stanza(config: ExperimentConfig, stanza, settings: RunSettings) -> dict:
    """Run one stanza and return its record; errors carry the stanza id"""
    try:
        rule = load_rule(stanza.rule if stanza.rule is not None else config.rule)
        geometry = build_geometry(config.geometry)
        check_geometry(rule, geometry)
        logger.info("running %s (%s) with rule %s", stanza.id, stanza.kind, rule_label(rule))
        result, holds = EXPERIMENT_HANDLERS[stanza.kind](stanza, rule, geometry, settings)
    except BenchException as e:
        raise e.with_stanza(stanza.id)
    except ValidationError as e:
        raise ConfigError(_describe(e), stanza=stanza.id)
    except ValueError as e:
        raise ConfigError(str(e), stanza=stanza.id)

    record = ExperimentRecord(
        experiment=stanza.id,
        kind=stanza.kind,
        rule=rule.model_dump(mode="json"),
        geometry={"sides": list(geometry.sides), "alphabet": geometry.alphabet},
        seed=settings.seed,
        caps={"enumeration": settings.cap},
        inputs=stanza.model_dump(mode="json", exclude={"id", "kind"}),
        result=encode_value(result),
        holds=holds,
    )
    return record.model_dump() if holds is not None else record.model_dump(exclude={"holds"})


def run_experiments(config: ExperimentConfig, settings: RunSettings) -> Iterator[dict]:
    for stanza in config.experiments:
        yield execute_stanza(config, stanza, settings)


def check_holds(record: dict) -> None:
    """Abort the run when a theorem-bound check failed"""
    if record.get("holds") is False:
        raise InvariantViolation(f"{record['kind']} bound does not hold", stanza=record["experiment"])


# Re-verification of stored certificates

def _record_context(record: dict) -> tuple[Rule, Geometry]:
    rule = load_rule(record["rule"])
    geometry = Geometry(sides=tuple(record["geometry"]["sides"]), alphabet=record["geometry"]["alphabet"])
    return rule, geometry


def _search_certificate(record: dict, rule: Rule, geometry: Geometry) -> Certificate:
    result = record["result"]
    region = _region(geometry, result["region"])
    return Certificate(
        kind=result["kind"],
        rule=rule,
        region=region,
        program=_config(geometry, result["program"]),
        time=result["time"],
        policy=result["policy"],
        initial=_symbols(region, result["initial"]) if result["initial"] is not None else None,
        target=_symbols(region, result["target"]) if result["target"] is not None else None,
        mapping=tuple(result["mapping"]) if result["mapping"] is not None else None,
    )


def _complexity_certificate(record: dict, rule: Rule, geometry: Geometry) -> ComplexityCertificate:
    inputs, stored = record["inputs"], record["result"]["certificate"]
    split = _split(geometry, SplitSettings(**inputs["split"]))
    if inputs["map"] is not None:
        region = _region(geometry, inputs["region"])
        target, mapping = None, _mapping(region, MapSpec(**inputs["map"]))
    else:
        target, mapping = _config(geometry, inputs["target"]), None
        region = target.region
    return ComplexityCertificate(
        rule=rule,
        split=split,
        region=region,
        target=target,
        mapping=mapping,
        program=_config(geometry, stored["program"]),
        time=stored["time"],
        value=decode_value(stored["value"]),
        code_length=stored["code_length"],
    )


def verify_record(record: dict, cap: Optional[int] = None) -> Optional[VerificationRecord]:
    """Re-simulate the certificate a record claims; None for records without one.

    The enumeration cap is `cap` when given, else the cap the record was produced with.
    """
    kind, result = record.get("kind"), record.get("result", {})
    if cap is None:
        cap = record.get("caps", {}).get("enumeration")
    try:
        rule, geometry = _record_context(record)
        if kind in ("search-prep", "search-map") and result.get("found"):
            cert = _search_certificate(record, rule, geometry)
            check = verify_certificate(cert, cap)
            passed = check.passed and check.digest == result["verification_digest"]
        elif kind == "complexity" and result.get("certificate"):
            cert = _complexity_certificate(record, rule, geometry)
            check = verify_complexity_certificate(cert, cap)
            passed = check.passed and check.digest == result["certificate"]["verification_digest"]
        elif kind == "influx" and "program" in result:
            inputs = record["inputs"]
            transfer = TransferCertificate(
                rule=rule,
                region=_region(geometry, inputs["region"]),
                displacement=geometry.vector(inputs["displacement"]),
                program=_config(geometry, result["program"]),
                time=result["time"],
            )
            ok = verify_transfer(transfer, cap)
            return VerificationRecord(
                experiment=record["experiment"], kind=kind, passed=ok == result["transfer_verified"],
                detail=f"transfer re-simulated, verified={ok}",
            )
        else:
            return None
    except (KeyError, TypeError) as e:
        raise ConfigError(f"malformed record: missing {e}", stanza=record.get("experiment"))
    except BenchException as e:
        raise e.with_stanza(record.get("experiment", "?"))
    except ValueError as e:
        raise ConfigError(str(e), stanza=record.get("experiment"))

    logger.info("verified %s (%s): %s", record["experiment"], kind, "ok" if passed else "FAILED")
    return VerificationRecord(
        experiment=record["experiment"],
        kind=kind,
        passed=passed,
        inputs_checked=check.inputs_checked,
        digest=check.digest,
        detail="certificate re-simulated",
    )
