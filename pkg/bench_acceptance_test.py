#!/usr/bin/env python3
"""
Acceptance checks for the workbench: each check returns ✅/❌ lines, pytest asserts them,
and running the file directly prints the full report
"""

import sys
from datetime import datetime

import numpy as np

from config import BUNDLED_RULES
from engine import (
    assignment_digits,
    evolve,
    evolve_cells,
    identity_rule,
    load_rule,
    row_codes,
    step_cells,
    verify_reversibility,
)
from errors import LightConeViolation
from lattice import Configuration, FullState, Geometry, Region, restrict
from measure import CylinderSet, InitialSpec, pushforward
from schemas import RunSettings
from services import dumps_record, parse_config, run_experiments
from thermo import (
    PriorQuery,
    SplitSpec,
    check_complexity_prior_bound,
    cycle_cost,
    entropy_influx_experiment,
    integer_code_length,
    kraft_check,
    physical_prior,
    prior_distribution,
    search_transfer,
    weak_mixing_estimate,
)
from universality import BijectionTask, NotFoundWithinBounds, PreparationTask, search_map, search_unconditional_prep, swap_map, verify_certificate

RING_16 = Geometry(sides=(16,), alphabet=2)
RING_24 = Geometry(sides=(24,), alphabet=2)
RING_64 = Geometry(sides=(64,), alphabet=2)
GRID_8 = Geometry(sides=(8, 8), alphabet=2)

SHIFT_SPLIT = SplitSpec(geometry=RING_16, boundary=1)
GRID_SPLIT = SplitSpec(geometry=GRID_8, axis=0, boundary=4)


def mark(ok: bool, description: str) -> str:
    return f"{'✅' if ok else '❌'} {description}"


def assert_all_pass(results):
    failures = [r for r in results if not r.startswith("✅")]
    assert not failures, failures


def small_torus(rule, side: int = 4) -> Geometry:
    return Geometry(sides=(side,) * rule.dimension, alphabet=rule.alphabet or 2)


def cell_config(geometry, cell, symbols):
    return Configuration.of(Region.of(geometry, [cell]), symbols)


def bundled_rules():
    return [load_rule(description) for description in BUNDLED_RULES]


# Criterion 1: reversibility and group laws

def check_reversibility():
    print("🧪 Reversibility and group law for every bundled rule")
    results = []
    for rule in bundled_rules():
        exhaustive = verify_reversibility(rule, small_torus(rule), "exhaustive")
        sampled = verify_reversibility(rule, small_torus(rule, 8), "sampled", samples=10_000, seed=1)
        results.append(mark(exhaustive.passed, f"{rule.name}: exhaustive on {small_torus(rule).sides}"))
        results.append(mark(sampled.passed, f"{rule.name}: 10^4 sampled states"))

        geometry = small_torus(rule, 8)
        rng = np.random.default_rng(5)
        cells = rng.integers(0, geometry.alphabet, size=(1000,) + geometry.sides, dtype=np.uint8)
        times = rng.integers(0, 5, size=(1000, 2))
        ok = True
        for t1, t2 in {tuple(int(t) for t in row) for row in times}:
            rows = np.flatnonzero((times[:, 0] == t1) & (times[:, 1] == t2))
            direct = evolve_cells(rule, cells[rows], t1 + t2, 0)
            chained = evolve_cells(rule, evolve_cells(rule, cells[rows], t1, 0), t2, t1)
            ok = ok and np.array_equal(direct, chained)
        results.append(mark(ok, f"{rule.name}: evolve(s, t1+t2) == evolve(evolve(s, t1), t2) on 10^3 triples"))
    return results


# Criterion 2: measure preservation

def check_measure_preservation():
    print("🧪 Uniform measure is invariant")
    results = []
    for rule in bundled_rules():
        geometry = small_torus(rule)
        a, n = geometry.alphabet, geometry.cell_count
        rows = assignment_digits(0, a ** n, n, a)
        ok = True
        for phase in range(rule.time_period):
            images = step_cells(rule, rows.reshape((len(rows),) + geometry.sides), phase)
            counts = np.bincount(row_codes(images.reshape(len(rows), -1), a), minlength=a ** n)
            ok = ok and bool(np.all(counts == 1))
        results.append(mark(ok, f"{rule.name}: one step permutes all {a ** n} states of {geometry.sides}"))

        if rule.dimension == 1:
            ring = Geometry(sides=(16,), alphabet=a)
            region = Region.of(ring, [0, 1])
            dist = pushforward(InitialSpec.uniform(ring), rule, 2, region)
            error = float(np.max(np.abs(dist.probabilities - 1 / a ** 2)))
            results.append(mark(error <= 1e-12, f"{rule.name}: pushforward on two cells is uniform (error {error:.1e})"))
    return results


# Criterion 3: translated-copy preparation for the shift

def check_translated_copy():
    print("🧪 Shift prepares every target with a translated copy")
    rule = load_rule("shift")
    window = Region.of(RING_24, range(-6, 0))
    results = []
    for size in range(1, 5):
        region = Region.of(RING_24, range(size))
        good = 0
        for code in range(2 ** size):
            target = Configuration.from_code(region, code)
            task = PreparationTask(rule=rule, region=region, window=window, max_time=size + 1, target=target)
            cert = search_unconditional_prep(task)
            if (
                not isinstance(cert, NotFoundWithinBounds)
                and cert.time == size
                and cert.program == target.translate(-size)
                and verify_certificate(cert).passed
            ):
                good += 1
        results.append(mark(good == 2 ** size, f"|R| = {size}: {good}/{2 ** size} targets use R - t0 with the shifted content"))
    return results


# Criterion 4: the shift cannot swap two cells

def brute_force_map(rule, region, window, mapping, max_time):
    for t in range(max_time + 1):
        for code in range(2 ** len(window)):
            env = Configuration.from_code(window, code)
            outputs = []
            for source in range(2 ** len(region)):
                start = FullState.from_configuration(env.merge(Configuration.from_code(region, source)))
                outputs.append(restrict(evolve(start, rule, t), region).code())
            if tuple(outputs) == mapping:
                return t, env
    return None


def check_shift_transposition():
    print("🧪 Shift transposition probe")
    rule = load_rule("shift")
    region = Region.of(RING_24, [0, 1])
    window = Region.of(RING_24, [-3, -2, -1, 2, 3, 4])
    mapping = swap_map(region, [0], [1])
    result = search_map(BijectionTask(rule=rule, region=region, window=window, max_time=8, mapping=mapping))
    return [
        mark(isinstance(result, NotFoundWithinBounds), "search finds no program up to t = 8 in a 6-cell window"),
        mark(brute_force_map(rule, region, window, mapping, 8) is None, "exhaustive oracle agrees"),
    ]


# Criterion 5: entropy influx

def check_entropy_influx():
    print("🧪 Entropy influx through verified transfers")
    cases = [
        ("shift", Region.of(RING_16, [0, 1]), 3, 4),
        ("shift-left", Region.of(RING_16, [0, 1]), -3, 4),
        ("shift-2d", Region.of(GRID_8, [(0, 0)]), (0, 2), 3),
        ("bbm", Region.of(GRID_8, [(0, 0)]), (1, 1), 2),
    ]
    results = []
    for name, region, displacement, max_time in cases:
        rule = load_rule(name)
        cert = search_transfer(rule, region, displacement, max_time)
        if isinstance(cert, NotFoundWithinBounds):
            results.append(mark(False, f"{name}: no transfer found"))
            continue
        report = entropy_influx_experiment(rule, region, displacement, cert.program, cert.time)
        ok = report.transfer_verified and report.holds
        if len(cert.program) == 0:
            ok = ok and abs(report.measured - report.bound) <= 1e-9
        results.append(mark(ok, f"{name}: measured {report.measured:.4f} >= bound {report.bound:.4f} bits"))
    return results


# Criterion 6: cost of restoring a state

def check_cycle_cost():
    print("🧪 Cycle cost grows linearly for the shift")
    one = cell_config(RING_64, 0, "1")
    results = []
    for tau in (1, 2, 3):
        shift = [cycle_cost(load_rule("shift"), one, tau, k).free_energy for k in range(1, 7)]
        frozen = [cycle_cost(identity_rule(), one, tau, k).free_energy for k in range(1, 7)]
        results.append(mark(shift == [float(k) for k in range(1, 7)], f"shift, tau = {tau}: F_k = k bits"))
        results.append(mark(frozen == [1.0] * 6, f"identity, tau = {tau}: F_k stays at 1 bit"))
    return results


# Criterion 7: weak mixing

def check_weak_mixing():
    print("🧪 Weak mixing diagnostic")
    ring = Geometry(sides=(128,), alphabet=2)
    one = CylinderSet.single(cell_config(ring, 0, "1"))
    shift = weak_mixing_estimate(load_rule("shift"), one, one, 64)
    frozen_one = CylinderSet.single(cell_config(RING_16, 0, "1"))
    frozen = weak_mixing_estimate(identity_rule(), frozen_one, frozen_one, 6)
    return [
        mark(shift.gap <= 0.5 / 64, f"shift: gap {shift.gap:.5f} <= 0.5/64"),
        mark(frozen.gap == 0.25, f"identity: gap {frozen.gap} == mu(B) - mu(B)^2"),
    ]


# Criterion 8: complexity against the prior

def boundary_targets():
    """(rule, split, target, max_time) for every 1- and 2-cell target next to a hot/cold interface"""
    shift_left = load_rule("shift-left")
    for cell in (15, 0, 1, 2):
        for symbols in "01":
            yield shift_left, SHIFT_SPLIT, cell_config(RING_16, cell, symbols), 2
    for cells in ([15, 0], [0, 1], [1, 2]):
        region = Region.of(RING_16, cells)
        for code in range(4):
            yield shift_left, SHIFT_SPLIT, Configuration.from_code(region, code), 2
    bbm = load_rule("bbm")
    for cell in ((3, 3), (4, 3)):
        for symbols in "01":
            yield bbm, GRID_SPLIT, cell_config(GRID_8, cell, symbols), 2
    region = Region.of(GRID_8, [(3, 3), (4, 3)])
    for code in range(4):
        yield bbm, GRID_SPLIT, Configuration.from_code(region, code), 1


def check_complexity_against_prior():
    print("🧪 Complexity is bounded below by the prior")
    violations = []
    checked = 0
    for rule, split, target, max_time in boundary_targets():
        report = check_complexity_prior_bound(rule, split, target, max_time)
        checked += 1
        if not report.holds:
            violations.append(f"{rule.name} {target.to_text()}")
    equality = check_complexity_prior_bound(load_rule("shift-left"), SHIFT_SPLIT, cell_config(RING_16, 0, "1"), 3)
    return [
        mark(not violations, f"{checked} targets, violations: {violations or 'none'}"),
        mark(equality.complexity == equality.bound == 4.0, "shift '1' at the cold edge: complexity = bound = 4 bits"),
    ]


# Criterion 9: Kraft

def partial_kraft_sums_exact(max_bits: int = 20) -> bool:
    # integer arithmetic scaled by 2^(2 max_bits)
    scale = 2 * max_bits
    total = 0
    t = 0
    for m in range(1, max_bits + 1):
        while t < 2 ** m - 1:
            total += 1 << (scale - integer_code_length(t))
            t += 1
        if total != (1 << scale) - (1 << (scale - m)):
            return False
    return True


def check_kraft():
    print("🧪 Kraft sums over mutually exclusive configurations")
    families = [
        (load_rule("shift-left"), SHIFT_SPLIT, Region.of(RING_16, [0]), 2),
        (load_rule("shift-left"), SHIFT_SPLIT, Region.of(RING_16, [1]), 2),
        (load_rule("shift-left"), SHIFT_SPLIT, Region.of(RING_16, [0, 1]), 2),
        (load_rule("shift-left"), SHIFT_SPLIT, Region.of(RING_16, [15, 0]), 2),
        (load_rule("bbm"), GRID_SPLIT, Region.of(GRID_8, [(3, 3)]), 2),
        (load_rule("bbm"), GRID_SPLIT, Region.of(GRID_8, [(3, 3), (4, 3)]), 1),
    ]
    results = []
    for rule, split, region, max_time in families:
        report = kraft_check(rule, split, CylinderSet.everything(region).members(), max_time)
        results.append(mark(report.holds, f"{rule.name} on {region.to_text()}: sum = {report.total:.4f}"))
    results.append(mark(partial_kraft_sums_exact(), "sum over t < 2^m - 1 of 2^-l(t) = 1 - 2^-m for m <= 20"))
    return results


# Criterion 10: prior properties

def check_prior_properties():
    print("🧪 Physical prior")
    results = []
    for name in ("shift-left", "margolus-swap"):
        rule = load_rule(name)
        worst, valid = 0.0, 0
        for size in (1, 2, 3):
            for start in (-1, 0, 1):
                region = Region.of(RING_16, range(start, start + size))
                for t in range(4):
                    try:
                        dist = prior_distribution(rule, SHIFT_SPLIT, region, t)
                    except LightConeViolation:
                        continue
                    valid += 1
                    worst = max(worst, abs(float(dist.probabilities.sum()) - 1.0))
        results.append(mark(valid > 0 and worst <= 1e-12, f"{name}: {valid} queries sum to 1 (worst {worst:.1e})"))

    rule = load_rule("shift-2d-up")
    region = Region.of(GRID_8, [(3, 2), (3, 3)])
    symmetric = all(
        np.array_equal(
            prior_distribution(rule, GRID_SPLIT, region, t).probabilities,
            prior_distribution(rule, GRID_SPLIT, region.translate((0, 3)), t).probabilities,
        )
        for t in range(3)
    )
    results.append(mark(symmetric, "translation along the boundary leaves the prior unchanged"))

    target = cell_config(RING_16, 0, "1")
    shift_left = load_rule("shift-left")
    exact = physical_prior(PriorQuery(rule=shift_left, split=SHIFT_SPLIT, target=target, time=1))
    trials = 1000
    covered = sum(
        physical_prior(PriorQuery(rule=shift_left, split=SHIFT_SPLIT, target=target, time=1, mode="mc", samples=200, seed=seed)).covers(exact)
        for seed in range(trials)
    )
    results.append(mark(covered >= 0.93 * trials, f"Monte-Carlo intervals cover the exact value in {covered}/{trials} trials"))
    return results


# Criterion 11: determinism

DETERMINISM_CONFIG = {
    "rule": "shift",
    "geometry": {"sides": [64], "alphabet": 2},
    "seed": 7,
    "experiments": [
        {"id": "wide", "kind": "free-energy", "events": [{"time": 0, "config": ";".join(str(c) for c in range(18)) + "|" + "0" * 18}]},
        {"id": "prior", "kind": "prior", "rule": "shift-left", "split": {"boundary": 1}, "target": "0|1", "time": 2, "mode": "mc", "samples": 3000},
        {"id": "kraft", "kind": "kraft", "rule": "shift-left", "split": {"boundary": 1}, "region": "0", "max_time": 3},
        {"id": "prep", "kind": "search-prep", "region": "0;1", "target": "10", "window": "58;59;60;61;62;63", "max_time": 3},
        {"id": "cycle", "kind": "cycle-cost", "config": "0|1", "tau": 2, "repeats": 3, "mode": "mc", "samples": 3000},
        {"id": "mixing", "kind": "mixing", "first": "0|1", "second": "0|1", "horizon": 8},
    ],
}


def record_stream(workers: int) -> str:
    config = parse_config(DETERMINISM_CONFIG)
    settings = RunSettings(seed=config.seed, cap=1 << 20, workers=workers)
    return "\n".join(dumps_record(record) for record in run_experiments(config, settings))


def check_determinism():
    print("🧪 Record streams do not depend on the worker count")
    single = record_stream(1)
    results = [mark(record_stream(workers) == single, f"--workers {workers} matches --workers 1") for workers in (2, 4)]
    results.append(mark('"free_energy": 18.0' in single, "wide enumeration ran in several chunks and gave 18 bits"))
    return results


CHECKS = [
    ("reversibility", check_reversibility),
    ("measure_preservation", check_measure_preservation),
    ("translated_copy", check_translated_copy),
    ("shift_transposition", check_shift_transposition),
    ("entropy_influx", check_entropy_influx),
    ("cycle_cost", check_cycle_cost),
    ("weak_mixing", check_weak_mixing),
    ("complexity_prior_bound", check_complexity_against_prior),
    ("kraft", check_kraft),
    ("prior_properties", check_prior_properties),
    ("determinism", check_determinism),
]


def test_reversibility():
    assert_all_pass(check_reversibility())


def test_measure_preservation():
    assert_all_pass(check_measure_preservation())


def test_translated_copy():
    assert_all_pass(check_translated_copy())


def test_shift_transposition():
    assert_all_pass(check_shift_transposition())


def test_entropy_influx():
    assert_all_pass(check_entropy_influx())


def test_cycle_cost():
    assert_all_pass(check_cycle_cost())


def test_weak_mixing():
    assert_all_pass(check_weak_mixing())


def test_complexity_prior_bound():
    assert_all_pass(check_complexity_against_prior())


def test_kraft():
    assert_all_pass(check_kraft())


def test_prior_properties():
    assert_all_pass(check_prior_properties())


def test_determinism():
    assert_all_pass(check_determinism())


def generate_report() -> bool:
    print("🚀 RCABENCH ACCEPTANCE REPORT")
    print("=" * 80)
    print(f"Run at: {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    print("=" * 80)

    outcome = {}
    for name, check in CHECKS:
        print(f"\n{name.upper()}")
        print("-" * len(name))
        try:
            results = check()
        except Exception as e:
            results = [f"❌ raised {type(e).__name__}: {e}"]
        outcome[name] = results
        for result in results:
            print(f"  {result}")

    print(f"\n{'SUMMARY'.center(80, '=')}")
    total = passed = 0
    for name, results in outcome.items():
        good = sum(1 for r in results if r.startswith("✅"))
        total += len(results)
        passed += good
        print(f"{name}: {good}/{len(results)}")
    print(f"\nOVERALL: {passed}/{total}")
    return passed == total


if __name__ == "__main__":
    sys.exit(0 if generate_report() else 1)
