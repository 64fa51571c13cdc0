# `rcabench rules list | check <rule-file>`

import argparse
import logging
import sys

from config import BUNDLED_RULES, DEFAULT_SEED, EXIT_OK, get_enumeration_cap
from engine import Rule, load_rule, rule_label, verify_reversibility, verify_translation_covariance
from errors import ConfigError, InvariantViolation
from lattice import Geometry
from record_manager import JsonlSink, RecordManager

logger = logging.getLogger(__name__)

# This will be injected from the app
manager: RecordManager

# Tori used to check a rule file: small enough to enumerate for binary alphabets
CHECK_SIDES = {1: (8,), 2: (4, 4)}


def set_record_manager(record_manager: RecordManager):
    """Set the record manager for this command"""
    global manager
    manager = record_manager


def check_torus(rule: Rule) -> Geometry:
    sides = CHECK_SIDES.get(rule.dimension, (4,) * rule.dimension)
    return Geometry(sides=sides, alphabet=rule.alphabet or 2)


def list_command(args: argparse.Namespace) -> int:
    for description in BUNDLED_RULES:
        rule = load_rule(description)
        print(f"{rule.name:<20} {rule.family:<14} {rule.dimension}D  alphabet {rule.alphabet or 'any'}")
    return EXIT_OK


def check_command(args: argparse.Namespace) -> int:
    rule = load_rule(args.rule_file)
    geometry = check_torus(rule)
    cap = get_enumeration_cap(args.cap)
    seed = DEFAULT_SEED if args.seed is None else args.seed
    mode = "exhaustive" if geometry.alphabet ** geometry.cell_count <= cap else "sampled"
    logger.info("checking %s on %s (%s)", rule_label(rule), geometry.sides, mode)

    reversibility = verify_reversibility(rule, geometry, mode, args.samples, seed, cap)
    vector = (rule.covariance_step,) + (0,) * (rule.dimension - 1)
    covariance = verify_translation_covariance(rule, geometry, vector, "sampled", args.samples, seed, cap)
    record = {
        "rule": rule_label(rule),
        "geometry": {"sides": list(geometry.sides), "alphabet": geometry.alphabet},
        "reversibility": reversibility.model_dump(mode="json"),
        "covariance": covariance.model_dump(mode="json"),
    }

    try:
        stream = open(args.out, "w") if args.out else sys.stdout
    except OSError as e:
        raise ConfigError(f"cannot open output {args.out}: {e}")
    sink = manager.connect(JsonlSink(stream, args.out or "<stdout>"))
    completed = False
    try:
        manager.publish(record)
        completed = True
    finally:
        manager.disconnect(sink)
        if args.out:
            sink.close(strict=completed)

    if not reversibility.passed:
        raise InvariantViolation(f"{rule_label(rule)} is not reversible: {reversibility.counterexample}")
    if not covariance.passed:
        raise InvariantViolation(f"{rule_label(rule)} is not translation covariant: {covariance.counterexample}")
    return EXIT_OK


def register(subparsers, parent: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("rules", help="list bundled rules or check a rule file")
    commands = parser.add_subparsers(dest="rules_command", required=True)

    listing = commands.add_parser("list", parents=[parent], help="list the bundled rules")
    listing.set_defaults(handler=list_command)

    check = commands.add_parser("check", parents=[parent], help="check a rule file for reversibility and covariance")
    check.add_argument("rule_file", help="JSON rule description")
    check.add_argument("--samples", type=int, default=1_000, help="states per phase when sampling")
    check.set_defaults(handler=check_command)
