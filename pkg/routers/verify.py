# `rcabench verify <records>`: re-simulate every certificate in a record file

import argparse
import json
import logging
import sys

from config import EXIT_OK
from errors import ConfigError, InvariantViolation
from record_manager import JsonlSink, RecordManager
from services import verify_record

logger = logging.getLogger(__name__)

# This will be injected from the app
manager: RecordManager


def set_record_manager(record_manager: RecordManager):
    """Set the record manager for this command"""
    global manager
    manager = record_manager


def read_records(path: str) -> list[dict]:
    try:
        with open(path) as f:
            lines = [line for line in f if line.strip()]
    except OSError as e:
        raise ConfigError(f"cannot read records {path}: {e}")
    records = []
    for number, line in enumerate(lines, start=1):
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}:{number} is not a JSON record: {e}")
    return records


def verify_command(args: argparse.Namespace) -> int:
    records = read_records(args.records)
    try:
        stream = open(args.out, "w") if args.out else sys.stdout
    except OSError as e:
        raise ConfigError(f"cannot open output {args.out}: {e}")

    sink = manager.connect(JsonlSink(stream, args.out or "<stdout>"))
    failed, checked = [], 0
    completed = False
    try:
        for record in records:
            result = verify_record(record, args.cap)
            if result is None:
                continue
            checked += 1
            manager.publish(result.model_dump())
            if not result.passed:
                failed.append(result.experiment)
        completed = True
    finally:
        manager.disconnect(sink)
        if args.out:
            sink.close(strict=completed)

    if not checked:
        logger.warning("no certificates found in %s", args.records)
    if failed:
        raise InvariantViolation(f"{len(failed)} certificate(s) failed re-verification: {', '.join(failed)}")
    logger.info("%d certificate(s) re-verified", checked)
    return EXIT_OK


def register(subparsers, parent: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("verify", parents=[parent], help="re-check the certificates of a record file")
    parser.add_argument("records", help="JSONL record file written by `run`")
    parser.set_defaults(handler=verify_command)
