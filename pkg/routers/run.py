# `rcabench run <config>`: execute every stanza and stream one record per line

import argparse
import logging
import sys

from config import EXIT_OK
from errors import ConfigError
from record_manager import CollectorSink, JsonlSink, RecordManager, render_summary
from services import check_holds, load_config, resolve_settings, run_experiments

logger = logging.getLogger(__name__)

# This will be injected from the app
manager: RecordManager


def set_record_manager(record_manager: RecordManager):
    """Set the record manager for this command"""
    global manager
    manager = record_manager


def run_command(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    settings = resolve_settings(config, args.seed, args.cap, args.workers)
    out_path = args.out or config.out
    try:
        stream = open(out_path, "w") if out_path else sys.stdout
    except OSError as e:
        raise ConfigError(f"cannot open output {out_path}: {e}")

    logger.info(
        "running %d experiment(s) from %s (seed %d, cap %d, workers %d)",
        len(config.experiments), args.config, settings.seed, settings.cap, settings.workers,
    )
    collector = manager.connect(CollectorSink())
    jsonl = manager.connect(JsonlSink(stream, out_path or "<stdout>"))
    completed = False
    try:
        for record in run_experiments(config, settings):
            manager.publish(record)
            check_holds(record)
        completed = True
    finally:
        manager.disconnect(jsonl)
        manager.disconnect(collector)
        if out_path:
            # a close error must not mask the error already in flight
            jsonl.close(strict=completed)
        if collector.records and not args.quiet:
            # table goes to stderr so stdout stays a clean record stream
            print(render_summary(collector.records), file=sys.stderr)
    return EXIT_OK


def register(subparsers, parent: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("run", parents=[parent], help="run the experiments of a JSON config")
    parser.add_argument("config", help="path to an experiment config (JSON)")
    parser.add_argument("-q", "--quiet", action="store_true", help="skip the summary table")
    parser.set_defaults(handler=run_command)
