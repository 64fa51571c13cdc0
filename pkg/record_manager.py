# Record fan-out: every finished experiment goes to each active sink

import logging
import os
from typing import List, Optional, TextIO

from jinja2 import Environment, FileSystemLoader

from errors import OutputError
from services import dumps_record

logger = logging.getLogger(__name__)

TEMPLATE_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "templates")


class RecordSink:
    """Somewhere records are written to"""

    def write(self, record: dict) -> None:
        raise NotImplementedError


class JsonlSink(RecordSink):
    """One sorted-key JSON line per record; a failed write raises OutputError"""

    def __init__(self, stream: TextIO, name: str = "<stdout>"):
        self.stream = stream
        self.name = name

    def write(self, record: dict) -> None:
        try:
            self.stream.write(dumps_record(record) + "\n")
            self.stream.flush()
        except OSError as e:
            raise OutputError(f"cannot write record to {self.name}: {e}", stanza=record.get("experiment"))

    def close(self, strict: bool = True) -> None:
        """Close the stream; with strict=False a failing close is only logged"""
        try:
            self.stream.close()
        except OSError as e:
            if strict:
                raise OutputError(f"cannot close {self.name}: {e}")
            logger.warning("closing %s failed: %s", self.name, e)


class CollectorSink(RecordSink):
    def __init__(self, records: Optional[list] = None):
        self.records = records if records is not None else []

    def write(self, record: dict) -> None:
        self.records.append(record)


class RecordManager:
    def __init__(self):
        self.active_sinks: List[RecordSink] = []

    def connect(self, sink: RecordSink) -> RecordSink:
        self.active_sinks.append(sink)
        return sink

    def disconnect(self, sink: RecordSink) -> None:
        self.active_sinks = [s for s in self.active_sinks if s is not sink]

    def publish(self, record: dict) -> None:
        """Write to every sink; an optional sink that fails is dropped, an OutputError propagates"""
        failed = []
        for sink in self.active_sinks.copy():
            try:
                sink.write(record)
            except OSError as e:
                logger.error("dropping record sink %s: %s", type(sink).__name__, e)
                failed.append(sink)
        for sink in failed:
            self.disconnect(sink)


# Summary table

def summary_row(record: dict) -> str:
    """One-line headline of a record's result"""
    kind, result = record["kind"], record["result"]
    if kind == "simulate":
        return f"digest {result['digest'][:16]}"
    if kind == "reversibility":
        rev = result["reversibility"]
        return f"reversible={rev['passed']} ({rev['states_checked']} states)"
    if kind == "free-energy":
        return f"F = {result['free_energy']}"
    if kind in ("search-prep", "search-map"):
        if not result["found"]:
            return f"not found up to t={result['max_time']}"
        return f"t={result['time']} program={result['program_size']} cells"
    if kind == "prior":
        value = result.get("probability", result.get("estimate", {}).get("value"))
        return f"P = {value}"
    if kind == "complexity":
        return f"K = {result.get('complexity', 'not found')}"
    if kind == "kraft":
        return f"sum 2^-K = {result['total']} ({result['found']} found)"
    if kind == "cycle-cost":
        return f"F = {result['free_energy']}"
    if kind == "influx":
        if "measured" not in result:
            return "no transfer found"
        return f"H = {result['measured']:.4f} >= {result['bound']:.4f}"
    if kind == "mixing":
        return f"gap {result['gap']:.4g} over {result['horizon']}"
    if kind == "persistence":
        return f"held={result['held']} deviation={result['deviation_time']}"
    return ""


def render_summary(records: List[dict]) -> str:
    env = Environment(loader=FileSystemLoader(TEMPLATE_DIR), trim_blocks=True, lstrip_blocks=True)
    template = env.get_template("summary.txt")
    rows = [
        {
            "experiment": record["experiment"],
            "kind": record["kind"],
            "holds": record.get("holds"),
            "headline": summary_row(record),
        }
        for record in records
    ]
    return template.render(rows=rows)
