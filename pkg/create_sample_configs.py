#!/usr/bin/env python3
"""
Write the sample experiment configs into configs/.
Each config is validated against the stanza schemas before it is written.
"""

import json
import os
import sys

from errors import ConfigError
from services import parse_config

CONFIG_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "configs")

SAMPLE_CONFIGS = {
    "shift_basics": {
        "rule": "shift",
        "geometry": {"sides": [16], "alphabet": 2},
        "seed": 1,
        "experiments": [
            {"id": "walk", "kind": "simulate", "state": "1100000000000000", "steps": 5},
            {"id": "group", "kind": "reversibility", "mode": "exhaustive", "covariance": [1]},
            {"id": "prep-cost", "kind": "free-energy", "events": [{"time": 0, "config": "0|1"}, {"time": 3, "config": "3|1"}]},
            {"id": "copy", "kind": "search-prep", "region": "4;5", "target": "10", "window": "0;1;2;3", "max_time": 4},
            {
                "id": "swap",
                "kind": "search-map",
                "region": "8;9",
                "map": {"builder": "swap", "swap": ["8", "9"]},
                "window": "5;6;7;10;11;12",
                "max_time": 5,
            },
            {"id": "hold", "kind": "persistence", "region": "8", "program": "7|1", "target": "1", "initial": "1", "horizon": 4},
        ],
    },
    "billiard_balls": {
        "rule": "bbm",
        "geometry": {"sides": [10, 10], "alphabet": 2},
        "seed": 2,
        "experiments": [
            {"id": "collide", "kind": "simulate", "initial": "0,0;0,3|11", "steps": 4},
            {"id": "group", "kind": "reversibility", "mode": "sampled", "samples": 2000, "covariance": [2, 0]},
            {
                "id": "flip",
                "kind": "search-map",
                "region": "0,0",
                "map": {"builder": "complement"},
                "window": "9,9;9,0;9,1;0,9;0,1;1,9;1,0;1,1",
                "max_time": 4,
            },
            {"id": "carry", "kind": "influx", "region": "0,0", "displacement": [1, 1], "max_time": 2},
        ],
    },
    "thermodynamics": {
        "rule": "shift-left",
        "geometry": {"sides": [16], "alphabet": 2},
        "seed": 3,
        "experiments": [
            {"id": "prior", "kind": "prior", "split": {"boundary": 1}, "target": "0|1", "time": 1, "distribution": True, "average_to": 2},
            {"id": "prior-mc", "kind": "prior", "split": {"boundary": 1}, "target": "0|1", "time": 1, "mode": "mc", "samples": 20000},
            {"id": "complexity", "kind": "complexity", "split": {"boundary": 1}, "target": "0|1", "max_time": 3},
            {"id": "keep", "kind": "complexity", "split": {"boundary": 1}, "region": "3", "map": {"builder": "identity"}, "max_time": 2},
            {"id": "kraft", "kind": "kraft", "split": {"boundary": 1}, "region": "0", "max_time": 3},
            {"id": "cycle", "kind": "cycle-cost", "rule": "shift", "config": "0|1", "tau": 1, "repeats": 3, "tau_window": [1, 2]},
            {"id": "blink", "kind": "cycle-cost", "rule": "shift", "sequence": ["0|1", "0|0"], "repeats": 2},
            {"id": "frozen", "kind": "mixing", "rule": "identity", "first": "0|1", "second": "0|1", "horizon": 6},
            {"id": "influx", "kind": "influx", "rule": "shift", "region": "0;1", "displacement": [3], "max_time": 4},
        ],
    },
}


def write_sample_configs(directory: str = CONFIG_DIR) -> list[str]:
    os.makedirs(directory, exist_ok=True)
    written = []
    for name, data in SAMPLE_CONFIGS.items():
        parse_config(data)
        path = os.path.join(directory, f"{name}.json")
        with open(path, "w") as f:
            json.dump(data, f, indent=2)
            f.write("\n")
        written.append(path)
    return written


def main() -> int:
    try:
        for path in write_sample_configs():
            print(f"✅ Wrote {path}")
    except (ConfigError, OSError) as e:
        print(f"❌ Error writing sample configs: {e}")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
