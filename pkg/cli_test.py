# End-to-end tests for the rcabench command line

import json
import os

import pytest

from app import main
from config import EXIT_OUTPUT_ERROR
from engine import table_rule_from_function
from lattice import FullState, Geometry
from services import IMPOSSIBLE_TEXT, encode_value, parse_config
from errors import ConfigError, OutputError
from record_manager import CollectorSink, JsonlSink, RecordManager

SHIFT_RING_8 = {"rule": "shift", "geometry": {"sides": [8], "alphabet": 2}}
SHIFT_LEFT_RING_16 = {"rule": "shift-left", "geometry": {"sides": [16], "alphabet": 2}}


def write_config(tmp_path, experiments, base=SHIFT_RING_8, **extra):
    path = tmp_path / "experiment.json"
    path.write_text(json.dumps({**base, **extra, "experiments": experiments}))
    return str(path)


def read_records(path):
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def run(tmp_path, experiments, *flags, base=SHIFT_RING_8, out="records.jsonl"):
    config = write_config(tmp_path, experiments, base)
    out_path = str(tmp_path / out)
    code = main(["run", config, "--out", out_path, "-q", *flags])
    return code, out_path


def test_simulate_record(tmp_path):
    code, out = run(tmp_path, [{"id": "walk", "kind": "simulate", "state": "10000000", "steps": 3}])
    assert code == 0
    (record,) = read_records(out)
    assert record["experiment"] == "walk"
    assert record["result"]["state"] == "00010000"
    expected = FullState.from_text(Geometry(sides=(8,), alphabet=2), "00010000")
    assert record["result"]["digest"] == expected.digest()
    assert record["rule"]["family"] == "shift"
    assert "holds" not in record


def test_simulate_backward_undoes_forward(tmp_path):
    code, out = run(tmp_path, [
        {"id": "back", "kind": "simulate", "state": "00010000", "steps": 3, "direction": "backward"},
    ])
    assert code == 0
    assert read_records(out)[0]["result"]["state"] == "10000000"


def test_cap_exceeded_exit_code(tmp_path, capsys):
    experiments = [{"id": "big", "kind": "free-energy", "events": [{"time": 0, "config": "0;1;2;3|0000"}]}]
    code, _ = run(tmp_path, experiments, "--cap", "4")
    assert code == 3
    assert "[big]" in capsys.readouterr().err


def test_unknown_field_is_config_error(tmp_path, capsys):
    code, _ = run(tmp_path, [{"id": "walk", "kind": "simulate", "state": "10000000", "speed": 2}])
    assert code == 2
    assert "speed" in capsys.readouterr().err


def test_bad_json_is_config_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    assert main(["run", str(path)]) == 2


def test_error_names_the_stanza(tmp_path, capsys):
    experiments = [
        {"id": "fine", "kind": "simulate", "state": "10000000"},
        {"id": "short-state", "kind": "simulate", "state": "10"},
    ]
    code, out = run(tmp_path, experiments)
    assert code == 2
    assert "[short-state]" in capsys.readouterr().err
    assert [r["experiment"] for r in read_records(out)] == ["fine"]


def test_duplicate_ids_rejected():
    with pytest.raises(ConfigError):
        parse_config({**SHIFT_RING_8, "experiments": [
            {"id": "a", "kind": "simulate"},
            {"id": "a", "kind": "simulate"},
        ]})


def test_records_are_identical_across_workers(tmp_path):
    experiments = [
        {"id": "prior", "kind": "prior", "split": {"boundary": 1}, "target": "0|1", "time": 2, "mode": "mc", "samples": 5000},
        {"id": "random", "kind": "simulate", "steps": 5},
        {"id": "energy", "kind": "free-energy", "events": [{"time": 0, "config": "0;1|01"}, {"time": 2, "config": "2;3|01"}]},
        {"id": "kraft", "kind": "kraft", "split": {"boundary": 1}, "region": "0", "max_time": 3},
    ]
    outputs = []
    for workers in ("1", "3"):
        code, out = run(tmp_path, experiments, "--workers", workers, "--seed", "11",
                        base=SHIFT_LEFT_RING_16, out=f"records-{workers}.jsonl")
        assert code == 0
        with open(out, "rb") as f:
            outputs.append(f.read())
    assert outputs[0] == outputs[1]


def test_seed_flag_overrides_config(tmp_path):
    code, out = run(tmp_path, [{"id": "random", "kind": "simulate"}], "--seed", "5")
    assert code == 0
    assert read_records(out)[0]["seed"] == 5


def test_kraft_record_holds(tmp_path):
    code, out = run(tmp_path, [
        {"id": "kraft", "kind": "kraft", "split": {"boundary": 1}, "region": "0", "max_time": 3},
    ], base=SHIFT_LEFT_RING_16)
    assert code == 0
    (record,) = read_records(out)
    assert record["holds"] is True
    assert record["result"]["total"] == 0.5625


def test_impossible_free_energy_is_written_as_text(tmp_path):
    code, out = run(tmp_path, [
        {"id": "never", "kind": "free-energy", "events": [{"time": 0, "config": "0|1"}, {"time": 0, "config": "0|0"}]},
    ])
    assert code == 0
    assert read_records(out)[0]["result"]["free_energy"] == IMPOSSIBLE_TEXT


def test_encode_value():
    assert encode_value({"a": (1, float("inf")), 2: [0.5]}) == {"a": [1, IMPOSSIBLE_TEXT], "2": [0.5]}


def certificate_experiments():
    return [
        {"id": "prep", "kind": "search-prep", "region": "4", "target": "1", "window": "0;1;2;3", "max_time": 3},
        {"id": "hot-one", "kind": "complexity", "split": {"boundary": 1}, "target": "0|1", "max_time": 3},
    ]


def test_verify_passes_on_fresh_records(tmp_path):
    code, out = run(tmp_path, certificate_experiments()[:1])
    assert code == 0
    (record,) = read_records(out)
    assert record["result"]["program"] == "3|1"
    assert record["result"]["time"] == 1

    verified = str(tmp_path / "verified.jsonl")
    assert main(["verify", out, "--out", verified]) == 0
    (check,) = read_records(verified)
    assert check["passed"] is True
    assert check["digest"] == record["result"]["verification_digest"]


def test_verify_complexity_certificate(tmp_path):
    code, out = run(tmp_path, certificate_experiments()[1:], base=SHIFT_LEFT_RING_16)
    assert code == 0
    (record,) = read_records(out)
    assert record["holds"] is True
    assert record["result"]["complexity"] == 4.0
    verified = str(tmp_path / "verified.jsonl")
    assert main(["verify", out, "--out", verified]) == 0
    assert read_records(verified)[0]["passed"] is True


def test_verify_catches_tampered_certificate(tmp_path):
    _, out = run(tmp_path, certificate_experiments()[:1])
    (record,) = read_records(out)
    record["result"]["program"] = "3|0"
    tampered = tmp_path / "tampered.jsonl"
    tampered.write_text(json.dumps(record) + "\n")
    assert main(["verify", str(tampered), "--out", str(tmp_path / "checks.jsonl")]) == 4


def test_verify_uses_cap_flag_then_record_cap(tmp_path, monkeypatch):
    monkeypatch.delenv("RCABENCH_CAP", raising=False)
    _, out = run(tmp_path, certificate_experiments()[:1])
    checks = str(tmp_path / "checks.jsonl")
    monkeypatch.setenv("RCABENCH_CAP", "1")
    # re-checking the certificate enumerates both contents of the one-cell region
    assert main(["verify", out, "--out", checks, "--cap", "1"]) == 3
    assert main(["verify", out, "--out", checks, "--cap", "64"]) == 0
    assert main(["verify", out, "--out", checks]) == 0
    assert read_records(checks)[0]["passed"] is True


def test_verify_without_certificates(tmp_path):
    _, out = run(tmp_path, [{"id": "walk", "kind": "simulate", "state": "10000000"}])
    assert main(["verify", out, "--out", str(tmp_path / "checks.jsonl")]) == 0


class FailingStream:
    def write(self, text):
        raise OSError(28, "No space left on device")

    def flush(self):
        pass

    def close(self):
        raise OSError(28, "No space left on device")


def test_record_write_failure_raises_output_error():
    manager = RecordManager()
    collector = manager.connect(CollectorSink())
    sink = manager.connect(JsonlSink(FailingStream(), "full.jsonl"))
    with pytest.raises(OutputError) as error:
        manager.publish({"experiment": "walk", "kind": "simulate"})
    assert error.value.exit_code == EXIT_OUTPUT_ERROR
    assert "[walk]" in str(error.value)
    assert collector.records == [{"experiment": "walk", "kind": "simulate"}]
    sink.close(strict=False)
    with pytest.raises(OutputError):
        sink.close()


@pytest.mark.skipif(not os.path.exists("/dev/full"), reason="needs /dev/full")
def test_run_reports_unwritable_output(tmp_path, capsys):
    config = write_config(tmp_path, [{"id": "walk", "kind": "simulate", "state": "10000000"}])
    assert main(["run", config, "--out", "/dev/full", "-q"]) == EXIT_OUTPUT_ERROR
    assert "[walk] cannot write record" in capsys.readouterr().err


def test_rules_list(capsys):
    assert main(["rules", "list"]) == 0
    listing = capsys.readouterr().out
    for name in ("shift", "bbm", "second-order-150"):
        assert name in listing


def test_rules_check_billiard_ball(tmp_path):
    from config import BUNDLED_RULES

    rule_file = tmp_path / "bbm.json"
    rule_file.write_text(json.dumps(next(r for r in BUNDLED_RULES if r["name"] == "bbm")))
    out = str(tmp_path / "check.jsonl")
    assert main(["rules", "check", str(rule_file), "--out", out]) == 0
    (report,) = read_records(out)
    assert report["reversibility"]["passed"] is True
    assert report["reversibility"]["mode"] == "exhaustive"
    assert report["covariance"]["passed"] is True


def test_rules_check_rejects_irreversible_rule(tmp_path):
    majority = table_rule_from_function(lambda n: int(sum(n) >= 2), name="majority")
    rule_file = tmp_path / "majority.json"
    rule_file.write_text(json.dumps(majority.model_dump(mode="json")))
    assert main(["rules", "check", str(rule_file), "--out", str(tmp_path / "check.jsonl")]) == 4


def test_rules_check_missing_file(tmp_path):
    assert main(["rules", "check", str(tmp_path / "nothing.json")]) == 2


def test_sample_configs_are_current():
    from create_sample_configs import CONFIG_DIR, SAMPLE_CONFIGS

    for name, data in SAMPLE_CONFIGS.items():
        with open(f"{CONFIG_DIR}/{name}.json") as f:
            assert json.load(f) == data
        parse_config(data)


def test_write_sample_configs(tmp_path):
    from create_sample_configs import SAMPLE_CONFIGS, write_sample_configs

    written = write_sample_configs(str(tmp_path))
    assert len(written) == len(SAMPLE_CONFIGS)


@pytest.mark.parametrize("name", ["shift_basics", "billiard_balls", "thermodynamics"])
def test_sample_configs_run_and_verify(tmp_path, name):
    from create_sample_configs import CONFIG_DIR

    out = str(tmp_path / f"{name}.jsonl")
    assert main(["run", f"{CONFIG_DIR}/{name}.json", "--out", out, "-q"]) == 0
    with open(f"{CONFIG_DIR}/{name}.json") as f:
        expected = len(json.load(f)["experiments"])
    assert len(read_records(out)) == expected
    assert main(["verify", out, "--out", str(tmp_path / "checks.jsonl")]) == 0


def test_summary_table(tmp_path, capsys):
    config = write_config(tmp_path, [{"id": "walk", "kind": "simulate", "state": "10000000"}])
    assert main(["run", config, "--out", str(tmp_path / "records.jsonl")]) == 0
    table = capsys.readouterr().err
    assert "walk" in table
    assert "1 experiment(s)" in table
