import json

import numpy as np

from dslab.utils.logger import bind_run, clear_run, get_logger, setup_logging, timed


def _last_event(capsys):
    lines = [line for line in capsys.readouterr().err.splitlines() if line.strip()]
    return json.loads(lines[-1])


def test_json_events_carry_component_and_plain_values(capsys):
    setup_logging("INFO", json_output=True)
    get_logger("operators").info("omega0_computed", omega0=np.float64(0.75), N=np.int64(256), u=np.arange(3.0))
    event = _last_event(capsys)
    assert event["event"] == "omega0_computed"
    assert event["component"] == "operators"
    assert event["N"] == 256
    assert event["u"] == [0.0, 1.0, 2.0]


def test_large_arrays_are_summarized(capsys):
    setup_logging("INFO", json_output=True)
    get_logger("grid").info("nodes", x=np.linspace(-1.0, 1.0, 100))
    assert _last_event(capsys)["x"].startswith("<array shape=(100,)")


def test_run_context_and_timing(capsys):
    setup_logging("INFO", json_output=True)
    bind_run("growth", label="nightly", seed=3)
    with timed(get_logger("main"), "command"):
        pass
    event = _last_event(capsys)
    clear_run()
    assert event["event"] == "command_finished"
    assert event["command"] == "growth"
    assert event["label"] == "nightly"
    assert event["elapsed_s"] >= 0


def test_debug_is_filtered_at_info(capsys):
    setup_logging("INFO", json_output=True)
    get_logger("grid").debug("hidden")
    assert capsys.readouterr().err == ""
