import numpy as np
import pytest

from casediff.synth import SynthConfig, synth_generate


@pytest.fixture(scope="session")
def benchmark():
    """Default synthetic benchmark: 3 classes x 200 points, D=16, seed 0."""
    return synth_generate(SynthConfig())


@pytest.fixture
def write_csv(tmp_path):
    def write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    rows = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" or "test_acceptance" not in rep.nodeid:
                continue
            props = dict(rep.user_properties)
            rows.append((props.get("criterion", rep.nodeid), outcome, props.get("detail", "")))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, outcome, detail in sorted(rows, key=lambda r: int(r[0].split()[0][2:])):
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark}  {criterion}  {detail}")
