import pytest

from rngaudit.plan import AuditConfig, ExperimentPlan
from rngaudit.prompts import default_catalog
from rngaudit.providers import MockScript, ProviderConfig

SCRIPT = {
    "seed": 11,
    "entries": [
        {"upper": 5, "weights": {"3": 0.5, "4": 0.2, "2": 0.1, "1": 0.05, "5": 0.05,
                                 "<think>Okay, I'll just go with 3.</think>\n3": 0.05,
                                 "9": 0.02, "banana": 0.03}},
        {"upper": 10, "weights": {"7": 0.8, "5": 0.2}},
    ],
}


def mock_config(providers=("alpha", "beta"), languages=("EN", "ES"), ranges=(5,),
                temperatures=(0.5, 1.0), calls=50, seed=123, run_id="t", script=None):
    script = MockScript.from_dict(script or SCRIPT)
    cfgs = {p: ProviderConfig(p, "mock", f"{p}-model", mock_script=script, max_in_flight=2)
            for p in providers}
    plan = ExperimentPlan(list(providers), list(languages), list(ranges), list(temperatures),
                          calls_per_cell=calls, run_id=run_id, seed=seed)
    return AuditConfig(plan, cfgs, default_catalog())


@pytest.fixture
def config():
    return mock_config()


def fixed_clock():
    return "2000-01-01T00:00:00.000+00:00"


# acceptance criteria report: (number, verdict, detail)
ACCEPTANCE: list[tuple[int, str, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, verdict, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {n}: {verdict} | {detail}")
