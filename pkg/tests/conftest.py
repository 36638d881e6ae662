from __future__ import annotations

import os

import pytest

import qftir

DATA_DIR = os.path.join(os.path.dirname(qftir.__file__), "data")

# one-line PASS/FAIL summary per acceptance criterion, printed after the run
_CRITERIA_LABELS = {
    1: "monochromatic line: sinc width/peak and runtime",
    2: "detection-limit arithmetic vs reported values",
    3: "gas-cell calibration round trip, noiseless and at SNR~24",
    4: "mixture inversion round trip on reported concentrations",
    5: "broadband drift immunity of the differential retrieval",
    6: "Monte-Carlo present/absent classification rate",
    7: "noise averaging follows 1/sqrt(N)",
    8: "line-shape convolution vs independent direct oracle",
    9: "cross-section parser is total on arbitrary bytes",
    10: "500-scan simulate -> analyze end-to-end",
}
_acceptance_reports: dict[int, str] = {}


def data_file(name: str) -> str:
    return os.path.join(DATA_DIR, name)


@pytest.fixture(scope="session")
def species_db():
    from qftir import load_cross_section

    return {
        name: load_cross_section(data_file(f"{name}.xsc"))
        for name in ("acetone", "methanol", "ethanol")
    }


@pytest.fixture(scope="session")
def methane():
    from qftir import load_cross_section

    return load_cross_section(data_file("methane.xsc"))


@pytest.fixture(scope="session")
def instrument():
    from qftir import InstrumentModel

    return InstrumentModel(
        scan_length=0.9,
        scan_speed=0.9,
        sampling_rate=15000.0,
        pump_wavelength=6000.0,
        visibility=0.5,
        noise_std=0.0,
        bandpass=(300.0, 6000.0),
    )


@pytest.fixture(scope="session")
def band():
    from qftir import DifferentialBand

    return DifferentialBand(2810.0, 3050.0, 9)


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    # nodeid like ...::test_criterion_04_mixture_inversion
    tail = report.nodeid.split("test_criterion_")[1]
    number = int(tail.split("_")[0])
    _acceptance_reports[number] = report.outcome.upper()


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_reports:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA_LABELS):
        outcome = _acceptance_reports.get(number, "NOT RUN")
        status = {"PASSED": "PASS", "FAILED": "FAIL"}.get(outcome, outcome)
        terminalreporter.write_line(
            f"criterion {number:>2}: {status:<7} {_CRITERIA_LABELS[number]}"
        )
