import math

import pytest

from kerrmetro.model import PhysicalParams

# Reference device: 2 um x 40 nm bar, 1e-17 kg, 15 MHz, Q = 2e4.
REFERENCE_DEVICE = dict(
    length=2e-6,
    width=40e-9,
    mass=1e-17,
    omega=9.4e7,
    gap=120e-9,
    capacitance=10e-18,
    bias_voltage=1.0,
    q_factor=20000.0,
    chi=4e13,
)


@pytest.fixture
def device():
    return PhysicalParams(**REFERENCE_DEVICE)


def rel_err(a, b, floor=0.0):
    return abs(a - b) / max(abs(b), floor) if max(abs(b), floor) > 0 else abs(a - b)


def assert_rel(a, b, tol, floor=0.0):
    err = rel_err(a, b, floor)
    assert err <= tol, f"{a!r} vs {b!r}: relative error {err:.3e} > {tol:.1e}"


def isclose(a, b, rel):
    return math.isclose(a, b, rel_tol=rel, abs_tol=0.0)


# one "PASS/FAIL criterion N: ..." line per acceptance criterion, printed in
# the terminal summary so it survives output capturing
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number} ({title}): {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
