import numpy as np
import pytest

from heip import fv

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one acceptance line; printed together at the end of the session."""

    def emit(criterion: str, ok: bool, detail: str = ""):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_keys():
    """n=256 toy ring with room for a couple of multiplications."""
    params = fv.EncryptionParams.preset(256, 257, q_bits=120)
    sk, pk = fv.keygen(params, np.random.default_rng(11))
    return params, sk, pk


@pytest.fixture(scope="session")
def keys_2048_1009():
    params = fv.EncryptionParams.preset(2048, 1009)
    sk, pk = fv.keygen(params, np.random.default_rng(12))
    return params, sk, pk
