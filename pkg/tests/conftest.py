import numpy as np
import pytest

from wiretap_diamond.schemes import Scheme, SchemeConfig


def all_configs(M_values=(2, 3, 4), schemes=tuple(Scheme)):
    """Every valid (M, N, scheme) combination."""
    out = []
    for M in M_values:
        for scheme in schemes:
            for N in range(1, M + 1):
                if scheme.is_coj and N < 2:
                    continue
                out.append(SchemeConfig(M, N, scheme))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance outcomes, printed as one line each at the end of the run
ACCEPTANCE: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] #{number:<2} {title}: {detail}"
    ACCEPTANCE.append((number, line))
    print(line)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
