import numpy as np
import pytest

from nsmd.datagen import SynthSpec, gen_synthetic


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_synth():
    return gen_synthetic(SynthSpec(m=40, rbar=3, p=0.05, seed=7))


def random_sym(rng, m, lo=-2.0, hi=2.0):
    A = rng.uniform(lo, hi, (m, m))
    return np.triu(A) + np.triu(A, 1).T


# filled by test_acceptance.py: (criterion number, passed, detail)
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, passed, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {num:>2}: {detail}")
