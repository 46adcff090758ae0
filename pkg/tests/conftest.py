import numpy as np
import pytest

from mixtherm.core_types import SpeciesSpec, Statistics

FERMI, BOSE = Statistics.FERMI, Statistics.BOSE


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_species(rng, n, density_scale=1.0, statistics=None):
    out = []
    for i in range(n):
        stats = statistics or (FERMI if rng.random() < 0.5 else BOSE)
        out.append(SpeciesSpec(f"s{i}", float(rng.uniform(0.3, 3.0)), int(rng.integers(1, 4)),
                               stats, float(density_scale * rng.uniform(0.2, 1.0))))
    return out


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
