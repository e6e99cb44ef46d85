import sys
from pathlib import Path

import pytest

SRC = Path(__file__).resolve().parents[1] / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def million_step_trace():
    """One long mixing run on the loop fixture, shared by the stationarity
    and oracle-agreement tests (it is the expensive part of the suite)."""
    from rollmix import Schema
    from rollmix.fixtures import population_b
    from rollmix.recombine import TransformDistribution, run_chain

    p = population_b()
    schemata = [Schema("alpha", (1, 2), "f1"), Schema("beta", (2, 1), "f2")]
    mu = TransformDistribution.from_population(p)
    return run_chain(p, 1_000_000, mu, schemata, seed=505, visit_stride=101)
